//! Binary and text file formats.
//!
//! PARF (RF frame), little-endian:
//!
//! ```text
//! "PARF" | u32 version=1 | u32 M | u32 Ns | f64 fs_hz | f64 c_mps
//!        | f64 pitch_m | f64 first_element_x_m | M*Ns f32, channel-major
//! ```
//!
//! PAIM (image), little-endian:
//!
//! ```text
//! "PAIM" | u32 version=1 | u32 nx | u32 nz | f64 x0_m | f64 z0_m
//!        | f64 dx_m | f64 dz_m | u8 stage | nx*nz f32, column-major
//! ```
//!
//! PGM renders are binary P5, 8-bit, with the dB range mapped linearly onto
//! `[0, 255]`. CSV files use `,` separators, `.` decimals and LF endings.

use std::fs;
use std::path::Path;

use crate::beamcore::{BeamformedImage, Stage};
use crate::error::{Error, Result};
use crate::geometry::{ArrayGeometry, ImageGrid};
use crate::phantom::RfFrame;

pub const PARF_MAGIC: &[u8; 4] = b"PARF";
pub const PAIM_MAGIC: &[u8; 4] = b"PAIM";
pub const FORMAT_VERSION: u32 = 1;
const PARF_HEADER_LEN: usize = 4 + 4 * 3 + 8 * 4;
const PAIM_HEADER_LEN: usize = 4 + 4 * 3 + 8 * 4 + 1;

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        let s = self
            .buf
            .get(self.pos..end)
            .ok_or_else(|| Error::format(format!("file truncated at byte {}", self.pos)))?;
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        let bytes = self.take(n.checked_mul(4).ok_or_else(|| Error::format("payload size overflows"))?)?;
        Ok(bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::format(format!(
                "{} trailing bytes after payload",
                self.buf.len() - self.pos
            )));
        }
        Ok(())
    }
}

fn magic(r: &mut Reader, expected: &[u8; 4]) -> Result<()> {
    let m = r.take(4)?;
    if m != expected {
        return Err(Error::format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(m),
            String::from_utf8_lossy(expected)
        )));
    }
    let v = r.u32()?;
    if v != FORMAT_VERSION {
        return Err(Error::format(format!("unsupported version {v}")));
    }
    Ok(())
}

/// Decoded PARF file. Center frequency and bandwidth are not stored; they
/// come from the run configuration when the file is turned into a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ParfFile {
    pub num_elements: u32,
    pub num_samples: u32,
    pub sampling_freq: f64,
    pub sound_speed: f64,
    pub pitch: f64,
    pub first_element_x: f64,
    pub samples: Vec<f32>,
}

impl ParfFile {
    pub fn from_frame(frame: &RfFrame) -> Self {
        let g = &frame.geom;
        ParfFile {
            num_elements: g.num_elements as u32,
            num_samples: frame.num_samples as u32,
            sampling_freq: g.sampling_freq,
            sound_speed: g.sound_speed,
            pitch: g.pitch,
            first_element_x: g.first_element_x(),
            samples: frame.samples().iter().map(|&v| v as f32).collect(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(PARF_HEADER_LEN + self.samples.len() * 4);
        out.extend_from_slice(PARF_MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&self.num_elements.to_le_bytes());
        out.extend_from_slice(&self.num_samples.to_le_bytes());
        for v in [self.sampling_freq, self.sound_speed, self.pitch, self.first_element_x] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for s in &self.samples {
            out.extend_from_slice(&s.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = Reader::new(buf);
        magic(&mut r, PARF_MAGIC)?;
        let num_elements = r.u32()?;
        let num_samples = r.u32()?;
        let sampling_freq = r.f64()?;
        let sound_speed = r.f64()?;
        let pitch = r.f64()?;
        let first_element_x = r.f64()?;
        let samples = r.f32s(num_elements as usize * num_samples as usize)?;
        r.finish()?;
        Ok(ParfFile {
            num_elements,
            num_samples,
            sampling_freq,
            sound_speed,
            pitch,
            first_element_x,
            samples,
        })
    }

    /// Frame on `geom`, after checking that every header field agrees with it.
    pub fn to_frame(&self, geom: &ArrayGeometry) -> Result<RfFrame> {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1e-12);
        let mut mismatches = Vec::new();
        if self.num_elements as usize != geom.num_elements {
            mismatches.push(format!(
                "num_elements: file {} vs config {}",
                self.num_elements, geom.num_elements
            ));
        }
        for (name, file, cfg) in [
            ("sampling_freq", self.sampling_freq, geom.sampling_freq),
            ("sound_speed", self.sound_speed, geom.sound_speed),
            ("pitch", self.pitch, geom.pitch),
            ("first_element_x", self.first_element_x, geom.first_element_x()),
        ] {
            if !close(file, cfg) {
                mismatches.push(format!("{name}: file {file} vs config {cfg}"));
            }
        }
        if !mismatches.is_empty() {
            return Err(Error::data(format!(
                "input frame does not match the configured geometry ({})",
                mismatches.join("; ")
            )));
        }
        RfFrame::from_samples(
            geom.clone(),
            self.num_samples as usize,
            self.samples.iter().map(|&v| v as f64).collect(),
        )
    }
}

pub fn write_parf(path: &Path, frame: &RfFrame) -> Result<Vec<u8>> {
    let bytes = ParfFile::from_frame(frame).to_bytes();
    fs::write(path, &bytes)?;
    Ok(bytes)
}

pub fn read_parf(path: &Path) -> Result<ParfFile> {
    ParfFile::from_bytes(&fs::read(path)?)
}

pub fn encode_paim(image: &BeamformedImage) -> Vec<u8> {
    let g = &image.grid;
    let mut out = Vec::with_capacity(PAIM_HEADER_LEN + image.values.len() * 4);
    out.extend_from_slice(PAIM_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(g.nx as u32).to_le_bytes());
    out.extend_from_slice(&(g.nz as u32).to_le_bytes());
    for v in [g.x_min, g.z_min, g.dx, g.dz] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.push(image.stage.tag());
    for &v in &image.values {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

/// Decodes a PAIM image. The axial sampling rate is not stored, so the grid
/// comes back without one.
pub fn decode_paim(buf: &[u8]) -> Result<BeamformedImage> {
    let mut r = Reader::new(buf);
    magic(&mut r, PAIM_MAGIC)?;
    let nx = r.u32()? as usize;
    let nz = r.u32()? as usize;
    let x0 = r.f64()?;
    let z0 = r.f64()?;
    let dx = r.f64()?;
    let dz = r.f64()?;
    let stage = Stage::from_tag(r.u8()?)?;
    let values: Vec<f64> = r.f32s(nx * nz)?.into_iter().map(f64::from).collect();
    r.finish()?;
    if nx == 0 || nz == 0 || !(dz > 0.0) || (nx > 1 && !(dx > 0.0)) {
        return Err(Error::format(format!(
            "invalid image header: nx={nx}, nz={nz}, dx={dx}, dz={dz}"
        )));
    }
    let grid = ImageGrid {
        x_min: x0,
        x_max: x0 + dx * (nx - 1) as f64,
        z_min: z0,
        z_max: z0 + dz * (nz - 1) as f64,
        nx,
        nz,
        dx,
        dz,
        axial_rate: None,
    };
    BeamformedImage::new(grid, values, stage)
}

pub fn write_paim(path: &Path, image: &BeamformedImage) -> Result<()> {
    fs::write(path, encode_paim(image))?;
    Ok(())
}

pub fn read_paim(path: &Path) -> Result<BeamformedImage> {
    decode_paim(&fs::read(path)?)
}

/// 8-bit P5 render of a log-compressed image; `-dynamic_range_db` maps to 0
/// and 0 dB to 255. Rows run top (shallow) to bottom.
pub fn encode_pgm(image: &BeamformedImage, dynamic_range_db: f64) -> Result<Vec<u8>> {
    if image.stage != Stage::LogCompressed {
        return Err(Error::param("PGM renders need a log-compressed image"));
    }
    let g = &image.grid;
    let mut out = format!("P5\n{} {}\n255\n", g.nx, g.nz).into_bytes();
    out.reserve(g.num_pixels());
    for iz in 0..g.nz {
        for ix in 0..g.nx {
            let db = image.at(ix, iz);
            let level = ((db + dynamic_range_db) / dynamic_range_db * 255.0).round();
            out.push(level.clamp(0.0, 255.0) as u8);
        }
    }
    Ok(out)
}

pub fn write_pgm(path: &Path, image: &BeamformedImage, dynamic_range_db: f64) -> Result<()> {
    fs::write(path, encode_pgm(image, dynamic_range_db)?)?;
    Ok(())
}

/// Minimal CSV builder.
#[derive(Debug, Clone, Default)]
pub struct Csv {
    buf: String,
}

impl Csv {
    pub fn with_header(cols: &[&str]) -> Self {
        let mut c = Csv::default();
        c.row(cols.iter().map(|s| s.to_string()));
        c
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let line: Vec<String> = fields.into_iter().map(|f| escape(f.as_ref())).collect();
        self.buf.push_str(&line.join(","));
        self.buf.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.buf
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.buf.as_bytes())?;
        Ok(())
    }
}

fn escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Fixed-precision number for CSV output.
pub fn num(v: f64, decimals: usize) -> String {
    if v == 0.0 {
        // avoid "-0.000"
        return format!("{:.*}", decimals, 0.0);
    }
    format!("{:.*}", decimals, v)
}
