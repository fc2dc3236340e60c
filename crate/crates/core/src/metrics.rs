//! Image quality measures: ROI-based SNR, lateral profiles, FWHM and
//! sidelobe level.

use crate::beamcore::{BeamformedImage, Stage};
use crate::error::{Error, Result};
use crate::geometry::ImageGrid;

/// Half-maximum in amplitude, expressed in dB.
pub const HALF_AMPLITUDE_DB: f64 = -6.020_599_913_279_624;

/// Sidelobes are searched outside `peak +/- SIDELOBE_EXCLUSION_FWHM * FWHM`.
pub const SIDELOBE_EXCLUSION_FWHM: f64 = 2.0;

/// Axis-aligned rectangle in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Roi {
    pub x_lo: f64,
    pub x_hi: f64,
    pub z_lo: f64,
    pub z_hi: f64,
}

impl Roi {
    pub fn new(x_lo: f64, z_lo: f64, x_hi: f64, z_hi: f64) -> Result<Self> {
        let roi = Roi {
            x_lo: x_lo.min(x_hi),
            x_hi: x_lo.max(x_hi),
            z_lo: z_lo.min(z_hi),
            z_hi: z_lo.max(z_hi),
        };
        if !(roi.x_lo < roi.x_hi && roi.z_lo < roi.z_hi) {
            return Err(Error::param(format!("degenerate ROI {roi:?}")));
        }
        Ok(roi)
    }

    /// Rectangle centred on `(x, z)`.
    pub fn around(x: f64, z: f64, half_width: f64, half_height: f64) -> Result<Self> {
        Self::new(x - half_width, z - half_height, x + half_width, z + half_height)
    }

    pub fn center(&self) -> (f64, f64) {
        (0.5 * (self.x_lo + self.x_hi), 0.5 * (self.z_lo + self.z_hi))
    }

    pub fn overlaps(&self, other: &Roi) -> bool {
        self.x_lo <= other.x_hi
            && other.x_lo <= self.x_hi
            && self.z_lo <= other.z_hi
            && other.z_lo <= self.z_hi
    }

    /// Grid pixels `(ix, iz)` whose centres fall inside the rectangle.
    pub fn pixels(&self, grid: &ImageGrid) -> Vec<(usize, usize)> {
        let cols: Vec<usize> = (0..grid.nx)
            .filter(|&ix| (self.x_lo..=self.x_hi).contains(&grid.x_at(ix)))
            .collect();
        let rows: Vec<usize> = (0..grid.nz)
            .filter(|&iz| (self.z_lo..=self.z_hi).contains(&grid.z_at(iz)))
            .collect();
        cols.iter()
            .flat_map(|&ix| rows.iter().map(move |&iz| (ix, iz)))
            .collect()
    }

    fn values(&self, image: &BeamformedImage, what: &str) -> Result<Vec<f64>> {
        let px = self.pixels(&image.grid);
        if px.is_empty() {
            return Err(Error::data(format!(
                "{what} ROI {self:?} contains no grid pixels"
            )));
        }
        Ok(px.into_iter().map(|(ix, iz)| image.at(ix, iz)).collect())
    }
}

/// `20 log10((max - min) over target / std over noise)` on envelope values.
pub fn snr(image: &BeamformedImage, target: &Roi, noise: &Roi) -> Result<f64> {
    if image.stage != Stage::Envelope {
        return Err(Error::param(format!(
            "SNR expects an envelope image, got stage '{}'",
            image.stage.name()
        )));
    }
    if target.overlaps(noise) {
        return Err(Error::param("target and noise ROIs must be disjoint"));
    }
    let t = target.values(image, "target")?;
    let n = noise.values(image, "noise")?;
    let hi = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = t.iter().copied().fold(f64::INFINITY, f64::min);
    let p_signal = hi - lo;
    let mean = n.iter().sum::<f64>() / n.len() as f64;
    let var = n.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n.len() as f64;
    let p_noise = var.sqrt();
    if !(p_noise > 0.0) {
        return Err(Error::data("noise ROI has zero standard deviation"));
    }
    if !(p_signal > 0.0) {
        return Err(Error::data("target ROI is constant"));
    }
    Ok(20.0 * (p_signal / p_noise).log10())
}

/// One row of a log-compressed image.
#[derive(Debug, Clone, PartialEq)]
pub struct LateralProfile {
    pub depth: f64,
    pub x: Vec<f64>,
    pub value_db: Vec<f64>,
}

impl LateralProfile {
    pub fn new(depth: f64, x: Vec<f64>, value_db: Vec<f64>) -> Result<Self> {
        if x.len() != value_db.len() || x.is_empty() {
            return Err(Error::param("profile positions and values must be non-empty and equal in length"));
        }
        Ok(LateralProfile { depth, x, value_db })
    }

    fn nearest(&self, x: f64) -> usize {
        self.x
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - x).abs().total_cmp(&(b.1 - x).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }

    /// Climbs from the sample nearest `x` to the local maximum.
    pub fn local_peak(&self, x: f64) -> usize {
        let v = &self.value_db;
        let mut i = self.nearest(x);
        loop {
            let left = (i > 0 && v[i - 1] > v[i]).then(|| i - 1);
            let right = (i + 1 < v.len() && v[i + 1] > v[i]).then(|| i + 1);
            i = match (left, right) {
                (Some(l), Some(r)) => {
                    if v[r] >= v[l] {
                        r
                    } else {
                        l
                    }
                }
                (Some(l), None) => l,
                (None, Some(r)) => r,
                (None, None) => return i,
            };
        }
    }
}

/// Row nearest to `depth` of a log-compressed image.
pub fn lateral_profile(image: &BeamformedImage, depth: f64) -> Result<LateralProfile> {
    if image.stage != Stage::LogCompressed {
        return Err(Error::param(format!(
            "lateral profiles are read from log-compressed images, got stage '{}'",
            image.stage.name()
        )));
    }
    let iz = image.grid.nearest_row(depth).ok_or_else(|| {
        Error::data(format!(
            "depth {depth} m lies outside the grid ({}..{} m)",
            image.grid.z_min,
            image.grid.z_at(image.grid.nz - 1)
        ))
    })?;
    LateralProfile::new(depth, image.grid.xs(), image.row(iz))
}

/// Main lobe found by [`main_lobe`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MainLobe {
    pub peak_index: usize,
    pub peak_x: f64,
    pub peak_db: f64,
    pub left_x: f64,
    pub right_x: f64,
}

impl MainLobe {
    pub fn width(&self) -> f64 {
        self.right_x - self.left_x
    }
}

/// Locates the peak near `peak_x` and its two -6 dB crossings, linearly
/// interpolated between bracketing samples.
pub fn main_lobe(profile: &LateralProfile, peak_x: f64) -> Result<MainLobe> {
    let v = &profile.value_db;
    let x = &profile.x;
    let ip = profile.local_peak(peak_x);
    let level = v[ip] + HALF_AMPLITUDE_DB;
    let crossing = |inner: usize, outer: usize| {
        let t = (v[inner] - level) / (v[inner] - v[outer]);
        x[inner] + t * (x[outer] - x[inner])
    };

    let left = (0..ip)
        .rev()
        .find(|&j| v[j] <= level)
        .map(|j| crossing(j + 1, j));
    let right = (ip + 1..v.len())
        .find(|&j| v[j] <= level)
        .map(|j| crossing(j - 1, j));
    match (left, right) {
        (Some(left_x), Some(right_x)) => Ok(MainLobe {
            peak_index: ip,
            peak_x: x[ip],
            peak_db: v[ip],
            left_x,
            right_x,
        }),
        _ => Err(Error::data(format!(
            "no -6 dB crossing on both sides of the peak at x = {} m",
            x[ip]
        ))),
    }
}

/// Full width at half maximum (amplitude) of the lobe nearest `peak_x`.
pub fn fwhm(profile: &LateralProfile, peak_x: f64) -> Result<f64> {
    main_lobe(profile, peak_x).map(|l| l.width())
}

/// Highest level, relative to the main-lobe peak, outside `peak +/- 2 FWHM`.
pub fn sidelobe_level(profile: &LateralProfile, peak_x: f64) -> Result<f64> {
    sidelobe_level_excluding(profile, peak_x, &[])
}

/// As [`sidelobe_level`], also excluding `+/- 2 FWHM` around each position in
/// `others` (neighbouring targets on the same row).
pub fn sidelobe_level_excluding(profile: &LateralProfile, peak_x: f64, others: &[f64]) -> Result<f64> {
    let lobe = main_lobe(profile, peak_x)?;
    let half_window = SIDELOBE_EXCLUSION_FWHM * lobe.width();
    let excluded = |x: f64| {
        (x - lobe.peak_x).abs() <= half_window || others.iter().any(|&o| (x - o).abs() <= half_window)
    };
    profile
        .x
        .iter()
        .zip(&profile.value_db)
        .filter(|(&x, _)| !excluded(x))
        .map(|(_, &v)| v)
        .reduce(f64::max)
        .map(|v| v - lobe.peak_db)
        .ok_or_else(|| Error::data("sidelobe exclusion window covers the whole profile"))
}
