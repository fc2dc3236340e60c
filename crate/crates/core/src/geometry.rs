//! Linear-array transducer description, imaging grid and one-way
//! time-of-flight delay tables.
//!
//! Elements sit on the `z = 0` line; `z` grows with depth below the array and
//! `x` is lateral. Pixels are indexed column-major (`ix * nz + iz`) so that
//! each lateral column is a contiguous axial trace.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Transducer array description.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    pub num_elements: usize,
    /// Element pitch in meters.
    pub pitch: f64,
    /// Lateral element positions in meters, strictly increasing.
    pub element_x: Vec<f64>,
    /// Center frequency in Hz.
    pub center_freq: f64,
    /// -6 dB fractional bandwidth.
    pub fractional_bandwidth: f64,
    /// Sampling frequency in Hz.
    pub sampling_freq: f64,
    /// Speed of sound in m/s.
    pub sound_speed: f64,
}

impl ArrayGeometry {
    /// Uniform linear array whose first element sits at `first_element_x`.
    pub fn linear(
        num_elements: usize,
        pitch: f64,
        first_element_x: f64,
        center_freq: f64,
        fractional_bandwidth: f64,
        sampling_freq: f64,
        sound_speed: f64,
    ) -> Result<Self> {
        let element_x = (0..num_elements)
            .map(|i| first_element_x + i as f64 * pitch)
            .collect();
        let geom = ArrayGeometry {
            num_elements,
            pitch,
            element_x,
            center_freq,
            fractional_bandwidth,
            sampling_freq,
            sound_speed,
        };
        geom.validate()?;
        Ok(geom)
    }

    /// Uniform linear array centered on `x = 0`.
    pub fn centered(
        num_elements: usize,
        pitch: f64,
        center_freq: f64,
        fractional_bandwidth: f64,
        sampling_freq: f64,
        sound_speed: f64,
    ) -> Result<Self> {
        let first = -0.5 * (num_elements.saturating_sub(1)) as f64 * pitch;
        Self::linear(
            num_elements,
            pitch,
            first,
            center_freq,
            fractional_bandwidth,
            sampling_freq,
            sound_speed,
        )
    }

    /// 128-element, 4 MHz, 77 % bandwidth probe sampled at 50 MHz in a
    /// 1540 m/s medium, 0.3 mm pitch.
    pub fn simulation_default() -> Self {
        Self::centered(128, 0.3e-3, 4.0e6, 0.77, 50.0e6, 1540.0).expect("valid preset")
    }

    /// 128-element, 8.5 MHz, 95 % bandwidth probe (38.5 mm aperture)
    /// sampled at 40 MHz.
    pub fn experimental_default() -> Self {
        Self::centered(128, 38.5e-3 / 128.0, 8.5e6, 0.95, 40.0e6, 1540.0).expect("valid preset")
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_elements == 0 {
            return Err(Error::param("num_elements must be at least 1"));
        }
        if self.element_x.len() != self.num_elements {
            return Err(Error::param(format!(
                "element_x has {} entries, expected {}",
                self.element_x.len(),
                self.num_elements
            )));
        }
        if !(self.pitch > 0.0 && self.pitch.is_finite()) {
            return Err(Error::param(format!("pitch must be > 0, got {}", self.pitch)));
        }
        for w in self.element_x.windows(2) {
            let step = w[1] - w[0];
            if !(step > 0.0) || (step - self.pitch).abs() > 1e-9 * self.pitch.max(1.0) {
                return Err(Error::param(
                    "element positions must be strictly increasing with uniform pitch",
                ));
            }
        }
        if !(self.sound_speed > 0.0 && self.sound_speed.is_finite()) {
            return Err(Error::param(format!(
                "sound_speed must be > 0, got {}",
                self.sound_speed
            )));
        }
        if !(self.center_freq > 0.0) {
            return Err(Error::param("center_freq must be > 0"));
        }
        if !(self.fractional_bandwidth > 0.0 && self.fractional_bandwidth < 2.0) {
            return Err(Error::param(format!(
                "fractional_bandwidth must lie in (0, 2), got {}",
                self.fractional_bandwidth
            )));
        }
        let f_max = self.center_freq * (1.0 + self.fractional_bandwidth / 2.0);
        if !(self.sampling_freq > 2.0 * f_max) {
            return Err(Error::param(format!(
                "sampling_freq {} Hz violates Nyquist for a band reaching {} Hz",
                self.sampling_freq, f_max
            )));
        }
        Ok(())
    }

    /// Distance in meters covered by sound during one sample period.
    pub fn sample_spacing(&self) -> f64 {
        self.sound_speed / self.sampling_freq
    }

    pub fn first_element_x(&self) -> f64 {
        self.element_x[0]
    }
}

/// Rectangular imaging grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub z_min: f64,
    pub z_max: f64,
    pub nx: usize,
    pub nz: usize,
    pub dx: f64,
    pub dz: f64,
    /// Sampling rate of the axial axis when `dz == c / fs`.
    pub axial_rate: Option<f64>,
}

impl ImageGrid {
    /// Grid with an explicit axial spacing. Columns are not time-aligned.
    pub fn with_spacing(
        x_min: f64,
        x_max: f64,
        nx: usize,
        z_min: f64,
        dz: f64,
        nz: usize,
    ) -> Result<Self> {
        check_lateral(x_min, x_max, nx)?;
        if !(z_min >= 0.0) || !(dz > 0.0) || nz == 0 {
            return Err(Error::param("axial extent must satisfy z_min >= 0, dz > 0, nz >= 1"));
        }
        Ok(ImageGrid {
            x_min,
            x_max,
            z_min,
            z_max: z_min + dz * (nz - 1) as f64,
            nx,
            nz,
            dx: lateral_step(x_min, x_max, nx),
            dz,
            axial_rate: None,
        })
    }

    pub fn num_pixels(&self) -> usize {
        self.nx * self.nz
    }

    pub fn x_at(&self, ix: usize) -> f64 {
        self.x_min + ix as f64 * self.dx
    }

    pub fn z_at(&self, iz: usize) -> f64 {
        self.z_min + iz as f64 * self.dz
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|ix| self.x_at(ix)).collect()
    }

    pub fn zs(&self) -> Vec<f64> {
        (0..self.nz).map(|iz| self.z_at(iz)).collect()
    }

    /// Column-major pixel index.
    #[inline]
    pub fn index(&self, ix: usize, iz: usize) -> usize {
        ix * self.nz + iz
    }

    /// Nearest row to `z`, or `None` when `z` falls outside the grid by more
    /// than half a row.
    pub fn nearest_row(&self, z: f64) -> Option<usize> {
        let pos = (z - self.z_min) / self.dz;
        if pos < -0.5 || pos > (self.nz - 1) as f64 + 0.5 || !pos.is_finite() {
            return None;
        }
        Some(pos.round().clamp(0.0, (self.nz - 1) as f64) as usize)
    }

    /// Nearest column to `x`, clamped to the grid.
    pub fn nearest_col(&self, x: f64) -> usize {
        if self.nx == 1 || self.dx == 0.0 {
            return 0;
        }
        ((x - self.x_min) / self.dx)
            .round()
            .clamp(0.0, (self.nx - 1) as f64) as usize
    }

    pub fn is_time_aligned(&self) -> bool {
        self.axial_rate.is_some()
    }
}

fn check_lateral(x_min: f64, x_max: f64, nx: usize) -> Result<()> {
    if nx == 0 {
        return Err(Error::param("nx must be at least 1"));
    }
    if !x_min.is_finite() || !x_max.is_finite() {
        return Err(Error::param("lateral extent must be finite"));
    }
    if nx == 1 {
        if x_min > x_max {
            return Err(Error::param("x_min must not exceed x_max"));
        }
    } else if !(x_min < x_max) {
        return Err(Error::param(format!(
            "x_min ({x_min}) must be below x_max ({x_max})"
        )));
    }
    Ok(())
}

fn lateral_step(x_min: f64, x_max: f64, nx: usize) -> f64 {
    if nx > 1 {
        (x_max - x_min) / (nx - 1) as f64
    } else {
        0.0
    }
}

/// Builds a time-aligned grid: `dz = c / fs`, so every lateral column is an
/// `fs`-rate trace.
pub fn build_grid(
    geom: &ArrayGeometry,
    x_min: f64,
    x_max: f64,
    z_min: f64,
    z_max: f64,
    nx: usize,
) -> Result<ImageGrid> {
    check_lateral(x_min, x_max, nx)?;
    if !(z_min >= 0.0) || !(z_max > z_min) || !z_max.is_finite() {
        return Err(Error::param(format!(
            "axial extent must satisfy 0 <= z_min < z_max, got {z_min}..{z_max}"
        )));
    }
    let dz = geom.sample_spacing();
    // absorb representation error so exact multiples of dz are not bumped up a row
    let nz = (((z_max - z_min) / dz) - 1e-9).ceil().max(1.0) as usize;
    Ok(ImageGrid {
        x_min,
        x_max,
        z_min,
        z_max,
        nx,
        nz,
        dx: lateral_step(x_min, x_max, nx),
        dz,
        axial_rate: Some(geom.sampling_freq),
    })
}

/// Integer one-way sample delays, one row of `num_elements` per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayTable {
    pub grid: ImageGrid,
    pub num_pixels: usize,
    pub num_elements: usize,
    delays: Vec<u32>,
}

impl DelayTable {
    pub fn from_raw(grid: ImageGrid, num_elements: usize, delays: Vec<u32>) -> Result<Self> {
        let num_pixels = grid.num_pixels();
        if delays.len() != num_pixels * num_elements {
            return Err(Error::param(format!(
                "delay buffer has {} entries, expected {}x{}",
                delays.len(),
                num_pixels,
                num_elements
            )));
        }
        Ok(DelayTable {
            grid,
            num_pixels,
            num_elements,
            delays,
        })
    }

    /// Delays of every element for one pixel.
    #[inline]
    pub fn row(&self, pixel: usize) -> &[u32] {
        let m = self.num_elements;
        &self.delays[pixel * m..(pixel + 1) * m]
    }

    pub fn get(&self, pixel: usize, element: usize) -> u32 {
        self.delays[pixel * self.num_elements + element]
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.delays
    }

    /// Keeps only the listed element columns, in the given order.
    pub fn select_elements(&self, elements: &[usize]) -> DelayTable {
        let mut delays = Vec::with_capacity(self.num_pixels * elements.len());
        for px in 0..self.num_pixels {
            let row = self.row(px);
            delays.extend(elements.iter().map(|&e| row[e]));
        }
        DelayTable {
            grid: self.grid.clone(),
            num_pixels: self.num_pixels,
            num_elements: elements.len(),
            delays,
        }
    }
}

/// `delay(pixel, i) = round(fs * |pixel - element_i| / c)`.
pub fn compute_delays(geom: &ArrayGeometry, grid: &ImageGrid) -> DelayTable {
    let m = geom.num_elements;
    let nz = grid.nz;
    let samples_per_meter = geom.sampling_freq / geom.sound_speed;
    let mut delays = vec![0u32; grid.num_pixels() * m];
    delays
        .par_chunks_mut(nz * m)
        .enumerate()
        .for_each(|(ix, column)| {
            let x = grid.x_at(ix);
            for (iz, row) in column.chunks_mut(m).enumerate() {
                let z = grid.z_at(iz);
                for (d, &ex) in row.iter_mut().zip(&geom.element_x) {
                    let dist = (x - ex).hypot(z);
                    *d = (dist * samples_per_meter).round() as u32;
                }
            }
        });
    DelayTable {
        grid: grid.clone(),
        num_pixels: grid.num_pixels(),
        num_elements: m,
        delays,
    }
}
