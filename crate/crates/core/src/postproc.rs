//! Axial band-pass filtering, envelope detection and log compression.
//!
//! Every lateral column of a time-aligned image is an `fs`-rate trace, so the
//! filters here run column by column in the frequency domain. Both the
//! band-pass and the analytic-signal transforms are circular over the column
//! length.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::beamcore::{BeamformedImage, Stage};
use crate::error::{Error, Result};

/// Band-pass mask: zero outside `[pass_lo, pass_hi]`, Tukey-tapered inside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec {
    pub pass_lo: f64,
    pub pass_hi: f64,
    pub tukey_alpha: f64,
}

impl FilterSpec {
    pub fn new(pass_lo: f64, pass_hi: f64, tukey_alpha: f64) -> Self {
        FilterSpec {
            pass_lo,
            pass_hi,
            tukey_alpha,
        }
    }

    /// 4.5 to 11.5 MHz, for the 4 MHz simulated probe.
    pub fn simulation_default() -> Self {
        Self::new(4.5e6, 11.5e6, 0.5)
    }

    /// 11 to 19 MHz, for the 8.5 MHz probe.
    pub fn experimental_default() -> Self {
        Self::new(11.0e6, 19.0e6, 0.5)
    }

    pub fn validate(&self, fs: f64) -> Result<()> {
        if !(self.pass_lo > 0.0 && self.pass_lo < self.pass_hi && self.pass_hi < fs / 2.0) {
            return Err(Error::param(format!(
                "passband must satisfy 0 < lo < hi < fs/2, got {}..{} Hz at fs = {} Hz",
                self.pass_lo, self.pass_hi, fs
            )));
        }
        if !(0.0..=1.0).contains(&self.tukey_alpha) {
            return Err(Error::param(format!(
                "tukey_alpha must lie in [0, 1], got {}",
                self.tukey_alpha
            )));
        }
        Ok(())
    }

    /// Mask gain at frequency `f` (Hz, sign ignored).
    pub fn gain(&self, f: f64) -> f64 {
        let f = f.abs();
        if f < self.pass_lo || f > self.pass_hi {
            return 0.0;
        }
        let u = (f - self.pass_lo) / (self.pass_hi - self.pass_lo);
        tukey(u, self.tukey_alpha)
    }

    /// Flat (unit-gain) part of the passband.
    pub fn flat_band(&self) -> (f64, f64) {
        let edge = self.tukey_alpha / 2.0 * (self.pass_hi - self.pass_lo);
        (self.pass_lo + edge, self.pass_hi - edge)
    }
}

/// Tukey window on `u in [0, 1]`: cosine tapers over the outer `alpha / 2`
/// fraction at each end, 1 in between.
pub fn tukey(u: f64, alpha: f64) -> f64 {
    if !(0.0..=1.0).contains(&u) {
        return 0.0;
    }
    if alpha <= 0.0 {
        return 1.0;
    }
    let edge = alpha / 2.0;
    let t = if u < edge {
        u / edge
    } else if u > 1.0 - edge {
        (1.0 - u) / edge
    } else {
        return 1.0;
    };
    0.5 * (1.0 - (std::f64::consts::PI * t).cos())
}

/// Frequency in Hz of DFT bin `k` of an `n`-point transform (negative above
/// Nyquist).
pub fn bin_frequency(k: usize, n: usize, fs: f64) -> f64 {
    if k <= n / 2 {
        k as f64 * fs / n as f64
    } else {
        -((n - k) as f64) * fs / n as f64
    }
}

struct ColumnFft {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    n: usize,
}

impl ColumnFft {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        ColumnFft {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            n,
        }
    }

    /// Forward transform, per-bin multiply, inverse transform (normalised).
    fn apply(&self, trace: &[f64], weights: &[f64]) -> Vec<Complex<f64>> {
        let mut buf: Vec<Complex<f64>> = trace.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        for (b, &w) in buf.iter_mut().zip(weights) {
            *b *= w;
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        for b in &mut buf {
            *b *= scale;
        }
        buf
    }
}

fn map_columns(
    image: &BeamformedImage,
    stage: Stage,
    f: impl Fn(&[f64], &mut [f64]) + Sync,
) -> BeamformedImage {
    let nz = image.grid.nz;
    let mut values = vec![0.0; image.values.len()];
    values
        .par_chunks_mut(nz)
        .zip(image.values.par_chunks(nz))
        .for_each(|(out, col)| f(col, out));
    BeamformedImage {
        grid: image.grid.clone(),
        values,
        stage,
    }
}

/// Zero-phase band-pass along each column; the DC bin is always removed.
pub fn bandpass(image: &BeamformedImage, spec: &FilterSpec, fs: f64) -> Result<BeamformedImage> {
    if image.stage != Stage::Raw {
        return Err(Error::param(format!(
            "band-pass expects a raw image, got stage '{}'",
            image.stage.name()
        )));
    }
    match image.grid.axial_rate {
        Some(rate) if (rate - fs).abs() <= 1e-9 * fs => {}
        _ => {
            return Err(Error::param(
                "band-pass needs a time-aligned grid (dz = c/fs) sampled at the filter's fs",
            ))
        }
    }
    spec.validate(fs)?;
    let n = image.grid.nz;
    let fft = ColumnFft::new(n);
    let mut weights: Vec<f64> = (0..n).map(|k| spec.gain(bin_frequency(k, n, fs))).collect();
    weights[0] = 0.0;
    Ok(map_columns(image, Stage::Filtered, |col, out| {
        for (o, v) in out.iter_mut().zip(fft.apply(col, &weights)) {
            *o = v.re;
        }
    }))
}

/// Magnitude of the analytic signal of each column.
pub fn envelope(image: &BeamformedImage) -> Result<BeamformedImage> {
    if !matches!(image.stage, Stage::Raw | Stage::Filtered) {
        return Err(Error::param(format!(
            "envelope expects a raw or filtered image, got stage '{}'",
            image.stage.name()
        )));
    }
    let n = image.grid.nz;
    let fft = ColumnFft::new(n);
    let weights = analytic_weights(n);
    Ok(map_columns(image, Stage::Envelope, |col, out| {
        for (o, v) in out.iter_mut().zip(fft.apply(col, &weights)) {
            *o = v.norm();
        }
    }))
}

/// One-sided spectrum doubling: keep DC (and Nyquist), double positive bins,
/// drop negative ones.
fn analytic_weights(n: usize) -> Vec<f64> {
    let mut h = vec![0.0; n];
    if n == 0 {
        return h;
    }
    h[0] = 1.0;
    if n % 2 == 0 {
        h[n / 2] = 1.0;
        h[1..n / 2].fill(2.0);
    } else {
        h[1..=(n - 1) / 2].fill(2.0);
    }
    h
}

/// `20 log10(v / max)`, clamped below at `-dynamic_range_db`.
pub fn log_compress(image: &BeamformedImage, dynamic_range_db: f64) -> Result<BeamformedImage> {
    if image.stage != Stage::Envelope {
        return Err(Error::param(format!(
            "log compression expects an envelope image, got stage '{}'",
            image.stage.name()
        )));
    }
    if !(dynamic_range_db > 0.0) {
        return Err(Error::param("dynamic range must be > 0 dB"));
    }
    let peak = image.max();
    if !(peak > 0.0) {
        return Err(Error::data("cannot log-compress an all-zero image"));
    }
    let floor = -dynamic_range_db;
    let values = image
        .values
        .iter()
        .map(|&v| {
            let db = 20.0 * (v / peak).log10();
            if db.is_nan() || db < floor {
                floor
            } else {
                db.min(0.0)
            }
        })
        .collect();
    Ok(BeamformedImage {
        grid: image.grid.clone(),
        values,
        stage: Stage::LogCompressed,
    })
}

/// One-sided power spectrum `|X_k|^2`, `k = 0..=n/2`.
pub fn power_spectrum(trace: &[f64]) -> Vec<f64> {
    let n = trace.len();
    let mut buf: Vec<Complex<f64>> = trace.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf[..=n / 2].iter().map(|c| c.norm_sqr()).collect()
}
