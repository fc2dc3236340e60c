//! Delay-and-sum, delay-multiply-and-sum and p-th root nonlinear beamformers.
//!
//! All three reduce the `M` delayed samples of one pixel to a scalar:
//!
//! * DAS: `sum_i x_i`
//! * DMAS: `sum_{i<j} sign(x_i x_j) sqrt(|x_i x_j|)`, `M(M-1)/2` pair terms
//! * NL_p: `((1/M) sum_i sign(x_i) |x_i|^(1/p))^p`
//!
//! Delayed reads that fall outside a channel return 0. The per-pixel channel
//! loop runs in ascending element order; only the pixel loop is parallelised,
//! so serial and parallel execution give bit-identical images.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{DelayTable, ImageGrid};
use crate::phantom::RfFrame;
use crate::postproc::FilterSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Das,
    Dmas,
    Nl,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Das => "das",
            Method::Dmas => "dmas",
            Method::Nl => "nl",
        }
    }

    /// Per-pixel work: channel terms for DAS and NL, pair terms for DMAS.
    pub fn ops_per_pixel(self, num_elements: usize) -> u64 {
        let m = num_elements as u64;
        match self {
            Method::Das | Method::Nl => m,
            Method::Dmas => m * m.saturating_sub(1) / 2,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "das" => Ok(Method::Das),
            "dmas" => Ok(Method::Dmas),
            "nl" => Ok(Method::Nl),
            other => Err(Error::param(format!(
                "unknown method '{other}', expected das, dmas or nl"
            ))),
        }
    }
}

/// Which beamformer to run and how its output is post-filtered.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSpec {
    pub method: Method,
    /// Root order; only meaningful for [`Method::Nl`].
    pub p: u32,
    pub apply_filter: bool,
    pub filter: FilterSpec,
}

impl BeamformerSpec {
    /// Spec with the default filtering rule: DMAS and even-p NL are always
    /// band-pass filtered, DAS and odd-p NL are left unfiltered.
    pub fn new(method: Method, p: u32, filter: FilterSpec) -> Result<Self> {
        let spec = BeamformerSpec {
            method,
            p,
            apply_filter: Self::filter_required(method, p),
            filter,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_filter(mut self, apply: bool) -> Result<Self> {
        self.apply_filter = apply;
        self.validate()?;
        Ok(self)
    }

    /// DMAS and even-p NL outputs carry DC and doubled-frequency content that
    /// only the band-pass stage removes.
    pub fn filter_required(method: Method, p: u32) -> bool {
        match method {
            Method::Das => false,
            Method::Dmas => true,
            Method::Nl => p % 2 == 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.method == Method::Nl && self.p == 0 {
            return Err(Error::param("NL root order p must be at least 1"));
        }
        if Self::filter_required(self.method, self.p) && !self.apply_filter {
            return Err(Error::param(format!(
                "{} requires the band-pass filter",
                self.label()
            )));
        }
        Ok(())
    }

    /// `das`, `dmas` or `nl3` style label.
    pub fn label(&self) -> String {
        match self.method {
            Method::Nl => format!("nl{}", self.p),
            m => m.name().to_string(),
        }
    }

    /// Root order reported in tables; `None` outside NL.
    pub fn p_opt(&self) -> Option<u32> {
        (self.method == Method::Nl).then_some(self.p)
    }
}

/// Processing stage of a [`BeamformedImage`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Raw,
    Filtered,
    Envelope,
    LogCompressed,
}

impl Stage {
    pub fn tag(self) -> u8 {
        match self {
            Stage::Raw => 0,
            Stage::Filtered => 1,
            Stage::Envelope => 2,
            Stage::LogCompressed => 3,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        Ok(match tag {
            0 => Stage::Raw,
            1 => Stage::Filtered,
            2 => Stage::Envelope,
            3 => Stage::LogCompressed,
            t => return Err(Error::format(format!("unknown stage tag {t}"))),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Stage::Raw => "raw",
            Stage::Filtered => "filtered",
            Stage::Envelope => "envelope",
            Stage::LogCompressed => "log",
        }
    }
}

/// Beamformer output on an `nz x nx` grid, stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformedImage {
    pub grid: ImageGrid,
    pub values: Vec<f64>,
    pub stage: Stage,
}

impl BeamformedImage {
    pub fn new(grid: ImageGrid, values: Vec<f64>, stage: Stage) -> Result<Self> {
        if values.len() != grid.num_pixels() {
            return Err(Error::param(format!(
                "image has {} values, grid needs {}",
                values.len(),
                grid.num_pixels()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::data("image contains non-finite values"));
        }
        Ok(BeamformedImage {
            grid,
            values,
            stage,
        })
    }

    #[inline]
    pub fn at(&self, ix: usize, iz: usize) -> f64 {
        self.values[self.grid.index(ix, iz)]
    }

    pub fn column(&self, ix: usize) -> &[f64] {
        let nz = self.grid.nz;
        &self.values[ix * nz..(ix + 1) * nz]
    }

    /// Values of row `iz`, left to right.
    pub fn row(&self, iz: usize) -> Vec<f64> {
        (0..self.grid.nx).map(|ix| self.at(ix, iz)).collect()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn scaled(&self, c: f64) -> BeamformedImage {
        BeamformedImage {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
            stage: self.stage,
        }
    }
}

/// Pixel-level parallelism. Results are identical either way.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

/// Anything that tells each output sample which channel samples to read.
pub trait DelayedSamples: Sync {
    fn num_outputs(&self) -> usize;
    fn num_elements(&self) -> usize;
    /// Fills `out[i]` with channel `i`'s sample for `output`, 0 when the read
    /// falls outside the channel.
    fn gather(&self, frame: &RfFrame, output: usize, out: &mut [f64]);
}

impl DelayedSamples for DelayTable {
    fn num_outputs(&self) -> usize {
        self.num_pixels
    }

    fn num_elements(&self) -> usize {
        self.num_elements
    }

    #[inline]
    fn gather(&self, frame: &RfFrame, output: usize, out: &mut [f64]) {
        for (i, (o, &d)) in out.iter_mut().zip(self.row(output)).enumerate() {
            *o = frame.channel(i).get(d as usize).copied().unwrap_or(0.0);
        }
    }
}

/// Shift-and-sum over a time axis: output `k` reads `x_i(k - shift_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelShifts {
    pub shifts: Vec<i64>,
    pub len: usize,
}

impl DelayedSamples for ChannelShifts {
    fn num_outputs(&self) -> usize {
        self.len
    }

    fn num_elements(&self) -> usize {
        self.shifts.len()
    }

    #[inline]
    fn gather(&self, frame: &RfFrame, output: usize, out: &mut [f64]) {
        for (i, (o, &s)) in out.iter_mut().zip(&self.shifts).enumerate() {
            let k = output as i64 - s;
            *o = if k < 0 {
                0.0
            } else {
                frame.channel(i).get(k as usize).copied().unwrap_or(0.0)
            };
        }
    }
}

/// `sign(x) |x|^(1/p)`.
#[inline]
pub fn signed_root(x: f64, p: u32) -> f64 {
    debug_assert!(p >= 1);
    match p {
        1 => x,
        2 => x.abs().sqrt().copysign(x),
        3 => x.cbrt(),
        4 => x.abs().sqrt().sqrt().copysign(x),
        _ => x.abs().powf(1.0 / p as f64).copysign(x),
    }
}

fn check_frame<S: DelayedSamples>(frame: &RfFrame, src: &S) -> Result<()> {
    if frame.num_channels() != src.num_elements() {
        return Err(Error::param(format!(
            "frame has {} channels but the delay table covers {} elements",
            frame.num_channels(),
            src.num_elements()
        )));
    }
    Ok(())
}

fn reduce<S, F>(frame: &RfFrame, src: &S, exec: Execution, f: F) -> Result<Vec<f64>>
where
    S: DelayedSamples,
    F: Fn(&[f64]) -> f64 + Sync,
{
    check_frame(frame, src)?;
    let m = src.num_elements();
    let n = src.num_outputs();
    let pixel = |buf: &mut Vec<f64>, k: usize| {
        src.gather(frame, k, buf);
        f(buf)
    };
    let values = match exec {
        Execution::Serial => {
            let mut buf = vec![0.0; m];
            (0..n).map(|k| pixel(&mut buf, k)).collect()
        }
        Execution::Parallel => (0..n)
            .into_par_iter()
            .map_init(|| vec![0.0; m], pixel)
            .collect(),
    };
    Ok(values)
}

#[inline]
fn das_pixel(xs: &[f64]) -> f64 {
    xs.iter().sum()
}

#[inline]
fn dmas_pixel(xs: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (i, &a) in xs.iter().enumerate() {
        for &b in &xs[i + 1..] {
            let prod = a * b;
            acc += prod.abs().sqrt().copysign(prod);
        }
    }
    acc
}

#[inline]
fn nl_pixel(xs: &[f64], p: u32) -> f64 {
    let sum: f64 = xs.iter().map(|&x| signed_root(x, p)).sum();
    let mean = sum / xs.len() as f64;
    if p == 1 {
        mean
    } else {
        mean.powi(p as i32)
    }
}

#[inline]
fn nl2_decomposition_pixel(xs: &[f64]) -> f64 {
    let m2 = (xs.len() * xs.len()) as f64;
    let mut diag = 0.0;
    let mut cross = 0.0;
    for (i, &a) in xs.iter().enumerate() {
        let ra = signed_root(a, 2);
        diag += ra * ra;
        for &b in &xs[i + 1..] {
            cross += ra * signed_root(b, 2);
        }
    }
    diag / m2 + 2.0 * cross / m2
}

pub fn das_values<S: DelayedSamples>(frame: &RfFrame, src: &S, exec: Execution) -> Result<Vec<f64>> {
    reduce(frame, src, exec, das_pixel)
}

pub fn dmas_values<S: DelayedSamples>(frame: &RfFrame, src: &S, exec: Execution) -> Result<Vec<f64>> {
    if src.num_elements() < 2 {
        return Err(Error::param("DMAS needs at least two elements (no channel pairs)"));
    }
    reduce(frame, src, exec, dmas_pixel)
}

pub fn nl_values<S: DelayedSamples>(
    frame: &RfFrame,
    src: &S,
    p: u32,
    exec: Execution,
) -> Result<Vec<f64>> {
    if p == 0 {
        return Err(Error::param("NL root order p must be at least 1"));
    }
    reduce(frame, src, exec, |xs| nl_pixel(xs, p))
}

/// Square-root-domain DAS term plus twice the pairwise cross term, each over
/// `M^2`. Algebraically equal to NL with `p = 2`.
pub fn nl2_decomposition_values<S: DelayedSamples>(
    frame: &RfFrame,
    src: &S,
    exec: Execution,
) -> Result<Vec<f64>> {
    if src.num_elements() < 2 {
        return Err(Error::param("decomposition needs at least two elements"));
    }
    reduce(frame, src, exec, nl2_decomposition_pixel)
}

fn to_image(delays: &DelayTable, values: Vec<f64>) -> Result<BeamformedImage> {
    BeamformedImage::new(delays.grid.clone(), values, Stage::Raw)
}

/// Unnormalised delay-and-sum.
pub fn das(frame: &RfFrame, delays: &DelayTable) -> Result<BeamformedImage> {
    to_image(delays, das_values(frame, delays, Execution::Parallel)?)
}

pub fn dmas(frame: &RfFrame, delays: &DelayTable) -> Result<BeamformedImage> {
    to_image(delays, dmas_values(frame, delays, Execution::Parallel)?)
}

pub fn nl_p(frame: &RfFrame, delays: &DelayTable, p: u32) -> Result<BeamformedImage> {
    to_image(delays, nl_values(frame, delays, p, Execution::Parallel)?)
}

pub fn nl2_decomposition(frame: &RfFrame, delays: &DelayTable) -> Result<BeamformedImage> {
    to_image(delays, nl2_decomposition_values(frame, delays, Execution::Parallel)?)
}

/// Raw (unfiltered) image for `spec`.
pub fn beamform(
    frame: &RfFrame,
    delays: &DelayTable,
    spec: &BeamformerSpec,
    exec: Execution,
) -> Result<BeamformedImage> {
    spec.validate()?;
    let values = match spec.method {
        Method::Das => das_values(frame, delays, exec)?,
        Method::Dmas => dmas_values(frame, delays, exec)?,
        Method::Nl => nl_values(frame, delays, spec.p, exec)?,
    };
    to_image(delays, values)
}
