//! Wall-clock benchmark of the beamformers across array sizes.
//!
//! Each `(method, M)` pair beamforms the same seeded frame `repeats` times and
//! keeps the median. Timed regions never overlap and only cover the
//! beamforming kernel; delay tables and frames are prepared beforehand.

use std::time::Instant;

use crate::beamcore::{beamform, BeamformerSpec, Execution, Method};
use crate::error::{Error, Result};
use crate::geometry::{build_grid, compute_delays, ArrayGeometry, ImageGrid};
use crate::phantom::{simulate_frame, PhantomSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub method: Method,
    pub p: Option<u32>,
    pub num_elements: usize,
    pub grid_pixels: usize,
    pub repeats: usize,
    pub median_seconds: f64,
    pub ops_per_pixel: u64,
}

impl BenchResult {
    pub fn label(&self) -> String {
        match self.p {
            Some(p) => format!("{}{}", self.method, p),
            None => self.method.to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    /// Probe whose element count is overridden for each run.
    pub base_geometry: ArrayGeometry,
    pub grid: ImageGrid,
    pub element_counts: Vec<usize>,
    pub repeats: usize,
    pub seed: u64,
    pub execution: Execution,
    pub num_samples: usize,
}

impl BenchConfig {
    /// 256 x 256 pixels on the simulation probe, single-threaded.
    pub fn standard(element_counts: Vec<usize>, repeats: usize, seed: u64) -> Self {
        let geom = ArrayGeometry::simulation_default();
        let dz = geom.sample_spacing();
        let grid = build_grid(&geom, -10e-3, 10e-3, 25e-3, 25e-3 + 256.0 * dz, 256)
            .expect("valid bench grid");
        BenchConfig {
            base_geometry: geom,
            grid,
            element_counts,
            repeats,
            seed,
            execution: Execution::Serial,
            num_samples: 2048,
        }
    }
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Times every method at every element count.
pub fn run_bench(methods: &[BeamformerSpec], cfg: &BenchConfig) -> Result<Vec<BenchResult>> {
    if cfg.repeats < 3 {
        return Err(Error::param("bench needs at least 3 repeats"));
    }
    if let Some(&m) = cfg.element_counts.iter().find(|&&m| m < 2) {
        return Err(Error::param(format!("element counts must be >= 2, got {m}")));
    }
    let base = &cfg.base_geometry;
    let mut out = Vec::new();
    for &m in &cfg.element_counts {
        let geom = ArrayGeometry::centered(
            m,
            base.pitch,
            base.center_freq,
            base.fractional_bandwidth,
            base.sampling_freq,
            base.sound_speed,
        )?;
        let phantom = PhantomSpec {
            rng_seed: cfg.seed,
            ..PhantomSpec::default_phantom()
        };
        let (frame, _) = simulate_frame(&geom, &phantom, cfg.num_samples)?;
        let delays = compute_delays(&geom, &cfg.grid);
        for spec in methods {
            let mut times = Vec::with_capacity(cfg.repeats);
            for _ in 0..cfg.repeats {
                let start = Instant::now();
                let img = beamform(&frame, &delays, spec, cfg.execution)?;
                let elapsed = start.elapsed().as_secs_f64();
                std::hint::black_box(&img);
                times.push(elapsed.max(f64::MIN_POSITIVE));
            }
            out.push(BenchResult {
                method: spec.method,
                p: spec.p_opt(),
                num_elements: m,
                grid_pixels: cfg.grid.num_pixels(),
                repeats: cfg.repeats,
                median_seconds: median(&mut times),
                ops_per_pixel: spec.method.ops_per_pixel(m),
            });
        }
    }
    Ok(out)
}

/// Least-squares slope of `ln(y)` against `ln(x)`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Results for one method label, sorted by element count.
pub fn series<'a>(results: &'a [BenchResult], label: &str) -> Vec<&'a BenchResult> {
    let mut v: Vec<&BenchResult> = results.iter().filter(|r| r.label() == label).collect();
    v.sort_by_key(|r| r.num_elements);
    v
}
