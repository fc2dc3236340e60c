//! Command implementations behind the `nlbeam` subcommands.
//!
//! Every command validates all of its inputs before creating any file.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::config::RunConfig;
use super::formats::{self, num, Csv};
use crate::beamcore::{BeamformedImage, BeamformerSpec, Execution, Method, Stage};
use crate::bench::{run_bench, BenchConfig, BenchResult};
use crate::error::{Error, Result};
use crate::geometry::{compute_delays, ImageGrid};
use crate::metrics::{fwhm, lateral_profile, snr, sidelobe_level_excluding, LateralProfile, Roi};
use crate::phantom::{simulate_frame, PhantomSpec, RfFrame};
use crate::pipeline::{run_stages, StageImages};
use crate::postproc::{envelope, log_compress, FilterSpec};

/// Half extents of the default target ROI around each target.
pub const TARGET_ROI_HALF_WIDTH: f64 = 1.0e-3;
pub const TARGET_ROI_HALF_HEIGHT: f64 = 1.0e-3;
/// Width of the default noise ROI.
pub const NOISE_ROI_WIDTH: f64 = 3.0e-3;

#[derive(Debug, Clone)]
pub struct SimulateSummary {
    pub path: PathBuf,
    pub checksum: String,
    pub num_elements: usize,
    pub num_samples: usize,
    pub sampling_freq: f64,
    pub sound_speed: f64,
    pub warnings: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn simulate(cfg: &RunConfig) -> Result<(RfFrame, Vec<String>)> {
    let (frame, report) = simulate_frame(&cfg.geometry, &cfg.phantom, cfg.num_samples)?;
    Ok((frame, report.warnings()))
}

/// Simulates the configured phantom and writes it as PARF.
pub fn cmd_simulate(cfg: &RunConfig, out: &Path) -> Result<SimulateSummary> {
    let (frame, warnings) = simulate(cfg)?;
    let bytes = formats::write_parf(out, &frame)?;
    Ok(SimulateSummary {
        path: out.to_path_buf(),
        checksum: sha256_hex(&bytes),
        num_elements: frame.num_channels(),
        num_samples: frame.num_samples,
        sampling_freq: frame.geom.sampling_freq,
        sound_speed: frame.geom.sound_speed,
        warnings,
    })
}

/// How the command line overrides the configured filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FilterChoice {
    FromConfig,
    Passband(f64, f64),
    Off,
}

/// Beamformer spec for `method`/`p` after applying a command-line filter
/// override on top of the configuration.
pub fn resolve_spec(cfg: &RunConfig, method: Method, p: u32, choice: FilterChoice) -> Result<BeamformerSpec> {
    match choice {
        FilterChoice::FromConfig => cfg.beamformer(method, p),
        FilterChoice::Off => BeamformerSpec::new(method, p, cfg.filter)?.with_filter(false),
        FilterChoice::Passband(lo, hi) => {
            let filter = FilterSpec::new(lo, hi, cfg.filter.tukey_alpha);
            filter.validate(cfg.geometry.sampling_freq)?;
            BeamformerSpec::new(method, p, filter)?.with_filter(true)
        }
    }
}

pub fn load_frame(cfg: &RunConfig, input: &Path) -> Result<RfFrame> {
    formats::read_parf(input)?.to_frame(&cfg.geometry)
}

fn stage_files(prefix: &str, images: &StageImages, dynamic_range_db: f64, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut put = |name: String, bytes: Vec<u8>| -> Result<()> {
        let path = out_dir.join(name);
        fs::write(&path, bytes)?;
        written.push(path);
        Ok(())
    };
    put(format!("{prefix}_raw.paim"), formats::encode_paim(&images.raw))?;
    if let Some(f) = &images.filtered {
        put(format!("{prefix}_filtered.paim"), formats::encode_paim(f))?;
    }
    put(format!("{prefix}_envelope.paim"), formats::encode_paim(&images.envelope))?;
    put(format!("{prefix}_log.paim"), formats::encode_paim(&images.log))?;
    put(format!("{prefix}.pgm"), formats::encode_pgm(&images.log, dynamic_range_db)?)?;
    Ok(written)
}

/// Beamforms a PARF frame and writes every stage plus a PGM render.
pub fn cmd_beamform(
    cfg: &RunConfig,
    input: &Path,
    out_dir: &Path,
    spec: &BeamformerSpec,
    dynamic_range_db: f64,
) -> Result<Vec<PathBuf>> {
    let frame = load_frame(cfg, input)?;
    let grid = cfg.image_grid()?;
    let delays = compute_delays(&cfg.geometry, &grid);
    let images = run_stages(&frame, &delays, spec, dynamic_range_db, Execution::Parallel)?;
    fs::create_dir_all(out_dir)?;
    stage_files(&spec.label(), &images, dynamic_range_db, out_dir)
}

/// One metrics row: target and noise ROIs, the profile depth and the lobe to
/// measure, plus lateral positions of other targets on that row.
#[derive(Debug, Clone, PartialEq)]
pub struct RowSpec {
    pub target: Roi,
    pub noise: Roi,
    pub depth: f64,
    pub peak_x: f64,
    pub other_x: Vec<f64>,
}

/// Noise window of [`NOISE_ROI_WIDTH`] at the target's depth band, placed
/// as far laterally as the grid allows from every target in that band.
pub fn default_noise_roi(target: &Roi, targets: &[(f64, f64)], grid: &ImageGrid) -> Result<Roi> {
    let band: Vec<f64> = targets
        .iter()
        .filter(|&&(_, z)| z >= target.z_lo - 2e-3 && z <= target.z_hi + 2e-3)
        .map(|&(x, _)| x)
        .collect();
    let x_hi_limit = grid.x_at(grid.nx - 1);
    if x_hi_limit - grid.x_min < NOISE_ROI_WIDTH {
        return Err(Error::data("grid is too narrow for a noise ROI"));
    }
    let step = if grid.dx > 0.0 { grid.dx } else { NOISE_ROI_WIDTH };
    let mut best: Option<(f64, f64)> = None;
    let mut lo = grid.x_min;
    while lo + NOISE_ROI_WIDTH <= x_hi_limit + 1e-12 {
        let hi = lo + NOISE_ROI_WIDTH;
        let clearance = band
            .iter()
            .map(|&x| if x < lo { lo - x } else if x > hi { x - hi } else { -1.0 })
            .fold(f64::INFINITY, f64::min);
        if best.map_or(true, |(c, _)| clearance > c + 1e-12) {
            best = Some((clearance, lo));
        }
        lo += step;
    }
    let (_, lo) = best.expect("at least one window fits");
    Roi::new(lo, target.z_lo, lo + NOISE_ROI_WIDTH, target.z_hi)
}

/// Default rows: one per depth that holds a lateral pair (on the leftmost
/// target), or one per target when the phantom has no pairs.
pub fn default_rows(phantom: &PhantomSpec, grid: &ImageGrid) -> Result<Vec<RowSpec>> {
    let pts: Vec<(f64, f64)> = phantom.targets.iter().map(|t| (t.x, t.z)).collect();
    let same_depth = |z: f64| -> Vec<f64> {
        let mut xs: Vec<f64> = pts.iter().filter(|p| (p.1 - z).abs() < 1e-9).map(|p| p.0).collect();
        xs.sort_by(f64::total_cmp);
        xs
    };
    let mut depths: Vec<f64> = Vec::new();
    for &(_, z) in &pts {
        if !depths.iter().any(|&d| (d - z).abs() < 1e-9) {
            depths.push(z);
        }
    }
    depths.sort_by(f64::total_cmp);
    let paired: Vec<f64> = depths.iter().copied().filter(|&z| same_depth(z).len() >= 2).collect();
    let mut chosen: Vec<(f64, f64)> = Vec::new();
    if paired.is_empty() {
        let mut sorted = pts.clone();
        sorted.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)));
        chosen = sorted;
    } else {
        for z in paired {
            chosen.push((same_depth(z)[0], z));
        }
    }
    chosen
        .into_iter()
        .map(|(x, z)| {
            let target = Roi::around(x, z, TARGET_ROI_HALF_WIDTH, TARGET_ROI_HALF_HEIGHT)?;
            let noise = default_noise_roi(&target, &pts, grid)?;
            let other_x = same_depth(z).into_iter().filter(|&o| (o - x).abs() > 1e-9).collect();
            Ok(RowSpec {
                target,
                noise,
                depth: z,
                peak_x: x,
                other_x,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub method: String,
    pub p: Option<u32>,
    pub depth: f64,
    pub snr_db: std::result::Result<f64, String>,
    pub fwhm: std::result::Result<f64, String>,
    pub sidelobe_db: std::result::Result<f64, String>,
    pub profile: Option<LateralProfile>,
}

fn msg(e: Error) -> String {
    e.to_string()
}

/// Evaluates every row; failures are recorded per metric.
pub fn compute_rows(
    envelope: &BeamformedImage,
    log: &BeamformedImage,
    rows: &[RowSpec],
    method: &str,
    p: Option<u32>,
) -> Vec<MetricsRow> {
    rows.iter()
        .map(|r| {
            let profile = lateral_profile(log, r.depth);
            let (fw, sl) = match &profile {
                Ok(pr) => (
                    fwhm(pr, r.peak_x).map_err(msg),
                    sidelobe_level_excluding(pr, r.peak_x, &r.other_x).map_err(msg),
                ),
                Err(e) => (Err(e.to_string()), Err(e.to_string())),
            };
            MetricsRow {
                method: method.to_string(),
                p,
                depth: r.depth,
                snr_db: snr(envelope, &r.target, &r.noise).map_err(msg),
                fwhm: fw,
                sidelobe_db: sl,
                profile: profile.ok(),
            }
        })
        .collect()
}

pub const METRICS_HEADER: [&str; 7] = ["method", "p", "depth_mm", "snr_db", "fwhm_mm", "sidelobe_db", "error"];

pub fn metrics_csv(rows: &[MetricsRow]) -> Csv {
    let mut csv = Csv::with_header(&METRICS_HEADER);
    for r in rows {
        let mut errors = Vec::new();
        let mut field = |v: &std::result::Result<f64, String>, scale: f64, name: &str| match v {
            Ok(x) => num(x * scale, 4),
            Err(e) => {
                errors.push(format!("{name}: {e}"));
                "ERR".to_string()
            }
        };
        let snr = field(&r.snr_db, 1.0, "snr");
        let fw = field(&r.fwhm, 1e3, "fwhm");
        let sl = field(&r.sidelobe_db, 1.0, "sidelobe");
        csv.row([
            r.method.clone(),
            r.p.map(|p| p.to_string()).unwrap_or_default(),
            num(r.depth * 1e3, 3),
            snr,
            fw,
            sl,
            errors.join("; "),
        ]);
    }
    csv
}

pub fn profile_csv(profile: &LateralProfile) -> Csv {
    let mut csv = Csv::with_header(&["x_mm", "value_db"]);
    for (x, v) in profile.x.iter().zip(&profile.value_db) {
        csv.row([num(x * 1e3, 4), num(*v, 4)]);
    }
    csv
}

/// Metrics inputs: the envelope image, plus an optional log-compressed one.
pub fn split_metric_inputs(images: Vec<BeamformedImage>, dynamic_range_db: f64) -> Result<(BeamformedImage, BeamformedImage)> {
    let mut env = None;
    let mut log = None;
    for img in images {
        match img.stage {
            Stage::Envelope if env.is_none() => env = Some(img),
            Stage::LogCompressed if log.is_none() => log = Some(img),
            Stage::Raw | Stage::Filtered if env.is_none() => env = Some(envelope(&img)?),
            s => {
                return Err(Error::param(format!(
                    "unexpected or repeated '{}' image among metrics inputs",
                    s.name()
                )))
            }
        }
    }
    let env = env.ok_or_else(|| Error::param("metrics need an envelope (or raw) image"))?;
    let log = match log {
        Some(l) => l,
        None => log_compress(&env, dynamic_range_db)?,
    };
    if env.grid.nx != log.grid.nx || env.grid.nz != log.grid.nz {
        return Err(Error::data("envelope and log-compressed images have different grids"));
    }
    Ok((env, log))
}

fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("metrics");
    out.with_file_name(format!("{stem}_{suffix}"))
}

/// Computes metrics rows from image files and writes the CSV plus one
/// lateral-profile CSV per row.
pub fn cmd_metrics(
    inputs: &[PathBuf],
    rows: &[RowSpec],
    dynamic_range_db: f64,
    method: &str,
    p: Option<u32>,
    out: &Path,
) -> Result<Vec<PathBuf>> {
    let images = inputs
        .iter()
        .map(|p| formats::read_paim(p))
        .collect::<Result<Vec<_>>>()?;
    let (env, log) = split_metric_inputs(images, dynamic_range_db)?;
    let results = compute_rows(&env, &log, rows, method, p);
    let mut written = vec![out.to_path_buf()];
    metrics_csv(&results).write(out)?;
    for (i, r) in results.iter().enumerate() {
        if let Some(profile) = &r.profile {
            let path = sibling(out, &format!("profile_{i}_{}mm.csv", num(r.depth * 1e3, 2)));
            profile_csv(profile).write(&path)?;
            written.push(path);
        }
    }
    Ok(written)
}

/// NL images for every `p` from one frame and one delay table, with per-`p`
/// metrics in `sweep.csv`.
pub fn cmd_sweep_p(
    cfg: &RunConfig,
    frame: &RfFrame,
    p_list: &[u32],
    filter: FilterChoice,
    dynamic_range_db: f64,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    if p_list.is_empty() {
        return Err(Error::param("p list must not be empty"));
    }
    let specs = p_list
        .iter()
        .map(|&p| resolve_spec(cfg, Method::Nl, p, filter))
        .collect::<Result<Vec<_>>>()?;
    let grid = cfg.image_grid()?;
    let rows = default_rows(&cfg.phantom, &grid)?;
    let delays = compute_delays(&cfg.geometry, &grid);
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    let mut all_rows = Vec::new();
    for spec in &specs {
        let images = run_stages(frame, &delays, spec, dynamic_range_db, Execution::Parallel)?;
        written.extend(stage_files(&spec.label(), &images, dynamic_range_db, out_dir)?);
        all_rows.extend(compute_rows(&images.envelope, &images.log, &rows, "nl", Some(spec.p)));
    }
    let csv_path = out_dir.join("sweep.csv");
    metrics_csv(&all_rows).write(&csv_path)?;
    written.push(csv_path);
    Ok(written)
}

pub fn bench_csv(results: &[BenchResult], parallel: bool) -> Csv {
    let mut csv = Csv::with_header(&["method", "p", "M", "pixels", "median_seconds", "ops_per_pixel", "mode"]);
    for r in results {
        csv.row([
            r.method.to_string(),
            r.p.map(|p| p.to_string()).unwrap_or_default(),
            r.num_elements.to_string(),
            r.grid_pixels.to_string(),
            format!("{:.6e}", r.median_seconds),
            r.ops_per_pixel.to_string(),
            if parallel { "parallel" } else { "serial" }.to_string(),
        ]);
    }
    csv
}

/// Times DAS, DMAS and NL_p over `elements` on a 256 x 256 grid.
pub fn cmd_bench(
    cfg: &RunConfig,
    elements: &[usize],
    repeats: usize,
    p: u32,
    parallel: bool,
    out: Option<&Path>,
) -> Result<Vec<BenchResult>> {
    let mut bench = BenchConfig::standard(elements.to_vec(), repeats, cfg.phantom.rng_seed);
    bench.base_geometry = cfg.geometry.clone();
    bench.execution = if parallel { Execution::Parallel } else { Execution::Serial };
    let specs = [
        cfg.beamformer(Method::Das, 1)?,
        cfg.beamformer(Method::Dmas, 1)?,
        cfg.beamformer(Method::Nl, p)?,
    ];
    let results = run_bench(&specs, &bench)?;
    if let Some(path) = out {
        bench_csv(&results, parallel).write(path)?;
    }
    Ok(results)
}
