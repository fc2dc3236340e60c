//! Command-line front end: argument parsing, dispatch and exit codes.
//!
//! Exit codes are 0 on success, 1 for usage and configuration errors and 2
//! for data errors (unreadable or inconsistent inputs).

pub mod commands;
pub mod config;
pub mod formats;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::beamcore::Method;
use crate::error::{Error, Result};
use crate::metrics::Roi;
use commands::{FilterChoice, RowSpec};
use config::RunConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "nlbeam", version, about = "Linear-array photoacoustic beamforming toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate the configured phantom into a PARF frame.
    Simulate(SimulateArgs),
    /// Beamform a PARF frame and write every stage.
    Beamform(BeamformArgs),
    /// Compute SNR, FWHM and sidelobe metrics from PAIM images.
    Metrics(MetricsArgs),
    /// Beamform with NL_p for a list of p and tabulate metrics.
    SweepP(SweepArgs),
    /// Time DAS, DMAS and NL_p over a range of element counts.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Configuration file (key = value).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the phantom noise seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    /// Band-pass passband in Hz, LO,HI.
    #[arg(long, value_name = "LO_HZ,HI_HZ", conflicts_with = "no_filter")]
    pub filter: Option<String>,
    /// Skip the band-pass stage.
    #[arg(long)]
    pub no_filter: bool,
    /// Display dynamic range in dB.
    #[arg(long, value_name = "DB")]
    pub dynamic_range: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Output PARF path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BeamformArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub filter: FilterArgs,
    /// Input PARF frame.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub method: Option<Method>,
    #[arg(long)]
    pub p: Option<u32>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[command(flatten)]
    pub common: Common,
    /// Envelope (or raw) PAIM image, optionally followed by its log image.
    #[arg(long = "in", required = true)]
    pub inputs: Vec<PathBuf>,
    /// Output CSV path; profiles are written next to it.
    #[arg(long)]
    pub out: PathBuf,
    /// Target ROI x0,z0,x1,z1 in meters (repeatable).
    #[arg(long = "target-roi", value_name = "X0,Z0,X1,Z1", allow_hyphen_values = true)]
    pub target_roi: Vec<String>,
    /// Noise ROI x0,z0,x1,z1 in meters, one shared or one per target ROI.
    #[arg(long = "noise-roi", value_name = "X0,Z0,X1,Z1", allow_hyphen_values = true)]
    pub noise_roi: Vec<String>,
    /// Profile depths in meters, one per target ROI.
    #[arg(long, value_name = "Z,...")]
    pub depths: Option<String>,
    /// Dynamic range in dB used when no log image is given.
    #[arg(long, value_name = "DB")]
    pub dynamic_range: Option<f64>,
    /// Method label for the CSV.
    #[arg(long)]
    pub method: Option<Method>,
    #[arg(long)]
    pub p: Option<u32>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub filter: FilterArgs,
    /// Input PARF frame; simulated from the configuration when absent.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated list of p values.
    #[arg(long, value_name = "P,...")]
    pub p: String,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub common: Common,
    /// Comma-separated element counts.
    #[arg(long, value_name = "M,...", default_value = "16,32,64,128")]
    pub elements: String,
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
    /// Root order for the NL_p series.
    #[arg(long, default_value_t = 5)]
    pub p: u32,
    /// Let the beamformers use all cores (reported as parallel).
    #[arg(long)]
    pub parallel: bool,
    /// Optional CSV output path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Parameter(_) | Error::Config { .. } => EXIT_USAGE,
        Error::Data(_) | Error::Format(_) | Error::Io(_) => EXIT_DATA,
    }
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::param(format!("invalid {what} '{}'", s.trim())))
        })
        .collect()
}

fn parse_roi(text: &str) -> Result<Roi> {
    let v: Vec<f64> = parse_list(text, "ROI coordinate")?;
    if v.len() != 4 {
        return Err(Error::param(format!("ROI needs x0,z0,x1,z1, got '{text}'")));
    }
    Roi::new(v[0], v[1], v[2], v[3])
}

fn load_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::from_file(path).map_err(|e| match e {
            Error::Io(io) => Error::param(format!("cannot read config {}: {io}", path.display())),
            other => other,
        })?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.phantom.rng_seed = seed;
    }
    Ok(cfg)
}

fn filter_choice(args: &FilterArgs) -> Result<FilterChoice> {
    if args.no_filter {
        return Ok(FilterChoice::Off);
    }
    match &args.filter {
        None => Ok(FilterChoice::FromConfig),
        Some(text) => {
            let v: Vec<f64> = parse_list(text, "filter edge")?;
            match v.as_slice() {
                [lo, hi] => Ok(FilterChoice::Passband(*lo, *hi)),
                _ => Err(Error::param("--filter expects LO_HZ,HI_HZ")),
            }
        }
    }
}

fn dynamic_range(cfg: &RunConfig, flag: Option<f64>) -> Result<f64> {
    let dr = flag.unwrap_or(cfg.dynamic_range_db);
    if !(dr.is_finite() && dr > 0.0) {
        return Err(Error::param("dynamic range must be positive"));
    }
    Ok(dr)
}

fn explicit_rows(args: &MetricsArgs) -> Result<Vec<RowSpec>> {
    let targets = args.target_roi.iter().map(|t| parse_roi(t)).collect::<Result<Vec<_>>>()?;
    let noises = args.noise_roi.iter().map(|t| parse_roi(t)).collect::<Result<Vec<_>>>()?;
    if noises.len() != 1 && noises.len() != targets.len() {
        return Err(Error::param("give one --noise-roi, or one per --target-roi"));
    }
    let depths: Vec<f64> = match &args.depths {
        Some(d) => parse_list(d, "depth")?,
        None => targets.iter().map(|t| t.center().1).collect(),
    };
    if depths.len() != targets.len() {
        return Err(Error::param("--depths needs one value per --target-roi"));
    }
    Ok(targets
        .iter()
        .enumerate()
        .map(|(i, t)| RowSpec {
            target: *t,
            noise: noises[if noises.len() == 1 { 0 } else { i }],
            depth: depths[i],
            peak_x: t.center().0,
            other_x: Vec::new(),
        })
        .collect())
}

fn say(out: &mut dyn Write, line: impl AsRef<str>) {
    let _ = writeln!(out, "{}", line.as_ref());
}

fn list_files(out: &mut dyn Write, files: &[PathBuf]) {
    for f in files {
        say(out, format!("wrote {}", f.display()));
    }
}

fn run_command(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Simulate(a) => {
            let cfg = load_config(&a.common)?;
            let s = commands::cmd_simulate(&cfg, &a.out)?;
            for w in &s.warnings {
                say(err, format!("warning: {w}"));
            }
            say(out, format!("wrote {}", s.path.display()));
            say(
                out,
                format!(
                    "channels={} samples={} fs_hz={} c_mps={} sha256={}",
                    s.num_elements, s.num_samples, s.sampling_freq, s.sound_speed, s.checksum
                ),
            );
        }
        Command::Beamform(a) => {
            let cfg = load_config(&a.common)?;
            let choice = filter_choice(&a.filter)?;
            let dr = dynamic_range(&cfg, a.filter.dynamic_range)?;
            let spec = commands::resolve_spec(&cfg, a.method.unwrap_or(cfg.method), a.p.unwrap_or(cfg.p), choice)?;
            let files = commands::cmd_beamform(&cfg, &a.input, &a.out, &spec, dr)?;
            list_files(out, &files);
        }
        Command::Metrics(a) => {
            let cfg = load_config(&a.common)?;
            let dr = dynamic_range(&cfg, a.dynamic_range)?;
            let rows = if a.target_roi.is_empty() {
                if !a.noise_roi.is_empty() || a.depths.is_some() {
                    return Err(Error::param("--noise-roi and --depths need --target-roi"));
                }
                let first = a.inputs.first().map(PathBuf::as_path).unwrap_or(Path::new(""));
                let grid = formats::read_paim(first)?.grid;
                commands::default_rows(&cfg.phantom, &grid)?
            } else {
                explicit_rows(&a)?
            };
            let method = a.method.unwrap_or(cfg.method);
            let p = match method {
                Method::Nl => Some(a.p.unwrap_or(cfg.p)),
                _ => None,
            };
            let files = commands::cmd_metrics(&a.inputs, &rows, dr, method.name(), p, &a.out)?;
            list_files(out, &files);
        }
        Command::SweepP(a) => {
            let cfg = load_config(&a.common)?;
            let choice = filter_choice(&a.filter)?;
            let dr = dynamic_range(&cfg, a.filter.dynamic_range)?;
            let p_list: Vec<u32> = parse_list(&a.p, "p")?;
            let frame = match &a.input {
                Some(path) => commands::load_frame(&cfg, path)?,
                None => {
                    let (frame, warnings) = commands::simulate(&cfg)?;
                    for w in &warnings {
                        say(err, format!("warning: {w}"));
                    }
                    frame
                }
            };
            let files = commands::cmd_sweep_p(&cfg, &frame, &p_list, choice, dr, &a.out)?;
            list_files(out, &files);
        }
        Command::Bench(a) => {
            let cfg = load_config(&a.common)?;
            let elements: Vec<usize> = parse_list(&a.elements, "element count")?;
            let results = commands::cmd_bench(&cfg, &elements, a.repeats, a.p, a.parallel, a.out.as_deref())?;
            let _ = write!(out, "{}", commands::bench_csv(&results, a.parallel).as_str());
        }
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run_command(cli.command, out, err) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            say(err, format!("error: {e}"));
            exit_code(&e)
        }
    }
}
