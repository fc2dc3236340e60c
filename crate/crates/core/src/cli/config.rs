//! Flat `key = value` run configuration.
//!
//! Blank lines and `#` comments are ignored. Every key may appear once except
//! `target`, which accumulates. `preset` selects the base values the other
//! keys override, wherever it appears in the file. Unknown keys are errors.
//!
//! ```text
//! preset = simulation          # or experimental
//! num_elements = 128
//! pitch = 0.0003               # meters
//! first_element_x = -0.01905   # meters, default centres the array
//! center_freq = 4e6            # Hz
//! fractional_bandwidth = 0.77
//! sampling_freq = 50e6         # Hz
//! sound_speed = 1540           # m/s
//! x_min = -0.008               # grid, meters
//! x_max = 0.008
//! z_min = 0.015
//! z_max = 0.055
//! nx = 161
//! num_samples = 2048
//! phantom = default            # default | wire | none
//! target = 0.0,0.03,1.0        # x, z (m), amplitude; replaces the phantom targets
//! noise_snr_db = 30            # or none
//! seed = 1
//! method = nl                  # das | dmas | nl
//! p = 3
//! apply_filter = auto          # auto | true | false
//! filter_lo = 4.5e6
//! filter_hi = 11.5e6
//! tukey_alpha = 0.5
//! dynamic_range_db = 60
//! ```

use std::collections::HashMap;
use std::path::Path;

use crate::beamcore::{BeamformerSpec, Method};
use crate::error::{Error, Result};
use crate::geometry::{build_grid, ArrayGeometry, ImageGrid};
use crate::phantom::{PhantomSpec, PointTarget};
use crate::postproc::FilterSpec;

const KEYS: &[&str] = &[
    "preset",
    "num_elements",
    "pitch",
    "first_element_x",
    "center_freq",
    "fractional_bandwidth",
    "sampling_freq",
    "sound_speed",
    "x_min",
    "x_max",
    "z_min",
    "z_max",
    "nx",
    "num_samples",
    "phantom",
    "target",
    "noise_snr_db",
    "seed",
    "method",
    "p",
    "apply_filter",
    "filter_lo",
    "filter_hi",
    "tukey_alpha",
    "dynamic_range_db",
];

const GEOMETRY_KEYS: &[&str] = &[
    "num_elements",
    "pitch",
    "first_element_x",
    "center_freq",
    "fractional_bandwidth",
    "sampling_freq",
    "sound_speed",
];
const GRID_KEYS: &[&str] = &["x_min", "x_max", "z_min", "z_max", "nx"];
const FILTER_KEYS: &[&str] = &["filter_lo", "filter_hi", "tukey_alpha", "sampling_freq"];
const BEAMFORMER_KEYS: &[&str] = &["method", "p", "apply_filter"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Simulation,
    Experimental,
}

/// Lateral and axial extents; the axial step follows the probe (`c / fs`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridExtents {
    pub x_min: f64,
    pub x_max: f64,
    pub z_min: f64,
    pub z_max: f64,
    pub nx: usize,
}

/// Fully validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub preset: Preset,
    pub geometry: ArrayGeometry,
    pub grid: GridExtents,
    pub num_samples: usize,
    pub phantom: PhantomSpec,
    pub method: Method,
    pub p: u32,
    /// `None` applies the default rule of [`BeamformerSpec::new`].
    pub apply_filter: Option<bool>,
    pub filter: FilterSpec,
    pub dynamic_range_db: f64,
}

impl RunConfig {
    pub fn preset(preset: Preset) -> Self {
        match preset {
            Preset::Simulation => RunConfig {
                preset,
                geometry: ArrayGeometry::simulation_default(),
                grid: GridExtents {
                    x_min: -8e-3,
                    x_max: 8e-3,
                    z_min: 15e-3,
                    z_max: 55e-3,
                    nx: 161,
                },
                num_samples: 2048,
                phantom: PhantomSpec::default_phantom(),
                method: Method::Nl,
                p: 3,
                apply_filter: None,
                filter: FilterSpec::simulation_default(),
                dynamic_range_db: 60.0,
            },
            Preset::Experimental => RunConfig {
                preset,
                geometry: ArrayGeometry::experimental_default(),
                grid: GridExtents {
                    x_min: -10e-3,
                    x_max: 10e-3,
                    z_min: 3e-3,
                    z_max: 17e-3,
                    nx: 201,
                },
                num_samples: 1024,
                phantom: PhantomSpec::wire_phantom(),
                method: Method::Nl,
                p: 12,
                apply_filter: None,
                filter: FilterSpec::experimental_default(),
                dynamic_range_db: 70.0,
            },
        }
    }

    pub fn image_grid(&self) -> Result<ImageGrid> {
        let g = &self.grid;
        build_grid(&self.geometry, g.x_min, g.x_max, g.z_min, g.z_max, g.nx)
    }

    /// Beamformer spec for `method`/`p`, honouring `apply_filter`.
    pub fn beamformer(&self, method: Method, p: u32) -> Result<BeamformerSpec> {
        let spec = BeamformerSpec::new(method, p, self.filter)?;
        match self.apply_filter {
            Some(apply) => spec.with_filter(apply),
            None => Ok(spec),
        }
    }

    pub fn default_beamformer(&self) -> Result<BeamformerSpec> {
        self.beamformer(self.method, self.p)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<(usize, &str, &str)> = Vec::new();
        let mut seen: HashMap<&str, usize> = HashMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
                line: line_no,
                msg: format!("expected 'key = value', got '{line}'"),
            })?;
            let key = key.trim();
            let value = value.trim();
            if !KEYS.contains(&key) {
                return Err(Error::Config {
                    line: line_no,
                    msg: format!("unknown key '{key}'"),
                });
            }
            if key != "target" {
                if let Some(prev) = seen.insert(key, line_no) {
                    return Err(Error::Config {
                        line: line_no,
                        msg: format!("duplicate key '{key}' (first set on line {prev})"),
                    });
                }
            }
            entries.push((line_no, key, value));
        }

        let preset = match entries.iter().find(|e| e.1 == "preset") {
            None => Preset::Simulation,
            Some(&(line, _, v)) => match v {
                "simulation" => Preset::Simulation,
                "experimental" => Preset::Experimental,
                other => {
                    return Err(Error::Config {
                        line,
                        msg: format!("unknown preset '{other}', expected simulation or experimental"),
                    })
                }
            },
        };
        let mut cfg = RunConfig::preset(preset);
        // phantom picks the base target set (and, for none, disables noise);
        // explicit target and noise keys override it wherever they appear
        if let Some(&(line, _, v)) = entries.iter().find(|e| e.1 == "phantom") {
            let base = match v {
                "default" => PhantomSpec::default_phantom(),
                "wire" => PhantomSpec::wire_phantom(),
                "none" => PhantomSpec {
                    targets: vec![],
                    noise_snr_db: None,
                    rng_seed: cfg.phantom.rng_seed,
                },
                other => {
                    return Err(Error::Config {
                        line,
                        msg: format!("unknown phantom '{other}', expected default, wire or none"),
                    })
                }
            };
            cfg.phantom = base;
        }
        let mut first_x: Option<f64> = None;
        let mut targets: Vec<PointTarget> = Vec::new();
        let mut key_lines: HashMap<&str, usize> = HashMap::new();

        for &(line, key, value) in &entries {
            key_lines.insert(key, line);
            let err = |msg: String| Error::Config { line, msg };
            let float = || -> Result<f64> {
                value
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| err(format!("'{key}' expects a number, got '{value}'")))
            };
            let int = || -> Result<u64> {
                value
                    .parse::<u64>()
                    .map_err(|_| err(format!("'{key}' expects a non-negative integer, got '{value}'")))
            };
            let g = &mut cfg.geometry;
            match key {
                "preset" => {}
                "num_elements" => g.num_elements = int()? as usize,
                "pitch" => g.pitch = float()?,
                "first_element_x" => first_x = Some(float()?),
                "center_freq" => g.center_freq = float()?,
                "fractional_bandwidth" => g.fractional_bandwidth = float()?,
                "sampling_freq" => g.sampling_freq = float()?,
                "sound_speed" => g.sound_speed = float()?,
                "x_min" => cfg.grid.x_min = float()?,
                "x_max" => cfg.grid.x_max = float()?,
                "z_min" => cfg.grid.z_min = float()?,
                "z_max" => cfg.grid.z_max = float()?,
                "nx" => cfg.grid.nx = int()? as usize,
                "num_samples" => cfg.num_samples = int()? as usize,
                "phantom" => {}
                "target" => {
                    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
                    let vals: Option<Vec<f64>> = parts.iter().map(|s| s.parse::<f64>().ok()).collect();
                    match vals.as_deref() {
                        Some(&[x, z, a]) => targets.push(PointTarget::new(x, z, a)),
                        _ => return Err(err(format!("'target' expects x,z,amplitude, got '{value}'"))),
                    }
                }
                "noise_snr_db" => {
                    cfg.phantom.noise_snr_db = if value.eq_ignore_ascii_case("none") {
                        None
                    } else {
                        Some(value.parse::<f64>().ok().filter(|v| !v.is_nan()).ok_or_else(|| {
                            err(format!("'noise_snr_db' expects a number or none, got '{value}'"))
                        })?)
                    }
                }
                "seed" => cfg.phantom.rng_seed = int()?,
                "method" => cfg.method = value.parse().map_err(|e: Error| err(e.to_string()))?,
                "p" => {
                    let p = int()?;
                    if p == 0 || p > u32::MAX as u64 {
                        return Err(err(format!("'p' must be a positive integer, got '{value}'")));
                    }
                    cfg.p = p as u32;
                }
                "apply_filter" => {
                    cfg.apply_filter = match value {
                        "auto" => None,
                        "true" => Some(true),
                        "false" => Some(false),
                        other => return Err(err(format!("'apply_filter' expects auto, true or false, got '{other}'"))),
                    }
                }
                "filter_lo" => cfg.filter.pass_lo = float()?,
                "filter_hi" => cfg.filter.pass_hi = float()?,
                "tukey_alpha" => cfg.filter.tukey_alpha = float()?,
                "dynamic_range_db" => cfg.dynamic_range_db = float()?,
                _ => unreachable!("key list checked above"),
            }
        }
        if !targets.is_empty() {
            cfg.phantom.targets = targets;
        }

        // rebuild element positions from the (possibly overridden) count and pitch
        let g = &cfg.geometry;
        let geometry = match first_x {
            Some(x0) => ArrayGeometry::linear(
                g.num_elements,
                g.pitch,
                x0,
                g.center_freq,
                g.fractional_bandwidth,
                g.sampling_freq,
                g.sound_speed,
            ),
            None => ArrayGeometry::centered(
                g.num_elements,
                g.pitch,
                g.center_freq,
                g.fractional_bandwidth,
                g.sampling_freq,
                g.sound_speed,
            ),
        };
        let line_of = |keys: &[&str]| keys.iter().filter_map(|k| key_lines.get(k)).copied().max().unwrap_or(0);
        let at = |keys: &[&str], e: Error| Error::Config {
            line: line_of(keys),
            msg: strip(e),
        };
        cfg.geometry = geometry.map_err(|e| at(GEOMETRY_KEYS, e))?;
        cfg.image_grid().map_err(|e| at(GRID_KEYS, e))?;
        if cfg.num_samples == 0 {
            return Err(at(&["num_samples"], Error::param("num_samples must be >= 1")));
        }
        let target_keys = ["target", "phantom"];
        cfg.phantom.validate().map_err(|e| at(&target_keys, e))?;
        cfg.filter
            .validate(cfg.geometry.sampling_freq)
            .map_err(|e| at(FILTER_KEYS, e))?;
        cfg.default_beamformer().map_err(|e| at(BEAMFORMER_KEYS, e))?;
        if !(cfg.dynamic_range_db > 0.0) {
            return Err(at(
                &["dynamic_range_db"],
                Error::param("dynamic_range_db must be > 0"),
            ));
        }
        Ok(cfg)
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::preset(Preset::Simulation)
    }
}

fn strip(e: Error) -> String {
    match e {
        Error::Parameter(m) | Error::Data(m) | Error::Format(m) => m,
        other => other.to_string(),
    }
}
