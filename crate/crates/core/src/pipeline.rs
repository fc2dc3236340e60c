//! Beamform-to-display chain shared by the CLI, the bench and the tests.

use crate::beamcore::{beamform, BeamformedImage, BeamformerSpec, Execution};
use crate::error::Result;
use crate::geometry::DelayTable;
use crate::phantom::RfFrame;
use crate::postproc::{bandpass, envelope, log_compress};

/// Every stage produced for one beamformer run.
#[derive(Debug, Clone)]
pub struct StageImages {
    pub raw: BeamformedImage,
    pub filtered: Option<BeamformedImage>,
    pub envelope: BeamformedImage,
    pub log: BeamformedImage,
}

impl StageImages {
    /// Image the envelope was taken from.
    pub fn detected(&self) -> &BeamformedImage {
        self.filtered.as_ref().unwrap_or(&self.raw)
    }
}

/// Raw image, optional band-pass, envelope, log compression.
pub fn run_stages(
    frame: &RfFrame,
    delays: &DelayTable,
    spec: &BeamformerSpec,
    dynamic_range_db: f64,
    exec: Execution,
) -> Result<StageImages> {
    let raw = beamform(frame, delays, spec, exec)?;
    finish_stages(raw, spec, frame.geom.sampling_freq, dynamic_range_db)
}

/// Post-processing half of [`run_stages`] for an existing raw image.
pub fn finish_stages(
    raw: BeamformedImage,
    spec: &BeamformerSpec,
    fs: f64,
    dynamic_range_db: f64,
) -> Result<StageImages> {
    let filtered = if spec.apply_filter {
        Some(bandpass(&raw, &spec.filter, fs)?)
    } else {
        None
    };
    let env = envelope(filtered.as_ref().unwrap_or(&raw))?;
    let log = log_compress(&env, dynamic_range_db)?;
    Ok(StageImages {
        raw,
        filtered,
        envelope: env,
        log,
    })
}
