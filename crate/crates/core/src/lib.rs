//! Linear-array photoacoustic beamforming.
//!
//! The crate covers the whole chain from synthetic channel data to image
//! metrics: [`phantom`] produces RF frames, [`geometry`] turns the probe and
//! imaging grid into delay tables, [`beamcore`] runs DAS, DMAS or the p-th
//! root nonlinear beamformer, [`postproc`] band-passes, detects and
//! log-compresses, and [`metrics`] measures SNR, FWHM and sidelobes.
//! [`cli`] holds the command implementations and file formats used by the
//! `nlbeam` binary.

pub mod beamcore;
pub mod bench;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod phantom;
pub mod pipeline;
pub mod postproc;

pub use error::{Error, Result};
