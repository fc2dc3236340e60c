//! Synthetic channel data from point-target phantoms.
//!
//! Each target radiates a zero-phase Gaussian-modulated cosine that reaches
//! element `i` after `r_i / c` seconds with `1 / r_i` spherical spreading.
//! Noise is white Gaussian, scaled against the RMS of the whole frame.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::ArrayGeometry;

/// Envelope half-width, in standard deviations, beyond which the wavelet is
/// treated as zero when synthesising frames (`exp(-32)` ~ 1e-14).
const WAVELET_SUPPORT_SIGMAS: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointTarget {
    /// Lateral position in meters.
    pub x: f64,
    /// Depth in meters, > 0.
    pub z: f64,
    pub amplitude: f64,
}

impl PointTarget {
    pub fn new(x: f64, z: f64, amplitude: f64) -> Self {
        PointTarget { x, z, amplitude }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhantomSpec {
    pub targets: Vec<PointTarget>,
    /// Noise level in dB relative to the frame RMS; `None` disables noise.
    pub noise_snr_db: Option<f64>,
    pub rng_seed: u64,
}

impl PhantomSpec {
    pub fn validate(&self) -> Result<()> {
        for (n, t) in self.targets.iter().enumerate() {
            if !(t.z > 0.0) || !t.x.is_finite() || !t.z.is_finite() {
                return Err(Error::param(format!(
                    "target {n} must lie below the array (z > 0), got z = {}",
                    t.z
                )));
            }
            if !(t.amplitude > 0.0 && t.amplitude.is_finite()) {
                return Err(Error::param(format!(
                    "target {n} amplitude must be > 0, got {}",
                    t.amplitude
                )));
            }
        }
        if let Some(snr) = self.noise_snr_db {
            if snr.is_nan() {
                return Err(Error::param("noise_snr_db must be a number or none"));
            }
        }
        Ok(())
    }

    /// Six lateral pairs from 25 to 50 mm (5 mm axial step, 4 mm apart) and
    /// two on-axis singles at 32.5 and 42.5 mm, 30 dB noise.
    pub fn default_phantom() -> Self {
        let mut targets = Vec::with_capacity(14);
        for depth in PAIR_DEPTHS {
            targets.push(PointTarget::new(-PAIR_HALF_SEPARATION, depth, 1.0));
            targets.push(PointTarget::new(PAIR_HALF_SEPARATION, depth, 1.0));
        }
        for depth in SINGLE_DEPTHS {
            targets.push(PointTarget::new(0.0, depth, 1.0));
        }
        PhantomSpec {
            targets,
            noise_snr_db: Some(30.0),
            rng_seed: 1,
        }
    }

    /// Four wire-like targets scattered over 5 to 15 mm depth.
    pub fn wire_phantom() -> Self {
        PhantomSpec {
            targets: WIRE_TARGETS
                .iter()
                .map(|&(x, z)| PointTarget::new(x, z, 1.0))
                .collect(),
            noise_snr_db: Some(0.0),
            rng_seed: 7,
        }
    }
}

/// Depths of the default phantom's target pairs.
pub const PAIR_DEPTHS: [f64; 6] = [25e-3, 30e-3, 35e-3, 40e-3, 45e-3, 50e-3];
/// Depths of the default phantom's on-axis single targets.
pub const SINGLE_DEPTHS: [f64; 2] = [32.5e-3, 42.5e-3];
/// Half of the 4 mm lateral pair separation.
pub const PAIR_HALF_SEPARATION: f64 = 2e-3;
/// `(x, z)` of the wire phantom's targets.
pub const WIRE_TARGETS: [(f64, f64); 4] = [
    (-6e-3, 5.5e-3),
    (-2e-3, 8.0e-3),
    (2.5e-3, 11.3e-3),
    (6e-3, 14.5e-3),
];

/// Multichannel time samples, channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RfFrame {
    pub geom: ArrayGeometry,
    pub num_samples: usize,
    samples: Vec<f64>,
}

impl RfFrame {
    pub fn zeros(geom: ArrayGeometry, num_samples: usize) -> Self {
        let samples = vec![0.0; geom.num_elements * num_samples];
        RfFrame {
            geom,
            num_samples,
            samples,
        }
    }

    /// Wraps a channel-major buffer of `M * num_samples` finite samples.
    pub fn from_samples(geom: ArrayGeometry, num_samples: usize, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != geom.num_elements * num_samples {
            return Err(Error::param(format!(
                "frame buffer has {} samples, expected {} channels x {}",
                samples.len(),
                geom.num_elements,
                num_samples
            )));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::data("frame contains non-finite samples"));
        }
        Ok(RfFrame {
            geom,
            num_samples,
            samples,
        })
    }

    pub fn num_channels(&self) -> usize {
        self.geom.num_elements
    }

    #[inline]
    pub fn channel(&self, i: usize) -> &[f64] {
        &self.samples[i * self.num_samples..(i + 1) * self.num_samples]
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [f64] {
        &mut self.samples
    }

    pub fn rms(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        let ss: f64 = self.samples.iter().map(|v| v * v).sum();
        (ss / self.samples.len() as f64).sqrt()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> RfFrame {
        RfFrame {
            geom: self.geom.clone(),
            num_samples: self.num_samples,
            samples: self.samples.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Sub-array made of the listed channels, in the given order.
    pub fn select_channels(&self, channels: &[usize]) -> Result<RfFrame> {
        if channels.is_empty() {
            return Err(Error::param("channel selection is empty"));
        }
        let geom = ArrayGeometry {
            num_elements: channels.len(),
            element_x: channels.iter().map(|&c| self.geom.element_x[c]).collect(),
            ..self.geom.clone()
        };
        let mut samples = Vec::with_capacity(channels.len() * self.num_samples);
        for &c in channels {
            samples.extend_from_slice(self.channel(c));
        }
        Ok(RfFrame {
            geom,
            num_samples: self.num_samples,
            samples,
        })
    }
}

/// Standard deviation (seconds) of the wavelet's Gaussian envelope such that
/// the amplitude spectrum falls by 6 dB at `f0 * (1 +/- bw / 2)`.
pub fn wavelet_sigma(geom: &ArrayGeometry) -> f64 {
    let half_band = geom.fractional_bandwidth * geom.center_freq / 2.0;
    let sigma_f = half_band / (2.0 * std::f64::consts::LN_2).sqrt();
    1.0 / (2.0 * std::f64::consts::PI * sigma_f)
}

/// Zero-phase Gaussian-modulated cosine, unit peak at `t = 0`.
pub fn pulse_wavelet(geom: &ArrayGeometry, t: f64) -> f64 {
    let sigma = wavelet_sigma(geom);
    let u = t / sigma;
    (-0.5 * u * u).exp() * (2.0 * std::f64::consts::PI * geom.center_freq * t).cos()
}

/// A target whose wavefront did not fully fit inside the recorded window.
#[derive(Debug, Clone, PartialEq)]
pub struct Truncation {
    pub target: usize,
    pub channel: usize,
    /// Arrival sample, possibly beyond `num_samples`.
    pub arrival_sample: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimulationReport {
    pub truncations: Vec<Truncation>,
}

impl SimulationReport {
    pub fn is_truncated(&self) -> bool {
        !self.truncations.is_empty()
    }

    pub fn warnings(&self) -> Vec<String> {
        // one line per target, listing the first affected channel
        let mut seen = Vec::new();
        let mut out = Vec::new();
        for t in &self.truncations {
            if seen.contains(&t.target) {
                continue;
            }
            seen.push(t.target);
            out.push(format!(
                "target {} arrives at sample {:.1} on channel {}, beyond the recorded window",
                t.target, t.arrival_sample, t.channel
            ));
        }
        out
    }
}

/// Forward-simulates a frame, then adds noise when the phantom requests it.
pub fn simulate_frame(
    geom: &ArrayGeometry,
    phantom: &PhantomSpec,
    num_samples: usize,
) -> Result<(RfFrame, SimulationReport)> {
    geom.validate()?;
    phantom.validate()?;
    let fs = geom.sampling_freq;
    let sigma = wavelet_sigma(geom);
    let half_support = (WAVELET_SUPPORT_SIGMAS * sigma * fs).ceil() as i64 + 1;
    let last = num_samples as i64 - 1;

    let mut frame = RfFrame::zeros(geom.clone(), num_samples);
    let truncations: Vec<Truncation> = frame
        .samples
        .par_chunks_mut(num_samples.max(1))
        .enumerate()
        .flat_map_iter(|(ch, trace)| {
            let ex = geom.element_x[ch];
            let mut cut = Vec::new();
            for (n, t) in phantom.targets.iter().enumerate() {
                let r = (t.x - ex).hypot(t.z);
                let arrival = r / geom.sound_speed * fs;
                let centre = arrival.round() as i64;
                if centre + half_support > last {
                    cut.push(Truncation {
                        target: n,
                        channel: ch,
                        arrival_sample: arrival,
                    });
                }
                let lo = (centre - half_support).max(0);
                let hi = (centre + half_support).min(last);
                let gain = t.amplitude / r;
                for k in lo..=hi {
                    let tk = k as f64 / fs - r / geom.sound_speed;
                    trace[k as usize] += gain * pulse_wavelet(geom, tk);
                }
            }
            cut
        })
        .collect();

    if let Some(snr) = phantom.noise_snr_db {
        frame = add_noise(&frame, snr, phantom.rng_seed)?;
    }
    Ok((frame, SimulationReport { truncations }))
}

/// Adds white Gaussian noise with `sigma = rms(frame) * 10^(-snr_db / 20)`.
///
/// Channel `i` draws from ChaCha stream `i` of the seeded generator, so the
/// result does not depend on how channels are scheduled.
pub fn add_noise(frame: &RfFrame, snr_db: f64, seed: u64) -> Result<RfFrame> {
    if frame.samples.is_empty() {
        return Err(Error::data("cannot add noise to an empty frame"));
    }
    if snr_db.is_nan() {
        return Err(Error::param("snr_db must not be NaN"));
    }
    if snr_db == f64::INFINITY {
        return Ok(frame.clone());
    }
    let rms = frame.rms();
    if rms == 0.0 {
        return Err(Error::data(
            "noise level is undefined for an all-zero frame (frame RMS is 0)",
        ));
    }
    let sigma = rms * 10f64.powf(-snr_db / 20.0);
    let mut out = frame.clone();
    out.samples
        .par_chunks_mut(frame.num_samples)
        .enumerate()
        .for_each(|(ch, trace)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(ch as u64);
            for v in trace.iter_mut() {
                let n: f64 = StandardNormal.sample(&mut rng);
                *v += sigma * n;
            }
        });
    Ok(out)
}

/// Sample index of the largest absolute value, a proxy for the envelope peak
/// of a zero-phase pulse.
pub fn peak_sample(trace: &[f64]) -> Option<usize> {
    trace
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(k, _)| k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rustfft::{num_complex::Complex, FftPlanner};

    fn small_geom(m: usize) -> ArrayGeometry {
        ArrayGeometry::centered(m, 0.3e-3, 4e6, 0.77, 50e6, 1540.0).unwrap()
    }

    fn quiet(targets: Vec<PointTarget>) -> PhantomSpec {
        PhantomSpec {
            targets,
            noise_snr_db: None,
            rng_seed: 0,
        }
    }

    #[test]
    fn wavelet_shape() {
        let g = small_geom(1);
        assert_eq!(pulse_wavelet(&g, 0.0), 1.0);
        assert!(pulse_wavelet(&g, 1e-5).abs() < 1e-300);
        assert!(pulse_wavelet(&g, -1e-5).abs() < 1e-300);
        assert_eq!(pulse_wavelet(&g, 3e-8), pulse_wavelet(&g, -3e-8));
    }

    #[test]
    fn wavelet_minus_six_db_band() {
        // amplitude spectrum of exp(-t^2/2s^2) cos(2 pi f0 t) around f0 is
        // exp(-(f-f0)^2 (2 pi s)^2 / 2); check the half-amplitude points
        let g = small_geom(1);
        let s = wavelet_sigma(&g);
        let df = g.fractional_bandwidth * g.center_freq / 2.0;
        let w = 2.0 * std::f64::consts::PI * s;
        let gain = (-(df * w).powi(2) / 2.0).exp();
        assert!((gain - 0.5).abs() < 1e-12);
    }

    #[test]
    fn wavelet_spectral_peak_at_center_frequency() {
        let g = small_geom(1);
        let n = 1024;
        let fs = g.sampling_freq;
        let mut buf: Vec<Complex<f64>> = (0..n)
            .map(|k| {
                let t = (k as f64 - (n / 2) as f64) / fs;
                Complex::new(pulse_wavelet(&g, t), 0.0)
            })
            .collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let (peak_bin, _) = buf[..n / 2]
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap();
        let bin_hz = fs / n as f64;
        let f_peak = peak_bin as f64 * bin_hz;
        assert!((f_peak - g.center_freq).abs() <= bin_hz, "peak at {f_peak}");
    }

    #[test]
    fn arrival_at_expected_sample() {
        let g = small_geom(4);
        let ex = g.element_x[1];
        let (f, rep) = simulate_frame(&g, &quiet(vec![PointTarget::new(ex, 7.7e-3, 1.0)]), 600).unwrap();
        assert!(!rep.is_truncated());
        assert_eq!(peak_sample(f.channel(1)), Some(250));
    }

    #[test]
    fn empty_phantom_is_silent() {
        let g = small_geom(4);
        let (f, _) = simulate_frame(&g, &quiet(vec![]), 100).unwrap();
        assert!(f.samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn superposition_of_two_equidistant_targets() {
        let g = small_geom(3);
        let ex = g.element_x[1];
        let a = PointTarget::new(ex - 2e-3, 6e-3, 1.0);
        let b = PointTarget::new(ex + 2e-3, 6e-3, 1.0);
        let (fa, _) = simulate_frame(&g, &quiet(vec![a]), 400).unwrap();
        let (fab, _) = simulate_frame(&g, &quiet(vec![a, b]), 400).unwrap();
        let k = peak_sample(fa.channel(1)).unwrap();
        let ratio = fab.channel(1)[k] / fa.channel(1)[k];
        assert!((ratio - 2.0).abs() < 1e-12, "ratio {ratio}");
    }

    #[test]
    fn truncation_is_reported() {
        let g = small_geom(2);
        let (_, rep) = simulate_frame(&g, &quiet(vec![PointTarget::new(0.0, 20e-3, 1.0)]), 300).unwrap();
        assert!(rep.is_truncated());
        assert_eq!(rep.warnings().len(), 1);
    }

    #[test]
    fn invalid_targets_rejected() {
        let g = small_geom(2);
        assert!(simulate_frame(&g, &quiet(vec![PointTarget::new(0.0, 0.0, 1.0)]), 10).is_err());
        assert!(simulate_frame(&g, &quiet(vec![PointTarget::new(0.0, 1e-3, 0.0)]), 10).is_err());
    }

    #[test]
    fn noise_on_zero_frame_is_an_error() {
        let f = RfFrame::zeros(small_geom(2), 10);
        assert!(matches!(add_noise(&f, 10.0, 1), Err(Error::Data(_))));
        assert_eq!(add_noise(&f, f64::INFINITY, 1).unwrap(), f);
    }

    #[test]
    fn zero_db_noise_power() {
        let g = small_geom(32);
        let (clean, _) = simulate_frame(&g, &quiet(vec![PointTarget::new(0.0, 5e-3, 1.0)]), 4096).unwrap();
        assert!(clean.samples().len() >= 100_000);
        let noisy = add_noise(&clean, 0.0, 42).unwrap();
        let p_sig: f64 = clean.samples().iter().map(|v| v * v).sum();
        let p_noise: f64 = noisy
            .samples()
            .iter()
            .zip(clean.samples())
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        let measured = 10.0 * (p_sig / p_noise).log10();
        assert!(measured.abs() <= 0.5, "measured {measured} dB");
    }

    #[test]
    fn noise_is_seeded() {
        let g = small_geom(4);
        let (clean, _) = simulate_frame(&g, &quiet(vec![PointTarget::new(0.0, 3e-3, 1.0)]), 256).unwrap();
        let a = add_noise(&clean, 10.0, 9).unwrap();
        let b = add_noise(&clean, 10.0, 9).unwrap();
        let c = add_noise(&clean, 10.0, 10).unwrap();
        assert!(a.samples().iter().zip(b.samples()).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert_ne!(a, c);
    }
}
