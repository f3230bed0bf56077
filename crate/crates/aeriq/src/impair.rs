//! Channel and front-end impairment simulator.
//!
//! All impairments are deterministic given their arguments; AWGN draws
//! from a ChaCha-seeded generator so that a given `(signal, spec, seed)`
//! always produces the same output.

use crate::waveform::OfdmParams;
use crate::{Error, IqSegment, Result};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// One multipath tap: integer sample delay and complex gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultipathTap {
    pub delay_samples: usize,
    pub gain_re: f64,
    pub gain_im: f64,
}

impl MultipathTap {
    pub fn new(delay_samples: usize, gain: Complex64) -> Self {
        MultipathTap {
            delay_samples,
            gain_re: gain.re,
            gain_im: gain.im,
        }
    }

    pub fn gain(&self) -> Complex64 {
        Complex64::new(self.gain_re, self.gain_im)
    }
}

/// Declarative description of an impairment chain.
///
/// Applied in a fixed order: delay, multipath, CFO, then AWGN. `snr_db =
/// f64::INFINITY` (serialized as a missing field) disables the noise
/// stage. The CFO is expressed as a fraction of the subcarrier spacing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpairmentSpec {
    #[serde(default)]
    pub cfo: f64,
    #[serde(default)]
    pub delay_samples: usize,
    #[serde(default)]
    pub taps: Vec<MultipathTap>,
    #[serde(default = "default_snr")]
    pub snr_db: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_snr() -> f64 {
    f64::INFINITY
}

impl Default for ImpairmentSpec {
    fn default() -> Self {
        ImpairmentSpec {
            cfo: 0.0,
            delay_samples: 0,
            taps: Vec::new(),
            snr_db: f64::INFINITY,
            seed: 0,
        }
    }
}

impl ImpairmentSpec {
    /// Runs the full impairment chain on a segment.
    pub fn apply(&self, x: &IqSegment, params: &OfdmParams) -> Result<IqSegment> {
        let mut out = apply_delay(x, self.delay_samples);
        if !self.taps.is_empty() {
            out = apply_multipath(&out, &self.taps)?;
        }
        out = apply_cfo(&out, self.cfo, params);
        if self.snr_db.is_finite() {
            out = apply_awgn(&out, self.snr_db, self.seed)?;
        }
        Ok(out)
    }
}

/// Applies a carrier frequency offset of `cfo` subcarrier spacings:
/// `y[n] = x[n] * exp(j 2 pi n cfo / n_fft)`.
///
/// Sample index `n` counts from the start of the segment, so composing
/// with a delay in either order differs only by a constant phase on the
/// payload; magnitude-based metrics are unaffected.
pub fn apply_cfo(x: &IqSegment, cfo: f64, params: &OfdmParams) -> IqSegment {
    let step = TAU * cfo / params.n_fft as f64;
    let samples = x
        .samples
        .iter()
        .enumerate()
        .map(|(n, &s)| s * Complex64::from_polar(1.0, step * n as f64))
        .collect();
    x.with_samples(samples)
}

/// Delays the signal by a whole number of samples (zero prepend).
pub fn apply_delay(x: &IqSegment, delay_samples: usize) -> IqSegment {
    let mut samples = vec![Complex64::new(0.0, 0.0); delay_samples + x.len()];
    samples[delay_samples..].copy_from_slice(&x.samples);
    x.with_samples(samples)
}

/// Convolves the signal with a sparse tapped delay line.
///
/// Output length grows by the maximum tap delay so no energy is cut off.
pub fn apply_multipath(x: &IqSegment, taps: &[MultipathTap]) -> Result<IqSegment> {
    if taps.is_empty() {
        return Err(Error::invalid("multipath needs at least one tap"));
    }
    let max_delay = taps.iter().map(|t| t.delay_samples).max().unwrap();
    let mut samples = vec![Complex64::new(0.0, 0.0); x.len() + max_delay];
    for tap in taps {
        let gain = tap.gain();
        for (n, &s) in x.samples.iter().enumerate() {
            samples[n + tap.delay_samples] += gain * s;
        }
    }
    Ok(x.with_samples(samples))
}

/// Adds circularly-symmetric complex Gaussian noise at the requested SNR.
///
/// Signal power is referenced to the mean power of the strictly nonzero
/// samples, so leading delay padding and empty symbols do not dilute the
/// requested operating point. Noise is added to every sample.
pub fn apply_awgn(x: &IqSegment, snr_db: f64, seed: u64) -> Result<IqSegment> {
    if !snr_db.is_finite() {
        return Ok(x.clone());
    }
    let signal_power = x.mean_power_nonzero();
    if signal_power <= 0.0 {
        return Err(Error::invalid("cannot set an SNR on an all-zero signal"));
    }
    let noise_power = signal_power / 10f64.powf(snr_db / 10.0);
    let sigma = (noise_power / 2.0).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = x
        .samples
        .iter()
        .map(|&s| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            s + Complex64::new(re * sigma, im * sigma)
        })
        .collect();
    Ok(x.with_samples(samples))
}
