use crate::{Error, Result};
use num_complex::Complex64;

/// Correlation level defining the coherence bandwidth.
pub const DEFAULT_COHERENCE_THRESHOLD: f64 = 0.9;

/// Reported coherence bandwidth is clipped to the measured band, Hz.
pub const COHERENCE_BANDWIDTH_CLIP_HZ: f64 = 1.08e6;

/// Frequency autocorrelation of a channel response sampled on a uniform
/// subcarrier grid, normalized so lag 0 equals 1.
///
/// Lag `k` averages `H[i] * conj(H[i + k])` over the `M - k` available
/// pairs. A pure delay is a phase ramp and keeps every magnitude at 1;
/// only multipath with two or more taps decorrelates the profile. Lags
/// near the band edge average few pairs and are statistically weak:
/// the magnitude there is only bounded by `M / (M - k)`, so callers
/// should put little weight on lags beyond half the band. Averaging the
/// complex profiles of many channel snapshots before taking magnitudes
/// suppresses this finite-band ripple.
pub fn freq_correlation(h: &[Complex64]) -> Result<Vec<Complex64>> {
    if h.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            have: h.len(),
        });
    }
    let mut profile = Vec::with_capacity(h.len());
    for k in 0..h.len() {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..h.len() - k {
            acc += h[i] * h[i + k].conj();
        }
        profile.push(acc / (h.len() - k) as f64);
    }
    let r0 = profile[0].re;
    if r0 <= 0.0 {
        return Err(Error::EstimateUnavailable(
            "zero-power channel response has no correlation profile".into(),
        ));
    }
    for v in &mut profile {
        *v /= r0;
    }
    Ok(profile)
}

/// Bandwidth at which a correlation-magnitude profile first drops below
/// the threshold, with linear interpolation between grid points.
///
/// The result is clipped to [`COHERENCE_BANDWIDTH_CLIP_HZ`]; a profile
/// that never crosses reports the clip itself.
pub fn bandwidth_from_profile(profile: &[f64], spacing_hz: f64, threshold: f64) -> Result<f64> {
    if profile.is_empty() {
        return Err(Error::TooShort { needed: 1, have: 0 });
    }
    if !(spacing_hz > 0.0) {
        return Err(Error::invalid("subcarrier spacing must be positive"));
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::invalid(format!(
            "coherence threshold must lie in (0, 1), got {threshold}"
        )));
    }
    for k in 1..profile.len() {
        if profile[k] < threshold {
            let prev = profile[k - 1];
            let frac = (prev - threshold) / (prev - profile[k]);
            let crossing = ((k - 1) as f64 + frac) * spacing_hz;
            return Ok(crossing.min(COHERENCE_BANDWIDTH_CLIP_HZ));
        }
    }
    Ok(COHERENCE_BANDWIDTH_CLIP_HZ)
}

/// Coherence bandwidth of a channel frequency response.
pub fn coherence_bandwidth(h: &[Complex64], spacing_hz: f64, threshold: f64) -> Result<f64> {
    let magnitudes: Vec<f64> = freq_correlation(h)?.iter().map(|v| v.norm()).collect();
    bandwidth_from_profile(&magnitudes, spacing_hz, threshold)
}

/// Centered moving average; windows shrink one-sidedly at the edges.
///
/// Even windows take one more trailing than leading sample.
pub fn moving_average(x: &[f64], window: usize) -> Vec<f64> {
    if window <= 1 || x.is_empty() {
        return x.to_vec();
    }
    let half_lo = (window - 1) / 2;
    let half_hi = window / 2;
    (0..x.len())
        .map(|i| {
            let lo = i.saturating_sub(half_lo);
            let hi = (i + half_hi + 1).min(x.len());
            x[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}
