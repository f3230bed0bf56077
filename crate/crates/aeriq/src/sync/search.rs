use super::cfo::{correct_cfo, estimate_cfo, refine_cfo, CfoEstimate};
use crate::waveform::{
    symbol_waveform, sync_first_row, CellIdentity, OfdmParams, SyncSequence,
};
use crate::{Error, IqSegment, Result};
use num_complex::Complex64;

/// Default reliability threshold (peak-to-median ratio of the PSS
/// correlation profile). Calibrated on 200 seeded noise-only 20 ms
/// segments of the default numerology, whose reliability stayed below
/// 4.92 (99th percentile 4.90); see `noise_reliability_distribution`.
/// Real frames score well above this even at 0 dB SNR.
pub const DEFAULT_DETECTION_THRESHOLD: f64 = 5.0;

/// Lag-search strategy for the combined PSS+SSS stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombinedSearch {
    /// Evaluate every frame-start lag. Exhaustive and mode-independent,
    /// but costs 336 replica correlations over the full span.
    Full,
    /// Evaluate lags within `window` samples of the two frame starts
    /// implied by the PSS peak (one per half-frame hypothesis). This is
    /// the production setting: the PSS stage is reliable well below the
    /// SNRs at which frames are usable, and it cuts the SSS work by
    /// three orders of magnitude on 20 ms segments.
    NearPss { window: usize },
}

impl Default for CombinedSearch {
    fn default() -> Self {
        CombinedSearch::NearPss { window: 32 }
    }
}

/// Which stage produced a sync decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectionMode {
    PssOnly,
    Combined,
}

/// Configuration for [`cell_search`].
#[derive(Debug, Clone)]
pub struct SyncConfig {
    /// Slots of CP correlation averaged for the CFO estimate.
    pub cfo_window_slots: usize,
    /// Reliability threshold on the PSS peak-to-median ratio.
    pub detection_threshold: f64,
    pub search: CombinedSearch,
}

impl Default for SyncConfig {
    fn default() -> Self {
        SyncConfig {
            cfo_window_slots: 20,
            detection_threshold: DEFAULT_DETECTION_THRESHOLD,
            search: CombinedSearch::default(),
        }
    }
}

/// Result of the PSS stage.
#[derive(Debug, Clone)]
pub struct PssDetection {
    /// Lag of the detected PSS symbol (first CP sample).
    pub lag: usize,
    pub n_id2: u8,
    /// Correlation magnitude at the peak.
    pub peak: f64,
    /// Per-root correlation magnitude profiles over all lags.
    pub profiles: [Vec<f64>; 3],
}

/// Result of the combined PSS+SSS stage.
#[derive(Debug, Clone)]
pub struct CombinedDetection {
    /// Detected frame start.
    pub frame_start: usize,
    pub n_id1: u16,
    /// Combined metric at the decision.
    pub peak: f64,
    /// Evaluated frame-start lags (ascending) and the combined metric of
    /// the winning `n_id1` at each of them.
    pub lags: Vec<usize>,
    pub metric: Vec<f64>,
}

/// Full cell-search outcome for one segment.
#[derive(Debug, Clone)]
pub struct SyncResult {
    /// Frame start in samples from the segment start.
    pub timing_offset: usize,
    pub cell: CellIdentity,
    pub cfo: CfoEstimate,
    /// Peak of `metric_profile`.
    pub peak_metric: f64,
    /// Full-span PSS correlation profile of the winning root. The PSS
    /// stage always scans every lag, so its peak-to-median ratio is the
    /// reliability statistic regardless of the combined-stage strategy.
    pub metric_profile: Vec<f64>,
    /// Combined PSS+SSS metric at the final decision.
    pub combined_peak: f64,
    pub detection_mode: DetectionMode,
}

impl SyncResult {
    /// Peak-to-median ratio of the detection profile; compare against
    /// [`SyncConfig::detection_threshold`] to decide whether a frame is
    /// actually present.
    pub fn reliability(&self) -> f64 {
        let med = median(&self.metric_profile);
        if med > 0.0 {
            self.peak_metric / med
        } else {
            f64::INFINITY
        }
    }
}

fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        0.5 * (sorted[mid - 1] + sorted[mid])
    }
}

/// Time-domain replica (CP included) of one sync symbol.
fn sync_replica(seq: &SyncSequence, params: &OfdmParams) -> Result<Vec<Complex64>> {
    let values = seq.values()?;
    let mut column = vec![Complex64::new(0.0, 0.0); params.n_subcarriers];
    let base = sync_first_row(params);
    column[base..base + values.len()].copy_from_slice(&values);
    // Sync symbols sit at slot positions 5 and 6, which carry the short CP.
    Ok(symbol_waveform(&column, params.cp_len_rest, params))
}

#[inline]
fn window_correlation(window: &[Complex64], replica_conj: &[Complex64]) -> f64 {
    let mut re = 0.0;
    let mut im = 0.0;
    for (a, b) in window.iter().zip(replica_conj) {
        re += a.re * b.re - a.im * b.im;
        im += a.re * b.im + a.im * b.re;
    }
    (re * re + im * im).sqrt()
}

/// `|(1/L) sum_n y[m+n] s[n]^*|` for every lag `m`.
fn correlation_profile(y: &[Complex64], replica: &[Complex64]) -> Vec<f64> {
    let l = replica.len();
    let conj: Vec<Complex64> = replica.iter().map(|v| v.conj()).collect();
    let scale = 1.0 / l as f64;
    (0..y.len() + 1 - l)
        .map(|m| window_correlation(&y[m..m + l], &conj) * scale)
        .collect()
}

/// Detects the PSS by time-domain correlation against the three
/// OFDM-modulated (CP included) root replicas.
///
/// Expects CFO-corrected input of at least one frame. Returns the per-root
/// profiles and the best `(lag, n_id2)`; exact ties resolve to the lowest
/// lag, then the lowest root.
pub fn detect_pss(x: &IqSegment, params: &OfdmParams) -> Result<PssDetection> {
    params.validate()?;
    if x.len() < params.frame_len() {
        return Err(Error::TooShort {
            needed: params.frame_len(),
            have: x.len(),
        });
    }

    let profiles: [Vec<f64>; 3] = [
        correlation_profile(&x.samples, &sync_replica(&SyncSequence::Pss { n_id2: 0 }, params)?),
        correlation_profile(&x.samples, &sync_replica(&SyncSequence::Pss { n_id2: 1 }, params)?),
        correlation_profile(&x.samples, &sync_replica(&SyncSequence::Pss { n_id2: 2 }, params)?),
    ];

    let mut best = (f64::NEG_INFINITY, 0usize, 0u8);
    for lag in 0..profiles[0].len() {
        for (root, profile) in profiles.iter().enumerate() {
            if profile[lag] > best.0 {
                best = (profile[lag], lag, root as u8);
            }
        }
    }

    Ok(PssDetection {
        lag: best.1,
        n_id2: best.2,
        peak: best.0,
        profiles,
    })
}

/// Candidate frame-start lags implied by the PSS peak.
///
/// The PSS repeats every half frame, so the peak constrains the frame
/// start only modulo `half_frame_len`; a window is opened around every
/// half-frame alias that intersects the valid span. The SSS part of the
/// combined metric then rejects the aliases where subframes 0 and 5 are
/// swapped.
fn near_pss_lags(
    pss_profile: &[f64],
    span: usize,
    window: usize,
    params: &OfdmParams,
) -> Vec<usize> {
    let mut peak_lag = 0usize;
    let mut peak = f64::NEG_INFINITY;
    for (lag, &v) in pss_profile.iter().enumerate() {
        if v > peak {
            peak = v;
            peak_lag = lag;
        }
    }
    let pss_offset = params.symbol_offset(6) as isize;
    let half = params.half_frame_len() as isize;
    let window = window as isize;
    let mut lags = Vec::new();
    let mut hypothesis = (peak_lag as isize - pss_offset).rem_euclid(half) - half;
    while hypothesis - window < span as isize {
        for m in hypothesis - window..=hypothesis + window {
            if m >= 0 && (m as usize) < span {
                lags.push(m as usize);
            }
        }
        hypothesis += half;
    }
    lags
}

/// Combined PSS+SSS detection for a known `n_id2`.
///
/// For each candidate `n_id1` the metric at frame-start lag `m` sums the
/// PSS correlation and the subframe-0 and subframe-5 SSS correlations at
/// their in-frame offsets; the subframe-5 profile is thereby shifted back
/// by half a frame so all three peaks align at the true frame start,
/// which resolves the half-frame ambiguity. Returns the argmax over
/// `(lag, n_id1)`; ties resolve to the lowest lag, then the lowest
/// `n_id1`.
pub fn detect_combined(
    x: &IqSegment,
    n_id2: u8,
    params: &OfdmParams,
    search: &CombinedSearch,
) -> Result<CombinedDetection> {
    params.validate()?;
    let frame = params.frame_len();
    if x.len() < frame {
        return Err(Error::TooShort {
            needed: frame,
            have: x.len(),
        });
    }
    let span = x.len() - frame + 1;
    let replica_len = params.cp_len_rest + params.n_fft;
    let scale = 1.0 / replica_len as f64;
    let pss_offset = params.symbol_offset(6);
    let sss0_offset = params.symbol_offset(5);
    let sss5_offset = params.half_frame_len() + sss0_offset;

    let pss_profile = correlation_profile(
        &x.samples,
        &sync_replica(&SyncSequence::Pss { n_id2 }, params)?,
    );
    let lags = match *search {
        CombinedSearch::Full => (0..span).collect::<Vec<_>>(),
        CombinedSearch::NearPss { window } => {
            near_pss_lags(&pss_profile, span, window, params)
        }
    };
    if lags.is_empty() {
        return Err(Error::EstimateUnavailable(
            "no candidate frame-start lags in range".into(),
        ));
    }

    let conj_replica = |n_id1: u16, subframe: u8| -> Result<Vec<Complex64>> {
        let rep = sync_replica(
            &SyncSequence::Sss {
                n_id1,
                n_id2,
                subframe,
            },
            params,
        )?;
        Ok(rep.iter().map(|v| v.conj()).collect())
    };

    let mut best: Option<(f64, usize, u16)> = None;
    for n_id1 in 0..168u16 {
        let sss0 = conj_replica(n_id1, 0)?;
        let sss5 = conj_replica(n_id1, 5)?;
        for &m in &lags {
            let metric = pss_profile[m + pss_offset]
                + window_correlation(&x.samples[m + sss0_offset..m + sss0_offset + replica_len], &sss0)
                    * scale
                + window_correlation(&x.samples[m + sss5_offset..m + sss5_offset + replica_len], &sss5)
                    * scale;
            let better = match best {
                None => true,
                Some((b, bm, bn)) => metric > b || (metric == b && (m, n_id1) < (bm, bn)),
            };
            if better {
                best = Some((metric, m, n_id1));
            }
        }
    }
    let (peak, frame_start, n_id1) = best.unwrap();

    // Dense metric of the winning candidate over the evaluated lags.
    let sss0 = conj_replica(n_id1, 0)?;
    let sss5 = conj_replica(n_id1, 5)?;
    let metric: Vec<f64> = lags
        .iter()
        .map(|&m| {
            pss_profile[m + pss_offset]
                + window_correlation(&x.samples[m + sss0_offset..m + sss0_offset + replica_len], &sss0)
                    * scale
                + window_correlation(&x.samples[m + sss5_offset..m + sss5_offset + replica_len], &sss5)
                    * scale
        })
        .collect();

    Ok(CombinedDetection {
        frame_start,
        n_id1,
        peak,
        lags,
        metric,
    })
}

/// Runs the full acquisition chain on one segment:
/// CFO estimation, CFO correction, PSS detection, combined PSS+SSS
/// detection, and cell-identity assembly.
///
/// The returned `timing_offset` is the detected frame start; slicing
/// `frame_len` samples there yields one aligned 10 ms frame of the
/// CFO-corrected signal.
pub fn cell_search(x: &IqSegment, params: &OfdmParams, config: &SyncConfig) -> Result<SyncResult> {
    let coarse = estimate_cfo(x, params, config.cfo_window_slots)?;
    let corrected = correct_cfo(x, &coarse, params);
    let pss = detect_pss(&corrected, params)?;
    let combined = detect_combined(&corrected, pss.n_id2, params, &config.search)?;
    let cell = CellIdentity::from_parts(pss.n_id2, combined.n_id1)?;
    let metric_profile = pss.profiles[pss.n_id2 as usize].clone();

    // Data-aided second stage: anchoring the CP windows at the detected
    // frame boundary removes the small bias a blind slot-phase pick can
    // leave when it lands next to a true CP start.
    let residual = refine_cfo(&corrected, combined.frame_start, params, config.cfo_window_slots)?;
    let cfo = CfoEstimate {
        cfo: coarse.cfo + residual.cfo,
        per_symbol: residual.per_symbol,
        slot_phase: residual.slot_phase,
        timestamp_s: coarse.timestamp_s,
    };

    Ok(SyncResult {
        timing_offset: combined.frame_start,
        cell,
        cfo,
        peak_metric: pss.peak,
        metric_profile,
        combined_peak: combined.peak,
        detection_mode: DetectionMode::Combined,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::impair::{apply_awgn, apply_cfo, apply_delay};
    use crate::waveform::{map_frame, ofdm_modulate};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn frame_with_delay(pci: u16, delay: usize) -> (IqSegment, OfdmParams) {
        let params = OfdmParams::default();
        let cell = CellIdentity::from_pci(pci).unwrap();
        let x = ofdm_modulate(&map_frame(&cell, &params).unwrap(), &params).unwrap();
        let mut delayed = apply_delay(&x, delay);
        // Tail margin so every correlation window near the end is valid.
        delayed
            .samples
            .extend(vec![Complex64::new(0.0, 0.0); 200]);
        (delayed, params)
    }

    #[test]
    fn pss_lag_lands_on_the_pss_symbol() {
        let (x, params) = frame_with_delay(311, 421);
        let det = detect_pss(&x, &params).unwrap();
        assert_eq!(det.n_id2, 2);
        assert_eq!(det.lag, 421 + params.symbol_offset(6));
    }

    #[test]
    fn combined_finds_frame_start_and_group() {
        let (x, params) = frame_with_delay(311, 421);
        let det = detect_combined(&x, 2, &params, &CombinedSearch::Full).unwrap();
        assert_eq!(det.frame_start, 421);
        assert_eq!(det.n_id1, 103);
    }

    #[test]
    fn combined_peak_exceeds_pss_peak() {
        let (x, params) = frame_with_delay(37, 100);
        let pss = detect_pss(&x, &params).unwrap();
        let comb = detect_combined(&x, pss.n_id2, &params, &CombinedSearch::Full).unwrap();
        assert!(comb.peak > pss.peak);
    }

    #[test]
    fn near_pss_matches_full_search_on_clean_signal() {
        let (x, params) = frame_with_delay(449, 777);
        let full = detect_combined(&x, 2, &params, &CombinedSearch::Full).unwrap();
        let near =
            detect_combined(&x, 2, &params, &CombinedSearch::NearPss { window: 32 }).unwrap();
        assert_eq!(full.frame_start, near.frame_start);
        assert_eq!(full.n_id1, near.n_id1);
        assert!((full.peak - near.peak).abs() < 1e-12);
    }

    #[test]
    fn cell_search_closed_loop_is_exact() {
        let params = OfdmParams::default();
        let cell = CellIdentity::from_pci(311).unwrap();
        let clean = ofdm_modulate(&map_frame(&cell, &params).unwrap(), &params).unwrap();
        let mut x = apply_cfo(&apply_delay(&clean, 421), -0.1, &params);
        x.samples.extend(vec![Complex64::new(0.0, 0.0); 200]);

        let result = cell_search(&x, &params, &SyncConfig::default()).unwrap();
        assert_eq!(result.cell.pci(), 311);
        assert_eq!(result.timing_offset, 421);
        assert!((result.cfo.cfo + 0.1).abs() < 1e-6);
        assert_eq!(result.detection_mode, DetectionMode::Combined);
        assert_eq!(
            result.peak_metric,
            result
                .metric_profile
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max)
        );
    }

    #[test]
    fn cfo_stays_exact_when_the_blind_phase_pick_drifts() {
        // On PCI 497 the blind slot-phase metric lands one sample off a
        // CP start; the anchored second stage must still be exact.
        let params = OfdmParams::default();
        let cell = CellIdentity::from_pci(497).unwrap();
        let clean = ofdm_modulate(&map_frame(&cell, &params).unwrap(), &params).unwrap();
        let mut x = apply_cfo(&apply_delay(&clean, 8630), -0.137, &params);
        x.samples.extend(vec![Complex64::new(0.0, 0.0); 200]);

        let result = cell_search(&x, &params, &SyncConfig::default()).unwrap();
        assert_eq!(result.cell.pci(), 497);
        assert_eq!(result.timing_offset, 8630);
        assert!((result.cfo.cfo + 0.137).abs() < 1e-9, "cfo {}", result.cfo.cfo);
    }

    #[test]
    fn detection_is_scale_invariant() {
        let (x, params) = frame_with_delay(17, 300);
        let scaled = x.with_samples(
            x.samples
                .iter()
                .map(|&s| s * Complex64::new(-2.0, 3.0))
                .collect(),
        );
        let a = detect_pss(&x, &params).unwrap();
        let b = detect_pss(&scaled, &params).unwrap();
        assert_eq!(a.lag, b.lag);
        assert_eq!(a.n_id2, b.n_id2);
        let ca = detect_combined(&x, a.n_id2, &params, &CombinedSearch::default()).unwrap();
        let cb = detect_combined(&scaled, b.n_id2, &params, &CombinedSearch::default()).unwrap();
        assert_eq!(ca.frame_start, cb.frame_start);
        assert_eq!(ca.n_id1, cb.n_id1);
    }

    #[test]
    fn survives_noise_at_moderate_snr() {
        let params = OfdmParams::default();
        let cell = CellIdentity::from_pci(135).unwrap();
        let clean = ofdm_modulate(&map_frame(&cell, &params).unwrap(), &params).unwrap();
        let mut x = apply_cfo(&apply_delay(&clean, 640), 0.2, &params);
        x.samples.extend(vec![Complex64::new(0.0, 0.0); 200]);
        let noisy = apply_awgn(&x, 10.0, 99).unwrap();

        let result = cell_search(&noisy, &params, &SyncConfig::default()).unwrap();
        assert_eq!(result.cell.pci(), 135);
        assert_eq!(result.timing_offset, 640);
        assert!((result.cfo.cfo - 0.2).abs() < 0.02);
        assert!(result.reliability() > DEFAULT_DETECTION_THRESHOLD);
    }

    #[test]
    fn pure_noise_reliability_stays_below_threshold() {
        let params = OfdmParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..5 {
            let samples: Vec<Complex64> = (0..2 * params.frame_len())
                .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                .collect();
            let x = IqSegment::new(samples, params.sample_rate_hz());
            let result = cell_search(&x, &params, &SyncConfig::default()).unwrap();
            assert!(
                result.reliability() < DEFAULT_DETECTION_THRESHOLD,
                "noise reliability {}",
                result.reliability()
            );
        }
    }

    /// Prints the noise-only reliability distribution used to pick
    /// `DEFAULT_DETECTION_THRESHOLD`. Run with
    /// `cargo test -p aeriq noise_reliability -- --ignored --nocapture`.
    #[test]
    #[ignore]
    fn noise_reliability_distribution() {
        let params = OfdmParams::default();
        let mut ratios: Vec<f64> = (0..200)
            .map(|seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let samples: Vec<Complex64> = (0..2 * params.frame_len())
                    .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                    .collect();
                let x = IqSegment::new(samples, params.sample_rate_hz());
                cell_search(&x, &params, &SyncConfig::default())
                    .unwrap()
                    .reliability()
            })
            .collect();
        ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for q in [0.50, 0.90, 0.95, 0.99] {
            let idx = ((ratios.len() as f64 * q) as usize).min(ratios.len() - 1);
            println!("q{:>2}: {:.4}", (q * 100.0) as u32, ratios[idx]);
        }
        println!("max: {:.4}", ratios.last().unwrap());
    }

    #[test]
    fn short_input_is_rejected() {
        let params = OfdmParams::default();
        let x = IqSegment::new(vec![Complex64::new(1.0, 0.0); 5000], params.sample_rate_hz());
        assert!(matches!(
            detect_pss(&x, &params),
            Err(Error::TooShort { .. })
        ));
    }

    #[test]
    fn replica_is_cp_plus_fft_samples() {
        let params = OfdmParams::default();
        let rep = sync_replica(&SyncSequence::Pss { n_id2: 0 }, &params).unwrap();
        assert_eq!(rep.len(), 137);
        // CP equals the symbol tail.
        for i in 0..params.cp_len_rest {
            assert!((rep[i] - rep[i + params.n_fft]).norm() < 1e-12);
        }
    }
}
