//! Pilot-based channel estimation and RSRP.
//!
//! CRS resource elements are extracted from a frame-aligned grid, the
//! channel is estimated at each pilot by least squares and interpolated to
//! the full grid, and RSRP is the average linear power over the pilots.

use crate::numerics::CubicSpline;
use crate::waveform::{gen_crs, CellIdentity, OfdmParams, ResourceGrid, CRS_SYMBOLS};
use crate::{Error, Result};
use num_complex::Complex64;

/// One CRS resource element paired with its regenerated reference value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PilotObservation {
    pub subcarrier: usize,
    /// Grid column of the observation.
    pub symbol: usize,
    pub received: Complex64,
    /// Known transmitted value; unit modulus by construction.
    pub reference: Complex64,
}

/// Channel value at one pilot position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PilotEstimate {
    pub subcarrier: usize,
    pub symbol: usize,
    pub h: Complex64,
}

/// Channel response over a full grid.
#[derive(Debug, Clone)]
pub struct ChannelEstimate {
    n_subcarriers: usize,
    n_symbols: usize,
    /// Symbol-major response values.
    h: Vec<Complex64>,
    /// True where the value is a measured pilot rather than interpolated.
    pilot_mask: Vec<bool>,
    /// Set when a pilot symbol had too few pilots for cubic interpolation
    /// and linear interpolation was used instead.
    pub linear_fallback: bool,
    pub frame_timestamp_s: f64,
}

impl ChannelEstimate {
    pub fn n_subcarriers(&self) -> usize {
        self.n_subcarriers
    }

    pub fn n_symbols(&self) -> usize {
        self.n_symbols
    }

    pub fn at(&self, subcarrier: usize, symbol: usize) -> Complex64 {
        self.h[symbol * self.n_subcarriers + subcarrier]
    }

    pub fn is_pilot(&self, subcarrier: usize, symbol: usize) -> bool {
        self.pilot_mask[symbol * self.n_subcarriers + subcarrier]
    }

    /// Response of one symbol over all subcarriers.
    pub fn symbol_response(&self, symbol: usize) -> &[Complex64] {
        let start = symbol * self.n_subcarriers;
        &self.h[start..start + self.n_subcarriers]
    }

    /// Response averaged over all symbols, one value per subcarrier.
    ///
    /// This is the per-frame frequency response consumed by the
    /// coherence-bandwidth analytics.
    pub fn mean_frequency_response(&self) -> Vec<Complex64> {
        let mut acc = vec![Complex64::new(0.0, 0.0); self.n_subcarriers];
        for symbol in 0..self.n_symbols {
            for (a, &v) in acc.iter_mut().zip(self.symbol_response(symbol)) {
                *a += v;
            }
        }
        let scale = 1.0 / self.n_symbols as f64;
        for a in acc.iter_mut() {
            *a *= scale;
        }
        acc
    }
}

/// Average power over CRS resource elements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RsrpSample {
    /// Mean `|received|^2` over the pilot resource elements.
    pub rsrp_linear: f64,
    /// `10 log10(rsrp_linear) + calibration_offset_db`. Relative unless a
    /// front-end calibration offset is supplied.
    pub rsrp_dbm: f64,
    pub timestamp_s: f64,
}

/// Pairs every CRS resource element in the grid with its reference value.
///
/// The grid must be frame-aligned (column 0 at a slot boundary) with its
/// `first_subframe` set accordingly. One full frame yields 480
/// observations at the default numerology: 12 pilots times 2 symbols per
/// slot times 20 slots.
pub fn extract_crs(
    grid: &ResourceGrid,
    cell: &CellIdentity,
    params: &OfdmParams,
) -> Result<Vec<PilotObservation>> {
    params.validate()?;
    if grid.n_subcarriers() != params.n_subcarriers {
        return Err(Error::invalid(format!(
            "grid has {} subcarriers, numerology expects {}",
            grid.n_subcarriers(),
            params.n_subcarriers
        )));
    }
    let n_rb = params.resource_blocks();
    let mut obs = Vec::new();
    for column in 0..grid.n_symbols() {
        let (slot, symbol_in_slot) = grid.slot_and_symbol(column);
        if !CRS_SYMBOLS.contains(&symbol_in_slot) {
            continue;
        }
        for pilot in gen_crs(cell, slot, symbol_in_slot, n_rb)? {
            obs.push(PilotObservation {
                subcarrier: pilot.subcarrier,
                symbol: column,
                received: grid.at(pilot.subcarrier, column),
                reference: pilot.value,
            });
        }
    }
    Ok(obs)
}

/// Least-squares channel estimate at each pilot: `h = received / reference`.
pub fn ls_estimate(obs: &[PilotObservation]) -> Result<Vec<PilotEstimate>> {
    obs.iter()
        .map(|o| {
            if o.reference.norm_sqr() == 0.0 {
                return Err(Error::invalid(format!(
                    "zero reference at subcarrier {} symbol {}",
                    o.subcarrier, o.symbol
                )));
            }
            Ok(PilotEstimate {
                subcarrier: o.subcarrier,
                symbol: o.symbol,
                h: o.received / o.reference,
            })
        })
        .collect()
}

/// Interpolates pilot estimates to a full grid response.
///
/// Within each pilot-bearing symbol the response is cubic-spline
/// interpolated along the physical frequency axis (signed subcarrier
/// offset, so the skipped DC bin is accounted for), real and imaginary
/// parts separately, with the boundary polynomial extended beyond the
/// outermost pilots. Between pilot symbols the per-subcarrier response is
/// linearly interpolated in time and clamped before the first and after
/// the last pilot symbol. Symbols with fewer than four pilots fall back
/// to linear frequency interpolation and set
/// [`ChannelEstimate::linear_fallback`].
pub fn interpolate_channel(
    pilots: &[PilotEstimate],
    params: &OfdmParams,
    n_symbols: usize,
) -> Result<ChannelEstimate> {
    params.validate()?;
    let n_subcarriers = params.n_subcarriers;
    if pilots.is_empty() {
        return Err(Error::EstimateUnavailable("no pilot estimates".into()));
    }
    for p in pilots {
        if p.subcarrier >= n_subcarriers || p.symbol >= n_symbols {
            return Err(Error::invalid(format!(
                "pilot at ({}, {}) outside a {}x{} grid",
                p.subcarrier, p.symbol, n_subcarriers, n_symbols
            )));
        }
    }

    // Frequency interpolation per pilot-bearing symbol.
    let mut pilot_symbols: Vec<usize> = pilots.iter().map(|p| p.symbol).collect();
    pilot_symbols.sort_unstable();
    pilot_symbols.dedup();

    let mut linear_fallback = false;
    let mut profiles: Vec<(usize, Vec<Complex64>)> = Vec::with_capacity(pilot_symbols.len());
    for &symbol in &pilot_symbols {
        let mut in_symbol: Vec<&PilotEstimate> =
            pilots.iter().filter(|p| p.symbol == symbol).collect();
        in_symbol.sort_by_key(|p| p.subcarrier);
        in_symbol.dedup_by_key(|p| p.subcarrier);
        let xs: Vec<f64> = in_symbol
            .iter()
            .map(|p| params.subcarrier_offset(p.subcarrier) as f64)
            .collect();
        let profile = if in_symbol.len() >= 4 {
            let re = CubicSpline::new(&xs, &in_symbol.iter().map(|p| p.h.re).collect::<Vec<_>>())?;
            let im = CubicSpline::new(&xs, &in_symbol.iter().map(|p| p.h.im).collect::<Vec<_>>())?;
            (0..n_subcarriers)
                .map(|row| {
                    let x = params.subcarrier_offset(row) as f64;
                    Complex64::new(re.eval(x), im.eval(x))
                })
                .collect()
        } else {
            linear_fallback = true;
            (0..n_subcarriers)
                .map(|row| linear_interp(&in_symbol, &xs, params.subcarrier_offset(row) as f64))
                .collect()
        };
        profiles.push((symbol, profile));
    }

    // Time interpolation between pilot symbols, clamped at the ends.
    let mut h = vec![Complex64::new(0.0, 0.0); n_subcarriers * n_symbols];
    for symbol in 0..n_symbols {
        let idx = profiles.partition_point(|(s, _)| *s <= symbol);
        let column = match (idx.checked_sub(1).map(|i| &profiles[i]), profiles.get(idx)) {
            (Some((s, profile)), _) if *s == symbol => profile.clone(),
            (None, Some((_, first))) => first.clone(),
            (Some((_, last)), None) => last.clone(),
            (Some((s0, p0)), Some((s1, p1))) => {
                let w = (symbol - s0) as f64 / (s1 - s0) as f64;
                p0.iter().zip(p1).map(|(&a, &b)| a + (b - a) * w).collect()
            }
            (None, None) => unreachable!("profiles is nonempty"),
        };
        h[symbol * n_subcarriers..(symbol + 1) * n_subcarriers].copy_from_slice(&column);
    }

    // Pilot positions carry the measured values exactly.
    let mut pilot_mask = vec![false; n_subcarriers * n_symbols];
    for p in pilots {
        let idx = p.symbol * n_subcarriers + p.subcarrier;
        h[idx] = p.h;
        pilot_mask[idx] = true;
    }

    Ok(ChannelEstimate {
        n_subcarriers,
        n_symbols,
        h,
        pilot_mask,
        linear_fallback,
        frame_timestamp_s: 0.0,
    })
}

fn linear_interp(pilots: &[&PilotEstimate], xs: &[f64], x: f64) -> Complex64 {
    match pilots {
        [] => Complex64::new(0.0, 0.0),
        [only] => only.h,
        _ => {
            let idx = xs.partition_point(|&p| p <= x).clamp(1, pilots.len() - 1);
            let (a, b) = (pilots[idx - 1], pilots[idx]);
            let w = (x - xs[idx - 1]) / (xs[idx] - xs[idx - 1]);
            a.h + (b.h - a.h) * w
        }
    }
}

/// RSRP over a set of CRS observations.
///
/// References are unit power, so the mean received power over pilot
/// resource elements is the reference-signal power itself. The offset
/// calibrates the relative digital scale to absolute dBm; 0 keeps the
/// value relative.
pub fn compute_rsrp(obs: &[PilotObservation], calibration_offset_db: f64) -> Result<RsrpSample> {
    if obs.is_empty() {
        return Err(Error::EstimateUnavailable("no CRS observations".into()));
    }
    let rsrp_linear =
        obs.iter().map(|o| o.received.norm_sqr()).sum::<f64>() / obs.len() as f64;
    Ok(RsrpSample {
        rsrp_linear,
        rsrp_dbm: 10.0 * rsrp_linear.log10() + calibration_offset_db,
        timestamp_s: 0.0,
    })
}

/// Convenience chain for one frame-aligned grid: extract, estimate,
/// interpolate, and compute RSRP.
pub fn estimate_frame(
    grid: &ResourceGrid,
    cell: &CellIdentity,
    params: &OfdmParams,
    calibration_offset_db: f64,
) -> Result<(ChannelEstimate, RsrpSample)> {
    let obs = extract_crs(grid, cell, params)?;
    let rsrp = compute_rsrp(&obs, calibration_offset_db)?;
    let pilots = ls_estimate(&obs)?;
    let estimate = interpolate_channel(&pilots, params, grid.n_symbols())?;
    Ok((estimate, rsrp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::impair::{apply_awgn, apply_multipath, MultipathTap};
    use crate::waveform::{map_frame, ofdm_demodulate, ofdm_modulate};
    use approx::assert_relative_eq;

    fn demod_frame(pci: u16) -> (ResourceGrid, CellIdentity, OfdmParams) {
        let params = OfdmParams::default();
        let cell = CellIdentity::from_pci(pci).unwrap();
        let x = ofdm_modulate(&map_frame(&cell, &params).unwrap(), &params).unwrap();
        let grid = ofdm_demodulate(&x.samples, 0, 140, &params).unwrap();
        (grid, cell, params)
    }

    /// Frequency response of an integer-delay tap set at a grid row.
    fn tap_response(taps: &[MultipathTap], row: usize, params: &OfdmParams) -> Complex64 {
        taps.iter()
            .map(|t| {
                let phase = -2.0 * std::f64::consts::PI * t.delay_samples as f64
                    * params.fft_bin(row) as f64
                    / params.n_fft as f64;
                t.gain() * Complex64::from_polar(1.0, phase)
            })
            .sum()
    }

    #[test]
    fn clean_frame_observations_match_references() {
        let (grid, cell, params) = demod_frame(311);
        let obs = extract_crs(&grid, &cell, &params).unwrap();
        assert_eq!(obs.len(), 480);
        for o in &obs {
            assert_relative_eq!(o.received.re, o.reference.re, epsilon = 1e-12);
            assert_relative_eq!(o.received.im, o.reference.im, epsilon = 1e-12);
        }
    }

    #[test]
    fn observation_count_per_subframe_is_48() {
        let (grid, cell, params) = demod_frame(0);
        let obs = extract_crs(&grid, &cell, &params).unwrap();
        let in_subframe0 = obs.iter().filter(|o| o.symbol < 14).count();
        assert_eq!(in_subframe0, 48);
    }

    #[test]
    fn wrong_pci_breaks_the_flat_ratio() {
        let (grid, _, params) = demod_frame(100);
        let wrong = CellIdentity::from_pci(101).unwrap();
        let obs = extract_crs(&grid, &wrong, &params).unwrap();
        let mean_err = obs
            .iter()
            .map(|o| (o.received / o.reference - Complex64::new(1.0, 0.0)).norm())
            .sum::<f64>()
            / obs.len() as f64;
        assert!(mean_err > 0.5, "mean deviation {mean_err}");
    }

    #[test]
    fn ls_is_exact_division() {
        let obs = [PilotObservation {
            subcarrier: 3,
            symbol: 0,
            received: Complex64::new(2.0, 0.0) * Complex64::from_polar(1.0, 0.4),
            reference: Complex64::from_polar(1.0, 0.4),
        }];
        let est = ls_estimate(&obs).unwrap();
        assert_relative_eq!(est[0].h.re, 2.0, epsilon = 1e-12);
        assert_relative_eq!(est[0].h.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn ls_rejects_zero_reference() {
        let obs = [PilotObservation {
            subcarrier: 0,
            symbol: 0,
            received: Complex64::new(1.0, 0.0),
            reference: Complex64::new(0.0, 0.0),
        }];
        assert!(ls_estimate(&obs).is_err());
    }

    #[test]
    fn two_tap_channel_matches_analytic_response_at_pilots() {
        let params = OfdmParams::default();
        let cell = CellIdentity::from_pci(37).unwrap();
        let x = ofdm_modulate(&map_frame(&cell, &params).unwrap(), &params).unwrap();
        let taps = [
            MultipathTap::new(0, Complex64::new(1.0, 0.0)),
            MultipathTap::new(4, Complex64::new(0.35, -0.2)),
        ];
        let y = apply_multipath(&x, &taps).unwrap();
        let grid = ofdm_demodulate(&y.samples, 0, 140, &params).unwrap();
        let pilots = ls_estimate(&extract_crs(&grid, &cell, &params).unwrap()).unwrap();
        for p in &pilots {
            let truth = tap_response(&taps, p.subcarrier, &params);
            assert!((p.h - truth).norm() < 1e-9, "row {}", p.subcarrier);
        }
    }

    #[test]
    fn interpolation_reproduces_flat_and_linear_channels() {
        let params = OfdmParams::default();
        let c = Complex64::new(0.8, -0.3);
        let flat: Vec<PilotEstimate> = (0..12)
            .map(|i| PilotEstimate {
                subcarrier: i * 6,
                symbol: 0,
                h: c,
            })
            .collect();
        let est = interpolate_channel(&flat, &params, 14).unwrap();
        for row in 0..72 {
            for sym in 0..14 {
                assert!((est.at(row, sym) - c).norm() < 1e-12);
            }
        }

        // Linear in physical frequency, including across the DC gap.
        let slope = |row: usize| {
            let f = params.subcarrier_offset(row) as f64;
            Complex64::new(0.02 * f, -0.01 * f)
        };
        let sloped: Vec<PilotEstimate> = (0..12)
            .map(|i| PilotEstimate {
                subcarrier: i * 6 + 1,
                symbol: 0,
                h: slope(i * 6 + 1),
            })
            .collect();
        let est = interpolate_channel(&sloped, &params, 1).unwrap();
        for row in 0..72 {
            let truth = slope(row);
            assert!(
                (est.at(row, 0) - truth).norm() < 1e-10,
                "row {row} {} vs {truth}",
                est.at(row, 0)
            );
        }
        assert!(!est.linear_fallback);
    }

    #[test]
    fn two_tap_interpolation_error_is_small_at_interior_rows() {
        let params = OfdmParams::default();
        let cell = CellIdentity::from_pci(200).unwrap();
        let x = ofdm_modulate(&map_frame(&cell, &params).unwrap(), &params).unwrap();
        // Pilots sample the response every 6 subcarriers, so a tap at
        // delay d gives 128/(6d) pilots per response cycle: comfortable
        // at d <= 4, approaching Nyquist by d = 8.
        for (delay, bound) in [(2usize, 0.05), (4, 0.05), (6, 0.10)] {
            let taps = [
                MultipathTap::new(0, Complex64::new(1.0, 0.0)),
                MultipathTap::new(delay, Complex64::new(0.0, 0.45)),
            ];
            let y = apply_multipath(&x, &taps).unwrap();
            let grid = ofdm_demodulate(&y.samples, 0, 140, &params).unwrap();
            let pilots = ls_estimate(&extract_crs(&grid, &cell, &params).unwrap()).unwrap();
            let est = interpolate_channel(&pilots, &params, 140).unwrap();

            let first = pilots.iter().map(|p| p.subcarrier).min().unwrap();
            let last = pilots.iter().map(|p| p.subcarrier).max().unwrap();
            let mut err = 0.0;
            let mut power = 0.0;
            for row in first..=last {
                for sym in 0..140 {
                    let truth = tap_response(&taps, row, &params);
                    err += (est.at(row, sym) - truth).norm_sqr();
                    power += truth.norm_sqr();
                }
            }
            let rms = (err / power).sqrt();
            assert!(rms < bound, "delay {delay}: interior RMS error {rms}");
        }
    }

    #[test]
    fn few_pilots_fall_back_to_linear() {
        let params = OfdmParams::default();
        let pilots: Vec<PilotEstimate> = (0..3)
            .map(|i| PilotEstimate {
                subcarrier: i * 30,
                symbol: 0,
                h: Complex64::new(1.0 + i as f64, 0.0),
            })
            .collect();
        let est = interpolate_channel(&pilots, &params, 1).unwrap();
        assert!(est.linear_fallback);
        // Row 15 sits midway between the pilots at rows 0 and 30 on the
        // physical axis (all on the same side of DC).
        assert!((est.at(15, 0) - Complex64::new(1.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn pilot_mask_marks_measured_positions() {
        let (grid, cell, params) = demod_frame(42);
        let pilots = ls_estimate(&extract_crs(&grid, &cell, &params).unwrap()).unwrap();
        let est = interpolate_channel(&pilots, &params, 140).unwrap();
        let marked = (0..72)
            .flat_map(|r| (0..140).map(move |s| (r, s)))
            .filter(|&(r, s)| est.is_pilot(r, s))
            .count();
        assert_eq!(marked, 480);
        for p in &pilots {
            assert_eq!(est.at(p.subcarrier, p.symbol), p.h);
        }
    }

    #[test]
    fn rsrp_of_unit_magnitude_pilots_is_the_offset() {
        let obs: Vec<PilotObservation> = (0..10)
            .map(|i| PilotObservation {
                subcarrier: i,
                symbol: 0,
                received: Complex64::from_polar(1.0, i as f64),
                reference: Complex64::new(1.0, 0.0),
            })
            .collect();
        let rsrp = compute_rsrp(&obs, -30.0).unwrap();
        assert_relative_eq!(rsrp.rsrp_linear, 1.0, epsilon = 1e-12);
        assert_relative_eq!(rsrp.rsrp_dbm, -30.0, epsilon = 1e-9);
    }

    #[test]
    fn doubling_amplitude_adds_six_db() {
        let (grid, cell, params) = demod_frame(77);
        let obs = extract_crs(&grid, &cell, &params).unwrap();
        let doubled: Vec<PilotObservation> = obs
            .iter()
            .map(|o| PilotObservation {
                received: o.received * 2.0,
                ..*o
            })
            .collect();
        let base = compute_rsrp(&obs, 0.0).unwrap();
        let up = compute_rsrp(&doubled, 0.0).unwrap();
        assert!((up.rsrp_dbm - base.rsrp_dbm - 6.0206).abs() < 0.01);
    }

    #[test]
    fn rsrp_ignores_common_phase() {
        let (grid, cell, params) = demod_frame(9);
        let obs = extract_crs(&grid, &cell, &params).unwrap();
        let rotated: Vec<PilotObservation> = obs
            .iter()
            .map(|o| PilotObservation {
                received: o.received * Complex64::from_polar(1.0, 1.234),
                ..*o
            })
            .collect();
        let a = compute_rsrp(&obs, 0.0).unwrap();
        let b = compute_rsrp(&rotated, 0.0).unwrap();
        assert_relative_eq!(a.rsrp_linear, b.rsrp_linear, epsilon = 1e-12);
    }

    #[test]
    fn noisy_rsrp_matches_signal_plus_noise_power_in_expectation() {
        let params = OfdmParams::default();
        let cell = CellIdentity::from_pci(150).unwrap();
        let x = ofdm_modulate(&map_frame(&cell, &params).unwrap(), &params).unwrap();
        let clean_grid = ofdm_demodulate(&x.samples, 0, 140, &params).unwrap();
        let clean_obs = extract_crs(&clean_grid, &cell, &params).unwrap();
        let clean = compute_rsrp(&clean_obs, 0.0).unwrap();

        let snr_db = 10.0;
        // AWGN power is set relative to the mean power of the occupied
        // samples, and the unitary FFT preserves per-sample noise power.
        let noise_power = x.mean_power_nonzero() * 10f64.powf(-snr_db / 10.0);
        let expected = 10.0 * (clean.rsrp_linear + noise_power).log10();

        let mut acc = 0.0;
        let trials = 100;
        for seed in 0..trials {
            let y = apply_awgn(&x, snr_db, seed).unwrap();
            let grid = ofdm_demodulate(&y.samples, 0, 140, &params).unwrap();
            let obs = extract_crs(&grid, &cell, &params).unwrap();
            acc += compute_rsrp(&obs, 0.0).unwrap().rsrp_linear;
        }
        let mean_dbm = 10.0 * (acc / trials as f64).log10();
        assert!(
            (mean_dbm - expected).abs() < 0.5,
            "mean {mean_dbm} vs expected {expected}"
        );
    }

    #[test]
    fn estimate_frame_runs_the_full_chain() {
        let (grid, cell, params) = demod_frame(483);
        let (est, rsrp) = estimate_frame(&grid, &cell, &params, 0.0).unwrap();
        assert_eq!(est.n_subcarriers(), 72);
        assert_eq!(est.n_symbols(), 140);
        assert!(!est.linear_fallback);
        assert_relative_eq!(rsrp.rsrp_linear, 1.0, epsilon = 1e-9);
        // Flat unity channel: the mean response is one everywhere.
        for v in est.mean_frequency_response() {
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-9);
        }
    }
}
