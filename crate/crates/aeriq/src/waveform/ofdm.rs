use super::grid::ResourceGrid;
use super::{OfdmParams, SYMBOLS_PER_SLOT};
use crate::{Error, IqSegment, Result};
use num_complex::Complex64;
use rustfft::FftPlanner;

/// Converts a resource grid to time-domain IQ.
///
/// Each symbol is the unitary inverse DFT of its mapped subcarriers with
/// the cyclic prefix prepended; used subcarriers map to FFT bins around a
/// skipped DC bin. A full 10-subframe grid at the default numerology
/// yields exactly 19200 samples (10 ms at 1.92 Msps).
pub fn ofdm_modulate(grid: &ResourceGrid, params: &OfdmParams) -> Result<IqSegment> {
    params.validate()?;
    if grid.n_subcarriers() != params.n_subcarriers {
        return Err(Error::invalid(format!(
            "grid has {} subcarriers, numerology expects {}",
            grid.n_subcarriers(),
            params.n_subcarriers
        )));
    }

    let n = params.n_fft;
    let scale = 1.0 / (n as f64).sqrt();
    let ifft = FftPlanner::new().plan_fft_inverse(n);
    let mut freq = vec![Complex64::new(0.0, 0.0); n];
    let mut samples = Vec::with_capacity(grid.n_symbols() * (params.cp_len_first + n));

    for column in 0..grid.n_symbols() {
        freq.fill(Complex64::new(0.0, 0.0));
        for (row, &value) in grid.column(column).iter().enumerate() {
            freq[params.fft_bin(row)] = value;
        }
        ifft.process(&mut freq);
        for v in freq.iter_mut() {
            *v *= scale;
        }
        let (_, symbol_in_slot) = grid.slot_and_symbol(column);
        let cp = params.cp_len(symbol_in_slot);
        samples.extend_from_slice(&freq[n - cp..]);
        samples.extend_from_slice(&freq);
    }

    Ok(IqSegment::new(samples, params.sample_rate_hz()))
}

/// Modulates a single symbol column into CP-prefixed time samples.
///
/// `values` holds one entry per used subcarrier. Used by the sync module
/// to build correlation replicas of individual sync symbols.
pub(crate) fn symbol_waveform(
    values: &[Complex64],
    cp_len: usize,
    params: &OfdmParams,
) -> Vec<Complex64> {
    debug_assert_eq!(values.len(), params.n_subcarriers);
    let n = params.n_fft;
    let scale = 1.0 / (n as f64).sqrt();
    let ifft = FftPlanner::new().plan_fft_inverse(n);
    let mut freq = vec![Complex64::new(0.0, 0.0); n];
    for (row, &value) in values.iter().enumerate() {
        freq[params.fft_bin(row)] = value;
    }
    ifft.process(&mut freq);
    for v in freq.iter_mut() {
        *v *= scale;
    }
    let mut out = Vec::with_capacity(cp_len + n);
    out.extend_from_slice(&freq[n - cp_len..]);
    out.extend_from_slice(&freq);
    out
}

/// Demodulates `n_symbols` OFDM symbols starting at `timing`.
///
/// `timing` must point at the first CP sample of a slot boundary so the
/// per-symbol CP lengths line up. Uses the unitary forward DFT, so a
/// modulate/demodulate round trip reproduces grid values exactly.
pub fn ofdm_demodulate(
    x: &[Complex64],
    timing: usize,
    n_symbols: usize,
    params: &OfdmParams,
) -> Result<ResourceGrid> {
    params.validate()?;
    if n_symbols == 0 {
        return Err(Error::invalid("n_symbols must be nonzero"));
    }
    let needed: usize = timing
        + (0..n_symbols)
            .map(|k| params.symbol_len(k % SYMBOLS_PER_SLOT))
            .sum::<usize>();
    if x.len() < needed {
        return Err(Error::TooShort {
            needed,
            have: x.len(),
        });
    }

    let n = params.n_fft;
    let scale = 1.0 / (n as f64).sqrt();
    let fft = FftPlanner::new().plan_fft_forward(n);
    let mut grid = ResourceGrid::new(params.n_subcarriers, n_symbols, 0)?;
    let mut buf = vec![Complex64::new(0.0, 0.0); n];

    let mut pos = timing;
    for column in 0..n_symbols {
        pos += params.cp_len(column % SYMBOLS_PER_SLOT);
        buf.copy_from_slice(&x[pos..pos + n]);
        fft.process(&mut buf);
        pos += n;
        for row in 0..params.n_subcarriers {
            grid.set(row, column, buf[params.fft_bin(row)] * scale);
        }
    }
    Ok(grid)
}
