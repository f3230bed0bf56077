use super::SYNC_SEQ_LEN;
use crate::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Zadoff-Chu roots indexed by `n_id2`.
const PSS_ROOTS: [u32; 3] = [25, 29, 34];

/// Generates the 62-element primary synchronization sequence.
///
/// The sequence is a length-63 Zadoff-Chu sequence with the DC-coincident
/// middle element punctured:
/// `d_u(n) = exp(-j pi u n (n+1) / 63)` for `n = 0..=30` and
/// `d_u(n) = exp(-j pi u (n+1)(n+2) / 63)` for `n = 31..=61`.
pub fn gen_pss(n_id2: u8) -> Result<[Complex64; SYNC_SEQ_LEN]> {
    let root = *PSS_ROOTS
        .get(n_id2 as usize)
        .ok_or_else(|| Error::invalid(format!("n_id2 {} out of 0..=2", n_id2)))?;
    let mut d = [Complex64::new(0.0, 0.0); SYNC_SEQ_LEN];
    for (n, value) in d.iter_mut().enumerate() {
        let m = if n < 31 {
            (n * (n + 1)) as f64
        } else {
            ((n + 1) * (n + 2)) as f64
        };
        let phase = -PI * root as f64 * m / 63.0;
        *value = Complex64::from_polar(1.0, phase);
    }
    Ok(d)
}
