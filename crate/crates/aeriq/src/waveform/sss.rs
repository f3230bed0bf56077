use super::SYNC_SEQ_LEN;
use crate::{Error, Result};
use num_complex::Complex64;

/// Generates a 31-element +/-1 m-sequence from the given feedback taps.
///
/// The underlying binary register satisfies
/// `x(i+5) = sum_{t in taps} x(i+t) mod 2` with initial state
/// `x(0..5) = (0, 0, 0, 0, 1)`; output elements are `1 - 2 x(i)`.
fn mseq(taps: &[usize]) -> [i8; 31] {
    let mut x = [0u8; 31];
    x[4] = 1;
    for i in 0..26 {
        let mut v = 0u8;
        for &t in taps {
            v ^= x[i + t];
        }
        x[i + 5] = v;
    }
    let mut out = [0i8; 31];
    for (o, &bit) in out.iter_mut().zip(x.iter()) {
        *o = 1 - 2 * bit as i8;
    }
    out
}

/// Indices (m0, m1) of the two cyclic shifts encoding `n_id1`.
fn shift_pair(n_id1: u16) -> (usize, usize) {
    let n = n_id1 as usize;
    let q_prime = n / 30;
    let q = (n + q_prime * (q_prime + 1) / 2) / 30;
    let m_prime = n + q * (q + 1) / 2;
    let m0 = m_prime % 31;
    let m1 = (m0 + m_prime / 31 + 1) % 31;
    (m0, m1)
}

/// Generates the 62-element secondary synchronization sequence.
///
/// Two length-31 m-sequences, cyclically shifted by indices derived from
/// `n_id1` and scrambled by `n_id2`-dependent sequences, are interleaved
/// onto even/odd positions. The shift roles swap between subframe 0 and
/// subframe 5, which is what makes half-frame timing resolvable.
pub fn gen_sss(n_id1: u16, n_id2: u8, subframe: u8) -> Result<[Complex64; SYNC_SEQ_LEN]> {
    if n_id1 > 167 {
        return Err(Error::invalid(format!("n_id1 {} out of 0..=167", n_id1)));
    }
    if n_id2 > 2 {
        return Err(Error::invalid(format!("n_id2 {} out of 0..=2", n_id2)));
    }
    if subframe != 0 && subframe != 5 {
        return Err(Error::invalid(format!(
            "SSS is transmitted in subframe 0 or 5, got {}",
            subframe
        )));
    }

    let s_tilde = mseq(&[0, 2]);
    let c_tilde = mseq(&[0, 3]);
    let z_tilde = mseq(&[0, 1, 2, 4]);
    let (m0, m1) = shift_pair(n_id1);
    let n2 = n_id2 as usize;

    let mut d = [Complex64::new(0.0, 0.0); SYNC_SEQ_LEN];
    for n in 0..31 {
        let s_m0 = s_tilde[(n + m0) % 31];
        let s_m1 = s_tilde[(n + m1) % 31];
        let c0 = c_tilde[(n + n2) % 31];
        let c1 = c_tilde[(n + n2 + 3) % 31];
        let z_m0 = z_tilde[(n + (m0 % 8)) % 31];
        let z_m1 = z_tilde[(n + (m1 % 8)) % 31];
        let (even, odd) = if subframe == 0 {
            (s_m0 * c0, s_m1 * c1 * z_m0)
        } else {
            (s_m1 * c0, s_m0 * c1 * z_m1)
        };
        d[2 * n] = Complex64::new(even as f64, 0.0);
        d[2 * n + 1] = Complex64::new(odd as f64, 0.0);
    }
    Ok(d)
}
