use super::{CellIdentity, SLOTS_PER_FRAME};
use crate::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::FRAC_1_SQRT_2;

/// Widest LTE bandwidth in resource blocks; the reference-signal sequence
/// is always generated for this width and the middle section is used.
const N_RB_MAX: usize = 110;

/// Gold-sequence warm-up length.
const GOLD_SKIP: usize = 1600;

/// CRS symbol indices within a slot for antenna port 0 (normal CP).
pub const CRS_SYMBOLS: [usize; 2] = [0, 4];

/// One cell-specific reference symbol: its grid row and QPSK value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrsPilot {
    pub subcarrier: usize,
    pub value: Complex64,
}

/// Length-31 Gold sequence generator over two LFSRs.
///
/// Register bit `i` holds `x(n+i)`; stepping shifts the registers down by
/// one position. The first polynomial is fixed, the second is seeded from
/// `c_init`.
struct GoldSequence {
    x1: u32,
    x2: u32,
}

impl GoldSequence {
    fn new(c_init: u32) -> Self {
        let mut gen = GoldSequence {
            x1: 1,
            x2: c_init & 0x7FFF_FFFF,
        };
        for _ in 0..GOLD_SKIP {
            gen.step();
        }
        gen
    }

    fn step(&mut self) -> u8 {
        let out = ((self.x1 ^ self.x2) & 1) as u8;
        let f1 = ((self.x1 >> 3) ^ self.x1) & 1;
        let f2 = ((self.x2 >> 3) ^ (self.x2 >> 2) ^ (self.x2 >> 1) ^ self.x2) & 1;
        self.x1 = (self.x1 >> 1) | (f1 << 30);
        self.x2 = (self.x2 >> 1) | (f2 << 30);
        out
    }
}

/// Generates the CRS pilots for one OFDM symbol on antenna port 0.
///
/// `slot` counts within the radio frame (0..=19) and `symbol` within the
/// slot; port 0 transmits pilots on symbols 0 and 4 only. Returns `2 *
/// n_rb` pilots with QPSK values of magnitude `1/sqrt(2)` per component
/// and grid rows `6 m' + (v + pci mod 6) mod 6`, where `v` is 0 on
/// symbol 0 and 3 on symbol 4.
pub fn gen_crs(
    cell: &CellIdentity,
    slot: usize,
    symbol: usize,
    n_rb: usize,
) -> Result<Vec<CrsPilot>> {
    if slot >= SLOTS_PER_FRAME {
        return Err(Error::invalid(format!("slot {} out of 0..=19", slot)));
    }
    if !CRS_SYMBOLS.contains(&symbol) {
        return Err(Error::invalid(format!(
            "port-0 CRS occupies symbols 0 and 4, got {}",
            symbol
        )));
    }
    if n_rb == 0 || n_rb > N_RB_MAX {
        return Err(Error::invalid(format!("n_rb {} out of 1..=110", n_rb)));
    }

    let pci = cell.pci() as u32;
    // Normal-CP initialization for (slot, symbol), 31-bit value.
    let c_init = 1024 * (7 * (slot as u32 + 1) + symbol as u32 + 1) * (2 * pci + 1) + 2 * pci + 1;
    let mut gold = GoldSequence::new(c_init);

    let seq_offset = N_RB_MAX - n_rb;
    let mut bits = Vec::with_capacity(2 * (seq_offset + 2 * n_rb));
    for _ in 0..2 * (seq_offset + 2 * n_rb) {
        bits.push(gold.step());
    }

    let v = if symbol == 0 { 0 } else { 3 };
    let v_shift = (pci % 6) as usize;
    let mut pilots = Vec::with_capacity(2 * n_rb);
    for m_prime in 0..2 * n_rb {
        let m = m_prime + seq_offset;
        let re = (1 - 2 * bits[2 * m] as i8) as f64 * FRAC_1_SQRT_2;
        let im = (1 - 2 * bits[2 * m + 1] as i8) as f64 * FRAC_1_SQRT_2;
        pilots.push(CrsPilot {
            subcarrier: 6 * m_prime + (v + v_shift) % 6,
            value: Complex64::new(re, im),
        });
    }
    Ok(pilots)
}
