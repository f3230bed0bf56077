//! LTE downlink frame synthesis for the 1.4 MHz configuration.
//!
//! Only the always-on downlink content is generated: primary and secondary
//! synchronization signals (PSS/SSS) and cell-specific reference signals
//! (CRS, antenna port 0). Data channels are left empty, which matches what
//! a sync/RSRP measurement chain actually consumes.

mod cell;
mod crs;
mod grid;
mod ofdm;
mod pss;
mod sss;

pub use cell::CellIdentity;
pub use crs::{gen_crs, CrsPilot, CRS_SYMBOLS};
pub use grid::{map_frame, sync_first_row, ResourceGrid};
pub use ofdm::{ofdm_demodulate, ofdm_modulate};
pub use pss::gen_pss;
pub use sss::gen_sss;

pub(crate) use ofdm::symbol_waveform;

use crate::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Length of the PSS and SSS sequences in subcarriers.
pub const SYNC_SEQ_LEN: usize = 62;

/// OFDM symbols per slot with normal cyclic prefix.
pub const SYMBOLS_PER_SLOT: usize = 7;

/// Slots per 10 ms radio frame.
pub const SLOTS_PER_FRAME: usize = 20;

/// OFDM numerology for the narrowband LTE downlink.
///
/// Defaults describe the 1.4 MHz bandwidth configuration: 128-point FFT at
/// 1.92 Msps, 72 used subcarriers around a skipped DC bin, and normal
/// cyclic prefix (10 samples on the first symbol of a slot, 9 on the rest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfdmParams {
    pub n_fft: usize,
    pub n_subcarriers: usize,
    pub subcarrier_spacing_hz: f64,
    pub cp_len_first: usize,
    pub cp_len_rest: usize,
}

impl Default for OfdmParams {
    fn default() -> Self {
        OfdmParams {
            n_fft: 128,
            n_subcarriers: 72,
            subcarrier_spacing_hz: 15_000.0,
            cp_len_first: 10,
            cp_len_rest: 9,
        }
    }
}

impl OfdmParams {
    pub fn sample_rate_hz(&self) -> f64 {
        self.n_fft as f64 * self.subcarrier_spacing_hz
    }

    pub fn cp_len(&self, symbol_in_slot: usize) -> usize {
        if symbol_in_slot == 0 {
            self.cp_len_first
        } else {
            self.cp_len_rest
        }
    }

    pub fn symbol_len(&self, symbol_in_slot: usize) -> usize {
        self.cp_len(symbol_in_slot) + self.n_fft
    }

    /// Offset of a symbol's first CP sample from the start of its slot.
    pub fn symbol_offset(&self, symbol_in_slot: usize) -> usize {
        (0..symbol_in_slot).map(|j| self.symbol_len(j)).sum()
    }

    pub fn slot_len(&self) -> usize {
        self.symbol_offset(SYMBOLS_PER_SLOT)
    }

    pub fn frame_len(&self) -> usize {
        SLOTS_PER_FRAME * self.slot_len()
    }

    pub fn half_frame_len(&self) -> usize {
        self.frame_len() / 2
    }

    pub fn resource_blocks(&self) -> usize {
        self.n_subcarriers / 12
    }

    /// Signed subcarrier offset of a grid row from the carrier frequency.
    ///
    /// Rows below the band center sit at negative offsets, rows at and
    /// above it start from +1: the DC bin carries no data. This is the
    /// physical frequency axis, in units of the subcarrier spacing.
    pub fn subcarrier_offset(&self, row: usize) -> isize {
        let half = (self.n_subcarriers / 2) as isize;
        if (row as isize) < half {
            row as isize - half
        } else {
            row as isize - half + 1
        }
    }

    /// Maps a grid row (0-based from the band edge) to its FFT bin.
    pub fn fft_bin(&self, row: usize) -> usize {
        self.subcarrier_offset(row).rem_euclid(self.n_fft as isize) as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_fft == 0 || !self.n_fft.is_power_of_two() {
            return Err(Error::invalid(format!(
                "n_fft must be a nonzero power of two, got {}",
                self.n_fft
            )));
        }
        if self.n_subcarriers == 0
            || self.n_subcarriers % 12 != 0
            || self.n_subcarriers >= self.n_fft
        {
            return Err(Error::invalid(format!(
                "n_subcarriers must be a positive multiple of 12 below n_fft, got {}",
                self.n_subcarriers
            )));
        }
        if self.n_subcarriers < SYNC_SEQ_LEN + 10 {
            return Err(Error::invalid(format!(
                "bandwidth too narrow for sync signals: {} subcarriers",
                self.n_subcarriers
            )));
        }
        if self.subcarrier_spacing_hz <= 0.0 {
            return Err(Error::invalid("subcarrier spacing must be positive"));
        }
        if self.cp_len_first == 0 || self.cp_len_rest == 0 || self.cp_len_first < self.cp_len_rest {
            return Err(Error::invalid(format!(
                "bad CP lengths ({}, {})",
                self.cp_len_first, self.cp_len_rest
            )));
        }
        Ok(())
    }
}

/// A synchronization sequence with its identity parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyncSequence {
    Pss { n_id2: u8 },
    Sss { n_id1: u16, n_id2: u8, subframe: u8 },
}

impl SyncSequence {
    /// The 62 frequency-domain values of the sequence.
    pub fn values(&self) -> Result<[Complex64; SYNC_SEQ_LEN]> {
        match *self {
            SyncSequence::Pss { n_id2 } => gen_pss(n_id2),
            SyncSequence::Sss {
                n_id1,
                n_id2,
                subframe,
            } => gen_sss(n_id1, n_id2, subframe),
        }
    }
}
