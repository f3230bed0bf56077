use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Physical cell identity: `pci = 3 * n_id1 + n_id2`.
///
/// `n_id1` is the cell identity group (0..=167) carried by the SSS and
/// `n_id2` the identity within the group (0..=2) carried by the PSS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellIdentity {
    n_id1: u16,
    n_id2: u8,
}

impl CellIdentity {
    /// Builds the identity from its PSS/SSS components.
    pub fn from_parts(n_id2: u8, n_id1: u16) -> Result<Self> {
        if n_id1 > 167 {
            return Err(Error::invalid(format!("n_id1 {} out of 0..=167", n_id1)));
        }
        if n_id2 > 2 {
            return Err(Error::invalid(format!("n_id2 {} out of 0..=2", n_id2)));
        }
        Ok(CellIdentity { n_id1, n_id2 })
    }

    pub fn from_pci(pci: u16) -> Result<Self> {
        if pci > 503 {
            return Err(Error::invalid(format!("pci {} out of 0..=503", pci)));
        }
        Ok(CellIdentity {
            n_id1: pci / 3,
            n_id2: (pci % 3) as u8,
        })
    }

    pub fn pci(&self) -> u16 {
        3 * self.n_id1 + self.n_id2 as u16
    }

    pub fn n_id1(&self) -> u16 {
        self.n_id1
    }

    pub fn n_id2(&self) -> u8 {
        self.n_id2
    }
}
