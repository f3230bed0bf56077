use super::{
    gen_crs, gen_pss, gen_sss, CellIdentity, OfdmParams, SYMBOLS_PER_SLOT, SYNC_SEQ_LEN,
};
use crate::{Error, Result};
use num_complex::Complex64;

/// OFDM symbols per subframe (two slots, normal CP).
pub const SYMBOLS_PER_SUBFRAME: usize = 2 * SYMBOLS_PER_SLOT;

/// A time-frequency resource grid.
///
/// Rows are used subcarriers (0 at the lower band edge, DC excluded),
/// columns are OFDM symbols. Storage is symbol-major so each symbol's
/// subcarrier vector is contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceGrid {
    n_subcarriers: usize,
    n_symbols: usize,
    first_subframe: usize,
    data: Vec<Complex64>,
}

impl ResourceGrid {
    pub fn new(n_subcarriers: usize, n_symbols: usize, first_subframe: usize) -> Result<Self> {
        if n_subcarriers == 0 || n_symbols == 0 {
            return Err(Error::invalid("grid dimensions must be nonzero"));
        }
        Ok(ResourceGrid {
            n_subcarriers,
            n_symbols,
            first_subframe,
            data: vec![Complex64::new(0.0, 0.0); n_subcarriers * n_symbols],
        })
    }

    pub fn n_subcarriers(&self) -> usize {
        self.n_subcarriers
    }

    pub fn n_symbols(&self) -> usize {
        self.n_symbols
    }

    /// Subframe index of symbol column 0 within its radio frame.
    pub fn first_subframe(&self) -> usize {
        self.first_subframe
    }

    pub fn at(&self, subcarrier: usize, symbol: usize) -> Complex64 {
        self.data[symbol * self.n_subcarriers + subcarrier]
    }

    pub fn set(&mut self, subcarrier: usize, symbol: usize, value: Complex64) {
        self.data[symbol * self.n_subcarriers + subcarrier] = value;
    }

    pub fn column(&self, symbol: usize) -> &[Complex64] {
        let start = symbol * self.n_subcarriers;
        &self.data[start..start + self.n_subcarriers]
    }

    pub fn column_mut(&mut self, symbol: usize) -> &mut [Complex64] {
        let start = symbol * self.n_subcarriers;
        &mut self.data[start..start + self.n_subcarriers]
    }

    /// Slot within the radio frame and symbol within that slot for a column.
    pub fn slot_and_symbol(&self, column: usize) -> (usize, usize) {
        let abs = column + self.first_subframe * SYMBOLS_PER_SUBFRAME;
        ((abs / SYMBOLS_PER_SLOT) % 20, abs % SYMBOLS_PER_SLOT)
    }
}

/// First grid row occupied by the 62-element sync sequences.
///
/// The sequences sit on the central 62 subcarriers, 31 on each side of the
/// skipped DC bin.
pub fn sync_first_row(params: &OfdmParams) -> usize {
    params.n_subcarriers / 2 - SYNC_SEQ_LEN / 2
}

/// Writes a 62-element sync sequence into a grid column.
pub(crate) fn place_sync(
    grid: &mut ResourceGrid,
    column: usize,
    values: &[Complex64; SYNC_SEQ_LEN],
    params: &OfdmParams,
) {
    let base = sync_first_row(params);
    for (n, &v) in values.iter().enumerate() {
        grid.set(base + n, column, v);
    }
}

/// Builds one 10 ms downlink frame (10 subframes) for the given cell.
///
/// PSS occupies the last symbol of slots 0 and 10, SSS the symbol before
/// it, and port-0 CRS symbols 0 and 4 of every slot. All other resource
/// elements are zero.
pub fn map_frame(cell: &CellIdentity, params: &OfdmParams) -> Result<ResourceGrid> {
    params.validate()?;
    let mut grid = ResourceGrid::new(params.n_subcarriers, 10 * SYMBOLS_PER_SUBFRAME, 0)?;
    let n_rb = params.resource_blocks();

    for slot in 0..20 {
        for symbol in super::crs::CRS_SYMBOLS {
            let column = slot * SYMBOLS_PER_SLOT + symbol;
            for pilot in gen_crs(cell, slot, symbol, n_rb)? {
                grid.set(pilot.subcarrier, column, pilot.value);
            }
        }
    }

    let pss = gen_pss(cell.n_id2())?;
    for subframe in [0u8, 5] {
        let slot = subframe as usize * 2;
        let sss = gen_sss(cell.n_id1(), cell.n_id2(), subframe)?;
        place_sync(&mut grid, slot * SYMBOLS_PER_SLOT + 5, &sss, params);
        place_sync(&mut grid, slot * SYMBOLS_PER_SLOT + 6, &pss, params);
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nonzero_rows(grid: &ResourceGrid, column: usize) -> Vec<usize> {
        (0..grid.n_subcarriers())
            .filter(|&r| grid.at(r, column).norm() > 0.0)
            .collect()
    }

    #[test]
    fn pss_occupies_central_62_split_31_31() {
        let cell = CellIdentity::from_pci(0).unwrap();
        let grid = map_frame(&cell, &OfdmParams::default()).unwrap();
        for column in [6usize, 76] {
            let rows = nonzero_rows(&grid, column);
            assert_eq!(rows, (5..=66).collect::<Vec<_>>());
            assert_eq!(rows.iter().filter(|&&r| r < 36).count(), 31);
            assert_eq!(rows.iter().filter(|&&r| r >= 36).count(), 31);
        }
    }

    #[test]
    fn sync_signals_sit_in_expected_columns() {
        let cell = CellIdentity::from_pci(311).unwrap();
        let grid = map_frame(&cell, &OfdmParams::default()).unwrap();
        let pss = gen_pss(cell.n_id2()).unwrap();
        let sss0 = gen_sss(cell.n_id1(), cell.n_id2(), 0).unwrap();
        let sss5 = gen_sss(cell.n_id1(), cell.n_id2(), 5).unwrap();
        assert_eq!(grid.at(5, 6), pss[0]);
        assert_eq!(grid.at(5, 76), pss[0]);
        assert_eq!(grid.at(5, 5), sss0[0]);
        assert_eq!(grid.at(5, 75), sss5[0]);
        assert_ne!(grid.at(5, 5), grid.at(5, 75));
    }

    #[test]
    fn crs_present_in_every_slot() {
        let cell = CellIdentity::from_pci(37).unwrap();
        let grid = map_frame(&cell, &OfdmParams::default()).unwrap();
        for slot in 0..20 {
            for symbol in [0usize, 4] {
                let rows = nonzero_rows(&grid, slot * 7 + symbol);
                assert_eq!(rows.len(), 12, "slot {slot} symbol {symbol}");
                assert!(rows.windows(2).all(|w| w[1] - w[0] == 6));
                assert_eq!(rows[0] % 6, (37 + if symbol == 0 { 0 } else { 3 }) % 6);
            }
        }
    }

    #[test]
    fn data_symbols_are_empty() {
        let cell = CellIdentity::from_pci(211).unwrap();
        let grid = map_frame(&cell, &OfdmParams::default()).unwrap();
        // Symbol 2 of any slot carries neither CRS nor sync signals.
        for slot in 0..20 {
            assert!(nonzero_rows(&grid, slot * 7 + 2).is_empty());
        }
    }

    #[test]
    fn rejects_unsupported_bandwidth() {
        let cell = CellIdentity::from_pci(0).unwrap();
        let mut params = OfdmParams::default();
        params.n_subcarriers = 60;
        assert!(map_frame(&cell, &params).is_err());
    }

    #[test]
    fn slot_symbol_accounting_respects_origin() {
        let grid = ResourceGrid::new(72, 28, 5).unwrap();
        assert_eq!(grid.slot_and_symbol(0), (10, 0));
        assert_eq!(grid.slot_and_symbol(13), (11, 6));
    }
}
