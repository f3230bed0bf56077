//! Receiver synchronization: CFO estimation, timing detection, cell search.
//!
//! The processing order mirrors a real acquisition chain: the carrier
//! frequency offset is estimated blindly from cyclic-prefix correlation
//! and removed, then PSS correlation identifies `n_id2` and coarse timing,
//! and a combined PSS+SSS metric pins the frame boundary, resolves the
//! half-frame ambiguity, and identifies `n_id1`.

mod cfo;
mod search;

pub use cfo::{cp_moving_correlation, correct_cfo, estimate_cfo, refine_cfo, CfoEstimate};
pub use search::{
    cell_search, detect_combined, detect_pss, CombinedDetection, CombinedSearch, DetectionMode,
    PssDetection, SyncConfig, SyncResult, DEFAULT_DETECTION_THRESHOLD,
};
