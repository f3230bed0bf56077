//! Closed-loop LTE air-to-ground IQ toolkit.
//!
//! The crate covers the full measurement chain for narrowband LTE downlink
//! captures taken from an aerial receiver:
//!
//! * [`waveform`] synthesizes standard-conformant downlink frames
//!   (PSS/SSS/CRS on a 1.4 MHz grid) and converts between resource grids
//!   and time-domain IQ.
//! * [`impair`] applies a seeded channel/front-end simulator: carrier
//!   frequency offset, integer delay, sparse multipath, and AWGN.
//! * [`sync`] recovers carrier frequency offset, frame timing, and the
//!   physical cell identity from raw IQ.
//! * [`chanest`] extracts cell-specific reference symbols, estimates the
//!   channel per subcarrier, and measures RSRP.
//! * [`propagation`] fits two-ray path-loss models with antenna patterns,
//!   coherence bandwidth, skew-normal shadowing distributions, and spatial
//!   correlation models.
//! * [`campaign`] handles measurement-campaign I/O: IQ file formats with
//!   JSON sidecars, GPS logs, geometry alignment, and the end-to-end
//!   per-frame processing pipeline.

pub mod campaign;
pub mod chanest;
mod error;
pub mod impair;
mod iq;
pub mod numerics;
pub mod propagation;
pub mod sync;
pub mod waveform;

pub use error::{Error, Result};
pub use iq::IqSegment;
