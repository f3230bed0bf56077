//! Propagation analytics for air-to-ground links: elevation-cut antenna
//! patterns, flat-earth link geometry, the two-ray ground-reflection
//! model with least-squares fitting, coherence bandwidth, shadowing
//! distribution fits, and spatial correlation of shadowing.

mod antenna;
mod coherence;
mod geometry;
mod shadowing;
mod spatial;
mod two_ray;

pub use antenna::AntennaPattern;
pub use coherence::{
    bandwidth_from_profile, coherence_bandwidth, freq_correlation, moving_average,
    COHERENCE_BANDWIDTH_CLIP_HZ, DEFAULT_COHERENCE_THRESHOLD,
};
pub use geometry::{link_geometry, LinkGeometry, DEFAULT_TOWER_HEIGHT_M};
pub use shadowing::{
    extract_shadowing, fit_shadowing_distribution, sample_skew_normal, skew_normal_logpdf,
    GaussianParams, ShadowFitResult, SkewNormalParams,
};
pub use spatial::{
    fit_correlation_model, spatial_correlation, CorrelationAxis, CorrelationBin, CorrelationFit,
    CorrelationModelKind, ShadowSample,
};
pub use two_ray::{
    eval_free_space, eval_two_ray, fit_path_loss, PathLossFit, PathLossModelKind, PathLossSample,
    Reflection, TwoRayModel, DEFAULT_CARRIER_FREQ_HZ, SPEED_OF_LIGHT_M_S,
};
