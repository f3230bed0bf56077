//! Campaign I/O: capture files with JSON sidecars, GPS logs and local
//! ENU geodesy, duty-cycle segmentation, and the capture-to-analytics
//! pipeline.

mod analytics;
mod config;
mod gps;
mod iqfile;
mod pipeline;
mod segment;

pub use analytics::{
    analyze_links, AnalyticsOptions, AnalyticsReport, CorrelationBinSummary,
    CorrelationFitSummary, CorrelationSummary, PathLossSummary, ShadowingSummary,
};
pub use config::{load_config, LoadedConfig, PathModelChoice, PipelineConfig, CONFIG_ENV_VAR};
pub use gps::{
    geo_align, parse_gps_log, speed_from_gps, to_enu, Enu, GeoOrigin, TrajectoryPoint,
};
pub use iqfile::{
    append_iq, read_iq, sidecar_path, write_iq, CaptureMeta, IqFormat, IqReader,
};
pub use pipeline::{run_pipeline, PipelineReport, SegmentFailure, FRAME_CSV_HEADER};
pub use segment::{
    extract_frame, plan_segments, CaptureLayout, Extraction, FrameExtraction, SegmentRef,
    SEGMENT_CADENCE_S, SEGMENT_DURATION_S,
};
