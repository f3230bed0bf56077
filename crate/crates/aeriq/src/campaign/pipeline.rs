use super::analytics::{analyze_links, AnalyticsOptions};
use super::config::{LoadedConfig, PathModelChoice};
use super::gps::{geo_align, parse_gps_log, to_enu, Enu, TrajectoryPoint};
use super::iqfile::IqReader;
use super::segment::{extract_frame, plan_segments, Extraction, SEGMENT_DURATION_S};
use crate::chanest::estimate_frame;
use crate::propagation::{
    coherence_bandwidth, link_geometry, AntennaPattern, LinkGeometry, PathLossModelKind,
    PathLossSample, DEFAULT_CARRIER_FREQ_HZ,
};
use crate::sync::{correct_cfo, SyncConfig};
use crate::waveform::{OfdmParams, SYMBOLS_PER_SLOT};
use crate::{Error, Result};
use serde::Serialize;
use std::path::{Path, PathBuf};

/// Bit-exact header of the per-frame CSV.
pub const FRAME_CSV_HEADER: &str =
    "timestamp,frame_index,cfo_hat,timing_offset,pci,rsrp_dbm,coherence_bw_hz,lat,lon,alt,d3d_m";

/// Geo columns of one frame row; absent when the frame falls outside the
/// trajectory or there is no GPS log.
#[derive(Debug, Clone)]
struct GeoColumns {
    lat_deg: f64,
    lon_deg: f64,
    alt_m: f64,
    d3d_m: f64,
    enu: Enu,
    /// Present when the receiver sits above the tower base plane.
    geometry: Option<LinkGeometry>,
}

/// One successfully processed frame.
#[derive(Debug, Clone)]
struct FrameRow {
    timestamp_s: f64,
    cfo_hat: f64,
    timing_offset: usize,
    pci: u16,
    rsrp_dbm: f64,
    coherence_bw_hz: f64,
    geo: Option<GeoColumns>,
}

/// One segment whose processing failed (distinct from a sync skip).
#[derive(Debug, Clone, Serialize)]
pub struct SegmentFailure {
    pub capture: String,
    pub segment_index: usize,
    pub error: String,
}

/// Machine-readable run summary, also written as `report.json`.
#[derive(Debug, Clone, Serialize)]
pub struct PipelineReport {
    pub captures: Vec<String>,
    pub segments_planned: usize,
    pub frames_extracted: usize,
    pub segments_skipped: usize,
    pub segments_failed: usize,
    pub failures: Vec<SegmentFailure>,
    /// Largest single I/Q buffer held at once, bytes. Independent of
    /// capture duration because processing is per-segment.
    pub peak_sample_buffer_bytes: usize,
}

fn load_pattern(loaded: &LoadedConfig, path: &Option<PathBuf>) -> Result<AntennaPattern> {
    match path {
        Some(p) => AntennaPattern::from_csv(&loaded.resolve(p)),
        None => Ok(AntennaPattern::isotropic()),
    }
}

/// Formats a float with enough digits to round-trip, for stable CSV
/// output across reruns.
fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn write_frames_csv(path: &Path, rows: &[FrameRow]) -> Result<()> {
    let mut out = String::new();
    out.push_str(FRAME_CSV_HEADER);
    out.push('\n');
    for (index, row) in rows.iter().enumerate() {
        let geo = match &row.geo {
            Some(g) => format!(
                "{},{},{},{}",
                fmt_f64(g.lat_deg),
                fmt_f64(g.lon_deg),
                fmt_f64(g.alt_m),
                fmt_f64(g.d3d_m)
            ),
            None => ",,,".to_string(),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            fmt_f64(row.timestamp_s),
            index,
            fmt_f64(row.cfo_hat),
            row.timing_offset,
            row.pci,
            fmt_f64(row.rsrp_dbm),
            fmt_f64(row.coherence_bw_hz),
            geo
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Processes one segment end to end; `Ok(None)` means a sync skip.
fn process_segment(
    segment: &crate::IqSegment,
    params: &OfdmParams,
    sync_config: &SyncConfig,
    loaded: &LoadedConfig,
    trajectory: Option<&[TrajectoryPoint]>,
) -> Result<Option<FrameRow>> {
    let extraction = extract_frame(segment, params, sync_config)?;
    let found = match extraction {
        Extraction::Skipped { .. } => return Ok(None),
        Extraction::Frame(found) => found,
    };
    let corrected = correct_cfo(&found.frame, &found.sync.cfo, params);
    let n_symbols = params.frame_len() / params.slot_len() * SYMBOLS_PER_SLOT;
    let grid = crate::waveform::ofdm_demodulate(&corrected.samples, 0, n_symbols, params)?;
    let (estimate, rsrp) = estimate_frame(
        &grid,
        &found.sync.cell,
        params,
        loaded.config.calibration_offset_db,
    )?;
    let response = estimate.mean_frequency_response();
    let coherence_bw_hz = coherence_bandwidth(
        &response,
        params.subcarrier_spacing_hz,
        loaded.config.coherence_threshold,
    )?;

    let timestamp_s = found.frame.start_time_s;
    let geo = trajectory
        .and_then(|traj| geo_align(timestamp_s, traj, loaded.config.clock_offset_s))
        .map(|point| {
            let enu = to_enu(&point, &loaded.config.tower);
            let h_tx = loaded.config.tower_height_m;
            let dz = enu.up_m - h_tx;
            let d3d_m = (enu.horizontal_distance_m().powi(2) + dz * dz).sqrt();
            let geometry = if enu.up_m > 0.0 {
                link_geometry(enu.horizontal_distance_m(), h_tx, enu.up_m).ok()
            } else {
                None
            };
            GeoColumns {
                lat_deg: point.lat_deg,
                lon_deg: point.lon_deg,
                alt_m: point.alt_m,
                d3d_m,
                enu,
                geometry,
            }
        });

    Ok(Some(FrameRow {
        timestamp_s,
        cfo_hat: found.sync.cfo.cfo,
        timing_offset: found.timing_offset,
        pci: found.sync.cell.pci(),
        rsrp_dbm: rsrp.rsrp_dbm,
        coherence_bw_hz,
        geo,
    }))
}

/// Builds the analytics inputs from positioned rows and runs the fits.
fn run_analytics(
    rows: &[FrameRow],
    loaded: &LoadedConfig,
    carrier_freq_hz: f64,
) -> Result<super::analytics::AnalyticsReport> {
    let mut samples = Vec::new();
    let mut positions = Vec::new();
    for row in rows {
        if let Some(geo) = &row.geo {
            if let Some(geometry) = geo.geometry {
                samples.push(PathLossSample {
                    geometry,
                    rsrp_dbm: row.rsrp_dbm,
                });
                positions.push(geo.enu);
            }
        }
    }
    let options = AnalyticsOptions {
        carrier_freq_hz,
        tx_pattern: load_pattern(loaded, &loaded.config.tx_pattern)?,
        rx_pattern: load_pattern(loaded, &loaded.config.rx_pattern)?,
        relative_permittivity: loaded.config.relative_permittivity,
        model: match loaded.config.path_loss_model {
            PathModelChoice::TwoRay => PathLossModelKind::TwoRay,
            PathModelChoice::FreeSpace => PathLossModelKind::FreeSpace,
        },
        correlation_bin_m: loaded.config.correlation_bin_m,
    };
    Ok(analyze_links(&samples, &positions, &options))
}

/// Runs the full capture-to-analytics pipeline.
///
/// Writes `frames.csv`, `analytics.json`, and `report.json` under the
/// configured output directory. Per-segment failures are recorded and
/// processing continues; the run errors only when more than half of the
/// planned segments fail. Output files are still written in that case so
/// the failure report is machine readable.
pub fn run_pipeline(loaded: &LoadedConfig) -> Result<PipelineReport> {
    let files = loaded.capture_files()?;
    let trajectory = match &loaded.config.gps_log {
        Some(path) => Some(parse_gps_log(&loaded.resolve(path))?),
        None => None,
    };
    let params = OfdmParams::default();
    let sync_config = SyncConfig {
        detection_threshold: loaded.config.detection_threshold,
        ..SyncConfig::default()
    };

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut segments_planned = 0usize;
    let mut segments_skipped = 0usize;
    let mut peak_sample_buffer_bytes = 0usize;
    let mut carrier_freq_hz = 0.0f64;

    for file in &files {
        let capture_name = file
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| file.display().to_string());
        let mut reader = IqReader::open(file)?;
        let meta = reader.meta().clone();
        if carrier_freq_hz == 0.0 && meta.center_freq_hz > 0.0 {
            carrier_freq_hz = meta.center_freq_hz;
        }
        let plan = plan_segments(reader.len(), meta.sample_rate_hz, loaded.config.layout)?;
        segments_planned += plan.len();
        let seg_len = (SEGMENT_DURATION_S * meta.sample_rate_hz).round() as usize;
        for seg in &plan {
            let result = reader.read_at(seg.sample_offset, seg_len).and_then(|buf| {
                peak_sample_buffer_bytes =
                    peak_sample_buffer_bytes.max(buf.len() * std::mem::size_of::<f64>() * 2);
                let segment = crate::IqSegment {
                    samples: buf,
                    sample_rate_hz: meta.sample_rate_hz,
                    center_freq_hz: meta.center_freq_hz,
                    start_time_s: meta.start_time_unix + seg.time_offset_s,
                };
                process_segment(&segment, &params, &sync_config, loaded, trajectory.as_deref())
            });
            match result {
                Ok(Some(row)) => rows.push(row),
                Ok(None) => segments_skipped += 1,
                Err(e) => failures.push(SegmentFailure {
                    capture: capture_name.clone(),
                    segment_index: seg.index,
                    error: e.to_string(),
                }),
            }
        }
    }
    if carrier_freq_hz <= 0.0 {
        carrier_freq_hz = DEFAULT_CARRIER_FREQ_HZ;
    }

    // Output rows in timestamp order regardless of processing order.
    rows.sort_by(|a, b| a.timestamp_s.total_cmp(&b.timestamp_s));

    let out_dir = loaded.resolve(&loaded.config.output_dir);
    std::fs::create_dir_all(&out_dir)?;
    write_frames_csv(&out_dir.join("frames.csv"), &rows)?;

    let analytics = run_analytics(&rows, loaded, carrier_freq_hz)?;
    let analytics_json = serde_json::to_string_pretty(&analytics)
        .map_err(|e| Error::Data(format!("analytics serialization: {e}")))?;
    std::fs::write(out_dir.join("analytics.json"), analytics_json)?;

    let report = PipelineReport {
        captures: files
            .iter()
            .map(|f| f.display().to_string())
            .collect(),
        segments_planned,
        frames_extracted: rows.len(),
        segments_skipped,
        segments_failed: failures.len(),
        failures,
        peak_sample_buffer_bytes,
    };
    let report_json = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::Data(format!("report serialization: {e}")))?;
    std::fs::write(out_dir.join("report.json"), report_json)?;

    if report.segments_failed * 2 > segments_planned {
        return Err(Error::Data(format!(
            "{} of {} segments failed; see report.json",
            report.segments_failed, segments_planned
        )));
    }
    Ok(report)
}
