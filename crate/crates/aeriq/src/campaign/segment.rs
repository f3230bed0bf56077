use crate::sync::{cell_search, SyncConfig, SyncResult};
use crate::waveform::OfdmParams;
use crate::{Error, IqSegment, Result};
use serde::Deserialize;

/// Capture duty cycle: one 20 ms segment out of every 100 ms.
pub const SEGMENT_DURATION_S: f64 = 0.02;
pub const SEGMENT_CADENCE_S: f64 = 0.1;

/// How segments are laid out inside a capture file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaptureLayout {
    /// The file is one continuous recording; segments are cut at the
    /// capture cadence and the rest of each cycle is skipped.
    #[default]
    Continuous,
    /// The radio already stored only the duty-cycled segments, so the
    /// file holds back-to-back 20 ms records, one per 100 ms of wall
    /// time.
    Presegmented,
}

/// One planned 20 ms window of a capture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentRef {
    pub index: usize,
    /// First sample of the segment within the file.
    pub sample_offset: u64,
    /// Capture-relative start time, seconds.
    pub time_offset_s: f64,
}

/// Plans the segment windows of a capture of `n_samples` total samples.
pub fn plan_segments(
    n_samples: u64,
    sample_rate_hz: f64,
    layout: CaptureLayout,
) -> Result<Vec<SegmentRef>> {
    if !(sample_rate_hz > 0.0) {
        return Err(Error::invalid("sample rate must be positive"));
    }
    let seg_len = (SEGMENT_DURATION_S * sample_rate_hz).round() as u64;
    let stride = match layout {
        CaptureLayout::Continuous => (SEGMENT_CADENCE_S * sample_rate_hz).round() as u64,
        CaptureLayout::Presegmented => seg_len,
    };
    let mut plan = Vec::new();
    let mut offset = 0u64;
    while offset + seg_len <= n_samples {
        plan.push(SegmentRef {
            index: plan.len(),
            sample_offset: offset,
            // Each stored record represents one capture cadence.
            time_offset_s: plan.len() as f64 * SEGMENT_CADENCE_S,
        });
        offset += stride;
    }
    Ok(plan)
}

/// A frame-aligned 10 ms slice of a segment with its sync summary.
#[derive(Debug, Clone)]
pub struct FrameExtraction {
    pub frame: IqSegment,
    /// Frame start within the segment, samples.
    pub timing_offset: usize,
    pub sync: SyncResult,
}

/// Outcome of frame extraction on one segment.
#[derive(Debug, Clone)]
pub enum Extraction {
    Frame(FrameExtraction),
    /// Sync was too unreliable to trust; the segment is skipped, not
    /// failed.
    Skipped { reliability: f64 },
}

/// Runs cell search on a 20 ms segment and slices out the aligned 10 ms
/// frame.
///
/// A 20 ms window always contains at least one full frame boundary, so a
/// reliable detection yields a complete frame. Detections below the
/// configured reliability threshold return [`Extraction::Skipped`].
pub fn extract_frame(
    segment: &IqSegment,
    params: &OfdmParams,
    config: &SyncConfig,
) -> Result<Extraction> {
    let sync = cell_search(segment, params, config)?;
    if sync.reliability() < config.detection_threshold {
        return Ok(Extraction::Skipped {
            reliability: sync.reliability(),
        });
    }
    let frame_len = params.frame_len();
    let mut start = sync.timing_offset;
    if start + frame_len > segment.len() {
        // Frame timing is periodic, so when the detector locked onto a
        // boundary too close to the segment end, the earliest alias of
        // the same boundary holds an identical frame.
        start %= frame_len;
    }
    if start + frame_len > segment.len() {
        return Err(Error::EstimateUnavailable(format!(
            "frame at offset {start} runs past the segment end"
        )));
    }
    let frame = IqSegment {
        samples: segment.samples[start..start + frame_len].to_vec(),
        sample_rate_hz: segment.sample_rate_hz,
        center_freq_hz: segment.center_freq_hz,
        start_time_s: segment.start_time_s + start as f64 / segment.sample_rate_hz,
    };
    Ok(Extraction::Frame(FrameExtraction {
        frame,
        timing_offset: start,
        sync,
    }))
}
