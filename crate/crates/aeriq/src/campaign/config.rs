use super::gps::GeoOrigin;
use super::segment::CaptureLayout;
use crate::propagation::DEFAULT_TOWER_HEIGHT_M;
use crate::sync::DEFAULT_DETECTION_THRESHOLD;
use crate::{Error, Result};
use serde::Deserialize;
use std::path::{Path, PathBuf};

/// Environment variable holding the default config path.
pub const CONFIG_ENV_VAR: &str = "AERIQ_CONFIG";

/// Which path-gain model the pipeline fits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathModelChoice {
    #[default]
    TwoRay,
    FreeSpace,
}

/// Full pipeline configuration, loaded from TOML.
///
/// All relative paths are resolved against the directory containing the
/// config file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Explicit capture files, processed in the given order.
    #[serde(default)]
    pub captures: Vec<PathBuf>,
    /// Directory scanned for `.sc16`/`.cf32` files, sorted by name.
    #[serde(default)]
    pub capture_dir: Option<PathBuf>,
    #[serde(default)]
    pub gps_log: Option<PathBuf>,
    /// Tower base position anchoring the local frame.
    pub tower: GeoOrigin,
    /// Antenna height above the tower base, meters.
    #[serde(default = "default_tower_height")]
    pub tower_height_m: f64,
    /// Added to capture timestamps to map them onto GPS time.
    #[serde(default)]
    pub clock_offset_s: f64,
    #[serde(default)]
    pub layout: CaptureLayout,
    #[serde(default = "default_detection_threshold")]
    pub detection_threshold: f64,
    #[serde(default = "default_coherence_threshold")]
    pub coherence_threshold: f64,
    /// Added to measured RSRP to absorb front-end gain, dB.
    #[serde(default)]
    pub calibration_offset_db: f64,
    #[serde(default)]
    pub path_loss_model: PathModelChoice,
    /// Elevation-cut pattern CSVs; isotropic when omitted.
    #[serde(default)]
    pub tx_pattern: Option<PathBuf>,
    #[serde(default)]
    pub rx_pattern: Option<PathBuf>,
    #[serde(default = "default_permittivity")]
    pub relative_permittivity: f64,
    /// Distance bin width for shadowing correlation curves, meters.
    #[serde(default = "default_bin_width")]
    pub correlation_bin_m: f64,
    /// Where frames.csv, analytics.json, and report.json are written.
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_tower_height() -> f64 {
    DEFAULT_TOWER_HEIGHT_M
}

fn default_detection_threshold() -> f64 {
    DEFAULT_DETECTION_THRESHOLD
}

fn default_coherence_threshold() -> f64 {
    crate::propagation::DEFAULT_COHERENCE_THRESHOLD
}

fn default_permittivity() -> f64 {
    15.0
}

fn default_bin_width() -> f64 {
    5.0
}

fn default_output_dir() -> PathBuf {
    PathBuf::from(".")
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("bad config: {e}")))
    }
}

/// A parsed config together with the directory its paths resolve
/// against.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: PipelineConfig,
    pub base_dir: PathBuf,
}

impl LoadedConfig {
    /// Resolves a config-relative path.
    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    /// The capture files to process: the explicit list followed by the
    /// sorted directory scan. Errors if the result is empty.
    pub fn capture_files(&self) -> Result<Vec<PathBuf>> {
        let mut files: Vec<PathBuf> = self
            .config
            .captures
            .iter()
            .map(|p| self.resolve(p))
            .collect();
        if let Some(dir) = &self.config.capture_dir {
            let dir = self.resolve(dir);
            let mut scanned: Vec<PathBuf> = std::fs::read_dir(&dir)
                .map_err(|e| Error::Config(format!("capture dir {}: {e}", dir.display())))?
                .filter_map(|entry| entry.ok().map(|e| e.path()))
                .filter(|p| {
                    matches!(
                        p.extension().and_then(|e| e.to_str()),
                        Some("sc16") | Some("cf32")
                    )
                })
                .collect();
            scanned.sort();
            files.extend(scanned);
        }
        if files.is_empty() {
            return Err(Error::Config(
                "no capture files: give `captures` or a non-empty `capture_dir`".into(),
            ));
        }
        Ok(files)
    }
}

/// Loads the config from an explicit path, falling back to the
/// `AERIQ_CONFIG` environment variable.
pub fn load_config(path: Option<&Path>) -> Result<LoadedConfig> {
    let path = match path {
        Some(p) => p.to_path_buf(),
        None => std::env::var_os(CONFIG_ENV_VAR)
            .map(PathBuf::from)
            .ok_or_else(|| {
                Error::Config(format!(
                    "no config path given and {CONFIG_ENV_VAR} is not set"
                ))
            })?,
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
    let config = PipelineConfig::from_toml(&text)?;
    let base_dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    Ok(LoadedConfig { config, base_dir })
}
