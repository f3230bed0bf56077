use super::gps::Enu;
use crate::propagation::{
    extract_shadowing, fit_correlation_model, fit_path_loss, fit_shadowing_distribution,
    spatial_correlation, AntennaPattern, CorrelationAxis, CorrelationModelKind,
    PathLossModelKind, PathLossSample, Reflection, ShadowSample, TwoRayModel,
    DEFAULT_CARRIER_FREQ_HZ, SPEED_OF_LIGHT_M_S,
};
use serde::Serialize;

/// Inputs the propagation analytics need beyond the samples themselves.
#[derive(Debug, Clone)]
pub struct AnalyticsOptions {
    pub carrier_freq_hz: f64,
    pub tx_pattern: AntennaPattern,
    pub rx_pattern: AntennaPattern,
    pub relative_permittivity: f64,
    pub model: PathLossModelKind,
    pub correlation_bin_m: f64,
}

impl Default for AnalyticsOptions {
    fn default() -> Self {
        AnalyticsOptions {
            carrier_freq_hz: DEFAULT_CARRIER_FREQ_HZ,
            tx_pattern: AntennaPattern::isotropic(),
            rx_pattern: AntennaPattern::isotropic(),
            relative_permittivity: 15.0,
            model: PathLossModelKind::TwoRay,
            correlation_bin_m: 5.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PathLossSummary {
    pub model: String,
    pub carrier_freq_hz: f64,
    pub offset_db: f64,
    pub rms_residual_db: f64,
    pub n_samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fresnel_permittivity: Option<f64>,
    /// Fitted constant reflection coefficient as `[re, im]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reflection_coefficient: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ShadowingSummary {
    pub n_samples: usize,
    pub gaussian_mean_db: f64,
    pub gaussian_std_db: f64,
    pub gaussian_log_likelihood: f64,
    pub skew_location: f64,
    pub skew_scale: f64,
    pub skew_shape: f64,
    pub skew_log_likelihood: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrelationBinSummary {
    pub distance_m: f64,
    pub correlation: f64,
    pub pair_count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrelationFitSummary {
    pub weight: f64,
    pub fast_rate: f64,
    pub slow_rate: f64,
    pub rss: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrelationSummary {
    pub bin_width_m: f64,
    pub bins: Vec<CorrelationBinSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<CorrelationFitSummary>,
}

/// Fitted propagation parameters with goodness metrics; sections are
/// omitted when their inputs are insufficient, with the reason recorded
/// in `errors`.
#[derive(Debug, Clone, Serialize, Default)]
pub struct AnalyticsReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path_loss: Option<PathLossSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shadowing: Option<ShadowingSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spatial_correlation: Option<CorrelationSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
}

/// Runs the propagation analytics on positioned RSRP samples.
///
/// `positions` holds the tower-relative receiver position of each sample
/// and must be index-aligned with `samples`. Fit failures degrade to
/// omitted sections rather than erroring, so a partial campaign still
/// produces whatever analytics its data supports.
pub fn analyze_links(
    samples: &[PathLossSample],
    positions: &[Enu],
    options: &AnalyticsOptions,
) -> AnalyticsReport {
    let mut report = AnalyticsReport::default();
    if samples.is_empty() {
        return report;
    }
    if samples.len() < 10 {
        report.errors.push(format!(
            "path-loss fit skipped: {} positioned samples, need at least 10",
            samples.len()
        ));
        return report;
    }
    if positions.len() != samples.len() {
        report.errors.push(format!(
            "position/sample count mismatch: {} vs {}",
            positions.len(),
            samples.len()
        ));
        return report;
    }

    let template = TwoRayModel {
        wavelength_m: SPEED_OF_LIGHT_M_S / options.carrier_freq_hz,
        tx_pattern: options.tx_pattern.clone(),
        rx_pattern: options.rx_pattern.clone(),
        reflection: Reflection::Fresnel {
            relative_permittivity: options.relative_permittivity,
        },
    };
    let fit = match fit_path_loss(samples, &template, options.model) {
        Ok(fit) => fit,
        Err(e) => {
            report.errors.push(format!("path-loss fit: {e}"));
            return report;
        }
    };
    let (fresnel_permittivity, reflection_coefficient) = match fit.model.reflection {
        Reflection::Fresnel {
            relative_permittivity,
        } => (Some(relative_permittivity), None),
        Reflection::Constant(gamma) => (None, Some([gamma.re, gamma.im])),
    };
    report.path_loss = Some(PathLossSummary {
        model: match options.model {
            PathLossModelKind::TwoRay => "two-ray".to_string(),
            PathLossModelKind::FreeSpace => "free-space".to_string(),
        },
        carrier_freq_hz: options.carrier_freq_hz,
        offset_db: fit.offset_db,
        rms_residual_db: fit.rms_residual_db,
        n_samples: samples.len(),
        fresnel_permittivity,
        reflection_coefficient,
    });

    let shadow_db = match extract_shadowing(samples, &fit) {
        Ok(v) => v,
        Err(e) => {
            report.errors.push(format!("shadowing extraction: {e}"));
            return report;
        }
    };
    if shadow_db.len() >= 8 {
        match fit_shadowing_distribution(&shadow_db) {
            Ok(shadow_fit) => {
                report.shadowing = Some(ShadowingSummary {
                    n_samples: shadow_db.len(),
                    gaussian_mean_db: shadow_fit.gaussian.mean_db,
                    gaussian_std_db: shadow_fit.gaussian.std_db,
                    gaussian_log_likelihood: shadow_fit.gaussian_log_likelihood,
                    skew_location: shadow_fit.skew.location,
                    skew_scale: shadow_fit.skew.scale,
                    skew_shape: shadow_fit.skew.shape,
                    skew_log_likelihood: shadow_fit.skew_log_likelihood,
                });
            }
            Err(e) => report.errors.push(format!("shadowing fit: {e}")),
        }
    }

    let shadow_samples: Vec<ShadowSample> = positions
        .iter()
        .zip(&shadow_db)
        .map(|(enu, &shadow_db)| ShadowSample {
            east_m: enu.east_m,
            north_m: enu.north_m,
            up_m: enu.up_m,
            shadow_db,
        })
        .collect();
    match spatial_correlation(
        &[shadow_samples.as_slice()],
        CorrelationAxis::Horizontal,
        options.correlation_bin_m,
    ) {
        Ok(bins) => {
            let fit = fit_correlation_model(&bins, CorrelationModelKind::BiExponential)
                .map(|f| CorrelationFitSummary {
                    weight: f.weight,
                    fast_rate: f.fast_rate,
                    slow_rate: f.slow_rate,
                    rss: f.rss,
                })
                .map_err(|e| report.errors.push(format!("correlation fit: {e}")))
                .ok();
            report.spatial_correlation = Some(CorrelationSummary {
                bin_width_m: options.correlation_bin_m,
                bins: bins
                    .iter()
                    .map(|b| CorrelationBinSummary {
                        distance_m: b.distance_m,
                        correlation: b.correlation,
                        pair_count: b.pair_count,
                    })
                    .collect(),
                fit,
            });
        }
        Err(e) => report.errors.push(format!("spatial correlation: {e}")),
    }

    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagation::{eval_two_ray, link_geometry};

    /// Two-ray RSRP at increasing range plus a deterministic sinusoidal
    /// shadowing term of amplitude `shadow_amp` dB.
    fn synthetic_inputs(
        n: usize,
        shadow_amp: f64,
    ) -> (Vec<PathLossSample>, Vec<Enu>, AnalyticsOptions) {
        let options = AnalyticsOptions::default();
        let model = TwoRayModel {
            wavelength_m: SPEED_OF_LIGHT_M_S / options.carrier_freq_hz,
            ..TwoRayModel::default()
        };
        let mut samples = Vec::new();
        let mut positions = Vec::new();
        for i in 0..n {
            let east = 120.0 + 3.0 * i as f64;
            let geometry = link_geometry(east, 10.0, 30.0).unwrap();
            let gain_db = 10.0 * eval_two_ray(&model, &geometry).unwrap().log10();
            let shadow = shadow_amp * (0.7 * i as f64).sin();
            samples.push(PathLossSample {
                geometry,
                rsrp_dbm: 40.0 + gain_db + shadow,
            });
            positions.push(Enu {
                east_m: east,
                north_m: 0.0,
                up_m: 30.0,
            });
        }
        (samples, positions, options)
    }

    #[test]
    fn noiseless_inputs_recover_the_offset() {
        let (samples, positions, options) = synthetic_inputs(40, 0.0);
        let report = analyze_links(&samples, &positions, &options);
        let path_loss = report.path_loss.expect("path loss section");
        assert!((path_loss.offset_db - 40.0).abs() < 1e-3);
        assert!(path_loss.rms_residual_db < 1e-6);
        assert_eq!(path_loss.model, "two-ray");
        let eps = path_loss.fresnel_permittivity.expect("fresnel fit");
        assert!((eps - 15.0).abs() < 0.5, "permittivity {eps}");
    }

    #[test]
    fn shadowed_inputs_fill_every_section() {
        let (samples, positions, options) = synthetic_inputs(40, 1.5);
        let report = analyze_links(&samples, &positions, &options);
        assert!(report.path_loss.is_some());
        let shadowing = report.shadowing.expect("shadowing section");
        assert_eq!(shadowing.n_samples, 40);
        assert!(shadowing.gaussian_std_db > 0.3 && shadowing.gaussian_std_db < 3.0);
        let corr = report.spatial_correlation.expect("correlation section");
        assert!(!corr.bins.is_empty());
        // Bin zero holds self-pairs plus 3 m neighbors, so it sits just
        // below the exact unit correlation of a pure self-pair bin.
        assert!(corr.bins[0].correlation > 0.7);
        assert!(corr.bins[0].correlation <= 1.0 + 1e-9);
    }

    #[test]
    fn too_few_samples_degrade_to_an_explanation() {
        let (samples, positions, options) = synthetic_inputs(5, 0.0);
        let report = analyze_links(&samples, &positions, &options);
        assert!(report.path_loss.is_none());
        assert_eq!(report.errors.len(), 1);
        assert!(report.errors[0].contains("need at least 10"));
    }

    #[test]
    fn empty_input_serializes_to_an_empty_object() {
        let report = analyze_links(&[], &[], &AnalyticsOptions::default());
        assert_eq!(serde_json::to_string(&report).unwrap(), "{}");
    }
}
