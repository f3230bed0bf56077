use super::two_ray::{PathLossFit, PathLossSample};
use crate::numerics::{nelder_mead, NelderMeadOptions};
use crate::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::function::erf::erfc;
use std::f64::consts::PI;

/// Gaussian shadowing parameters in dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianParams {
    pub mean_db: f64,
    pub std_db: f64,
}

/// Skew-normal shadowing parameters in dB: location, scale, shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkewNormalParams {
    pub location: f64,
    pub scale: f64,
    pub shape: f64,
}

/// Maximum-likelihood fits of both candidate shadowing distributions.
///
/// The Gaussian is nested in the skew-normal at shape 0, so the
/// skew-normal log likelihood is never materially below the Gaussian
/// one; a large gap is evidence of skewed shadowing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShadowFitResult {
    pub gaussian: GaussianParams,
    pub gaussian_log_likelihood: f64,
    pub skew: SkewNormalParams,
    pub skew_log_likelihood: f64,
}

/// Shadowing observations: measured RSRP minus the fitted path-loss
/// prediction at each sample's geometry, in dB.
pub fn extract_shadowing(samples: &[PathLossSample], fit: &PathLossFit) -> Result<Vec<f64>> {
    samples
        .iter()
        .map(|s| Ok(s.rsrp_dbm - fit.predict_db(&s.geometry)?))
        .collect()
}

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

fn ln_std_normal_pdf(z: f64) -> f64 {
    -0.5 * z * z - LN_SQRT_2PI
}

/// Log of the standard normal CDF, stable far into the left tail where
/// `erfc` underflows.
fn ln_std_normal_cdf(t: f64) -> f64 {
    if t < -34.0 {
        ln_std_normal_pdf(t) - (-t).ln() + (-1.0 / (t * t) + 3.0 / (t * t * t * t)).ln_1p()
    } else {
        (0.5 * erfc(-t / std::f64::consts::SQRT_2)).ln()
    }
}

/// Log density of the skew-normal distribution.
pub fn skew_normal_logpdf(x: f64, params: &SkewNormalParams) -> f64 {
    let z = (x - params.location) / params.scale;
    std::f64::consts::LN_2 - params.scale.ln()
        + ln_std_normal_pdf(z)
        + ln_std_normal_cdf(params.shape * z)
}

/// Draws from a skew-normal distribution using the two-normal
/// construction: with `delta = shape / sqrt(1 + shape^2)`,
/// `x = location + scale * (delta * |u0| + sqrt(1 - delta^2) * u1)`.
pub fn sample_skew_normal(params: &SkewNormalParams, n: usize, seed: u64) -> Vec<f64> {
    let delta = params.shape / (1.0 + params.shape * params.shape).sqrt();
    let tail = (1.0 - delta * delta).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let u0: f64 = StandardNormal.sample(&mut rng);
            let u1: f64 = StandardNormal.sample(&mut rng);
            params.location + params.scale * (delta * u0.abs() + tail * u1)
        })
        .collect()
}

struct Moments {
    mean: f64,
    std: f64,
    skewness: f64,
}

fn moments(x: &[f64]) -> Moments {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let m2 = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let m3 = x.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
    Moments {
        mean,
        std: m2.sqrt(),
        skewness: if m2 > 0.0 { m3 / m2.powf(1.5) } else { 0.0 },
    }
}

/// Method-of-moments starting point for the skew-normal search.
fn skew_moment_init(m: &Moments) -> SkewNormalParams {
    let two_over_pi = 2.0 / PI;
    // The skew-normal cannot exceed |skewness| ~ 0.9953; cap inside it.
    let g = m.skewness.abs().min(0.99);
    let g23 = g.powf(2.0 / 3.0);
    let delta_sq = (PI / 2.0) * g23 / (g23 + ((4.0 - PI) / 2.0).powf(2.0 / 3.0));
    let delta = delta_sq.sqrt().min(0.995) * m.skewness.signum();
    let shape = delta / (1.0 - delta * delta).sqrt();
    let scale = (m.std * m.std / (1.0 - two_over_pi * delta * delta)).sqrt();
    SkewNormalParams {
        location: m.mean - scale * delta * two_over_pi.sqrt(),
        scale,
        shape,
    }
}

/// Fits Gaussian and skew-normal distributions to shadowing samples by
/// maximum likelihood and reports both with their log likelihoods.
///
/// The Gaussian fit is closed form. The skew-normal fit runs a
/// deterministic Nelder-Mead search from a method-of-moments start, so
/// repeated calls on the same data give identical results.
pub fn fit_shadowing_distribution(shadow_db: &[f64]) -> Result<ShadowFitResult> {
    if shadow_db.len() < 8 {
        return Err(Error::FitFailed(format!(
            "need at least 8 shadowing samples, got {}",
            shadow_db.len()
        )));
    }
    let m = moments(shadow_db);
    if !(m.std > 0.0) {
        return Err(Error::FitFailed(
            "shadowing samples have zero variance".into(),
        ));
    }

    let n = shadow_db.len() as f64;
    let gaussian = GaussianParams {
        mean_db: m.mean,
        std_db: m.std,
    };
    let gaussian_ll = shadow_db
        .iter()
        .map(|&x| ln_std_normal_pdf((x - m.mean) / m.std) - m.std.ln())
        .sum::<f64>();

    let init = skew_moment_init(&m);
    // Negative mean log likelihood keeps the objective scale O(1).
    let objective = |p: &[f64]| {
        if p[1] <= 0.0 {
            return 1e30;
        }
        let params = SkewNormalParams {
            location: p[0],
            scale: p[1],
            shape: p[2],
        };
        -shadow_db
            .iter()
            .map(|&x| skew_normal_logpdf(x, &params))
            .sum::<f64>()
            / n
    };
    let steps = [
        0.25 * init.scale,
        0.25 * init.scale,
        0.5 * init.shape.abs().max(1.0),
    ];
    let (best, neg_mean_ll) = nelder_mead(
        objective,
        &[init.location, init.scale, init.shape],
        &steps,
        &NelderMeadOptions::default(),
    );

    Ok(ShadowFitResult {
        gaussian,
        gaussian_log_likelihood: gaussian_ll,
        skew: SkewNormalParams {
            location: best[0],
            scale: best[1],
            shape: best[2],
        },
        skew_log_likelihood: -neg_mean_ll * n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagation::geometry::link_geometry;
    use crate::propagation::two_ray::{
        eval_two_ray, fit_path_loss, PathLossModelKind, TwoRayModel,
    };

    #[test]
    fn zero_shape_matches_the_gaussian_density() {
        let params = SkewNormalParams {
            location: 1.5,
            scale: 2.0,
            shape: 0.0,
        };
        for i in -50..=50 {
            let x = i as f64 * 0.2;
            let z = (x - 1.5) / 2.0;
            let gaussian = ln_std_normal_pdf(z) - 2.0f64.ln();
            assert!((skew_normal_logpdf(x, &params) - gaussian).abs() < 1e-12);
        }
    }

    #[test]
    fn density_integrates_to_one() {
        for params in [
            SkewNormalParams {
                location: 2.0,
                scale: 3.0,
                shape: -4.0,
            },
            SkewNormalParams {
                location: 0.0,
                scale: 1.0,
                shape: 10.0,
            },
        ] {
            // Simpson's rule over +-12 scales.
            let a = params.location - 12.0 * params.scale;
            let b = params.location + 12.0 * params.scale;
            let n = 20_000;
            let h = (b - a) / n as f64;
            let mut total = 0.0;
            for i in 0..=n {
                let w = if i == 0 || i == n {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                total += w * skew_normal_logpdf(a + i as f64 * h, &params).exp();
            }
            total *= h / 3.0;
            assert!((total - 1.0).abs() < 1e-6, "integral {total}");
        }
    }

    #[test]
    fn log_cdf_tail_is_continuous_at_the_switch() {
        let a = ln_std_normal_cdf(-34.0 - 1e-9);
        let b = ln_std_normal_cdf(-34.0 + 1e-9);
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        // Far tail stays finite where erfc underflows to zero.
        assert!(ln_std_normal_cdf(-60.0).is_finite());
        assert!(ln_std_normal_cdf(-60.0) < -1700.0);
    }

    #[test]
    fn sampler_matches_analytic_mean() {
        let params = SkewNormalParams {
            location: 2.0,
            scale: 3.0,
            shape: -4.0,
        };
        let x = sample_skew_normal(&params, 200_000, 17);
        let delta = -4.0 / (1.0f64 + 16.0).sqrt();
        let expected = 2.0 + 3.0 * delta * (2.0 / PI).sqrt();
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        assert!((mean - expected).abs() < 0.02, "{mean} vs {expected}");
        assert!(moments(&x).skewness < -0.5);
    }

    #[test]
    fn mle_recovers_skew_normal_parameters() {
        let truth = SkewNormalParams {
            location: 2.0,
            scale: 3.0,
            shape: -4.0,
        };
        let x = sample_skew_normal(&truth, 10_000, 99);
        let fit = fit_shadowing_distribution(&x).unwrap();
        assert!(
            (fit.skew.location - 2.0).abs() < 0.2,
            "location {}",
            fit.skew.location
        );
        assert!((fit.skew.scale - 3.0).abs() < 0.3, "scale {}", fit.skew.scale);
        assert!((fit.skew.shape + 4.0).abs() < 0.4, "shape {}", fit.skew.shape);
        assert!(fit.skew_log_likelihood > fit.gaussian_log_likelihood + 10.0);
    }

    #[test]
    fn gaussian_data_leaves_no_likelihood_gap() {
        let truth = SkewNormalParams {
            location: -1.0,
            scale: 2.0,
            shape: 0.0,
        };
        let x = sample_skew_normal(&truth, 5_000, 4);
        let fit = fit_shadowing_distribution(&x).unwrap();
        let gap = fit.skew_log_likelihood - fit.gaussian_log_likelihood;
        assert!(gap > -1e-6, "skew fit fell below the nested gaussian: {gap}");
        assert!(gap < 5.0, "spurious skew evidence on gaussian data: {gap}");
        // The likelihood is flat in the shape near 0, so judge the fit by
        // the skewness it implies rather than the raw shape value.
        let delta = fit.skew.shape / (1.0 + fit.skew.shape * fit.skew.shape).sqrt();
        let m = delta * (2.0 / PI).sqrt();
        let implied = (4.0 - PI) / 2.0 * m.powi(3) / (1.0 - m * m).powf(1.5);
        assert!(implied.abs() < 0.15, "implied skewness {implied}");
    }

    #[test]
    fn shape_sign_survives_the_round_trip() {
        for shape in [4.0, -4.0] {
            let truth = SkewNormalParams {
                location: 0.0,
                scale: 1.0,
                shape,
            };
            let x = sample_skew_normal(&truth, 8_000, 21);
            let fit = fit_shadowing_distribution(&x).unwrap();
            assert_eq!(fit.skew.shape.signum(), shape.signum());
            assert!(fit.skew.shape.abs() > 1.0);
        }
    }

    #[test]
    fn shift_moves_only_the_location() {
        let truth = SkewNormalParams {
            location: 1.0,
            scale: 2.0,
            shape: 3.0,
        };
        let x = sample_skew_normal(&truth, 6_000, 8);
        let shifted: Vec<f64> = x.iter().map(|v| v + 3.0).collect();
        let a = fit_shadowing_distribution(&x).unwrap();
        let b = fit_shadowing_distribution(&shifted).unwrap();
        assert!((b.skew.location - a.skew.location - 3.0).abs() < 0.05);
        assert!((b.skew.scale - a.skew.scale).abs() < 0.05);
        assert!((b.skew.shape - a.skew.shape).abs() < 0.1);
        assert!((b.gaussian.mean_db - a.gaussian.mean_db - 3.0).abs() < 1e-9);
    }

    #[test]
    fn exact_model_leaves_zero_shadowing() {
        let model = TwoRayModel::default();
        let mut samples = Vec::new();
        for i in 0..50 {
            let geometry = link_geometry(100.0 + 10.0 * i as f64, 10.0, 30.0).unwrap();
            let gain = eval_two_ray(&model, &geometry).unwrap();
            samples.push(PathLossSample {
                geometry,
                rsrp_dbm: 12.0 + 10.0 * gain.log10(),
            });
        }
        let fit = fit_path_loss(&samples, &model, PathLossModelKind::TwoRay).unwrap();
        let shadow = extract_shadowing(&samples, &fit).unwrap();
        for s in &shadow {
            assert!(s.abs() < 1e-6, "residual shadowing {s}");
        }
    }

    #[test]
    fn rejects_degenerate_sample_sets() {
        assert!(fit_shadowing_distribution(&[1.0; 4]).is_err());
        assert!(fit_shadowing_distribution(&[2.5; 100]).is_err());
    }
}
