use super::antenna::AntennaPattern;
use super::geometry::LinkGeometry;
use crate::numerics::{nelder_mead, NelderMeadOptions};
use crate::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

pub const SPEED_OF_LIGHT_M_S: f64 = 299_792_458.0;

/// Carrier frequency of the measured downlink, Hz.
pub const DEFAULT_CARRIER_FREQ_HZ: f64 = 3.51e9;

/// Ground reflection coefficient specification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reflection {
    /// Angle-independent complex coefficient.
    Constant(Complex64),
    /// Fresnel coefficient for vertical polarization over a dielectric
    /// ground with the given relative permittivity.
    Fresnel { relative_permittivity: f64 },
}

impl Reflection {
    /// Coefficient at a grazing angle in radians.
    pub fn coefficient(&self, grazing_rad: f64) -> Complex64 {
        match *self {
            Reflection::Constant(gamma) => gamma,
            Reflection::Fresnel {
                relative_permittivity: eps,
            } => {
                let (sin_psi, cos_psi) = grazing_rad.sin_cos();
                let root = (eps - cos_psi * cos_psi).sqrt();
                Complex64::new((eps * sin_psi - root) / (eps * sin_psi + root), 0.0)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Reflection::Constant(gamma) => {
                if gamma.norm() > 1.0 + 1e-12 {
                    return Err(Error::invalid(format!(
                        "reflection magnitude {} exceeds 1",
                        gamma.norm()
                    )));
                }
            }
            Reflection::Fresnel {
                relative_permittivity,
            } => {
                if !(relative_permittivity > 1.0) {
                    return Err(Error::invalid(format!(
                        "relative permittivity must exceed 1, got {relative_permittivity}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Two-ray ground reflection path-gain model.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoRayModel {
    pub wavelength_m: f64,
    pub tx_pattern: AntennaPattern,
    pub rx_pattern: AntennaPattern,
    pub reflection: Reflection,
}

impl Default for TwoRayModel {
    /// Isotropic antennas and medium dry ground at the default carrier.
    fn default() -> Self {
        TwoRayModel {
            wavelength_m: SPEED_OF_LIGHT_M_S / DEFAULT_CARRIER_FREQ_HZ,
            tx_pattern: AntennaPattern::isotropic(),
            rx_pattern: AntennaPattern::isotropic(),
            reflection: Reflection::Fresnel {
                relative_permittivity: 15.0,
            },
        }
    }
}

impl TwoRayModel {
    /// Phase lag of the reflected ray relative to the direct ray, radians.
    pub fn delta_tau(&self, geom: &LinkGeometry) -> f64 {
        2.0 * PI / self.wavelength_m * geom.excess_path_m()
    }

    fn validate(&self) -> Result<()> {
        if !(self.wavelength_m > 0.0) {
            return Err(Error::invalid("wavelength must be positive"));
        }
        self.reflection.validate()
    }
}

/// Linear path gain of the two-ray model.
///
/// Direct and ground-reflected rays combine coherently; antenna gains are
/// sampled at the line-of-sight elevation for the direct ray and at the
/// grazing angle for the reflected ray. The result is at most a few times
/// the Friis gain and is reported in dB as `10 log10`.
pub fn eval_two_ray(model: &TwoRayModel, geom: &LinkGeometry) -> Result<f64> {
    model.validate()?;
    if geom.d_3d <= 0.0 {
        return Err(Error::invalid("two-ray model is singular at zero distance"));
    }
    let parts = ray_parts(model, geom);
    Ok(combine(&parts, model.reflection.coefficient(geom.theta_r)))
}

/// Friis free-space path gain with antenna patterns.
pub fn eval_free_space(model: &TwoRayModel, geom: &LinkGeometry) -> Result<f64> {
    model.validate()?;
    if geom.d_3d <= 0.0 {
        return Err(Error::invalid(
            "free-space model is singular at zero distance",
        ));
    }
    let theta_l_deg = geom.theta_l.to_degrees();
    let scale = model.wavelength_m / (4.0 * PI * geom.d_3d);
    Ok(scale
        * scale
        * model.tx_pattern.gain_linear(theta_l_deg)
        * model.rx_pattern.gain_linear(theta_l_deg))
}

/// Reflection-independent factors of one two-ray evaluation.
struct RayParts {
    /// Direct-ray amplitude: root gain product over distance.
    direct: f64,
    /// Reflected-ray amplitude before the reflection coefficient.
    reflected: f64,
    /// Phase lag of the reflected ray.
    phase: f64,
    grazing_rad: f64,
    scale: f64,
}

fn ray_parts(model: &TwoRayModel, geom: &LinkGeometry) -> RayParts {
    let theta_l_deg = geom.theta_l.to_degrees();
    let theta_r_deg = geom.theta_r.to_degrees();
    let los_gain = (model.tx_pattern.gain_linear(theta_l_deg)
        * model.rx_pattern.gain_linear(theta_l_deg))
    .sqrt();
    let ref_gain = (model.tx_pattern.gain_linear(theta_r_deg)
        * model.rx_pattern.gain_linear(theta_r_deg))
    .sqrt();
    RayParts {
        direct: los_gain / geom.d_3d,
        reflected: ref_gain / (geom.r1 + geom.r2),
        phase: model.delta_tau(geom),
        grazing_rad: geom.theta_r,
        scale: model.wavelength_m / (4.0 * PI),
    }
}

fn combine(parts: &RayParts, gamma: Complex64) -> f64 {
    let sum = Complex64::new(parts.direct, 0.0)
        + gamma * parts.reflected * Complex64::from_polar(1.0, -parts.phase);
    parts.scale * parts.scale * sum.norm_sqr()
}

/// Which path-gain model a fit or prediction uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathLossModelKind {
    TwoRay,
    FreeSpace,
}

/// One RSRP measurement attached to its link geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLossSample {
    pub geometry: LinkGeometry,
    pub rsrp_dbm: f64,
}

/// Result of [`fit_path_loss`].
#[derive(Debug, Clone)]
pub struct PathLossFit {
    pub kind: PathLossModelKind,
    /// Input model with the reflection specification replaced by the
    /// fitted one.
    pub model: TwoRayModel,
    /// Fitted dB offset absorbing transmit power and front-end gain.
    pub offset_db: f64,
    /// Per-sample dB residuals; zero mean by construction.
    pub residuals_db: Vec<f64>,
    pub rms_residual_db: f64,
}

impl PathLossFit {
    /// Predicted RSRP in dBm at a geometry.
    pub fn predict_db(&self, geom: &LinkGeometry) -> Result<f64> {
        let gain = match self.kind {
            PathLossModelKind::TwoRay => eval_two_ray(&self.model, geom)?,
            PathLossModelKind::FreeSpace => eval_free_space(&self.model, geom)?,
        };
        Ok(self.offset_db + 10.0 * gain.max(f64::MIN_POSITIVE).log10())
    }
}

const INFEASIBLE: f64 = 1e30;

/// Least-squares fit of `rsrp ~ offset + 10 log10(gain(geometry))` in the
/// dB domain.
///
/// The offset has a closed-form optimum (the mean dB misfit), so the
/// search runs only over the reflection parameters: relative permittivity
/// for a Fresnel specification, the complex coefficient for a constant
/// one, nothing for free space. A fixed coarse grid seeds a deterministic
/// Nelder-Mead refinement, since the oscillatory two-ray landscape has
/// local minima.
pub fn fit_path_loss(
    samples: &[PathLossSample],
    template: &TwoRayModel,
    kind: PathLossModelKind,
) -> Result<PathLossFit> {
    template.validate()?;
    if samples.len() < 10 {
        return Err(Error::FitFailed(format!(
            "need at least 10 samples, got {}",
            samples.len()
        )));
    }
    let d_min = samples.iter().map(|s| s.geometry.d_3d).fold(f64::MAX, f64::min);
    let d_max = samples.iter().map(|s| s.geometry.d_3d).fold(f64::MIN, f64::max);
    if d_min <= 0.0 {
        return Err(Error::invalid("sample at zero distance"));
    }
    if d_max - d_min < 1e-9 {
        return Err(Error::FitFailed(
            "all samples at one distance: offset and reflection are not identifiable".into(),
        ));
    }

    let parts: Vec<RayParts> = samples
        .iter()
        .map(|s| ray_parts(template, &s.geometry))
        .collect();
    let rsrp: Vec<f64> = samples.iter().map(|s| s.rsrp_dbm).collect();

    // dB misfits against the unit-offset model; SSE after the optimal
    // (mean) offset is removed.
    let misfits = |reflection: &Reflection| -> Vec<f64> {
        parts
            .iter()
            .zip(&rsrp)
            .map(|(p, &r)| {
                let gain = match kind {
                    PathLossModelKind::TwoRay => {
                        combine(p, reflection.coefficient(p.grazing_rad))
                    }
                    PathLossModelKind::FreeSpace => {
                        let a = p.scale * p.direct;
                        a * a
                    }
                };
                r - 10.0 * gain.max(f64::MIN_POSITIVE).log10()
            })
            .collect()
    };
    let sse = |reflection: &Reflection| -> f64 {
        let m = misfits(reflection);
        let mean = m.iter().sum::<f64>() / m.len() as f64;
        m.iter().map(|v| (v - mean) * (v - mean)).sum()
    };

    let fitted_reflection = if kind == PathLossModelKind::FreeSpace {
        template.reflection
    } else {
        match template.reflection {
            Reflection::Fresnel { .. } => {
                let objective = |x: &[f64]| {
                    if x[0] <= 1.01 {
                        return INFEASIBLE;
                    }
                    sse(&Reflection::Fresnel {
                        relative_permittivity: x[0],
                    })
                };
                let grid = [
                    1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 10.0, 12.0, 15.0, 20.0, 25.0, 30.0, 40.0,
                    55.0, 81.0,
                ];
                let seed = grid
                    .iter()
                    .copied()
                    .min_by(|a, b| objective(&[*a]).partial_cmp(&objective(&[*b])).unwrap())
                    .unwrap();
                let (best, _) = nelder_mead(
                    objective,
                    &[seed],
                    &[0.2 * seed],
                    &NelderMeadOptions::default(),
                );
                Reflection::Fresnel {
                    relative_permittivity: best[0],
                }
            }
            Reflection::Constant(_) => {
                let objective = |x: &[f64]| {
                    let gamma = Complex64::new(x[0], x[1]);
                    if gamma.norm() > 1.0 {
                        return INFEASIBLE;
                    }
                    sse(&Reflection::Constant(gamma))
                };
                let mut seed = [0.0, 0.0];
                let mut best_val = f64::MAX;
                for re in [-1.0, -0.6, -0.2, 0.2, 0.6, 1.0] {
                    for im in [-0.6, 0.0, 0.6] {
                        let v = objective(&[re, im]);
                        if v < best_val {
                            best_val = v;
                            seed = [re, im];
                        }
                    }
                }
                let (best, _) = nelder_mead(
                    objective,
                    &seed,
                    &[0.15, 0.15],
                    &NelderMeadOptions::default(),
                );
                Reflection::Constant(Complex64::new(best[0], best[1]))
            }
        }
    };

    let m = misfits(&fitted_reflection);
    let offset_db = m.iter().sum::<f64>() / m.len() as f64;
    let residuals_db: Vec<f64> = m.iter().map(|v| v - offset_db).collect();
    let rms_residual_db =
        (residuals_db.iter().map(|v| v * v).sum::<f64>() / residuals_db.len() as f64).sqrt();

    let mut model = template.clone();
    model.reflection = fitted_reflection;
    Ok(PathLossFit {
        kind,
        model,
        offset_db,
        residuals_db,
        rms_residual_db,
    })
}
