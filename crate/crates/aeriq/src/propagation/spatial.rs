use crate::numerics::{nelder_mead, NelderMeadOptions};
use crate::{Error, Result};

/// One georeferenced shadowing observation in local ENU coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShadowSample {
    pub east_m: f64,
    pub north_m: f64,
    pub up_m: f64,
    pub shadow_db: f64,
}

/// Which separation the correlation curve is resolved over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelationAxis {
    /// Ground-plane distance between samples of the same population.
    Horizontal,
    /// Altitude separation between ordinal-matched samples of different
    /// populations (one population per flight level).
    Vertical,
}

/// One point of an empirical correlation curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationBin {
    /// Mean pair separation inside the bin, meters.
    pub distance_m: f64,
    pub correlation: f64,
    pub pair_count: usize,
}

struct PopulationStats {
    mean: f64,
    std: f64,
}

fn population_stats(samples: &[ShadowSample]) -> Result<PopulationStats> {
    if samples.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            have: samples.len(),
        });
    }
    let n = samples.len() as f64;
    let mean = samples.iter().map(|s| s.shadow_db).sum::<f64>() / n;
    // 1/n normalization makes a self-pair correlate to exactly 1.
    let var = samples
        .iter()
        .map(|s| (s.shadow_db - mean) * (s.shadow_db - mean))
        .sum::<f64>()
        / n;
    if !(var > 0.0) {
        return Err(Error::EstimateUnavailable(
            "population has zero shadowing variance".into(),
        ));
    }
    Ok(PopulationStats {
        mean,
        std: var.sqrt(),
    })
}

/// Empirical spatial autocorrelation of shadowing, binned by distance.
///
/// Each population is normalized by its own mean and standard deviation
/// before pairing. Horizontal curves pair every sample with every other
/// sample (and itself) inside one population; vertical curves pair the
/// k-th sample of one population with the k-th sample of each other
/// population, so flight tracks must be recorded in the same ground
/// order. Bins are `bin_width_m` wide and report the mean separation of
/// the pairs they hold.
pub fn spatial_correlation(
    populations: &[&[ShadowSample]],
    axis: CorrelationAxis,
    bin_width_m: f64,
) -> Result<Vec<CorrelationBin>> {
    if populations.is_empty() {
        return Err(Error::invalid("no shadowing populations given"));
    }
    if !(bin_width_m > 0.0) {
        return Err(Error::invalid("bin width must be positive"));
    }
    let stats: Vec<PopulationStats> = populations
        .iter()
        .map(|p| population_stats(p))
        .collect::<Result<_>>()?;

    // bin index -> (sum distance, sum product, count)
    let mut bins: Vec<(f64, f64, usize)> = Vec::new();
    let mut add = |distance: f64, product: f64| {
        let idx = (distance / bin_width_m).floor() as usize;
        if bins.len() <= idx {
            bins.resize(idx + 1, (0.0, 0.0, 0));
        }
        bins[idx].0 += distance;
        bins[idx].1 += product;
        bins[idx].2 += 1;
    };

    match axis {
        CorrelationAxis::Horizontal => {
            for (p, st) in populations.iter().zip(&stats) {
                for i in 0..p.len() {
                    for j in i..p.len() {
                        let de = p[i].east_m - p[j].east_m;
                        let dn = p[i].north_m - p[j].north_m;
                        let d = (de * de + dn * dn).sqrt();
                        let zi = (p[i].shadow_db - st.mean) / st.std;
                        let zj = (p[j].shadow_db - st.mean) / st.std;
                        add(d, zi * zj);
                    }
                }
            }
        }
        CorrelationAxis::Vertical => {
            for a in 0..populations.len() {
                for b in a..populations.len() {
                    let n = populations[a].len().min(populations[b].len());
                    for k in 0..n {
                        let sa = populations[a][k];
                        let sb = populations[b][k];
                        let d = (sa.up_m - sb.up_m).abs();
                        let za = (sa.shadow_db - stats[a].mean) / stats[a].std;
                        let zb = (sb.shadow_db - stats[b].mean) / stats[b].std;
                        add(d, za * zb);
                    }
                }
            }
        }
    }

    Ok(bins
        .into_iter()
        .filter(|&(_, _, count)| count > 0)
        .map(|(dist_sum, prod_sum, count)| CorrelationBin {
            distance_m: dist_sum / count as f64,
            correlation: prod_sum / count as f64,
            pair_count: count,
        })
        .collect())
}

/// Parametric form fitted to a correlation curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelationModelKind {
    /// `exp(-rate * d)`.
    SingleExponential,
    /// `w * exp(-fast * d) + (1 - w) * exp(-slow * d)`.
    BiExponential,
}

/// Fitted correlation-distance model; always 1 at zero separation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationFit {
    pub kind: CorrelationModelKind,
    /// Weight of the fast component, in [0, 1]; 1 for a single
    /// exponential.
    pub weight: f64,
    /// Larger decay rate, 1/m.
    pub fast_rate: f64,
    /// Smaller decay rate, 1/m; 0 for a single exponential.
    pub slow_rate: f64,
    /// Residual sum of squares over the input bins.
    pub rss: f64,
}

impl CorrelationFit {
    pub fn predict(&self, distance_m: f64) -> f64 {
        self.weight * (-self.fast_rate * distance_m).exp()
            + (1.0 - self.weight) * (-self.slow_rate * distance_m).exp()
    }
}

const RATE_GRID: [f64; 8] = [1.0, 0.3, 0.1, 0.03, 0.01, 0.003, 0.001, 0.0003];

/// Least-squares fit of an exponential correlation model to an empirical
/// curve, deterministic via a fixed grid of starting points plus
/// Nelder-Mead refinement.
///
/// Bi-exponential results are canonical: the fast rate strictly ordered
/// above the slow one, weight referring to the fast component.
pub fn fit_correlation_model(
    bins: &[CorrelationBin],
    kind: CorrelationModelKind,
) -> Result<CorrelationFit> {
    if bins.len() < 3 {
        return Err(Error::FitFailed(format!(
            "need at least 3 correlation bins, got {}",
            bins.len()
        )));
    }
    let options = NelderMeadOptions {
        max_iters: 4000,
        f_tol: 1e-16,
        restarts: 3,
    };
    let rss_of = |weight: f64, fast: f64, slow: f64| -> f64 {
        bins.iter()
            .map(|b| {
                let model = weight * (-fast * b.distance_m).exp()
                    + (1.0 - weight) * (-slow * b.distance_m).exp();
                let r = model - b.correlation;
                r * r
            })
            .sum()
    };

    let fit = match kind {
        CorrelationModelKind::SingleExponential => {
            let objective = |x: &[f64]| {
                if x[0] < 0.0 {
                    return 1e30;
                }
                rss_of(1.0, x[0], 0.0)
            };
            let seed = RATE_GRID
                .iter()
                .copied()
                .min_by(|a, b| objective(&[*a]).partial_cmp(&objective(&[*b])).unwrap())
                .unwrap();
            let (best, rss) = nelder_mead(objective, &[seed], &[0.3 * seed], &options);
            CorrelationFit {
                kind,
                weight: 1.0,
                fast_rate: best[0],
                slow_rate: 0.0,
                rss,
            }
        }
        CorrelationModelKind::BiExponential => {
            let objective = |x: &[f64]| {
                if !(0.0..=1.0).contains(&x[0]) || x[1] < 0.0 || x[2] < 0.0 {
                    return 1e30;
                }
                rss_of(x[0], x[1], x[2])
            };
            let mut seed = [0.5, 0.1, 0.01];
            let mut best_val = f64::MAX;
            for w in [0.1, 0.3, 0.5, 0.7, 0.9] {
                for (i, &fast) in RATE_GRID.iter().enumerate() {
                    for &slow in &RATE_GRID[i + 1..] {
                        let v = objective(&[w, fast, slow]);
                        if v < best_val {
                            best_val = v;
                            seed = [w, fast, slow];
                        }
                    }
                }
            }
            let steps = [0.1, 0.3 * seed[1], 0.3 * seed[2]];
            let (best, rss) = nelder_mead(objective, &seed, &steps, &options);
            let (mut weight, mut fast, mut slow) = (best[0], best[1], best[2]);
            if fast < slow {
                std::mem::swap(&mut fast, &mut slow);
                weight = 1.0 - weight;
            }
            CorrelationFit {
                kind,
                weight,
                fast_rate: fast,
                slow_rate: slow,
                rss,
            }
        }
    };
    Ok(fit)
}
