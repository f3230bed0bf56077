/// Options for the Nelder-Mead simplex search.
#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub max_iters: usize,
    /// Stop when the simplex function-value spread falls below this.
    pub f_tol: f64,
    /// Number of full restarts from the incumbent best point; each restart
    /// rebuilds the simplex with the step sizes halved.
    pub restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            max_iters: 2000,
            f_tol: 1e-12,
            restarts: 2,
        }
    }
}

/// Derivative-free minimization of `f` starting at `x0`.
///
/// Fully deterministic: the initial simplex is `x0` plus one axis step per
/// dimension, ordering ties are resolved by insertion order, and no
/// randomness is used anywhere. Returns the best point and its value.
pub fn nelder_mead<F>(
    f: F,
    x0: &[f64],
    step: &[f64],
    opts: &NelderMeadOptions,
) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64,
{
    assert_eq!(x0.len(), step.len(), "step size per dimension required");
    let mut best = x0.to_vec();
    let mut best_f = f(&best);
    let mut scale = 1.0;

    for _ in 0..=opts.restarts {
        let (x, fx) = run_simplex(&f, &best, step, scale, opts);
        if fx < best_f {
            best = x;
            best_f = fx;
        }
        scale *= 0.5;
    }
    (best, best_f)
}

fn run_simplex<F>(
    f: &F,
    x0: &[f64],
    step: &[f64],
    scale: f64,
    opts: &NelderMeadOptions,
) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        let s = step[i] * scale;
        v[i] += if s != 0.0 { s } else { 1e-3 };
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();

    for _ in 0..opts.max_iters {
        // Stable sort keeps tie handling deterministic.
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
        let reordered: Vec<Vec<f64>> = order.iter().map(|&i| simplex[i].clone()).collect();
        let reordered_vals: Vec<f64> = order.iter().map(|&i| values[i]).collect();
        simplex = reordered;
        values = reordered_vals;

        if values[n] - values[0] <= opts.f_tol * (1.0 + values[0].abs()) {
            break;
        }

        let mut centroid = vec![0.0; n];
        for v in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }

        let point = |coef: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n])
                .map(|(&c, &w)| c + coef * (c - w))
                .collect()
        };

        let reflected = point(alpha);
        let f_r = f(&reflected);
        if f_r < values[0] {
            let expanded = point(gamma);
            let f_e = f(&expanded);
            if f_e < f_r {
                simplex[n] = expanded;
                values[n] = f_e;
            } else {
                simplex[n] = reflected;
                values[n] = f_r;
            }
        } else if f_r < values[n - 1] {
            simplex[n] = reflected;
            values[n] = f_r;
        } else {
            let contracted = if f_r < values[n] {
                point(rho)
            } else {
                point(-rho)
            };
            let f_c = f(&contracted);
            if f_c < values[n].min(f_r) {
                simplex[n] = contracted;
                values[n] = f_c;
            } else {
                for i in 1..=n {
                    let shrunk: Vec<f64> = simplex[i]
                        .iter()
                        .zip(&simplex[0])
                        .map(|(&x, &b)| b + sigma * (x - b))
                        .collect();
                    values[i] = f(&shrunk);
                    simplex[i] = shrunk;
                }
            }
        }
    }

    let mut best = 0;
    for i in 1..=n {
        if values[i] < values[best] {
            best = i;
        }
    }
    (simplex[best].clone(), values[best])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_quadratic_bowl() {
        let f = |x: &[f64]| (x[0] - 3.0).powi(2) + 2.0 * (x[1] + 1.5).powi(2);
        let (x, fx) = nelder_mead(f, &[0.0, 0.0], &[1.0, 1.0], &NelderMeadOptions::default());
        assert!((x[0] - 3.0).abs() < 1e-6, "{x:?}");
        assert!((x[1] + 1.5).abs() < 1e-6, "{x:?}");
        assert!(fx < 1e-10);
    }

    #[test]
    fn minimizes_rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let opts = NelderMeadOptions {
            max_iters: 5000,
            restarts: 3,
            ..Default::default()
        };
        let (x, _) = nelder_mead(f, &[-1.2, 1.0], &[0.5, 0.5], &opts);
        assert!((x[0] - 1.0).abs() < 1e-4 && (x[1] - 1.0).abs() < 1e-4, "{x:?}");
    }

    #[test]
    fn deterministic_across_runs() {
        let f = |x: &[f64]| x[0].powi(4) + (x[1] - 0.3).powi(2) + (x[0] * x[1]).powi(2);
        let a = nelder_mead(f, &[1.0, -1.0], &[0.7, 0.7], &NelderMeadOptions::default());
        let b = nelder_mead(f, &[1.0, -1.0], &[0.7, 0.7], &NelderMeadOptions::default());
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn one_dimensional_search_works() {
        let f = |x: &[f64]| (x[0].ln() - 1.0).powi(2);
        let (x, _) = nelder_mead(f, &[1.0], &[0.5], &NelderMeadOptions::default());
        assert!((x[0] - std::f64::consts::E).abs() < 1e-5);
    }
}
