use crate::{Error, Result};

/// Cubic spline through `(x, y)` knots with not-a-knot boundary
/// conditions.
///
/// Inside the knot range this is the classic C2 interpolant; outside it
/// the boundary polynomial is evaluated directly (clamped-segment
/// extrapolation). Not-a-knot avoids the flattened curvature a natural
/// spline forces at the ends, so polynomials up to degree three are
/// reproduced exactly everywhere, extrapolation included. Three knots
/// degenerate to the parabola through them, two to a line.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Second derivative at each knot.
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(xs: &[f64], ys: &[f64]) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::invalid("spline needs matching x/y lengths"));
        }
        if xs.len() < 2 {
            return Err(Error::invalid("spline needs at least two knots"));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("spline knots must be strictly increasing"));
        }

        let n = xs.len();
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let slope = |i: usize| (ys[i + 1] - ys[i]) / h[i];
        let mut m = vec![0.0; n];

        if n == 3 {
            // Single parabola: constant second derivative.
            let v = 2.0 * (slope(1) - slope(0)) / (h[0] + h[1]);
            m.fill(v);
        } else if n > 3 {
            // Interior continuity equations for i = 1..n-2:
            //   h[i-1] M[i-1] + 2(h[i-1]+h[i]) M[i] + h[i] M[i+1] = r[i]
            // with M[0] and M[n-1] eliminated via third-derivative
            // continuity at the first and last interior knots.
            let k = n - 2;
            let mut lower = vec![0.0; k];
            let mut diag = vec![0.0; k];
            let mut upper = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            for j in 0..k {
                let i = j + 1;
                lower[j] = h[i - 1];
                diag[j] = 2.0 * (h[i - 1] + h[i]);
                upper[j] = h[i];
                rhs[j] = 6.0 * (slope(i) - slope(i - 1));
            }
            // M[0] = M[1] - h[0] (M[2]-M[1]) / h[1]
            diag[0] += h[0] + h[0] * h[0] / h[1];
            upper[0] -= h[0] * h[0] / h[1];
            // M[n-1] = M[n-2] + h[n-2] (M[n-2]-M[n-3]) / h[n-3]
            diag[k - 1] += h[n - 2] + h[n - 2] * h[n - 2] / h[n - 3];
            lower[k - 1] -= h[n - 2] * h[n - 2] / h[n - 3];

            // Thomas algorithm.
            for j in 1..k {
                let w = lower[j] / diag[j - 1];
                diag[j] -= w * upper[j - 1];
                rhs[j] -= w * rhs[j - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for j in (0..k - 1).rev() {
                m[j + 1] = (rhs[j] - upper[j] * m[j + 2]) / diag[j];
            }
            m[0] = m[1] - h[0] * (m[2] - m[1]) / h[1];
            m[n - 1] = m[n - 2] + h[n - 2] * (m[n - 2] - m[n - 3]) / h[n - 3];
        }

        Ok(CubicSpline {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            m,
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        // Segment index, clamping to the boundary segments outside the span.
        let i = match self.xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(k) => k.min(n - 2),
            Err(0) => 0,
            Err(k) => (k - 1).min(n - 2),
        };
        let h = self.xs[i + 1] - self.xs[i];
        let t = x - self.xs[i];
        let b = (self.ys[i + 1] - self.ys[i]) / h - h * (2.0 * self.m[i] + self.m[i + 1]) / 6.0;
        self.ys[i]
            + b * t
            + self.m[i] / 2.0 * t * t
            + (self.m[i + 1] - self.m[i]) / (6.0 * h) * t * t * t
    }
}
