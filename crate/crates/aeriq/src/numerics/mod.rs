//! Small numeric building blocks shared across modules.

mod optim;
mod spline;

pub use optim::{nelder_mead, NelderMeadOptions};
pub use spline::CubicSpline;
