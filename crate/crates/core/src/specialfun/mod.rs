mod bessel;
mod dd;
mod gamma;
mod kernels;
mod params;
mod su2;
mod whittaker;

use num_complex::Complex64;
use serde::Serialize;

pub use bessel::{bessel_i, bessel_j, bessel_k, j_star};
pub use gamma::{cos_pi, gamma, gamma_real, ln_gamma, rgamma, sin_pi};
pub use kernels::{jstar_pair, kernel_complex, kernel_real};
pub use params::{PlaceKind, RealSeries, SpectralParam, WeightSpec};
pub use su2::{su2_coeff, su2_column, su2_matrix};
pub use whittaker::{whittaker_real_norm, whittaker_real_norm_integral, whittaker_w};

/// A value with an absolute error estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: Complex64,
    pub err: f64,
}
