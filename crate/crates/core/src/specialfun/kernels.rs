use std::f64::consts::PI;

use num_complex::Complex64;

use super::bessel::{bessel_j, j_star};
use super::gamma::sin_pi;
use super::Estimate;
use crate::error::{domain, Error, Result};

const REAL_NEAR_ZERO: f64 = 1e-3;
const COMPLEX_NEAR_ZERO: f64 = 1e-4;

fn kernel_real_direct(nu: Complex64, x: f64) -> Result<Estimate> {
    let s = sin_pi(nu);
    let minus = bessel_j(-2.0 * nu, x)?;
    let plus = bessel_j(2.0 * nu, x)?;
    let value = (minus - plus) * (2.0 * PI) / s;
    let scale = (minus.norm() + plus.norm()) * 2.0 * PI / s.norm();
    Ok(Estimate { value, err: 64.0 * f64::EPSILON * scale })
}

/// Real-place kernel (2π / sin πν)(J_{−2ν}(|z|) − J_{2ν}(|z|)).
pub fn kernel_real(nu: Complex64, z: f64) -> Result<Estimate> {
    if z == 0.0 || !z.is_finite() {
        return domain("kernel_real: argument must be nonzero and finite");
    }
    if nu.im.abs() < 1e-12 && (nu.re - nu.re.round()).abs() < 1e-12 && nu.re.round() != 0.0 {
        return domain(format!("kernel_real: ν = {nu} is a nonzero integer (pole of 1/sin πν)"));
    }
    let x = z.abs();
    if nu.norm() >= REAL_NEAR_ZERO {
        return kernel_real_direct(nu, x);
    }
    // The kernel is even in ν, hence a function of s = ν². Interpolate in s
    // through ν = 1e−3, 2e−3, 3e−3; at s = 0 this is a two-level Richardson
    // extrapolation.
    let nodes: Vec<(f64, Estimate)> = (1..=3)
        .map(|j| {
            let t = j as f64 * REAL_NEAR_ZERO;
            kernel_real_direct(Complex64::new(t, 0.0), x).map(|e| (t * t, e))
        })
        .collect::<Result<_>>()?;
    let s = nu * nu;
    let mut value = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    for (i, (si, ei)) in nodes.iter().enumerate() {
        let mut weight = Complex64::new(1.0, 0.0);
        for (j, (sj, _)) in nodes.iter().enumerate() {
            if i != j {
                weight *= (s - sj) / (si - sj);
            }
        }
        value += weight * ei.value;
        err += weight.norm() * ei.err;
    }
    let (s1, s2) = (nodes[0].0, nodes[1].0);
    let linear = nodes[0].1.value * (s2 / (s2 - s1)) - nodes[1].1.value * (s1 / (s2 - s1));
    err += (linear - value).norm() * 1e-2;
    Ok(Estimate { value, err })
}

/// 𝒥*_{ν,p}(z) = J*_{ν−p}(z) J*_{ν+p}(z̄).
pub fn jstar_pair(nu: Complex64, p: i64, z: Complex64) -> Estimate {
    let a = j_star(nu - p as f64, z);
    let b = j_star(nu + p as f64, z.conj());
    Estimate {
        value: a.value * b.value,
        err: a.err * b.value.norm() + b.err * a.value.norm(),
    }
}

fn kernel_complex_direct(nu: Complex64, p: i64, z: Complex64) -> Estimate {
    let r = z.norm() / 2.0;
    let unit = Complex64::new(0.0, 1.0) * z / z.norm();
    let rc = Complex64::new(r, 0.0);
    let first = rc.powc(-2.0 * nu) * unit.powi((2 * p) as i32);
    let second = rc.powc(2.0 * nu) * unit.powi((-2 * p) as i32);
    let a = jstar_pair(-nu, -p, z);
    let b = jstar_pair(nu, p, z);
    let s = sin_pi(nu - p as f64);
    let value = (first * a.value - second * b.value) / s;
    let scale = first.norm() * a.value.norm() + second.norm() * b.value.norm();
    let err = (first.norm() * a.err + second.norm() * b.err + 16.0 * f64::EPSILON * scale) / s.norm();
    Estimate { value, err }
}

/// Complex-place kernel
/// {|z/2|^{−2ν}(iz/|z|)^{2p}𝒥*_{−ν,−p}(z) − |z/2|^{2ν}(iz/|z|)^{−2p}𝒥*_{ν,p}(z)} / sin π(ν−p).
/// Near ν = 0 the quotient is 0/0; it is reconstructed from ν = ±iε, ±2iε.
pub fn kernel_complex(nu: Complex64, p: i64, z: Complex64) -> Result<Estimate> {
    if z.norm() == 0.0 || !z.re.is_finite() || !z.im.is_finite() {
        return domain("kernel_complex: argument must be nonzero and finite");
    }
    if nu.norm() >= COMPLEX_NEAR_ZERO {
        return Ok(kernel_complex_direct(nu, p, z));
    }
    let eps = COMPLEX_NEAR_ZERO;
    let at = |t: f64| kernel_complex_direct(Complex64::new(0.0, t), p, z);
    let (b1p, b1m, b2p, b2m) = (at(eps), at(-eps), at(2.0 * eps), at(-2.0 * eps));
    let even1 = (b1p.value + b1m.value) / 2.0;
    let even2 = (b2p.value + b2m.value) / 2.0;
    let odd1 = (b1p.value - b1m.value) / Complex64::new(0.0, 2.0 * eps);
    let odd2 = (b2p.value - b2m.value) / Complex64::new(0.0, 4.0 * eps);
    let b0 = (4.0 * even1 - even2) / 3.0;
    let b1 = (4.0 * odd1 - odd2) / 3.0;
    // E(ε) = B(0) − B''(0)ε²/2 + O(ε⁴)
    let b2 = (even1 - even2) / (1.5 * eps * eps);
    let disagreement = (even1 - b0).norm();
    if disagreement > 1e-6 * b0.norm().max(1.0) {
        return Err(Error::Accuracy {
            message: format!("kernel_complex: extrapolation at ν ≈ 0, p = {p} did not settle"),
            achieved: disagreement,
        });
    }
    let value = b0 + b1 * nu + b2 * nu * nu / 2.0;
    let err = (b1p.err + b1m.err + b2p.err + b2m.err) * 2.0 + disagreement * 0.05;
    Ok(Estimate { value, err })
}

#[cfg(test)]
mod tests {
    use super::super::bessel::{bessel_j_integral, tests::bessel_y0};
    use super::super::gamma::rgamma;
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn real_kernel_is_real_and_even() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let nu = c(0.0, rng.random_range(0.01..8.0));
            let z = rng.random_range(0.01..15.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let v = kernel_real(nu, z).unwrap();
            assert!(v.value.im.abs() < 1e-10 * v.value.norm().max(1.0), "ν = {nu}, z = {z}");
            let w = kernel_real(-nu, z).unwrap();
            assert!((v.value - w.value).norm() < 1e-12 * v.value.norm().max(1.0));
        }
    }

    #[test]
    fn real_kernel_discrete_series() {
        // ν = 3/2: 4π J₃, checked against the integral representation of J₃
        for x in [0.4, 2.0, 9.0, 17.0] {
            let v = kernel_real(c(1.5, 0.0), x).unwrap();
            let want = 4.0 * PI * bessel_j_integral(c(3.0, 0.0), x);
            assert!((v.value - want).norm() < 1e-11, "x = {x}");
        }
        assert!(kernel_real(c(2.0, 0.0), 1.0).is_err());
    }

    #[test]
    fn real_kernel_limit_at_zero() {
        for x in [0.3, 1.0, 4.0, 10.0] {
            let want = -4.0 * PI * bessel_y0(x);
            let got = kernel_real(c(0.0, 0.0), x).unwrap();
            assert!((got.value.re - want).abs() < 1e-9, "x = {x}: {} vs {want}", got.value);
            // the interpolant agrees with direct evaluation just inside the switch
            let nu = c(0.0, 0.9e-3);
            let near = kernel_real(nu, x).unwrap().value;
            let direct = kernel_real_direct(nu, x).unwrap().value;
            assert!((near - direct).norm() < 1e-10, "x = {x}");
        }
    }

    #[test]
    fn complex_kernel_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..100 {
            let nu = c(0.0, rng.random_range(-4.0..4.0));
            let p = rng.random_range(-3..=3);
            let z = c(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            let a = kernel_complex(nu, p, z).unwrap().value;
            let b = kernel_complex(-nu, -p, z).unwrap().value;
            assert!((a - b).norm() < 1e-9 * a.norm().max(1.0), "ν = {nu}, p = {p}, z = {z}");
        }
    }

    #[test]
    fn complex_kernel_reality() {
        for t in [0.3, 1.0, 2.5] {
            for x in [0.2, 1.0, 3.0] {
                let v = kernel_complex(c(0.0, t), 0, c(x, 0.0)).unwrap().value;
                assert!(v.im.abs() < 1e-9 * v.norm().max(1.0), "t = {t}, x = {x}: {v}");
            }
        }
    }

    #[test]
    fn complex_kernel_square_root_branch() {
        let z = c(0.7, -1.1);
        for (nu, p) in [(c(0.0, 1.3), 2), (c(0.2, 0.0), 0)] {
            let a = kernel_complex(nu, p, z).unwrap().value;
            let b = kernel_complex(nu, p, -z).unwrap().value;
            assert!((a - b).norm() < 1e-12 * a.norm().max(1.0));
        }
    }

    #[test]
    fn complex_kernel_small_argument() {
        let z = c(1e-3, 0.0);
        for (nu, p) in [(c(0.3, 0.0), 0), (c(0.45, 0.0), 0), (c(0.4, 0.5), 1)] {
            let v = kernel_complex(nu, p, z).unwrap().value;
            let unit = c(0.0, 1.0);
            let lead = c(z.norm() / 2.0, 0.0).powc(-2.0 * nu)
                * unit.powi((2 * p) as i32)
                * rgamma(1.0 - nu + p as f64)
                * rgamma(1.0 - nu - p as f64)
                / sin_pi(nu - p as f64);
            assert!(((v / lead) - 1.0).norm() < 1e-2, "ν = {nu}, p = {p}: ratio {}", v / lead);
        }
    }

    #[test]
    fn complex_kernel_removable_point() {
        for p in [0, 1, 2] {
            let z = c(0.8, 0.5);
            let at_zero = kernel_complex(c(0.0, 0.0), p, z).unwrap();
            // compare with direct evaluation a little away from the switch
            let away = kernel_complex_direct(c(0.0, 2e-3), p, z).value;
            let away_neg = kernel_complex_direct(c(0.0, -2e-3), p, z).value;
            let mid = (away + away_neg) / 2.0;
            assert!((at_zero.value - mid).norm() < 1e-5 * mid.norm().max(1.0), "p = {p}");
            let inside = kernel_complex(c(0.0, 5e-5), p, z).unwrap().value;
            let direct = kernel_complex_direct(c(0.0, 5e-5), p, z).value;
            assert!((inside - direct).norm() < 1e-6 * direct.norm().max(1.0));
        }
    }
}
