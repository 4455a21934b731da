use std::f64::consts::PI;

use num_complex::Complex64;

use super::{ComplexWeight, IwasawaPoint, JacquetExpansion};
use crate::error::{domain, Result};
use crate::specialfun::{gamma, rgamma, sin_pi, SpectralParam, WeightSpec};

const LOG_STEP: f64 = 0.05;
const LOG_UPPER: f64 = 1.5;

fn binomial(n: i64, k: i64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn validated(l: i64, q: i64, nu: Complex64, p: i64) -> Result<ComplexWeight> {
    let spectral = SpectralParam::complex(nu, p)?;
    WeightSpec::complex(l, q)?.validate(Some(&spectral))?;
    ComplexWeight::new(l, q, nu, p)
}

/// 𝒥₁(a(y)) for y > 0.
fn jacquet_on_torus(expansion: &JacquetExpansion, y: f64) -> Result<Complex64> {
    expansion.jacquet(&IwasawaPoint::height(y))
}

fn normalization(w: &ComplexWeight) -> f64 {
    let ComplexWeight { l, q, nu, p } = *w;
    let gamma_ratio = (gamma(nu + (l + 1) as f64) * rgamma(-nu + (l + 1) as f64)).norm();
    (8.0 * (2 * l + 1) as f64).sqrt() / (2.0 * PI).powf(nu.re)
        * (binomial(2 * l, l - q) / binomial(2 * l, l - p)).sqrt()
        * gamma_ratio.sqrt()
}

/// Normalized complex-place Whittaker function 𝒲_{l,q,ν,p}(y), extended to
/// y ∈ ℂ× by 𝒲(y) = 𝒲(|y|)(y/|y|)^{−q}.
pub fn whittaker_complex_norm(l: i64, q: i64, nu: Complex64, p: i64, y: Complex64) -> Result<Complex64> {
    let w = validated(l, q, nu, p)?;
    let r = y.norm();
    if r == 0.0 || !r.is_finite() {
        return domain("whittaker_complex_norm: argument must be nonzero and finite");
    }
    let expansion = JacquetExpansion::new(w, Complex64::new(1.0, 0.0))?;
    let radial = jacquet_on_torus(&expansion, r)? * normalization(&w);
    Ok(radial * (y / r).powi(-q as i32))
}

/// Trapezoid in s = ln y of |F(e^s)|², which decays at both ends.
fn log_integral<F: FnMut(f64) -> Result<f64>>(nu: Complex64, mut f: F) -> Result<f64> {
    // |𝒥₁(a(y))|² ~ y^{2−2|Re ν|} as y → 0
    let lower = -32.0 / (2.0 - 2.0 * nu.re.abs()).max(0.2);
    let n = ((LOG_UPPER - lower) / LOG_STEP).ceil() as usize;
    let mut sum = 0.0;
    for i in 0..=n {
        sum += f((lower + i as f64 * LOG_STEP).exp())?;
    }
    Ok(sum * LOG_STEP)
}

/// ∫_{ℂ×} |𝒲_{l,q,ν,p}(y)|² d×y. The angular factor is trivial, so this is
/// ∫₀^∞ |𝒲(r)|² dr/r.
pub fn complex_whittaker_norm_integral(l: i64, q: i64, nu: Complex64, p: i64) -> Result<f64> {
    validated(l, q, nu, p)?;
    log_integral(nu, |r| Ok(whittaker_complex_norm(l, q, nu, p, Complex64::new(r, 0.0))?.norm_sqr()))
}

/// Closed form of ∫₀^∞ |𝒥₁(a(y))|² dy/y.
pub fn torus_norm_closed(l: i64, q: i64, nu: Complex64, p: i64) -> Result<f64> {
    let w = validated(l, q, nu, p)?;
    Ok(normalization(&w).powi(-2))
}

/// Direct quadrature of ∫₀^∞ |𝒥₁(a(y))|² dy/y.
pub fn torus_norm_quadrature(l: i64, q: i64, nu: Complex64, p: i64) -> Result<f64> {
    let w = validated(l, q, nu, p)?;
    let expansion = JacquetExpansion::new(w, Complex64::new(1.0, 0.0))?;
    log_integral(nu, |y| Ok(jacquet_on_torus(&expansion, y)?.norm_sqr()))
}

/// λ(ν, q) = Σ_± 1/(Γ(½−ν±q/2) Γ(½+ν±q/2)).
pub fn lambda_real(nu: Complex64, q: i64) -> Result<Complex64> {
    SpectralParam::real(nu, None)?;
    WeightSpec::real(q)?;
    let half = q as f64 / 2.0;
    Ok([half, -half]
        .iter()
        .map(|s| rgamma(0.5 - nu + *s) * rgamma(0.5 + nu + *s))
        .sum())
}

/// sin(πd)/d, analytic through d = 0.
fn sinc_pi(d: Complex64) -> Complex64 {
    if d.norm() < 1e-4 {
        let x = PI * d;
        return PI * (1.0 - x * x / 6.0 + x * x * x * x / 120.0);
    }
    sin_pi(d) / d
}

/// λ_l(ν, p) = Γ(l+1−ν)Γ(l+1+ν)·sin²π(ν−p)/(p²−ν²)²·ν^{2ε(p)}, ε(0) = 1,
/// ε(p ≠ 0) = −1. The zeros of the denominator at ν ∈ {0, ±p} are cancelled
/// analytically against sin πν.
pub fn lambda_complex(l: i64, nu: Complex64, p: i64) -> Result<Complex64> {
    let spectral = SpectralParam::complex(nu, p)?;
    WeightSpec::complex(l, 0)?.validate(Some(&spectral))?;
    let pf = p as f64;
    // the square root S of sin²πν/(ν²(p²−ν²)²) or, for p = 0, of sin²πν/ν²
    let n = nu.re.round();
    let near = (nu - n).norm() < 0.5 && (n == 0.0 || n.abs() == pf.abs());
    let s = if near {
        let sign = if (n as i64).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        // sin πν/(ν − n)
        let core = sinc_pi(nu - n) * sign;
        let rest = if p == 0 {
            Complex64::new(1.0, 0.0)
        } else if n == 0.0 {
            1.0 / ((pf - nu) * (pf + nu))
        } else {
            // n = ±p, so (p² − ν²) = −(ν − n)(ν + n)
            -1.0 / (nu * (nu + n))
        };
        core * rest
    } else if p == 0 {
        sin_pi(nu) / nu
    } else {
        sin_pi(nu) / (nu * (pf - nu) * (pf + nu))
    };
    let gammas = gamma(-nu + (l + 1) as f64) * gamma(nu + (l + 1) as f64);
    Ok(gammas * s * s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn parameter_set() -> Vec<(i64, i64, Complex64, i64)> {
        let mut out = Vec::new();
        for l in 0..=2 {
            for q in -l..=l {
                for p in -l..=l {
                    for nu in [c(0.0, 1.0), c(0.0, 2.0), c(0.3, 0.0)] {
                        if nu.im == 0.0 && p != 0 {
                            continue;
                        }
                        out.push((l, q, nu, p));
                    }
                }
            }
        }
        out
    }

    #[test]
    fn torus_norm_matches_quadrature() {
        for (l, q, nu, p) in parameter_set() {
            let closed = torus_norm_closed(l, q, nu, p).unwrap();
            let quad = torus_norm_quadrature(l, q, nu, p).unwrap();
            let rel = (quad / closed - 1.0).abs();
            assert!(rel < 1e-6, "(l, q, ν, p) = ({l}, {q}, {nu}, {p}): {quad} vs {closed}");
        }
    }

    #[test]
    fn complex_norm_one() {
        for (l, q, nu, p) in [(1, 0, c(0.0, 1.0), 0), (2, 1, c(0.0, 2.0), 1), (1, 0, c(0.3, 0.0), 0)] {
            let n = complex_whittaker_norm_integral(l, q, nu, p).unwrap();
            assert!((n - 1.0).abs() < 1e-6, "({l}, {q}, {nu}, {p}): {n}");
        }
    }

    #[test]
    fn complex_whittaker_phase() {
        let (l, q, nu, p) = (2, 1, c(0.0, 1.5), -1);
        let base = whittaker_complex_norm(l, q, nu, p, c(0.8, 0.0)).unwrap();
        for theta in [0.4, 2.0, -2.9] {
            let v = whittaker_complex_norm(l, q, nu, p, Complex64::from_polar(0.8, theta)).unwrap();
            let want = base * Complex64::from_polar(1.0, -(q as f64) * theta);
            assert!((v - want).norm() < 1e-14 * base.norm());
        }
        assert!(whittaker_complex_norm(1, 2, nu, 0, c(1.0, 0.0)).is_err());
        assert!(whittaker_complex_norm(1, 0, c(0.3, 0.0), 1, c(1.0, 0.0)).is_err());
        assert!(whittaker_complex_norm(1, 0, nu, 0, c(0.0, 0.0)).is_err());
    }

    #[test]
    fn lambda_real_positive_on_principal_series() {
        for q in [4, 6, 8, 12] {
            for t in [0.0, 0.1, 0.7, 2.0, 5.5, 11.0] {
                let v = lambda_real(c(0.0, t), q).unwrap();
                assert!(v.re > 0.0 && v.im.abs() < 1e-12 * v.re, "q = {q}, t = {t}: {v}");
            }
        }
    }

    #[test]
    fn lambda_real_is_real_on_domain() {
        let q = 8;
        let mut nus = vec![c(0.0, 0.4), c(0.0, 3.0), c(0.2, 0.0), c(-0.45, 0.0)];
        nus.extend([0.5, 1.5, 2.5, 3.5].iter().map(|h| c(*h, 0.0)));
        for nu in nus {
            let v = lambda_real(nu, q).unwrap();
            assert!(v.im.abs() <= 1e-12 * v.norm().max(1e-300), "ν = {nu}: {v}");
        }
        assert!(lambda_real(c(0.7, 0.0), q).is_err());
        assert!(lambda_real(c(0.0, 1.0), 3).is_err());
    }

    #[test]
    fn lambda_complex_nonnegative_and_removable() {
        for l in 3..=5 {
            for p in -l..=l {
                for t in [0.0, 1e-6, 0.3, 1.0, 2.7, 6.0] {
                    let v = lambda_complex(l, c(0.0, t), p).unwrap();
                    assert!(v.re >= 0.0 && v.im.abs() <= 1e-12 * v.norm().max(1e-300), "l = {l}, p = {p}, t = {t}: {v}");
                }
            }
        }
        // values straddling the switch to the analytic form agree
        for p in [0, 2] {
            let inside = lambda_complex(3, c(0.0, 0.49), p).unwrap();
            let nu = c(0.0, 0.49);
            let pf = p as f64;
            let direct = gamma(4.0 - nu) * gamma(4.0 + nu) * sin_pi(nu - pf).powi(2)
                / ((pf * pf - nu * nu).powi(2))
                * nu.powi(if p == 0 { 2 } else { -2 });
            assert!((inside - direct).norm() < 1e-12 * direct.norm());
        }
        // ν = 0, p = 0: Γ(l+1)²π²
        let v = lambda_complex(2, c(0.0, 0.0), 0).unwrap();
        assert!((v.re - 4.0 * PI * PI).abs() < 1e-12);
    }
}
