use std::f64::consts::PI;

use num_complex::Complex64;

use super::dd::{Dd, DdComplex};
use super::gamma::{rgamma, sin_pi};
use super::Estimate;
use crate::error::{domain, Result};
use crate::quadrature::{composite, gauss_legendre, uniform_edges};

const MAX_ORDER_RE: f64 = 10.0;
const SERIES_J_CROSSOVER: f64 = 36.0;

fn check_argument(x: f64, name: &str) -> Result<()> {
    if !(x > 0.0) || !x.is_finite() {
        return domain(format!("{name}: argument must be positive and finite, got {x}"));
    }
    Ok(())
}

fn check_order(mu: Complex64, name: &str) -> Result<()> {
    if mu.re.abs() > MAX_ORDER_RE || !mu.im.is_finite() {
        return domain(format!("{name}: |Re order| must be at most {MAX_ORDER_RE}, got {mu}"));
    }
    Ok(())
}

/// K_μ(x) = ∫₀^∞ e^{−x cosh t} cosh(μt) dt by the trapezoid rule, which
/// converges geometrically for this doubly-decaying integrand.
pub fn bessel_k(mu: Complex64, x: f64) -> Result<Complex64> {
    check_argument(x, "bessel_k")?;
    check_order(mu, "bessel_k")?;
    let h = (0.5 / x.sqrt()).min(0.05);
    let log_mag = |t: f64| -x * (t.cosh() - 1.0) + mu.re.abs() * t;
    let mut sum = Complex64::new(0.5, 0.0);
    let mut peak = log_mag(0.0);
    let mut k = 1usize;
    loop {
        let t = k as f64 * h;
        let lm = log_mag(t);
        peak = peak.max(lm);
        sum += (-x * (t.cosh() - 1.0)).exp() * (mu * t).cosh();
        if lm < peak - 42.0 && x * t.sinh() > mu.re.abs() {
            break;
        }
        k += 1;
    }
    Ok(sum * h * (-x).exp())
}

fn asymptotic_coefficients(mu: Complex64, x: f64) -> Option<Vec<Complex64>> {
    // a_k(μ)/x^k until the terms start growing or fall below 1e−17
    let four_mu2 = 4.0 * mu * mu;
    let mut out = vec![Complex64::new(1.0, 0.0)];
    let mut term = Complex64::new(1.0, 0.0);
    for k in 1..200 {
        let kf = k as f64;
        let next = term * (four_mu2 - (2.0 * kf - 1.0).powi(2)) / (8.0 * kf * x);
        if next.norm() > term.norm() {
            return None;
        }
        out.push(next);
        term = next;
        if term.norm() < 1e-17 {
            return Some(out);
        }
    }
    None
}

fn bessel_i_series(mu: Complex64, x: f64) -> Complex64 {
    if mu.im == 0.0 && mu.re < 0.0 && mu.re.fract() == 0.0 {
        return bessel_i_series(-mu, x);
    }
    let half = x / 2.0;
    let q = half * half;
    let lead = Complex64::new(half, 0.0).powc(mu);
    // Σ (x²/4)^k / (k! Γ(μ+k+1)) with 1/Γ advanced by the recurrence
    let mut term = rgamma(mu + 1.0);
    let mut sum = term;
    let mut biggest = term.norm();
    for k in 1..2000 {
        term = term * q / (k as f64 * (mu + k as f64));
        sum += term;
        biggest = biggest.max(term.norm());
        if k as f64 > x && term.norm() < 1e-17 * biggest.max(sum.norm()) {
            break;
        }
    }
    lead * sum
}

pub fn bessel_i(mu: Complex64, x: f64) -> Result<Complex64> {
    check_argument(x, "bessel_i")?;
    check_order(mu, "bessel_i")?;
    if x > 40.0 + 2.0 * mu.norm_sqr() {
        if let Some(coeffs) = asymptotic_coefficients(mu, x) {
            let s: Complex64 = coeffs
                .iter()
                .enumerate()
                .map(|(k, a)| if k % 2 == 0 { *a } else { -a })
                .sum();
            return Ok(s * x.exp() / (2.0 * PI * x).sqrt());
        }
    }
    Ok(bessel_i_series(mu, x))
}

pub(crate) fn bessel_j_series(mu: Complex64, x: f64) -> Complex64 {
    let half = Complex64::new(x / 2.0, 0.0);
    half.powc(mu) * j_star(mu, Complex64::new(x, 0.0)).value
}

/// Schläfli's integral for J_μ(x), x > 0, valid for every complex order.
pub(crate) fn bessel_j_integral(mu: Complex64, x: f64) -> Complex64 {
    let rule = gauss_legendre(24);
    let panels = ((x + mu.norm()) / 2.0).ceil() as usize + 4;
    let first = composite(
        rule,
        |tau| (mu * tau - x * tau.sin()).cos(),
        &uniform_edges(0.0, PI, panels),
    ) / PI;
    let s = sin_pi(mu);
    if s.norm() == 0.0 {
        return first;
    }
    let mut upper = 0.5f64;
    while x * upper.sinh() + mu.re * upper < 45.0 {
        upper += 0.5;
    }
    let width = (1.0 / x).min(0.5);
    let panels = (upper / width).ceil() as usize;
    let second = composite(
        rule,
        |t| (-(x * t.sinh()) - mu * t).exp(),
        &uniform_edges(0.0, upper, panels),
    );
    first - s / PI * second
}

fn bessel_j_hankel(mu: Complex64, x: f64) -> Option<Complex64> {
    let coeffs = asymptotic_coefficients(mu, x)?;
    let (mut p, mut q) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    for (k, a) in coeffs.iter().enumerate() {
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += a * sign;
        } else {
            q += a * sign;
        }
    }
    let chi = x - mu * (PI / 2.0) - PI / 4.0;
    Some((2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin()))
}

/// J_μ(x) for real x > 0 and complex order.
pub fn bessel_j(mu: Complex64, x: f64) -> Result<Complex64> {
    check_argument(x, "bessel_j")?;
    check_order(mu, "bessel_j")?;
    if x <= SERIES_J_CROSSOVER {
        return Ok(bessel_j_series(mu, x));
    }
    if let Some(v) = bessel_j_hankel(mu, x) {
        return Ok(v);
    }
    Ok(bessel_j_integral(mu, x))
}

/// J*_ν(z) = Σ (−1)^k (z²/4)^k / (k! Γ(ν+k+1)), the even entire function equal
/// to J_ν(z)(z/2)^{−ν} for z > 0. The series is summed in double-double
/// arithmetic, so cancellation costs nothing until |z| is in the thirties.
pub fn j_star(nu: Complex64, z: Complex64) -> Estimate {
    if nu.im == 0.0 && nu.re < 0.0 && nu.re.fract() == 0.0 {
        // J*_{−n}(z) = (−z²/4)^n J*_n(z)
        let n = -nu.re;
        let inner = j_star(Complex64::new(n, 0.0), z);
        let factor = (-(z * z) / 4.0).powi(n as i32);
        return Estimate {
            value: inner.value * factor,
            err: inner.err * factor.norm(),
        };
    }
    let zd = DdComplex::from_c64(z);
    let quarter = Dd::from_f64(-0.25);
    let q = (zd * zd).scale(quarter);
    let mut term = DdComplex::from_c64(Complex64::new(1.0, 0.0));
    let mut sum = term;
    let mut biggest = 1.0f64;
    let mut terms = 1usize;
    let zn = z.norm();
    for k in 0..4000 {
        let kp = (k + 1) as f64;
        let den = DdComplex::from_c64(nu).add_real(kp).scale(Dd::from_f64(kp));
        term = (term * q) / den;
        sum = sum + term;
        terms += 1;
        let size = term.norm1();
        biggest = biggest.max(size);
        if kp > zn + 2.0 && size <= 1e-34 * biggest.max(sum.norm1()) {
            break;
        }
    }
    let lead = rgamma(nu + 1.0);
    let value = sum.to_c64() * lead;
    Estimate {
        value,
        err: lead.norm() * biggest * 1e-31 * terms as f64 + 4.0 * f64::EPSILON * value.norm(),
    }
}
