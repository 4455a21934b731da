use num_complex::Complex64;

use super::gamma::rgamma;
use crate::error::{domain, Result};

/// Integral representation, valid for Re a > 0 with a = ½ + μ − k:
/// W_{k,μ}(u) = u^{½−μ} e^{−u/2}/Γ(a) ∫₀^∞ e^{−τ} τ^{a−1} (u+τ)^{μ+k−½} dτ.
/// The substitution τ = e^v turns it into a doubly-decaying integrand for the
/// trapezoid rule.
fn whittaker_integral(k: Complex64, mu: Complex64, u: f64) -> Complex64 {
    let a = 0.5 + mu - k;
    let c = mu + k - 0.5;
    let lower = u.ln().min(0.0) - 40.0 / a.re - 5.0;
    let upper = (60.0 + 4.0 * (a.norm() + c.norm())).ln() + 1.0;
    let h = (0.1f64).min(3.0 / (a.im.abs() + c.im.abs() + 1.0));
    let n = ((upper - lower) / h).ceil() as usize;
    let mut sum = Complex64::new(0.0, 0.0);
    for i in 0..=n {
        let v = lower + i as f64 * h;
        let tau = v.exp();
        let log_term = -tau + a * v + c * (u + tau).ln();
        sum += log_term.exp();
    }
    let prefactor = Complex64::new(u, 0.0).powc(0.5 - mu) * (-u / 2.0).exp();
    prefactor * rgamma(a) * sum * h
}

/// W_{k,μ}(y) = e^{−y/2} y^{μ+½} U(−n, 1+2μ, y) when ½ + μ − k = −n, with
/// U(−n, b, y) = (−1)^n Σ_s C(n,s) (b+s)_{n−s} (−y)^s.
fn whittaker_polynomial(n: usize, mu: Complex64, y: f64) -> Complex64 {
    let b = 1.0 + 2.0 * mu;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut binom = 1.0f64;
    for s in 0..=n {
        let mut rising = Complex64::new(1.0, 0.0);
        for j in 0..(n - s) {
            rising *= b + (s + j) as f64;
        }
        sum += rising * binom * (-y).powi(s as i32);
        binom = binom * (n - s) as f64 / (s + 1) as f64;
    }
    if n % 2 == 1 {
        sum = -sum;
    }
    Complex64::new(y, 0.0).powc(mu + 0.5) * (-y / 2.0).exp() * sum
}

/// Classical Whittaker function W_{k,μ}(y), y > 0.
pub fn whittaker_w(k: Complex64, mu: Complex64, y: f64) -> Result<Complex64> {
    if !(y > 0.0) || !y.is_finite() {
        return domain(format!("whittaker_w: argument must be positive, got {y}"));
    }
    let mu = if mu.re < 0.0 { -mu } else { mu };
    let a = 0.5 + mu - k;
    let nearest = a.re.round();
    if nearest <= 0.0 && (a - nearest).norm() < 1e-8 {
        if a.im == 0.0 && a.re == nearest {
            return Ok(whittaker_polynomial(-nearest as usize, mu, y));
        }
        return domain(format!(
            "whittaker_w: Γ argument 1/2+ν−k = {a} lies within 1e−8 of the pole at {nearest}"
        ));
    }
    if a.re >= 0.5 {
        return Ok(whittaker_integral(k, mu, y));
    }
    // step k down until the representation applies, then recur upward:
    // W_{k+1} = (y − 2k) W_k + (μ − k + ½)(μ + k − ½) W_{k−1}
    let shift = (0.5 - a.re).ceil() as usize;
    let k0 = k - shift as f64;
    let mut prev = whittaker_integral(k0 - 1.0, mu, y);
    let mut cur = whittaker_integral(k0, mu, y);
    let mut kk = k0;
    for _ in 0..shift {
        let next = (y - 2.0 * kk) * cur + (mu - kk + 0.5) * (mu + kk - 0.5) * prev;
        prev = cur;
        cur = next;
        kk += 1.0;
    }
    Ok(cur)
}

fn inverse_gamma_product(k: i64, nu: Complex64) -> Complex64 {
    let kc = Complex64::new(k as f64, 0.0);
    rgamma(0.5 - nu + kc) * rgamma(0.5 + nu + kc)
}

/// Normalized real-place Whittaker function of weight q:
/// i^{sgn(y)q/2} W_{sgn(y)q/2,ν}(4π|y|) / (Γ(½−ν+sgn(y)q/2) Γ(½+ν+sgn(y)q/2))^{½}.
/// Zero on the side where the Gamma product has a pole.
pub fn whittaker_real_norm(q: i64, nu: Complex64, y: f64) -> Result<Complex64> {
    if q % 2 != 0 {
        return domain(format!("whittaker_real_norm: weight must be even, got {q}"));
    }
    if y == 0.0 || !y.is_finite() {
        return domain("whittaker_real_norm: argument must be nonzero and finite");
    }
    let k = if y > 0.0 { q / 2 } else { -q / 2 };
    let kc = Complex64::new(k as f64, 0.0);
    let inverse_product = inverse_gamma_product(k, nu);
    if inverse_product.norm() == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    if inverse_product.im.abs() > 1e-10 * inverse_product.norm() || inverse_product.re < 0.0 {
        return domain(format!(
            "whittaker_real_norm: Γ(1/2−ν+{k})Γ(1/2+ν+{k}) is not positive for ν = {nu}; parameter outside the unitary range"
        ));
    }
    let phase = Complex64::new(0.0, 1.0).powi(k as i32);
    let w = whittaker_w(kc, nu, 4.0 * std::f64::consts::PI * y.abs())?;
    Ok(phase * w * inverse_product.re.sqrt())
}

/// ∫_{ℝ×} |𝒲_{q,ν}(y)|² dy/|y|, computed side by side in the variable s = ln(4π|y|).
pub fn whittaker_real_norm_integral(q: i64, nu: Complex64) -> Result<f64> {
    let mut total = 0.0;
    for (sign, k) in [(1.0f64, q / 2), (-1.0, -q / 2)] {
        if inverse_gamma_product(k, nu).norm() == 0.0 {
            continue;
        }
        let h = 0.05;
        let lower = -60.0 / (1.0 - 2.0 * nu.re.abs()).max(0.2);
        let upper = 6.0f64;
        let n = ((upper - lower) / h).ceil() as usize;
        let mut sum = 0.0;
        for i in 0..=n {
            let s = lower + i as f64 * h;
            let y = sign * s.exp() / (4.0 * std::f64::consts::PI);
            sum += whittaker_real_norm(q, nu, y)?.norm_sqr();
        }
        total += sum * h;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specialfun::bessel::bessel_k;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn reference_values() {
        let cases = [
            (c(0.5, 0.3), c(0.2, 1.1), 2.5, c(0.281825986663147357233019834628, 0.119391240892022709648932399096)),
            (c(3.0, 0.0), c(0.0, 2.0), 0.4, c(-0.423640018114722236067319783268, 0.0)),
            (c(-3.0, 0.0), c(0.0, 2.0), 0.4, c(0.00155235968026690830958760098656, 0.0)),
        ];
        for (k, mu, y, want) in cases {
            let got = whittaker_w(k, mu, y).unwrap();
            assert!(rel(got, want) < 1e-11, "W_{{{k},{mu}}}({y}) = {got}");
        }
    }

    #[test]
    fn closed_forms() {
        for y in [0.1f64, 1.0, 7.0, 30.0] {
            let want = (-y / 2.0).exp() * y * y;
            let got = whittaker_w(c(2.0, 0.0), c(1.5, 0.0), y).unwrap();
            assert!(rel(got, c(want, 0.0)) < 1e-12, "y = {y}");
        }
    }

    #[test]
    fn laguerre_case_matches_recurrence() {
        // ½ + μ − k = −1 with μ = 3/2, k = 3: a Laguerre polynomial case
        let y = 2.3f64;
        let direct = whittaker_w(c(3.0, 0.0), c(1.5, 0.0), y).unwrap();
        let w2 = whittaker_w(c(2.0, 0.0), c(1.5, 0.0), y).unwrap();
        let w1 = whittaker_w(c(1.0, 0.0), c(1.5, 0.0), y).unwrap();
        let rec = (y - 4.0) * w2 + (1.5 - 2.0 + 0.5) * (1.5 + 2.0 - 0.5) * w1;
        assert!(rel(direct, rec) < 1e-12);
        let want = (-y / 2.0).exp() * y * y * (y - 4.0);
        assert!(rel(direct, c(want, 0.0)) < 1e-13);
        assert!(whittaker_w(c(2.0 + 1e-10, 0.0), c(1.5, 0.0), 1.0).is_err());
    }

    #[test]
    fn k_bessel_cross_check() {
        for mu in [c(0.0, 1.3), c(0.25, 0.0), c(0.4, -0.7)] {
            for x in [0.05, 0.5, 2.0, 6.0] {
                let w = whittaker_w(c(0.0, 0.0), mu, 2.0 * x).unwrap();
                let k = bessel_k(mu, x).unwrap() * (2.0 * x / PI).sqrt();
                assert!(rel(w, k) < 1e-11, "μ = {mu}, x = {x}");
            }
        }
    }

    #[test]
    fn symmetric_in_order() {
        let (k, mu) = (c(0.7, -0.2), c(0.3, 0.9));
        let a = whittaker_w(k, mu, 1.7).unwrap();
        let b = whittaker_w(k, -mu, 1.7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn exponential_decay() {
        let w10 = whittaker_w(c(1.0, 0.0), c(0.25, 0.0), 10.0).unwrap();
        let w20 = whittaker_w(c(1.0, 0.0), c(0.25, 0.0), 20.0).unwrap();
        assert!(w20.norm() / w10.norm() < (-4.0f64).exp());
    }

    #[test]
    fn normalized_real_values() {
        for y in [0.01, 0.3, 2.0] {
            let v = whittaker_real_norm(0, c(0.0, 1.7), y).unwrap();
            assert!(v.im.abs() < 1e-12 * v.norm().max(1e-300));
        }
        // discrete series on the pole side
        assert_eq!(whittaker_real_norm(4, c(1.5, 0.0), -0.5).unwrap(), c(0.0, 0.0));
        assert!(whittaker_real_norm(4, c(1.5, 0.0), 0.5).unwrap().norm() > 0.0);
        // ν = 0.9 real is outside the unitary range at weight 0
        assert!(whittaker_real_norm(0, c(0.9, 0.0), 1.0).is_err());
        assert!(whittaker_real_norm(3, c(0.0, 1.0), 1.0).is_err());
    }

    #[test]
    fn norm_one() {
        for (q, nu) in [(0, c(0.25, 0.0)), (2, c(0.0, 1.0)), (4, c(1.5, 0.0))] {
            let n = whittaker_real_norm_integral(q, nu).unwrap();
            assert!((n - 1.0).abs() < 1e-6, "q = {q}, ν = {nu}: {n}");
        }
    }
}
