mod norms;
mod numeric;

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::Serialize;

use crate::error::{domain, Result};
use crate::specialfun::{bessel_i, bessel_k, rgamma, su2_column};

pub use norms::{
    complex_whittaker_norm_integral, lambda_complex, lambda_real, torus_norm_closed, torus_norm_quadrature,
    whittaker_complex_norm,
};
pub use numeric::{jacquet_numeric, verify_gw_identities, GrowthCertificate, GwEntry, GwReport, Identity};

/// g = n(x) a(y) k[α, β] in SL₂(ℂ).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IwasawaPoint {
    pub x: Complex64,
    pub y: f64,
    pub alpha: Complex64,
    pub beta: Complex64,
}

pub type Matrix2 = [[Complex64; 2]; 2];

impl IwasawaPoint {
    pub fn new(x: Complex64, y: f64, alpha: Complex64, beta: Complex64) -> Result<Self> {
        if !(y > 0.0) || !y.is_finite() {
            return domain(format!("Iwasawa height must be positive, got {y}"));
        }
        let n = alpha.norm_sqr() + beta.norm_sqr();
        if (n - 1.0).abs() > 1e-10 {
            return domain(format!("k[α, β] needs |α|²+|β|² = 1, got {n}"));
        }
        Ok(IwasawaPoint { x, y, alpha, beta })
    }

    pub fn identity() -> Self {
        IwasawaPoint {
            x: Complex64::new(0.0, 0.0),
            y: 1.0,
            alpha: Complex64::new(1.0, 0.0),
            beta: Complex64::new(0.0, 0.0),
        }
    }

    /// a(y) with trivial unipotent and compact parts.
    pub fn height(y: f64) -> Self {
        IwasawaPoint { y, ..IwasawaPoint::identity() }
    }

    pub fn to_matrix(&self) -> Matrix2 {
        let s = self.y.sqrt();
        let (a, b) = (self.alpha, self.beta);
        [
            [a * s - self.x * b.conj() / s, b * s + self.x * a.conj() / s],
            [-b.conj() / s, a.conj() / s],
        ]
    }

    /// Inverse of `to_matrix` for a determinant-one matrix.
    pub fn from_matrix(m: &Matrix2) -> Result<Self> {
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if (det - 1.0).norm() > 1e-9 {
            return domain(format!("matrix has determinant {det}, not 1"));
        }
        let (a, b, c, d) = (m[0][0], m[0][1], m[1][0], m[1][1]);
        let y = 1.0 / (c.norm_sqr() + d.norm_sqr());
        let x = (a * c.conj() + b * d.conj()) * y;
        let s = y.sqrt();
        Ok(IwasawaPoint { x, y, alpha: d.conj() * s, beta: -c.conj() * s })
    }

    /// w · n(u) · g with w = k[0, 1].
    pub fn weyl_translate(&self, u: Complex64) -> Self {
        let m = self.to_matrix();
        let top = [m[0][0] + u * m[1][0], m[0][1] + u * m[1][1]];
        let (c, d) = (-top[0], -top[1]);
        let (a, b) = (m[1][0], m[1][1]);
        let y = 1.0 / (c.norm_sqr() + d.norm_sqr());
        let x = (a * c.conj() + b * d.conj()) * y;
        let s = y.sqrt();
        IwasawaPoint { x, y, alpha: d.conj() * s, beta: -c.conj() * s }
    }
}

/// Weight (l, q) and spectral data (ν, p) at a complex place. ν is not
/// restricted to the unitary range here: the operator identities are checked
/// at Re ν > 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ComplexWeight {
    pub l: i64,
    pub q: i64,
    pub nu: Complex64,
    pub p: i64,
}

impl ComplexWeight {
    pub fn new(l: i64, q: i64, nu: Complex64, p: i64) -> Result<Self> {
        if l < 0 || q.abs() > l || p.abs() > l {
            return domain(format!("weight needs |p|, |q| ≤ l, got l = {l}, p = {p}, q = {q}"));
        }
        if !nu.re.is_finite() || !nu.im.is_finite() {
            return domain("spectral parameter must be finite");
        }
        Ok(ComplexWeight { l, q, nu, p })
    }

    pub fn with_nu_p(&self, nu: Complex64, p: i64) -> Self {
        ComplexWeight { nu, p, ..*self }
    }
}

fn factorial(n: i64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * k)
}

fn binomial(n: i64, k: i64) -> BigInt {
    if k < 0 || k > n {
        return BigInt::from(0);
    }
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// Upper limit l − (|m+p| + |m−p|)/2 of the j-sums.
pub fn j_limit(l: i64, p: i64, m: i64) -> i64 {
    l - ((m + p).abs() + (m - p).abs()) / 2
}

/// ξ^l_p(m, j) = j!(2l−j)!/((l−p)!(l+p)!) · C(A, j) · C(B, j), exact.
pub fn xi(l: i64, p: i64, m: i64, j: i64) -> BigRational {
    let a = j_limit(l, p, m);
    let b = l - ((m + p).abs() - (m - p).abs()) / 2;
    if j < 0 || j > a {
        return BigRational::from_integer(BigInt::from(0));
    }
    let num = factorial(j) * factorial(2 * l - j) * binomial(a, j) * binomial(b, j);
    BigRational::new(num, factorial(l - p) * factorial(l + p))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum BesselKind {
    K,
    I,
}

/// The data of the Jacquet and Goodman–Wallach expansions at fixed (l, q, ν, p, ω).
#[derive(Clone, Debug)]
pub struct JacquetExpansion {
    pub weight: ComplexWeight,
    pub omega: Complex64,
    /// ξ values by (m + l, j).
    xi_table: Vec<Vec<f64>>,
    /// 1/Γ(ν + l + 1 − j) by j.
    rgammas: Vec<Complex64>,
}

impl JacquetExpansion {
    pub fn new(weight: ComplexWeight, omega: Complex64) -> Result<Self> {
        if omega.norm() == 0.0 {
            return domain("the closed-form expansions need ω ≠ 0");
        }
        let l = weight.l;
        let xi_table = (-l..=l)
            .map(|m| {
                (0..=j_limit(l, weight.p, m))
                    .map(|j| xi(l, weight.p, m, j).to_f64().unwrap_or(f64::NAN))
                    .collect()
            })
            .collect();
        let rgammas = (0..=l).map(|j| rgamma(weight.nu + (l + 1 - j) as f64)).collect();
        Ok(JacquetExpansion { weight, omega, xi_table, rgammas })
    }

    /// All radial coefficients m = −l..l at once; Bessel values are shared
    /// between terms of equal order.
    fn radial_all(&self, y: f64, kind: BesselKind) -> Result<Vec<Complex64>> {
        let ComplexWeight { l, nu, p, .. } = self.weight;
        let x = 4.0 * PI * y;
        let mut cache: Vec<Option<Complex64>> = vec![None; (4 * l + 1) as usize];
        let mut bessel = |offset: i64| -> Result<Complex64> {
            let slot = &mut cache[(offset + 3 * l) as usize];
            if let Some(v) = slot {
                return Ok(*v);
            }
            let order = nu + offset as f64;
            let v = match kind {
                BesselKind::K => bessel_k(order, x)?,
                BesselKind::I => bessel_i(order, x)?,
            };
            *slot = Some(v);
            Ok(v)
        };
        let two_pi_y = 2.0 * PI * y;
        let mut out = Vec::with_capacity((2 * l + 1) as usize);
        for m in -l..=l {
            let mut sum = Complex64::new(0.0, 0.0);
            for (j, xi) in self.xi_table[(m + l) as usize].iter().enumerate() {
                let ji = j as i64;
                let sign = if kind == BesselKind::K && ji % 2 == 1 { -1.0 } else { 1.0 };
                let b = bessel(l - (m + p).abs() - ji)?;
                sum += b * self.rgammas[j] * (sign * xi * two_pi_y.powi((l + 1 - ji) as i32));
            }
            out.push(sum);
        }
        Ok(out)
    }

    /// w^l_m(ν, p; y).
    pub fn w_coeff(&self, m: i64, y: f64) -> Result<Complex64> {
        Ok(self.radial_all(y, BesselKind::K)?[(m + self.weight.l) as usize])
    }

    /// μ^l_m(ν, p; y).
    pub fn mu_coeff(&self, m: i64, y: f64) -> Result<Complex64> {
        Ok(self.radial_all(y, BesselKind::I)?[(m + self.weight.l) as usize])
    }

    fn character(&self, x: Complex64) -> Complex64 {
        // e^{2πi(ωx + conj(ωx))}
        Complex64::from_polar(1.0, 4.0 * PI * (self.omega * x).re)
    }

    /// 𝒥_ω(g) by its finite K-Bessel expansion.
    pub fn jacquet(&self, g: &IwasawaPoint) -> Result<Complex64> {
        let ComplexWeight { l, q, nu, p } = self.weight;
        let w = self.omega.norm();
        let unit = Complex64::new(0.0, 1.0) * self.omega / w;
        let column = su2_column(l, q, g.alpha, g.beta)?;
        let radial = self.radial_all(w * g.y, BesselKind::K)?;
        let mut sum = Complex64::new(0.0, 0.0);
        for m in -l..=l {
            let i = (m + l) as usize;
            sum += unit.powi((-p - m) as i32) * radial[i] * column[i];
        }
        let sign = if (l - p).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        let pre = Complex64::new(2.0 * PI, 0.0).powc(nu) * Complex64::new(w, 0.0).powc(nu - 1.0) * sign;
        Ok(pre * self.character(g.x) * sum)
    }

    /// ℳ_ω(g) by its finite I-Bessel expansion.
    pub fn goodman_wallach(&self, g: &IwasawaPoint) -> Result<Complex64> {
        let ComplexWeight { l, q, nu, p } = self.weight;
        let w = self.omega.norm();
        let unit = Complex64::new(0.0, -1.0) * self.omega / w;
        let column = su2_column(l, q, g.alpha, g.beta)?;
        let radial = self.radial_all(w * g.y, BesselKind::I)?;
        let mut sum = Complex64::new(0.0, 0.0);
        for m in -l..=l {
            let i = (m + l) as usize;
            sum += unit.powi((p - m) as i32) * radial[i] * column[i];
        }
        let pre = Complex64::new(2.0 * PI * w, 0.0).powc(-nu - 1.0);
        Ok(pre * self.character(g.x) * sum)
    }
}

/// φ_{l,q}(ν, p)(n(x) a(y) k) = y^{1+ν} Φ^l_{p,q}(k).
pub fn phi_eval(weight: &ComplexWeight, g: &IwasawaPoint) -> Result<Complex64> {
    let ComplexWeight { l, q, nu, p } = *weight;
    let column = su2_column(l, q, g.alpha, g.beta)?;
    Ok(Complex64::new(g.y, 0.0).powc(1.0 + nu) * column[(p + l) as usize])
}

pub fn jacquet_closed(omega: Complex64, weight: &ComplexWeight, g: &IwasawaPoint) -> Result<Complex64> {
    JacquetExpansion::new(*weight, omega)?.jacquet(g)
}

pub fn goodman_wallach(omega: Complex64, weight: &ComplexWeight, g: &IwasawaPoint) -> Result<Complex64> {
    JacquetExpansion::new(*weight, omega)?.goodman_wallach(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specialfun::gamma;
    use num_traits::Zero;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sample_point() -> IwasawaPoint {
        IwasawaPoint::new(c(0.1, 0.2), 0.7, c(0.3f64.cos(), 0.3f64.sin()) * 0.4f64.cos(), c(1.1f64.cos(), -(1.1f64.sin())) * 0.4f64.sin()).unwrap()
    }

    #[test]
    fn iwasawa_round_trip() {
        let g = sample_point();
        let back = IwasawaPoint::from_matrix(&g.to_matrix()).unwrap();
        assert!((back.x - g.x).norm() < 1e-12);
        assert!((back.y - g.y).abs() < 1e-12);
        assert!((back.alpha - g.alpha).norm() < 1e-12);
        assert!((back.beta - g.beta).norm() < 1e-12);
        assert!(IwasawaPoint::new(c(0.0, 0.0), 1.0, c(1.0, 0.0), c(0.5, 0.0)).is_err());
    }

    #[test]
    fn weyl_translate_matches_matrix_product() {
        let g = sample_point();
        let u = c(0.4, -1.3);
        let m = g.to_matrix();
        let n = [[c(1.0, 0.0), u], [c(0.0, 0.0), c(1.0, 0.0)]];
        let w = [[c(0.0, 0.0), c(1.0, 0.0)], [c(-1.0, 0.0), c(0.0, 0.0)]];
        let mul = |a: &Matrix2, b: &Matrix2| {
            let mut r = [[c(0.0, 0.0); 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
                }
            }
            r
        };
        let want = IwasawaPoint::from_matrix(&mul(&w, &mul(&n, &m))).unwrap();
        let got = g.weyl_translate(u);
        assert!((want.x - got.x).norm() < 1e-12 && (want.y - got.y).abs() < 1e-12);
        assert!((want.alpha - got.alpha).norm() < 1e-12 && (want.beta - got.beta).norm() < 1e-12);
    }

    #[test]
    fn xi_table_properties() {
        for l in 0..=4 {
            for p in -l..=l {
                for m in -l..=l {
                    for j in -1..=l + 1 {
                        let v = xi(l, p, m, j);
                        assert!(v >= BigRational::zero());
                        assert_eq!(v, xi(l, -p, -m, j));
                        if j < 0 || j > j_limit(l, p, m) {
                            assert!(v.is_zero());
                        }
                    }
                }
            }
        }
        assert_eq!(xi(0, 0, 0, 0), BigRational::one());
    }

    #[test]
    fn phi_basics() {
        let w = ComplexWeight::new(2, 1, c(0.3, 1.0), 1).unwrap();
        let g = IwasawaPoint::new(c(0.5, 0.1), 1.7, c(1.0, 0.0), c(0.0, 0.0)).unwrap();
        let v = phi_eval(&w, &g).unwrap();
        assert!((v - c(1.7, 0.0).powc(c(1.3, 1.0))).norm() < 1e-14);
        let g2 = IwasawaPoint { x: c(-3.0, 2.0), ..sample_point() };
        assert_eq!(phi_eval(&w, &sample_point()).unwrap(), phi_eval(&w, &g2).unwrap());
        assert!(ComplexWeight::new(1, 2, c(0.0, 1.0), 0).is_err());
    }

    #[test]
    fn trivial_weight_collapse() {
        let nu = c(0.4, 0.7);
        let w = ComplexWeight::new(0, 0, nu, 0).unwrap();
        let omega = c(0.6, -0.8);
        let g = IwasawaPoint::new(c(0.2, 0.3), 0.9, c(1.0, 0.0), c(0.0, 0.0)).unwrap();
        let got = jacquet_closed(omega, &w, &g).unwrap();
        let r = omega.norm();
        let want = c(2.0 * PI, 0.0).powc(nu)
            * c(r, 0.0).powc(nu - 1.0)
            * Complex64::from_polar(1.0, 4.0 * PI * (omega * g.x).re)
            * (2.0 * PI * r * g.y)
            * bessel_k(nu, 4.0 * PI * r * g.y).unwrap()
            / gamma(1.0 + nu);
        assert!((got - want).norm() < 1e-13 * want.norm());
        let got = goodman_wallach(omega, &w, &g).unwrap();
        let want = c(2.0 * PI * r, 0.0).powc(-nu - 1.0)
            * Complex64::from_polar(1.0, 4.0 * PI * (omega * g.x).re)
            * (2.0 * PI * r * g.y)
            * bessel_i(nu, 4.0 * PI * r * g.y).unwrap()
            / gamma(1.0 + nu);
        assert!((got - want).norm() < 1e-13 * want.norm());
    }

    #[test]
    fn decay_and_growth_envelopes() {
        let w = ComplexWeight::new(1, 1, c(1.2, 0.0), 0).unwrap();
        let omega = c(0.8, 0.6);
        let at = |y: f64| IwasawaPoint::height(y);
        // |𝒥| e^{4π|ω|y} and |ℳ| e^{−4π|ω|y} stay within polynomial factors
        let mut prev_j: Option<f64> = None;
        let mut prev_m: Option<f64> = None;
        for y in [1.0, 2.0, 4.0, 8.0] {
            let j = jacquet_closed(omega, &w, &at(y)).unwrap().norm() * (4.0 * PI * y).exp();
            let m = goodman_wallach(omega, &w, &at(y)).unwrap().norm() * (-4.0 * PI * y).exp();
            if let (Some(pj), Some(pm)) = (prev_j, prev_m) {
                assert!(j / pj < 2f64.powi(3) && j / pj > 2f64.powi(-3), "y = {y}");
                assert!(m / pm < 2f64.powi(3) && m / pm > 2f64.powi(-3), "y = {y}");
            }
            prev_j = Some(j);
            prev_m = Some(m);
        }
    }
}
