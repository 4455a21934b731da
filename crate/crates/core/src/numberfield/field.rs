use std::f64::consts::PI;
use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::element::FieldElement;
use super::ideal::FracIdeal;
use crate::error::{input, Result};

/// ℚ or a quadratic field ℚ(√d) with integral basis `{1, ω}`, where
/// ω = √d for d ≢ 1 (mod 4) and ω = (1+√d)/2 otherwise.
///
/// ω satisfies ω² = t·ω − n with `t = omega_trace`, `n = omega_norm`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FieldDescriptor {
    radicand: Option<i64>,
    disc: i64,
    omega_trace: i64,
    omega_norm: i64,
}

pub fn is_squarefree(d: i64) -> bool {
    let mut m = d.unsigned_abs();
    let mut p = 2u64;
    while p * p <= m {
        if m.is_multiple_of(p) {
            m /= p;
            if m.is_multiple_of(p) {
                return false;
            }
        }
        p += 1;
    }
    true
}

impl FieldDescriptor {
    pub fn rational() -> Self {
        FieldDescriptor {
            radicand: None,
            disc: 1,
            omega_trace: 0,
            omega_norm: 0,
        }
    }

    pub fn quadratic(d: i64) -> Result<Self> {
        if d == 0 || d == 1 {
            return input(format!("Q(sqrt({d})) is degenerate"));
        }
        if !is_squarefree(d) {
            return input(format!("radicand {d} is not squarefree"));
        }
        let (disc, t, n) = if d.rem_euclid(4) == 1 {
            (d, 1, (1 - d) / 4)
        } else {
            (4 * d, 0, -d)
        };
        Ok(FieldDescriptor {
            radicand: Some(d),
            disc,
            omega_trace: t,
            omega_norm: n,
        })
    }

    /// Accepts `"Q"`, `"Q(i)"` or `"Q(sqrt(d))"` (whitespace-insensitive).
    pub fn parse(spec: &str) -> Result<Self> {
        let s: String = spec.chars().filter(|c| !c.is_whitespace()).collect();
        if s == "Q" {
            return Ok(Self::rational());
        }
        if s == "Q(i)" {
            return Self::quadratic(-1);
        }
        let inner = s
            .strip_prefix("Q(sqrt(")
            .and_then(|r| r.strip_suffix("))"));
        match inner.map(str::parse::<i64>) {
            Some(Ok(d)) => Self::quadratic(d),
            _ => input(format!(
                "unrecognized field '{spec}': expected \"Q\", \"Q(i)\" or \"Q(sqrt(d))\""
            )),
        }
    }

    pub fn name(&self) -> String {
        match self.radicand {
            None => "Q".to_string(),
            Some(d) => format!("Q(sqrt({d}))"),
        }
    }

    pub fn degree(&self) -> usize {
        if self.radicand.is_some() {
            2
        } else {
            1
        }
    }

    pub fn radicand(&self) -> Option<i64> {
        self.radicand
    }

    /// (real places, complex places)
    pub fn signature(&self) -> (usize, usize) {
        match self.radicand {
            None => (1, 0),
            Some(d) if d > 0 => (2, 0),
            Some(_) => (0, 1),
        }
    }

    pub fn place_count(&self) -> usize {
        let (r, s) = self.signature();
        r + s
    }

    pub fn is_real_place(&self, place: usize) -> bool {
        place < self.signature().0
    }

    pub fn disc(&self) -> i64 {
        self.disc
    }

    pub fn omega_trace(&self) -> i64 {
        self.omega_trace
    }

    pub fn omega_norm(&self) -> i64 {
        self.omega_norm
    }

    pub fn is_imaginary_quadratic(&self) -> bool {
        matches!(self.radicand, Some(d) if d < 0)
    }

    pub fn is_real_quadratic(&self) -> bool {
        matches!(self.radicand, Some(d) if d > 0)
    }

    pub fn basis_names(&self) -> Vec<String> {
        match self.radicand {
            None => vec!["1".into()],
            Some(d) if d.rem_euclid(4) == 1 => vec!["1".into(), format!("(1+sqrt({d}))/2")],
            Some(d) => vec!["1".into(), format!("sqrt({d})")],
        }
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement::zero(self.degree())
    }

    pub fn one(&self) -> FieldElement {
        FieldElement::one(self.degree())
    }

    pub fn int(&self, n: i64) -> FieldElement {
        FieldElement::from_int(self.degree(), n)
    }

    pub fn rat(&self, num: i64, den: i64) -> FieldElement {
        FieldElement::from_rational(
            self.degree(),
            BigRational::new(BigInt::from(num), BigInt::from(den)),
        )
    }

    pub fn omega(&self) -> FieldElement {
        assert_eq!(self.degree(), 2, "ω exists only for quadratic fields");
        FieldElement::from_ints(0, 1)
    }

    /// √D for D the discriminant, expressed as 2ω − t.
    pub fn sqrt_disc(&self) -> FieldElement {
        FieldElement::from_ints(-self.omega_trace, 2)
    }

    pub fn element(&self, coords: &[(i64, i64)]) -> FieldElement {
        assert_eq!(coords.len(), self.degree());
        FieldElement::from_coords(
            coords
                .iter()
                .map(|&(n, d)| BigRational::new(n.into(), d.into()))
                .collect(),
        )
    }

    pub fn parse_element(&self, text: &str) -> Result<FieldElement> {
        FieldElement::parse(text, self.degree())
    }

    pub fn mul(&self, x: &FieldElement, y: &FieldElement) -> FieldElement {
        let (xc, yc) = (x.coords(), y.coords());
        if self.degree() == 1 {
            return FieldElement::from_coords(vec![&xc[0] * &yc[0]]);
        }
        let (a, b, c, d) = (&xc[0], &xc[1], &yc[0], &yc[1]);
        let t = BigRational::from_integer(self.omega_trace.into());
        let n = BigRational::from_integer(self.omega_norm.into());
        let bd = b * d;
        FieldElement::from_coords(vec![a * c - &bd * &n, a * d + b * c + &bd * &t])
    }

    pub fn conj(&self, x: &FieldElement) -> FieldElement {
        if self.degree() == 1 {
            return x.clone();
        }
        let c = x.coords();
        let t = BigRational::from_integer(self.omega_trace.into());
        FieldElement::from_coords(vec![&c[0] + &c[1] * &t, -&c[1]])
    }

    pub fn norm(&self, x: &FieldElement) -> BigRational {
        let c = x.coords();
        if self.degree() == 1 {
            return c[0].clone();
        }
        let t = BigRational::from_integer(self.omega_trace.into());
        let n = BigRational::from_integer(self.omega_norm.into());
        &c[0] * &c[0] + &c[0] * &c[1] * &t + &c[1] * &c[1] * &n
    }

    pub fn trace(&self, x: &FieldElement) -> BigRational {
        let c = x.coords();
        if self.degree() == 1 {
            return c[0].clone();
        }
        let t = BigRational::from_integer(self.omega_trace.into());
        &c[0] * BigRational::from_integer(2.into()) + &c[1] * &t
    }

    pub fn inv(&self, x: &FieldElement) -> Result<FieldElement> {
        let n = self.norm(x);
        if n.is_zero() {
            return input("inverse of zero");
        }
        if self.degree() == 1 {
            return Ok(FieldElement::from_rational(1, n.recip()));
        }
        Ok(self.conj(x).scale(&n.recip()))
    }

    pub fn div(&self, x: &FieldElement, y: &FieldElement) -> Result<FieldElement> {
        Ok(self.mul(x, &self.inv(y)?))
    }

    pub fn pow(&self, x: &FieldElement, e: u64) -> FieldElement {
        let mut result = self.one();
        let mut base = x.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                result = self.mul(&result, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        result
    }

    /// Whether x lies in the ring of integers 𝔬.
    pub fn is_integral(&self, x: &FieldElement) -> bool {
        x.is_integral_coords()
    }

    /// Archimedean embeddings, real places first: for real quadratic fields
    /// the first place sends √d to +√d; for imaginary quadratic fields the
    /// complex place sends √d to i√|d|.
    ///
    /// Small values are recomputed as N(x)/σ_other(x) to avoid cancellation.
    pub fn embeddings(&self, x: &FieldElement) -> Vec<Complex64> {
        let c = x.coords();
        match self.radicand {
            None => vec![Complex64::new(ratio_to_f64(&c[0]), 0.0)],
            Some(d) if d > 0 => {
                let s = (d as f64).sqrt();
                let (w1, w2) = if self.omega_trace == 1 {
                    ((1.0 + s) / 2.0, (1.0 - s) / 2.0)
                } else {
                    (s, -s)
                };
                let a = ratio_to_f64(&c[0]);
                let b = ratio_to_f64(&c[1]);
                let mut e1 = a + b * w1;
                let mut e2 = a + b * w2;
                let n = ratio_to_f64(&self.norm(x));
                if n != 0.0 {
                    if e1.abs() < e2.abs() {
                        e1 = n / e2;
                    } else {
                        e2 = n / e1;
                    }
                }
                vec![Complex64::new(e1, 0.0), Complex64::new(e2, 0.0)]
            }
            Some(d) => {
                let s = ((-d) as f64).sqrt();
                let w = if self.omega_trace == 1 {
                    Complex64::new(0.5, s / 2.0)
                } else {
                    Complex64::new(0.0, s)
                };
                vec![ratio_to_f64(&c[0]) + w * ratio_to_f64(&c[1])]
            }
        }
    }

    pub fn is_totally_positive(&self, x: &FieldElement) -> bool {
        match self.radicand {
            None => x.coords()[0].is_positive(),
            Some(d) if d > 0 => {
                // x ≫ 0 iff N(x) > 0 and Tr(x) > 0
                self.norm(x).is_positive() && self.trace(x).is_positive()
            }
            Some(_) => !x.is_zero(),
        }
    }

    /// ψ_∞(x) = exp(2πi·Tr x), with the trace reduced exactly modulo 1.
    pub fn psi_inf(&self, x: &FieldElement) -> Complex64 {
        cis_fraction(&self.trace(x))
    }

    /// ψ_∞ applied to a vector of archimedean embedding values.
    pub fn psi_inf_embedded(&self, values: &[Complex64]) -> Complex64 {
        let (r, _) = self.signature();
        let mut total = 0.0;
        for (j, v) in values.iter().enumerate() {
            total += if j < r { v.re } else { 2.0 * v.re };
        }
        let frac = total - total.floor();
        Complex64::from_polar(1.0, 2.0 * PI * frac)
    }

    pub fn different(&self) -> FracIdeal {
        match self.radicand {
            None => FracIdeal::unit(self),
            Some(_) => {
                let gen = if self.omega_trace == 1 {
                    self.sqrt_disc()
                } else {
                    FieldElement::from_ints(0, 2)
                };
                FracIdeal::principal(self, &gen)
            }
        }
    }

    pub fn different_inverse(&self) -> FracIdeal {
        self.different().inverse(self).expect("different is nonzero")
    }
}

impl fmt::Display for FieldDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl Serialize for FieldDescriptor {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.name())
    }
}

impl<'de> Deserialize<'de> for FieldDescriptor {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        FieldDescriptor::parse(&s).map_err(serde::de::Error::custom)
    }
}

pub fn ratio_to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        // very large numerators/denominators: shift to a safe range
        let n = q.numer().bits() as i64;
        let d = q.denom().bits() as i64;
        let shift = (n - d).clamp(-1000, 1000);
        let scaled = if shift > 0 {
            BigRational::new(q.numer().clone(), q.denom() << (shift as usize))
        } else {
            BigRational::new(q.numer() << ((-shift) as usize), q.denom().clone())
        };
        scaled.to_f64().unwrap_or(0.0) * 2f64.powi(shift as i32)
    })
}

/// exp(2πi·q) using the exact fractional part of q.
pub fn cis_fraction(q: &BigRational) -> Complex64 {
    let frac = q - BigRational::from_integer(q.numer().div_floor(q.denom()));
    if frac.is_zero() {
        return Complex64::new(1.0, 0.0);
    }
    // reduce to (-1/2, 1/2] for a slightly better conditioned angle
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let frac = if frac > half {
        frac - BigRational::one()
    } else {
        frac
    };
    Complex64::from_polar(1.0, 2.0 * PI * ratio_to_f64(&frac))
}
