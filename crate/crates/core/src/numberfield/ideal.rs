use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::element::FieldElement;
use super::field::FieldDescriptor;
use crate::error::{input, Error, Result};

/// A fractional ideal `(1/den)·L` with L an integral lattice in Hermite
/// normal form over the integral basis.
///
/// Quadratic fields: rows `[a, 0]` and `[b, c]`, meaning L = ℤ·a + ℤ·(b + cω),
/// with a, c > 0, 0 ≤ b < a, and den minimal. ℚ: a single row `[a]`.
/// The zero ideal has an all-zero basis and den = 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FracIdeal {
    den: BigInt,
    basis: Vec<Vec<BigInt>>,
}

fn to_big(q: &BigRational, scale: &BigInt) -> BigInt {
    let v = q * BigRational::from_integer(scale.clone());
    debug_assert!(v.is_integer());
    v.to_integer()
}

/// Row-style HNF of the ℤ-span of integer vectors in ℤ²; `None` if rank < 2.
fn hnf2(gens: &[[BigInt; 2]]) -> Option<[BigInt; 3]> {
    let mut v = [BigInt::zero(), BigInt::zero()];
    for g in gens {
        if g[1].is_zero() {
            continue;
        }
        let e = v[1].extended_gcd(&g[1]);
        v = [&e.x * &v[0] + &e.y * &g[0], e.gcd];
    }
    let c = v[1].abs();
    if c.is_zero() {
        return None;
    }
    if v[1].is_negative() {
        v = [-&v[0], -&v[1]];
    }
    let mut a = BigInt::zero();
    for g in gens {
        let k = &g[1] / &c;
        let r = &g[0] - &k * &v[0];
        a = a.gcd(&r);
    }
    if a.is_zero() {
        return None;
    }
    let b = v[0].mod_floor(&a);
    Some([a, b, c])
}

impl FracIdeal {
    pub fn unit(field: &FieldDescriptor) -> Self {
        Self::principal(field, &field.one())
    }

    pub fn zero(field: &FieldDescriptor) -> Self {
        let n = field.degree();
        FracIdeal {
            den: BigInt::one(),
            basis: vec![vec![BigInt::zero(); n]; n],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.basis.iter().flatten().all(|x| x.is_zero())
    }

    pub fn den(&self) -> &BigInt {
        &self.den
    }

    pub fn basis(&self) -> &[Vec<BigInt>] {
        &self.basis
    }

    pub fn degree(&self) -> usize {
        self.basis.len()
    }

    pub fn principal(field: &FieldDescriptor, x: &FieldElement) -> Self {
        Self::from_generators(field, std::slice::from_ref(x))
    }

    /// The 𝔬-module generated by the given elements.
    pub fn from_generators(field: &FieldDescriptor, gens: &[FieldElement]) -> Self {
        if field.degree() == 1 {
            return Self::from_z_span(field, gens);
        }
        let w = field.omega();
        let mut span = Vec::with_capacity(2 * gens.len());
        for g in gens {
            span.push(g.clone());
            span.push(field.mul(g, &w));
        }
        Self::from_z_span(field, &span)
    }

    /// The ℤ-span of the given elements, which the caller guarantees to be
    /// an 𝔬-module (e.g. products of ℤ-bases of two ideals).
    pub fn from_z_span(field: &FieldDescriptor, elems: &[FieldElement]) -> Self {
        let n = field.degree();
        let elems: Vec<&FieldElement> = elems.iter().filter(|e| !e.is_zero()).collect();
        if elems.is_empty() {
            return Self::zero(field);
        }
        let d = elems
            .iter()
            .fold(BigInt::one(), |acc, e| acc.lcm(&e.denominator()));
        if n == 1 {
            let a = elems
                .iter()
                .fold(BigInt::zero(), |acc, e| acc.gcd(&to_big(&e.coords()[0], &d)));
            return Self::canonical(d, vec![vec![a]]);
        }
        let ints: Vec<[BigInt; 2]> = elems
            .iter()
            .map(|e| [to_big(&e.coords()[0], &d), to_big(&e.coords()[1], &d)])
            .collect();
        let [a, b, c] = hnf2(&ints).expect("nonzero 𝔬-module in a quadratic field has rank 2");
        Self::canonical(d, vec![vec![a, BigInt::zero()], vec![b, c]])
    }

    fn canonical(d: BigInt, basis: Vec<Vec<BigInt>>) -> Self {
        let g = basis.iter().flatten().fold(d.clone(), |acc, x| acc.gcd(x));
        let mut basis: Vec<Vec<BigInt>> = basis
            .into_iter()
            .map(|row| row.into_iter().map(|x| x / &g).collect())
            .collect();
        let den = d / &g;
        if basis.len() == 2 {
            basis[1][0] = basis[1][0].mod_floor(&basis[0][0]);
        }
        FracIdeal { den, basis }
    }

    /// A ℤ-basis as field elements.
    pub fn z_basis(&self) -> Vec<FieldElement> {
        let inv = BigRational::new(BigInt::one(), self.den.clone());
        self.basis
            .iter()
            .map(|row| {
                FieldElement::from_coords(
                    row.iter()
                        .map(|x| BigRational::from_integer(x.clone()) * &inv)
                        .collect(),
                )
            })
            .collect()
    }

    pub fn norm(&self) -> BigRational {
        if self.is_zero() {
            return BigRational::zero();
        }
        let num = self
            .basis
            .iter()
            .enumerate()
            .fold(BigInt::one(), |acc, (i, row)| acc * &row[i]);
        let den = num_traits::pow(self.den.clone(), self.degree());
        BigRational::new(num, den)
    }

    pub fn is_integral(&self) -> bool {
        self.den.is_one() && !self.is_zero()
    }

    pub fn product(&self, other: &FracIdeal, field: &FieldDescriptor) -> FracIdeal {
        if self.is_zero() || other.is_zero() {
            return Self::zero(field);
        }
        let a = self.z_basis();
        let b = other.z_basis();
        let mut prods = Vec::with_capacity(a.len() * b.len());
        for x in &a {
            for y in &b {
                prods.push(field.mul(x, y));
            }
        }
        Self::from_z_span(field, &prods)
    }

    pub fn sum(&self, other: &FracIdeal, field: &FieldDescriptor) -> FracIdeal {
        let mut gens = self.z_basis();
        gens.extend(other.z_basis());
        Self::from_z_span(field, &gens)
    }

    pub fn mul_element(&self, x: &FieldElement, field: &FieldDescriptor) -> FracIdeal {
        let gens: Vec<FieldElement> = self.z_basis().iter().map(|b| field.mul(b, x)).collect();
        Self::from_z_span(field, &gens)
    }

    pub fn scale(&self, q: &BigRational, field: &FieldDescriptor) -> FracIdeal {
        let gens: Vec<FieldElement> = self.z_basis().iter().map(|b| b.scale(q)).collect();
        Self::from_z_span(field, &gens)
    }

    pub fn conj(&self, field: &FieldDescriptor) -> FracIdeal {
        let gens: Vec<FieldElement> = self.z_basis().iter().map(|b| field.conj(b)).collect();
        Self::from_z_span(field, &gens)
    }

    pub fn inverse(&self, field: &FieldDescriptor) -> Result<FracIdeal> {
        if self.is_zero() {
            return input("inverse of the zero ideal");
        }
        let base = if field.degree() == 1 {
            Self::unit(field)
        } else {
            self.conj(field)
        };
        Ok(base.scale(&self.norm().recip(), field))
    }

    pub fn pow(&self, e: i64, field: &FieldDescriptor) -> Result<FracIdeal> {
        let base = if e < 0 {
            self.inverse(field)?
        } else {
            self.clone()
        };
        let mut out = Self::unit(field);
        for _ in 0..e.unsigned_abs() {
            out = out.product(&base, field);
        }
        Ok(out)
    }

    pub fn contains(&self, x: &FieldElement) -> bool {
        if x.is_zero() {
            return true;
        }
        if self.is_zero() {
            return false;
        }
        let scaled: Vec<BigRational> = x
            .coords()
            .iter()
            .map(|c| c * BigRational::from_integer(self.den.clone()))
            .collect();
        if !scaled.iter().all(|c| c.is_integer()) {
            return false;
        }
        let v: Vec<BigInt> = scaled.into_iter().map(|c| c.to_integer()).collect();
        if self.degree() == 1 {
            return v[0].is_multiple_of(&self.basis[0][0]);
        }
        let (a, b, c) = (&self.basis[0][0], &self.basis[1][0], &self.basis[1][1]);
        if !v[1].is_multiple_of(c) {
            return false;
        }
        let y = &v[1] / c;
        (&v[0] - &y * b).is_multiple_of(a)
    }

    /// self ⊆ other
    pub fn is_subset_of(&self, other: &FracIdeal) -> bool {
        self.z_basis().iter().all(|b| other.contains(b))
    }

    /// Coordinates of x in this ideal's ℤ-basis, if x belongs to the ideal.
    pub fn coordinates_of(&self, x: &FieldElement) -> Option<Vec<BigInt>> {
        if !self.contains(x) || self.is_zero() {
            return None;
        }
        let v: Vec<BigInt> = x
            .coords()
            .iter()
            .map(|c| (c * BigRational::from_integer(self.den.clone())).to_integer())
            .collect();
        if self.degree() == 1 {
            return Some(vec![&v[0] / &self.basis[0][0]]);
        }
        let (a, b, c) = (&self.basis[0][0], &self.basis[1][0], &self.basis[1][1]);
        let y = &v[1] / c;
        let x0 = (&v[0] - &y * b) / a;
        Some(vec![x0, y])
    }

    /// Canonical text key: `"a"`, `"a/den"` for ℚ; `"a,b,c"`, `"a,b,c/den"`
    /// for quadratic fields.
    pub fn key(&self) -> String {
        let body = if self.degree() == 1 {
            self.basis[0][0].to_string()
        } else {
            format!(
                "{},{},{}",
                self.basis[0][0], self.basis[1][0], self.basis[1][1]
            )
        };
        if self.den.is_one() {
            body
        } else {
            format!("{body}/{}", self.den)
        }
    }

    pub fn parse_key(text: &str, field: &FieldDescriptor) -> Result<FracIdeal> {
        let bad = || Error::Input(format!("'{text}' is not a canonical ideal key"));
        let (body, den) = match text.split_once('/') {
            Some((b, d)) => (b, d.trim().parse::<BigInt>().map_err(|_| bad())?),
            None => (text, BigInt::one()),
        };
        let nums = body
            .split(',')
            .map(|s| s.trim().parse::<BigInt>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| bad())?;
        let basis = match (field.degree(), nums.as_slice()) {
            (1, [a]) => vec![vec![a.clone()]],
            (2, [a, b, c]) => vec![vec![a.clone(), BigInt::zero()], vec![b.clone(), c.clone()]],
            _ => return Err(bad()),
        };
        Self::from_raw(field, den, basis)
    }

    /// Build from explicit HNF data, validating canonical form and closure
    /// under multiplication by ω.
    pub fn from_raw(
        field: &FieldDescriptor,
        den: BigInt,
        basis: Vec<Vec<BigInt>>,
    ) -> Result<FracIdeal> {
        if !den.is_positive() {
            return input("ideal denominator must be positive");
        }
        if basis.len() != field.degree() || basis.iter().any(|r| r.len() != field.degree()) {
            return input("ideal basis has the wrong shape for this field");
        }
        if (0..basis.len()).any(|i| !basis[i][i].is_positive()) {
            return input("ideal basis needs positive diagonal entries");
        }
        let candidate = if field.degree() == 1 {
            let gens = vec![FieldElement::from_coords(vec![BigRational::new(
                basis[0][0].clone(),
                den.clone(),
            )])];
            Self::from_z_span(field, &gens)
        } else {
            if !basis[0][1].is_zero() {
                return input("ideal basis must be lower triangular");
            }
            let gens: Vec<FieldElement> = basis
                .iter()
                .map(|row| {
                    FieldElement::from_coords(
                        row.iter()
                            .map(|x| BigRational::new(x.clone(), den.clone()))
                            .collect(),
                    )
                })
                .collect();
            let lattice = Self::from_z_span(field, &gens);
            if lattice != Self::from_generators(field, &gens) {
                return input("lattice is not closed under multiplication by ω");
            }
            lattice
        };
        if candidate.den != den || candidate.basis != basis {
            return input("ideal data is not in canonical Hermite normal form");
        }
        Ok(candidate)
    }

    pub fn to_json(&self) -> IdealJson {
        IdealJson {
            den: self.den.clone(),
            basis: self.basis.clone(),
        }
    }
}

impl fmt::Display for FracIdeal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.key())
    }
}

/// Serialized ideal data `{den, basis}` with integers as JSON numbers when
/// they fit in 64 bits and as decimal strings otherwise.
#[derive(Clone, Debug, PartialEq)]
pub struct IdealJson {
    pub den: BigInt,
    pub basis: Vec<Vec<BigInt>>,
}

fn int_to_json(x: &BigInt) -> serde_json::Value {
    match x.to_i64() {
        Some(v) => serde_json::Value::from(v),
        None => serde_json::Value::from(x.to_string()),
    }
}

fn int_from_json(v: &serde_json::Value) -> std::result::Result<BigInt, String> {
    match v {
        serde_json::Value::Number(n) => n
            .as_i64()
            .map(BigInt::from)
            .ok_or_else(|| format!("{n} is not an integer")),
        serde_json::Value::String(s) => s.parse().map_err(|_| format!("'{s}' is not an integer")),
        other => Err(format!("{other} is not an integer")),
    }
}

impl Serialize for IdealJson {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let basis: Vec<Vec<serde_json::Value>> = self
            .basis
            .iter()
            .map(|r| r.iter().map(int_to_json).collect())
            .collect();
        serde_json::json!({"den": int_to_json(&self.den), "basis": basis}).serialize(s)
    }
}

impl<'de> Deserialize<'de> for IdealJson {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            den: serde_json::Value,
            basis: Vec<Vec<serde_json::Value>>,
        }
        let raw = Raw::deserialize(d)?;
        let den = int_from_json(&raw.den).map_err(serde::de::Error::custom)?;
        let basis = raw
            .basis
            .iter()
            .map(|r| r.iter().map(int_from_json).collect::<std::result::Result<Vec<_>, _>>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(serde::de::Error::custom)?;
        Ok(IdealJson { den, basis })
    }
}

impl IdealJson {
    pub fn to_ideal(&self, field: &FieldDescriptor) -> Result<FracIdeal> {
        FracIdeal::from_raw(field, self.den.clone(), self.basis.clone())
    }
}

impl Serialize for FracIdeal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

/// Enumerate all integral ideals of norm exactly n, in canonical order.
pub fn integral_ideals_of_norm(field: &FieldDescriptor, n: u64) -> Vec<FracIdeal> {
    if n == 0 {
        return vec![];
    }
    if field.degree() == 1 {
        return vec![FracIdeal {
            den: BigInt::one(),
            basis: vec![vec![BigInt::from(n)]],
        }];
    }
    let mut out = Vec::new();
    let (t, nn) = (field.omega_trace() as i128, field.omega_norm() as i128);
    let mut c = 1u64;
    while c * c <= n {
        if n.is_multiple_of(c * c) {
            let a = n / c;
            let (ai, ci) = (a as i128, c as i128);
            let mut b = 0i128;
            while b < ai {
                // closure: ω·(b + cω) = −c·n + (b + c·t)ω must lie in the lattice
                let v0 = -ci * nn;
                let v1 = b + ci * t;
                let ok_first = {
                    // ω·a = a·ω → coordinates (0, a)
                    ai % ci == 0 && { (0 - (ai / ci) * b).rem_euclid(ai) == 0 }
                };
                let ok_second = v1 % ci == 0 && (v0 - (v1 / ci) * b).rem_euclid(ai) == 0;
                if ok_first && ok_second {
                    out.push(FracIdeal {
                        den: BigInt::one(),
                        basis: vec![
                            vec![BigInt::from(a), BigInt::zero()],
                            vec![BigInt::from(b as i64), BigInt::from(c)],
                        ],
                    });
                }
                b += ci;
            }
        }
        c += 1;
    }
    out.sort();
    out
}
