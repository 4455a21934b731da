use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// An algebraic number stored by exact rational coordinates over the
/// integral basis `1` (for ℚ) or `1, ω` (for quadratic fields).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FieldElement {
    coords: Vec<BigRational>,
}

impl FieldElement {
    pub fn from_coords(coords: Vec<BigRational>) -> Self {
        assert!(
            coords.len() == 1 || coords.len() == 2,
            "field elements have one or two coordinates"
        );
        FieldElement { coords }
    }

    pub fn zero(degree: usize) -> Self {
        FieldElement {
            coords: vec![BigRational::zero(); degree],
        }
    }

    pub fn one(degree: usize) -> Self {
        Self::from_rational(degree, BigRational::one())
    }

    pub fn from_rational(degree: usize, q: BigRational) -> Self {
        let mut coords = vec![BigRational::zero(); degree];
        coords[0] = q;
        FieldElement { coords }
    }

    pub fn from_int(degree: usize, n: i64) -> Self {
        Self::from_rational(degree, BigRational::from_integer(BigInt::from(n)))
    }

    /// Element `a + b·ω` of a quadratic field with integer coordinates.
    pub fn from_ints(a: i64, b: i64) -> Self {
        FieldElement {
            coords: vec![
                BigRational::from_integer(a.into()),
                BigRational::from_integer(b.into()),
            ],
        }
    }

    pub fn coords(&self) -> &[BigRational] {
        &self.coords
    }

    pub fn degree(&self) -> usize {
        self.coords.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| c.is_zero())
    }

    pub fn is_rational(&self) -> bool {
        self.coords.iter().skip(1).all(|c| c.is_zero())
    }

    pub fn rational_part(&self) -> &BigRational {
        &self.coords[0]
    }

    pub fn scale(&self, q: &BigRational) -> Self {
        FieldElement {
            coords: self.coords.iter().map(|c| c * q).collect(),
        }
    }

    /// Least common multiple of the coordinate denominators.
    pub fn denominator(&self) -> BigInt {
        use num_integer::Integer;
        self.coords
            .iter()
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()))
    }

    pub fn is_integral_coords(&self) -> bool {
        self.coords.iter().all(|c| c.is_integer())
    }

    /// Parse a comma-separated coordinate list such as `"1/2,3"` or `"-5"`.
    pub fn parse(text: &str, degree: usize) -> Result<Self> {
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        if parts.is_empty() || parts.len() > degree {
            return Err(Error::Input(format!(
                "element '{text}' needs at most {degree} coordinate(s)"
            )));
        }
        let mut coords = vec![BigRational::zero(); degree];
        for (slot, part) in coords.iter_mut().zip(&parts) {
            *slot = parse_rational(part)?;
        }
        Ok(FieldElement { coords })
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.coords.iter().map(render_rational).collect()
    }
}

pub fn parse_rational(text: &str) -> Result<BigRational> {
    let bad = || Error::Input(format!("'{text}' is not a rational number p/q"));
    let text = text.trim();
    if let Some((n, d)) = text.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        Ok(BigRational::new(n, d))
    } else {
        let n: BigInt = text.parse().map_err(|_| bad())?;
        Ok(BigRational::from_integer(n))
    }
}

pub fn render_rational(q: &BigRational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn serialize_rational<S: Serializer>(q: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&render_rational(q))
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = render_rational(&self.coords[0]);
        if self.coords.len() == 2 && !self.coords[1].is_zero() {
            let b = &self.coords[1];
            let sign = if b.is_negative() { "-" } else { "+" };
            out = format!("{out}{sign}{}*w", render_rational(&b.abs()));
        }
        f.write_str(&out)
    }
}

impl<'a> Add<&'a FieldElement> for &'a FieldElement {
    type Output = FieldElement;
    fn add(self, rhs: &FieldElement) -> FieldElement {
        assert_eq!(self.degree(), rhs.degree());
        FieldElement {
            coords: self
                .coords
                .iter()
                .zip(&rhs.coords)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl<'a> Sub<&'a FieldElement> for &'a FieldElement {
    type Output = FieldElement;
    fn sub(self, rhs: &FieldElement) -> FieldElement {
        assert_eq!(self.degree(), rhs.degree());
        FieldElement {
            coords: self
                .coords
                .iter()
                .zip(&rhs.coords)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Neg for &FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        FieldElement {
            coords: self.coords.iter().map(|a| -a).collect(),
        }
    }
}

impl Serialize for FieldElement {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_strings().serialize(s)
    }
}

impl<'de> Deserialize<'de> for FieldElement {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw: Vec<String> = Vec::deserialize(d)?;
        if raw.is_empty() || raw.len() > 2 {
            return Err(serde::de::Error::custom(
                "element must have one or two coordinates",
            ));
        }
        let coords = raw
            .iter()
            .map(|s| parse_rational(s).map_err(serde::de::Error::custom))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(FieldElement { coords })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_render_round_trip() {
        let x = FieldElement::parse("1/2, -3", 2).unwrap();
        assert_eq!(x.to_strings(), vec!["1/2", "-3"]);
        assert_eq!(x.to_string(), "1/2-3*w");
        let y = FieldElement::parse("4/6", 1).unwrap();
        assert_eq!(y.to_strings(), vec!["2/3"]);
    }

    #[test]
    fn rejects_garbage() {
        assert!(FieldElement::parse("1/0", 1).is_err());
        assert!(FieldElement::parse("a", 1).is_err());
        assert!(FieldElement::parse("1,2,3", 2).is_err());
    }

    #[test]
    fn padding_short_input() {
        let x = FieldElement::parse("7", 2).unwrap();
        assert!(x.is_rational());
        assert_eq!(x.denominator(), BigInt::one());
    }
}
