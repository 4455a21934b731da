use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;

use super::element::FieldElement;
use super::field::FieldDescriptor;
use super::ideal::FracIdeal;
use super::primes::{factor_ideal, unit_group_order};
use crate::error::{input, Error, Result};

/// Residues are stored as integer coordinate pairs over {1, ω}; for ℚ the
/// second coordinate is always 0.
pub type Residue = (i128, i128);

/// Lattice data `(a, b, c)`: rows (a, 0) and (b, c).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Hnf {
    a: i128,
    b: i128,
    c: i128,
}

impl Hnf {
    fn of(ideal: &FracIdeal) -> Option<Hnf> {
        let m = ideal.basis();
        let get = |x: &BigInt| x.to_i128();
        if m.len() == 1 {
            return Some(Hnf {
                a: get(&m[0][0])?,
                b: 0,
                c: 1,
            });
        }
        Some(Hnf {
            a: get(&m[0][0])?,
            b: get(&m[1][0])?,
            c: get(&m[1][1])?,
        })
    }

    fn reduce(&self, (u0, u1): Residue) -> Residue {
        let q = u1.div_euclid(self.c);
        let u1 = u1 - q * self.c;
        let u0 = (u0 - q * self.b).rem_euclid(self.a);
        (u0, u1)
    }

    fn contains(&self, (u0, u1): Residue) -> bool {
        u1 % self.c == 0 && (u0 - (u1 / self.c) * self.b) % self.a == 0
    }
}

/// The finite ring 𝔬/𝔫 for a nonzero integral ideal 𝔫, with exact
/// 128-bit integer arithmetic.
#[derive(Clone, Debug)]
pub struct ResidueRing {
    modulus: Hnf,
    primes: Vec<Hnf>,
    trace: i128,
    norm: i128,
    unit_count: u64,
    size: u64,
}

const MAX_MODULUS_NORM: u64 = 1 << 40;

impl ResidueRing {
    pub fn new(field: &FieldDescriptor, modulus: &FracIdeal) -> Result<Self> {
        if !modulus.is_integral() {
            return input("residue ring modulus must be a nonzero integral ideal");
        }
        let size = super::primes::norm_u64(modulus)
            .filter(|&n| n <= MAX_MODULUS_NORM)
            .ok_or_else(|| Error::Input("modulus norm too large for residue arithmetic".into()))?;
        let hnf = Hnf::of(modulus).expect("norm bound keeps entries small");
        let primes = factor_ideal(field, modulus)?
            .into_iter()
            .map(|(p, _)| Hnf::of(&p.ideal).expect("prime divides a small modulus"))
            .collect();
        Ok(ResidueRing {
            modulus: hnf,
            primes,
            trace: field.omega_trace() as i128,
            norm: field.omega_norm() as i128,
            unit_count: unit_group_order(field, modulus)?,
            size,
        })
    }

    pub fn size(&self) -> u64 {
        self.size
    }

    pub fn unit_count(&self) -> u64 {
        self.unit_count
    }

    pub fn reduce(&self, u: Residue) -> Residue {
        self.modulus.reduce(u)
    }

    pub fn contains(&self, u: Residue) -> bool {
        self.modulus.contains(u)
    }

    pub fn mul(&self, x: Residue, y: Residue) -> Residue {
        let (a, b) = x;
        let (c, d) = y;
        let bd = b * d;
        self.reduce((a * c - bd * self.norm, a * d + b * c + bd * self.trace))
    }

    pub fn add(&self, x: Residue, y: Residue) -> Residue {
        self.reduce((x.0 + y.0, x.1 + y.1))
    }

    pub fn pow(&self, x: Residue, mut e: u64) -> Residue {
        let mut result = self.reduce((1, 0));
        let mut base = self.reduce(x);
        while e > 0 {
            if e & 1 == 1 {
                result = self.mul(result, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        result
    }

    pub fn is_unit(&self, u: Residue) -> bool {
        self.primes.iter().all(|p| !p.contains(u))
    }

    pub fn inverse(&self, u: Residue) -> Option<Residue> {
        if !self.is_unit(u) {
            return None;
        }
        let v = self.pow(u, self.unit_count.saturating_sub(1));
        debug_assert_eq!(self.mul(u, v), self.reduce((1, 0)));
        Some(v)
    }

    /// All residues in box order: (k0, k1) with 0 ≤ k0 < a, 0 ≤ k1 < c.
    pub fn elements(&self) -> impl Iterator<Item = Residue> + '_ {
        let Hnf { a, c, .. } = self.modulus;
        (0..c).flat_map(move |k1| (0..a).map(move |k0| (k0, k1)))
    }

    pub fn units(&self) -> impl Iterator<Item = Residue> + '_ {
        self.elements().filter(move |&u| self.is_unit(u))
    }
}

pub fn residue_of(x: &FieldElement) -> Option<Residue> {
    let c = x.coords();
    let get = |q: &BigRational| {
        if q.is_integer() {
            q.to_integer().to_i128()
        } else {
            None
        }
    };
    let u0 = get(&c[0])?;
    let u1 = if c.len() == 2 { get(&c[1])? } else { 0 };
    Some((u0, u1))
}

pub fn element_of(field: &FieldDescriptor, u: Residue) -> FieldElement {
    if field.degree() == 1 {
        FieldElement::from_coords(vec![BigRational::from_integer(u.0.into())])
    } else {
        FieldElement::from_coords(vec![
            BigRational::from_integer(u.0.into()),
            BigRational::from_integer(u.1.into()),
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn units_mod_five() {
        let q = FieldDescriptor::rational();
        let ring = ResidueRing::new(&q, &FracIdeal::principal(&q, &q.int(5))).unwrap();
        let units: Vec<_> = ring.units().map(|u| u.0).collect();
        assert_eq!(units, vec![1, 2, 3, 4]);
        assert_eq!(ring.inverse((2, 0)), Some((3, 0)));
        assert_eq!(ring.inverse((0, 0)), None);
    }

    #[test]
    fn gaussian_ring_inverses() {
        let f = FieldDescriptor::quadratic(-1).unwrap();
        let n = FracIdeal::principal(&f, &FieldElement::from_ints(3, 2)).product(
            &FracIdeal::principal(&f, &f.int(2)),
            &f,
        );
        let ring = ResidueRing::new(&f, &n).unwrap();
        assert_eq!(ring.size(), 52);
        let units: Vec<_> = ring.units().collect();
        assert_eq!(units.len() as u64, ring.unit_count());
        assert_eq!(ring.unit_count(), 2 * 12);
        for u in units {
            let v = ring.inverse(u).unwrap();
            assert_eq!(ring.mul(u, v), ring.reduce((1, 0)));
        }
    }

    #[test]
    fn trivial_ring_has_one_unit() {
        let q = FieldDescriptor::rational();
        let ring = ResidueRing::new(&q, &FracIdeal::unit(&q)).unwrap();
        let units: Vec<_> = ring.units().collect();
        assert_eq!(units, vec![(0, 0)]);
        assert_eq!(ring.inverse((0, 0)), Some((0, 0)));
    }
}
