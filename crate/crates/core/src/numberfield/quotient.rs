use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;

use super::element::FieldElement;
use super::field::FieldDescriptor;
use super::ideal::FracIdeal;
use super::residue::{residue_of, ResidueRing};
use crate::error::{input, Error, Result};

/// The finite module I/J for fractional ideals J ⊆ I.
#[derive(Clone, Debug)]
pub struct QuotientModule {
    field: FieldDescriptor,
    ambient: FracIdeal,
    sub: FracIdeal,
    /// J's basis in I-coordinates: lower triangular, rows (m00, 0), (m10, m11).
    relation: Vec<Vec<BigInt>>,
    elementary_divisors: Vec<BigInt>,
}

impl QuotientModule {
    pub fn new(field: &FieldDescriptor, ambient: &FracIdeal, sub: &FracIdeal) -> Result<Self> {
        if ambient.is_zero() || sub.is_zero() {
            return input("quotient by or of the zero ideal has infinite index");
        }
        if !sub.is_subset_of(ambient) {
            return input("quotient needs J ⊆ I");
        }
        let relation: Vec<Vec<BigInt>> = sub
            .z_basis()
            .iter()
            .map(|b| ambient.coordinates_of(b).expect("J ⊆ I"))
            .collect();
        let elementary_divisors = if relation.len() == 1 {
            vec![relation[0][0].clone()]
        } else {
            let d1 = relation[0][0].gcd(&relation[1][0]).gcd(&relation[1][1]);
            let det = &relation[0][0] * &relation[1][1];
            vec![d1.clone(), det / d1]
        };
        Ok(QuotientModule {
            field: field.clone(),
            ambient: ambient.clone(),
            sub: sub.clone(),
            relation,
            elementary_divisors,
        })
    }

    pub fn ambient(&self) -> &FracIdeal {
        &self.ambient
    }

    pub fn sub(&self) -> &FracIdeal {
        &self.sub
    }

    pub fn elementary_divisors(&self) -> &[BigInt] {
        &self.elementary_divisors
    }

    pub fn cardinality(&self) -> BigInt {
        self.relation
            .iter()
            .enumerate()
            .fold(BigInt::from(1), |acc, (i, r)| acc * &r[i])
    }

    /// 𝔫 = J·I⁻¹, the annihilator ideal; I/J ≅ 𝔬/𝔫.
    pub fn modulus(&self) -> FracIdeal {
        self.sub
            .product(&self.ambient.inverse(&self.field).expect("nonzero"), &self.field)
    }

    fn element_from_coords(&self, k: &[BigInt]) -> FieldElement {
        let basis = self.ambient.z_basis();
        let mut acc = self.field.zero();
        for (b, c) in basis.iter().zip(k) {
            acc = &acc + &b.scale(&num_rational::BigRational::from_integer(c.clone()));
        }
        acc
    }

    /// Residue representatives in box order.
    pub fn residues(&self) -> Vec<FieldElement> {
        let dims: Vec<i64> = self
            .relation
            .iter()
            .enumerate()
            .map(|(i, r)| r[i].to_i64().expect("enumerable quotient"))
            .collect();
        let mut out = Vec::new();
        if dims.len() == 1 {
            for k0 in 0..dims[0] {
                out.push(self.element_from_coords(&[BigInt::from(k0)]));
            }
        } else {
            for k1 in 0..dims[1] {
                for k0 in 0..dims[0] {
                    out.push(self.element_from_coords(&[BigInt::from(k0), BigInt::from(k1)]));
                }
            }
        }
        out
    }

    /// Canonical box representative of x mod J (x ∈ I).
    pub fn reduce(&self, x: &FieldElement) -> Result<FieldElement> {
        let mut k = self
            .ambient
            .coordinates_of(x)
            .ok_or_else(|| Error::Input("element does not lie in the ambient ideal".into()))?;
        if k.len() == 2 {
            let q = k[1].div_floor(&self.relation[1][1]);
            k[1] -= &q * &self.relation[1][1];
            k[0] -= &q * &self.relation[1][0];
        }
        k[0] = k[0].mod_floor(&self.relation[0][0]);
        Ok(self.element_from_coords(&k))
    }

    /// x·𝔬 + J = I
    pub fn is_generator(&self, x: &FieldElement) -> bool {
        self.ambient.contains(x)
            && FracIdeal::principal(&self.field, x).sum(&self.sub, &self.field) == self.ambient
    }

    /// First generator in box order.
    pub fn first_generator(&self) -> Option<FieldElement> {
        let dims: Vec<i64> = self
            .relation
            .iter()
            .enumerate()
            .map(|(i, r)| r[i].to_i64().expect("enumerable quotient"))
            .collect();
        let outer = if dims.len() == 2 { dims[1] } else { 1 };
        for k1 in 0..outer {
            for k0 in 0..dims[0] {
                let mut k = vec![BigInt::from(k0)];
                if dims.len() == 2 {
                    k.push(BigInt::from(k1));
                }
                let x = self.element_from_coords(&k);
                if self.is_generator(&x) {
                    return Some(x);
                }
            }
        }
        None
    }

    pub fn generators(&self) -> Vec<FieldElement> {
        self.residues()
            .into_iter()
            .filter(|x| self.is_generator(x))
            .collect()
    }

    /// The element x⁻¹ of I⁻¹ / I⁻¹𝔫 with x·x⁻¹ ∈ 1 + 𝔫, for a generator x.
    pub fn inverse_of(&self, x: &FieldElement) -> Result<FieldElement> {
        if !self.is_generator(x) {
            return input("only generators of I/J have an inverse-type element");
        }
        let field = &self.field;
        let inv_ambient = self.ambient.inverse(field)?;
        let modulus = self.modulus();
        let inv_sub = inv_ambient.product(&modulus, field);
        let dual = QuotientModule::new(field, &inv_ambient, &inv_sub)?;
        let ring = ResidueRing::new(field, &modulus)?;
        let images: Vec<_> = inv_ambient
            .z_basis()
            .iter()
            .map(|f| residue_of(&field.mul(x, f)).map(|r| ring.reduce(r)))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::Internal("x·I⁻¹ is not integral".into()))?;
        let one = ring.reduce((1, 0));
        let dims: Vec<i128> = dual
            .relation
            .iter()
            .enumerate()
            .map(|(i, r)| r[i].to_i128().expect("enumerable quotient"))
            .collect();
        let scale = |u: (i128, i128), k: i128| ring.reduce((u.0 * k, u.1 * k));
        let found = if dims.len() == 1 {
            (0..dims[0])
                .find(|&k0| scale(images[0], k0) == one)
                .map(|k0| vec![BigInt::from(k0)])
        } else {
            let mut hit = None;
            'outer: for k1 in 0..dims[1] {
                let part = scale(images[1], k1);
                for k0 in 0..dims[0] {
                    if ring.add(part, scale(images[0], k0)) == one {
                        hit = Some(vec![BigInt::from(k0), BigInt::from(k1)]);
                        break 'outer;
                    }
                }
            }
            hit
        };
        let k = found.ok_or_else(|| {
            Error::Internal("no inverse-type element exists for a generator".into())
        })?;
        Ok(dual.element_from_coords(&k))
    }

    pub fn is_trivial(&self) -> bool {
        self.cardinality() == BigInt::from(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    #[test]
    fn integers_mod_five() {
        let q = FieldDescriptor::rational();
        let qm = QuotientModule::new(
            &q,
            &FracIdeal::unit(&q),
            &FracIdeal::principal(&q, &q.int(5)),
        )
        .unwrap();
        assert_eq!(qm.residues().len(), 5);
        let gens: Vec<String> = qm.generators().iter().map(|g| g.to_string()).collect();
        assert_eq!(gens, vec!["1", "2", "3", "4"]);
        let inv = qm.inverse_of(&q.int(2)).unwrap();
        assert_eq!(inv, q.int(3));
    }

    #[test]
    fn gaussian_mod_one_plus_i() {
        let f = FieldDescriptor::quadratic(-1).unwrap();
        let qm = QuotientModule::new(
            &f,
            &FracIdeal::unit(&f),
            &FracIdeal::principal(&f, &FieldElement::from_ints(1, 1)),
        )
        .unwrap();
        assert_eq!(qm.residues().len(), 2);
        assert_eq!(qm.generators(), vec![f.int(1)]);
    }

    #[test]
    fn trivial_quotient() {
        let q = FieldDescriptor::rational();
        let z = FracIdeal::unit(&q);
        let qm = QuotientModule::new(&q, &z, &z).unwrap();
        assert!(qm.is_trivial());
        assert_eq!(qm.residues().len(), 1);
        assert_eq!(qm.elementary_divisors(), &[BigInt::from(1)]);
    }

    #[test]
    fn infinite_index_rejected() {
        let q = FieldDescriptor::rational();
        assert!(QuotientModule::new(&q, &FracIdeal::unit(&q), &FracIdeal::zero(&q)).is_err());
    }

    #[test]
    fn cardinality_matches_norm_ratio_and_structure() {
        let f = FieldDescriptor::quadratic(-5).unwrap();
        let i = FracIdeal::from_generators(&f, &[f.int(2), FieldElement::from_ints(1, 1)])
            .inverse(&f)
            .unwrap();
        let j = i.product(&FracIdeal::principal(&f, &f.int(6)), &f);
        let qm = QuotientModule::new(&f, &i, &j).unwrap();
        let ratio: BigRational = j.norm() / i.norm();
        assert_eq!(BigRational::from_integer(qm.cardinality()), ratio);
        assert_eq!(qm.elementary_divisors(), &[BigInt::from(6), BigInt::from(6)]);
        for x in qm.generators() {
            let y = qm.inverse_of(&x).unwrap();
            let prod = &f.mul(&x, &y) - &f.one();
            assert!(qm.modulus().contains(&prod));
        }
    }
}
