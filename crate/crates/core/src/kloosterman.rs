use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numberfield::{
    cis_fraction, divisor_count_u64, element_of, ideal_divisor_count, principal_generator,
    FieldDescriptor, FieldElement, FracIdeal, QuotientModule, Residue, ResidueRing,
};

pub const DEFAULT_TERM_CAP: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct KloostermanQuery {
    pub alpha1: FieldElement,
    pub frak_a1: FracIdeal,
    pub alpha2: FieldElement,
    pub frak_a2: FracIdeal,
    pub c: FieldElement,
    pub frak_c: FracIdeal,
}

impl KloostermanQuery {
    /// Query with all ideals trivial.
    pub fn trivial(field: &FieldDescriptor, alpha1: FieldElement, alpha2: FieldElement, c: FieldElement) -> Self {
        let o = FracIdeal::unit(field);
        KloostermanQuery {
            alpha1,
            frak_a1: o.clone(),
            alpha2,
            frak_a2: o.clone(),
            c,
            frak_c: o,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct KloostermanResult {
    pub value: Complex64,
    pub term_count: u64,
    #[serde(serialize_with = "crate::numberfield::serialize_rational")]
    pub modulus_norm: BigRational,
}

/// Sum of a slice in a fixed binary tree, independent of thread count.
pub fn pairwise_sum(values: &[Complex64]) -> Complex64 {
    match values.len() {
        0 => Complex64::new(0.0, 0.0),
        1 => values[0],
        n => {
            let (left, right) = values.split_at(n / 2);
            pairwise_sum(left) + pairwise_sum(right)
        }
    }
}

/// The data of a Kloosterman sum that does not depend on the frequencies:
/// the quotient 𝔞₁𝔠⁻¹/𝔞₁c, its modulus 𝔫 = c𝔠, a generator z with its
/// inverse-type partner, and the unit pairs (u, u⁻¹) of 𝔬/𝔫. Every
/// generator is x = z·u with x⁻¹ = z⁻¹·u⁻¹.
#[derive(Clone, Debug)]
pub struct KloostermanModulus {
    field: FieldDescriptor,
    frak_a1: FracIdeal,
    frak_c: FracIdeal,
    c: FieldElement,
    quotient: QuotientModule,
    modulus: FracIdeal,
    ring: ResidueRing,
    z: FieldElement,
    z_inv: FieldElement,
    pairs: Vec<(Residue, Residue)>,
}

impl KloostermanModulus {
    pub fn new(
        field: &FieldDescriptor,
        frak_a1: &FracIdeal,
        c: &FieldElement,
        frak_c: &FracIdeal,
        term_cap: u64,
    ) -> Result<Self> {
        if c.is_zero() {
            return Err(Error::Precondition("c must be nonzero".into()));
        }
        if frak_a1.is_zero() || frak_c.is_zero() {
            return Err(Error::Precondition("ideals must be nonzero".into()));
        }
        if !frak_c.inverse(field)?.contains(c) {
            return Err(Error::Precondition("c ∉ 𝔠⁻¹".into()));
        }
        let ambient = frak_a1.product(&frak_c.inverse(field)?, field);
        let sub = frak_a1.mul_element(c, field);
        let quotient = QuotientModule::new(field, &ambient, &sub)?;
        let modulus = quotient.modulus();
        let ring = ResidueRing::new(field, &modulus)?;
        if ring.unit_count() > term_cap {
            return Err(Error::Input(format!(
                "Kloosterman sum has {} terms, above the cap of {term_cap}",
                ring.unit_count()
            )));
        }
        let z = quotient
            .first_generator()
            .ok_or_else(|| Error::Internal("quotient module has no generator".into()))?;
        let z_inv = quotient.inverse_of(&z)?;
        let units: Vec<Residue> = ring.units().collect();
        let pairs = units
            .par_iter()
            .map(|&u| {
                let v = ring.inverse(u).expect("enumerated residue is a unit");
                (u, v)
            })
            .collect();
        Ok(KloostermanModulus {
            field: field.clone(),
            frak_a1: frak_a1.clone(),
            frak_c: frak_c.clone(),
            c: c.clone(),
            quotient,
            modulus,
            ring,
            z,
            z_inv,
            pairs,
        })
    }

    pub fn term_count(&self) -> u64 {
        self.pairs.len() as u64
    }

    pub fn modulus(&self) -> &FracIdeal {
        &self.modulus
    }

    pub fn quotient(&self) -> &QuotientModule {
        &self.quotient
    }

    /// The generators x and their partners x⁻¹ as field elements.
    pub fn terms(&self) -> Vec<(FieldElement, FieldElement)> {
        let f = &self.field;
        self.pairs
            .iter()
            .map(|&(u, v)| {
                (
                    f.mul(&self.z, &element_of(f, u)),
                    f.mul(&self.z_inv, &element_of(f, v)),
                )
            })
            .collect()
    }

    pub fn check_frequencies(&self, alpha1: &FieldElement, alpha2: &FieldElement) -> Result<()> {
        let f = &self.field;
        let dinv = f.different_inverse();
        let a1_inv = self.frak_a1.inverse(f)?;
        if !a1_inv.product(&dinv, f).contains(alpha1) {
            return Err(Error::Precondition("α₁ ∉ 𝔞₁⁻¹𝔡⁻¹".into()));
        }
        let c_inv2 = self.frak_c.pow(-2, f)?;
        if !self.frak_a1.product(&dinv, f).product(&c_inv2, f).contains(alpha2) {
            return Err(Error::Precondition("α₂ ∉ 𝔞₁𝔡⁻¹𝔠⁻²".into()));
        }
        Ok(())
    }

    /// Trace functionals (Tr β, Tr βω) of β = α·w/c.
    fn functionals(&self, alpha: &FieldElement, w: &FieldElement) -> Result<Vec<BigRational>> {
        let f = &self.field;
        let beta = f.div(&f.mul(alpha, w), &self.c)?;
        let mut out = vec![f.trace(&beta)];
        if f.degree() == 2 {
            out.push(f.trace(&f.mul(&beta, &f.omega())));
        }
        Ok(out)
    }

    /// Σ ψ_∞((α₁x + α₂x⁻¹)/c) with every term reduced to an exact residue
    /// class modulo the common denominator of the phase.
    pub fn evaluate(&self, alpha1: &FieldElement, alpha2: &FieldElement) -> Result<Complex64> {
        self.check_frequencies(alpha1, alpha2)?;
        let t = self.functionals(alpha1, &self.z)?;
        let s = self.functionals(alpha2, &self.z_inv)?;
        let den = t
            .iter()
            .chain(&s)
            .fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
        let to_int = |q: &BigRational| -> Result<i128> {
            ((q * BigRational::from_integer(den.clone())).to_integer().mod_floor(&den))
                .to_i128()
                .ok_or_else(|| Error::Input("phase denominators exceed 128-bit range".into()))
        };
        let l = den
            .to_i128()
            .filter(|&l| l < (1i128 << 80))
            .ok_or_else(|| Error::Input("phase denominators exceed 128-bit range".into()))?;
        let ti: Vec<i128> = t.iter().map(to_int).collect::<Result<_>>()?;
        let si: Vec<i128> = s.iter().map(to_int).collect::<Result<_>>()?;
        let (t1, s1) = (ti.get(1).copied().unwrap_or(0), si.get(1).copied().unwrap_or(0));
        let terms: Vec<Complex64> = self
            .pairs
            .par_iter()
            .map(|&(u, v)| {
                let k = (u.0 * ti[0] + u.1 * t1 + v.0 * si[0] + v.1 * s1).rem_euclid(l);
                let k = if 2 * k > l { k - l } else { k };
                let angle = 2.0 * std::f64::consts::PI * (k as f64 / l as f64);
                Complex64::new(angle.cos(), angle.sin())
            })
            .collect();
        Ok(pairwise_sum(&terms))
    }

    /// Evaluates with fresh representatives: a random generator z′ = z·u₀ + j₀
    /// and every term shifted by random elements of 𝔞₁c and 𝔞₁⁻¹c𝔠². Uses
    /// exact field arithmetic throughout.
    pub fn evaluate_shuffled<R: Rng>(
        &self,
        alpha1: &FieldElement,
        alpha2: &FieldElement,
        rng: &mut R,
    ) -> Result<Complex64> {
        self.check_frequencies(alpha1, alpha2)?;
        let f = &self.field;
        let sub = self.quotient.sub();
        let inv_sub = self
            .quotient
            .ambient()
            .inverse(f)?
            .product(&self.modulus, f);
        let u0 = self.pairs[rng.random_range(0..self.pairs.len())].0;
        let z = &f.mul(&self.z, &element_of(f, u0)) + &random_element(sub, rng);
        let z_inv = self.quotient.inverse_of(&z)?;
        let mut terms = Vec::with_capacity(self.pairs.len());
        for &(u, v) in &self.pairs {
            let x = &f.mul(&z, &element_of(f, u)) + &random_element(sub, rng);
            let x_inv = &f.mul(&z_inv, &element_of(f, v)) + &random_element(&inv_sub, rng);
            let arg = f.div(&(&f.mul(alpha1, &x) + &f.mul(alpha2, &x_inv)), &self.c)?;
            terms.push(f.psi_inf(&arg));
        }
        Ok(pairwise_sum(&terms))
    }

    /// Checks x·x⁻¹ ∈ 1 + 𝔫 and x·𝔬 + J = I for every term.
    pub fn verify_terms(&self) -> bool {
        let f = &self.field;
        self.terms().iter().all(|(x, y)| {
            self.quotient.is_generator(x)
                && self.modulus.contains(&(&f.mul(x, y) - &f.one()))
        })
    }

    pub fn ring(&self) -> &ResidueRing {
        &self.ring
    }
}

fn random_element<R: Rng>(ideal: &FracIdeal, rng: &mut R) -> FieldElement {
    let basis = ideal.z_basis();
    let mut acc = FieldElement::zero(basis[0].degree());
    for b in &basis {
        let k: i64 = rng.random_range(-5..=5);
        acc = &acc + &b.scale(&BigRational::from_integer(k.into()));
    }
    acc
}

/// Checks the membership and class conditions of a query.
pub fn check_query(field: &FieldDescriptor, q: &KloostermanQuery) -> Result<()> {
    if q.frak_a2.is_zero() {
        return Err(Error::Precondition("𝔞₂ must be nonzero".into()));
    }
    let quotient = q
        .frak_c
        .pow(2, field)?
        .product(&q.frak_a1.product(&q.frak_a2, field).inverse(field)?, field);
    if principal_generator(field, &quotient)?.is_none() {
        return Err(Error::Precondition("𝔠² and 𝔞₁𝔞₂ lie in different ideal classes".into()));
    }
    Ok(())
}

pub fn kloosterman_sum_capped(
    field: &FieldDescriptor,
    q: &KloostermanQuery,
    term_cap: u64,
) -> Result<KloostermanResult> {
    check_query(field, q)?;
    let modulus = KloostermanModulus::new(field, &q.frak_a1, &q.c, &q.frak_c, term_cap)?;
    let value = modulus.evaluate(&q.alpha1, &q.alpha2)?;
    Ok(KloostermanResult {
        value,
        term_count: modulus.term_count(),
        modulus_norm: modulus.modulus().norm(),
    })
}

pub fn kloosterman_sum(field: &FieldDescriptor, q: &KloostermanQuery) -> Result<KloostermanResult> {
    kloosterman_sum_capped(field, q, DEFAULT_TERM_CAP)
}

/// S(m, n; c) by direct enumeration over x mod c with gcd(x, c) = 1.
pub fn classical_kloosterman(m: i64, n: i64, c: u64) -> Complex64 {
    let c = c as i64;
    let mut terms = Vec::new();
    for x in 0..c {
        if x.gcd(&c) != 1 {
            continue;
        }
        let xbar = (0..c).find(|y| (x * y).rem_euclid(c) == 1 % c).unwrap_or(0);
        let k = (m * x + n * xbar).rem_euclid(c);
        let q = BigRational::new(k.into(), c.into());
        terms.push(cis_fraction(&q));
    }
    pairwise_sum(&terms)
}

#[derive(Clone, Debug, Serialize)]
pub struct WeilReport {
    pub value_abs: f64,
    pub weil_cap: f64,
    pub ratio: f64,
    /// Both frequencies vanish; the cap is reported only.
    pub degenerate: bool,
}

impl WeilReport {
    pub fn holds(&self) -> bool {
        self.degenerate || self.value_abs <= self.weil_cap * (1.0 + 1e-12) + 1e-9
    }
}

/// Weil-type cap τ(𝔫)·‖𝔤‖^{1/2}·‖𝔫‖^{1/2}, 𝔫 = c𝔠, with 𝔤 the ideal
/// generated by 𝔫 and both frequencies made integral. Over ℚ this is
/// d(c)·gcd(m, n, c)^{1/2}·c^{1/2}.
pub fn weil_cap(field: &FieldDescriptor, q: &KloostermanQuery) -> Result<f64> {
    let modulus = q.frak_c.mul_element(&q.c, field);
    let d = field.different();
    let freq1 = q.frak_a1.product(&d, field).mul_element(&q.alpha1, field);
    let freq2 = q
        .frak_a1
        .inverse(field)?
        .product(&q.frak_c.pow(2, field)?, field)
        .product(&d, field)
        .mul_element(&q.alpha2, field);
    let g = modulus.sum(&freq1, field).sum(&freq2, field);
    let norm_n = crate::numberfield::ratio_to_f64(&modulus.norm());
    let norm_g = crate::numberfield::ratio_to_f64(&g.norm());
    let tau = if field.degree() == 1 {
        let c = modulus.basis()[0][0].to_u64().unwrap_or(1);
        divisor_count_u64(c)
    } else {
        ideal_divisor_count(field, &modulus)?
    };
    Ok(tau as f64 * norm_g.sqrt() * norm_n.sqrt())
}

pub fn weil_margin(field: &FieldDescriptor, q: &KloostermanQuery) -> Result<WeilReport> {
    let result = kloosterman_sum(field, q)?;
    let cap = weil_cap(field, q)?;
    let value_abs = result.value.norm();
    Ok(WeilReport {
        value_abs,
        weil_cap: cap,
        ratio: value_abs / cap,
        degenerate: q.alpha1.is_zero() && q.alpha2.is_zero(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rational_sum(m: i64, n: i64, c: i64) -> Complex64 {
        let q = FieldDescriptor::rational();
        kloosterman_sum(&q, &KloostermanQuery::trivial(&q, q.int(m), q.int(n), q.int(c)))
            .unwrap()
            .value
    }

    #[test]
    fn small_rational_values() {
        assert!((rational_sum(1, 1, 1) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((rational_sum(1, 1, 3) - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
        let expected = -4.0 * (std::f64::consts::PI / 5.0).cos();
        assert!((rational_sum(1, 2, 5) - Complex64::new(expected, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn classical_values() {
        assert!((classical_kloosterman(1, 1, 2) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((classical_kloosterman(1, 0, 5) - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
        assert!((classical_kloosterman(3, -2, 1) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn matches_classical_sum() {
        for c in 1..=30 {
            for m in -3..=3 {
                for n in -3..=3 {
                    let a = rational_sum(m, n, c);
                    let b = classical_kloosterman(m, n, c as u64);
                    assert!((a - b).norm() < 1e-9, "S({m},{n};{c})");
                }
            }
        }
    }

    #[test]
    fn negative_modulus_matches() {
        for c in [2, 7, 12] {
            assert!((rational_sum(1, 3, -c) - rational_sum(1, 3, c)).norm() < 1e-10);
        }
    }

    #[test]
    fn gaussian_single_term() {
        let f = FieldDescriptor::quadratic(-1).unwrap();
        let half = f.rat(1, 2);
        let q = KloostermanQuery::trivial(&f, half.clone(), half, FieldElement::from_ints(1, 1));
        let r = kloosterman_sum(&f, &q).unwrap();
        assert_eq!(r.term_count, 1);
        // single term x = x⁻¹ = 1: ψ(1/(1+i)) = e^{2πi·Tr((1−i)/2)} = 1
        assert!((r.value - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn membership_violations_are_rejected() {
        let f = FieldDescriptor::quadratic(-1).unwrap();
        let q = KloostermanQuery::trivial(&f, f.rat(1, 3), f.one(), f.int(3));
        assert!(matches!(kloosterman_sum(&f, &q), Err(Error::Precondition(_))));
        let q = KloostermanQuery::trivial(&f, f.one(), f.one(), f.zero());
        assert!(matches!(kloosterman_sum(&f, &q), Err(Error::Precondition(_))));
    }

    #[test]
    fn class_condition_is_checked() {
        let f = FieldDescriptor::quadratic(-5).unwrap();
        let p2 = FracIdeal::from_generators(&f, &[f.int(2), FieldElement::from_ints(1, 1)]);
        let o = FracIdeal::unit(&f);
        let q = KloostermanQuery {
            alpha1: f.zero(),
            frak_a1: p2,
            alpha2: f.zero(),
            frak_a2: o.clone(),
            c: f.one(),
            frak_c: o,
        };
        assert!(matches!(kloosterman_sum(&f, &q), Err(Error::Precondition(_))));
    }

    #[test]
    fn term_cap_is_enforced() {
        let q = FieldDescriptor::rational();
        let query = KloostermanQuery::trivial(&q, q.one(), q.one(), q.int(101));
        assert!(kloosterman_sum_capped(&q, &query, 50).is_err());
    }

    #[test]
    fn terms_satisfy_the_defining_congruence() {
        let f = FieldDescriptor::quadratic(-5).unwrap();
        let p2 = FracIdeal::from_generators(&f, &[f.int(2), FieldElement::from_ints(1, 1)]);
        let m = KloostermanModulus::new(&f, &p2, &f.int(3), &p2, 10_000).unwrap();
        assert!(m.verify_terms());
        assert_eq!(m.term_count(), m.ring().unit_count());
    }

    #[test]
    fn shuffled_representatives_agree() {
        let f = FieldDescriptor::quadratic(2).unwrap();
        let dinv = f.different_inverse();
        let alpha = dinv.z_basis()[1].clone();
        let c = FieldElement::from_ints(3, 1);
        let o = FracIdeal::unit(&f);
        let m = KloostermanModulus::new(&f, &o, &c, &o, 10_000).unwrap();
        let base = m.evaluate(&alpha, &alpha).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..3 {
            let v = m.evaluate_shuffled(&alpha, &alpha, &mut rng).unwrap();
            assert!((v - base).norm() < 1e-10);
        }
    }

    #[test]
    fn weil_cap_over_rationals() {
        let q = FieldDescriptor::rational();
        let r = weil_margin(&q, &KloostermanQuery::trivial(&q, q.one(), q.one(), q.int(3))).unwrap();
        assert!((r.weil_cap - 2.0 * 3f64.sqrt()).abs() < 1e-12);
        assert!(r.holds());
        let r = weil_margin(&q, &KloostermanQuery::trivial(&q, q.one(), q.int(2), q.int(5))).unwrap();
        assert!((r.weil_cap - 2.0 * 5f64.sqrt()).abs() < 1e-12);
        let r = weil_margin(&q, &KloostermanQuery::trivial(&q, q.zero(), q.zero(), q.int(12))).unwrap();
        assert!(r.degenerate);
        assert!((r.value_abs - 4.0).abs() < 1e-12);
    }

    #[test]
    fn pairwise_sum_is_order_fixed() {
        let v: Vec<Complex64> = (0..17).map(|k| Complex64::new(k as f64, -(k as f64))).collect();
        assert_eq!(pairwise_sum(&v), Complex64::new(136.0, -136.0));
    }
}
