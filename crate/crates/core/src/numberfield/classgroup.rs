use std::collections::HashSet;
use std::f64::consts::PI;

use num_bigint::BigInt;
use num_integer::Roots;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use serde::Serialize;

use super::element::FieldElement;
use super::field::FieldDescriptor;
use super::ideal::{integral_ideals_of_norm, FracIdeal};
use super::units::{floor_quadratic, tp_units_mod_squares, UnitData};
use crate::error::{input, Error, Result};

const MAX_CYCLE_STEPS: usize = 200_000;

fn to_i128(x: &BigInt) -> Result<i128> {
    x.to_i128()
        .ok_or_else(|| Error::Input("ideal entries exceed 128-bit range".into()))
}

/// Splits a nonzero quadratic ideal as content·[a, b + ω] with the lattice
/// [a, b + ω] primitive.
fn primitive_part(ideal: &FracIdeal) -> Result<(BigRational, i128, i128)> {
    let m = ideal.basis();
    let c = &m[1][1];
    let content = BigRational::new(c.clone(), ideal.den().clone());
    Ok((content, to_i128(&(&m[0][0] / c))?, to_i128(&(&m[1][0] / c))?))
}

fn int_element(a: i128, b: i128) -> FieldElement {
    FieldElement::from_coords(vec![
        BigRational::from_integer(a.into()),
        BigRational::from_integer(b.into()),
    ])
}

/// Generator of [a, b + ω] in an imaginary quadratic field, by solving
/// N(x) = a over the lattice.
fn imaginary_generator(field: &FieldDescriptor, a: i128, b: i128) -> Option<FieldElement> {
    let t = field.omega_trace() as i128;
    let absdisc = -(field.disc() as i128);
    // (2X + tY)² + |D|Y² = 4a with x = X + Yω, X ≡ bY (mod a)
    let ymax = (4 * a / absdisc).sqrt() + 1;
    for y in -ymax..=ymax {
        let rest = 4 * a - absdisc * y * y;
        if rest < 0 {
            continue;
        }
        let s = rest.sqrt();
        if s * s != rest {
            continue;
        }
        for s in [s, -s] {
            let twice_x = s - t * y;
            if twice_x % 2 != 0 {
                continue;
            }
            let x = twice_x / 2;
            if (x - b * y).rem_euclid(a) == 0 {
                return Some(int_element(x, y));
            }
        }
    }
    None
}

/// Generator of [a, b + ω] in a real quadratic field, from the continued
/// fraction of θ = (b + ω)/a: the lattice is principal exactly when some
/// complete quotient has denominator ±2 in the (P + √D)/Q normalization.
fn real_generator(field: &FieldDescriptor, a: i128, b: i128) -> Result<Option<FieldElement>> {
    let disc = field.disc() as i128;
    let t = field.omega_trace() as i128;
    let mut p = 2 * b + t;
    let mut q = 2 * a;
    let mut product = FieldElement::from_rational(2, BigRational::from_integer(a.into()));
    let mut seen = HashSet::new();
    for _ in 0..MAX_CYCLE_STEPS {
        if q.abs() == 2 {
            return Ok(Some(product));
        }
        if !seen.insert((p, q)) {
            return Ok(None);
        }
        let digit = floor_quadratic(p, q, disc);
        // θ − digit = ((P − t − digit·Q) + 2ω)/Q
        let step = FieldElement::from_coords(vec![
            BigRational::new((p - t - digit * q).into(), q.into()),
            BigRational::new(2.into(), q.into()),
        ]);
        product = field.mul(&product, &step);
        let p_new = digit * q - p;
        q = (disc - p_new * p_new) / q;
        p = p_new;
    }
    Err(Error::Internal(
        "continued fraction cycle did not close".into(),
    ))
}

/// A generator of the ideal if it is principal.
pub fn principal_generator(field: &FieldDescriptor, ideal: &FracIdeal) -> Result<Option<FieldElement>> {
    if ideal.is_zero() {
        return input("the zero ideal has no generator");
    }
    if field.degree() == 1 {
        let g = BigRational::new(ideal.basis()[0][0].clone(), ideal.den().clone());
        return Ok(Some(FieldElement::from_rational(1, g)));
    }
    let (content, a, b) = primitive_part(ideal)?;
    let primitive = if field.is_imaginary_quadratic() {
        imaginary_generator(field, a, b)
    } else {
        real_generator(field, a, b)?
    };
    let Some(g) = primitive else { return Ok(None) };
    let g = g.scale(&content);
    if FracIdeal::principal(field, &g) != *ideal {
        return Err(Error::Internal(format!(
            "principality search produced a wrong generator for {}",
            ideal.key()
        )));
    }
    Ok(Some(g))
}

/// A totally positive generator of the ideal if it is narrowly principal.
pub fn narrow_generator(
    field: &FieldDescriptor,
    units: &UnitData,
    ideal: &FracIdeal,
) -> Result<Option<FieldElement>> {
    let Some(mut g) = principal_generator(field, ideal)? else {
        return Ok(None);
    };
    if field.is_real_quadratic() && field.norm(&g).is_negative() {
        let eps = units.fundamental_unit.as_ref().expect("real field has a unit");
        if field.norm(eps).is_negative() {
            g = field.mul(&g, eps);
        } else {
            return Ok(None);
        }
    }
    if field.is_imaginary_quadratic() {
        return Ok(Some(g));
    }
    if field.embeddings(&g)[0].re < 0.0 {
        g = -&g;
    }
    debug_assert!(field.is_totally_positive(&g));
    Ok(Some(g))
}

/// Deterministic representative of γ modulo totally positive units.
pub fn normalize_tp_generator(field: &FieldDescriptor, units: &UnitData, gamma: &FieldElement) -> FieldElement {
    if field.is_imaginary_quadratic() {
        return units
            .roots_of_unity
            .iter()
            .map(|z| field.mul(gamma, z))
            .max_by(|x, y| x.coords().cmp(y.coords()))
            .expect("roots of unity are nonempty");
    }
    let Some(eta) = units.tp_generator(field) else {
        return gamma.clone();
    };
    let emb = field.embeddings(gamma);
    let log_ratio = (emb[0].re.abs() / emb[1].re.abs()).ln();
    let log_eta = 2.0 * field.embeddings(&eta)[0].re.ln();
    let k = (-log_ratio / log_eta).round() as i64;
    let step = if k >= 0 {
        field.pow(&eta, k as u64)
    } else {
        field.pow(&field.inv(&eta).expect("unit"), (-k) as u64)
    };
    field.mul(gamma, &step)
}

pub fn minkowski_bound(field: &FieldDescriptor) -> f64 {
    let d = (field.disc() as f64).abs().sqrt();
    match field.signature() {
        (1, 0) => 1.0,
        (2, 0) => d / 2.0,
        _ => 2.0 / PI * d,
    }
}

fn ideals_up_to(field: &FieldDescriptor, bound: u64) -> Vec<FracIdeal> {
    (1..=bound)
        .flat_map(|n| integral_ideals_of_norm(field, n))
        .collect()
}

/// Ideal class representatives (smallest norm first) under the given
/// equivalence test on quotients.
fn class_reps(
    field: &FieldDescriptor,
    candidates: impl Iterator<Item = FracIdeal>,
    target: Option<usize>,
    equivalent: impl Fn(&FracIdeal) -> Result<bool>,
) -> Result<Vec<FracIdeal>> {
    let mut reps: Vec<FracIdeal> = Vec::new();
    for cand in candidates {
        if target == Some(reps.len()) {
            break;
        }
        let mut new_class = true;
        for r in &reps {
            if equivalent(&cand.product(&r.inverse(field)?, field))? {
                new_class = false;
                break;
            }
        }
        if new_class {
            reps.push(cand);
        }
    }
    Ok(reps)
}

pub fn class_number(field: &FieldDescriptor) -> Result<usize> {
    let bound = minkowski_bound(field).floor() as u64;
    let reps = class_reps(field, ideals_up_to(field, bound.max(1)).into_iter(), None, |q| {
        Ok(principal_generator(field, q)?.is_some())
    })?;
    Ok(reps.len())
}

pub fn narrow_class_number(field: &FieldDescriptor, units: &UnitData) -> Result<usize> {
    let h = class_number(field)?;
    Ok(match units.fundamental_norm(field) {
        Some(n) if n.is_positive() => 2 * h,
        _ => h,
    })
}

/// Narrow class representatives: smallest-norm integral ideal of each narrow
/// class, ties broken by the canonical basis.
pub fn narrow_class_group(field: &FieldDescriptor, units: &UnitData) -> Result<Vec<FracIdeal>> {
    let target = narrow_class_number(field, units)?;
    let candidates = (1u64..).flat_map(|n| integral_ideals_of_norm(field, n));
    let reps = class_reps(field, candidates, Some(target), |q| {
        Ok(narrow_generator(field, units, q)?.is_some())
    })?;
    Ok(reps)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClassRep {
    pub ideal: FracIdeal,
    pub gamma: FieldElement,
}

/// The narrow class representatives 𝔪 for which 𝔪²𝔞𝔞′⁻¹ = (γ) with γ
/// totally positive, each with its normalized γ.
pub fn narrow_class_reps(field: &FieldDescriptor, a: &FracIdeal, a_prime: &FracIdeal) -> Result<Vec<ClassRep>> {
    if a.is_zero() || a_prime.is_zero() {
        return input("narrow class representatives need nonzero ideals");
    }
    let units = tp_units_mod_squares(field);
    let twist = a.product(&a_prime.inverse(field)?, field);
    let mut out = Vec::new();
    for m in narrow_class_group(field, &units)? {
        let target = m.pow(2, field)?.product(&twist, field);
        if let Some(g) = narrow_generator(field, &units, &target)? {
            out.push(ClassRep {
                ideal: m,
                gamma: normalize_tp_generator(field, &units, &g),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(d: i64) -> FieldDescriptor {
        FieldDescriptor::quadratic(d).unwrap()
    }

    #[test]
    fn class_numbers() {
        let cases = [
            (-1, 1),
            (-3, 1),
            (-5, 2),
            (-23, 3),
            (-47, 5),
            (-14, 4),
            (2, 1),
            (3, 1),
            (10, 2),
            (79, 3),
            (82, 4),
            (226, 8),
        ];
        for (d, h) in cases {
            assert_eq!(class_number(&f(d)).unwrap(), h, "d = {d}");
        }
        assert_eq!(class_number(&FieldDescriptor::rational()).unwrap(), 1);
    }

    #[test]
    fn narrow_class_numbers() {
        for (d, h) in [(2, 1), (3, 2), (5, 1), (6, 2), (10, 2), (-5, 2), (79, 6)] {
            let field = f(d);
            let units = tp_units_mod_squares(&field);
            assert_eq!(narrow_class_number(&field, &units).unwrap(), h, "d = {d}");
            assert_eq!(narrow_class_group(&field, &units).unwrap().len(), h, "d = {d}");
        }
    }

    #[test]
    fn generators_are_found_for_principal_ideals() {
        for d in [-7, -3, -1, 2, 5, 13, 94, 139] {
            let field = f(d);
            for x in [
                FieldElement::from_ints(3, 1),
                FieldElement::from_ints(7, -2),
                FieldElement::from_ints(11, 5),
            ] {
                let ideal = FracIdeal::principal(&field, &x).scale(&BigRational::new(1.into(), 3.into()), &field);
                let g = principal_generator(&field, &ideal).unwrap().unwrap();
                assert_eq!(FracIdeal::principal(&field, &g), ideal);
            }
        }
    }

    #[test]
    fn nonprincipal_ideal_detected() {
        let field = f(-5);
        let p2 = FracIdeal::from_generators(&field, &[field.int(2), FieldElement::from_ints(1, 1)]);
        assert!(principal_generator(&field, &p2).unwrap().is_none());
        let field = f(10);
        let p2 = FracIdeal::from_generators(&field, &[field.int(2), FieldElement::from_ints(0, 1)]);
        assert!(principal_generator(&field, &p2).unwrap().is_none());
    }

    #[test]
    fn sqrt3_is_not_narrowly_principal() {
        let field = f(3);
        let units = tp_units_mod_squares(&field);
        let sqrt3 = FracIdeal::principal(&field, &FieldElement::from_ints(0, 1));
        assert!(principal_generator(&field, &sqrt3).unwrap().is_some());
        assert!(narrow_generator(&field, &units, &sqrt3).unwrap().is_none());
    }

    #[test]
    fn reps_over_rationals_and_gaussians() {
        let q = FieldDescriptor::rational();
        let z = FracIdeal::unit(&q);
        let reps = narrow_class_reps(&q, &z, &z).unwrap();
        assert_eq!(reps.len(), 1);
        assert_eq!(reps[0].ideal, z);
        assert_eq!(reps[0].gamma, q.one());

        let g = f(-1);
        let o = FracIdeal::unit(&g);
        let reps = narrow_class_reps(&g, &o, &o).unwrap();
        assert_eq!(reps.len(), 1);
    }

    #[test]
    fn reps_sqrt3_cover_both_narrow_classes() {
        let field = f(3);
        let o = FracIdeal::unit(&field);
        let reps = narrow_class_reps(&field, &o, &o).unwrap();
        // every narrow class squares into the principal narrow class here
        assert_eq!(reps.len(), 2);
        for r in &reps {
            assert!(field.is_totally_positive(&r.gamma));
            let lhs = r.ideal.pow(2, &field).unwrap();
            assert_eq!(FracIdeal::principal(&field, &r.gamma), lhs);
        }
    }

    #[test]
    fn normalization_is_canonical() {
        let field = f(3);
        let units = tp_units_mod_squares(&field);
        let gamma = FieldElement::from_ints(5, 2);
        let base = normalize_tp_generator(&field, &units, &gamma);
        let eta = units.tp_generator(&field).unwrap();
        for k in 1..4 {
            let shifted = field.mul(&gamma, &field.pow(&eta, k));
            assert_eq!(normalize_tp_generator(&field, &units, &shifted), base);
        }
    }
}
