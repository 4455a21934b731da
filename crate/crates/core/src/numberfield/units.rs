use num_bigint::BigInt;
use num_integer::Roots;
use num_rational::BigRational;
use num_traits::{One, Signed};
use serde::Serialize;

use super::element::FieldElement;
use super::field::FieldDescriptor;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UnitData {
    pub roots_of_unity: Vec<FieldElement>,
    pub fundamental_unit: Option<FieldElement>,
    pub tp_mod_squares: Vec<FieldElement>,
}

impl UnitData {
    /// Norm of the fundamental unit, if there is one.
    pub fn fundamental_norm(&self, field: &FieldDescriptor) -> Option<BigRational> {
        self.fundamental_unit.as_ref().map(|e| field.norm(e))
    }

    /// Generator of the totally positive units modulo torsion.
    pub fn tp_generator(&self, field: &FieldDescriptor) -> Option<FieldElement> {
        let eps = self.fundamental_unit.as_ref()?;
        if field.norm(eps).is_positive() {
            Some(eps.clone())
        } else {
            Some(field.mul(eps, eps))
        }
    }
}

/// Floor of (p + √disc)/q for a nonsquare disc > 0.
pub(crate) fn floor_quadratic(p: i128, q: i128, disc: i128) -> i128 {
    let s = disc.sqrt();
    if q > 0 {
        (p + s).div_euclid(q)
    } else {
        (-p - s - 1).div_euclid(-q)
    }
}

/// The fundamental unit ε₀ > 1 (under the first real embedding) of a real
/// quadratic field, read off the first convergent p/q of ω with
/// N(p − qω) = ±1.
pub fn fundamental_unit(field: &FieldDescriptor) -> Option<FieldElement> {
    if !field.is_real_quadratic() {
        return None;
    }
    let disc = field.disc() as i128;
    let t = field.omega_trace() as i128;
    // ω = (t + √D)/2
    let (mut p_cf, mut q_cf) = (t, 2i128);
    let (mut p_prev, mut p_cur) = (BigInt::from(0), BigInt::from(1));
    let (mut q_prev, mut q_cur) = (BigInt::from(1), BigInt::from(0));
    let omega = field.omega();
    loop {
        let a = floor_quadratic(p_cf, q_cf, disc);
        let p_next = BigInt::from(a) * &p_cur + &p_prev;
        let q_next = BigInt::from(a) * &q_cur + &q_prev;
        p_prev = std::mem::replace(&mut p_cur, p_next);
        q_prev = std::mem::replace(&mut q_cur, q_next);
        let small = &FieldElement::from_rational(2, BigRational::from_integer(p_cur.clone()))
            - &omega.scale(&BigRational::from_integer(q_cur.clone()));
        if field.norm(&small).abs().is_one() {
            let unit = field.conj(&small);
            return Some(if field.embeddings(&unit)[0].re > 0.0 {
                unit
            } else {
                -&unit
            });
        }
        let p_new = a * q_cf - p_cf;
        let q_new = (disc - p_new * p_new) / q_cf;
        p_cf = p_new;
        q_cf = q_new;
    }
}

pub fn roots_of_unity(field: &FieldDescriptor) -> Vec<FieldElement> {
    let one = field.one();
    match field.radicand() {
        Some(-1) => {
            let i = field.omega();
            vec![one.clone(), i.clone(), -&one, -&i]
        }
        Some(-3) => {
            let w = field.omega();
            let mut out = vec![one];
            for _ in 1..6 {
                let next = field.mul(out.last().unwrap(), &w);
                out.push(next);
            }
            out
        }
        _ => vec![one.clone(), -&one],
    }
}

pub fn tp_units_mod_squares(field: &FieldDescriptor) -> UnitData {
    let roots = roots_of_unity(field);
    let fundamental = fundamental_unit(field);
    let tp_mod_squares = if field.degree() == 1 {
        vec![field.one()]
    } else if field.is_imaginary_quadratic() {
        // μ_w / μ_w² has order 2 and is represented by a primitive root
        vec![field.one(), roots[1].clone()]
    } else {
        let eps = fundamental.as_ref().expect("real quadratic field has a unit");
        if field.norm(eps).is_positive() {
            vec![field.one(), eps.clone()]
        } else {
            vec![field.one()]
        }
    };
    UnitData {
        roots_of_unity: roots,
        fundamental_unit: fundamental,
        tp_mod_squares,
    }
}
