use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use super::element::FieldElement;
use super::field::FieldDescriptor;
use super::ideal::FracIdeal;
use crate::error::{input, Result};

/// Prime factorization of a positive integer by trial division.
pub fn factor_u64(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n.is_multiple_of(p) {
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn divisor_count_u64(n: u64) -> u64 {
    factor_u64(n).iter().map(|&(_, e)| e as u64 + 1).product()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrimeIdeal {
    pub ideal: FracIdeal,
    pub norm: u64,
    pub rational_prime: u64,
}

/// The prime ideals above a rational prime p, in canonical order.
pub fn primes_above(field: &FieldDescriptor, p: u64) -> Vec<PrimeIdeal> {
    if field.degree() == 1 {
        return vec![PrimeIdeal {
            ideal: FracIdeal::principal(field, &field.int(p as i64)),
            norm: p,
            rational_prime: p,
        }];
    }
    let t = field.omega_trace().rem_euclid(p as i64) as u128;
    let n = field.omega_norm().rem_euclid(p as i64) as u128;
    let pp = p as u128;
    let roots: Vec<u64> = (0..p)
        .filter(|&r| {
            let r = r as u128;
            (r * r % pp + pp * pp - t * r % pp + n).is_multiple_of(pp)
        })
        .collect();
    if roots.is_empty() {
        return vec![PrimeIdeal {
            ideal: FracIdeal::principal(field, &field.int(p as i64)),
            norm: p * p,
            rational_prime: p,
        }];
    }
    let mut out: Vec<PrimeIdeal> = roots
        .iter()
        .map(|&r| PrimeIdeal {
            ideal: FracIdeal::from_generators(
                field,
                &[field.int(p as i64), FieldElement::from_ints(-(r as i64), 1)],
            ),
            norm: p,
            rational_prime: p,
        })
        .collect();
    out.sort_by(|a, b| a.ideal.cmp(&b.ideal));
    out.dedup_by(|a, b| a.ideal == b.ideal);
    out
}

/// Prime factorization of a nonzero integral ideal.
pub fn factor_ideal(field: &FieldDescriptor, ideal: &FracIdeal) -> Result<Vec<(PrimeIdeal, u32)>> {
    if ideal.is_zero() {
        return input("cannot factor the zero ideal");
    }
    if !ideal.is_integral() {
        return input("factorization requires an integral ideal");
    }
    let norm = ideal
        .norm()
        .to_integer()
        .to_u64()
        .ok_or_else(|| crate::error::Error::Input("ideal norm exceeds 64 bits".into()))?;
    let mut out = Vec::new();
    for (p, _) in factor_u64(norm) {
        for prime in primes_above(field, p) {
            let inv = prime.ideal.inverse(field)?;
            let mut rest = ideal.clone();
            let mut e = 0u32;
            loop {
                let next = rest.product(&inv, field);
                if next.is_integral() {
                    rest = next;
                    e += 1;
                } else {
                    break;
                }
            }
            if e > 0 {
                out.push((prime, e));
            }
        }
    }
    Ok(out)
}

/// Number of integral ideal divisors.
pub fn ideal_divisor_count(field: &FieldDescriptor, ideal: &FracIdeal) -> Result<u64> {
    Ok(factor_ideal(field, ideal)?
        .iter()
        .map(|(_, e)| *e as u64 + 1)
        .product())
}

/// [K(𝔬):K(𝔠)] = ∏_{𝔭^k ∥ 𝔠} N𝔭^{k−1}(N𝔭 + 1).
pub fn k_index(field: &FieldDescriptor, level: &FracIdeal) -> Result<u64> {
    if level.is_zero() {
        return input("level ideal must be nonzero");
    }
    let mut out = 1u64;
    for (p, k) in factor_ideal(field, level)? {
        out *= p.norm.pow(k - 1) * (p.norm + 1);
    }
    Ok(out)
}

/// |(𝔬/𝔫)^×|
pub fn unit_group_order(field: &FieldDescriptor, modulus: &FracIdeal) -> Result<u64> {
    let mut out = 1u64;
    for (p, k) in factor_ideal(field, modulus)? {
        out *= p.norm.pow(k - 1) * (p.norm - 1);
    }
    Ok(out)
}

pub fn norm_u64(ideal: &FracIdeal) -> Option<u64> {
    let n: BigRational = ideal.norm();
    if !n.is_integer() || n.is_zero() {
        return None;
    }
    n.to_integer().to_u64()
}
