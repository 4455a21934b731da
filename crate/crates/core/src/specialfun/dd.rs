//! Double-double arithmetic for cancellation-prone series.

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub(crate) fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    pub(crate) fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self - o * Dd::from_f64(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * Dd::from_f64(q2);
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::from_f64(q3)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct DdComplex {
    pub(crate) re: Dd,
    pub(crate) im: Dd,
}

impl DdComplex {
    pub(crate) fn new(re: Dd, im: Dd) -> Self {
        DdComplex { re, im }
    }

    pub(crate) fn from_c64(z: Complex64) -> Self {
        DdComplex::new(Dd::from_f64(z.re), Dd::from_f64(z.im))
    }

    pub(crate) fn to_c64(self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    pub(crate) fn norm1(self) -> f64 {
        self.re.to_f64().abs() + self.im.to_f64().abs()
    }

    pub(crate) fn add_real(self, x: f64) -> Self {
        DdComplex::new(self.re + Dd::from_f64(x), self.im)
    }

    pub(crate) fn scale(self, x: Dd) -> Self {
        DdComplex::new(self.re * x, self.im * x)
    }
}

impl Add for DdComplex {
    type Output = DdComplex;
    fn add(self, o: DdComplex) -> DdComplex {
        DdComplex::new(self.re + o.re, self.im + o.im)
    }
}

impl Mul for DdComplex {
    type Output = DdComplex;
    fn mul(self, o: DdComplex) -> DdComplex {
        DdComplex::new(
            self.re * o.re - self.im * o.im,
            self.re * o.im + self.im * o.re,
        )
    }
}

impl Div for DdComplex {
    type Output = DdComplex;
    fn div(self, o: DdComplex) -> DdComplex {
        let den = o.re * o.re + o.im * o.im;
        let num = DdComplex::new(
            self.re * o.re + self.im * o.im,
            self.im * o.re - self.re * o.im,
        );
        DdComplex::new(num.re / den, num.im / den)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_lost_bits() {
        let a = Dd::from_f64(1.0) + Dd::from_f64(1e-20);
        let b = a - Dd::from_f64(1.0);
        assert_eq!(b.to_f64(), 1e-20);
        let third = Dd::from_f64(1.0) / Dd::from_f64(3.0);
        let back = third * Dd::from_f64(3.0) - Dd::from_f64(1.0);
        assert!(back.to_f64().abs() < 1e-31);
    }

    #[test]
    fn complex_division() {
        let z = DdComplex::from_c64(Complex64::new(1.5, -2.0));
        let w = DdComplex::from_c64(Complex64::new(0.3, 0.7));
        let q = (z / w) * w;
        assert!((q.to_c64() - z.to_c64()).norm() < 1e-30);
        assert!(z.norm1() > 0.0);
    }
}
