use std::f64::consts::PI;

use num_complex::Complex64;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn lanczos_sum(z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(LANCZOS[0], 0.0);
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    acc
}

/// sin(πz) with the real part reduced first, so that zeros at integers are
/// resolved to full relative precision.
pub fn sin_pi(z: Complex64) -> Complex64 {
    let n = z.re.round();
    let w = Complex64::new(z.re - n, z.im) * PI;
    let s = w.sin();
    if (n as i64).rem_euclid(2) == 0 {
        s
    } else {
        -s
    }
}

pub fn cos_pi(z: Complex64) -> Complex64 {
    let n = z.re.round();
    let w = Complex64::new(z.re - n, z.im) * PI;
    let c = w.cos();
    if (n as i64).rem_euclid(2) == 0 {
        c
    } else {
        -c
    }
}

fn is_nonpositive_integer(z: Complex64) -> bool {
    z.im == 0.0 && z.re <= 0.0 && z.re.fract() == 0.0
}

/// ln Γ(z) up to a multiple of 2πi. Infinite at the poles.
pub fn ln_gamma(z: Complex64) -> Complex64 {
    if is_nonpositive_integer(z) {
        return Complex64::new(f64::INFINITY, 0.0);
    }
    if z.re < 0.5 {
        let s = sin_pi(z);
        return Complex64::new(PI.ln(), 0.0) - s.ln() - ln_gamma(1.0 - z);
    }
    let w = z - 1.0;
    let t = w + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (w + 0.5) * t.ln() - t + lanczos_sum(w).ln()
}

pub fn gamma(z: Complex64) -> Complex64 {
    if is_nonpositive_integer(z) {
        return Complex64::new(f64::INFINITY, 0.0);
    }
    if z.re < 0.5 {
        return PI / (sin_pi(z) * gamma(1.0 - z));
    }
    if z.im == 0.0 && z.re < 170.0 {
        let x = z.re - 1.0;
        let t = x + LANCZOS_G + 0.5;
        let a = lanczos_sum(Complex64::new(x, 0.0)).re;
        return Complex64::new((2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a, 0.0);
    }
    ln_gamma(z).exp()
}

/// 1/Γ(z), entire, with exact zeros at the nonpositive integers.
pub fn rgamma(z: Complex64) -> Complex64 {
    if is_nonpositive_integer(z) {
        return Complex64::new(0.0, 0.0);
    }
    if z.re < 0.5 {
        return sin_pi(z) * (ln_gamma(1.0 - z)).exp() / PI;
    }
    if z.im == 0.0 && z.re < 170.0 {
        return Complex64::new(1.0 / gamma(z).re, 0.0);
    }
    (-ln_gamma(z)).exp()
}

pub fn gamma_real(x: f64) -> f64 {
    gamma(Complex64::new(x, 0.0)).re
}
