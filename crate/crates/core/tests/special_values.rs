use std::f64::consts::PI;

use kuznetsov::specialfun::{bessel_i, bessel_j, bessel_k, gamma, kernel_real, whittaker_w};
use num_complex::Complex64;

fn r(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol * b.norm().max(1.0)
}

#[test]
fn tabulated_bessel_values() {
    let table = [
        (bessel_k(r(0.0), 1.0).unwrap(), 0.42102443824070834),
        (bessel_k(r(1.0), 2.0).unwrap(), 0.13986588181652243),
        (bessel_i(r(0.0), 1.0).unwrap(), 1.2660658777520082),
        (bessel_i(r(1.0), 2.5).unwrap(), 2.5167162452886984),
        (bessel_j(r(0.0), 1.0).unwrap(), 0.7651976865579666),
        (bessel_j(r(2.0), 5.0).unwrap(), 0.04656511627775222),
    ];
    for (got, want) in table {
        assert!(close(got, r(want), 1e-12), "{got} vs {want}");
    }
}

#[test]
fn half_integer_orders_are_elementary() {
    for x in [0.1, 0.7, 2.0, 9.0, 25.0] {
        let k = bessel_k(r(0.5), x).unwrap();
        assert!(close(k, r((PI / (2.0 * x)).sqrt() * (-x).exp()), 1e-12));
        let j = bessel_j(r(0.5), x).unwrap();
        assert!(close(j, r((2.0 / (PI * x)).sqrt() * x.sin()), 1e-12));
        let i = bessel_i(r(-0.5), x).unwrap();
        assert!(close(i, r((2.0 / (PI * x)).sqrt() * x.cosh()), 1e-12));
    }
}

#[test]
fn whittaker_reduces_to_macdonald() {
    for mu in [r(0.0), r(0.3), Complex64::new(0.0, 2.0)] {
        for y in [0.2, 1.0, 4.0, 12.0] {
            let w = whittaker_w(r(0.0), mu, y).unwrap();
            let k = bessel_k(mu, y / 2.0).unwrap() * (y / PI).sqrt();
            assert!(close(w, k, 1e-10), "μ = {mu}, y = {y}: {w} vs {k}");
        }
    }
    for y in [0.5, 3.0] {
        let w = whittaker_w(r(1.0), r(0.5), y).unwrap();
        assert!(close(w, r(y * (-y / 2.0).exp()), 1e-12));
    }
}

#[test]
fn gamma_reflection_and_values() {
    assert!(close(gamma(r(0.5)), r(PI.sqrt()), 1e-14));
    assert!(close(gamma(r(5.0)), r(24.0), 1e-14));
    for z in [Complex64::new(0.3, 1.7), Complex64::new(-2.4, 0.6), Complex64::new(0.5, -8.0)] {
        let lhs = gamma(z) * gamma(1.0 - z);
        let rhs = PI / (z * PI).sin();
        assert!(close(lhs, rhs, 1e-12), "{z}");
    }
}

#[test]
fn real_kernel_from_bessel_definition() {
    for nu in [r(0.3), Complex64::new(0.0, 1.5), Complex64::new(0.2, -0.7)] {
        for x in [0.4, 2.0, 7.5] {
            let got = kernel_real(nu, x).unwrap();
            let direct = (bessel_j(-2.0 * nu, x).unwrap() - bessel_j(2.0 * nu, x).unwrap()) * 2.0 * PI / (PI * nu).sin();
            assert!(close(got.value, direct, 1e-9), "ν = {nu}, x = {x}");
        }
    }
}
