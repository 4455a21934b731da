use std::f64::consts::PI;

use kuznetsov::ingest::{canonical_json, parse_dataset};
use kuznetsov::kloosterman::{classical_kloosterman, kloosterman_sum, KloostermanQuery};
use kuznetsov::numberfield::{FieldDescriptor, FracIdeal};
use kuznetsov::specialfun::{kernel_complex, kernel_real, Estimate, PlaceKind};
use kuznetsov::spectral::{mu_integrate, MeasureConfig, PlaceWeight, WeightFunctionH};
use num_complex::Complex64;
use proptest::prelude::*;

fn naive_kloosterman(m: i64, n: i64, c: i64) -> f64 {
    let mut total = 0.0;
    for x in 1..=c {
        if num_gcd(x, c) != 1 {
            continue;
        }
        let inv = (1..=c).find(|y| (x * y) % c == 1 % c).expect("unit has an inverse");
        total += (2.0 * PI * (m * x + n * inv) as f64 / c as f64).cos();
    }
    total
}

fn num_gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        num_gcd(b, a % b)
    }
}

fn field() -> impl Strategy<Value = FieldDescriptor> {
    prop_oneof![
        Just(FieldDescriptor::rational()),
        (-7i64..=7)
            .prop_filter("squarefree, not 1", |d| *d != 0 && *d != 1 && kuznetsov::numberfield::is_squarefree(*d))
            .prop_map(|d| FieldDescriptor::quadratic(d).unwrap()),
    ]
}

fn element(f: &FieldDescriptor) -> impl Strategy<Value = kuznetsov::numberfield::FieldElement> {
    let f = f.clone();
    (-20i64..=20, -20i64..=20).prop_map(move |(a, b)| {
        if f.degree() == 1 {
            f.int(a)
        } else {
            f.element(&[(a, 1), (b, 1)])
        }
    })
}

fn one_place(kind: PlaceKind, a: f64) -> WeightFunctionH {
    WeightFunctionH::new(vec![PlaceWeight { kind, a }]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generic_sum_over_q_matches_naive(m in -6i64..=6, n in -6i64..=6, c in 1i64..=40) {
        let q = FieldDescriptor::rational();
        let query = KloostermanQuery::trivial(&q, q.int(m), q.int(n), q.int(c));
        let s = kloosterman_sum(&q, &query).unwrap().value;
        prop_assert!((s.re - naive_kloosterman(m, n, c)).abs() < 1e-9);
        prop_assert!(s.im.abs() < 1e-9);
        prop_assert!((s - classical_kloosterman(n, m, c as u64)).norm() < 1e-9);
    }

    #[test]
    fn norm_is_multiplicative((f, x, y) in field().prop_flat_map(|f| (Just(f.clone()), element(&f), element(&f)))) {
        prop_assert_eq!(f.norm(&f.mul(&x, &y)), f.norm(&x) * f.norm(&y));
        prop_assert_eq!(f.conj(&f.conj(&x)), x.clone());
        let ix = FracIdeal::principal(&f, &x);
        let iy = FracIdeal::principal(&f, &y);
        prop_assert_eq!(ix.product(&iy, &f).norm(), ix.norm() * iy.norm());
    }

    #[test]
    fn ideal_keys_round_trip((f, x, y) in field().prop_flat_map(|f| (Just(f.clone()), element(&f), element(&f)))) {
        let ideal = FracIdeal::from_generators(&f, &[x, y]);
        prop_assume!(!ideal.is_zero());
        let back = FracIdeal::parse_key(&ideal.key(), &f).unwrap();
        prop_assert_eq!(back, ideal);
    }

    #[test]
    fn h_is_even_and_real_on_the_unitary_axis(a in 1.0f64..6.0, t in -20.0f64..20.0, p in -3i64..=3) {
        for kind in [PlaceKind::Real, PlaceKind::Complex] {
            let h = one_place(kind, a);
            let p = if kind == PlaceKind::Real { 0 } else { p };
            let nu = Complex64::new(0.0, t);
            let up = h.h_eval(0, nu, p).unwrap();
            let down = h.h_eval(0, -nu, -p).unwrap();
            prop_assert!((up - down).norm() <= 1e-12 * up.norm().max(1e-300));
            prop_assert!(up.im.abs() <= 1e-12 * up.norm().max(1e-300));
            prop_assert!(up.re >= 0.0);
        }
    }

    #[test]
    fn real_kernel_is_even_in_nu(re in -0.45f64..0.45, im in -6.0f64..6.0, z in 0.05f64..30.0) {
        let nu = Complex64::new(re, im);
        let a = kernel_real(nu, z).unwrap();
        let b = kernel_real(-nu, z).unwrap();
        prop_assert!((a.value - b.value).norm() <= 1e-9 * a.value.norm().max(1.0) + a.err + b.err);
    }

    #[test]
    fn complex_kernel_is_even_in_nu_p(im in -4.0f64..4.0, p in -2i64..=2, zr in -6.0f64..6.0, zi in -6.0f64..6.0) {
        prop_assume!(zr.hypot(zi) > 0.05);
        let nu = Complex64::new(0.0, im);
        let z = Complex64::new(zr, zi);
        let a = kernel_complex(nu, p, z).unwrap();
        let b = kernel_complex(-nu, -p, z).unwrap();
        prop_assert!((a.value - b.value).norm() <= 1e-9 * a.value.norm().max(1.0) + a.err + b.err);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn measure_is_linear(a in 1.5f64..4.0, sr in -2.0f64..2.0, si in -2.0f64..2.0, shift in 0.5f64..3.0) {
        for kind in [PlaceKind::Real, PlaceKind::Complex] {
            let h = one_place(kind, a);
            let cfg = MeasureConfig::for_weight(&h, 1e-10).unwrap();
            let s = Complex64::new(sr, si);
            let f = |nu: Complex64, p: i64| Ok(Estimate { value: h.h_eval(0, nu, p)?, err: 0.0 });
            let g = |nu: Complex64, p: i64| Ok(Estimate { value: h.h_eval(0, nu, p)? * (nu * nu + shift).exp(), err: 0.0 });
            let combo = |nu: Complex64, p: i64| Ok(Estimate { value: f(nu, p)?.value * s + g(nu, p)?.value, err: 0.0 });
            let lhs = mu_integrate(kind, &combo, &cfg).unwrap().value;
            let rhs = mu_integrate(kind, &f, &cfg).unwrap().value * s + mu_integrate(kind, &g, &cfg).unwrap().value;
            prop_assert!((lhs - rhs).norm() <= 1e-9 * rhs.norm().max(1.0));
        }
    }

    #[test]
    fn dataset_canonical_form_is_a_fixed_point(
        t in 1.0f64..30.0,
        l2 in -2.0f64..2.0,
        l3 in -2.0f64..2.0,
        rho in any::<bool>(),
        eps in prop_oneof![Just(None), Just(Some(0u8)), Just(Some(1u8))],
    ) {
        let convention = if rho { "rho" } else { "lambda" };
        let eps = match eps {
            Some(e) => format!(", \"eps\": [{e}]"),
            None => String::new(),
        };
        let text = format!(
            "{{\"version\": 1, \"field\": \"Q\", \"forms\": [{{\"nu\": [[0.0, {t}]]{eps}, \"weight\": [{{\"q\": 0}}], \
             \"coeffs\": {{\"1\": [1.0, 0.0], \"2\": [{l2}, 0.0], \"3\": [{l3}, 0.0]}}, \"convention\": \"{convention}\"}}]}}"
        );
        let q = FieldDescriptor::rational();
        let first = parse_dataset(&text, &q, "generated").unwrap();
        prop_assert_eq!(first.records.len(), 1);
        let canonical = canonical_json(&first);
        let second = parse_dataset(&canonical, &q, "generated").unwrap();
        prop_assert_eq!(&second.records, &first.records);
        prop_assert_eq!(canonical_json(&second), canonical);
        let lambda2 = first.records[0].coeffs["2"].re;
        let expected = if rho { l2 * 2f64.sqrt() } else { l2 };
        prop_assert!((lambda2 - expected).abs() <= 1e-15 * expected.abs().max(1.0));
    }
}
