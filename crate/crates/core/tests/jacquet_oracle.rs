use kuznetsov::jacquet::{
    jacquet_closed, jacquet_numeric, phi_eval, ComplexWeight, GrowthCertificate, IwasawaPoint,
};
use num_complex::Complex64;

fn point(y: f64) -> IwasawaPoint {
    let (a, b) = (0.35f64, 0.9f64);
    IwasawaPoint::new(
        Complex64::new(0.15, -0.25),
        y,
        Complex64::from_polar(a.cos(), 0.6),
        Complex64::from_polar(a.sin(), -b),
    )
    .unwrap()
}

#[test]
fn closed_form_and_quadrature_agree() {
    let omega = Complex64::new(1.0, 0.0);
    let mut worst: f64 = 0.0;
    for l in 0..=2i64 {
        for p in -l..=l {
            for q in -l..=l {
                for nu in [1.1, 1.5] {
                    let w = ComplexWeight::new(l, q, Complex64::new(nu, 0.0), p).unwrap();
                    let f = |h: &IwasawaPoint| phi_eval(&w, h);
                    let growth = Some(GrowthCertificate { sigma: nu });
                    for y in [0.3, 1.0, 3.0] {
                        let g = point(y);
                        let closed = jacquet_closed(omega, &w, &g).unwrap();
                        let tol = if y < 2.0 { 1e-5 } else { f64::INFINITY };
                        let num = jacquet_numeric(omega, &f, growth, &g, tol).unwrap();
                        let gap = (num.value - closed).norm();
                        if y < 2.0 {
                            let rel = gap / closed.norm();
                            worst = worst.max(rel);
                            assert!(rel < 1e-5, "(l, p, q, ν, y) = ({l}, {p}, {q}, {nu}, {y}): rel {rel:e}");
                        } else {
                            // e^{−12π} cancellation: only the certified absolute error is attainable
                            assert!(gap <= num.err, "(l, p, q, ν, y) = ({l}, {p}, {q}, {nu}, {y})");
                        }
                    }
                }
            }
        }
    }
    println!("worst relative deviation {worst:e}");
}
