use std::fmt;

use kuznetsov::formula::{delta_term, kloosterman_term, FormulaInstance};
use kuznetsov::jacquet::{
    complex_whittaker_norm_integral, torus_norm_closed, torus_norm_quadrature, verify_gw_identities,
    ComplexWeight, Identity, IwasawaPoint,
};
use kuznetsov::kloosterman::{
    classical_kloosterman, weil_cap, KloostermanModulus, KloostermanQuery, DEFAULT_TERM_CAP,
};
use kuznetsov::numberfield::{integral_ideals_of_norm, principal_generator, FieldDescriptor, FracIdeal};
use kuznetsov::specialfun::{kernel_complex, kernel_real, whittaker_real_norm_integral, Estimate, PlaceKind};
use kuznetsov::spectral::{bessel_transform_h, h_mass, mu_integrate, MeasureConfig, PlaceWeight, WeightFunctionH};
use kuznetsov::{Error, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    Whittaker,
    Gw,
    Kloosterman,
    Kernels,
    Measure,
    All,
}

impl Scope {
    pub const SUITES: [Scope; 5] = [Scope::Whittaker, Scope::Gw, Scope::Kloosterman, Scope::Kernels, Scope::Measure];

    pub fn name(self) -> &'static str {
        match self {
            Scope::Whittaker => "whittaker",
            Scope::Gw => "gw",
            Scope::Kloosterman => "kloosterman",
            Scope::Kernels => "kernels",
            Scope::Measure => "measure",
            Scope::All => "all",
        }
    }

    fn suites(self) -> Vec<Scope> {
        match self {
            Scope::All => Self::SUITES.to_vec(),
            s => vec![s],
        }
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Deliberate defects for exercising the harness itself.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fault {
    /// kernel_real returns −K for Im ν < 0.
    KernelRealSign,
}

#[derive(Clone, Debug, Default)]
pub struct VerifyOptions {
    /// Replaces every check's own tolerance.
    pub tolerance: Option<f64>,
    pub seed: u64,
    pub fault: Option<Fault>,
    /// Replaces the gw suite's sample of weights and frequencies.
    pub gw_cases: Option<Vec<(Complex64, Complex64, ComplexWeight)>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub identity: String,
    pub parameters: Value,
    /// Number of evaluated cases folded into this check.
    pub cases: usize,
    /// Worst observed deviation; null when a computation failed.
    pub deviation: Option<f64>,
    pub tolerance: f64,
    /// Deviation allowed: the tolerance, plus the declared error budget for
    /// stability checks.
    pub allowance: f64,
    pub passed: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteSummary {
    pub suite: &'static str,
    pub checks: usize,
    pub cases: usize,
    pub failed: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub scope: Scope,
    pub tolerance_override: Option<f64>,
    pub seed: u64,
    pub fault: Option<Fault>,
    pub passed: bool,
    pub failing_identities: Vec<String>,
    pub suites: Vec<SuiteSummary>,
    pub checks: Vec<Check>,
}

struct Suite<'a> {
    name: &'static str,
    opts: &'a VerifyOptions,
    checks: Vec<Check>,
}

impl<'a> Suite<'a> {
    fn new(name: &'static str, opts: &'a VerifyOptions) -> Self {
        Suite { name, opts, checks: Vec::new() }
    }

    fn tol(&self, default: f64) -> f64 {
        self.opts.tolerance.unwrap_or(default)
    }

    fn record(&mut self, identity: &str, parameters: Value, cases: usize, outcome: Result<f64>, tolerance: f64, budget: f64) {
        let allowance = tolerance + budget;
        let (deviation, error) = match outcome {
            Ok(d) => (Some(d), None),
            Err(e) => (None, Some(e.to_string())),
        };
        let passed = matches!(deviation, Some(d) if d.is_finite() && d <= allowance);
        self.checks.push(Check {
            suite: self.name,
            identity: identity.to_string(),
            parameters,
            cases,
            deviation,
            tolerance,
            allowance,
            passed,
            error,
        });
    }

    fn check(&mut self, identity: &str, parameters: Value, cases: usize, outcome: Result<f64>, default_tol: f64) {
        let tol = self.tol(default_tol);
        self.record(identity, parameters, cases, outcome, tol, 0.0);
    }
}

/// Worst case over a sample: (deviation, parameters of the worst case).
#[derive(Default)]
struct Worst {
    deviation: f64,
    parameters: Value,
    cases: usize,
    error: Option<Error>,
}

impl Worst {
    fn push(&mut self, outcome: Result<f64>, parameters: impl FnOnce() -> Value) {
        self.cases += 1;
        match outcome {
            Ok(d) if !(d <= self.deviation) => {
                self.deviation = d;
                self.parameters = parameters();
            }
            Ok(_) => {}
            Err(e) => {
                if self.error.is_none() {
                    self.parameters = parameters();
                    self.error = Some(e);
                }
            }
        }
    }

    fn finish(self, suite: &mut Suite<'_>, identity: &str, default_tol: f64) {
        let outcome = match self.error {
            Some(e) => Err(e),
            None => Ok(self.deviation),
        };
        let parameters = json!({ "worst": self.parameters });
        suite.check(identity, parameters, self.cases, outcome, default_tol);
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn cjson(z: Complex64) -> Value {
    json!([z.re, z.im])
}

pub fn run_verify(scope: Scope, opts: &VerifyOptions) -> VerifyReport {
    let mut checks = Vec::new();
    let mut suites = Vec::new();
    for s in scope.suites() {
        let found = match s {
            Scope::Whittaker => whittaker_suite(opts),
            Scope::Gw => gw_suite(opts),
            Scope::Kloosterman => kloosterman_suite(opts),
            Scope::Kernels => kernels_suite(opts),
            Scope::Measure => measure_suite(opts),
            Scope::All => unreachable!("expanded above"),
        };
        suites.push(SuiteSummary {
            suite: s.name(),
            checks: found.len(),
            cases: found.iter().map(|c| c.cases).sum(),
            failed: found.iter().filter(|c| !c.passed).count(),
        });
        checks.extend(found);
    }
    let mut failing_identities: Vec<String> = Vec::new();
    for ch in checks.iter().filter(|c| !c.passed) {
        if !failing_identities.contains(&ch.identity) {
            failing_identities.push(ch.identity.clone());
        }
    }
    VerifyReport {
        scope,
        tolerance_override: opts.tolerance,
        seed: opts.seed,
        fault: opts.fault,
        passed: failing_identities.is_empty(),
        failing_identities,
        suites,
        checks,
    }
}

pub fn real_norm_cases() -> Vec<(i64, Complex64)> {
    vec![
        (0, c(0.0, 1.0)),
        (2, c(0.0, 2.5)),
        (-4, c(0.0, 0.7)),
        (0, c(0.25, 0.0)),
        (2, c(0.4, 0.0)),
        (-2, c(0.1, 0.0)),
        (2, c(0.5, 0.0)),
        (-4, c(1.5, 0.0)),
        (6, c(2.5, 0.0)),
    ]
}

/// (l, q, ν, p) with l ≤ 2, |p|, |q| ≤ l, ν ∈ {i, 2i, 0.3}; the
/// complementary value 0.3 is unitary only with p = 0.
pub fn complex_norm_cases() -> Vec<(i64, i64, Complex64, i64)> {
    let mut out = Vec::new();
    for l in 0..=2i64 {
        for p in -l..=l {
            for q in -l..=l {
                for nu in [c(0.0, 1.0), c(0.0, 2.0), c(0.3, 0.0)] {
                    if nu.re != 0.0 && p != 0 {
                        continue;
                    }
                    out.push((l, q, nu, p));
                }
            }
        }
    }
    out
}

fn whittaker_suite(opts: &VerifyOptions) -> Vec<Check> {
    let mut suite = Suite::new("whittaker", opts);
    for (q, nu) in real_norm_cases() {
        let outcome = whittaker_real_norm_integral(q, nu).map(|n| (n - 1.0).abs());
        suite.check("real whittaker norm", json!({ "q": q, "nu": cjson(nu) }), 1, outcome, 1e-6);
    }
    let cases = complex_norm_cases();
    let norms: Vec<Result<f64>> = cases
        .par_iter()
        .map(|&(l, q, nu, p)| complex_whittaker_norm_integral(l, q, nu, p).map(|n| (n - 1.0).abs()))
        .collect();
    let torus: Vec<Result<f64>> = cases
        .par_iter()
        .map(|&(l, q, nu, p)| {
            let closed = torus_norm_closed(l, q, nu, p)?;
            let quad = torus_norm_quadrature(l, q, nu, p)?;
            Ok((quad - closed).abs() / closed.abs())
        })
        .collect();
    for (&(l, q, nu, p), outcome) in cases.iter().zip(norms) {
        let params = json!({ "l": l, "q": q, "nu": cjson(nu), "p": p });
        suite.check("complex whittaker norm", params, 1, outcome, 1e-6);
    }
    for (&(l, q, nu, p), outcome) in cases.iter().zip(torus) {
        let params = json!({ "l": l, "q": q, "nu": cjson(nu), "p": p });
        suite.check("torus norm closed form", params, 1, outcome, 1e-6);
    }
    suite.checks
}

pub fn gw_points() -> Vec<IwasawaPoint> {
    let k = |theta: f64, phase_a: f64, phase_b: f64| {
        (Complex64::from_polar(theta.cos(), phase_a), Complex64::from_polar(theta.sin(), phase_b))
    };
    let (a1, b1) = k(0.8, 0.2, 1.0);
    let (a2, b2) = k(0.4, 0.3, -1.1);
    let (a3, b3) = k(0.35, 0.6, -0.9);
    vec![
        IwasawaPoint::new(c(0.0, 0.0), 1.0, a1, b1).expect("unit K-component"),
        IwasawaPoint::new(c(0.1, 0.2), 0.7, a2, b2).expect("unit K-component"),
        IwasawaPoint::new(c(0.15, -0.25), 1.1, a3, b3).expect("unit K-component"),
    ]
}

/// Zero-frequency identity at (0, ½) and Bessel identity at (½, ½), for
/// l ≤ 1, |p|, |q| ≤ l and ν ∈ {1.2, 1.4}.
pub fn gw_cases() -> Vec<(Complex64, Complex64, ComplexWeight)> {
    let mut out = Vec::new();
    for l in 0..=1i64 {
        for p in -l..=l {
            for q in -l..=l {
                for nu in [1.2, 1.4] {
                    let w = ComplexWeight::new(l, q, c(nu, 0.0), p).expect("valid weight");
                    out.push((c(0.0, 0.0), c(0.5, 0.0), w));
                    out.push((c(0.5, 0.0), c(0.5, 0.0), w));
                }
            }
        }
    }
    out
}

fn gw_suite(opts: &VerifyOptions) -> Vec<Check> {
    let mut suite = Suite::new("gw", opts);
    let points = gw_points();
    let cases = opts.gw_cases.clone().unwrap_or_else(gw_cases);
    let reports: Vec<_> = cases
        .par_iter()
        .map(|(o1, o2, w)| verify_gw_identities(*o1, *o2, w, &points))
        .collect();
    for ((o1, o2, w), report) in cases.iter().zip(reports) {
        let identity = if o1.norm() == 0.0 { "gw zero frequency" } else { "gw bessel" };
        let base = json!({
            "l": w.l, "q": w.q, "p": w.p, "nu": cjson(w.nu),
            "omega1": cjson(*o1), "omega2": cjson(*o2),
        });
        match report {
            Ok(r) => {
                let expected = if o1.norm() == 0.0 { Identity::ZeroFrequency } else { Identity::Bessel };
                debug_assert_eq!(r.identity, expected);
                for (i, e) in r.entries.iter().enumerate() {
                    let mut params = base.clone();
                    params["point"] = json!(i);
                    params["quadrature_err"] = json!(e.quadrature_err);
                    suite.check(identity, params, 1, Ok(e.rel_deviation), 1e-4);
                }
            }
            Err(e) => suite.check(identity, base, points.len(), Err(e), 1e-4),
        }
    }
    suite.checks
}

fn kloosterman_suite(opts: &VerifyOptions) -> Vec<Check> {
    let mut suite = Suite::new("kloosterman", opts);
    let q = FieldDescriptor::rational();
    let o = FracIdeal::unit(&q);
    let rows: Vec<_> = (1..=100u64)
        .into_par_iter()
        .map(|modulus| {
            let run = || -> Result<(f64, f64, usize)> {
                let m = KloostermanModulus::new(&q, &o, &q.int(modulus as i64), &o, DEFAULT_TERM_CAP)?;
                let mut worst: f64 = 0.0;
                let mut weil: f64 = 0.0;
                let mut nondegenerate = 0;
                for a in -5..=5i64 {
                    for b in -5..=5i64 {
                        let s = m.evaluate(&q.int(a), &q.int(b))?;
                        worst = worst.max((s - classical_kloosterman(a, b, modulus)).norm());
                        if a != 0 && b != 0 {
                            let query = KloostermanQuery::trivial(&q, q.int(a), q.int(b), q.int(modulus as i64));
                            let cap = weil_cap(&q, &query)?;
                            weil = weil.max((s.norm() - cap) / cap);
                            nondegenerate += 1;
                        }
                    }
                }
                Ok((worst, weil.max(0.0), nondegenerate))
            };
            (modulus, run())
        })
        .collect();
    for (modulus, row) in rows {
        let params = json!({ "c": modulus, "m": [-5, 5], "n": [-5, 5] });
        match row {
            Ok((equiv, weil, nondegenerate)) => {
                suite.check("kloosterman classical equivalence", params.clone(), 121, Ok(equiv), 1e-9);
                suite.check("weil bound", params, nondegenerate, Ok(weil), 1e-9);
            }
            Err(e) => {
                let msg = e.to_string();
                suite.check("kloosterman classical equivalence", params.clone(), 121, Err(e), 1e-9);
                suite.check("weil bound", params, 100, Err(Error::Internal(msg)), 1e-9);
            }
        }
    }
    for d in [-1, 2] {
        quadratic_sanity(&mut suite, d);
    }
    suite.checks
}

/// Representative independence and conjugation symmetry of the sums over
/// ℚ(√d) for all principal moduli of norm ≤ 40.
fn quadratic_sanity(suite: &mut Suite<'_>, d: i64) {
    let f = FieldDescriptor::quadratic(d).expect("squarefree");
    let o = FracIdeal::unit(&f);
    let dinv = f.different_inverse().z_basis();
    let alpha1 = dinv[1].clone();
    let alpha2 = &dinv[0] + &dinv[1];
    let mut moduli = Vec::new();
    for n in 1..=40u64 {
        for ideal in integral_ideals_of_norm(&f, n) {
            if let Ok(Some(g)) = principal_generator(&f, &ideal) {
                moduli.push((n, ideal.key(), g));
            }
        }
    }
    let seed = suite.opts.seed;
    let rows: Vec<_> = moduli
        .par_iter()
        .enumerate()
        .map(|(i, (_, _, g))| {
            let run = || -> Result<(f64, f64, f64)> {
                let m = KloostermanModulus::new(&f, &o, g, &o, DEFAULT_TERM_CAP)?;
                let base = m.evaluate(&alpha1, &alpha2)?;
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((d as u64) << 32) ^ i as u64);
                let mut spread: f64 = 0.0;
                for _ in 0..10 {
                    let v = m.evaluate_shuffled(&alpha1, &alpha2, &mut rng)?;
                    spread = spread.max((v - base).norm());
                }
                let conj = KloostermanModulus::new(&f, &o, &f.conj(g), &o, DEFAULT_TERM_CAP)?;
                let galois = (conj.evaluate(&f.conj(&alpha1), &f.conj(&alpha2))? - base).norm();
                let negated = m.evaluate(&-&alpha1, &-&alpha2)?;
                let complex = (negated - base.conj()).norm();
                Ok((spread, galois, complex))
            };
            run()
        })
        .collect();
    let field = f.name();
    for ((n, key, g), row) in moduli.iter().zip(rows) {
        let params = json!({ "field": field, "c": g, "norm": n, "ideal": key });
        match row {
            Ok((spread, galois, complex)) => {
                suite.check("kloosterman representative independence", params.clone(), 10, Ok(spread), 1e-10);
                suite.check("kloosterman galois conjugation", params.clone(), 1, Ok(galois), 1e-10);
                suite.check("kloosterman complex conjugation", params, 1, Ok(complex), 1e-10);
            }
            Err(e) => suite.check("kloosterman representative independence", params, 10, Err(e), 1e-10),
        }
    }
}

fn kernel_real_checked(nu: Complex64, z: f64, fault: Option<Fault>) -> Result<Estimate> {
    let mut v = kernel_real(nu, z)?;
    if fault == Some(Fault::KernelRealSign) && nu.im < 0.0 {
        v.value = -v.value;
    }
    Ok(v)
}

fn relative(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / a.norm().max(1.0)
}

fn kernels_suite(opts: &VerifyOptions) -> Vec<Check> {
    let mut suite = Suite::new("kernels", opts);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let fault = opts.fault;

    let mut symmetry = Worst::default();
    let mut reality = Worst::default();
    for _ in 0..60 {
        let nu = if rng.random_bool(0.7) {
            c(0.0, rng.random_range(0.01..8.0))
        } else {
            c(rng.random_range(0.01..0.49), 0.0)
        };
        let z = rng.random_range(0.01..15.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let params = || json!({ "nu": cjson(nu), "z": z });
        let pair = kernel_real_checked(nu, z, fault).and_then(|a| Ok((a, kernel_real_checked(-nu, z, fault)?)));
        match pair {
            Ok((a, b)) => {
                symmetry.push(Ok(relative(a.value, b.value)), params);
                reality.push(Ok(a.value.im.abs() / a.value.norm().max(1.0)), params);
            }
            Err(e) => {
                let msg = e.to_string();
                symmetry.push(Err(e), params);
                reality.push(Err(Error::Internal(msg)), params);
            }
        }
    }
    symmetry.finish(&mut suite, "kernel symmetry", 1e-9);
    reality.finish(&mut suite, "kernel reality", 1e-9);

    let mut symmetry = Worst::default();
    let mut branch = Worst::default();
    for _ in 0..60 {
        let nu = c(0.0, rng.random_range(-4.0..4.0));
        let p = rng.random_range(-3..=3i64);
        let z = c(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let params = || json!({ "nu": cjson(nu), "p": p, "z": cjson(z) });
        let run = || -> Result<(f64, f64)> {
            let a = kernel_complex(nu, p, z)?.value;
            let b = kernel_complex(-nu, -p, z)?.value;
            let r = kernel_complex(nu, p, -z)?.value;
            Ok((relative(a, b), relative(a, r)))
        };
        match run() {
            Ok((s, b)) => {
                symmetry.push(Ok(s), params);
                branch.push(Ok(b), params);
            }
            Err(e) => {
                let msg = e.to_string();
                symmetry.push(Err(e), params);
                branch.push(Err(Error::Internal(msg)), params);
            }
        }
    }
    symmetry.finish(&mut suite, "complex kernel symmetry", 1e-9);
    branch.finish(&mut suite, "complex kernel root branch", 1e-9);

    let mut reality = Worst::default();
    for t in [0.3, 1.0, 2.5] {
        for x in [0.2, 1.0, 3.0] {
            let outcome = kernel_complex(c(0.0, t), 0, c(x, 0.0)).map(|v| v.value.im.abs() / v.value.norm().max(1.0));
            reality.push(outcome, || json!({ "nu": cjson(c(0.0, t)), "p": 0, "z": x }));
        }
    }
    reality.finish(&mut suite, "complex kernel reality", 1e-9);

    let mut symmetry = Worst::default();
    let mut positivity = Worst::default();
    for _ in 0..200 {
        let a = rng.random_range(1.01..6.0);
        let nu = if rng.random_bool(0.5) {
            c(0.0, rng.random_range(-10.0..10.0))
        } else {
            c(rng.random_range(-0.49..0.49), 0.0)
        };
        let p = rng.random_range(-6..=6i64);
        for kind in [PlaceKind::Real, PlaceKind::Complex] {
            let pp = if kind == PlaceKind::Real { 0 } else { p };
            let params = || json!({ "kind": kind, "a": a, "nu": cjson(nu), "p": pp });
            let run = || -> Result<(f64, f64)> {
                let h = WeightFunctionH::new(vec![PlaceWeight { kind, a }])?;
                let x = h.h_eval(0, nu, pp)?;
                let y = h.h_eval(0, -nu, -pp)?;
                Ok(((x - y).norm(), x.im.abs() + (-x.re).max(0.0)))
            };
            match run() {
                Ok((s, r)) => {
                    symmetry.push(Ok(s), params);
                    positivity.push(Ok(r), params);
                }
                Err(e) => {
                    let msg = e.to_string();
                    symmetry.push(Err(e), params);
                    positivity.push(Err(Error::Internal(msg)), params);
                }
            }
        }
    }
    symmetry.finish(&mut suite, "h symmetry", 1e-9);
    positivity.finish(&mut suite, "h reality and positivity", 1e-9);
    suite.checks
}

fn one_place(kind: PlaceKind, a: f64) -> WeightFunctionH {
    WeightFunctionH::new(vec![PlaceWeight { kind, a }]).expect("a > 1")
}

/// The instances exercised by the formula module's own tests.
pub fn formula_instances() -> Result<Vec<(String, FormulaInstance)>> {
    let mut out = vec![
        ("Q m=1 n=1 level 1".to_string(), FormulaInstance::rational(1, 1, 1, 2.0, 50)?),
        ("Q m=2 n=3 level 1".to_string(), FormulaInstance::rational(2, 3, 1, 2.0, 20)?),
        ("Q m=1 n=1 level 3".to_string(), FormulaInstance::rational(1, 1, 3, 2.0, 30)?),
        ("Q m=1 n=2 level 1".to_string(), FormulaInstance::rational(1, 2, 1, 2.0, 20)?),
    ];
    for (d, a) in [(-1, vec![2.0]), (2, vec![2.0, 2.0])] {
        let f = FieldDescriptor::quadratic(d)?;
        let h = WeightFunctionH::for_field(&f, &a)?;
        let cfg = MeasureConfig::for_weight(&h, 1e-10)?;
        let o = FracIdeal::unit(&f);
        let level = f.different();
        let inst = FormulaInstance::new(f.clone(), o.clone(), o, f.one(), f.one(), level, h, cfg, 40)?;
        out.push((format!("{} level different", f.name()), inst));
    }
    Ok(out)
}

fn measure_suite(opts: &VerifyOptions) -> Vec<Check> {
    let mut suite = Suite::new("measure", opts);

    for kind in [PlaceKind::Real, PlaceKind::Complex] {
        let h = one_place(kind, 2.5);
        let run = || -> Result<f64> {
            let cfg = MeasureConfig::for_weight(&h, 1e-12)?;
            let f = |nu: Complex64, p: i64| Ok(Estimate { value: h.h_eval(0, nu, p)?, err: 0.0 });
            let g = |nu: Complex64, p: i64| Ok(Estimate { value: h.h_eval(0, nu, p)? * (nu * nu + 2.0).exp(), err: 0.0 });
            let (s, t) = (c(0.7, -1.2), c(-2.0, 0.4));
            let combo = |nu: Complex64, p: i64| Ok(Estimate { value: f(nu, p)?.value * s + g(nu, p)?.value * t, err: 0.0 });
            let lhs = mu_integrate(kind, &combo, &cfg)?.value;
            let rhs = mu_integrate(kind, &f, &cfg)?.value * s + mu_integrate(kind, &g, &cfg)?.value * t;
            Ok((lhs - rhs).norm() / rhs.norm().max(1.0))
        };
        suite.check("measure linearity", json!({ "kind": kind, "a": 2.5 }), 1, run(), 1e-9);
    }

    for (kind, a) in [(PlaceKind::Real, 2.0), (PlaceKind::Complex, 3.0)] {
        let h = one_place(kind, a);
        let cfg = match MeasureConfig::for_weight(&h, 1e-12) {
            Ok(cfg) => cfg,
            Err(e) => {
                suite.check("mass node doubling", json!({ "kind": kind, "a": a }), 1, Err(e), 1e-9);
                continue;
            }
        };
        for (identity, refined) in [("mass node doubling", cfg.doubled_nodes()), ("mass cap doubling", cfg.doubled_cap())] {
            let params = json!({ "kind": kind, "a": a, "cfg": cfg, "refined": refined });
            match (h_mass(&h, &cfg), h_mass(&h, &refined)) {
                (Ok(x), Ok(y)) => stability(&mut suite, identity, params, x, y, 0.0),
                (Err(e), _) | (_, Err(e)) => suite.check(identity, params, 1, Err(e), 1e-9),
            }
        }
        for z in [c(0.05, 0.0), c(1.3, 0.0), c(0.8, -0.6), c(4.0, 2.0)] {
            let z = if kind == PlaceKind::Real { c(z.norm(), 0.0) } else { z };
            for (identity, refined) in [
                ("transform node doubling", cfg.doubled_nodes()),
                ("transform cap doubling", cfg.doubled_cap()),
            ] {
                let params = json!({ "kind": kind, "a": a, "z": cjson(z) });
                match (bessel_transform_h(&h, &[z], &cfg), bessel_transform_h(&h, &[z], &refined)) {
                    (Ok(x), Ok(y)) => stability(&mut suite, identity, params, x, y, 0.0),
                    (Err(e), _) | (_, Err(e)) => suite.check(identity, params, 1, Err(e), 1e-9),
                }
            }
        }
    }

    let instances = match formula_instances() {
        Ok(v) => v,
        Err(e) => {
            suite.check("formula instances", Value::Null, 0, Err(e), 1e-9);
            return suite.checks;
        }
    };
    for (label, inst) in instances {
        formula_stability(&mut suite, &label, &inst);
    }
    suite.checks
}

/// |x − y| against the declared errors of both estimates plus `extra`.
fn stability(suite: &mut Suite<'_>, identity: &str, params: Value, x: Estimate, y: Estimate, extra: f64) {
    let gap = (x.value - y.value).norm();
    let tol = suite.tol(1e-9) * y.value.norm().max(f64::MIN_POSITIVE);
    suite.record(identity, params, 1, Ok(gap), tol, x.err + y.err + extra);
}

fn formula_stability(suite: &mut Suite<'_>, label: &str, inst: &FormulaInstance) {
    let base = match kloosterman_term(inst) {
        Ok(g) => g,
        Err(e) => {
            suite.check("geometric side", json!({ "instance": label }), 1, Err(e), 1e-9);
            return;
        }
    };
    let finite = delta_term(inst).map(|d| if (d + base.ks_term).norm().is_finite() { 0.0 } else { f64::INFINITY });
    suite.check("geometric side finite", json!({ "instance": label }), 1, finite, 0.0);
    let as_estimate = |g: &kuznetsov::formula::GeometricResult| Estimate { value: g.ks_term, err: g.quadrature_err };
    let variants = [
        ("geometric node doubling", FormulaInstance { cfg: inst.cfg.doubled_nodes(), ..inst.clone() }, 0.0),
        ("geometric measure cap doubling", FormulaInstance { cfg: inst.cfg.doubled_cap(), ..inst.clone() }, 0.0),
        ("geometric modulus cap doubling", inst.with_cap(2 * inst.c_norm_cap), base.tail_bound),
    ];
    for (identity, variant, extra) in variants {
        let params = json!({
            "instance": label,
            "c_norm_cap": variant.c_norm_cap,
            "cfg": variant.cfg,
            "tail_bound": base.tail_bound,
            "tail_complete": base.tail_complete,
        });
        match kloosterman_term(&variant) {
            Ok(g) => stability(suite, identity, params, as_estimate(&base), as_estimate(&g), extra),
            Err(e) => suite.check(identity, params, 1, Err(e), 1e-9),
        }
    }
}
