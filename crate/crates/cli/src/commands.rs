use std::path::Path;

use kuznetsov::formula::{geometric_side, residual_report, InstanceSpec, CSC_NOTICE};
use kuznetsov::ingest::{fetch_remote, load_dataset, FetchOptions, RemoteQuery, UreqTransport};
use kuznetsov::jacquet::{whittaker_complex_norm, ComplexWeight};
use kuznetsov::kloosterman::{kloosterman_sum_capped, weil_margin, KloostermanQuery};
use kuznetsov::numberfield::{
    class_number, factor_ideal, minkowski_bound, narrow_class_number, principal_generator, render_rational,
    tp_units_mod_squares, FieldDescriptor, FracIdeal,
};
use kuznetsov::specialfun::{
    bessel_i, bessel_j, bessel_k, gamma, kernel_complex, kernel_real, whittaker_real_norm, whittaker_w, Estimate,
    PlaceKind,
};
use kuznetsov::spectral::{bessel_transform_h, MeasureConfig, PlaceWeight, WeightFunctionH};
use kuznetsov::{Error, Result};
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::verify::{run_verify, Scope, VerifyOptions};
use crate::{Cli, Command, SpecialFunction};

/// Result value, exit status, and an optional notice for stderr.
pub type Dispatched = (Value, i32, Option<String>);

pub fn dispatch(cli: &Cli) -> Result<Dispatched> {
    let pool = match cli.threads {
        Some(0) => return Err(Error::Config("--threads must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    }
    .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    pool.install(|| run_command(cli))
}

fn ok(v: Value) -> Result<Dispatched> {
    Ok((v, 0, None))
}

fn to_value<T: serde::Serialize>(x: &T) -> Result<Value> {
    serde_json::to_value(x).map_err(|e| Error::Internal(format!("serialization: {e}")))
}

fn cj(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn run_command(cli: &Cli) -> Result<Dispatched> {
    match &cli.command {
        Command::Field(a) => field(&a.field),
        Command::Ideal(a) => ideal(&a.field, &a.gens, a.key.as_deref()),
        Command::Kloosterman(a) => {
            let f = FieldDescriptor::parse(&a.field)?;
            let key = |k: &Option<String>| match k {
                Some(k) => FracIdeal::parse_key(k, &f),
                None => Ok(FracIdeal::unit(&f)),
            };
            let query = KloostermanQuery {
                alpha1: f.parse_element(&a.alpha1)?,
                frak_a1: key(&a.frak_a1)?,
                alpha2: f.parse_element(&a.alpha2)?,
                frak_a2: key(&a.frak_a2)?,
                c: f.parse_element(&a.c)?,
                frak_c: key(&a.frak_c)?,
            };
            let sum = kloosterman_sum_capped(&f, &query, a.term_cap)?;
            let weil = weil_margin(&f, &query)?;
            ok(json!({
                "value_re": sum.value.re,
                "value_im": sum.value.im,
                "terms": sum.term_count,
                "weil_cap": weil.weil_cap,
                "field": f,
                "query": query,
                "sum": sum,
                "weil": weil,
            }))
        }
        Command::Specialfun(a) => specialfun(a),
        Command::Verify(a) => {
            let mut opts = VerifyOptions { tolerance: a.tolerance, seed: cli.seed, fault: a.inject_fault, gw_cases: None };
            if let (Some(l), Some(nu)) = (a.l, &a.nu) {
                let w = ComplexWeight::new(l, a.q, parse_complex(nu)?, a.p)?;
                opts.gw_cases = Some(vec![(parse_complex(&a.omega1)?, parse_complex(&a.omega2)?, w)]);
            }
            if let Some(t) = a.tolerance {
                if !(t.is_finite() && t > 0.0) {
                    return Err(Error::Config(format!("--tolerance must be positive, got {t}")));
                }
            }
            let report = run_verify(a.scope.or(a.suite).unwrap_or(Scope::All), &opts);
            let status = if report.passed { 0 } else { 1 };
            let notice = (!report.passed)
                .then(|| format!("verification failed: {}\n", report.failing_identities.join(", ")));
            Ok((to_value(&report)?, status, notice))
        }
        Command::Transform(a) => {
            let points = a
                .z
                .iter()
                .map(|text| text.split(',').map(parse_complex).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?;
            let kinds = place_kinds(a, &points)?;
            if kinds.len() != a.a.len() {
                return Err(Error::Input(format!("--a has {} entries for {} places", a.a.len(), kinds.len())));
            }
            let h = WeightFunctionH::new(kinds.iter().zip(&a.a).map(|(&kind, &a)| PlaceWeight { kind, a }).collect())?;
            let mut cfg = MeasureConfig::for_weight(&h, a.measure_tol)?;
            if let Some(n) = a.nodes {
                cfg.nodes = n;
            }
            cfg.validate(Some(&h))?;
            let mut rows = Vec::new();
            for (text, z) in a.z.iter().zip(&points) {
                if z.len() != kinds.len() {
                    return Err(Error::Input(format!("--z '{text}' has {} coordinates for {} places", z.len(), kinds.len())));
                }
                let est = bessel_transform_h(&h, z, &cfg)?;
                rows.push(json!({
                    "z": z.iter().map(|&x| cj(x)).collect::<Vec<_>>(),
                    "re": est.value.re,
                    "im": est.value.im,
                    "tail": est.err,
                }));
            }
            ok(json!({ "field": a.field, "h": h, "cfg": cfg, "rows": rows }))
        }
        Command::GeometricSide(a) => {
            let spec = read_instance(&a.instance)?;
            let inst = spec.to_instance()?;
            let g = geometric_side(&inst)?;
            let total = g.delta_term + g.ks_term;
            ok(json!({ "instance": spec, "total": cj(total), "geometric": g }))
        }
        Command::Residual(a) => {
            let spec = read_instance(&a.instance)?;
            let inst = spec.to_instance()?;
            let dataset = load_dataset(&a.data, &inst.field)?;
            let family = if a.family.is_empty() {
                vec![inst.h.clone()]
            } else {
                a.family
                    .iter()
                    .map(|t| WeightFunctionH::for_field(&inst.field, &parse_reals(t)?))
                    .collect::<Result<Vec<_>>>()?
            };
            let report = residual_report(&inst, &dataset.records, &family)?;
            let out = json!({
                "instance": spec,
                "dataset": {
                    "path": a.data.display().to_string(),
                    "source": dataset.source,
                    "records": dataset.records.len(),
                    "rejected": dataset.rejected,
                },
                "report": report,
            });
            Ok((out, 0, Some(format!("{CSC_NOTICE}\n"))))
        }
        Command::Fetch(a) => {
            FieldDescriptor::parse(&a.field)?;
            std::fs::create_dir_all(&a.cache_dir)
                .map_err(|e| Error::Io(format!("{}: {e}", a.cache_dir.display())))?;
            let query = RemoteQuery { field: a.field.clone(), level: a.level.clone(), t_min: a.t_min, t_max: a.t_max };
            let opts = FetchOptions { network_allowed: !a.offline, refresh: a.refresh };
            let path = fetch_remote(&UreqTransport::default(), &a.base_url, &query, &a.cache_dir, &opts)?;
            ok(json!({ "url": query.url(&a.base_url), "query": query, "path": path.display().to_string() }))
        }
    }
}

fn place_kinds(a: &crate::TransformArgs, points: &[Vec<Complex64>]) -> Result<Vec<PlaceKind>> {
    if let Some(spec) = &a.field {
        let f = FieldDescriptor::parse(spec)?;
        return Ok((0..f.place_count())
            .map(|j| if f.is_real_place(j) { PlaceKind::Real } else { PlaceKind::Complex })
            .collect());
    }
    if !a.places.is_empty() {
        return a
            .places
            .iter()
            .map(|k| match k.trim() {
                "real" => Ok(PlaceKind::Real),
                "complex" => Ok(PlaceKind::Complex),
                other => Err(Error::Input(format!("place kind '{other}' is neither real nor complex"))),
            })
            .collect();
    }
    let first = points.first().ok_or_else(|| Error::Input("no --z given".into()))?;
    Ok(first.iter().map(|z| if z.im == 0.0 { PlaceKind::Real } else { PlaceKind::Complex }).collect())
}

fn read_instance(path: &Path) -> Result<InstanceSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn field(spec: &str) -> Result<Dispatched> {
    let f = FieldDescriptor::parse(spec)?;
    let units = tp_units_mod_squares(&f);
    ok(json!({
        "field": f,
        "name": f.name(),
        "degree": f.degree(),
        "disc": f.disc(),
        "signature": f.signature(),
        "basis": f.basis_names(),
        "different": f.different().key(),
        "class_number": class_number(&f)?,
        "narrow_class_number": narrow_class_number(&f, &units)?,
        "minkowski_bound": minkowski_bound(&f),
        "units": units,
    }))
}

fn ideal(spec: &str, gens: &[String], key: Option<&str>) -> Result<Dispatched> {
    let f = FieldDescriptor::parse(spec)?;
    let ideal = match key {
        Some(k) => FracIdeal::parse_key(k, &f)?,
        None if gens.is_empty() => return Err(Error::Input("give --gen or --key".into())),
        None => {
            let elems = gens.iter().map(|g| f.parse_element(g)).collect::<Result<Vec<_>>>()?;
            FracIdeal::from_generators(&f, &elems)
        }
    };
    if ideal.is_zero() {
        return ok(json!({ "field": f, "key": ideal.key(), "zero": true }));
    }
    let factorization = if ideal.is_integral() {
        let parts = factor_ideal(&f, &ideal)?;
        Some(
            parts
                .iter()
                .map(|(p, e)| json!({ "prime": p.ideal.key(), "norm": p.norm, "above": p.rational_prime, "exponent": e }))
                .collect::<Vec<_>>(),
        )
    } else {
        None
    };
    ok(json!({
        "field": f,
        "key": ideal.key(),
        "ideal": ideal,
        "norm": render_rational(&ideal.norm()),
        "integral": ideal.is_integral(),
        "generator": principal_generator(&f, &ideal)?,
        "factorization": factorization,
    }))
}

fn est_row(z: Value, e: Estimate) -> Value {
    json!({ "z": z, "re": e.value.re, "im": e.value.im, "est_err": e.err })
}

fn exact_row(z: Value, v: Complex64) -> Value {
    json!({ "z": z, "re": v.re, "im": v.im, "est_err": Value::Null })
}

fn real_arg(text: &str) -> Result<f64> {
    text.trim().parse().map_err(|_| Error::Parse(format!("'{text}' is not a real number")))
}

fn specialfun(a: &crate::SpecialfunArgs) -> Result<Dispatched> {
    let nu = parse_complex(&a.nu)?;
    let k = parse_complex(&a.k)?;
    let mut rows = Vec::with_capacity(a.z.len());
    for text in &a.z {
        let row = match a.function {
            SpecialFunction::KernelReal => {
                let x = real_arg(text)?;
                est_row(json!(x), kernel_real(nu, x)?)
            }
            SpecialFunction::KernelComplex => {
                let z = parse_complex(text)?;
                est_row(cj(z), kernel_complex(nu, a.p, z)?)
            }
            SpecialFunction::BesselK => {
                let x = real_arg(text)?;
                exact_row(json!(x), bessel_k(nu, x)?)
            }
            SpecialFunction::BesselI => {
                let x = real_arg(text)?;
                exact_row(json!(x), bessel_i(nu, x)?)
            }
            SpecialFunction::BesselJ => {
                let x = real_arg(text)?;
                exact_row(json!(x), bessel_j(nu, x)?)
            }
            SpecialFunction::WhittakerW => {
                let y = real_arg(text)?;
                exact_row(json!(y), whittaker_w(k, nu, y)?)
            }
            SpecialFunction::WhittakerReal => {
                let y = real_arg(text)?;
                exact_row(json!(y), whittaker_real_norm(a.q, nu, y)?)
            }
            SpecialFunction::WhittakerComplex => {
                let y = parse_complex(text)?;
                exact_row(cj(y), whittaker_complex_norm(a.l, a.q, nu, a.p, y)?)
            }
            SpecialFunction::Gamma => {
                let z = parse_complex(text)?;
                exact_row(cj(z), gamma(z))
            }
        };
        rows.push(row);
    }
    ok(json!({
        "function": a.function,
        "nu": cj(nu),
        "k": cj(k),
        "p": a.p,
        "q": a.q,
        "l": a.l,
        "rows": rows,
    }))
}

fn parse_reals(text: &str) -> Result<Vec<f64>> {
    text.split(',').map(real_arg).collect()
}

/// Parses "x", "yi", "i", "-i", "x+yi" and "x-yi", with exponents allowed.
pub fn parse_complex(text: &str) -> Result<Complex64> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Error::Parse(format!("'{text}' is not a complex number"));
    let num = |t: &str| -> Result<f64> {
        match t {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => t.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(bad),
        }
    };
    if s.is_empty() {
        return Err(bad());
    }
    let Some(body) = s.strip_suffix('i') else {
        let x: f64 = s.parse().map_err(|_| bad())?;
        return if x.is_finite() { Ok(Complex64::new(x, 0.0)) } else { Err(bad()) };
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| matches!(bytes[i], b'+' | b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    match split {
        Some(i) => {
            let re: f64 = body[..i].parse().map_err(|_| bad())?;
            Ok(Complex64::new(re, num(&body[i..])?))
        }
        None => Ok(Complex64::new(0.0, num(body)?)),
    }
}
