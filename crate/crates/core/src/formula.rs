use std::collections::BTreeMap;

use num_complex::Complex64;
use num_traits::Signed;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::MaassFormRecord;
use crate::kloosterman::{check_query, weil_cap, KloostermanModulus, KloostermanQuery, DEFAULT_TERM_CAP};
use crate::numberfield::{
    integral_ideals_of_norm, k_index, narrow_class_reps, principal_generator, ratio_to_f64,
    tp_units_mod_squares, ClassRep, FieldDescriptor, FieldElement, FracIdeal, UnitData,
};
use crate::specialfun::{PlaceKind, SpectralParam, WeightSpec};
use crate::spectral::{bessel_transform_h, h_mass, MeasureConfig, WeightFunctionH};

/// Per-embedding truncation ratio R: an element c is summed only when
/// |σ_j(c)| ≥ ‖c‖^{1/deg}/R at every place.
pub const EMBEDDING_RATIO: f64 = 1e4;
pub const DEFAULT_MEASURE_TOL: f64 = 1e-12;
/// The discarded shell is enumerated exactly up to this multiple of the cap.
const SHELL_FACTOR: u64 = 8;
const MAX_TAIL_RATIO: f64 = 0.95;

pub const CSC_NOTICE: &str = "continuous-spectrum contribution omitted: the spectral side is the cuspidal sum only, \
so residuals include the full Eisenstein contribution";

#[derive(Clone, Debug, Serialize)]
pub struct FormulaInstance {
    pub field: FieldDescriptor,
    pub frak_a: FracIdeal,
    pub frak_a_prime: FracIdeal,
    pub alpha: FieldElement,
    pub alpha_prime: FieldElement,
    /// Level, an integral ideal.
    pub frak_c: FracIdeal,
    pub h: WeightFunctionH,
    pub cfg: MeasureConfig,
    pub c_norm_cap: u64,
    pub const_delta: f64,
    pub const_ks: f64,
}

/// Text form of an instance, as read from configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub field: String,
    #[serde(default = "unit_key")]
    pub frak_a: String,
    #[serde(default = "unit_key")]
    pub frak_a_prime: String,
    pub alpha: String,
    pub alpha_prime: String,
    #[serde(default = "unit_key")]
    pub level: String,
    /// One weight parameter per archimedean place.
    pub a: Vec<f64>,
    pub c_norm_cap: u64,
    #[serde(default = "default_tol")]
    pub measure_tol: f64,
    #[serde(default)]
    pub nodes: Option<usize>,
    #[serde(default = "one")]
    pub const_delta: f64,
    #[serde(default = "one")]
    pub const_ks: f64,
}

fn unit_key() -> String {
    "1".into()
}

fn default_tol() -> f64 {
    DEFAULT_MEASURE_TOL
}

fn one() -> f64 {
    1.0
}

fn unit_ideal_key(field: &FieldDescriptor, key: &str) -> Result<FracIdeal> {
    if key == "1" {
        Ok(FracIdeal::unit(field))
    } else {
        FracIdeal::parse_key(key, field)
    }
}

impl InstanceSpec {
    pub fn to_instance(&self) -> Result<FormulaInstance> {
        let field = FieldDescriptor::parse(&self.field)?;
        let h = WeightFunctionH::for_field(&field, &self.a)?;
        let mut cfg = MeasureConfig::for_weight(&h, self.measure_tol)?;
        if let Some(n) = self.nodes {
            cfg.nodes = n;
        }
        FormulaInstance::new(
            field.clone(),
            unit_ideal_key(&field, &self.frak_a)?,
            unit_ideal_key(&field, &self.frak_a_prime)?,
            field.parse_element(&self.alpha)?,
            field.parse_element(&self.alpha_prime)?,
            unit_ideal_key(&field, &self.level)?,
            h,
            cfg,
            self.c_norm_cap,
        )
        .map(|inst| FormulaInstance { const_delta: self.const_delta, const_ks: self.const_ks, ..inst })
    }
}

fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

impl FormulaInstance {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        field: FieldDescriptor,
        frak_a: FracIdeal,
        frak_a_prime: FracIdeal,
        alpha: FieldElement,
        alpha_prime: FieldElement,
        frak_c: FracIdeal,
        h: WeightFunctionH,
        cfg: MeasureConfig,
        c_norm_cap: u64,
    ) -> Result<Self> {
        let inst = FormulaInstance {
            field,
            frak_a,
            frak_a_prime,
            alpha,
            alpha_prime,
            frak_c,
            h,
            cfg,
            c_norm_cap,
            const_delta: 1.0,
            const_ks: 1.0,
        };
        inst.validate()?;
        Ok(inst)
    }

    /// Instance over ℚ with trivial ideals, frequencies m and n, level N and a
    /// single weight parameter.
    pub fn rational(m: i64, n: i64, level: i64, a: f64, c_norm_cap: u64) -> Result<Self> {
        let f = FieldDescriptor::rational();
        let h = WeightFunctionH::for_field(&f, &[a])?;
        let cfg = MeasureConfig::for_weight(&h, DEFAULT_MEASURE_TOL)?;
        let level = FracIdeal::principal(&f, &f.int(level));
        let o = FracIdeal::unit(&f);
        FormulaInstance::new(f.clone(), o.clone(), o, f.int(m), f.int(n), level, h, cfg, c_norm_cap)
    }

    pub fn validate(&self) -> Result<()> {
        let f = &self.field;
        if self.frak_a.is_zero() || self.frak_a_prime.is_zero() {
            return config("𝔞 and 𝔞′ must be nonzero");
        }
        if self.frak_c.is_zero() || !self.frak_c.is_integral() {
            return config("the level must be a nonzero integral ideal");
        }
        let dinv = f.different_inverse();
        if !self.frak_a.product(&dinv, f).contains(&self.alpha) {
            return config("α ∉ 𝔞𝔡⁻¹");
        }
        if !self.frak_a_prime.product(&dinv, f).contains(&self.alpha_prime) {
            return config("α′ ∉ 𝔞′𝔡⁻¹");
        }
        if !f.is_totally_positive(&f.mul(&self.alpha, &self.alpha_prime)) {
            return config("αα′ is not totally positive");
        }
        if self.h.per_place.len() != f.place_count() {
            return config(format!("weight function has {} places, field has {}", self.h.per_place.len(), f.place_count()));
        }
        for (j, w) in self.h.per_place.iter().enumerate() {
            let kind = if f.is_real_place(j) { PlaceKind::Real } else { PlaceKind::Complex };
            if w.kind != kind {
                return config(format!("weight function place {j} has the wrong kind"));
            }
        }
        if self.c_norm_cap == 0 {
            return config("c_norm_cap must be positive");
        }
        self.cfg.validate(Some(&self.h)).map_err(|e| Error::Config(e.to_string()))?;
        if !self.const_delta.is_finite() || !self.const_ks.is_finite() {
            return config("calibration constants must be finite");
        }
        Ok(())
    }

    pub fn with_cap(&self, c_norm_cap: u64) -> Self {
        FormulaInstance { c_norm_cap, ..self.clone() }
    }

    /// Replaces h, refitting the measure truncation to it.
    pub fn with_weight(&self, h: WeightFunctionH) -> Result<Self> {
        let mut cfg = MeasureConfig::for_weight(&h, DEFAULT_MEASURE_TOL)?;
        cfg.nodes = cfg.nodes.max(self.cfg.nodes);
        let inst = FormulaInstance { h, cfg, ..self.clone() };
        inst.validate()?;
        Ok(inst)
    }

    /// (α, 𝔞) ↔ (α′, 𝔞′).
    pub fn swapped(&self) -> Self {
        FormulaInstance {
            frak_a: self.frak_a_prime.clone(),
            frak_a_prime: self.frak_a.clone(),
            alpha: self.alpha_prime.clone(),
            alpha_prime: self.alpha.clone(),
            ..self.clone()
        }
    }

    /// The ideals α𝔞⁻¹ and α′𝔞′⁻¹ indexing the coefficients.
    pub fn coefficient_ideals(&self) -> Result<(FracIdeal, FracIdeal)> {
        let f = &self.field;
        let first = self.frak_a.inverse(f)?.mul_element(&self.alpha, f);
        let second = self.frak_a_prime.inverse(f)?.mul_element(&self.alpha_prime, f);
        Ok((first, second))
    }
}

/// const_delta·Δ(α𝔞⁻¹ = α′𝔞′⁻¹)·∫h dμ.
pub fn delta_term(inst: &FormulaInstance) -> Result<Complex64> {
    let (first, second) = inst.coefficient_ideals()?;
    if first != second {
        return Ok(Complex64::new(0.0, 0.0));
    }
    Ok(h_mass(&inst.h, &inst.cfg)?.value * inst.const_delta)
}

#[derive(Clone, Debug, Serialize)]
pub struct GeometricResult {
    pub delta_term: Complex64,
    pub ks_term: Complex64,
    pub tail_bound: f64,
    /// False when tail_bound covers only the shell up to 8·cap.
    pub tail_complete: bool,
    /// Accumulated quadrature error of the Bessel transforms.
    pub quadrature_err: f64,
    pub terms_used: usize,
    pub c_norm_cap: u64,
    pub embedding_ratio: f64,
    pub classes: Vec<ClassRep>,
    pub cfg: MeasureConfig,
}

/// Bounds |T_j(z)| ≤ min(slope·|z|^κ, peak) for the one-place transform,
/// with κ = 1 at real and 2 at complex places, from a log-spaced grid. The
/// complex kernel is only evaluated up to |z| = 16; beyond that no bound is
/// claimed.
#[derive(Clone, Copy, Debug)]
struct PlaceEnvelope {
    kappa: i32,
    slope: f64,
    peak: f64,
    x_max: f64,
}

const ENVELOPE_SAFETY: f64 = 1.25;

impl PlaceEnvelope {
    fn at(&self, x: f64) -> f64 {
        if x > self.x_max {
            return f64::INFINITY;
        }
        (self.slope * x.powi(self.kappa)).min(self.peak)
    }
}

fn envelopes(h: &WeightFunctionH, cfg: &MeasureConfig) -> Result<Vec<PlaceEnvelope>> {
    h.per_place
        .iter()
        .map(|w| {
            let single = WeightFunctionH::new(vec![*w])?;
            let (kappa, angles, top, x_max): (i32, &[f64], i32, f64) = match w.kind {
                PlaceKind::Real => (1, &[0.0], 40, f64::INFINITY),
                PlaceKind::Complex => (2, &[0.0, 0.3, 0.7], 8, 16.0),
            };
            let points: Vec<(f64, f64)> = (-20..=top)
                .flat_map(|k| angles.iter().map(move |&t| (2f64.powf(k as f64 / 2.0), t)))
                .collect();
            let values = points
                .par_iter()
                .map(|&(x, theta)| {
                    let t = bessel_transform_h(&single, &[Complex64::from_polar(x, theta)], cfg)?;
                    Ok((x, t.value.norm() + t.err))
                })
                .collect::<Result<Vec<_>>>()?;
            let slope = values.iter().map(|(x, v)| v / x.powi(kappa)).fold(0.0, f64::max);
            let peak = values.iter().map(|(_, v)| *v).fold(0.0, f64::max);
            Ok(PlaceEnvelope { kappa, slope: slope * ENVELOPE_SAFETY, peak: peak * ENVELOPE_SAFETY, x_max })
        })
        .collect()
}

/// Lattice data for one narrow class 𝔪.
struct ClassSum<'a> {
    inst: &'a FormulaInstance,
    units: &'a UnitData,
    lattice: FracIdeal,
    lattice_norm: f64,
    /// ‖𝔞𝔪‖, so that ‖c𝔞⁻¹𝔪⁻¹‖ = ‖c‖/‖𝔞𝔪‖.
    am_norm: f64,
    frak_a1: FracIdeal,
    frak_a2: FracIdeal,
    ks_c: FracIdeal,
    alpha2: FieldElement,
    /// (ε, √σ_j(αα′γε) per place).
    eps: Vec<(FieldElement, Vec<Complex64>)>,
}

fn kloosterman_config(e: Error) -> Error {
    match e {
        Error::Precondition(m) => Error::Config(format!("Kloosterman precondition: {m}")),
        e => e,
    }
}

impl<'a> ClassSum<'a> {
    fn new(inst: &'a FormulaInstance, units: &'a UnitData, rep: &'a ClassRep) -> Result<Self> {
        let f = &inst.field;
        let d = f.different();
        let a_inv = inst.frak_a.inverse(f)?;
        let frak_a1 = a_inv.product(&d.inverse(f)?, f);
        let frak_a2 = inst.frak_a_prime.inverse(f)?.product(&d.inverse(f)?, f);
        let ks_c = frak_a1.product(&rep.ideal.inverse(f)?, f);
        let am = inst.frak_a.product(&rep.ideal, f);
        let lattice = am.product(&inst.frak_c, f);
        let alpha2 = f.mul(&inst.alpha_prime, &rep.gamma);
        let base = f.mul(&inst.alpha, &alpha2);
        let eps = units
            .tp_mod_squares
            .iter()
            .map(|e| {
                let beta = f.mul(&base, e);
                let roots = f
                    .embeddings(&beta)
                    .iter()
                    .enumerate()
                    .map(|(j, v)| if f.is_real_place(j) { Complex64::new(v.re.sqrt(), 0.0) } else { v.sqrt() })
                    .collect();
                (e.clone(), roots)
            })
            .collect();
        let probe = KloostermanQuery {
            alpha1: inst.alpha.clone(),
            frak_a1: frak_a1.clone(),
            alpha2: alpha2.clone(),
            frak_a2: frak_a2.clone(),
            c: f.one(),
            frak_c: ks_c.clone(),
        };
        check_query(f, &probe).map_err(kloosterman_config)?;
        Ok(ClassSum {
            inst,
            units,
            lattice_norm: ratio_to_f64(&lattice.norm()),
            am_norm: ratio_to_f64(&am.norm()),
            lattice,
            frak_a1,
            frak_a2,
            ks_c,
            alpha2,
            eps,
        })
    }

    /// Generators g of the principal ideals 𝔟𝔫 with 𝔫 integral of norm in
    /// (lo, hi], where 𝔟 is the lattice ideal, paired with ‖𝔫‖.
    fn generators(&self, lo: u64, hi: u64) -> Result<Vec<(FieldElement, u64)>> {
        let f = &self.inst.field;
        let mut out = Vec::new();
        for n in lo + 1..=hi {
            for ideal in integral_ideals_of_norm(f, n) {
                if let Some(g) = principal_generator(f, &self.lattice.product(&ideal, f))? {
                    out.push((g, n));
                }
            }
        }
        Ok(out)
    }

    fn fundamental(&self) -> Option<(FieldElement, f64)> {
        let eps = self.units.fundamental_unit.clone()?;
        let log = self.inst.field.embeddings(&eps)[0].re.abs().ln();
        Some((eps, log))
    }

    /// Range of k with g·ε₀^k inside the per-embedding cap.
    fn unit_window(&self, g: &FieldElement, log_unit: f64) -> (i64, i64) {
        let emb = self.inst.field.embeddings(g);
        let (s1, s2) = (emb[0].re.abs().ln(), emb[1].re.abs().ln());
        let half_log_norm = 0.5 * (s1 + s2);
        let slack = EMBEDDING_RATIO.ln();
        let lo = ((half_log_norm - slack - s1) / log_unit).ceil() as i64;
        let hi = ((s2 - half_log_norm + slack) / log_unit).floor() as i64;
        (lo, hi)
    }

    /// The summed elements of norm ‖𝔟‖·n for n ∈ (lo, hi].
    fn elements(&self, lo: u64, hi: u64) -> Result<Vec<FieldElement>> {
        let f = &self.inst.field;
        let mut out = Vec::new();
        for (g, _) in self.generators(lo, hi)? {
            if let Some((eps, log)) = self.fundamental() {
                let (k_lo, k_hi) = self.unit_window(&g, log);
                for k in k_lo..=k_hi {
                    let c = f.mul(&g, &unit_power(f, &eps, k));
                    if within_window(f, &c) {
                        out.push(-&c);
                        out.push(c);
                    }
                }
            } else {
                for z in &self.units.roots_of_unity {
                    out.push(f.mul(&g, z));
                }
            }
        }
        Ok(out)
    }

    fn term(&self, c: &FieldElement) -> Result<(Complex64, f64)> {
        let inst = self.inst;
        let f = &inst.field;
        let modulus = KloostermanModulus::new(f, &self.frak_a1, c, &self.ks_c, DEFAULT_TERM_CAP)
            .map_err(kloosterman_config)?;
        let norm = ratio_to_f64(&f.norm(c).abs()) / self.am_norm;
        let emb = f.embeddings(c);
        let mut value = Complex64::new(0.0, 0.0);
        let mut err = 0.0;
        for (e, roots) in &self.eps {
            let ks = modulus
                .evaluate(&f.mul(e, &inst.alpha), &self.alpha2)
                .map_err(kloosterman_config)?;
            let z: Vec<Complex64> = roots.iter().zip(&emb).map(|(r, s)| r / s).collect();
            let t = bessel_transform_h(&inst.h, &z, &inst.cfg)?;
            value += ks / norm * t.value;
            err += ks.norm() / norm * t.err;
        }
        Ok((value, err))
    }

    fn weil(&self, c: &FieldElement) -> Result<f64> {
        let q = KloostermanQuery {
            alpha1: self.inst.alpha.clone(),
            frak_a1: self.frak_a1.clone(),
            alpha2: self.alpha2.clone(),
            frak_a2: self.frak_a2.clone(),
            c: c.clone(),
            frak_c: self.ks_c.clone(),
        };
        weil_cap(&self.inst.field, &q)
    }

    /// Envelope Σ over ε and over the given associates of g.
    fn envelope(&self, g: &FieldElement, env: &[PlaceEnvelope], associates: Associates) -> Result<f64> {
        let f = &self.inst.field;
        let norm = ratio_to_f64(&f.norm(g).abs());
        let scale = self.weil(g)? / (norm / self.am_norm);
        let mut total = 0.0;
        for (_, roots) in &self.eps {
            let at = |emb: &[f64]| -> f64 {
                roots.iter().zip(emb).zip(env).map(|((r, s), e)| e.at(r.norm() / s)).product()
            };
            let emb: Vec<f64> = f.embeddings(g).iter().map(|v| v.norm()).collect();
            total += match (&associates, self.fundamental()) {
                (_, None) => self.units.roots_of_unity.len() as f64 * at(&emb),
                (Associates::All, Some((_, log))) => {
                    2.0 * orbit_sum(&emb, log, i64::MIN, i64::MAX, &at)
                }
                (Associates::OutsideWindow, Some((_, log))) => {
                    let (lo, hi) = self.unit_window(g, log);
                    2.0 * (orbit_sum(&emb, log, i64::MIN, lo - 1, &at) + orbit_sum(&emb, log, hi + 1, i64::MAX, &at))
                }
            };
        }
        Ok(total * scale)
    }
}

enum Associates {
    All,
    OutsideWindow,
}

fn unit_power(f: &FieldDescriptor, eps: &FieldElement, k: i64) -> FieldElement {
    if k >= 0 {
        f.pow(eps, k as u64)
    } else {
        f.pow(&f.inv(eps).expect("units are invertible"), k.unsigned_abs())
    }
}

fn within_window(f: &FieldDescriptor, c: &FieldElement) -> bool {
    let emb = f.embeddings(c);
    let root = ratio_to_f64(&f.norm(c).abs()).powf(1.0 / f.degree() as f64);
    emb.iter().all(|v| v.norm() * EMBEDDING_RATIO >= root * (1.0 - 1e-12))
}

/// Σ_{k ∈ [lo, hi]} of the envelope at the embeddings of g·ε₀^k, where
/// |σ₁| scales by ε₀^k and |σ₂| by ε₀^{−k}. Both ends decay geometrically.
fn orbit_sum<F: Fn(&[f64]) -> f64>(emb: &[f64], log_unit: f64, lo: i64, hi: i64, at: &F) -> f64 {
    let point = |k: i64| at(&[emb[0] * (k as f64 * log_unit).exp(), emb[1] * (-(k as f64) * log_unit).exp()]);
    // start at the balanced associate, clamped into the range
    let centre = (((emb[1].ln() - emb[0].ln()) / (2.0 * log_unit)).round() as i64).clamp(lo, hi);
    let mut total = point(centre);
    for dir in [-1i64, 1] {
        let mut k = centre;
        let mut prev = f64::INFINITY;
        loop {
            k += dir;
            if k < lo || k > hi {
                break;
            }
            let v = point(k);
            total += v;
            if v <= 1e-18 * total && v <= prev {
                // geometric from here on with ratio at most v/prev
                let r = if prev.is_finite() && prev > 0.0 { v / prev } else { 0.0 };
                total += v * r / (1.0 - r).max(1e-3);
                break;
            }
            prev = v;
        }
    }
    total
}

/// const_ks·Σ_𝔪 Σ_c Σ_ε KS(εα, 𝔞⁻¹𝔡⁻¹; α′γ_𝔪, 𝔞′⁻¹𝔡⁻¹; c, 𝔞⁻¹𝔪⁻¹𝔡⁻¹)/‖c𝔞⁻¹𝔪⁻¹‖
/// × ∏_j T_j(√σ_j(αα′γ_𝔪ε)/σ_j(c)), over 0 ≠ c ∈ 𝔞𝔪𝔠 with ‖c‖ ≤ cap.
pub fn kloosterman_term(inst: &FormulaInstance) -> Result<GeometricResult> {
    inst.validate()?;
    let f = &inst.field;
    let classes = narrow_class_reps(f, &inst.frak_a, &inst.frak_a_prime)?;
    let units = tp_units_mod_squares(f);
    let mut result = GeometricResult {
        delta_term: Complex64::new(0.0, 0.0),
        ks_term: Complex64::new(0.0, 0.0),
        tail_bound: 0.0,
        tail_complete: true,
        quadrature_err: 0.0,
        terms_used: 0,
        c_norm_cap: inst.c_norm_cap,
        embedding_ratio: EMBEDDING_RATIO,
        classes: classes.clone(),
        cfg: inst.cfg,
    };
    if classes.is_empty() {
        return Ok(result);
    }
    let env = envelopes(&inst.h, &inst.cfg)?;
    let cap = inst.c_norm_cap as f64;
    for rep in &classes {
        let sum = ClassSum::new(inst, &units, rep)?;
        let kept = (cap / sum.lattice_norm * (1.0 + 1e-12)).floor() as u64;
        let elements = sum.elements(0, kept)?;
        let terms = elements.par_iter().map(|c| sum.term(c)).collect::<Result<Vec<_>>>()?;
        for (v, e) in terms {
            result.ks_term += v;
            result.quadrature_err += e;
        }
        result.terms_used += elements.len() * sum.eps.len();

        let mut tail = 0.0;
        if sum.fundamental().is_some() {
            for (g, _) in sum.generators(0, kept)? {
                tail += sum.envelope(&g, &env, Associates::OutsideWindow)?;
            }
        }
        let horizon = SHELL_FACTOR * kept.max(1);
        let mut shells = [0.0f64; 2];
        let mut beyond = 0.0;
        for (g, n) in sum.generators(kept, horizon)? {
            let e = sum.envelope(&g, &env, Associates::All)?;
            beyond += e;
            if n > horizon / 2 {
                shells[1] += e;
            } else if n > horizon / 4 {
                shells[0] += e;
            }
        }
        tail += beyond;
        if sum.fundamental().is_none() {
            // shell sums fall like X^{−1/2}·log X
            let h = horizon as f64;
            let floor = 0.5f64.sqrt() * (2.0 * h).ln().max(1.0) / h.ln().max(1.0);
            let observed = if shells[0] > 0.0 { shells[1] / shells[0] } else { 0.0 };
            let r = observed.max(floor).min(MAX_TAIL_RATIO);
            tail += shells[1] * r / (1.0 - r);
        } else {
            // with infinitely many associates the envelope series diverges
            // logarithmically; only the enumerated shell is bounded
            result.tail_complete = false;
        }
        result.tail_bound += tail;
    }
    let scale = inst.const_ks.abs();
    result.ks_term *= inst.const_ks;
    result.tail_bound *= scale;
    result.quadrature_err *= scale;
    Ok(result)
}

/// Both geometric terms.
pub fn geometric_side(inst: &FormulaInstance) -> Result<GeometricResult> {
    let mut result = kloosterman_term(inst)?;
    result.delta_term = delta_term(inst)?;
    Ok(result)
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralResult {
    pub cuspidal_sum: Complex64,
    pub forms_used: usize,
    /// Records lacking a needed coefficient.
    pub forms_skipped: usize,
    /// Records at a real place without a sign character; the default branch is used.
    pub sign_unknown: usize,
    pub k_index: u64,
    pub csc_placeholder: &'static str,
}

/// λ at an ideal: 0 off the integral ideals, None if the record lacks it.
fn lambda_at(record: &MaassFormRecord, ideal: &FracIdeal) -> Option<Complex64> {
    if !ideal.is_integral() {
        return Some(Complex64::new(0.0, 0.0));
    }
    record.coefficient(ideal)
}

/// [K(𝔬):K(𝔠)]⁻¹ Σ_f h(ν_f, p_f)·λ_f(α𝔞⁻¹)·conj(λ_f(α′𝔞′⁻¹)).
pub fn spectral_side(inst: &FormulaInstance, data: &[MaassFormRecord]) -> Result<SpectralResult> {
    let (first, second) = inst.coefficient_ideals()?;
    let k = k_index(&inst.field, &inst.frak_c)?;
    let mut result = SpectralResult {
        cuspidal_sum: Complex64::new(0.0, 0.0),
        forms_used: 0,
        forms_skipped: 0,
        sign_unknown: 0,
        k_index: k,
        csc_placeholder: "omitted",
    };
    for record in data {
        if record.spectral.len() != inst.h.per_place.len() {
            return config(format!(
                "record from {} has {} places, the instance has {}",
                record.source,
                record.spectral.len(),
                inst.h.per_place.len()
            ));
        }
        let (Some(l1), Some(l2)) = (lambda_at(record, &first), lambda_at(record, &second)) else {
            result.forms_skipped += 1;
            continue;
        };
        let mut hv = Complex64::new(1.0, 0.0);
        for (j, s) in record.spectral.iter().enumerate() {
            hv *= inst.h.h_eval(j, s.nu, s.p)?;
        }
        result.cuspidal_sum += hv * l1 * l2.conj();
        result.forms_used += 1;
        if record.sign_unknown() {
            result.sign_unknown += 1;
        }
    }
    result.cuspidal_sum /= k as f64;
    Ok(result)
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualEntry {
    pub h: WeightFunctionH,
    pub geometric: GeometricResult,
    pub spectral: SpectralResult,
    /// spectral − const·(delta + ks) at the fitted const.
    pub residual: Option<Complex64>,
    pub relative_residual: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualReport {
    pub header: &'static str,
    pub entries: Vec<ResidualEntry>,
    pub fitted_const: Option<Complex64>,
    /// (max − min)/|mean| of the per-h ratios spectral/geometric.
    pub relative_spread: Option<f64>,
    pub notice: Option<String>,
}

/// Fits spectral ≈ const·(delta + ks) by least squares over the family, with
/// the instance's calibration constants set to 1.
pub fn residual_report(
    inst: &FormulaInstance,
    data: &[MaassFormRecord],
    family: &[WeightFunctionH],
) -> Result<ResidualReport> {
    let base = FormulaInstance { const_delta: 1.0, const_ks: 1.0, ..inst.clone() };
    let mut entries = Vec::with_capacity(family.len());
    for h in family {
        let member = base.with_weight(h.clone())?;
        entries.push(ResidualEntry {
            h: h.clone(),
            geometric: geometric_side(&member)?,
            spectral: spectral_side(&member, data)?,
            residual: None,
            relative_residual: None,
        });
    }
    let mut report = ResidualReport {
        header: CSC_NOTICE,
        entries,
        fitted_const: None,
        relative_spread: None,
        notice: None,
    };
    if family.len() < 2 {
        report.notice = Some(format!("fit skipped: {} weight function(s) given, at least 2 needed", family.len()));
        return Ok(report);
    }
    let geo: Vec<Complex64> = report.entries.iter().map(|e| e.geometric.delta_term + e.geometric.ks_term).collect();
    let spec: Vec<Complex64> = report.entries.iter().map(|e| e.spectral.cuspidal_sum).collect();
    let gram: f64 = geo.iter().map(|g| g.norm_sqr()).sum();
    if gram == 0.0 {
        report.notice = Some("fit skipped: the geometric side vanishes for every weight function".into());
        return Ok(report);
    }
    let fitted: Complex64 = geo.iter().zip(&spec).map(|(g, s)| g.conj() * s).sum::<Complex64>() / gram;
    for (entry, (g, s)) in report.entries.iter_mut().zip(geo.iter().zip(&spec)) {
        let r = s - fitted * g;
        entry.residual = Some(r);
        entry.relative_residual = Some(r.norm() / s.norm().max(f64::MIN_POSITIVE));
    }
    let ratios: Vec<Complex64> = geo.iter().zip(&spec).filter(|(g, _)| g.norm() > 0.0).map(|(g, s)| s / g).collect();
    if !ratios.is_empty() {
        let mean = ratios.iter().sum::<Complex64>() / ratios.len() as f64;
        let mut spread: f64 = 0.0;
        for a in &ratios {
            for b in &ratios {
                spread = spread.max((a - b).norm());
            }
        }
        report.relative_spread = Some(spread / mean.norm().max(f64::MIN_POSITIVE));
    }
    report.fitted_const = Some(fitted);
    Ok(report)
}

/// Solves the square system m·x = b by Gaussian elimination with partial pivoting.
fn solve(mut m: Vec<Vec<Complex64>>, mut b: Vec<Complex64>) -> Result<Vec<Complex64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].norm().total_cmp(&m[j][col].norm()))
            .expect("nonempty range");
        if m[pivot][col].norm() == 0.0 {
            return Err(Error::Input("synthetic system is singular".into()));
        }
        m.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = m[row][col] / m[col][col];
            for k in col..n {
                let delta = factor * m[col][k];
                m[row][k] -= delta;
            }
            let delta = factor * b[col];
            b[row] -= delta;
        }
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    Ok(x)
}

/// Fabricated forms whose cuspidal sum equals the geometric side for every
/// member of the family: one tempered form per member, ν = i·t at every place,
/// with coefficients solving the resulting linear system.
pub fn synthetic_records(inst: &FormulaInstance, family: &[WeightFunctionH]) -> Result<Vec<MaassFormRecord>> {
    let (first, second) = inst.coefficient_ideals()?;
    if first == second {
        return Err(Error::Input("synthetic data needs distinct coefficient ideals α𝔞⁻¹ ≠ α′𝔞′⁻¹".into()));
    }
    if !first.is_integral() || !second.is_integral() {
        return Err(Error::Input("synthetic data needs integral coefficient ideals".into()));
    }
    let k = k_index(&inst.field, &inst.frak_c)? as f64;
    let places = inst.h.per_place.len();
    let ts: Vec<f64> = (0..family.len()).map(|i| 0.75 + 1.5 * i as f64).collect();
    let mut matrix = Vec::with_capacity(family.len());
    let mut rhs = Vec::with_capacity(family.len());
    for h in family {
        let member = inst.with_weight(h.clone())?;
        let g = geometric_side(&member)?;
        rhs.push((g.delta_term + g.ks_term) * k);
        let row = ts
            .iter()
            .map(|&t| {
                (0..places)
                    .map(|j| h.h_eval(j, Complex64::new(0.0, t), 0))
                    .product::<Result<Complex64>>()
            })
            .collect::<Result<Vec<_>>>()?;
        matrix.push(row);
    }
    let weights = solve(matrix, rhs)?;
    ts.iter()
        .zip(weights)
        .map(|(&t, w)| {
            let mut spectral = Vec::with_capacity(places);
            let mut weight = Vec::with_capacity(places);
            for j in 0..places {
                let nu = Complex64::new(0.0, t);
                if inst.field.is_real_place(j) {
                    spectral.push(SpectralParam::real(nu, None)?);
                    weight.push(WeightSpec::real(0)?);
                } else {
                    spectral.push(SpectralParam::complex(nu, 0)?);
                    weight.push(WeightSpec::complex(0, 0)?);
                }
            }
            let coeffs = BTreeMap::from([(first.key(), w), (second.key(), Complex64::new(1.0, 0.0))]);
            Ok(MaassFormRecord { spectral, weight, coeffs, central_char: None, source: "synthetic".into() })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kloosterman::classical_kloosterman;
    use crate::spectral::h_mass;

    #[test]
    fn delta_vanishes_for_distinct_ideals() {
        let inst = FormulaInstance::rational(1, 2, 1, 2.0, 10).unwrap();
        assert_eq!(delta_term(&inst).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn delta_is_mass_times_constant() {
        let mut inst = FormulaInstance::rational(1, 1, 1, 2.0, 10).unwrap();
        let mass = h_mass(&inst.h, &inst.cfg).unwrap();
        inst.const_delta = 1.0;
        let d = delta_term(&inst).unwrap();
        assert!((d - mass.value).norm() <= 1e-15 * mass.value.norm());
        inst.const_delta = 3.5;
        assert!((delta_term(&inst).unwrap() - 3.5 * d).norm() < 1e-12 * d.norm());
        // the discrete part is the single point ν = 3/2 at a = 2
        let continuous = mass.value.re - 1.0;
        assert!(continuous > 0.0);
    }

    #[test]
    fn per_term_kloosterman_matches_classical() {
        let inst = FormulaInstance::rational(1, 1, 1, 2.0, 50).unwrap();
        let units = tp_units_mod_squares(&inst.field);
        let reps = narrow_class_reps(&inst.field, &inst.frak_a, &inst.frak_a_prime).unwrap();
        assert_eq!(reps.len(), 1);
        let sum = ClassSum::new(&inst, &units, &reps[0]).unwrap();
        let elements = sum.elements(0, 50).unwrap();
        assert_eq!(elements.len(), 100);
        let f = &inst.field;
        for c in &elements {
            let modulus = KloostermanModulus::new(f, &sum.frak_a1, c, &sum.ks_c, DEFAULT_TERM_CAP).unwrap();
            let ks = modulus.evaluate(&inst.alpha, &sum.alpha2).unwrap();
            let cabs = ratio_to_f64(&f.norm(c).abs()) as u64;
            assert!((ks - classical_kloosterman(1, 1, cabs)).norm() < 1e-9, "c = {c:?}");
        }
    }

    #[test]
    fn rational_sum_matches_direct_evaluation() {
        let inst = FormulaInstance::rational(1, 1, 1, 2.0, 12).unwrap();
        let g = kloosterman_term(&inst).unwrap();
        let mut direct = Complex64::new(0.0, 0.0);
        for c in 1..=12u64 {
            let t = bessel_transform_h(&inst.h, &[Complex64::new(1.0 / c as f64, 0.0)], &inst.cfg).unwrap();
            direct += 2.0 * classical_kloosterman(1, 1, c) / c as f64 * t.value;
        }
        assert!((g.ks_term - direct).norm() < 1e-12 * direct.norm().max(1.0));
        assert_eq!(g.terms_used, 24);
        assert!(g.ks_term.im.abs() < 1e-12);
    }

    #[test]
    fn cap_doubling_within_tail() {
        let inst = FormulaInstance::rational(1, 1, 1, 2.0, 50).unwrap();
        let a = kloosterman_term(&inst).unwrap();
        let b = kloosterman_term(&inst.with_cap(100)).unwrap();
        let gap = (a.ks_term - b.ks_term).norm();
        assert!(gap <= a.tail_bound + a.quadrature_err + b.quadrature_err, "{gap} vs {}", a.tail_bound);
        assert!(b.tail_bound <= a.tail_bound);
        assert!(a.tail_bound > 0.0);
    }

    #[test]
    fn rational_symmetry() {
        let inst = FormulaInstance::rational(2, 3, 1, 2.0, 20).unwrap();
        let swapped = inst.swapped();
        assert_eq!(delta_term(&inst).unwrap(), delta_term(&swapped).unwrap());
        let a = kloosterman_term(&inst).unwrap();
        let b = kloosterman_term(&swapped).unwrap();
        assert!((a.ks_term - b.ks_term).norm() <= a.quadrature_err + b.quadrature_err + 1e-12);
    }

    #[test]
    fn level_restricts_moduli() {
        let inst = FormulaInstance::rational(1, 1, 3, 2.0, 30).unwrap();
        let g = kloosterman_term(&inst).unwrap();
        assert_eq!(g.terms_used, 20);
    }

    #[test]
    fn invariants_enforced() {
        let f = FieldDescriptor::rational();
        let h = WeightFunctionH::for_field(&f, &[2.0]).unwrap();
        let cfg = MeasureConfig::for_weight(&h, 1e-10).unwrap();
        let o = FracIdeal::unit(&f);
        let bad = FormulaInstance::new(f.clone(), o.clone(), o.clone(), f.int(1), f.int(-1), o.clone(), h.clone(), cfg, 10);
        assert!(matches!(bad, Err(Error::Config(_))));
        let half = FormulaInstance::new(f.clone(), o.clone(), o.clone(), f.rat(1, 2), f.int(1), o, h, cfg, 10);
        assert!(matches!(half, Err(Error::Config(_))));
    }

    #[test]
    fn different_must_divide_level() {
        let f = FieldDescriptor::quadratic(-1).unwrap();
        let h = WeightFunctionH::for_field(&f, &[2.0]).unwrap();
        let cfg = MeasureConfig::for_weight(&h, 1e-10).unwrap();
        let o = FracIdeal::unit(&f);
        let inst = FormulaInstance::new(f.clone(), o.clone(), o.clone(), f.one(), f.one(), o.clone(), h, cfg, 10).unwrap();
        match kloosterman_term(&inst) {
            Err(Error::Config(m)) => assert!(m.contains("Kloosterman precondition"), "{m}"),
            r => panic!("{r:?}"),
        }
    }

    #[test]
    fn gaussian_field_instance() {
        let f = FieldDescriptor::quadratic(-1).unwrap();
        let h = WeightFunctionH::for_field(&f, &[2.0]).unwrap();
        let cfg = MeasureConfig::for_weight(&h, 1e-10).unwrap();
        let o = FracIdeal::unit(&f);
        let inst = FormulaInstance::new(f.clone(), o.clone(), o.clone(), f.one(), f.one(), f.different(), h, cfg, 40).unwrap();
        let a = kloosterman_term(&inst).unwrap();
        assert!(a.terms_used > 0 && a.ks_term.norm().is_finite());
        let b = kloosterman_term(&inst.with_cap(80)).unwrap();
        let gap = (a.ks_term - b.ks_term).norm();
        assert!(gap <= a.tail_bound + a.quadrature_err + b.quadrature_err, "{gap} vs {}", a.tail_bound);
        assert!(a.tail_complete && b.tail_bound <= a.tail_bound);
    }

    #[test]
    fn real_quadratic_instance() {
        let f = FieldDescriptor::quadratic(2).unwrap();
        let h = WeightFunctionH::for_field(&f, &[2.0, 2.0]).unwrap();
        let cfg = MeasureConfig::for_weight(&h, 1e-10).unwrap();
        let o = FracIdeal::unit(&f);
        let inst = FormulaInstance::new(f.clone(), o.clone(), o.clone(), f.one(), f.one(), f.different(), h, cfg, 40).unwrap();
        let a = kloosterman_term(&inst).unwrap();
        let b = kloosterman_term(&inst.with_cap(80)).unwrap();
        assert!(!a.tail_complete);
        assert!(a.ks_term.im.abs() < 1e-12);
        let gap = (a.ks_term - b.ks_term).norm();
        assert!(gap <= a.tail_bound + a.quadrature_err + b.quadrature_err, "{gap} vs {}", a.tail_bound);
    }

    #[test]
    fn spectral_side_examples() {
        let inst = FormulaInstance::rational(1, 1, 1, 2.0, 10).unwrap();
        let empty = spectral_side(&inst, &[]).unwrap();
        assert_eq!(empty.forms_used, 0);
        assert_eq!(empty.cuspidal_sum, Complex64::new(0.0, 0.0));
        let record = |nu: Complex64| MaassFormRecord {
            spectral: vec![SpectralParam::real(nu, None).unwrap()],
            weight: vec![WeightSpec::real(0).unwrap()],
            coeffs: BTreeMap::from([("1".to_string(), Complex64::new(1.0, 0.0))]),
            central_char: None,
            source: "test".into(),
        };
        let one = spectral_side(&inst, &[record(Complex64::new(0.0, 1.9))]).unwrap();
        let want = ((-3.61f64 - 0.25) / 2.0).exp();
        assert!((one.cuspidal_sum - want).norm() < 1e-15);
        assert_eq!(one.sign_unknown, 1);
        let discrete = spectral_side(&inst, &[record(Complex64::new(2.5, 0.0))]).unwrap();
        assert_eq!(discrete.cuspidal_sum, Complex64::new(0.0, 0.0));
        let other = FormulaInstance::rational(1, 2, 1, 2.0, 10).unwrap();
        let skipped = spectral_side(&other, &[record(Complex64::new(0.0, 1.9))]).unwrap();
        assert_eq!((skipped.forms_used, skipped.forms_skipped), (0, 1));
    }

    #[test]
    fn synthetic_closure() {
        let inst = FormulaInstance::rational(1, 2, 1, 2.0, 20).unwrap();
        let family: Vec<WeightFunctionH> = [2.0, 3.0, 4.5]
            .iter()
            .map(|&a| WeightFunctionH::for_field(&inst.field, &[a]).unwrap())
            .collect();
        let data = synthetic_records(&inst, &family).unwrap();
        let report = residual_report(&inst, &data, &family).unwrap();
        let c = report.fitted_const.unwrap();
        assert!((c - 1.0).norm() < 1e-9, "{c}");
        for e in &report.entries {
            assert!(e.relative_residual.unwrap() < 1e-9);
        }
        assert!(report.header.contains("omitted"));
    }

    #[test]
    fn fit_needs_two_weights() {
        let inst = FormulaInstance::rational(1, 1, 1, 2.0, 5).unwrap();
        let report = residual_report(&inst, &[], std::slice::from_ref(&inst.h)).unwrap();
        assert!(report.fitted_const.is_none());
        assert!(report.notice.unwrap().contains("fit skipped"));
    }
}
