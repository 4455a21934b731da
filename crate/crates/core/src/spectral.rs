use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::numberfield::FieldDescriptor;
use crate::quadrature::{gauss_legendre, GaussLegendre};
use crate::specialfun::{kernel_complex, kernel_real, Estimate, PlaceKind};

const STRIP: f64 = 2.0 / 3.0;
const PANEL_WIDTH: f64 = 0.5;
const HALF_INTEGER_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaceWeight {
    pub kind: PlaceKind,
    pub a: f64,
}

/// The test function h = ∏_j h_j, one Gaussian-type factor per archimedean place.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightFunctionH {
    pub per_place: Vec<PlaceWeight>,
}

fn is_half_integer(x: f64) -> bool {
    ((x - 0.5) - (x - 0.5).round()).abs() <= HALF_INTEGER_TOL
}

impl WeightFunctionH {
    pub fn new(per_place: Vec<PlaceWeight>) -> Result<Self> {
        if per_place.is_empty() {
            return domain("weight function needs at least one place");
        }
        for (j, w) in per_place.iter().enumerate() {
            if !(w.a > 1.0) || !w.a.is_finite() {
                return domain(format!("weight parameter a at place {j} must exceed 1, got {}", w.a));
            }
        }
        Ok(WeightFunctionH { per_place })
    }

    /// One parameter per archimedean place of the field, real places first.
    pub fn for_field(field: &FieldDescriptor, a: &[f64]) -> Result<Self> {
        if a.len() != field.place_count() {
            return domain(format!(
                "{} has {} archimedean places, got {} weight parameters",
                field.name(),
                field.place_count(),
                a.len()
            ));
        }
        let per_place = a
            .iter()
            .enumerate()
            .map(|(j, &a)| PlaceWeight {
                kind: if field.is_real_place(j) { PlaceKind::Real } else { PlaceKind::Complex },
                a,
            })
            .collect();
        WeightFunctionH::new(per_place)
    }

    pub fn scaled_a(&self, factor: f64) -> Result<Self> {
        WeightFunctionH::new(
            self.per_place.iter().map(|w| PlaceWeight { a: w.a * factor, ..*w }).collect(),
        )
    }

    pub fn max_a(&self) -> f64 {
        self.per_place.iter().map(|w| w.a).fold(1.0, f64::max)
    }

    /// h_j at (ν, p). At real places p is ignored.
    pub fn h_eval(&self, place: usize, nu: Complex64, p: i64) -> Result<Complex64> {
        let Some(w) = self.per_place.get(place) else {
            return domain(format!("place index {place} out of range"));
        };
        Ok(place_h(w, nu, p))
    }
}

fn place_h(w: &PlaceWeight, nu: Complex64, p: i64) -> Complex64 {
    let zero = Complex64::new(0.0, 0.0);
    match w.kind {
        PlaceKind::Real => {
            if nu.re.abs() < STRIP {
                ((nu * nu - 0.25) / w.a).exp()
            } else if nu.im.abs() <= HALF_INTEGER_TOL
                && is_half_integer(nu.re)
                && nu.re.abs() >= 1.5
                && nu.re.abs() <= w.a
            {
                Complex64::new(1.0, 0.0)
            } else {
                zero
            }
        }
        PlaceKind::Complex => {
            if nu.re.abs() < STRIP && (p.abs() as f64) <= w.a {
                ((nu * nu + (p * p) as f64 - 1.0) / w.a).exp()
            } else {
                zero
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureConfig {
    pub t_max: f64,
    /// Gauss–Legendre nodes per panel of width 0.5.
    pub nodes: usize,
    pub p_max: i64,
    /// Number of discrete-series points ν = 3/2, 5/2, … summed at real places.
    pub discrete_cap: usize,
}

impl MeasureConfig {
    /// t_max = √(a ln(1/tol)) + 1 from the Gaussian envelope of h.
    pub fn for_weight(h: &WeightFunctionH, tol: f64) -> Result<Self> {
        if !(tol > 0.0 && tol < 1.0) {
            return domain(format!("tolerance must lie in (0, 1), got {tol}"));
        }
        let a = h.max_a();
        let cfg = MeasureConfig {
            t_max: (a * (1.0 / tol).ln()).sqrt() + 1.0,
            nodes: 16,
            p_max: a.ceil() as i64,
            discrete_cap: a.ceil() as usize + 1,
        };
        cfg.validate(Some(h))?;
        Ok(cfg)
    }

    pub fn validate(&self, h: Option<&WeightFunctionH>) -> Result<()> {
        if !(self.t_max > 0.0) || self.nodes == 0 || self.p_max <= 0 || self.discrete_cap == 0 {
            return Err(Error::Config("measure caps must all be positive".into()));
        }
        if let Some(h) = h {
            if (self.p_max as f64) < h.max_a().ceil() {
                return Err(Error::Config(format!(
                    "p_max = {} does not cover the support |p| ≤ {} of h",
                    self.p_max,
                    h.max_a()
                )));
            }
        }
        Ok(())
    }

    pub fn doubled_nodes(&self) -> Self {
        MeasureConfig { nodes: self.nodes * 2, ..*self }
    }

    pub fn doubled_cap(&self) -> Self {
        MeasureConfig { t_max: self.t_max * 2.0, ..*self }
    }
}

/// ∫_{t_lo}^{t_max} g(t) dt on panels of width 0.5, with a tail estimate
/// from the last panels' envelope.
fn line_integral<G>(g: &G, t_lo: f64, cfg: &MeasureConfig) -> Result<Estimate>
where
    G: Fn(f64) -> Result<Estimate> + Sync,
{
    let panels = ((cfg.t_max - t_lo) / PANEL_WIDTH).ceil().max(2.0) as usize;
    let width = (cfg.t_max - t_lo) / panels as f64;
    let owned;
    let rule = if cfg.nodes <= 64 {
        gauss_legendre(cfg.nodes)
    } else {
        owned = GaussLegendre::new(cfg.nodes);
        &owned
    };
    let results: Vec<Result<(Complex64, f64, f64)>> = (0..panels)
        .into_par_iter()
        .map(|k| {
            let a = t_lo + k as f64 * width;
            let mut sum = Complex64::new(0.0, 0.0);
            let mut err = 0.0;
            let mut peak: f64 = 0.0;
            for (t, w) in rule.mapped(a, a + width) {
                let e = g(t)?;
                sum += e.value * w;
                err += e.err * w;
                peak = peak.max(e.value.norm());
            }
            Ok((sum, err, peak))
        })
        .collect();
    let mut value = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    let mut peaks = Vec::with_capacity(panels);
    for r in results {
        let (v, e, peak) = r?;
        value += v;
        err += e;
        peaks.push(peak);
    }
    // past t_max/2 the envelope must decrease
    let half = panels / 2;
    let envelope: Vec<f64> = peaks[half..].to_vec();
    let slack = 1e-12 * peaks.iter().cloned().fold(0.0, f64::max);
    for w in envelope.windows(3) {
        if w[2] > w[0].max(w[1]) + slack {
            return Err(Error::Accuracy {
                message: format!("spectral integrand does not decay past t = {}", cfg.t_max / 2.0),
                achieved: w[2],
            });
        }
    }
    let last = peaks[panels - 1];
    let before = peaks[panels - 2];
    let ratio = if before > 0.0 { (last / before).min(0.99) } else { 0.0 };
    let tail = last * width * ratio / (1.0 - ratio);
    Ok(Estimate { value, err: err + tail })
}

/// Integral against dμ at one place.
///
/// Real place: ∫₀^{i∞} f(ν)(−4πν) tan(πν) dν/(2πi) + Σ_{ν = 3/2, 5/2, …} f(ν);
/// on ν = it the weight is 2t tanh(πt) dt.
/// Complex place: Σ_{|p| ≤ p_max} ∫ f(it, p)(p² + t²) dt over t ∈ ℝ.
pub fn mu_integrate<F>(kind: PlaceKind, f: &F, cfg: &MeasureConfig) -> Result<Estimate>
where
    F: Fn(Complex64, i64) -> Result<Estimate> + Sync,
{
    cfg.validate(None)?;
    match kind {
        PlaceKind::Real => {
            let g = |t: f64| -> Result<Estimate> {
                let e = f(Complex64::new(0.0, t), 0)?;
                let w = 2.0 * t * (PI * t).tanh();
                Ok(Estimate { value: e.value * w, err: e.err * w })
            };
            let mut total = line_integral(&g, 0.0, cfg)?;
            for k in 0..cfg.discrete_cap {
                let e = f(Complex64::new(1.5 + k as f64, 0.0), 0)?;
                total.value += e.value;
                total.err += e.err;
            }
            Ok(total)
        }
        PlaceKind::Complex => {
            let mut total = Estimate { value: Complex64::new(0.0, 0.0), err: 0.0 };
            for p in -cfg.p_max..=cfg.p_max {
                let g = |t: f64| -> Result<Estimate> {
                    let w = (p * p) as f64 + t * t;
                    let up = f(Complex64::new(0.0, t), p)?;
                    let down = f(Complex64::new(0.0, -t), p)?;
                    Ok(Estimate { value: (up.value + down.value) * w, err: (up.err + down.err) * w })
                };
                let part = line_integral(&g, 0.0, cfg)?;
                total.value += part.value;
                total.err += part.err;
            }
            Ok(total)
        }
    }
}

/// ∫ h dμ, the product over places.
pub fn h_mass(h: &WeightFunctionH, cfg: &MeasureConfig) -> Result<Estimate> {
    let parts = h
        .per_place
        .iter()
        .map(|w| {
            let f = |nu: Complex64, p: i64| Ok(Estimate { value: place_h(w, nu, p), err: 0.0 });
            mu_integrate(w.kind, &f, cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(product(&parts))
}

fn product(parts: &[Estimate]) -> Estimate {
    let mut value = Complex64::new(1.0, 0.0);
    let mut err = 0.0;
    for e in parts {
        err = err * e.value.norm() + value.norm() * e.err + err * e.err;
        value *= e.value;
    }
    Estimate { value, err }
}

/// Bessel transform ∏_j ∫ 𝓑_j(ν)(z_j) h_j(ν) dμ_j.
pub fn bessel_transform_h(h: &WeightFunctionH, z: &[Complex64], cfg: &MeasureConfig) -> Result<Estimate> {
    if z.len() != h.per_place.len() {
        return domain(format!("{} arguments for {} places", z.len(), h.per_place.len()));
    }
    let parts = h
        .per_place
        .iter()
        .zip(z)
        .map(|(w, &zj)| place_transform(w, zj, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(product(&parts))
}

fn place_transform(w: &PlaceWeight, z: Complex64, cfg: &MeasureConfig) -> Result<Estimate> {
    if z.norm() == 0.0 {
        return domain("Bessel transform argument must be nonzero");
    }
    match w.kind {
        PlaceKind::Real => {
            if z.im.abs() > 1e-12 * z.norm() {
                return domain(format!("argument {z} at a real place is not real"));
            }
            let f = |nu: Complex64, p: i64| -> Result<Estimate> {
                let h = place_h(w, nu, p);
                if h.norm() == 0.0 {
                    return Ok(Estimate { value: h, err: 0.0 });
                }
                let k = kernel_real(nu, z.re)?;
                Ok(Estimate { value: k.value * h, err: k.err * h.norm() })
            };
            mu_integrate(PlaceKind::Real, &f, cfg)
        }
        PlaceKind::Complex => {
            let f = |nu: Complex64, p: i64| -> Result<Estimate> {
                let h = place_h(w, nu, p);
                if h.norm() == 0.0 {
                    return Ok(Estimate { value: h, err: 0.0 });
                }
                let k = kernel_complex(nu, p, z)?;
                Ok(Estimate { value: k.value * h, err: k.err * h.norm() })
            };
            mu_integrate(PlaceKind::Complex, &f, cfg)
        }
    }
}
