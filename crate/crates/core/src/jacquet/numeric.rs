use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::{phi_eval, ComplexWeight, IwasawaPoint, JacquetExpansion};
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;
use crate::specialfun::{jstar_pair, rgamma, sin_pi, Estimate};

/// |f(n(x) a(y) k)| ≤ C y^{1+σ}: the growth condition under which the
/// defining integral converges absolutely.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GrowthCertificate {
    pub sigma: f64,
}

const ANGULAR_START: usize = 32;
const ANGULAR_MAX: usize = 1 << 15;
const ANGULAR_TOL: f64 = 1e-15;
const INNER_RADIUS: f64 = 2.0;
const INNER_PANELS: usize = 8;
const TAIL_SEGMENTS: usize = 80;
const TAIL_NODES: usize = 16;
const AVERAGING_ROUNDS: usize = 12;
/// Guard on the quadrature's own error estimate inside the identity checks;
/// the judged quantity is the deviation between the two sides.
const GW_QUADRATURE_TOL: f64 = 1e-3;
const COMPACTIFIED_EDGES: [f64; 14] = [
    0.0, 0.25, 0.5, 0.75, 0.9, 0.97, 0.99, 0.997, 0.999, 0.9997, 0.9999, 0.99997, 0.99999, 1.0,
];

struct Integrand<'a, F> {
    omega: Complex64,
    f: &'a F,
    g: IwasawaPoint,
}

impl<F: Fn(&IwasawaPoint) -> Result<Complex64>> Integrand<'_, F> {
    fn at(&self, u: Complex64) -> Result<Complex64> {
        let phase = Complex64::from_polar(1.0, -4.0 * PI * (self.omega * u).re);
        Ok(phase * (self.f)(&self.g.weyl_translate(u))?)
    }

    /// ∫₀^{2π} F(r e^{iθ}) dθ by trapezoid doubling.
    fn angular(&self, r: f64) -> Result<(Complex64, f64)> {
        if r == 0.0 {
            return Ok((self.at(Complex64::new(0.0, 0.0))? * (2.0 * PI), 0.0));
        }
        let mut n = ANGULAR_START;
        let mut sum = Complex64::new(0.0, 0.0);
        let mut mass = 0.0;
        for k in 0..n {
            let v = self.at(Complex64::from_polar(r, 2.0 * PI * k as f64 / n as f64))?;
            sum += v;
            mass += v.norm();
        }
        let mut value = sum * (2.0 * PI / n as f64);
        loop {
            for k in 0..n {
                let theta = 2.0 * PI * (k as f64 + 0.5) / n as f64;
                let v = self.at(Complex64::from_polar(r, theta))?;
                sum += v;
                mass += v.norm();
            }
            n *= 2;
            let next = sum * (2.0 * PI / n as f64);
            let delta = (next - value).norm();
            value = next;
            let scale = mass * 2.0 * PI / n as f64;
            // the doubling converges geometrically, so once the difference
            // is at rounding level the finer sum is accurate to that level
            if delta < ANGULAR_TOL * scale {
                return Ok((value, ANGULAR_TOL * scale));
            }
            if n >= ANGULAR_MAX {
                return Ok((value, delta));
            }
        }
    }

    fn radial_panel(&self, a: f64, b: f64, nodes: usize) -> Result<(Complex64, f64)> {
        let rule = gauss_legendre(nodes);
        let mut sum = Complex64::new(0.0, 0.0);
        let mut err = 0.0;
        for (x, w) in rule.mapped(a, b) {
            let (v, e) = self.angular(x)?;
            sum += v * (w * x);
            err += e * w * x;
        }
        Ok((sum, err))
    }
}

/// ∫_ℂ e^{−2πi(ωx + conj(ωx))} f(w n(x) g) dx over Lebesgue measure on ℂ.
///
/// Polar coordinates in x. For ω ≠ 0 the radial function oscillates with
/// half-period 1/(4|ω|); partial sums over half-periods are averaged
/// repeatedly, which damps the alternating tail. For ω = 0 the radius is
/// compactified by r = s/(1−s).
pub fn jacquet_numeric<F>(
    omega: Complex64,
    f: &F,
    growth: Option<GrowthCertificate>,
    g: &IwasawaPoint,
    tol: f64,
) -> Result<Estimate>
where
    F: Fn(&IwasawaPoint) -> Result<Complex64>,
{
    let Some(GrowthCertificate { sigma }) = growth else {
        return Err(Error::Precondition(
            "jacquet_numeric needs a growth certificate for the integrand".into(),
        ));
    };
    if !(sigma > 0.0) {
        return Err(Error::Precondition(format!(
            "growth exponent σ = {sigma} gives no absolute convergence"
        )));
    }
    let integrand = Integrand { omega, f, g: *g };
    let estimate = if omega.norm() == 0.0 {
        compactified(&integrand, sigma)?
    } else {
        oscillatory(&integrand, omega.norm())?
    };
    if !(estimate.err <= tol * estimate.value.norm().max(1e-300)) {
        return Err(Error::Accuracy {
            message: format!("Jacquet quadrature at ω = {omega} missed tolerance {tol:e}"),
            achieved: estimate.err / estimate.value.norm().max(1e-300),
        });
    }
    Ok(estimate)
}

fn compactified<F>(integrand: &Integrand<'_, F>, sigma: f64) -> Result<Estimate>
where
    F: Fn(&IwasawaPoint) -> Result<Complex64>,
{
    let rule = gauss_legendre(24);
    let mut total = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    let mut last = 0.0;
    for pair in COMPACTIFIED_EDGES.windows(2) {
        for (s, w) in rule.mapped(pair[0], pair[1]) {
            let r = s / (1.0 - s);
            let jac = w / ((1.0 - s) * (1.0 - s));
            let (v, e) = integrand.angular(r)?;
            total += v * (r * jac);
            err += e * r * jac;
            last = v.norm() * r * r;
        }
    }
    // beyond the last node the envelope decays like r^{−2−2σ}
    err += last / (2.0 * sigma);
    Ok(Estimate { value: total, err })
}

fn oscillatory<F>(integrand: &Integrand<'_, F>, omega_abs: f64) -> Result<Estimate>
where
    F: Fn(&IwasawaPoint) -> Result<Complex64>,
{
    let mut base = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    let width = INNER_RADIUS / INNER_PANELS as f64;
    for k in 0..INNER_PANELS {
        let (v, e) = integrand.radial_panel(k as f64 * width, (k + 1) as f64 * width, 24)?;
        base += v;
        err += e;
    }
    let h = 1.0 / (4.0 * omega_abs);
    let mut partial = Vec::with_capacity(TAIL_SEGMENTS);
    let mut acc = base;
    let mut r = INNER_RADIUS;
    for _ in 0..TAIL_SEGMENTS {
        let (v, e) = integrand.radial_panel(r, r + h, TAIL_NODES)?;
        acc += v;
        err += e;
        r += h;
        partial.push(acc);
    }
    let mut previous = *partial.last().unwrap_or(&acc);
    let mut current = previous;
    for _ in 0..AVERAGING_ROUNDS {
        partial = partial.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect();
        previous = current;
        current = *partial.last().unwrap_or(&current);
    }
    err += (current - previous).norm();
    Ok(Estimate { value: current, err })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Identity {
    /// ω₁ = 0: 𝒥₀ ℳ_{ω₂} φ(ν, p) is a multiple of φ(−ν, −p).
    ZeroFrequency,
    /// ω₁ ≠ 0: 𝒥_{ω₁} ℳ_{ω₂} φ = 𝒥*_{ν,p}(4π√(ω₁ω₂)) 𝒥_{ω₁} φ.
    Bessel,
}

#[derive(Clone, Debug, Serialize)]
pub struct GwEntry {
    pub point: IwasawaPoint,
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub quadrature_err: f64,
    pub rel_deviation: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GwReport {
    pub identity: Identity,
    pub weight: ComplexWeight,
    pub omega1: Complex64,
    pub omega2: Complex64,
    pub entries: Vec<GwEntry>,
    pub max_rel_deviation: f64,
}

/// Checks both Goodman–Wallach identities by quadrature of the Jacquet
/// integral of ℳ_{ω₂} φ at each sample point.
pub fn verify_gw_identities(
    omega1: Complex64,
    omega2: Complex64,
    weight: &ComplexWeight,
    samples: &[IwasawaPoint],
) -> Result<GwReport> {
    let nu = weight.nu;
    if !(nu.re > 0.0) {
        return Err(Error::Precondition(format!("the identities need Re ν > 0, got ν = {nu}")));
    }
    let gw = JacquetExpansion::new(*weight, omega2)?;
    let f = |h: &IwasawaPoint| gw.goodman_wallach(h);
    let growth = Some(GrowthCertificate { sigma: nu.re });
    let identity = if omega1.norm() == 0.0 { Identity::ZeroFrequency } else { Identity::Bessel };
    let rhs_at = |g: &IwasawaPoint| -> Result<Complex64> {
        let (l, p) = (weight.l as f64, weight.p as f64);
        match identity {
            Identity::ZeroFrequency => {
                let factor = sin_pi(nu - p) / (nu * nu - p * p)
                    * rgamma(l + 1.0 + nu)
                    / rgamma(l + 1.0 - nu);
                Ok(factor * phi_eval(&weight.with_nu_p(-nu, -weight.p), g)?)
            }
            Identity::Bessel => {
                let z = 4.0 * PI * (omega1 * omega2).sqrt();
                let kernel = jstar_pair(nu, weight.p, z).value;
                Ok(kernel * JacquetExpansion::new(*weight, omega1)?.jacquet(g)?)
            }
        }
    };
    let mut entries = Vec::with_capacity(samples.len());
    let mut first_error = None;
    for g in samples {
        let rhs = rhs_at(g)?;
        match jacquet_numeric(omega1, &f, growth, g, GW_QUADRATURE_TOL) {
            Ok(lhs) => {
                let rel = (lhs.value - rhs).norm() / rhs.norm();
                entries.push(GwEntry {
                    point: *g,
                    lhs: lhs.value,
                    rhs,
                    quadrature_err: lhs.err,
                    rel_deviation: rel,
                });
            }
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    let max_rel_deviation = entries.iter().map(|e| e.rel_deviation).fold(0.0, f64::max);
    let report = GwReport {
        identity,
        weight: *weight,
        omega1,
        omega2,
        entries,
        max_rel_deviation,
    };
    match first_error {
        Some(Error::Accuracy { message, achieved }) => Err(Error::Accuracy {
            message: format!(
                "{message}; partial report: {}",
                serde_json::to_string(&report).unwrap_or_default()
            ),
            achieved,
        }),
        Some(e) => Err(e),
        None => Ok(report),
    }
}
