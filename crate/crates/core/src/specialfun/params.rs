use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

const BRANCH_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlaceKind {
    Real,
    Complex,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RealSeries {
    Principal,
    Complementary,
    Discrete,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralParam {
    pub place_kind: PlaceKind,
    pub nu: Complex64,
    #[serde(default)]
    pub p: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<u8>,
}

fn is_half_integer(x: f64) -> bool {
    ((x - 0.5) - (x - 0.5).round()).abs() <= BRANCH_TOL
}

impl SpectralParam {
    pub fn real(nu: Complex64, eps: Option<u8>) -> Result<Self> {
        let s = SpectralParam { place_kind: PlaceKind::Real, nu, p: 0, eps };
        s.validate()?;
        Ok(s)
    }

    pub fn complex(nu: Complex64, p: i64) -> Result<Self> {
        let s = SpectralParam { place_kind: PlaceKind::Complex, nu, p, eps: None };
        s.validate()?;
        Ok(s)
    }

    pub fn real_series(&self) -> Option<RealSeries> {
        if self.place_kind != PlaceKind::Real {
            return None;
        }
        let nu = self.nu;
        if nu.re.abs() <= BRANCH_TOL {
            Some(RealSeries::Principal)
        } else if nu.im.abs() <= BRANCH_TOL && nu.re.abs() < 0.5 {
            Some(RealSeries::Complementary)
        } else if nu.im.abs() <= BRANCH_TOL && is_half_integer(nu.re) {
            Some(RealSeries::Discrete)
        } else {
            None
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nu = self.nu;
        if !nu.re.is_finite() || !nu.im.is_finite() {
            return domain(format!("spectral parameter ν = {nu} is not finite"));
        }
        match self.place_kind {
            PlaceKind::Real => {
                if matches!(self.eps, Some(e) if e > 1) {
                    return domain("sign character ε must be 0 or 1");
                }
                if self.real_series().is_none() {
                    return domain(format!(
                        "real spectral parameter ν = {nu} is not in iℝ ∪ (ℤ+1/2) ∪ (−1/2,1/2)"
                    ));
                }
            }
            PlaceKind::Complex => {
                let principal = nu.re.abs() <= BRANCH_TOL;
                let complementary = nu.im.abs() <= BRANCH_TOL
                    && nu.re.abs() < 0.5
                    && nu.re.abs() > BRANCH_TOL
                    && self.p == 0;
                if !principal && !complementary {
                    return domain(format!(
                        "complex spectral parameter (ν, p) = ({nu}, {}) needs ν ∈ iℝ, or ν ∈ (−1/2,1/2)∖{{0}} with p = 0",
                        self.p
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub place_kind: PlaceKind,
    pub q: i64,
    #[serde(default)]
    pub l: i64,
}

impl WeightSpec {
    pub fn real(q: i64) -> Result<Self> {
        let w = WeightSpec { place_kind: PlaceKind::Real, q, l: 0 };
        w.validate(None)?;
        Ok(w)
    }

    pub fn complex(l: i64, q: i64) -> Result<Self> {
        let w = WeightSpec { place_kind: PlaceKind::Complex, q, l };
        w.validate(None)?;
        Ok(w)
    }

    pub fn validate(&self, spectral: Option<&SpectralParam>) -> Result<()> {
        if let Some(s) = spectral {
            if s.place_kind != self.place_kind {
                return domain("weight and spectral parameter belong to different place kinds");
            }
        }
        match self.place_kind {
            PlaceKind::Real => {
                if self.q % 2 != 0 {
                    return domain(format!("real weight q = {} must be even", self.q));
                }
            }
            PlaceKind::Complex => {
                if self.q.abs() > self.l {
                    return domain(format!("complex weight needs |q| ≤ l, got (l, q) = ({}, {})", self.l, self.q));
                }
                if let Some(s) = spectral {
                    if s.p.abs() > self.l {
                        return domain(format!("complex weight needs l ≥ |p|, got l = {}, p = {}", self.l, s.p));
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn real_branches() {
        assert_eq!(SpectralParam::real(c(0.0, 3.1), None).unwrap().real_series(), Some(RealSeries::Principal));
        assert_eq!(SpectralParam::real(c(0.2, 0.0), Some(1)).unwrap().real_series(), Some(RealSeries::Complementary));
        assert_eq!(SpectralParam::real(c(2.5, 0.0), None).unwrap().real_series(), Some(RealSeries::Discrete));
        assert!(SpectralParam::real(c(2.3, 0.0), None).is_err());
        assert!(SpectralParam::real(c(0.2, 0.1), None).is_err());
        assert!(SpectralParam::real(c(0.0, 1.0), Some(2)).is_err());
    }

    #[test]
    fn complex_branches() {
        assert!(SpectralParam::complex(c(0.0, 1.0), 3).is_ok());
        assert!(SpectralParam::complex(c(0.3, 0.0), 0).is_ok());
        assert!(SpectralParam::complex(c(0.3, 0.0), 1).is_err());
        assert!(SpectralParam::complex(c(0.7, 0.0), 0).is_err());
    }

    #[test]
    fn weights() {
        assert!(WeightSpec::real(4).is_ok());
        assert!(WeightSpec::real(3).is_err());
        let w = WeightSpec::complex(1, 1).unwrap();
        assert!(WeightSpec::complex(1, 2).is_err());
        let s = SpectralParam::complex(c(0.0, 1.0), 2).unwrap();
        assert!(w.validate(Some(&s)).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let s = SpectralParam::complex(c(0.0, 1.5), -1).unwrap();
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<SpectralParam>(&text).unwrap(), s);
    }
}
