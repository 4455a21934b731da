mod remote;

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numberfield::{ratio_to_f64, FieldDescriptor, FracIdeal};
use crate::specialfun::{PlaceKind, SpectralParam, WeightSpec};

pub use remote::{
    fetch_remote, FetchOptions, HttpResponse, RecordingTransport, RemoteQuery, Transport, UreqTransport,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    Lambda,
    Rho,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawWeight {
    #[serde(default)]
    pub l: i64,
    pub q: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawForm {
    /// One [re, im] pair per archimedean place.
    pub nu: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<Vec<Option<u8>>>,
    pub weight: Vec<RawWeight>,
    pub coeffs: BTreeMap<String, [f64; 2]>,
    pub convention: Convention,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub central_char: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDataset {
    pub version: u32,
    pub field: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    pub forms: Vec<RawForm>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MaassFormRecord {
    pub spectral: Vec<SpectralParam>,
    pub weight: Vec<WeightSpec>,
    /// λ at integral ideals, keyed by canonical ideal key.
    pub coeffs: BTreeMap<String, Complex64>,
    pub central_char: Option<String>,
    pub source: String,
}

impl MaassFormRecord {
    pub fn coefficient(&self, ideal: &FracIdeal) -> Option<Complex64> {
        self.coeffs.get(&ideal.key()).copied()
    }

    /// True when some real place lacks its sign character.
    pub fn sign_unknown(&self) -> bool {
        self.spectral.iter().any(|s| s.place_kind == PlaceKind::Real && s.eps.is_none())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Rejection {
    pub index: usize,
    pub constraint: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Dataset {
    pub field: FieldDescriptor,
    pub source: Option<String>,
    pub records: Vec<MaassFormRecord>,
    pub rejected: Vec<Rejection>,
}

fn parse_error(context: &str, e: serde_json::Error) -> Error {
    Error::Parse(format!("{context}: {e} (line {}, column {})", e.line(), e.column()))
}

fn validate_form(field: &FieldDescriptor, form: &RawForm, default_source: &str) -> Result<MaassFormRecord> {
    let places = field.place_count();
    let reject = |msg: String| Err(Error::Domain(msg));
    if form.nu.len() != places || form.weight.len() != places {
        return reject(format!("expected {places} entries in nu and weight"));
    }
    let p = form.p.clone().unwrap_or_else(|| vec![0; places]);
    let eps = form.eps.clone().unwrap_or_else(|| vec![None; places]);
    if p.len() != places || eps.len() != places {
        return reject(format!("expected {places} entries in p and eps"));
    }
    let mut spectral = Vec::with_capacity(places);
    let mut weight = Vec::with_capacity(places);
    for j in 0..places {
        let nu = Complex64::new(form.nu[j][0], form.nu[j][1]);
        let w = form.weight[j];
        let (s, ws) = if field.is_real_place(j) {
            if p[j] != 0 {
                return reject(format!("p must be 0 at real place {j}"));
            }
            (SpectralParam::real(nu, eps[j])?, WeightSpec::real(w.q)?)
        } else {
            if eps[j].is_some() {
                return reject(format!("sign character given at complex place {j}"));
            }
            (SpectralParam::complex(nu, p[j])?, WeightSpec::complex(w.l, w.q)?)
        };
        ws.validate(Some(&s))?;
        spectral.push(s);
        weight.push(ws);
    }
    let mut coeffs = BTreeMap::new();
    for (key, [re, im]) in &form.coeffs {
        let ideal = FracIdeal::parse_key(key, field)?;
        if ideal.is_zero() || !ideal.is_integral() {
            return reject(format!("coefficient at '{key}': λ is only defined at nonzero integral ideals"));
        }
        if !re.is_finite() || !im.is_finite() {
            return reject(format!("coefficient at '{key}' is not finite"));
        }
        let mut value = Complex64::new(*re, *im);
        if form.convention == Convention::Rho {
            value *= ratio_to_f64(&ideal.norm()).sqrt();
        }
        if coeffs.insert(ideal.key(), value).is_some() {
            return reject(format!("coefficient at '{key}' given twice"));
        }
    }
    Ok(MaassFormRecord {
        spectral,
        weight,
        coeffs,
        central_char: form.central_char.clone(),
        source: form.source.clone().unwrap_or_else(|| default_source.to_string()),
    })
}

/// Parses and validates a dataset. Records violating a domain constraint are
/// reported in `rejected` and dropped.
pub fn parse_dataset(text: &str, field: &FieldDescriptor, origin: &str) -> Result<Dataset> {
    let raw: RawDataset = serde_json::from_str(text).map_err(|e| parse_error(origin, e))?;
    if raw.version != SCHEMA_VERSION {
        return Err(Error::Parse(format!(
            "{origin}: schema version {} is not supported (expected {SCHEMA_VERSION})",
            raw.version
        )));
    }
    let declared = FieldDescriptor::parse(&raw.field).map_err(|e| Error::Parse(format!("{origin}: field: {e}")))?;
    if declared != *field {
        return Err(Error::Parse(format!(
            "{origin}: dataset is over {} but {} was requested",
            declared.name(),
            field.name()
        )));
    }
    let default_source = raw.source.clone().unwrap_or_else(|| origin.to_string());
    let mut records = Vec::new();
    let mut rejected = Vec::new();
    for (index, form) in raw.forms.iter().enumerate() {
        match validate_form(field, form, &default_source) {
            Ok(r) => records.push(r),
            Err(e) => rejected.push(Rejection { index, constraint: e.to_string() }),
        }
    }
    for r in &records {
        for (s, w) in r.spectral.iter().zip(&r.weight) {
            s.validate()?;
            w.validate(Some(s))?;
        }
    }
    Ok(Dataset { field: field.clone(), source: raw.source, records, rejected })
}

pub fn load_dataset(path: &Path, field: &FieldDescriptor) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_dataset(&text, field, &path.display().to_string())
}

/// Canonical serialization: λ-convention, canonical ideal keys, per-record
/// sources, rejected records dropped.
pub fn to_raw(dataset: &Dataset) -> RawDataset {
    let forms = dataset
        .records
        .iter()
        .map(|r| {
            let has_p = r.spectral.iter().any(|s| s.p != 0);
            let has_eps = r.spectral.iter().any(|s| s.eps.is_some());
            RawForm {
                nu: r.spectral.iter().map(|s| [s.nu.re, s.nu.im]).collect(),
                p: has_p.then(|| r.spectral.iter().map(|s| s.p).collect()),
                eps: has_eps.then(|| r.spectral.iter().map(|s| s.eps).collect()),
                weight: r.weight.iter().map(|w| RawWeight { l: w.l, q: w.q }).collect(),
                coeffs: r.coeffs.iter().map(|(k, v)| (k.clone(), [v.re, v.im])).collect(),
                convention: Convention::Lambda,
                central_char: r.central_char.clone(),
                source: Some(r.source.clone()),
            }
        })
        .collect();
    RawDataset {
        version: SCHEMA_VERSION,
        field: dataset.field.name(),
        source: dataset.source.clone(),
        forms,
    }
}

pub fn canonical_json(dataset: &Dataset) -> String {
    let mut out = serde_json::to_string_pretty(&to_raw(dataset)).expect("dataset serializes");
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q() -> FieldDescriptor {
        FieldDescriptor::rational()
    }

    #[test]
    fn empty_dataset() {
        let d = parse_dataset(r#"{"version": 1, "field": "Q", "forms": []}"#, &q(), "t").unwrap();
        assert!(d.records.is_empty() && d.rejected.is_empty());
    }

    #[test]
    fn rejects_out_of_domain_nu() {
        let text = r#"{"version": 1, "field": "Q", "forms": [
            {"nu": [[2.3, 0]], "weight": [{"q": 0}], "coeffs": {"1": [1, 0]}, "convention": "lambda"},
            {"nu": [[0, 9.53]], "weight": [{"q": 0}], "coeffs": {"1": [1, 0]}, "convention": "lambda"}
        ]}"#;
        let d = parse_dataset(text, &q(), "t").unwrap();
        assert_eq!(d.records.len(), 1);
        assert_eq!(d.rejected.len(), 1);
        assert_eq!(d.rejected[0].index, 0);
        assert!(d.rejected[0].constraint.contains("not in iℝ ∪ (ℤ+1/2) ∪ (−1/2,1/2)"));
    }

    #[test]
    fn rho_convention_scales_by_root_norm() {
        let text = r#"{"version": 1, "field": "Q", "forms": [
            {"nu": [[0, 9.53]], "weight": [{"q": 0}], "coeffs": {"1": [1, 0], "4": [0.25, -0.5]}, "convention": "rho"}
        ]}"#;
        let d = parse_dataset(text, &q(), "t").unwrap();
        assert_eq!(d.records[0].coeffs["4"], Complex64::new(0.5, -1.0));
        assert_eq!(d.records[0].coeffs["1"], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn schema_errors_carry_location() {
        let err = parse_dataset("{\"version\": 1,\n \"field\": \"Q\"}", &q(), "t").unwrap_err();
        match err {
            Error::Parse(m) => assert!(m.contains("forms") && m.contains("line 2"), "{m}"),
            e => panic!("{e}"),
        }
        let err = parse_dataset(r#"{"version": 7, "field": "Q", "forms": []}"#, &q(), "t").unwrap_err();
        assert!(matches!(err, Error::Parse(_)));
        let err = parse_dataset(r#"{"version": 1, "field": "Q(sqrt(2))", "forms": []}"#, &q(), "t").unwrap_err();
        assert!(matches!(err, Error::Parse(_)));
    }

    #[test]
    fn nonintegral_coefficient_rejected() {
        let text = r#"{"version": 1, "field": "Q", "forms": [
            {"nu": [[0, 9.53]], "weight": [{"q": 0}], "coeffs": {"1/2": [1, 0]}, "convention": "lambda"}
        ]}"#;
        let d = parse_dataset(text, &q(), "t").unwrap();
        assert!(d.records.is_empty());
        assert!(d.rejected[0].constraint.contains("integral"));
    }

    #[test]
    fn quadratic_record() {
        let f = FieldDescriptor::quadratic(-1).unwrap();
        let text = r#"{"version": 1, "field": "Q(sqrt(-1))", "forms": [
            {"nu": [[0, 3.0]], "p": [1], "weight": [{"l": 1, "q": 0}], "coeffs": {"1,0,1": [1, 0]}, "convention": "lambda"},
            {"nu": [[0, 3.0]], "p": [2], "weight": [{"l": 1, "q": 0}], "coeffs": {"1,0,1": [1, 0]}, "convention": "lambda"}
        ]}"#;
        let d = parse_dataset(text, &f, "t").unwrap();
        assert_eq!(d.records.len(), 1);
        assert_eq!(d.records[0].spectral[0].p, 1);
        assert!(d.rejected[0].constraint.contains("l ≥ |p|"));
    }

    #[test]
    fn canonical_round_trip() {
        let text = r#"{"version": 1, "field": "Q", "source": "hand",
          "forms": [
            {"nu": [[0, 13.7797513519]], "eps": [1], "weight": [{"q": 0}], "coeffs": {"2": [0.1, 0], "1": [1, 0]}, "convention": "rho"},
            {"nu": [[0.2, 0]], "weight": [{"q": 2}], "coeffs": {"1": [1, 0]}, "convention": "lambda", "central_char": "trivial"}
        ]}"#;
        let first = canonical_json(&parse_dataset(text, &q(), "t").unwrap());
        let second = canonical_json(&parse_dataset(&first, &q(), "t").unwrap());
        assert_eq!(first, second);
        assert!(first.contains("\"convention\": \"lambda\""));
    }
}
