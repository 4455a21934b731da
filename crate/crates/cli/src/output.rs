use kuznetsov::{Error, Result};
use serde::Serialize;
use serde_json::Value;

use crate::Format;

pub fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Input(_) => "input",
        Error::Domain(_) => "domain",
        Error::Precondition(_) => "precondition",
        Error::Accuracy { .. } => "accuracy",
        Error::Internal(_) => "internal",
        Error::Config(_) => "config",
        Error::Parse(_) => "parse",
        Error::NotFound(_) => "not_found",
        Error::Network { .. } => "network",
        Error::Io(_) => "io",
    }
}

pub fn render<T: Serialize>(value: &T, format: Format) -> Result<String> {
    let json = serde_json::to_value(value).map_err(|e| Error::Internal(format!("serialization: {e}")))?;
    match format {
        Format::Json => {
            let mut text = serde_json::to_string_pretty(&json).map_err(|e| Error::Internal(e.to_string()))?;
            text.push('\n');
            Ok(text)
        }
        Format::Csv => to_csv(&json),
    }
}

/// Tables render row-wise: an array of objects under `result.checks` or
/// `result.rows` becomes one row per element. Anything else is flattened to
/// `path,value` pairs.
fn to_csv(json: &Value) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Internal(format!("csv: {e}"));
    let table = ["checks", "rows"]
        .iter()
        .find_map(|k| json.pointer(&format!("/result/{k}")).and_then(Value::as_array))
        .filter(|rows| rows.iter().all(Value::is_object) && !rows.is_empty());
    match table {
        Some(rows) => {
            let header: Vec<String> = rows[0].as_object().expect("object rows").keys().cloned().collect();
            writer.write_record(&header).map_err(csv_err)?;
            for row in rows {
                let cells: Vec<String> = header.iter().map(|k| cell(row.get(k).unwrap_or(&Value::Null))).collect();
                writer.write_record(&cells).map_err(csv_err)?;
            }
        }
        None => {
            writer.write_record(["path", "value"]).map_err(csv_err)?;
            let mut pairs = Vec::new();
            flatten("", json, &mut pairs);
            for (path, value) in pairs {
                writer.write_record([path, value]).map_err(csv_err)?;
            }
        }
    }
    let bytes = writer.into_inner().map_err(|e| Error::Internal(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Bool(_) | Value::Number(_) => v.to_string(),
        _ => v.to_string(),
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let join = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                flatten(&join(k), x, out);
            }
        }
        Value::Array(items) => {
            for (i, x) in items.iter().enumerate() {
                flatten(&join(&i.to_string()), x, out);
            }
        }
        _ => out.push((prefix.to_string(), cell(v))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn csv_table_and_flat() {
        let table = json!({ "result": { "checks": [{ "a": 1, "b": "x" }, { "a": 2, "b": null }] } });
        assert_eq!(render(&table, Format::Csv).unwrap(), "a,b\n1,x\n2,\n");
        let flat = json!({ "schema": "s", "result": { "v": [1.5, 2] } });
        assert_eq!(render(&flat, Format::Csv).unwrap(), "path,value\nschema,s\nresult.v.0,1.5\nresult.v.1,2\n");
    }

    #[test]
    fn json_ends_with_newline() {
        assert_eq!(render(&json!({ "a": 1 }), Format::Json).unwrap(), "{\n  \"a\": 1\n}\n");
    }
}
