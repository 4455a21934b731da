use std::path::Path;

use kuznetsov::{Error, Result};
use toml::Value;

const GLOBAL_VALUED: [&str; 4] = ["--format", "--threads", "--seed", "--config"];

fn config_path(args: &[String]) -> Option<String> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_string());
        }
    }
    None
}

/// Index of the subcommand token: the first positional argument that is not
/// the value of a global option.
fn subcommand_index(args: &[String]) -> Option<usize> {
    let mut i = 1;
    while i < args.len() {
        let a = &args[i];
        if GLOBAL_VALUED.contains(&a.as_str()) {
            i += 2;
            continue;
        }
        if !a.starts_with('-') {
            return Some(i);
        }
        i += 1;
    }
    None
}

fn scalar(v: &Value) -> Result<Option<String>> {
    Ok(match v {
        Value::String(s) => Some(s.clone()),
        Value::Integer(n) => Some(n.to_string()),
        Value::Float(x) => Some(x.to_string()),
        Value::Boolean(_) => None,
        other => return Err(Error::Config(format!("unsupported config value {other}"))),
    })
}

/// Flag tokens for one config key: scalars give `--key value`, booleans a
/// bare flag when true, arrays of scalars one comma-joined value, and arrays
/// of arrays one occurrence per inner array.
fn flag_tokens(key: &str, v: &Value) -> Result<Vec<String>> {
    let flag = format!("--{}", key.replace('_', "-"));
    let joined = |items: &[Value]| -> Result<String> {
        let parts = items
            .iter()
            .map(|x| scalar(x)?.ok_or_else(|| Error::Config(format!("{key}: booleans cannot be list items"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(parts.join(","))
    };
    Ok(match v {
        Value::Boolean(true) => vec![flag],
        Value::Boolean(false) => vec![],
        Value::Array(items) if items.iter().all(Value::is_array) => {
            let mut out = Vec::new();
            for inner in items {
                out.push(flag.clone());
                out.push(joined(inner.as_array().expect("checked"))?);
            }
            out
        }
        Value::Array(items) => vec![flag, joined(items)?],
        Value::Table(_) => return Err(Error::Config(format!("'{key}' must not be a table here"))),
        other => vec![flag, scalar(other)?.expect("non-boolean scalar")],
    })
}

fn given(args: &[String], key: &str) -> bool {
    let flag = format!("--{}", key.replace('_', "-"));
    args.iter().any(|a| *a == flag || a.starts_with(&format!("{flag}=")))
}

/// Merges a TOML config into the argument list. Top-level keys are global
/// flags; the table named after the subcommand holds its flags. Flags given
/// on the command line win.
pub fn expand(args: Vec<String>) -> Result<Vec<String>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    if path.ends_with(".json") {
        return Ok(instance_shorthand(args));
    }
    let text = std::fs::read_to_string(Path::new(&path)).map_err(|e| Error::Config(format!("{path}: {e}")))?;
    let table: toml::Table = text.parse().map_err(|e| Error::Config(format!("{path}: {e}")))?;
    let sub = subcommand_index(&args);
    let mut globals = Vec::new();
    let mut locals = Vec::new();
    for (key, value) in &table {
        match value {
            Value::Table(inner) => {
                let matches = sub.is_some_and(|i| args[i] == *key);
                if !matches {
                    continue;
                }
                for (k, v) in inner {
                    if !given(&args, k) {
                        locals.extend(flag_tokens(k, v)?);
                    }
                }
            }
            _ if key == "config" => {}
            _ => {
                if !given(&args, key) {
                    globals.extend(flag_tokens(key, value)?);
                }
            }
        }
    }
    let mut out = Vec::with_capacity(args.len() + globals.len() + locals.len());
    out.push(args[0].clone());
    out.extend(globals);
    match sub {
        Some(i) => {
            out.extend(args[1..=i].iter().cloned());
            out.extend(locals);
            out.extend(args[i + 1..].iter().cloned());
        }
        None => out.extend(args[1..].iter().cloned()),
    }
    Ok(out)
}

/// `--config inst.json` names the formula instance of geometric-side and
/// residual.
fn instance_shorthand(args: Vec<String>) -> Vec<String> {
    let mut out = Vec::with_capacity(args.len());
    let it = args.into_iter();
    for a in it {
        if a == "--config" {
            out.push("--instance".to_string());
        } else if let Some(p) = a.strip_prefix("--config=") {
            out.push(format!("--instance={p}"));
        } else {
            out.push(a);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argv(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn merges_globals_and_subcommand_table() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(
            &path,
            "seed = 7\nformat = \"csv\"\n[transform]\nfield = \"Q\"\na = [2.0]\nz = [[\"0.5\"], [\"1.5\"]]\n[verify]\nscope = \"gw\"\n",
        )
        .unwrap();
        let args = argv(&format!("k --config {} --seed 3 transform --a 3", path.display()));
        let out = expand(args).unwrap();
        let want = format!("k --format csv --config {} --seed 3 transform --field Q --z 0.5 --z 1.5 --a 3", path.display());
        assert_eq!(out, argv(&want));
    }

    #[test]
    fn json_config_names_the_instance() {
        let out = expand(argv("k geometric-side --config inst.json")).unwrap();
        assert_eq!(out, argv("k geometric-side --instance inst.json"));
    }

    #[test]
    fn no_config_is_identity() {
        let args = argv("k verify --scope gw");
        assert_eq!(expand(args.clone()).unwrap(), args);
    }

    #[test]
    fn bad_file_is_config_error() {
        let err = expand(argv("k --config /nonexistent/x.toml verify")).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }
}
