//! Config loading: file (JSON or TOML) plus `--set key=value` overrides,
//! checked against the [`SweepConfig`] schema.

use std::path::Path;

use jumppolymer::experiments::SweepConfig;
use serde_json::{Map, Value};

/// A configuration problem; the message names the offending key.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {msg}")]
    Read { path: String, msg: String },
    #[error("cannot parse {path}: {msg}")]
    Parse { path: String, msg: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("override `{0}` is not of the form key=value")]
    Malformed(String),
    #[error("key `{key}`: {msg}")]
    Invalid { key: String, msg: String },
}

/// The effective configuration together with the raw file bytes (if any).
pub struct Loaded {
    pub config: SweepConfig,
    pub input: Vec<u8>,
}

/// Reads `path` (if given), applies `overrides` in order and an optional seed.
pub fn load(path: Option<&Path>, overrides: &[String], seed: Option<u64>) -> Result<Loaded, ConfigError> {
    let (mut doc, input) = match path {
        Some(p) => {
            let shown = p.display().to_string();
            let bytes = std::fs::read(p).map_err(|e| ConfigError::Read { path: shown.clone(), msg: e.to_string() })?;
            (parse_document(&bytes, p)?, bytes)
        }
        None => (Value::Object(Map::new()), Vec::new()),
    };
    let schema = serde_json::to_value(SweepConfig::default()).expect("default config serializes");
    for o in overrides {
        apply_override(&mut doc, &schema, o)?;
    }
    if let Some(s) = seed {
        doc.as_object_mut().expect("config root is an object").insert("seed".into(), Value::from(s));
    }
    let config: SweepConfig = serde_path_to_error::deserialize(doc).map_err(|e| {
        let key = e.path().to_string();
        let msg = e.into_inner().to_string();
        // the path already ends in the offending field
        if msg.starts_with("unknown field") {
            ConfigError::UnknownKey(key)
        } else {
            ConfigError::Invalid { key, msg }
        }
    })?;
    Ok(Loaded { config, input })
}

fn parse_document(bytes: &[u8], path: &Path) -> Result<Value, ConfigError> {
    let shown = path.display().to_string();
    let text = std::str::from_utf8(bytes).map_err(|e| ConfigError::Parse { path: shown.clone(), msg: e.to_string() })?;
    let is_toml = path.extension().is_some_and(|e| e == "toml");
    let doc = if is_toml {
        let t: toml::Value = toml::from_str(text).map_err(|e| ConfigError::Parse { path: shown.clone(), msg: e.to_string() })?;
        toml_to_json(t)
    } else {
        serde_json::from_str(text).map_err(|e| ConfigError::Parse { path: shown.clone(), msg: e.to_string() })?
    };
    if !doc.is_object() {
        return Err(ConfigError::Parse { path: shown, msg: "top level must be a table".into() });
    }
    Ok(doc)
}

/// TOML to JSON, spelling non-finite floats as the strings the schema accepts.
fn toml_to_json(v: toml::Value) -> Value {
    match v {
        toml::Value::String(s) => Value::String(s),
        toml::Value::Integer(i) => Value::from(i),
        toml::Value::Float(f) if f.is_finite() => Value::from(f),
        toml::Value::Float(f) => Value::String(jumppolymer::experiments::format_float(f)),
        toml::Value::Boolean(b) => Value::Bool(b),
        toml::Value::Datetime(d) => Value::String(d.to_string()),
        toml::Value::Array(a) => Value::Array(a.into_iter().map(toml_to_json).collect()),
        toml::Value::Table(t) => Value::Object(t.into_iter().map(|(k, v)| (k, toml_to_json(v))).collect()),
    }
}

/// Parses one override value; bare words become strings, and a comma list
/// becomes an array when the schema slot is an array.
fn parse_value(raw: &str, slot: &Value) -> Value {
    let one = |s: &str| serde_json::from_str(s.trim()).unwrap_or_else(|_| Value::String(s.trim().to_string()));
    match (slot, one(raw)) {
        (Value::Array(_), v @ Value::Array(_)) => v,
        (Value::Array(_), _) => Value::Array(raw.split(',').map(one).collect()),
        (_, v) => v,
    }
}

fn apply_override(doc: &mut Value, schema: &Value, item: &str) -> Result<(), ConfigError> {
    let (key, raw) = item.split_once('=').ok_or_else(|| ConfigError::Malformed(item.to_string()))?;
    let key = key.trim();
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(ConfigError::Malformed(item.to_string()));
    }
    let mut slot = schema;
    for p in &parts {
        slot = slot.get(p).ok_or_else(|| ConfigError::UnknownKey(key.to_string()))?;
    }
    let value = parse_value(raw, slot);
    let mut node = doc;
    for (i, p) in parts.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| ConfigError::Invalid { key: parts[..i].join("."), msg: "expected a table".into() })?;
        if i + 1 == parts.len() {
            obj.insert(p.to_string(), value);
            break;
        }
        node = obj.entry(p.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use jumppolymer::Beta;

    fn set(items: &[&str]) -> Result<SweepConfig, ConfigError> {
        let v: Vec<String> = items.iter().map(|s| s.to_string()).collect();
        load(None, &v, None).map(|l| l.config)
    }

    #[test]
    fn overrides_are_typed() {
        let c = set(&["alpha=1.5", "p=0.9,0.99", "beta=-inf,-2", "truncation.clip=64", "n=[8]"]).unwrap();
        assert_eq!(c.alpha, 1.5);
        assert_eq!(c.p, vec![0.9, 0.99]);
        assert_eq!(c.beta, vec![Beta::NegInf, Beta::Finite(-2.0)]);
        assert_eq!(c.truncation.clip, Some(64));
        assert_eq!(c.n, vec![8]);
    }

    #[test]
    fn errors_name_the_key() {
        assert!(matches!(set(&["alpah=1"]), Err(ConfigError::UnknownKey(k)) if k == "alpah"));
        assert!(matches!(set(&["truncation.foo=1"]), Err(ConfigError::UnknownKey(k)) if k == "truncation.foo"));
        match set(&["replicas=many"]) {
            Err(ConfigError::Invalid { key, .. }) => assert_eq!(key, "replicas"),
            other => panic!("{:?}", other.map(|_| ())),
        }
        assert!(matches!(set(&["alpha"]), Err(ConfigError::Malformed(_))));
    }

    #[test]
    fn toml_neg_inf_is_accepted() {
        let doc = parse_document(b"beta = [-inf, 0.5]\n[truncation]\nclip = 32\n", Path::new("c.toml")).unwrap();
        let c: SweepConfig = serde_json::from_value(doc).unwrap();
        assert_eq!(c.beta, vec![Beta::NegInf, Beta::Finite(0.5)]);
        assert_eq!(c.truncation.clip, Some(32));
    }

    #[test]
    fn unknown_file_key_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"truncation": {"clipp": 3}}"#).unwrap();
        let e = load(Some(&path), &[], None).err().unwrap();
        assert!(matches!(&e, ConfigError::UnknownKey(k) if k == "truncation.clipp"), "{e}");
    }
}
