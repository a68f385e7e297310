//! Versioned JSON documents: every top-level object carries
//! `"schema_version": 1`, and unknown fields are rejected by the typed
//! layer.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, FormatCode, Result};

pub const SCHEMA_VERSION: u64 = 1;
const VERSION_KEY: &str = "schema_version";

fn classify(e: &serde_json::Error) -> FormatCode {
    let msg = e.to_string();
    if msg.contains("unknown field") {
        FormatCode::JsonUnknownField
    } else if msg.contains("missing field") {
        FormatCode::JsonMissingField
    } else {
        FormatCode::JsonValue
    }
}

/// Checks and strips the version tag, then decodes `T`.
pub fn from_versioned_value<T: DeserializeOwned>(mut v: Value, path: &Path) -> Result<T> {
    let obj = v
        .as_object_mut()
        .ok_or_else(|| Error::format(FormatCode::JsonValue, path, "top-level value must be an object"))?;
    match obj.remove(VERSION_KEY) {
        None => {
            return Err(Error::format(FormatCode::SchemaVersion, path, "missing field `schema_version`"));
        }
        Some(Value::Number(n)) if n.as_u64() == Some(SCHEMA_VERSION) => {}
        Some(other) => {
            return Err(Error::format(
                FormatCode::SchemaVersion,
                path,
                format!("unsupported schema_version {other}, expected {SCHEMA_VERSION}"),
            ));
        }
    }
    serde_json::from_value(v).map_err(|e| Error::format(classify(&e), path, e.to_string()))
}

pub fn from_versioned_str<T: DeserializeOwned>(text: &str, path: &Path) -> Result<T> {
    let v: Value = serde_json::from_str(text).map_err(|e| Error::format(FormatCode::JsonParse, path, e.to_string()))?;
    from_versioned_value(v, path)
}

pub fn to_versioned_value<T: Serialize>(value: &T) -> Result<Value> {
    let mut v = serde_json::to_value(value).map_err(|e| Error::param("json", e.to_string()))?;
    let obj = v
        .as_object_mut()
        .ok_or_else(|| Error::param("json", "only objects can be versioned documents"))?;
    obj.insert(VERSION_KEY.into(), Value::from(SCHEMA_VERSION));
    Ok(v)
}

/// Pretty-printed document with a trailing newline.
pub fn to_versioned_string<T: Serialize>(value: &T) -> Result<String> {
    let v = to_versioned_value(value)?;
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| Error::param("json", e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_versioned_str(&text, path)
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    std::fs::write(path, to_versioned_string(value)?).map_err(|e| Error::io(path, e))
}
