//! Canonical JSON output: sorted object keys, shortest round-trip floats,
//! two-space indentation and a trailing newline.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// Serializes `value` canonically.
///
/// Going through [`serde_json::Value`] sorts every object's keys, so the
/// output does not depend on struct field order or map iteration order.
pub fn to_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let value = serde_json::to_value(value).map_err(|e| Error::parse("serialize", e))?;
    let mut out = serde_json::to_string_pretty(&value).map_err(|e| Error::parse("serialize", e))?;
    out.push('\n');
    Ok(out)
}

/// Single-line canonical form, used for JSONL records.
pub fn to_line<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let value = serde_json::to_value(value).map_err(|e| Error::parse("serialize", e))?;
    serde_json::to_string(&value).map_err(|e| Error::parse("serialize", e))
}

pub fn write<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_string(value)?).map_err(|e| Error::io(path, e))
}

pub fn write_lines<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let mut out = String::new();
    for record in records {
        out.push_str(&to_line(record)?);
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}
