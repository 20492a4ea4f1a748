//! JSON-lines files with a schema header, written atomically.
//!
//! Every file this crate writes starts with a header line
//! `{"schema_version":1,"kind":"<record kind>"}` followed by one JSON record
//! per line. Readers tolerate a missing header — plain JSONL produced by
//! other tools loads fine — but reject an unsupported version or a header
//! whose kind names a different record type.
//!
//! Writes land in a temporary file in the destination directory and rename
//! into place, so an interrupted run never leaves a truncated file at the
//! final path.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u64 = 1;

/// Record-kind names used in schema headers, shared by writers and readers.
pub mod kinds {
    pub const FOCAL_METHODS: &str = "focal_methods";
    pub const ASSERT_PAIRS: &str = "assert_pairs";
    pub const MASKED_PAIRS: &str = "masked_pairs";
    pub const SPLIT_MANIFEST: &str = "split_manifest";
    pub const TEST_CASES: &str = "test_cases";
    pub const REPAIR_REPORTS: &str = "repair_reports";
    pub const RUN_RECORDS: &str = "run_records";
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

/// Write `bytes` to `path` atomically (temp file + rename).
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let wrap = |source: std::io::Error| Error::WriteOutput { path: display(path), source };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(wrap)?;
    tmp.write_all(bytes).map_err(wrap)?;
    tmp.persist(path).map_err(|e| wrap(e.error))?;
    Ok(())
}

/// Serialize records as a header line plus one JSON object per line.
pub fn write_jsonl<T: Serialize>(path: &Path, kind: &str, records: &[T]) -> Result<()> {
    let wrap = |e: serde_json::Error| Error::WriteOutput {
        path: display(path),
        source: std::io::Error::new(std::io::ErrorKind::InvalidData, e),
    };
    let mut buf = format!("{{\"schema_version\":{SCHEMA_VERSION},\"kind\":\"{kind}\"}}\n");
    for r in records {
        buf.push_str(&serde_json::to_string(r).map_err(wrap)?);
        buf.push('\n');
    }
    write_atomic(path, buf.as_bytes())
}

/// Serialize one value as a pretty-printed JSON document.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let wrap = |e: serde_json::Error| Error::WriteOutput {
        path: display(path),
        source: std::io::Error::new(std::io::ErrorKind::InvalidData, e),
    };
    let mut buf = serde_json::to_string_pretty(value).map_err(wrap)?;
    buf.push('\n');
    write_atomic(path, buf.as_bytes())
}

/// Read records from a JSONL file, tolerating an absent header line.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path, kind: &str) -> Result<Vec<T>> {
    let text = fs::read_to_string(path)
        .map_err(|source| Error::ReadInput { path: display(path), source })?;
    parse_jsonl(&text, kind, &display(path))
}

fn parse_jsonl<T: DeserializeOwned>(text: &str, kind: &str, path: &str) -> Result<Vec<T>> {
    let mut records = Vec::new();
    let mut first = true;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if std::mem::take(&mut first) {
            if let Ok(serde_json::Value::Object(map)) = serde_json::from_str(line) {
                if map.contains_key("schema_version") {
                    check_header(&map, kind, path)?;
                    continue;
                }
            }
        }
        match serde_json::from_str::<T>(line) {
            Ok(r) => records.push(r),
            Err(e) => {
                return Err(Error::MalformedRecord {
                    path: path.to_string(),
                    line: i + 1,
                    message: e.to_string(),
                })
            }
        }
    }
    Ok(records)
}

fn check_header(
    map: &serde_json::Map<String, serde_json::Value>,
    kind: &str,
    path: &str,
) -> Result<()> {
    let version = map.get("schema_version").and_then(serde_json::Value::as_u64);
    if version != Some(SCHEMA_VERSION) {
        return Err(Error::SchemaMismatch {
            path: path.to_string(),
            message: format!(
                "schema_version {} (this build reads {SCHEMA_VERSION})",
                map["schema_version"]
            ),
        });
    }
    if let Some(actual) = map.get("kind").and_then(serde_json::Value::as_str) {
        if actual != kind {
            return Err(Error::SchemaMismatch {
                path: path.to_string(),
                message: format!("kind is \"{actual}\", expected \"{kind}\""),
            });
        }
    }
    Ok(())
}
