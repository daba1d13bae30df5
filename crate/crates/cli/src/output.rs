//! Output plumbing: destinations, run metadata and config hashing.

use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::{Cli, CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

/// SHA-256 of the canonical JSON form of the parsed configuration, without
/// the output path.
pub fn config_hash(cli: &Cli) -> String {
    let mut value = serde_json::to_value(cli).expect("config serializes");
    if let Value::Object(map) = &mut value {
        map.remove("out");
    }
    let canonical = serde_json::to_string(&value).expect("config serializes");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

/// RFC 3339 UTC time, taken from `SOURCE_DATE_EPOCH` when set.
pub fn timestamp() -> CliResult<String> {
    let when = match std::env::var("SOURCE_DATE_EPOCH") {
        Ok(raw) => {
            let secs: i64 = raw.trim().parse().map_err(|_| {
                CliError::Config(format!("SOURCE_DATE_EPOCH is not an integer: `{raw}`"))
            })?;
            DateTime::<Utc>::from_timestamp(secs, 0).ok_or_else(|| {
                CliError::Config(format!("SOURCE_DATE_EPOCH out of range: {secs}"))
            })?
        }
        Err(_) => Utc::now(),
    };
    Ok(when.to_rfc3339_opts(SecondsFormat::Secs, true))
}

/// Common metadata block; command-specific fields are appended by callers.
pub fn metadata(cli: &Cli, command: &str) -> CliResult<Map<String, Value>> {
    let mut map = Map::new();
    map.insert("schema_version".into(), json!(SCHEMA_VERSION));
    map.insert("tool_version".into(), json!(env!("CARGO_PKG_VERSION")));
    map.insert("command".into(), json!(command));
    map.insert("config_hash".into(), json!(config_hash(cli)));
    map.insert("timestamp".into(), json!(timestamp()?));
    Ok(map)
}

/// Writes to `path`, or stdout when absent.
pub fn emit(path: Option<&Path>, content: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, content)
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(content.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Config(format!("cannot write to stdout: {e}")))
        }
    }
}

/// Sidecar path for metadata next to a data file: `curve.csv` → `curve.json`.
pub fn sidecar(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn pretty(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json serializes");
    s.push('\n');
    s
}
