//! Run provenance: every stage writes a `run_<stage>.json` record holding
//! the effective configuration, SHA-256 digests of its inputs, and the list
//! of files it produced. The embedded timestamp is the only output of the
//! whole pipeline that varies between identical runs.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use time::format_description::well_known::Rfc3339;
use time::OffsetDateTime;

use crate::failure::Failure;

#[derive(Debug, Serialize)]
struct InputDigest {
    path: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct RunRecord {
    stage: String,
    created_utc: String,
    tool_version: String,
    config: serde_json::Value,
    inputs: Vec<InputDigest>,
    outputs: Vec<String>,
}

pub fn sha256_file(path: &Path) -> Result<String, Failure> {
    let bytes = fs::read(path)
        .map_err(|e| Failure::data(format!("cannot read {}: {e}", path.display())))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(format!("{:x}", hasher.finalize()))
}

/// Writes `run_<stage>.json` into `out_dir`.
pub fn write_run_record(
    out_dir: &Path,
    stage: &str,
    config: serde_json::Value,
    inputs: &[PathBuf],
    outputs: &[String],
) -> Result<(), Failure> {
    let mut digests = Vec::with_capacity(inputs.len());
    for input in inputs {
        // stage artifacts are recorded relative to the output directory so
        // identical runs into different directories leave identical records
        let shown = input.strip_prefix(out_dir).unwrap_or(input);
        digests.push(InputDigest {
            path: shown.display().to_string(),
            sha256: sha256_file(input)?,
        });
    }
    let record = RunRecord {
        stage: stage.to_string(),
        created_utc: OffsetDateTime::now_utc()
            .format(&Rfc3339)
            .map_err(|e| Failure::data(format!("cannot format timestamp: {e}")))?,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config,
        inputs: digests,
        outputs: outputs.to_vec(),
    };
    let path = out_dir.join(format!("run_{stage}.json"));
    let json = serde_json::to_string_pretty(&record)
        .map_err(|e| Failure::data(format!("cannot serialize run record: {e}")))?;
    fs::write(&path, json + "\n")
        .map_err(|e| Failure::data(format!("cannot write {}: {e}", path.display())))
}
