//! JSON containers for bases and snapshots.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Snapshot;
use crate::reduced::ReducedBasis;

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn save_basis(path: &Path, basis: &ReducedBasis) -> Result<()> {
    write_json(path, basis)
}

/// Loads a basis, refusing one built for a different mesh.
pub fn load_basis(path: &Path, expected_fingerprint: Option<&str>) -> Result<ReducedBasis> {
    let basis: ReducedBasis = read_json(path)?;
    check_fingerprint(expected_fingerprint, &basis.fingerprint)?;
    Ok(basis)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotFile {
    pub fingerprint: String,
    pub snapshots: Vec<Snapshot>,
}

pub fn save_snapshots(path: &Path, fingerprint: &str, snapshots: &[Snapshot]) -> Result<()> {
    write_json(
        path,
        &SnapshotFile {
            fingerprint: fingerprint.to_string(),
            snapshots: snapshots.to_vec(),
        },
    )
}

pub fn load_snapshots(path: &Path, expected_fingerprint: Option<&str>) -> Result<Vec<Snapshot>> {
    let file: SnapshotFile = read_json(path)?;
    check_fingerprint(expected_fingerprint, &file.fingerprint)?;
    Ok(file.snapshots)
}

fn check_fingerprint(expected: Option<&str>, found: &str) -> Result<()> {
    match expected {
        Some(e) if e != found => Err(Error::FingerprintMismatch {
            expected: e.to_string(),
            found: found.to_string(),
        }),
        _ => Ok(()),
    }
}
