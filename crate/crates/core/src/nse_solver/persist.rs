use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{EnergyLedger, SolverConfig, Trajectory};
use crate::error::{Error, Result};
use crate::spectral_core::snapshot::{decode, encode};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrajectoryManifest {
    pub config: SolverConfig,
    pub times: Vec<f64>,
    pub ledger: EnergyLedger,
    pub halvings: u32,
    pub substeps: usize,
    pub snapshots: Vec<FileEntry>,
    pub drift: Option<FileEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn write_entry(dir: &Path, name: String, bytes: &[u8]) -> Result<FileEntry> {
    fs::write(dir.join(&name), bytes)?;
    Ok(FileEntry {
        sha256: sha256_hex(bytes),
        name,
    })
}

fn read_entry(dir: &Path, entry: &FileEntry) -> Result<Vec<u8>> {
    let bytes = fs::read(dir.join(&entry.name))?;
    let got = sha256_hex(&bytes);
    if got != entry.sha256 {
        return Err(Error::Format(format!("checksum mismatch for {}", entry.name)));
    }
    Ok(bytes)
}

/// Writes one snapshot file per recorded time plus `manifest.json`.
pub fn save_trajectory(traj: &Trajectory, dir: &Path) -> Result<TrajectoryManifest> {
    fs::create_dir_all(dir)?;
    let mut snapshots = Vec::with_capacity(traj.fields.len());
    for (i, (f, &t)) in traj.fields.iter().zip(&traj.times).enumerate() {
        snapshots.push(write_entry(dir, format!("snap_{i:05}.blab"), &encode(f, t))?);
    }
    let drift = match &traj.drift {
        Some(v) => Some(write_entry(dir, "drift.blab".into(), &encode(v, 0.0))?),
        None => None,
    };
    let manifest = TrajectoryManifest {
        config: traj.config.clone(),
        times: traj.times.clone(),
        ledger: traj.ledger.clone(),
        halvings: traj.halvings,
        substeps: traj.substeps,
        snapshots,
        drift,
    };
    fs::write(dir.join(MANIFEST_NAME), serde_json::to_vec_pretty(&manifest)?)?;
    Ok(manifest)
}

/// Reads a directory written by [`save_trajectory`], verifying checksums.
pub fn load_trajectory(dir: &Path) -> Result<Trajectory> {
    let manifest: TrajectoryManifest = serde_json::from_slice(&fs::read(dir.join(MANIFEST_NAME))?)?;
    if manifest.snapshots.len() != manifest.times.len() || manifest.snapshots.is_empty() {
        return Err(Error::Format("manifest snapshot list does not match its times".into()));
    }
    let mut fields = Vec::with_capacity(manifest.snapshots.len());
    for (entry, &t) in manifest.snapshots.iter().zip(&manifest.times) {
        let (f, time) = decode(&read_entry(dir, entry)?)?;
        if time.to_bits() != t.to_bits() {
            return Err(Error::Format(format!("{} records t={time}, manifest says {t}", entry.name)));
        }
        fields.push(f);
    }
    let drift = match &manifest.drift {
        Some(e) => Some(decode(&read_entry(dir, e)?)?.0),
        None => None,
    };
    Ok(Trajectory {
        config: manifest.config,
        times: manifest.times,
        fields,
        ledger: manifest.ledger,
        drift,
        halvings: manifest.halvings,
        substeps: manifest.substeps,
    })
}
