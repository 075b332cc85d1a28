//! Append-only result store: one JSON-lines file of records per run and an
//! index of run manifests.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use slelab_core::experiments::{write_jsonl, Record};

use crate::config::Resolved;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub config: Resolved,
    pub tool_version: String,
    pub started: DateTime<Utc>,
    pub finished: DateTime<Utc>,
}

/// Hash of the resolved configuration, seed included. Struct fields
/// serialize in declaration order, so the id survives a round trip.
pub fn run_id(config: &Resolved) -> String {
    let canonical = serde_json::to_vec(config).expect("config serializes");
    hex::encode(&Sha256::digest(&canonical)[..16])
}

pub struct ResultStore {
    root: PathBuf,
}

impl ResultStore {
    pub fn open(root: &Path) -> Result<Self> {
        fs::create_dir_all(root.join("runs")).with_context(|| format!("creating store at {}", root.display()))?;
        Ok(Self { root: root.to_path_buf() })
    }

    pub fn records_path(&self, run_id: &str) -> PathBuf {
        self.root.join("runs").join(format!("{run_id}.jsonl"))
    }

    pub fn index_path(&self) -> PathBuf {
        self.root.join("manifests.jsonl")
    }

    pub fn contains(&self, run_id: &str) -> bool {
        self.records_path(run_id).exists()
    }

    /// Refuse a run id that is already stored unless `force` is set.
    pub fn check_new(&self, run_id: &str, force: bool) -> Result<()> {
        if self.contains(run_id) && !force {
            bail!(
                "run {run_id} already exists in {}; pass --force to append another copy",
                self.root.display()
            );
        }
        Ok(())
    }

    /// Append the records and then the manifest, each in a single write.
    pub fn append(&self, manifest: &RunManifest, records: &[Record]) -> Result<()> {
        let mut buf = Vec::new();
        write_jsonl(records, &mut buf)?;
        append_bytes(&self.records_path(&manifest.run_id), &buf)?;
        let mut line = serde_json::to_vec(manifest)?;
        line.push(b'\n');
        append_bytes(&self.index_path(), &line)
    }

    pub fn manifests(&self) -> Result<Vec<RunManifest>> {
        let path = self.index_path();
        if !path.exists() {
            return Ok(Vec::new());
        }
        fs::read_to_string(&path)?
            .lines()
            .map(|l| serde_json::from_str(l).with_context(|| format!("bad manifest line in {}", path.display())))
            .collect()
    }
}

fn append_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .with_context(|| format!("opening {}", path.display()))?;
    f.write_all(bytes)?;
    Ok(())
}
