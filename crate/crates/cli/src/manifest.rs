use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct ChainSummary {
    pub chain: usize,
    pub acceptance_rate: f64,
    pub jump_sigma: f64,
}

#[derive(Debug, Serialize)]
pub struct PsrfSummary {
    pub max: f64,
    pub per_cause: BTreeMap<String, f64>,
}

/// Record of one run, written last.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config: serde_json::Value,
    pub inputs: Vec<InputDigest>,
    pub seed: Option<u64>,
    pub wall_clock_seconds: f64,
    pub chains: Vec<ChainSummary>,
    pub psrf: Option<PsrfSummary>,
    pub notes: BTreeMap<String, serde_json::Value>,
}

pub struct ManifestBuilder {
    started: Instant,
    manifest: RunManifest,
}

impl ManifestBuilder {
    pub fn new(command: &str, config: &impl Serialize) -> Result<Self> {
        Ok(Self {
            started: Instant::now(),
            manifest: RunManifest {
                command: command.to_string(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                config: serde_json::to_value(config)?,
                inputs: Vec::new(),
                seed: None,
                wall_clock_seconds: 0.0,
                chains: Vec::new(),
                psrf: None,
                notes: BTreeMap::new(),
            },
        })
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.manifest.inputs.push(InputDigest {
            path: path.to_path_buf(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
        Ok(())
    }

    pub fn seed(&mut self, seed: u64) {
        self.manifest.seed = Some(seed);
    }

    pub fn chains(&mut self, chains: Vec<ChainSummary>) {
        self.manifest.chains = chains;
    }

    pub fn psrf(&mut self, psrf: PsrfSummary) {
        self.manifest.psrf = Some(psrf);
    }

    pub fn note(&mut self, key: &str, value: impl Serialize) -> Result<()> {
        self.manifest
            .notes
            .insert(key.to_string(), serde_json::to_value(value)?);
        Ok(())
    }

    /// Writes `manifest.json` through a temporary file and a rename.
    pub fn finish(mut self, out_dir: &Path) -> Result<()> {
        self.manifest.wall_clock_seconds = self.started.elapsed().as_secs_f64();
        let dst = out_dir.join("manifest.json");
        let tmp = out_dir.join(".manifest.json.tmp");
        let mut f = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
        serde_json::to_writer_pretty(&mut f, &self.manifest)?;
        f.write_all(b"\n")?;
        f.sync_all()?;
        fs::rename(&tmp, &dst).with_context(|| format!("writing {}", dst.display()))?;
        Ok(())
    }
}
