use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::stages::StageOutput;
use crate::CliError;

pub const MANIFEST_FILE: &str = "run_manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    /// Subcommand words and flags; together with `config` they re-create
    /// the invocation.
    pub argv: Vec<String>,
    pub config: RunConfig,
    pub seed: Option<u64>,
    pub elapsed_ms: u64,
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    /// Configuration of the most recent invocation.
    pub config: RunConfig,
    pub inputs: BTreeMap<String, String>,
    pub stages: BTreeMap<String, StageRecord>,
}

/// Hex SHA-256 of a file's bytes.
pub fn digest_file(path: &Path) -> Result<String, CliError> {
    let io = |e| {
        CliError::Stage(courtbias_core::Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    };
    let mut file = fs::File::open(path).map_err(io)?;
    let mut h = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buf).map_err(io)?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex::encode(h.finalize()))
}

/// Digest of a file, or of every file below a directory keyed by relative
/// path.
fn digest_entries(
    path: &Path,
    key: &str,
    into: &mut BTreeMap<String, String>,
) -> Result<(), CliError> {
    if path.is_dir() {
        let mut entries: Vec<PathBuf> = fs::read_dir(path)
            .map_err(|e| {
                CliError::Stage(courtbias_core::Error::Io {
                    path: path.to_path_buf(),
                    source: e,
                })
            })?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .collect();
        entries.sort();
        for e in entries {
            let name = e
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            digest_entries(&e, &format!("{key}/{name}"), into)?;
        }
        Ok(())
    } else {
        into.insert(key.to_string(), digest_file(path)?);
        Ok(())
    }
}

/// `path` relative to `base` when it lies below it.
pub fn display_path(path: &Path, base: &Path) -> String {
    path.strip_prefix(base)
        .unwrap_or(path)
        .to_string_lossy()
        .replace('\\', "/")
}

impl RunManifest {
    pub fn new(cfg: &RunConfig) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: cfg.clone(),
            inputs: BTreeMap::new(),
            stages: BTreeMap::new(),
        }
    }

    /// Loads the manifest in `out`, or starts a new one. The config
    /// snapshot always reflects `cfg`.
    pub fn load_or_new(cfg: &RunConfig) -> Result<Self, CliError> {
        let path = cfg.out.join(MANIFEST_FILE);
        let mut m = if path.exists() {
            let text = fs::read_to_string(&path).map_err(|e| {
                CliError::Stage(courtbias_core::Error::Io {
                    path: path.clone(),
                    source: e,
                })
            })?;
            serde_json::from_str(&text).map_err(courtbias_core::Error::from)?
        } else {
            RunManifest::new(cfg)
        };
        m.config = cfg.clone();
        m.version = env!("CARGO_PKG_VERSION").to_string();
        Ok(m)
    }

    pub fn record(
        &mut self,
        cfg: &RunConfig,
        stage: &str,
        argv: Vec<String>,
        elapsed_ms: u64,
        output: &StageOutput,
    ) -> Result<(), CliError> {
        for p in &output.inputs {
            digest_entries(p, &display_path(p, &cfg.out), &mut self.inputs)?;
        }
        let mut digests = BTreeMap::new();
        for p in &output.outputs {
            digest_entries(p, &display_path(p, &cfg.out), &mut digests)?;
        }
        self.stages.insert(
            stage.to_string(),
            StageRecord {
                argv,
                config: cfg.clone(),
                seed: output.seed,
                elapsed_ms,
                outputs: digests,
            },
        );
        Ok(())
    }

    pub fn save(&self, out: &Path) -> Result<PathBuf, CliError> {
        let path = out.join(MANIFEST_FILE);
        fs::create_dir_all(out).map_err(|e| {
            CliError::Stage(courtbias_core::Error::Io {
                path: out.to_path_buf(),
                source: e,
            })
        })?;
        let text = serde_json::to_string_pretty(self).map_err(courtbias_core::Error::from)? + "\n";
        fs::write(&path, text).map_err(|e| {
            CliError::Stage(courtbias_core::Error::Io {
                path: path.clone(),
                source: e,
            })
        })?;
        Ok(path)
    }

    /// Output digests that no longer match the files on disk.
    pub fn verify(&self, out: &Path) -> Vec<String> {
        let mut stale = Vec::new();
        for record in self.stages.values() {
            for (key, digest) in &record.outputs {
                let path = if Path::new(key).is_absolute() {
                    PathBuf::from(key)
                } else {
                    out.join(key)
                };
                match digest_file(&path) {
                    Ok(d) if &d == digest => {}
                    _ => stale.push(key.clone()),
                }
            }
        }
        stale.sort();
        stale.dedup();
        stale
    }
}
