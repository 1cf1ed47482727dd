//! Run manifests: what was run, on which inputs, and what it produced.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Classify, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileHash {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub uodf_cli: String,
    pub uodf: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    /// SHA-256 of the effective configuration serialized as JSON.
    pub config_hash: String,
    pub config: serde_json::Value,
    pub inputs: Vec<FileHash>,
    pub seed: Option<u64>,
    pub versions: Versions,
    pub threads: usize,
    pub wall_time_s: f64,
    pub outputs: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub fn hash_file(path: &Path) -> CliResult<FileHash> {
    let bytes = fs::read(path)
        .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))
        .input()?;
    Ok(FileHash {
        path: path.to_path_buf(),
        sha256: sha256_hex(&bytes),
    })
}

pub fn versions() -> Versions {
    Versions {
        uodf_cli: env!("CARGO_PKG_VERSION").to_string(),
        uodf: uodf::VERSION.to_string(),
    }
}

/// Write `bytes` to a sibling temp file and rename it over `path`, so readers
/// never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> CliResult<()> {
        let mut json = serde_json::to_vec_pretty(self).internal()?;
        json.push(b'\n');
        write_atomic(path, &json)
            .map_err(|e| anyhow::anyhow!("cannot write manifest {}: {e}", path.display()))
            .internal()
    }
}
