use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use walkdir::WalkDir;

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageStatus {
    pub name: String,
    pub ok: bool,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Written last, after every other artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// SHA-256 of the canonical TOML serialization of the resolved config.
    pub config_sha256: String,
    pub started_at: String,
    pub finished_at: String,
    pub stages: Vec<StageStatus>,
    pub artifacts: Vec<Artifact>,
    pub exit_code: i32,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn hash_file(path: &Path) -> std::io::Result<(String, u64)> {
    let mut f = std::fs::File::open(path)?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    let mut total = 0u64;
    loop {
        let k = f.read(&mut buf)?;
        if k == 0 {
            break;
        }
        h.update(&buf[..k]);
        total += k as u64;
    }
    Ok((hex::encode(h.finalize()), total))
}

/// Every regular file under `dir` except the manifest itself, sorted by path.
pub fn collect_artifacts(dir: &Path) -> std::io::Result<Vec<Artifact>> {
    let mut out = Vec::new();
    for entry in WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(std::io::Error::other)?;
        if !entry.file_type().is_file() {
            continue;
        }
        let rel: PathBuf = entry.path().strip_prefix(dir).expect("walk stays under dir").into();
        let path = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
        if path == MANIFEST_NAME {
            continue;
        }
        let (sha256, bytes) = hash_file(entry.path())?;
        out.push(Artifact { path, sha256, bytes });
    }
    Ok(out)
}

impl RunManifest {
    /// Artifacts whose file is missing or whose content changed.
    pub fn verify(&self, dir: &Path) -> Vec<String> {
        self.artifacts
            .iter()
            .filter(|a| match hash_file(&dir.join(&a.path)) {
                Ok((h, n)) => h != a.sha256 || n != a.bytes,
                Err(_) => true,
            })
            .map(|a| a.path.clone())
            .collect()
    }

    /// Copy with the wall-clock fields blanked, for determinism comparisons.
    pub fn without_timestamps(&self) -> Self {
        RunManifest { started_at: String::new(), finished_at: String::new(), ..self.clone() }
    }
}
