use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

/// Sidecar describing how a set of output files was produced. Only the
/// timing fields change between identical invocations.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub params: Value,
    pub artifacts: Vec<Artifact>,
    pub tool_version: &'static str,
    pub started_unix: u64,
    pub duration_seconds: f64,
}

pub fn sha256_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

/// Collects output files under a common prefix and writes the manifest
/// last.
pub struct OutputSet {
    prefix: PathBuf,
    artifacts: Vec<Artifact>,
}

impl OutputSet {
    pub fn new(prefix: &Path) -> Self {
        Self {
            prefix: prefix.to_path_buf(),
            artifacts: Vec::new(),
        }
    }

    fn path_for(&self, suffix: &str) -> PathBuf {
        let mut s = self.prefix.clone().into_os_string();
        s.push(suffix);
        PathBuf::from(s)
    }

    pub fn write(&mut self, suffix: &str, data: &[u8]) -> io::Result<PathBuf> {
        let path = self.path_for(suffix);
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        fs::write(&path, data)?;
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        self.artifacts.push(Artifact {
            path: name,
            sha256: sha256_hex(data),
            bytes: data.len(),
        });
        Ok(path)
    }

    pub fn finish(self, command: &str, params: Value, started: SystemTime, elapsed: Duration) -> io::Result<PathBuf> {
        let path = self.path_for(".manifest.json");
        let manifest = RunManifest {
            command: command.to_string(),
            params,
            artifacts: self.artifacts,
            tool_version: env!("CARGO_PKG_VERSION"),
            started_unix: started.duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            duration_seconds: elapsed.as_secs_f64(),
        };
        let mut json = serde_json::to_vec_pretty(&manifest).map_err(io::Error::other)?;
        json.push(b'\n');
        fs::write(&path, json)?;
        Ok(path)
    }
}
