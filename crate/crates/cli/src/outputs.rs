//! Output files that are removed again unless the command completes.

use crate::error::{CliError, CliResult};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_digest(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    Ok(sha256_hex(&bytes))
}

pub struct Outputs {
    created_dirs: Vec<PathBuf>,
    written: Vec<(String, PathBuf, String)>,
    committed: bool,
}

impl Outputs {
    pub fn new() -> Self {
        Self { created_dirs: Vec::new(), written: Vec::new(), committed: false }
    }

    /// Creates `dir` (and missing parents), remembering what to remove on failure.
    pub fn ensure_dir(&mut self, dir: &Path) -> CliResult<()> {
        let mut missing = Vec::new();
        let mut p = Some(dir);
        while let Some(d) = p {
            if d.as_os_str().is_empty() || d.exists() {
                break;
            }
            missing.push(d.to_path_buf());
            p = d.parent();
        }
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(format!("{}: {e}", dir.display())))?;
        missing.reverse();
        self.created_dirs.extend(missing);
        Ok(())
    }

    /// Writes `bytes` to `path` and records its digest under `label`.
    pub fn write(&mut self, label: &str, path: PathBuf, bytes: &[u8]) -> CliResult<()> {
        std::fs::write(&path, bytes).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
        self.written.push((label.to_string(), path, sha256_hex(bytes)));
        Ok(())
    }

    /// `(label, path, sha256)` for every file written so far.
    pub fn files(&self) -> &[(String, PathBuf, String)] {
        &self.written
    }

    pub fn commit(mut self) {
        self.committed = true;
    }
}

impl Default for Outputs {
    fn default() -> Self {
        Self::new()
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for (_, path, _) in &self.written {
            let _ = std::fs::remove_file(path);
        }
        for dir in self.created_dirs.iter().rev() {
            let _ = std::fs::remove_dir(dir);
        }
    }
}

/// Flat `key=value` manifest with keys kept in insertion order.
#[derive(Debug, Default)]
pub struct Manifest {
    lines: Vec<(String, String)>,
}

impl Manifest {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        self.lines.push((key.into(), value.to_string()));
        self
    }

    pub fn push_text(&mut self, text: &str) -> &mut Self {
        for line in text.lines().filter(|l| !l.is_empty() && !l.starts_with('#')) {
            if let Some((k, v)) = line.split_once('=') {
                self.push(k, v);
            }
        }
        self
    }

    pub fn to_text(&self) -> String {
        self.lines.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }
}
