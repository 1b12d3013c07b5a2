//! Artifact writing with cleanup on failure: a failed command removes every
//! file it managed to write, so an output directory never holds a partial
//! result set.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

pub struct Artifacts {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Artifacts { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn write(&mut self, name: &str, contents: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn remove_written(&self) {
        for path in &self.written {
            let _ = fs::remove_file(path);
        }
    }
}

/// Runs `f` against a fresh artifact set, deleting everything written if it
/// fails.
pub fn with_artifacts(dir: &Path, f: impl FnOnce(&mut Artifacts) -> Result<()>) -> Result<()> {
    let mut artifacts = Artifacts::create(dir)?;
    match f(&mut artifacts) {
        Ok(()) => Ok(()),
        Err(e) => {
            artifacts.remove_written();
            Err(e)
        }
    }
}

/// Minimal CSV assembly; every emitted field is an identifier or a number,
/// so no quoting is needed.
pub struct Csv {
    buf: String,
}

impl Csv {
    pub fn new(header: &str) -> Self {
        let mut buf = String::new();
        buf.push_str(header);
        buf.push('\n');
        Csv { buf }
    }

    pub fn row(&mut self, fields: &[&str]) {
        self.buf.push_str(&fields.join(","));
        self.buf.push('\n');
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf.into_bytes()
    }
}

/// Shortest-round-trip float formatting; empty string for `None`.
pub fn opt_float(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}
