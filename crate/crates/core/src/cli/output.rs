use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// An output directory owned by one run for its lifetime.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    lock: PathBuf,
    written: Vec<String>,
}

pub const LOCK_FILE: &str = ".chmm.lock";

impl OutputDir {
    pub fn acquire(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)
            .map_err(|e| Error::validation(format!("output directory {} is not writable: {e}", root.display())))?;
        let lock = root.join(LOCK_FILE);
        let mut f = OpenOptions::new().write(true).create_new(true).open(&lock).map_err(|e| {
            if e.kind() == std::io::ErrorKind::AlreadyExists {
                Error::Usage(format!(
                    "output directory {} is locked by another run (remove {} if stale)",
                    root.display(),
                    lock.display()
                ))
            } else {
                Error::validation(format!("output directory {} is not writable: {e}", root.display()))
            }
        })?;
        writeln!(f, "{}", std::process::id())?;
        Ok(Self {
            root: root.to_path_buf(),
            lock,
            written: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Opens `name` for writing and records it as an output.
    pub fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.root.join(name);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        self.written.push(name.to_string());
        Ok(BufWriter::new(File::create(path)?))
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        let mut w = self.create(name)?;
        w.write_all(text.as_bytes())?;
        w.flush()?;
        Ok(())
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }
}

impl Drop for OutputDir {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.lock);
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// What a fit was run on; later commands refuse artifacts whose identity
/// differs from their own configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitIdentity {
    pub n_a: usize,
    pub n_b: usize,
    pub covariates: Vec<String>,
    pub data_hash: String,
}

impl FitIdentity {
    /// Names of the fields that differ.
    pub fn divergent_fields(&self, other: &FitIdentity) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.n_a != other.n_a {
            out.push("model.n_a");
        }
        if self.n_b != other.n_b {
            out.push("model.n_b");
        }
        if self.covariates != other.covariates {
            out.push("model.covariates");
        }
        if self.data_hash != other.data_hash {
            out.push("data");
        }
        out
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub command_line: Vec<String>,
    pub version: String,
    pub seed: u64,
    pub config_hash: String,
    pub config: serde_json::Value,
    #[serde(default)]
    pub identity: Option<FitIdentity>,
    pub outputs: Vec<String>,
    #[serde(default)]
    pub summary: serde_json::Value,
}

pub fn manifest_name(command: &str) -> String {
    format!("manifest_{command}.json")
}

pub fn read_manifest(dir: &Path, command: &str) -> Result<Manifest> {
    let path = dir.join(manifest_name(command));
    let text = fs::read_to_string(&path).map_err(|e| {
        Error::Refused(format!(
            "no {command} artifacts in {}: cannot read {}: {e}",
            dir.display(),
            path.display()
        ))
    })?;
    Ok(serde_json::from_str(&text)?)
}
