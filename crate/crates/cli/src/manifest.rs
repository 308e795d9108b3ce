//! Run manifests and the output directory that records them.

use crate::{CliError, CliResult, Context};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::cell::RefCell;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    pub role: String,
    /// File name only; directories are not part of a run's identity.
    pub file: String,
    pub sha256: String,
}

/// Everything that determines a run's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub inputs: Vec<FileRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub parameters: BTreeMap<String, serde_json::Value>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn read(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        RunManifest {
            command: command.into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            inputs: Vec::new(),
            method: None,
            seed: None,
            parameters: BTreeMap::new(),
        }
    }

    /// Records an input file by content hash.
    pub fn input(&mut self, role: &str, path: &Path) -> CliResult<()> {
        let bytes = read(path)?;
        let file = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
        self.inputs.push(FileRecord { role: role.into(), file, sha256: sha256_hex(&bytes) });
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: serde_json::Value) {
        self.parameters.insert(key.into(), value);
    }

    pub fn hash(&self) -> String {
        sha256_hex(&serde_json::to_vec(self).expect("manifest serializes"))
    }
}

/// Contents of `run.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub manifest: RunManifest,
    pub manifest_hash: String,
    pub outputs: Vec<FileRecord>,
}

impl RunRecord {
    pub fn load(path: impl AsRef<Path>) -> CliResult<Self> {
        let path = path.as_ref();
        serde_json::from_slice(&read(path)?).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Output directory that hashes every artifact it writes.
pub struct OutputDir {
    root: PathBuf,
    manifest: RunManifest,
    outputs: RefCell<Vec<FileRecord>>,
}

impl OutputDir {
    pub fn create(root: &Path, manifest: RunManifest) -> CliResult<Self> {
        std::fs::create_dir_all(root).map_err(|source| CliError::Io { path: root.to_path_buf(), source })?;
        Ok(OutputDir { root: root.to_path_buf(), manifest, outputs: RefCell::new(Vec::new()) })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn prepare(&self, name: &str) -> CliResult<PathBuf> {
        let path = self.path(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|source| CliError::Io { path: parent.to_path_buf(), source })?;
        }
        Ok(path)
    }

    fn record(&self, name: &str, bytes: &[u8]) {
        let role = Path::new(name).file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        self.outputs.borrow_mut().push(FileRecord { role, file: name.into(), sha256: sha256_hex(bytes) });
    }

    pub fn write_bytes(&self, name: &str, bytes: &[u8]) -> CliResult<()> {
        let path = self.prepare(name)?;
        std::fs::write(&path, bytes).map_err(|source| CliError::Io { path, source })?;
        self.record(name, bytes);
        Ok(())
    }

    /// Lets a library writer produce the file, then hashes what landed on disk.
    pub fn write_with(&self, name: &str, f: impl FnOnce(&Path) -> isp_core::Result<()>) -> CliResult<()> {
        let path = self.prepare(name)?;
        f(&path).context(|| format!("writing {}", path.display()))?;
        let bytes = read(&path)?;
        self.record(name, &bytes);
        Ok(())
    }

    pub fn finish(self) -> CliResult<()> {
        let record = RunRecord {
            manifest_hash: self.manifest.hash(),
            manifest: self.manifest,
            outputs: self.outputs.into_inner(),
        };
        let text = serde_json::to_string_pretty(&record).expect("run record serializes") + "\n";
        let path = self.root.join("run.json");
        std::fs::write(&path, text).map_err(|source| CliError::Io { path, source })
    }
}
