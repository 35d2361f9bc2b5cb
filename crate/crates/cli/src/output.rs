use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tempfile::NamedTempFile;

use crate::CliError;

pub const MANIFEST: &str = "manifest.json";

/// Record of one run: enough to repeat it and to check the repeat.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    /// Arguments after the program name, with input paths made absolute and
    /// `--out` / `--workers` removed.
    pub argv: Vec<String>,
    /// SHA-256 of `argv` joined by NUL bytes.
    pub config_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Output file name and SHA-256 of its bytes, in write order.
    pub outputs: Vec<(String, String)>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn config_hash(argv: &[String]) -> String {
    sha256_hex(argv.join("\0").as_bytes())
}

/// Output directory that only ever receives complete files.
pub struct Output {
    dir: PathBuf,
    written: Vec<(String, String)>,
}

impl Output {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let target = self.dir.join(name);
        let mut tmp = NamedTempFile::new_in(&self.dir).map_err(|e| CliError::io(&self.dir, e))?;
        tmp.write_all(bytes).map_err(|e| CliError::io(&target, e))?;
        tmp.persist(&target).map_err(|e| CliError::io(&target, e.error))?;
        self.written.push((name.to_string(), sha256_hex(bytes)));
        Ok(())
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::internal(e.to_string()))?;
        bytes.push(b'\n');
        self.bytes(name, &bytes)
    }

    /// Writes whatever `fill` produces into a buffer, then atomically to disk.
    pub fn with_buffer(
        &mut self,
        name: &str,
        fill: impl FnOnce(&mut Vec<u8>) -> traceform::Result<()>,
    ) -> Result<(), CliError> {
        let mut buf = Vec::new();
        fill(&mut buf)?;
        self.bytes(name, &buf)
    }

    pub fn finish(mut self, argv: Vec<String>, seed: Option<u64>) -> Result<Manifest, CliError> {
        let manifest = Manifest {
            tool: "traceform".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_hash: config_hash(&argv),
            argv,
            seed,
            outputs: std::mem::take(&mut self.written),
        };
        self.json(MANIFEST, &manifest)?;
        Ok(manifest)
    }
}

pub fn read_manifest(path: &Path) -> Result<Manifest, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
}
