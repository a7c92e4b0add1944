use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use mionet::{Error, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

/// Written as `manifest.json` into every command's output directory.
#[derive(Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Value,
    pub seeds: Vec<u64>,
    pub code_version: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub outputs: Vec<String>,
}

pub struct Run {
    command: String,
    out: PathBuf,
    started: u64,
    outputs: Vec<String>,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn with_path(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

impl Run {
    pub fn start(command: &str, out: &Path) -> Result<Self> {
        fs::create_dir_all(out).map_err(|e| with_path(out, e))?;
        Ok(Self {
            command: command.to_string(),
            out: out.to_path_buf(),
            started: now(),
            outputs: Vec::new(),
        })
    }

    pub fn path(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.to_string());
        self.out.join(name)
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        let path = self.path(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| with_path(parent, e))?;
        }
        fs::write(&path, contents).map_err(|e| with_path(&path, e))
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        self.write(name, serde_json::to_string_pretty(value)? + "\n")
    }

    pub fn finish(self, config: Value, seeds: Vec<u64>) -> Result<()> {
        let manifest = RunManifest {
            command: self.command,
            config,
            seeds,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix: self.started,
            finished_unix: now(),
            outputs: self.outputs,
        };
        let path = self.out.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n").map_err(|e| with_path(&path, e))
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = fs::File::open(path).map_err(|e| with_path(path, e))?;
    serde_json::from_reader(BufReader::new(file))
        .map_err(|e| Error::config(path.display().to_string(), e.to_string()))
}

pub fn open(path: &Path) -> Result<BufReader<fs::File>> {
    Ok(BufReader::new(fs::File::open(path).map_err(|e| with_path(path, e))?))
}
