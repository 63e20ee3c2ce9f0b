use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Collects output files for one run. Each file is written to a temporary
/// sibling and renamed into place once complete.
pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let target = self.path(name);
        write_atomic(&target, bytes)?;
        self.written.push(name.to_string());
        Ok(target)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        self.write(name, to_json(value).as_bytes())
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }
}

pub fn write_atomic(target: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut tmp = target.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, target).map_err(|e| CliError::io(target, e))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("output types serialize");
    text.push('\n');
    text
}

/// Shortest text that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x}")
}

/// CSV document built in memory.
pub struct Csv {
    writer: csv::Writer<Vec<u8>>,
}

impl Csv {
    pub fn new<I, S>(header: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        writer.write_record(header).expect("in-memory write");
        Csv { writer }
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).expect("in-memory write");
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.writer.into_inner().expect("in-memory flush")
    }
}

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

pub fn digest_file(path: &Path) -> Result<InputDigest, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::missing(path, e))?;
    Ok(InputDigest {
        path: path.display().to_string(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

/// Provenance record written after every run.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub command: String,
    pub inputs: Vec<InputDigest>,
    pub master_seed: u64,
    pub n_trials: u64,
    pub workers: usize,
    #[serde(skip_serializing_if = "serde_json::Map::is_empty")]
    pub options: serde_json::Map<String, serde_json::Value>,
    pub started_at: String,
    pub finished_at: String,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, inputs: Vec<InputDigest>, master_seed: u64, n_trials: u64, workers: usize) -> Self {
        RunManifest {
            tool: "tokencycle",
            tool_version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            inputs,
            master_seed,
            n_trials,
            workers,
            options: serde_json::Map::new(),
            started_at: now(),
            finished_at: String::new(),
            outputs: Vec::new(),
        }
    }

    pub fn option(mut self, key: &str, value: impl Serialize) -> Self {
        self.options
            .insert(key.to_string(), serde_json::to_value(value).expect("option serializes"));
        self
    }

    /// Stamps the end time and writes `manifest.json` last.
    pub fn finish(mut self, out: &mut OutputDir) -> Result<(), CliError> {
        self.finished_at = now();
        self.outputs = out.written().to_vec();
        out.write_json("manifest.json", &self)?;
        Ok(())
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}
