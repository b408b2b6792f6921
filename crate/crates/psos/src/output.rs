//! Run directories, manifests and the file formats written into them.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedStatus {
    pub tag: String,
    /// `done`, `censored` or `failed`.
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub artifact_version: String,
    pub command: String,
    /// Only present when wall-clock recording is requested, so that runs
    /// stay byte-identical by default.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub started_unix: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub finished_unix: Option<u64>,
    pub files: Vec<String>,
    pub seeds: Vec<SeedStatus>,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// One run's output directory. All files go through this writer.
#[derive(Debug)]
pub struct RunDir {
    path: PathBuf,
    manifest: RunManifest,
    record_time: bool,
}

impl RunDir {
    /// `<out>/<first 16 hex digits of the config hash>`.
    pub fn create(out: &Path, config_hash: &str, command: &str, record_time: bool) -> Result<Self> {
        let path = out.join(&config_hash[..16]);
        fs::create_dir_all(&path).map_err(|e| Error::io(&path, e))?;
        Ok(RunDir {
            path,
            manifest: RunManifest {
                config_hash: config_hash.to_string(),
                artifact_version: env!("CARGO_PKG_VERSION").to_string(),
                command: command.to_string(),
                started_unix: record_time.then(now),
                finished_unix: None,
                files: Vec::new(),
                seeds: Vec::new(),
            },
            record_time,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let p = self.path.join(name);
        fs::write(&p, bytes).map_err(|e| Error::io(&p, e))?;
        self.manifest.files.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value).expect("serializable output");
        s.push('\n');
        self.write_bytes(name, s.as_bytes())
    }

    pub fn write_jsonl<T: Serialize>(&mut self, name: &str, rows: impl IntoIterator<Item = T>) -> Result<()> {
        let mut buf = Vec::new();
        for r in rows {
            serde_json::to_writer(&mut buf, &r).expect("serializable output");
            buf.push(b'\n');
        }
        self.write_bytes(name, &buf)
    }

    /// RFC 4180 CSV with a header row.
    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
        let p = self.path.join(name);
        let to_io = |e: csv::Error| Error::io(&p, std::io::Error::other(e));
        w.write_record(header).map_err(to_io)?;
        for r in rows {
            w.write_record(r).map_err(to_io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::io(&p, std::io::Error::other(e.to_string())))?;
        self.write_bytes(name, &bytes)
    }

    pub fn add_seed(&mut self, tag: impl Into<String>, status: impl Into<String>) {
        self.manifest.seeds.push(SeedStatus { tag: tag.into(), status: status.into() });
    }

    /// Writes `manifest.json` and returns the run directory.
    pub fn finish(mut self) -> Result<PathBuf> {
        if self.record_time {
            self.manifest.finished_unix = Some(now());
        }
        let p = self.path.join("manifest.json");
        let mut s = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        s.push('\n');
        let mut f = fs::File::create(&p).map_err(|e| Error::io(&p, e))?;
        f.write_all(s.as_bytes()).map_err(|e| Error::io(&p, e))?;
        Ok(self.path)
    }
}

/// Formats a float for CSV; non-finite values become empty fields.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        String::new()
    }
}

pub fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}
