use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::wigner::WignerField;

use super::config::RunConfig;

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// SHA-256 of the canonical JSON form of the configuration.
pub fn config_hash(cfg: &RunConfig) -> Result<String> {
    Ok(hex_digest(serde_json::to_string(cfg)?.as_bytes()))
}

/// Column-oriented table written as CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn to_csv(&self, hash: &str) -> String {
        let mut s = format!("# config_hash={hash}\n{}\n", self.columns.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|x| fmt_num(*x)).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

pub fn fmt_num(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e9 {
        format!("{x:.1}")
    } else {
        format!("{x:.10e}")
    }
}

pub fn wigner_text(field: &WignerField, hash: &str, label: &str) -> String {
    let g = &field.grid;
    let mut s = format!(
        "# config_hash={hash}\n# {label} basis={:?} squeeze_r={} nx={} np={}\n# X P W\n",
        field.basis, field.squeeze_r, g.nx, g.np
    );
    for j in 0..g.np {
        for i in 0..g.nx {
            s.push_str(&format!("{:.8e} {:.8e} {:.10e}\n", g.x(i), g.p(j), field.at(i, j)));
        }
    }
    s
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FileRecord {
    pub name: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FailedPoint {
    pub index: usize,
    pub value: f64,
    pub error: String,
}

/// Serialized file sink for one run.
pub struct Sink {
    dir: PathBuf,
    pub hash: String,
    pub files: Vec<FileRecord>,
    pub checks: Vec<Check>,
    pub failed: Vec<FailedPoint>,
}

impl Sink {
    pub fn new(dir: &Path, hash: String) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            hash,
            files: Vec::new(),
            checks: Vec::new(),
            failed: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        fs::write(self.dir.join(name), contents)?;
        self.files.push(FileRecord {
            name: name.to_string(),
            sha256: hex_digest(contents.as_bytes()),
        });
        Ok(())
    }

    pub fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn finish(&mut self, cfg: &RunConfig) -> Result<()> {
        #[derive(Serialize)]
        struct Manifest<'a> {
            config_hash: &'a str,
            scenario: &'a str,
            version: &'a str,
            #[serde(skip_serializing_if = "Option::is_none")]
            source_date_epoch: Option<String>,
            config: &'a RunConfig,
            files: &'a [FileRecord],
            checks: &'a [Check],
            failed_points: &'a [FailedPoint],
        }
        let m = Manifest {
            config_hash: &self.hash,
            scenario: cfg.scenario.name(),
            version: env!("CARGO_PKG_VERSION"),
            source_date_epoch: std::env::var("SOURCE_DATE_EPOCH").ok(),
            config: cfg,
            files: &self.files,
            checks: &self.checks,
            failed_points: &self.failed,
        };
        let mut text = serde_json::to_string_pretty(&m)?;
        text.push('\n');
        fs::write(self.dir.join("manifest.json"), text)?;
        Ok(())
    }
}
