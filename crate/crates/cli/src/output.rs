use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: String,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub scenario: String,
    pub seed: Option<u64>,
    pub config_sha256: String,
    /// The effective configuration after defaults and overrides.
    pub config: String,
    pub files: Vec<FileEntry>,
    pub checks: Vec<Check>,
    pub pass: bool,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let d = Sha256::digest(bytes);
    d.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Collects output files and checks of one scenario run.
pub struct Run {
    dir: PathBuf,
    files: Vec<FileEntry>,
    checks: Vec<Check>,
}

impl Run {
    pub fn new(dir: &Path) -> anyhow::Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new(), checks: Vec::new() })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> anyhow::Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(FileEntry { name: name.to_string(), sha256: sha256_hex(contents.as_bytes()) });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> anyhow::Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.write(name, &s)
    }

    /// Header row plus rows of already formatted cells.
    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> anyhow::Result<()> {
        let mut s = header.join(",");
        s.push('\n');
        for r in rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        self.write(name, &s)
    }

    pub fn check(&mut self, name: &str, value: f64, tolerance: impl Into<String>, pass: bool) {
        self.checks.push(Check { name: name.to_string(), value, tolerance: tolerance.into(), pass });
    }

    pub fn checks(&self) -> &[Check] {
        &self.checks
    }

    /// Write the manifest; returns whether every check passed.
    pub fn finish(mut self, scenario: &str, seed: Option<u64>, config: &str) -> anyhow::Result<bool> {
        let pass = self.checks.iter().all(|c| c.pass);
        let m = Manifest {
            tool: "fluxcr",
            version: env!("CARGO_PKG_VERSION"),
            scenario: scenario.to_string(),
            seed,
            config_sha256: sha256_hex(config.as_bytes()),
            config: config.to_string(),
            files: std::mem::take(&mut self.files),
            checks: std::mem::take(&mut self.checks),
            pass,
        };
        let mut s = serde_json::to_string_pretty(&m)?;
        s.push('\n');
        std::fs::write(self.dir.join("manifest.json"), s)?;
        Ok(pass)
    }
}

/// Fixed-format number for tabular output.
pub fn num(x: f64) -> String {
    format!("{x:.10e}")
}
