//! Output directory, CSV writing and the run manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use atlaslab_core::{StatReport, Verdict};
use serde::Serialize;
use serde_json::Value;

use crate::settings::Settings;

pub const SCHEMA_VERSION: u32 = 1;

pub struct OutDir {
    root: PathBuf,
    force: bool,
    written: Vec<String>,
}

impl OutDir {
    /// Create `root` and refuse up front if any of `files` exists.
    pub fn prepare(root: &Path, force: bool, files: &[&str]) -> Result<OutDir, String> {
        if !force {
            if let Some(f) = files.iter().find(|f| root.join(f).exists()) {
                return Err(format!(
                    "{} already exists; pass --force to overwrite",
                    root.join(f).display()
                ));
            }
        }
        fs::create_dir_all(root).map_err(|e| format!("cannot create {}: {e}", root.display()))?;
        Ok(OutDir { root: root.to_path_buf(), force, written: Vec::new() })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), String> {
        let path = self.root.join(name);
        if !self.force && path.exists() {
            return Err(format!("{} already exists; pass --force to overwrite", path.display()));
        }
        fs::write(&path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
        self.written.push(name.to_owned());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), String> {
        let mut s = serde_json::to_string_pretty(value).map_err(|e| e.to_string())?;
        s.push('\n');
        self.write(name, &s)
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }
}

/// Rows of numbers; `None` cells are left empty. `{}` on `f64` is the
/// shortest string that parses back to the same value.
pub fn csv(header: &[String], rows: impl IntoIterator<Item = Vec<Option<f64>>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        for (j, cell) in row.iter().enumerate() {
            if j > 0 {
                s.push(',');
            }
            if let Some(v) = cell {
                write!(s, "{v}").unwrap();
            }
        }
        s.push('\n');
    }
    s
}

pub fn unix_seconds() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

#[derive(Debug, Serialize)]
pub struct CheckVerdict {
    pub name: String,
    pub verdict: Verdict,
}

impl From<&StatReport> for CheckVerdict {
    fn from(r: &StatReport) -> Self {
        CheckVerdict { name: r.name.clone(), verdict: r.verdict }
    }
}

/// Everything needed to rerun a command: `--config manifest.json` with the
/// same binary reproduces the outputs.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub argv: Vec<String>,
    pub settings: Settings,
    /// Command-specific configuration after defaults were applied.
    pub resolved: Value,
    pub seed: u64,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub checks: Vec<CheckVerdict>,
    pub verdict: Option<Verdict>,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &'static str, settings: &Settings, seed: u64) -> Manifest {
        Manifest {
            schema_version: SCHEMA_VERSION,
            tool: "atlaslab",
            version: env!("CARGO_PKG_VERSION"),
            command,
            argv: std::env::args().collect(),
            settings: settings.clone(),
            resolved: Value::Null,
            seed,
            started_unix: unix_seconds(),
            finished_unix: f64::NAN,
            checks: Vec::new(),
            verdict: None,
            outputs: Vec::new(),
        }
    }

    pub fn finish(mut self, out: &mut OutDir) -> Result<(), String> {
        self.finished_unix = unix_seconds();
        self.outputs = out.written().to_vec();
        self.outputs.push("manifest.json".into());
        out.write_json("manifest.json", &self)
    }
}
