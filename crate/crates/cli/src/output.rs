//! Run manifests and the CSV, JSON and SVG writers that reference them.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use heatcont_core::Params;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObjectiveSource {
    Catalog { name: String, params: Params },
    Config { path: String },
}

/// Everything needed to rerun the command that produced an output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub command: String,
    pub objective_source: Option<ObjectiveSource>,
    pub parameters: BTreeMap<String, serde_json::Value>,
    /// No random seeds or clocks enter the results.
    pub deterministic: bool,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, objective_source: Option<ObjectiveSource>) -> Self {
        Self {
            tool: format!("heatcont {}", env!("CARGO_PKG_VERSION")),
            command: command.to_string(),
            objective_source,
            parameters: BTreeMap::new(),
            deterministic: true,
            outputs: Vec::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Serialize) -> Self {
        let v = serde_json::to_value(value).expect("parameters serialize");
        self.parameters.insert(key.to_string(), v);
        self
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

/// A JSON output: the result together with the manifest that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document<T> {
    pub manifest: RunManifest,
    pub result: T,
}

/// Shortest representation that parses back to the same `f64`.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Failure(format!("{}: {e}", path.display()))
}

fn ensure_parent(path: &Path) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    Ok(())
}

pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn write_to<W: Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.header)?;
        for r in &self.rows {
            out.write_record(r)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_stdout(&self) -> Result<(), CliError> {
        self.write_to(std::io::stdout().lock())
            .map_err(|e| CliError::Failure(format!("stdout: {e}")))
    }
}

/// Writes the table and its sidecar manifest.
pub fn write_csv(path: &Path, table: &Table, manifest: &RunManifest) -> Result<(), CliError> {
    ensure_parent(path)?;
    let file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    table.write_to(file).map_err(|e| io_err(path, e))?;
    let side = sidecar_path(path);
    fs::write(&side, manifest.to_json() + "\n").map_err(|e| io_err(&side, e))
}

pub fn write_json<T: Serialize>(path: &Path, manifest: &RunManifest, result: &T) -> Result<(), CliError> {
    ensure_parent(path)?;
    let doc = Document {
        manifest: manifest.clone(),
        result,
    };
    let text = serde_json::to_string_pretty(&doc).map_err(|e| io_err(path, e))?;
    fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    ensure_parent(path)?;
    fs::write(path, text).map_err(|e| io_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 1e-5, 1.0, -2.5e300, 1.0 / 3.0, 123456789.123] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(num(2.0), "2.0");
    }

    #[test]
    fn sidecar_keeps_extension() {
        assert_eq!(
            sidecar_path(Path::new("out/a.csv")),
            PathBuf::from("out/a.csv.manifest.json")
        );
    }

    #[test]
    fn manifest_round_trips() {
        let m = RunManifest::new(
            "trace",
            Some(ObjectiveSource::Catalog {
                name: "abs".into(),
                params: Params::new(),
            }),
        )
        .with("t_start", 1.0);
        let back: RunManifest = serde_json::from_str(&m.to_json()).unwrap();
        assert_eq!(back, m);
    }
}
