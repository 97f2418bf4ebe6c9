//! Tabular output with a provenance header. CSV files get a JSON sidecar with
//! the same metadata; JSON output carries both in one document.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Run-wide provenance shared by every file.
#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub program: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    /// System parameters in units of κ.
    pub params: Value,
    /// Effective settings after presets, files and overrides.
    pub settings: BTreeMap<String, String>,
}

/// A table of named real columns.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Column-major copy, for the JSON form.
    fn by_column(&self) -> Value {
        let mut obj = serde_json::Map::new();
        for (k, name) in self.columns.iter().enumerate() {
            let col: Vec<Value> = self.rows.iter().map(|r| number(r[k])).collect();
            obj.insert(name.clone(), Value::Array(col));
        }
        Value::Object(obj)
    }
}

/// Twelve significant digits; non-finite values as `nan`/`inf` text.
pub fn fmt12(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.11e}")
    } else {
        x.to_string().to_lowercase()
    }
}

fn number(x: f64) -> Value {
    if x.is_finite() {
        // round-trip through the 12-digit text so both formats agree
        Value::from(fmt12(x).parse::<f64>().unwrap_or(x))
    } else {
        Value::Null
    }
}

pub struct Writer {
    pub dir: PathBuf,
    pub format: Format,
    pub provenance: Provenance,
    written: Vec<PathBuf>,
}

impl Writer {
    pub fn new(dir: &Path, format: Format, provenance: Provenance) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            format,
            provenance,
            written: Vec::new(),
        })
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn header(&self, method: &str, meta: &Value) -> Value {
        json!({
            "provenance": self.provenance,
            "method": method,
            "metadata": meta,
        })
    }

    /// Writes `stem.csv` + `stem.json`, or `stem.json` alone.
    pub fn table(&mut self, stem: &str, method: &str, meta: Value, table: &Table) -> Result<()> {
        let head = self.header(method, &meta);
        match self.format {
            Format::Csv => {
                let mut text = String::new();
                text.push_str(&format!("# program: {} {}\n", self.provenance.program, self.provenance.version));
                text.push_str(&format!("# command: {}\n", self.provenance.command));
                text.push_str(&format!("# method: {method}\n"));
                text.push_str(&format!("# seed: {}\n", self.provenance.seed));
                text.push_str(&format!("# params: {}\n", self.provenance.params));
                for (k, v) in &self.provenance.settings {
                    text.push_str(&format!("# setting: {k}={v}\n"));
                }
                text.push_str(&table.columns.join(","));
                text.push('\n');
                for row in &table.rows {
                    let cells: Vec<String> = row.iter().map(|x| fmt12(*x)).collect();
                    text.push_str(&cells.join(","));
                    text.push('\n');
                }
                self.write(&format!("{stem}.csv"), &text)?;
                let mut sidecar = head;
                sidecar["columns"] = json!(table.columns);
                sidecar["rows"] = json!(table.rows.len());
                self.json_file(stem, &sidecar)
            }
            Format::Json => {
                let mut doc = head;
                doc["data"] = table.by_column();
                self.json_file(stem, &doc)
            }
        }
    }

    /// A JSON document that is not a table (reports, manifests, jump logs).
    pub fn document(&mut self, stem: &str, method: &str, body: Value) -> Result<()> {
        let mut doc = self.header(method, &Value::Null);
        doc["data"] = body;
        self.json_file(stem, &doc)
    }

    fn json_file(&mut self, stem: &str, doc: &Value) -> Result<()> {
        let text = serde_json::to_string_pretty(doc)? + "\n";
        self.write(&format!("{stem}.json"), &text)
    }

    fn write(&mut self, name: &str, text: &str) -> Result<()> {
        if name.contains('/') {
            bail!("output name `{name}` must not contain a path separator");
        }
        let path = self.dir.join(name);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(path);
        Ok(())
    }
}
