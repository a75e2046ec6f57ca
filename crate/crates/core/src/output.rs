//! Result bundles and their CSV / JSON serialization.
//!
//! Output bytes depend only on the bundle, so identical runs give identical
//! files whatever the thread count.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::config::{Expectation, Format};
use crate::error::{LabError, Result};

#[derive(Clone, Debug, Default, Serialize, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| LabError::Io(e.to_string());
        w.write_record(&self.columns).map_err(err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(cell)).map_err(err)?;
        }
        w.flush().map_err(|e| LabError::Io(e.to_string()))
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// One expectation from a config checked against a metric.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Check {
    pub metric: String,
    pub expected: Expectation,
    pub observed: Option<f64>,
    pub pass: bool,
}

/// Everything a subcommand produces.
#[derive(Clone, Debug, Default, Serialize, PartialEq)]
pub struct Outcome {
    pub command: String,
    pub experiment: String,
    pub radius: usize,
    pub seed: u64,
    pub metrics: BTreeMap<String, f64>,
    pub notes: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
    /// Extra files written next to the tables, such as graph exports.
    #[serde(skip)]
    pub attachments: Vec<(String, Vec<u8>)>,
}

impl Outcome {
    pub fn metric(&mut self, name: &str, value: f64) {
        self.metrics.insert(name.into(), value);
    }

    pub fn note(&mut self, name: &str, value: impl Into<String>) {
        self.notes.insert(name.into(), value.into());
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| LabError::Io(e.to_string()))
    }

    /// `metric,value` rows followed by `note,text` rows.
    pub fn summary_table(&self) -> Table {
        let mut t = Table::new("summary", &["key", "value"]);
        for (k, v) in &self.metrics {
            t.push(vec![Value::from(k.as_str()), number(*v)]);
        }
        for (k, v) in &self.notes {
            t.push(vec![Value::from(k.as_str()), Value::from(v.as_str())]);
        }
        t
    }

    pub fn checks_table(&self) -> Table {
        let mut t = Table::new("checks", &["metric", "observed", "value", "tolerance", "min", "max", "pass"]);
        for c in &self.checks {
            t.push(vec![
                Value::from(c.metric.as_str()),
                c.observed.map_or(Value::Null, number),
                c.expected.value.map_or(Value::Null, number),
                c.expected.tolerance.map_or(Value::Null, number),
                c.expected.min.map_or(Value::Null, number),
                c.expected.max.map_or(Value::Null, number),
                Value::from(c.pass),
            ]);
        }
        t
    }

    /// Writes `<command>.json`, or `<command>_summary.csv` plus one CSV per
    /// table. Returns the written paths.
    pub fn write(&self, dir: &Path, format: Format) -> Result<Vec<std::path::PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        match format {
            Format::Json => {
                let path = dir.join(format!("{}.json", self.command));
                std::fs::write(&path, self.to_json()? + "\n")?;
                written.push(path);
            }
            Format::Csv => {
                let mut tables = vec![self.summary_table()];
                if !self.checks.is_empty() {
                    tables.push(self.checks_table());
                }
                tables.extend(self.tables.iter().cloned());
                for t in tables {
                    let path = dir.join(format!("{}_{}.csv", self.command, t.name));
                    t.write_csv(std::fs::File::create(&path)?)?;
                    written.push(path);
                }
            }
        }
        for (name, bytes) in &self.attachments {
            let path = dir.join(name);
            std::fs::write(&path, bytes)?;
            written.push(path);
        }
        Ok(written)
    }

    /// Stdout form: the JSON document, or the summary CSV.
    pub fn write_stdout<W: Write>(&self, format: Format, mut out: W) -> Result<()> {
        match format {
            Format::Json => writeln!(out, "{}", self.to_json()?)?,
            Format::Csv => self.summary_table().write_csv(out)?,
        }
        Ok(())
    }
}

/// JSON number, or `null` for non-finite values.
pub fn number(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_cells() {
        let mut t = Table::new("t", &["a", "b", "c"]);
        t.push(vec![number(0.5), Value::from("x,y"), number(f64::NAN)]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a,b,c\n0.5,\"x,y\",\n");
    }

    #[test]
    fn writes_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut o = Outcome {
            command: "kappa".into(),
            ..Default::default()
        };
        o.metric("rows", 1.0);
        o.tables.push(Table::new("kappa", &["index"]));
        let json = o.write(dir.path(), Format::Json).unwrap();
        assert_eq!(json.len(), 1);
        let csv = o.write(dir.path(), Format::Csv).unwrap();
        let names: Vec<_> = csv.iter().map(|p| p.file_name().unwrap().to_str().unwrap().to_string()).collect();
        assert_eq!(names, ["kappa_summary.csv", "kappa_kappa.csv"]);
        let back: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json[0]).unwrap()).unwrap();
        assert_eq!(back["metrics"]["rows"], 1.0);
    }
}
