//! CSV and JSON emission with atomic replacement of each file.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::CliError;

/// Shortest decimal text that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// A CSV file built in memory.
pub struct Table {
    name: String,
    writer: csv::Writer<Vec<u8>>,
    width: usize,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        writer.write_record(header).expect("in-memory write");
        Table { name: name.to_string(), writer, width: header.len() }
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        let fields: Vec<S> = fields.into_iter().collect();
        debug_assert_eq!(fields.len(), self.width, "row width in {}", self.name);
        self.writer.write_record(fields).expect("in-memory write");
    }

    fn into_bytes(self) -> (String, Vec<u8>) {
        let bytes = self.writer.into_inner().expect("in-memory flush");
        (self.name, bytes)
    }
}

/// Writes `bytes` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", target.display()));
    let mut f = fs::File::create(&tmp).map_err(io)?;
    f.write_all(bytes).map_err(io)?;
    f.sync_all().map_err(io)?;
    drop(f);
    fs::rename(&tmp, &target).map_err(io)?;
    Ok(target)
}

/// Everything a scenario produces.
#[derive(Default)]
pub struct Outputs {
    tables: Vec<Table>,
    json: Vec<(String, serde_json::Value)>,
    /// Points that hit a cap or failed individually.
    pub warnings: Vec<String>,
}

impl Outputs {
    pub fn table(&mut self, t: Table) {
        self.tables.push(t);
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) {
        self.json.push((name.to_string(), serde_json::to_value(value).expect("serializable summary")));
    }

    pub fn write(self, dir: &Path) -> Result<Vec<String>, CliError> {
        let mut names = Vec::new();
        for t in self.tables {
            let (name, bytes) = t.into_bytes();
            write_atomic(dir, &name, &bytes)?;
            names.push(name);
        }
        for (name, value) in self.json {
            let mut text = serde_json::to_string_pretty(&value).expect("json text");
            text.push('\n');
            write_atomic(dir, &name, text.as_bytes())?;
            names.push(name);
        }
        Ok(names)
    }
}

#[derive(Serialize)]
pub struct Manifest<'a> {
    pub manifest_version: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub config: &'a RunConfig,
    pub status: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub warnings: &'a [String],
    pub outputs: &'a [String],
    pub started_unix: f64,
    pub wall_seconds: f64,
    pub threads: usize,
}

impl Manifest<'_> {
    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest json");
        text.push('\n');
        write_atomic(dir, "run.json", text.as_bytes())?;
        Ok(())
    }
}
