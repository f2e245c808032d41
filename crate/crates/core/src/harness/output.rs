//! Serialization helpers shared by every report.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::config::RunConfig;
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

pub fn fmt_opt_float(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

pub fn parse_float(s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::config(format!("bad float {s:?}")))
}

pub fn parse_opt_float(s: &str) -> Result<Option<f64>> {
    if s.trim().is_empty() {
        Ok(None)
    } else {
        parse_float(s).map(Some)
    }
}

/// A CSV table with optional `# key=value` metadata lines before the header.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Csv {
    pub metadata: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self { metadata: Vec::new(), header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn meta(&mut self, key: &str, value: impl Into<String>) {
        self.metadata.push((key.to_string(), value.into()));
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            out.push_str(&format!("# {k}={v}\n"));
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        // writing into a Vec cannot fail
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        out.push_str(&String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields"));
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut csv = Csv::default();
        let mut body = text;
        while let Some(line) = body.lines().next().and_then(|l| l.strip_prefix("# ")) {
            let (k, v) = line.split_once('=').ok_or_else(|| Error::config(format!("bad metadata line {line:?}")))?;
            csv.metadata.push((k.to_string(), v.to_string()));
            body = body.split_once('\n').map_or("", |(_, rest)| rest);
        }
        let mut reader = csv::ReaderBuilder::new().from_reader(body.as_bytes());
        let bad = |e: csv::Error| Error::config(format!("bad CSV: {e}"));
        csv.header = reader.headers().map_err(bad)?.iter().map(str::to_string).collect();
        for record in reader.records() {
            csv.rows.push(record.map_err(bad)?.iter().map(str::to_string).collect());
        }
        Ok(csv)
    }

    pub fn get_meta(&self, key: &str) -> Result<&str> {
        self.metadata
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| Error::config(format!("missing metadata {key:?}")))
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::config(format!("missing column {name:?}")))
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema_version: u32,
    kind: &'a str,
    config: &'a RunConfig,
    result: &'a T,
}

/// Versioned JSON document holding the full config next to the result.
pub fn json_document<T: Serialize>(kind: &str, config: &RunConfig, result: &T) -> Result<String> {
    let doc = Envelope { schema_version: SCHEMA_VERSION, kind, config, result };
    let mut s = serde_json::to_string_pretty(&doc).map_err(|e| Error::config(format!("serializing {kind}: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// Write to `path`, or to stdout when it is `None`.
pub fn write_output(path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, content).map_err(|source| Error::Io { path: p.to_path_buf(), source }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(content.as_bytes())
                .map_err(|source| Error::Io { path: "<stdout>".into(), source })
        }
    }
}
