//! CSV and JSON emission.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub const TOOL_VERSION: &str = concat!("ising-qfi ", env!("CARGO_PKG_VERSION"));

/// Shortest round-trip text for a finite real; `inf` for `+∞`.
pub fn real(x: f64) -> Result<String> {
    if x.is_finite() {
        Ok(format!("{x}"))
    } else if x == f64::INFINITY {
        Ok("inf".into())
    } else {
        Err(Error::Domain(format!("non-finite value {x} in output")))
    }
}

/// Like [`real`] but refusing infinity, for computed quantities.
pub fn finite(x: f64) -> Result<String> {
    if x.is_finite() {
        Ok(format!("{x}"))
    } else {
        Err(Error::Domain(format!("non-finite value {x} in output")))
    }
}

fn escape(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

pub struct Csv {
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new(task: &str, config_hash: &str, seed: Option<u64>, columns: Vec<&'static str>) -> Self {
        let mut metadata = vec![
            ("tool".to_string(), TOOL_VERSION.to_string()),
            ("task".to_string(), task.to_string()),
            ("config-sha256".to_string(), config_hash.to_string()),
        ];
        if let Some(s) = seed {
            metadata.push(("seed".to_string(), s.to_string()));
        }
        Csv {
            metadata,
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Key columns followed by either computed values or an error message.
    pub fn push_result(&mut self, key: Vec<String>, values: Result<Vec<String>>) {
        let width = self.columns.len() - key.len() - 1;
        let mut row = key;
        match values {
            Ok(v) => {
                debug_assert_eq!(v.len(), width);
                row.extend(v);
                row.push(String::new());
            }
            Err(e) => {
                row.extend(std::iter::repeat_n(String::new(), width));
                row.push(e.to_string());
            }
        }
        self.push(row);
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.metadata {
            s.push_str(&format!("# {k}: {v}\n"));
        }
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|c| escape(c)).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

/// Writes `text` to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

pub fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("summary serializes");
    s.push('\n');
    s
}
