//! CSV tables with a `#` metadata header.

use super::config::{Command, RunConfig};
use super::TOOL_VERSION;

/// One output file before rendering.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file: String,
    pub method: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// Extra `# key: value` lines (warnings, diagnostics).
    pub notes: Vec<String>,
}

impl Table {
    pub fn new(file: &str, method: String, columns: &[&str]) -> Self {
        Self {
            file: file.to_string(),
            method,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Header lines, then the column names and the rows.
    pub fn render(&self, command: Command, cfg: &RunConfig) -> String {
        let mut out = String::new();
        out.push_str(&format!("# tool: {TOOL_VERSION}\n"));
        out.push_str(&format!("# command: {}\n", command.name()));
        for line in cfg.echo() {
            out.push_str(&format!("# config: {line}\n"));
        }
        out.push_str(&format!("# method: {}\n", self.method));
        out.push_str(&format!("# seed: {}\n", cfg.seed));
        for note in &self.notes {
            out.push_str(&format!("# {}\n", note.replace('\n', " ")));
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        let body = w.into_inner().expect("in-memory write");
        out.push_str(std::str::from_utf8(&body).expect("utf-8 fields"));
        out
    }
}

/// Shortest round-trip representation.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, num)
}

/// Config lines echoed in a rendered table, without the `# config: ` prefix.
pub fn echoed_config(text: &str) -> String {
    text.lines()
        .filter_map(|l| l.strip_prefix("# config: "))
        .map(|l| format!("{l}\n"))
        .collect()
}
