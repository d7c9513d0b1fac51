//! CSV and JSON writers. Both embed the parameter snapshot and code version.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::config::Entry;
use crate::error::{CliError, CliResult};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct Csv {
    command: String,
    notes: Vec<String>,
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Csv {
    pub fn new(command: &str, columns: Vec<String>) -> Self {
        Csv { command: command.into(), notes: Vec::new(), columns, rows: Vec::new() }
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.notes.push(line.into());
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn render(&self, snapshot: &[Entry]) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# domino {} (domino-cli {VERSION})", self.command);
        let _ = writeln!(s, "# parameters marked [default] are implementation choices, not values fixed by the model");
        for e in snapshot {
            let tag = if e.default { " [default]" } else { "" };
            let _ = writeln!(s, "# {} = {}{tag}", e.key, e.value);
        }
        for n in &self.notes {
            let _ = writeln!(s, "# {n}");
        }
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&x| fmt_f64(x)).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    pub fn write(&self, path: &Path, snapshot: &[Entry]) -> CliResult<()> {
        write_file(path, &self.render(snapshot))
    }
}

/// Wraps a command payload with version and parameters.
pub fn report(command: &str, snapshot: &[Entry], body: Value) -> Value {
    json!({
        "program": "domino",
        "version": VERSION,
        "command": command,
        "note": "parameters marked default are implementation choices, not values fixed by the model",
        "parameters": snapshot,
        "result": body,
    })
}

pub fn write_json(path: &Path, value: &Value) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Numerical(e.to_string()))?;
    text.push('\n');
    write_file(path, &text)
}

/// Report path next to a CSV: same stem, `.json`.
pub fn json_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// JSON number, or `null` for NaN and infinities.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, 6.02e23, -1e-300, 4.3738103953041705] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
            assert_eq!(mantissa.len(), 17);
        }
    }

    #[test]
    fn header_lines_are_comments() {
        let mut c = Csv::new("test", vec!["t".into(), "p".into()]);
        c.note("extra");
        c.push(vec![0.0, 1.0]);
        let snap = vec![Entry { key: "v".into(), value: "1.1".into(), default: true }];
        let text = c.render(&snap);
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[..lines.len() - 2].iter().all(|l| l.starts_with('#')));
        assert!(text.contains("# v = 1.1 [default]"));
        assert_eq!(lines[lines.len() - 2], "t,p");
    }
}
