//! JSON documents and CSV tables. Key order in JSON is lexicographic
//! (serde_json's default map), and CSV doubles carry 17 significant digits,
//! so identical inputs give identical bytes.

use std::io::Write;
use std::path::Path;

use serde_json::{json, Value};

use crate::config::CliError;

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone)]
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self { text: header.join(",") + "\n" }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

pub struct Report {
    pub json: Value,
    pub csv: Csv,
    /// Written to stdout when no output path is given.
    pub csv_is_primary: bool,
}

pub fn document(config: Value, rows: Value, fit: Option<Value>, metadata: Value) -> Value {
    let mut doc = json!({ "config": config, "rows": rows, "metadata": metadata });
    if let Some(fit) = fit {
        doc["fit"] = fit;
    }
    doc
}

pub fn render_json(doc: &Value) -> String {
    let mut text = serde_json::to_string_pretty(doc).expect("serializing a JSON value cannot fail");
    text.push('\n');
    text
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn emit(report: &Report, json_path: Option<&Path>, csv_path: Option<&Path>) -> Result<(), CliError> {
    let json_text = render_json(&report.json);
    if let Some(p) = json_path {
        write_file(p, &json_text)?;
    }
    if let Some(p) = csv_path {
        write_file(p, report.csv.as_str())?;
    }
    if json_path.is_none() && csv_path.is_none() {
        let text = if report.csv_is_primary { report.csv.as_str() } else { json_text.as_str() };
        match std::io::stdout().lock().write_all(text.as_bytes()) {
            // A closed pipe (`| head`) is not an error.
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(CliError::Io(e.to_string())),
            _ => {}
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubles_keep_seventeen_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(0.1).parse::<f64>().unwrap(), 0.1);
        assert_eq!(num(-2.0), "-2.0000000000000000e0");
    }

    #[test]
    fn documents_round_trip() {
        let doc = document(json!({"n": 1}), json!([{"b": 0.30000000000000004, "a": null}]), Some(json!({"slope": 0.5})), json!({}));
        let text = render_json(&doc);
        let again: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(render_json(&again), text);
        assert!(text.find("\"config\"").unwrap() < text.find("\"fit\"").unwrap());
    }
}
