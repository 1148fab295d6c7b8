//! CSV and JSON emission. Numeric CSV cells carry 17 significant digits so
//! doubles round-trip exactly, and repeated runs are byte-identical.

use crate::CliError;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Render one f64 with 17 significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub struct CsvWriter {
    lines: Vec<String>,
}

impl CsvWriter {
    pub fn new(header: &[&str]) -> Self {
        Self {
            lines: vec![header.join(",")],
        }
    }

    pub fn row(&mut self, cells: &[f64]) {
        let rendered: Vec<String> = cells.iter().map(|&v| num(v)).collect();
        self.lines.push(rendered.join(","));
    }

    pub fn finish(self) -> String {
        let mut text = self.lines.join("\n");
        text.push('\n');
        text
    }
}

/// Write to the path when given, stdout otherwise.
pub fn emit(target: Option<&PathBuf>, content: &str) -> Result<(), CliError> {
    match target {
        Some(path) => write_file(path, content),
        None => {
            // a closed pipe (e.g. `| head`) is not an error
            match std::io::stdout().write_all(content.as_bytes()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                    Err(CliError::Config(format!("stdout: {e}")))
                }
                _ => Ok(()),
            }
        }
    }
}

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content)
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}
