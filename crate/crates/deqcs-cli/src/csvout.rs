//! Deterministic CSV output.
//!
//! Values are formatted explicitly (scientific notation with fixed
//! precision for measured quantities) so identical runs produce identical
//! bytes; no locale or float-shortest-repr variability.

use std::fs;
use std::path::Path;

use crate::error::{cfg_err, Result};

/// In-memory CSV builder.
#[derive(Debug)]
pub struct Csv {
    buf: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv {
            buf: format!("{}\n", header.join(",")),
            columns: header.len(),
        }
    }

    /// Append one row; fields are already-formatted strings.
    pub fn row(&mut self, fields: &[String]) {
        assert_eq!(
            fields.len(),
            self.columns,
            "row width {} != header width {}",
            fields.len(),
            self.columns
        );
        self.buf.push_str(&fields.join(","));
        self.buf.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.buf
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.as_str())
            .map_err(|e| cfg_err(format!("cannot write {}: {e}", path.display())))
    }
}

/// Measured quantity: 6 significant-digit scientific notation.
pub fn fmt_e(x: f64) -> String {
    format!("{x:.6e}")
}

/// Grid value (SNR point, κ, …): plain display, stable for round numbers.
pub fn fmt_plain(x: f64) -> String {
    format!("{x}")
}
