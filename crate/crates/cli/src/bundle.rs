//! Report bundles and their byte-exact emission.
//!
//! Every command produces a bundle of named artifacts: one JSON report plus
//! zero or more CSV tables. Identical inputs, flags, and seed produce
//! byte-identical artifacts; nothing time- or machine-dependent is written,
//! and output does not depend on the worker-thread count.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;

/// One named output file (or stdio-envelope entry).
#[derive(Debug, Clone, Serialize)]
pub struct Artifact {
    pub name: String,
    pub content: String,
}

/// All artifacts of one command invocation.
#[derive(Debug, Clone, Serialize)]
pub struct ReportBundle {
    pub schema_version: u32,
    pub command: String,
    pub artifacts: Vec<Artifact>,
}

impl ReportBundle {
    pub fn new(command: &str) -> ReportBundle {
        ReportBundle {
            schema_version: crate::system::SCHEMA_VERSION,
            command: command.to_string(),
            artifacts: Vec::new(),
        }
    }

    pub fn push_json<T: Serialize>(&mut self, name: &str, payload: &T) {
        let mut text =
            serde_json::to_string_pretty(payload).expect("report payloads are serializable");
        text.push('\n');
        self.artifacts.push(Artifact {
            name: name.to_string(),
            content: text,
        });
    }

    pub fn push_csv(&mut self, name: &str, header: &str, rows: Vec<String>) {
        let mut text = String::with_capacity(16 * rows.len() + header.len() + 1);
        text.push_str(header);
        text.push('\n');
        for r in rows {
            text.push_str(&r);
            text.push('\n');
        }
        self.artifacts.push(Artifact {
            name: name.to_string(),
            content: text,
        });
    }

    /// Write artifacts as files under `out`, or as a single JSON envelope
    /// on stdout when `stdio` is set.
    pub fn emit(&self, out: &Path, stdio: bool) -> Result<()> {
        let mut stdout = std::io::stdout().lock();
        if stdio {
            let mut text =
                serde_json::to_string_pretty(self).expect("bundle envelope is serializable");
            text.push('\n');
            stdout.write_all(text.as_bytes())?;
            return Ok(());
        }
        fs::create_dir_all(out)?;
        for a in &self.artifacts {
            let path = out.join(&a.name);
            fs::write(&path, a.content.as_bytes())?;
            writeln!(stdout, "wrote {}", path.display())?;
        }
        Ok(())
    }
}

/// Decimal-point reals at 17 significant digits: enough to round-trip an
/// f64 exactly, locale-independent.
pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}
