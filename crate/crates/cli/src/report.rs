use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};

/// Key/value lines written as `# key: value` above every report.
#[derive(Clone, Debug, Default)]
pub struct Provenance {
    entries: Vec<(String, String)>,
}

impl Provenance {
    pub fn new() -> Self {
        let argv: Vec<String> = std::env::args().collect();
        Provenance {
            entries: vec![
                ("tool".into(), format!("rmprofile {}", env!("CARGO_PKG_VERSION"))),
                ("command".into(), argv.join(" ")),
            ],
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.entries.push((key.into(), value.to_string()));
        self
    }

    pub fn with_json(self, key: &str, value: &impl serde::Serialize) -> Self {
        let text = serde_json::to_string(value).unwrap_or_else(|e| format!("<unserialisable: {e}>"));
        self.with(key, text)
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }
}

pub fn write_report(path: &Path, prov: &Provenance, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut out = BufWriter::new(file);
    for (k, v) in prov.entries() {
        writeln!(out, "# {k}: {}", v.replace('\n', " "))?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Fixed-precision float for report cells.
pub fn num(v: f64) -> String {
    format!("{v:.6}")
}
