use std::fmt::Write as _;
use std::path::Path;

use anyhow::Context;
use serde::Serialize;

/// Writes `text` to `path`, or to standard output when there is none.
pub fn emit(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("cannot write {}", path.display()))
            .map_err(|e| crate::settings::spec_error(format!("{e:#}"))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

/// Minimal CSV builder; no field ever contains a comma or a quote.
pub struct Csv {
    buf: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut csv = Csv { buf: String::new() };
        csv.row(header.iter().map(|h| h.to_string()));
        csv
    }

    pub fn row(&mut self, fields: impl IntoIterator<Item = String>) {
        let line: Vec<String> = fields.into_iter().collect();
        writeln!(self.buf, "{}", line.join(",")).unwrap();
    }

    pub fn finish(self) -> String {
        self.buf
    }
}

pub fn opt(x: Option<f64>, missing: &str) -> String {
    x.map_or_else(|| missing.to_string(), |v| v.to_string())
}

/// Rounds a closed-form value to 12 significant digits so that exact
/// rationals print as such (13, not 12.999999999999998).
pub fn tidy(x: Option<f64>) -> Option<f64> {
    x.map(|v| format!("{v:.11e}").parse().unwrap())
}
