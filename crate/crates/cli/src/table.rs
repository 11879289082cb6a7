//! CSV tables on disk or stdout.

use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use bscrls::metrics::BinaryMetrics;

pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn write_to(&self, w: impl Write, with_header: bool) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        if with_header {
            out.write_record(&self.header)?;
        }
        for r in &self.rows {
            out.write_record(r)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Writes to `path`, or to stdout when no path is given.
    pub fn emit(&self, path: Option<&Path>) -> Result<()> {
        match path {
            Some(p) => self.write_to(
                File::create(p).with_context(|| format!("creating {}", p.display()))?,
                true,
            ),
            None => match self.write_to(io::stdout().lock(), true) {
                Err(e) if closed_pipe(&e) => Ok(()),
                r => r,
            },
        }
    }

    /// Adds rows to an existing table, creating it with a header if absent.
    pub fn append(&self, path: &Path) -> Result<()> {
        let existing = match File::open(path) {
            Ok(f) => {
                let mut first = String::new();
                BufReader::new(f).read_line(&mut first)?;
                Some(first)
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => None,
            Err(e) => return Err(e).with_context(|| format!("opening {}", path.display())),
        };
        match existing.as_deref().map(str::trim_end) {
            None | Some("") => self.write_to(File::create(path)?, true),
            Some(h) if h == self.header.join(",") => self.write_to(OpenOptions::new().append(true).open(path)?, false),
            Some(h) => bail!(
                "{} has columns '{h}', expected '{}'",
                path.display(),
                self.header.join(",")
            ),
        }
    }
}

fn closed_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        let io = c
            .downcast_ref::<io::Error>()
            .or_else(|| match c.downcast_ref::<csv::Error>()?.kind() {
                csv::ErrorKind::Io(io) => Some(io),
                _ => None,
            });
        io.is_some_and(|io| io.kind() == io::ErrorKind::BrokenPipe)
    })
}

/// Shortest decimal that reads back to the same value.
pub fn num(v: f64) -> String {
    format!("{v}")
}

/// Undefined ratios are written as `nan`.
pub fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), num)
}

pub const METRIC_NAMES: [&str; 6] = ["accuracy", "precision", "recall", "f1", "fpr", "fnr"];

pub fn metric_values(m: &BinaryMetrics) -> [Option<f64>; 6] {
    [Some(m.accuracy), m.precision, m.recall, m.f1, m.fpr, m.fnr]
}
