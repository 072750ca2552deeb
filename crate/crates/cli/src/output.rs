//! Result bundles and their on-disk form.
//!
//! Experiments build the whole bundle in memory; [`write_outputs`] then
//! writes each file to a temporary name and renames it into place, removing
//! everything it wrote if any step fails.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

/// A CSV table with an optional `#` metadata line above the header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub metadata: Option<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            metadata: None,
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn with_metadata(mut self, meta: impl Into<String>) -> Self {
        self.metadata = Some(meta.into());
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, CliError> {
        let mut out = Vec::new();
        if let Some(m) = &self.metadata {
            out.extend_from_slice(format!("# {m}\n").as_bytes());
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.into_error()))
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e))
}

#[derive(Debug, Clone)]
pub struct Bundle {
    pub tables: Vec<Table>,
    /// Extra text files such as plot scripts.
    pub extras: Vec<(String, String)>,
    pub summary: serde_json::Value,
    /// Some sample set exceeded the censoring threshold.
    pub unreliable: bool,
}

/// Censored fraction above which a result is flagged unreliable.
pub const CENSOR_LIMIT: f64 = 0.1;

/// Float formatting used in every table: shortest round-trip form.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:e}")
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn to_json<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("serializable")
}

fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let mut name = path.file_name().expect("file name").to_os_string();
    name.push(".tmp");
    let tmp = path.with_file_name(name);
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path).inspect_err(|_| {
        let _ = std::fs::remove_file(&tmp);
    })
}

/// Writes every table, extra file and `summary.json` into `dir`.
pub fn write_outputs(bundle: &Bundle, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let result = (|| -> Result<(), CliError> {
        for t in &bundle.tables {
            let path = dir.join(&t.name);
            write_atomic(&path, &t.to_bytes()?)?;
            written.push(path);
        }
        for (name, text) in &bundle.extras {
            let path = dir.join(name);
            write_atomic(&path, text.as_bytes())?;
            written.push(path);
        }
        let mut json = serde_json::to_vec_pretty(&bundle.summary).map_err(std::io::Error::other)?;
        json.push(b'\n');
        let path = dir.join("summary.json");
        write_atomic(&path, &json)?;
        written.push(path);
        Ok(())
    })();
    match result {
        Ok(()) => Ok(written),
        Err(e) => {
            for p in &written {
                let _ = std::fs::remove_file(p);
            }
            Err(e)
        }
    }
}

/// gnuplot stub plotting the empirical CDF of each sample table.
pub fn gnuplot_stub(tables: &[Table], column: &str) -> String {
    let mut s = String::from(
        "# Empirical CDFs of the sample tables; run with `gnuplot -p plot.gp`.\n\
         set datafile separator ','\nset datafile commentschars '#'\nset logscale x\n\
         set xlabel 'time (s)'\nset ylabel 'CDF'\nset key bottom right\n",
    );
    let plots: Vec<String> = tables
        .iter()
        .filter(|t| t.header.iter().any(|h| h == column))
        .map(|t| {
            let col = t.header.iter().position(|h| h == column).unwrap() + 1;
            format!("'{}' skip 1 using {col}:(1.0) smooth cnormal title '{}'", t.name, t.name)
        })
        .collect();
    if !plots.is_empty() {
        s.push_str("plot ");
        s.push_str(&plots.join(", \\\n     "));
        s.push('\n');
    }
    s
}
