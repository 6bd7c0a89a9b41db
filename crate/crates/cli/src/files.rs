//! Numeric column files and trace tables.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use bmos::tvdenoise::TvRecord;

use crate::config::TraceFormat;
use crate::error::CliError;

pub const TRACE_HEADER: [&str; 4] = ["t", "error", "z_change", "seconds"];

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(CliError::io(path))
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_column(path: &Path, values: &[f64]) -> Result<(), CliError> {
    let mut w = create(path)?;
    for v in values {
        writeln!(w, "{}", fmt_f64(*v)).map_err(CliError::io(path))?;
    }
    w.flush().map_err(CliError::io(path))
}

/// One value per line. Blank lines are skipped.
pub fn read_column(path: &Path) -> Result<Vec<f64>, CliError> {
    let f = File::open(path).map_err(CliError::io(path))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(CliError::io(path))?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let v: f64 = t.parse().map_err(|_| CliError::Parse {
            path: path.to_path_buf(),
            line: n + 1,
            message: format!("not a number: {t:?}"),
        })?;
        out.push(v);
    }
    Ok(out)
}

/// A labelled run, `variant` is `None` for single-run traces.
pub struct TraceTable<'a> {
    pub variant: Option<&'a str>,
    pub records: &'a [TvRecord],
}

pub fn write_trace(path: &Path, format: TraceFormat, runs: &[TraceTable]) -> Result<(), CliError> {
    let d = format.delimiter().to_string();
    let labelled = runs.iter().any(|r| r.variant.is_some());
    let mut w = create(path)?;
    let io = CliError::io(path);
    let mut text = String::new();
    if labelled {
        text.push_str("variant");
        text.push_str(&d);
    }
    text.push_str(&TRACE_HEADER.join(&d));
    text.push('\n');
    for run in runs {
        for r in run.records {
            if let Some(v) = run.variant {
                text.push_str(v);
                text.push_str(&d);
            }
            let error = r.error.map(fmt_f64).unwrap_or_default();
            let fields = [r.t.to_string(), error, fmt_f64(r.z_change), fmt_f64(r.seconds)];
            text.push_str(&fields.join(&d));
            text.push('\n');
        }
    }
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(io)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub variant: Option<String>,
    pub t: usize,
    pub error: Option<f64>,
    pub z_change: f64,
    pub seconds: f64,
}

/// Reads a file written by [`write_trace`]; `t` must increase strictly within each variant.
pub fn read_trace(path: &Path, format: TraceFormat) -> Result<Vec<TraceRow>, CliError> {
    let f = File::open(path).map_err(CliError::io(path))?;
    let d = format.delimiter();
    let err = |line: usize, message: String| CliError::Parse { path: path.to_path_buf(), line, message };
    let mut lines = BufReader::new(f).lines();
    let header = lines
        .next()
        .ok_or_else(|| err(1, "missing header".into()))?
        .map_err(CliError::io(path))?;
    let cols: Vec<&str> = header.split(d).collect();
    let labelled = match cols.as_slice() {
        [a, b, c, e] if [*a, *b, *c, *e] == TRACE_HEADER => false,
        ["variant", rest @ ..] if rest == TRACE_HEADER => true,
        _ => return Err(err(1, format!("unexpected header {header:?}"))),
    };
    let mut rows: Vec<TraceRow> = Vec::new();
    for (n, line) in lines.enumerate() {
        let ln = n + 2;
        let line = line.map_err(CliError::io(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut f: Vec<&str> = line.split(d).collect();
        let variant = if labelled && !f.is_empty() { Some(f.remove(0).to_string()) } else { None };
        if f.len() != 4 {
            return Err(err(ln, format!("expected {} fields", if labelled { 5 } else { 4 })));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| err(ln, format!("not a number: {s:?}")));
        let t: usize = f[0].parse().map_err(|_| err(ln, format!("bad iteration index {:?}", f[0])))?;
        let error = if f[1].is_empty() { None } else { Some(num(f[1])?) };
        let row = TraceRow { variant, t, error, z_change: num(f[2])?, seconds: num(f[3])? };
        if let Some(prev) = rows.last() {
            if prev.variant == row.variant && row.t <= prev.t {
                return Err(err(ln, format!("t={} does not follow t={}", row.t, prev.t)));
            }
        }
        rows.push(row);
    }
    Ok(rows)
}
