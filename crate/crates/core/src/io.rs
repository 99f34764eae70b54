//! CSV and JSON artifacts: writers and the matching readers.
//!
//! Numeric CSV cells carry 9 significant digits. Every file has a header row.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{ClmError, Result};
use crate::simulator::{PQTrace, VoltageTrace};

/// Formats `x` with 9 significant digits, like C's `%.9g`.
pub fn fmt_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.8e}");
    let (mant, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mant.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Numeric table: named columns of equal length.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(headers: &[&str], columns: Vec<Vec<f64>>) -> Result<Self> {
        if headers.len() != columns.len() {
            return Err(ClmError::LengthMismatch {
                left: headers.len(),
                right: columns.len(),
            });
        }
        if let Some(first) = columns.first() {
            for c in &columns {
                if c.len() != first.len() {
                    return Err(ClmError::LengthMismatch {
                        left: first.len(),
                        right: c.len(),
                    });
                }
            }
        }
        Ok(Table {
            headers: headers.iter().map(|h| h.to_string()).collect(),
            columns,
        })
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.headers
            .iter()
            .position(|h| h == name)
            .map(|i| self.columns[i].as_slice())
            .ok_or_else(|| ClmError::InvalidConfig(format!("missing column '{name}'")))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.headers)?;
        for r in 0..self.rows() {
            w.write_record(self.columns.iter().map(|c| fmt_sig9(c[r])))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
        let headers: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let mut columns = vec![Vec::new(); headers.len()];
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            for (c, cell) in rec.iter().enumerate() {
                let v: f64 = cell.parse().map_err(|_| {
                    ClmError::InvalidConfig(format!("{}: row {}: '{cell}' is not a number", path.display(), line + 2))
                })?;
                columns[c].push(v);
            }
        }
        Ok(Table { headers, columns })
    }
}

fn time_column(dt: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| k as f64 * dt).collect()
}

/// Step of a uniformly spaced time column.
fn uniform_step(t: &[f64]) -> Result<f64> {
    if t.len() < 2 {
        return Err(ClmError::TooFewSamples { needed: 2, got: t.len() });
    }
    let dt = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
    if !(dt > 0.0) {
        return Err(ClmError::InvalidConfig("time column must be increasing".into()));
    }
    for (k, tk) in t.iter().enumerate() {
        if (tk - (t[0] + k as f64 * dt)).abs() > 1e-6 * dt.max(tk.abs()) {
            return Err(ClmError::InvalidConfig(format!("time column is not uniformly spaced near t = {tk}")));
        }
    }
    Ok(snap_rate(dt))
}

/// Times carry 9 significant digits, so the recovered step is off by about
/// 1e-9 relative; a step within that of an integer sampling rate is snapped
/// to it exactly.
fn snap_rate(dt: f64) -> f64 {
    let rate = (1.0 / dt).round();
    if rate >= 1.0 && ((1.0 / rate) - dt).abs() <= 1e-7 * dt {
        1.0 / rate
    } else {
        dt
    }
}

pub fn write_pq_csv(path: &Path, trace: &PQTrace) -> Result<()> {
    Table::new(
        &["t", "p", "q"],
        vec![time_column(trace.dt, trace.len()), trace.p.clone(), trace.q.clone()],
    )?
    .write(path)
}

/// Reads a `t,p,q` CSV with uniformly spaced times.
pub fn read_pq_csv(path: &Path) -> Result<PQTrace> {
    let t = Table::read(path)?;
    let dt = uniform_step(t.column("t")?)?;
    PQTrace::new(dt, t.column("p")?.to_vec(), t.column("q")?.to_vec())
}

pub fn write_v_csv(path: &Path, trace: &VoltageTrace) -> Result<()> {
    Table::new(&["t", "v"], vec![time_column(trace.dt, trace.len()), trace.samples.clone()])?.write(path)
}

pub fn read_v_csv(path: &Path) -> Result<VoltageTrace> {
    let t = Table::read(path)?;
    let dt = uniform_step(t.column("t")?)?;
    VoltageTrace::new(dt, t.column("v")?.to_vec())
}

/// Reference and fitted responses side by side.
pub fn write_overlay_csv(path: &Path, reference: &PQTrace, fit: &PQTrace) -> Result<()> {
    Table::new(
        &["t", "p_ref", "p_fit", "q_ref", "q_fit"],
        vec![
            time_column(reference.dt, reference.len()),
            reference.p.clone(),
            fit.p.clone(),
            reference.q.clone(),
            fit.q.clone(),
        ],
    )?
    .write(path)
}

/// Returns `(reference, fit)` from an overlay CSV.
pub fn read_overlay_csv(path: &Path) -> Result<(PQTrace, PQTrace)> {
    let t = Table::read(path)?;
    let dt = uniform_step(t.column("t")?)?;
    Ok((
        PQTrace::new(dt, t.column("p_ref")?.to_vec(), t.column("q_ref")?.to_vec())?,
        PQTrace::new(dt, t.column("p_fit")?.to_vec(), t.column("q_fit")?.to_vec())?,
    ))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(std::io::BufReader::new(File::open(path)?))?)
}
