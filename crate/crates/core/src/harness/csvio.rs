//! Trace and estimate CSV files.
//!
//! Values are written in `{:.16e}` form (17 significant digits), which is
//! enough for every `f64` to read back bit for bit.

use std::io::{Read, Write};

use thiserror::Error;

use crate::contact::ModelKind;
use crate::estimator::{estimated_force, Belief};
use crate::plant::TraceSample;

pub const TRACE_HEADER: [&str; 10] = [
    "t",
    "z_d",
    "z_d_dot",
    "z_d_ddot",
    "z_ee",
    "z_ee_dot_meas",
    "d_true",
    "d_dot_true",
    "F_contact_true",
    "F_ft_meas",
];

pub const ESTIMATE_HEADER: [&str; 10] = ["t", "x1", "x2", "x3", "x4", "P11", "P22", "P33", "P44", "F_hat"];

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("missing column '{0}'")]
    MissingColumn(String),
    #[error("row {row}, column '{column}': {reason}")]
    Malformed { row: usize, column: String, reason: String },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_rows<W: Write>(out: W, header: &[&str], rows: impl Iterator<Item = [f64; 10]>) -> Result<(), CsvError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| fmt(*v)))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads rows of `header`'s columns, located by name. Row numbers in errors
/// count the header as row 1.
fn read_rows<R: Read>(input: R, header: &[&str]) -> Result<Vec<[f64; 10]>, CsvError> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(input);
    let names = r.headers()?.clone();
    let mut index = [0usize; 10];
    for (slot, &col) in index.iter_mut().zip(header) {
        *slot = names
            .iter()
            .position(|h| h == col)
            .ok_or_else(|| CsvError::MissingColumn(col.to_string()))?;
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| CsvError::Malformed {
            row,
            column: String::new(),
            reason: e.to_string(),
        })?;
        let mut vals = [0.0; 10];
        for ((v, &j), &col) in vals.iter_mut().zip(&index).zip(header) {
            let field = rec.get(j).ok_or_else(|| CsvError::Malformed {
                row,
                column: col.to_string(),
                reason: "field missing".into(),
            })?;
            *v = field.parse().map_err(|_| CsvError::Malformed {
                row,
                column: col.to_string(),
                reason: format!("'{field}' is not a number"),
            })?;
        }
        rows.push(vals);
    }
    Ok(rows)
}

pub fn write_trace<W: Write>(out: W, trace: &[TraceSample]) -> Result<(), CsvError> {
    write_rows(
        out,
        &TRACE_HEADER,
        trace.iter().map(|s| {
            [
                s.t,
                s.z_d,
                s.z_d_dot,
                s.z_d_ddot,
                s.z_ee,
                s.z_ee_dot_meas,
                s.d_true,
                s.d_dot_true,
                s.f_contact_true,
                s.f_ft_meas,
            ]
        }),
    )
}

pub fn read_trace<R: Read>(input: R) -> Result<Vec<TraceSample>, CsvError> {
    let rows = read_rows(input, &TRACE_HEADER)?;
    Ok(rows
        .into_iter()
        .map(|v| TraceSample {
            t: v[0],
            z_d: v[1],
            z_d_dot: v[2],
            z_d_ddot: v[3],
            z_ee: v[4],
            z_ee_dot_meas: v[5],
            d_true: v[6],
            d_dot_true: v[7],
            f_contact_true: v[8],
            f_ft_meas: v[9],
        })
        .collect())
}

/// One estimate row: time, state, covariance diagonal and the force implied
/// by the state under `law`.
pub fn write_estimates<W: Write>(out: W, beliefs: &[(f64, Belief)], law: ModelKind) -> Result<(), CsvError> {
    write_rows(
        out,
        &ESTIMATE_HEADER,
        beliefs.iter().map(|(t, b)| {
            let x = &b.x_hat;
            [
                *t,
                x[0],
                x[1],
                x[2],
                x[3],
                b.p[(0, 0)],
                b.p[(1, 1)],
                b.p[(2, 2)],
                b.p[(3, 3)],
                estimated_force(x, law),
            ]
        }),
    )
}

/// Parsed estimate rows in header order.
pub fn read_estimates<R: Read>(input: R) -> Result<Vec<[f64; 10]>, CsvError> {
    read_rows(input, &ESTIMATE_HEADER)
}
