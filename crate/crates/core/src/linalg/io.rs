//! Plain-text matrix format: a first line holding `p`, then `p` lines of `p`
//! whitespace-separated reals, row-major.

use std::fmt::Write as _;
use std::path::Path;

use super::matrix::SymMatrix;
use super::LinalgError;

pub const MATRIX_ASYMMETRY_TOL: f64 = 1e-12;

pub fn parse_matrix(text: &str) -> Result<SymMatrix, LinalgError> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| LinalgError::Parse("missing dimension line".into()))?;
    let p: usize = header
        .parse()
        .map_err(|_| LinalgError::Parse(format!("bad dimension line {header:?}")))?;
    if p == 0 {
        return Err(LinalgError::EmptyMatrix);
    }
    let mut data = Vec::with_capacity(p * p);
    for row in 0..p {
        let line = lines
            .next()
            .ok_or_else(|| LinalgError::Parse(format!("expected {p} rows, got {row}")))?;
        let before = data.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| LinalgError::Parse(format!("row {row}: bad number {tok:?}")))?;
            data.push(v);
        }
        if data.len() - before != p {
            return Err(LinalgError::Parse(format!(
                "row {row}: expected {p} entries, got {}",
                data.len() - before
            )));
        }
    }
    if let Some(extra) = lines.next() {
        return Err(LinalgError::Parse(format!("trailing content {extra:?}")));
    }
    SymMatrix::from_row_major(p, data, MATRIX_ASYMMETRY_TOL)
}

/// Formats with 17 significant digits, which round-trips every `f64`.
pub fn write_matrix(a: &SymMatrix) -> String {
    let p = a.dim();
    let mut out = String::with_capacity(p * p * 25);
    let _ = writeln!(out, "{p}");
    for i in 0..p {
        let row: Vec<String> = a.row(i).iter().map(|v| format!("{v:.16e}")).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<SymMatrix, LinalgError> {
    parse_matrix(&std::fs::read_to_string(path)?)
}
