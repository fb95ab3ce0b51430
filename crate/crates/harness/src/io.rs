//! Plain-text matrices and vectors: whitespace-separated numbers, one matrix
//! row per line, `#` starts a comment.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{HarnessError, Result};

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_row(path: &Path, line_no: usize, line: &str) -> Result<Vec<f64>> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .map_err(|_| HarnessError::file(path, format!("line {line_no}: cannot parse {tok:?}")))
        })
        .collect()
}

pub fn parse_matrix(path: &Path, text: &str) -> Result<DMatrix<f64>> {
    let mut rows = Vec::new();
    for (no, line) in data_lines(text) {
        let row = parse_row(path, no, line)?;
        if let Some(first) = rows.first() {
            let first: &Vec<f64> = first;
            if row.len() != first.len() {
                return Err(HarnessError::file(
                    path,
                    format!("line {no}: expected {} columns, found {}", first.len(), row.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(HarnessError::file(path, "no matrix entries"));
    }
    let (m, n) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_row_iterator(m, n, rows.into_iter().flatten()))
}

/// Accepts one value per line or several per line.
pub fn parse_vector(path: &Path, text: &str) -> Result<DVector<f64>> {
    let mut values = Vec::new();
    for (no, line) in data_lines(text) {
        values.extend(parse_row(path, no, line)?);
    }
    if values.is_empty() {
        return Err(HarnessError::file(path, "no vector entries"));
    }
    Ok(DVector::from_vec(values))
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::file(path, e))?;
    parse_matrix(path, &text)
}

pub fn read_vector(path: &Path) -> Result<DVector<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::file(path, e))?;
    parse_vector(path, &text)
}

pub fn format_matrix(a: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..a.nrows() {
        let row: Vec<String> = a.row(i).iter().map(|v| format!("{v:.16e}")).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

pub fn format_vector(v: &DVector<f64>) -> String {
    v.iter().map(|x| format!("{x:.16e}\n")).collect()
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::file(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| HarnessError::file(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_crlf_and_comments() {
        let p = Path::new("m.txt");
        let m = parse_matrix(p, "# header\r\n1 2 3\r\n4 5 6 # tail\r\n\r\n").unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]));
        let v = parse_vector(p, "1\r\n2 3\n").unwrap();
        assert_eq!(v.as_slice(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn ragged_rows_report_line() {
        let err = parse_matrix(Path::new("m.txt"), "1 2\n3\n").unwrap_err();
        assert!(err.to_string().contains("line 2"));
        assert!(err.to_string().contains("m.txt"));
    }

    #[test]
    fn formatting_round_trips() {
        let m = DMatrix::from_row_slice(2, 2, &[0.1, -1e-300, 3.0, 1.0 / 3.0]);
        assert_eq!(parse_matrix(Path::new("x"), &format_matrix(&m)).unwrap(), m);
        let v = DVector::from_vec(vec![std::f64::consts::PI, -0.0]);
        assert_eq!(parse_vector(Path::new("x"), &format_vector(&v)).unwrap(), v);
    }
}
