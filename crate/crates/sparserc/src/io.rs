//! Plain-text serialization: numeric CSV matrices (no header), `i,j,w`
//! edge lists, and key=value sidecar files. Floats are written with
//! shortest round-trip formatting, so read-after-write is lossless.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};

/// Renders a matrix as CSV rows of comma-separated decimal values.
pub fn matrix_to_csv(m: &Array2<f64>) -> String {
    let mut out = String::new();
    for row in m.rows() {
        let mut first = true;
        for v in row {
            if !first {
                out.push(',');
            }
            let _ = write!(out, "{v}");
            first = false;
        }
        out.push('\n');
    }
    out
}

/// Parses a headerless numeric CSV into a matrix. Rows must all have the
/// same width; errors carry 1-based row and column positions.
pub fn parse_matrix_csv(text: &str) -> Result<Array2<f64>> {
    let mut values: Vec<f64> = Vec::new();
    let mut width: Option<usize> = None;
    let mut rows = 0usize;
    for (r, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        match width {
            None => width = Some(fields.len()),
            Some(w) if w != fields.len() => {
                return Err(Error::Parse {
                    row: r + 1,
                    col: fields.len(),
                    msg: format!("expected {w} columns, found {}", fields.len()),
                });
            }
            _ => {}
        }
        for (c, field) in fields.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                row: r + 1,
                col: c + 1,
                msg: format!("not a number: {field:?}"),
            })?;
            values.push(v);
        }
        rows += 1;
    }
    let width = width.unwrap_or(0);
    if rows == 0 || width == 0 {
        return Err(Error::Parse {
            row: 1,
            col: 1,
            msg: "empty matrix".into(),
        });
    }
    Array2::from_shape_vec((rows, width), values).map_err(|e| Error::Parse {
        row: rows,
        col: width,
        msg: e.to_string(),
    })
}

pub fn write_matrix_csv(path: &Path, m: &Array2<f64>) -> Result<()> {
    std::fs::write(path, matrix_to_csv(m))?;
    Ok(())
}

pub fn read_matrix_csv(path: &Path) -> Result<Array2<f64>> {
    let text = std::fs::read_to_string(path)?;
    parse_matrix_csv(&text)
}

/// Renders the nonzero entries as `i,j,w` lines with 0-based indices.
pub fn edge_list_to_string(weights: &Array2<f64>) -> String {
    let mut out = String::new();
    for ((i, j), v) in weights.indexed_iter() {
        if *v != 0.0 {
            let _ = writeln!(out, "{i},{j},{v}");
        }
    }
    out
}

pub fn write_edge_list(path: &Path, weights: &Array2<f64>) -> Result<()> {
    std::fs::write(path, edge_list_to_string(weights))?;
    Ok(())
}

/// Writes `key=value` lines, one per entry, in the given order.
pub fn write_kv(path: &Path, pairs: &[(String, String)]) -> Result<()> {
    let mut out = String::new();
    for (k, v) in pairs {
        let _ = writeln!(out, "{k}={v}");
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Reads a `key=value` file back into a map.
pub fn read_kv(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)?;
    let mut map = BTreeMap::new();
    for (r, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            row: r + 1,
            col: 1,
            msg: format!("expected key=value, got {line:?}"),
        })?;
        map.insert(k.to_string(), v.to_string());
    }
    Ok(map)
}
