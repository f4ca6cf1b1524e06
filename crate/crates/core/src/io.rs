//! CSV and JSON file formats.
//!
//! Real matrices are CSV with one row per line. Quantized matrices are CSV
//! of integers plus a JSON sidecar next to them (same stem, `.json`) holding
//! `{bitwidth, scale_exponent, rows, cols}`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quant::{IntMatrix, Matrix, QuantScheme, QuantizedMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sidecar {
    pub bitwidth: u32,
    pub scale_exponent: i32,
    pub rows: usize,
    pub cols: usize,
}

pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

/// Round to 9 significant digits so printed floats are stable.
pub fn round_sig9(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.8e}").parse().unwrap_or(x)
}

/// Float formatted for tables: 9 significant digits, shortest form.
pub fn fmt_float(x: f64) -> String {
    format!("{}", round_sig9(x))
}

fn parse_rows<T: std::str::FromStr>(text: &str) -> Result<(usize, usize, Vec<T>)> {
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut n = 0;
        for field in line.split(',') {
            let v = field.trim().parse::<T>().map_err(|_| Error::Parse {
                line: i + 1,
                message: format!("cannot parse '{}'", field.trim()),
            })?;
            data.push(v);
            n += 1;
        }
        match cols {
            None => cols = Some(n),
            Some(c) if c != n => {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("expected {c} fields, found {n}"),
                })
            }
            _ => {}
        }
        rows += 1;
    }
    match cols {
        Some(c) => Ok((rows, c, data)),
        None => Err(Error::EmptyMatrix),
    }
}

pub fn parse_matrix_csv(text: &str) -> Result<Matrix> {
    let (rows, cols, data) = parse_rows::<f64>(text)?;
    Matrix::new(rows, cols, data)
}

pub fn matrix_to_csv(m: &Matrix) -> String {
    let mut s = String::new();
    for r in 0..m.rows() {
        let row: Vec<String> = (0..m.cols()).map(|c| fmt_float(m.get(r, c))).collect();
        let _ = writeln!(s, "{}", row.join(","));
    }
    s
}

pub fn read_matrix(path: &Path) -> Result<Matrix> {
    parse_matrix_csv(&fs::read_to_string(path)?)
}

pub fn write_matrix(path: &Path, m: &Matrix) -> Result<()> {
    fs::write(path, matrix_to_csv(m))?;
    Ok(())
}

fn ints_to_csv<T: std::fmt::Display>(values: &[T], cols: usize) -> String {
    let mut s = String::new();
    for row in values.chunks(cols) {
        let row: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "{}", row.join(","));
    }
    s
}

pub fn write_quantized(path: &Path, m: &QuantizedMatrix) -> Result<()> {
    fs::write(path, ints_to_csv(m.values(), m.cols()))?;
    let side = Sidecar {
        bitwidth: m.scheme().bitwidth(),
        scale_exponent: m.scheme().scale_exponent(),
        rows: m.rows(),
        cols: m.cols(),
    };
    fs::write(sidecar_path(path), serde_json::to_string_pretty(&side)?)?;
    Ok(())
}

pub fn parse_quantized(csv: &str, side: &Sidecar) -> Result<QuantizedMatrix> {
    let (rows, cols, values) = parse_rows::<i32>(csv)?;
    if (rows, cols) != (side.rows, side.cols) {
        return Err(Error::ShapeMismatch {
            expected: (side.rows, side.cols),
            actual: (rows, cols),
        });
    }
    let scheme = QuantScheme::new(side.bitwidth, side.scale_exponent)?;
    QuantizedMatrix::new(rows, cols, values, scheme)
}

pub fn read_quantized(path: &Path) -> Result<QuantizedMatrix> {
    let side: Sidecar = serde_json::from_str(&fs::read_to_string(sidecar_path(path))?)?;
    parse_quantized(&fs::read_to_string(path)?, &side)
}

/// Integer matrix CSV plus a sidecar; `bitwidth` records the source
/// operands' bitwidth.
pub fn write_int_matrix(path: &Path, m: &IntMatrix, bitwidth: u32) -> Result<()> {
    fs::write(path, ints_to_csv(&m.values, m.cols))?;
    let side = Sidecar {
        bitwidth,
        scale_exponent: m.scale_exponent,
        rows: m.rows,
        cols: m.cols,
    };
    fs::write(sidecar_path(path), serde_json::to_string_pretty(&side)?)?;
    Ok(())
}

pub fn read_int_matrix(path: &Path) -> Result<IntMatrix> {
    let side: Sidecar = serde_json::from_str(&fs::read_to_string(sidecar_path(path))?)?;
    let (rows, cols, values) = parse_rows::<i64>(&fs::read_to_string(path)?)?;
    if (rows, cols) != (side.rows, side.cols) {
        return Err(Error::ShapeMismatch {
            expected: (side.rows, side.cols),
            actual: (rows, cols),
        });
    }
    IntMatrix::new(rows, cols, values, side.scale_exponent)
}

fn round_value(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64().and_then(|x| serde_json::Number::from_f64(round_sig9(x))) {
                *n = x;
            }
        }
        serde_json::Value::Array(a) => a.iter_mut().for_each(round_value),
        serde_json::Value::Object(o) => o.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON with every float rounded to 9 significant digits.
pub fn to_json_rounded<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value)?;
    round_value(&mut v);
    Ok(serde_json::to_string_pretty(&v)?)
}

/// Render a header plus rows as CSV.
pub fn table_to_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quant::quantize;

    #[test]
    fn json_floats_rounded() {
        let s = to_json_rounded(&serde_json::json!({"a": [0.1 + 0.2], "b": 3})).unwrap();
        assert!(s.contains("0.3") && !s.contains("0.30000000000000004"));
        assert!(s.contains("\"b\": 3"));
    }

    #[test]
    fn parse_and_render() {
        let m = parse_matrix_csv("1.5, -2\n0.25,3\n\n").unwrap();
        assert_eq!(m.shape(), (2, 2));
        assert_eq!(m.data(), &[1.5, -2.0, 0.25, 3.0]);
        assert_eq!(matrix_to_csv(&m), "1.5,-2\n0.25,3\n");
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(matches!(
            parse_matrix_csv("1,2\n3\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(parse_matrix_csv("1,x"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_matrix_csv(""), Err(Error::EmptyMatrix)));
    }

    #[test]
    fn quantized_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.csv");
        let m = parse_matrix_csv("0.1,-0.7\n0.33,0.9\n").unwrap();
        let q = quantize(&m, 8).unwrap();
        write_quantized(&path, &q).unwrap();
        assert!(dir.path().join("w.json").exists());
        assert_eq!(read_quantized(&path).unwrap(), q);
    }

    #[test]
    fn sig9() {
        assert_eq!(fmt_float(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_float(0.0), "0");
        assert_eq!(fmt_float(123456789012.0), "123456789000");
    }
}
