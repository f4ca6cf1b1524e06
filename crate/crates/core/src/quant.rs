//! Uniform symmetric fixed-point quantization with power-of-two scales.
//!
//! Values are held in a sign-magnitude domain: a `b`-bit scheme produces
//! integers in `[-(2^(b-1) - 1), 2^(b-1) - 1]`, so `-2^(b-1)` never appears
//! and an 8-bit value carries at most seven magnitude terms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_BITWIDTH: u32 = 2;
pub const MAX_BITWIDTH: u32 = 8;

/// Dense row-major real matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyMatrix);
        }
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                expected: (rows, cols),
                actual: (data.len() / cols.max(1), cols),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::new(rows, cols, vec![0.0; rows * cols])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Plain floating-point product `self · rhs`.
    pub fn matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.rows {
            return Err(Error::ShapeMismatch {
                expected: (self.cols, rhs.cols),
                actual: rhs.shape(),
            });
        }
        let mut out = vec![0.0; self.rows * rhs.cols];
        for i in 0..self.rows {
            for p in 0..self.cols {
                let a = self.data[i * self.cols + p];
                if a == 0.0 {
                    continue;
                }
                let row = &rhs.data[p * rhs.cols..(p + 1) * rhs.cols];
                for (o, &b) in out[i * rhs.cols..(i + 1) * rhs.cols].iter_mut().zip(row) {
                    *o += a * b;
                }
            }
        }
        Matrix::new(self.rows, rhs.cols, out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantMode {
    SymmetricMaxAbs,
}

/// A power-of-two fixed-point scheme: `value = q * 2^scale_exponent`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QuantScheme {
    bitwidth: u32,
    scale_exponent: i32,
    mode: QuantMode,
}

impl QuantScheme {
    pub fn new(bitwidth: u32, scale_exponent: i32) -> Result<Self> {
        check_bitwidth(bitwidth)?;
        Ok(Self {
            bitwidth,
            scale_exponent,
            mode: QuantMode::SymmetricMaxAbs,
        })
    }

    pub fn bitwidth(&self) -> u32 {
        self.bitwidth
    }

    pub fn scale_exponent(&self) -> i32 {
        self.scale_exponent
    }

    pub fn mode(&self) -> QuantMode {
        self.mode
    }

    /// Largest representable magnitude, `2^(b-1) - 1`.
    pub fn max_magnitude(&self) -> i32 {
        max_magnitude(self.bitwidth)
    }

    pub fn scale(&self) -> f64 {
        (self.scale_exponent as f64).exp2()
    }
}

fn check_bitwidth(bitwidth: u32) -> Result<()> {
    if !(MIN_BITWIDTH..=MAX_BITWIDTH).contains(&bitwidth) {
        return Err(Error::InvalidBitwidth(bitwidth));
    }
    Ok(())
}

fn max_magnitude(bitwidth: u32) -> i32 {
    (1 << (bitwidth - 1)) - 1
}

/// Integer matrix sharing a single power-of-two scale.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuantizedMatrix {
    rows: usize,
    cols: usize,
    values: Vec<i32>,
    scheme: QuantScheme,
}

impl QuantizedMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<i32>, scheme: QuantScheme) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyMatrix);
        }
        if values.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                expected: (rows, cols),
                actual: (values.len() / cols, cols),
            });
        }
        let limit = scheme.max_magnitude();
        if let Some(&v) = values.iter().find(|v| v.abs() > limit) {
            return Err(Error::OutOfRange {
                value: v as i64,
                bits: scheme.bitwidth(),
            });
        }
        Ok(Self {
            rows,
            cols,
            values,
            scheme,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn values(&self) -> &[i32] {
        &self.values
    }

    pub fn scheme(&self) -> QuantScheme {
        self.scheme
    }

    pub fn get(&self, r: usize, c: usize) -> i32 {
        self.values[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[i32] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    /// Same scheme, new values (e.g. after term revealing). Values are
    /// range-checked against the scheme.
    pub fn with_values(&self, values: Vec<i32>) -> Result<Self> {
        Self::new(self.rows, self.cols, values, self.scheme)
    }
}

/// Integer matrix with a power-of-two scale but no bitwidth bound, used
/// for matmul outputs and term-revealed operands (HESE truncation can round
/// a magnitude up to `2^(b-1)`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntMatrix {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<i64>,
    pub scale_exponent: i32,
}

impl IntMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<i64>, scale_exponent: i32) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                expected: (rows, cols),
                actual: (values.len() / cols.max(1), cols),
            });
        }
        Ok(Self {
            rows,
            cols,
            values,
            scale_exponent,
        })
    }

    pub fn get(&self, r: usize, c: usize) -> i64 {
        self.values[r * self.cols + c]
    }

    pub fn to_real(&self) -> Matrix {
        let scale = (self.scale_exponent as f64).exp2();
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.values.iter().map(|&v| v as f64 * scale).collect(),
        }
    }
}

/// Exact integer product of row-major `a` (`m x k`) and `b` (`k x n`).
pub fn integer_matmul(a: &[i64], b: &[i64], m: usize, k: usize, n: usize) -> Vec<i64> {
    assert_eq!(a.len(), m * k);
    assert_eq!(b.len(), k * n);
    let mut out = vec![0i64; m * n];
    for i in 0..m {
        for p in 0..k {
            let av = a[i * k + p];
            if av == 0 {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += av * b[p * n + j];
            }
        }
    }
    out
}

/// Power-of-two exponent so that `max_abs` maps into `[.., qmax]` without
/// clamping: `ceil(log2(max_abs / qmax))`.
fn scale_exponent_for(max_abs: f64, qmax: i32) -> i32 {
    if max_abs == 0.0 {
        return 0;
    }
    let qmax = qmax as f64;
    let mut s = (max_abs / qmax).log2().ceil() as i32;
    // log2 of a ratio can land one off either side of an exact power of two.
    while max_abs / (s as f64).exp2() > qmax {
        s += 1;
    }
    while max_abs / ((s - 1) as f64).exp2() <= qmax {
        s -= 1;
    }
    s
}

/// Quantize a real matrix to `bitwidth` bits using symmetric max-abs
/// power-of-two scaling with round-half-away-from-zero.
pub fn quantize(matrix: &Matrix, bitwidth: u32) -> Result<QuantizedMatrix> {
    check_bitwidth(bitwidth)?;
    if let Some(index) = matrix.data().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let qmax = max_magnitude(bitwidth);
    let max_abs = matrix.data().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale_exponent = scale_exponent_for(max_abs, qmax);
    let scheme = QuantScheme::new(bitwidth, scale_exponent)?;
    let inv = (-scale_exponent as f64).exp2();
    let values = matrix
        .data()
        .iter()
        .map(|&v| ((v * inv).round() as i64).clamp(-(qmax as i64), qmax as i64) as i32)
        .collect();
    QuantizedMatrix::new(matrix.rows(), matrix.cols(), values, scheme)
}

/// Exact element-wise `q * 2^scale_exponent`.
pub fn dequantize(m: &QuantizedMatrix) -> Matrix {
    let scale = m.scheme().scale();
    Matrix {
        rows: m.rows(),
        cols: m.cols(),
        data: m.values().iter().map(|&q| q as f64 * scale).collect(),
    }
}

/// Mean over elements of `|original - dequantize(m)|`.
pub fn mean_abs_quant_error(original: &Matrix, m: &QuantizedMatrix) -> Result<f64> {
    if original.shape() != m.shape() {
        return Err(Error::ShapeMismatch {
            expected: original.shape(),
            actual: m.shape(),
        });
    }
    let scale = m.scheme().scale();
    let total: f64 = original
        .data()
        .iter()
        .zip(m.values())
        .map(|(&v, &q)| (v - q as f64 * scale).abs())
        .sum();
    Ok(total / original.data().len() as f64)
}
