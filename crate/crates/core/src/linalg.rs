//! Dense real vector/matrix kernels shared by every other module.
//!
//! All arithmetic is `f64`: the ridge-regularized normal matrix used by the
//! Newton step is near-singular when there are far fewer rows than columns,
//! and 32-bit accumulation shows visible error there. Matrices are stored
//! row-major because measurement (row-times-vector) dominates the workload.
//!
//! Everything here is a pure function over immutable inputs; values can be
//! shared freely across worker threads.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// A fixed-length real vector. All entries are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector {
    data: Vec<f64>,
}

impl Vector {
    /// Builds a vector, rejecting empty input and non-finite entries.
    pub fn new(data: Vec<f64>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::dimension("vector length must be >= 1"));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::numerical(format!(
                "non-finite entry {} at index {i}",
                data[i]
            )));
        }
        Ok(Vector { data })
    }

    /// Internal constructor for values produced by our own kernels.
    pub(crate) fn from_raw(data: Vec<f64>) -> Self {
        debug_assert!(!data.is_empty());
        Vector { data }
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "vector length must be >= 1");
        Vector { data: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.data.iter()
    }

    /// Euclidean inner product.
    pub fn dot(&self, other: &Vector) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::dimension(format!(
                "dot: lengths {} and {} differ",
                self.len(),
                other.len()
            )));
        }
        Ok(dot_slices(&self.data, &other.data))
    }

    /// Euclidean norm.
    pub fn norm2(&self) -> f64 {
        dot_slices(&self.data, &self.data).sqrt()
    }

    pub fn has_non_finite(&self) -> bool {
        self.data.iter().any(|v| !v.is_finite())
    }

    /// Writes the vector as CSV, one entry per line (a column vector).
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = String::new();
        for v in &self.data {
            writeln!(out, "{}", fmt_f64(*v)).expect("string write");
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    /// Reads a vector from CSV, accepting either a single column or a
    /// single row.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let m = Matrix::read_csv(path)?;
        if m.cols() == 1 || m.rows() == 1 {
            Vector::new(m.into_data())
        } else {
            Err(Error::format(format!(
                "expected a vector (1 row or 1 column), got {}x{}",
                m.rows(),
                m.cols()
            )))
        }
    }
}

impl std::ops::Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.data[i]
    }
}

impl std::ops::IndexMut<usize> for Vector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.data[i]
    }
}

/// Returns `alpha * x + y`.
pub fn axpy(alpha: f64, x: &Vector, y: &Vector) -> Result<Vector> {
    if x.len() != y.len() {
        return Err(Error::dimension(format!(
            "axpy: lengths {} and {} differ",
            x.len(),
            y.len()
        )));
    }
    let data = x
        .iter()
        .zip(y.iter())
        .map(|(a, b)| alpha * a + b)
        .collect();
    Ok(Vector::from_raw(data))
}

fn dot_slices(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// A dense row-major real matrix. All entries are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major data, rejecting empty shapes,
    /// mismatched lengths, and non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::dimension("matrix dimensions must be >= 1"));
        }
        if data.len() != rows * cols {
            return Err(Error::dimension(format!(
                "matrix {rows}x{cols} needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::numerical(format!(
                "non-finite entry {} at flat index {i}",
                data[i]
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1);
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::dimension("matrix dimensions must be >= 1"));
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::dimension("ragged rows"));
        }
        Matrix::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Squared Frobenius norm, i.e. trace(AᵀA).
    pub fn frobenius_sq(&self) -> f64 {
        dot_slices(&self.data, &self.data)
    }

    /// result = A x.
    pub fn matvec(&self, x: &Vector) -> Result<Vector> {
        if self.cols != x.len() {
            return Err(Error::dimension(format!(
                "matvec: {}x{} with vector of length {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        let mut out = vec![0.0; self.rows];
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot_slices(self.row(i), x.as_slice());
        }
        Ok(Vector::from_raw(out))
    }

    /// result = Aᵀ r.
    pub fn transpose_matvec(&self, r: &Vector) -> Result<Vector> {
        if self.rows != r.len() {
            return Err(Error::dimension(format!(
                "transpose_matvec: {}x{} with vector of length {}",
                self.rows,
                self.cols,
                r.len()
            )));
        }
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let ri = r[i];
            if ri == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * ri;
            }
        }
        Ok(Vector::from_raw(out))
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.get(i, j);
            }
        }
        out
    }

    /// result = A B.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::dimension(format!(
                "matmul: {}x{} with {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.get(i, k);
                if aik == 0.0 {
                    continue;
                }
                let brow = other.row(k);
                let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += aik * b;
                }
            }
        }
        Ok(out)
    }

    /// Gram matrix AᵀA (symmetric positive semidefinite).
    pub fn gram(&self) -> Matrix {
        let n = self.cols;
        let mut out = Matrix::zeros(n, n);
        for r in 0..self.rows {
            let row = self.row(r);
            for j in 0..n {
                let aj = row[j];
                if aj == 0.0 {
                    continue;
                }
                for k in j..n {
                    out.data[j * n + k] += aj * row[k];
                }
            }
        }
        for j in 0..n {
            for k in 0..j {
                out.data[j * n + k] = out.data[k * n + j];
            }
        }
        out
    }

    /// Writes CSV: one matrix row per line, comma-separated, 17 significant
    /// digits (lossless for f64).
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        for i in 0..self.rows {
            let mut first = true;
            for v in self.row(i) {
                if !first {
                    out.push(',');
                }
                write!(out, "{}", fmt_f64(*v)).expect("string write");
                first = false;
            }
            out.push('\n');
        }
        out
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(&path)?;
        Matrix::from_csv_str(&text)
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|tok| {
                    tok.trim().parse::<f64>().map_err(|_| {
                        Error::format(format!("line {}: bad number {tok:?}", lineno + 1))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::format("empty CSV"));
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::format("ragged CSV rows"));
        }
        Matrix::new(rows.len(), cols, rows.concat())
    }
}

/// 17 significant digits: enough to reproduce any f64 exactly on read-back.
fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Solves A x = b for symmetric positive definite A via Cholesky.
pub fn solve_spd(a: &Matrix, b: &Vector) -> Result<Vector> {
    CholeskyFactor::factor(a)?.solve(b)
}

/// A Cholesky factorization A = L Lᵀ held for repeated solves.
///
/// The Newton step matrix is factored once and then applied every
/// iteration and for every image column, so the factor is kept around
/// rather than re-deriving or forming an explicit inverse.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    n: usize,
    /// Lower triangle, row-major, including the diagonal.
    l: Vec<f64>,
}

impl CholeskyFactor {
    pub fn factor(a: &Matrix) -> Result<Self> {
        if a.rows() != a.cols() {
            return Err(Error::dimension(format!(
                "SPD solve needs a square matrix, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        let n = a.rows();
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut sum = a.get(i, j);
                for k in 0..j {
                    sum -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if sum <= 0.0 || !sum.is_finite() {
                        return Err(Error::numerical(format!(
                            "matrix is not positive definite (pivot {sum} at row {i})"
                        )));
                    }
                    l[i * n + i] = sum.sqrt();
                } else {
                    l[i * n + j] = sum / l[j * n + j];
                }
            }
        }
        Ok(CholeskyFactor { n, l })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Solves A x = b using the stored factor.
    pub fn solve(&self, b: &Vector) -> Result<Vector> {
        if b.len() != self.n {
            return Err(Error::dimension(format!(
                "solve: factor is {}x{}, rhs has length {}",
                self.n,
                self.n,
                b.len()
            )));
        }
        let n = self.n;
        // Forward substitution L z = b.
        let mut z = vec![0.0; n];
        for i in 0..n {
            let mut sum = b[i];
            for k in 0..i {
                sum -= self.l[i * n + k] * z[k];
            }
            z[i] = sum / self.l[i * n + i];
        }
        // Back substitution Lᵀ x = z.
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut sum = z[i];
            for k in (i + 1)..n {
                sum -= self.l[k * n + i] * x[k];
            }
            x[i] = sum / self.l[i * n + i];
        }
        Ok(Vector::from_raw(x))
    }
}
