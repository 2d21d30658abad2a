//! Orthonormal basis operators: identity, DCT, and Haar wavelet.
//!
//! The DCT is the orthonormal (unitary) DCT-II, so the implied matrix
//! satisfies ΨᵀΨ = ΨΨᵀ = I and transforms preserve the Euclidean norm.
//! The Haar transform is the orthonormal decimating cascade, full depth by
//! default; a piecewise-constant signal with `s` segments keeps at most
//! `s·(1 + log₂N)` nonzero coefficients, which is what makes wavelet-domain
//! recovery of such images work.
//!
//! `forward`/`inverse` are direct fast paths; `as_matrix` builds the basis
//! explicitly from the defining formulas, so the two routes cross-check
//! each other in the tests.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformKind {
    Identity,
    Dct,
    Haar,
}

impl std::str::FromStr for TransformKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "identity" | "id" => Ok(TransformKind::Identity),
            "dct" => Ok(TransformKind::Dct),
            "haar" => Ok(TransformKind::Haar),
            other => Err(Error::config(format!("unknown transform {other:?}"))),
        }
    }
}

impl std::fmt::Display for TransformKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            TransformKind::Identity => "identity",
            TransformKind::Dct => "dct",
            TransformKind::Haar => "haar",
        };
        f.write_str(s)
    }
}

/// An orthonormal transform of fixed dimension.
#[derive(Debug, Clone)]
pub struct TransformOperator {
    kind: TransformKind,
    n: usize,
    /// Decomposition depth; only meaningful for Haar (0 elsewhere).
    levels: usize,
}

impl TransformOperator {
    /// Full-depth operator (Haar decomposes down to a single approximation
    /// coefficient).
    pub fn new(kind: TransformKind, n: usize) -> Result<Self> {
        let levels = match kind {
            TransformKind::Haar => {
                check_power_of_two(n)?;
                n.trailing_zeros() as usize
            }
            _ => {
                if n == 0 {
                    return Err(Error::dimension("transform dimension must be >= 1"));
                }
                0
            }
        };
        Ok(TransformOperator { kind, n, levels })
    }

    /// Haar operator with an explicit decomposition depth in `1..=log₂n`.
    pub fn haar_with_levels(n: usize, levels: usize) -> Result<Self> {
        check_power_of_two(n)?;
        let max = n.trailing_zeros() as usize;
        if levels == 0 || levels > max {
            return Err(Error::config(format!(
                "haar levels must be in 1..={max}, got {levels}"
            )));
        }
        Ok(TransformOperator {
            kind: TransformKind::Haar,
            n,
            levels,
        })
    }

    pub fn kind(&self) -> TransformKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    fn check_len(&self, v: &Vector) -> Result<()> {
        if v.len() != self.n {
            return Err(Error::dimension(format!(
                "transform dimension {} but vector length {}",
                self.n,
                v.len()
            )));
        }
        Ok(())
    }

    /// Coefficients c = Ψ f.
    pub fn forward(&self, f: &Vector) -> Result<Vector> {
        self.check_len(f)?;
        match self.kind {
            TransformKind::Identity => Ok(f.clone()),
            TransformKind::Dct => Ok(dct_ii(f.as_slice())),
            TransformKind::Haar => Ok(haar_forward(f.as_slice(), self.levels)),
        }
    }

    /// Signal f = Ψᵀ c.
    pub fn inverse(&self, c: &Vector) -> Result<Vector> {
        self.check_len(c)?;
        match self.kind {
            TransformKind::Identity => Ok(c.clone()),
            TransformKind::Dct => Ok(dct_iii(c.as_slice())),
            TransformKind::Haar => Ok(haar_inverse(c.as_slice(), self.levels)),
        }
    }

    /// The explicit N×N matrix whose rows are the basis functions, so that
    /// `as_matrix() · f == forward(f)`.
    pub fn as_matrix(&self) -> Matrix {
        match self.kind {
            TransformKind::Identity => Matrix::identity(self.n),
            TransformKind::Dct => dct_matrix(self.n),
            TransformKind::Haar => haar_matrix(self.n, self.levels),
        }
    }
}

fn check_power_of_two(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::dimension("transform dimension must be >= 1"));
    }
    if !n.is_power_of_two() {
        return Err(Error::config(format!(
            "haar requires a power-of-two length, got {n}"
        )));
    }
    Ok(())
}

fn dct_ii(x: &[f64]) -> Vector {
    let n = x.len();
    let mut out = vec![0.0; n];
    let scale0 = (1.0 / n as f64).sqrt();
    let scale = (2.0 / n as f64).sqrt();
    for (k, o) in out.iter_mut().enumerate() {
        let mut sum = 0.0;
        for (j, &v) in x.iter().enumerate() {
            sum += v * (std::f64::consts::PI * (2 * j + 1) as f64 * k as f64 / (2 * n) as f64).cos();
        }
        *o = sum * if k == 0 { scale0 } else { scale };
    }
    Vector::from_raw(out)
}

fn dct_iii(c: &[f64]) -> Vector {
    let n = c.len();
    let mut out = vec![0.0; n];
    let scale0 = (1.0 / n as f64).sqrt();
    let scale = (2.0 / n as f64).sqrt();
    for (j, o) in out.iter_mut().enumerate() {
        let mut sum = 0.0;
        for (k, &v) in c.iter().enumerate() {
            let s = if k == 0 { scale0 } else { scale };
            sum += s * v * (std::f64::consts::PI * (2 * j + 1) as f64 * k as f64 / (2 * n) as f64).cos();
        }
        *o = sum;
    }
    Vector::from_raw(out)
}

fn dct_matrix(n: usize) -> Matrix {
    let scale0 = (1.0 / n as f64).sqrt();
    let scale = (2.0 / n as f64).sqrt();
    let mut m = Matrix::zeros(n, n);
    for k in 0..n {
        let s = if k == 0 { scale0 } else { scale };
        for j in 0..n {
            m.set(
                k,
                j,
                s * (std::f64::consts::PI * (2 * j + 1) as f64 * k as f64 / (2 * n) as f64).cos(),
            );
        }
    }
    m
}

/// Decimating cascade: each level maps pairs (a, b) to the orthonormal
/// average (a+b)/√2 and detail (a−b)/√2; the averages are transformed
/// again. Output layout: [approximation | coarsest details | ... | finest].
fn haar_forward(x: &[f64], levels: usize) -> Vector {
    let n = x.len();
    let mut out = x.to_vec();
    let mut tmp = vec![0.0; n];
    let mut len = n;
    for _ in 0..levels {
        let half = len / 2;
        for i in 0..half {
            let a = out[2 * i];
            let b = out[2 * i + 1];
            tmp[i] = (a + b) * std::f64::consts::FRAC_1_SQRT_2;
            tmp[half + i] = (a - b) * std::f64::consts::FRAC_1_SQRT_2;
        }
        out[..len].copy_from_slice(&tmp[..len]);
        len = half;
    }
    Vector::from_raw(out)
}

fn haar_inverse(c: &[f64], levels: usize) -> Vector {
    let n = c.len();
    let mut out = c.to_vec();
    let mut tmp = vec![0.0; n];
    let mut len = n >> levels;
    for _ in 0..levels {
        for i in 0..len {
            let avg = out[i];
            let det = out[len + i];
            tmp[2 * i] = (avg + det) * std::f64::consts::FRAC_1_SQRT_2;
            tmp[2 * i + 1] = (avg - det) * std::f64::consts::FRAC_1_SQRT_2;
        }
        out[..2 * len].copy_from_slice(&tmp[..2 * len]);
        len *= 2;
    }
    Vector::from_raw(out)
}

/// Explicit orthonormal Haar basis for `levels` of decomposition:
/// block-average rows of width 2^levels, then ± step rows of width 2^ℓ for
/// ℓ = levels down to 1, matching the cascade's output layout.
fn haar_matrix(n: usize, levels: usize) -> Matrix {
    let mut m = Matrix::zeros(n, n);
    let block = 1usize << levels;
    let approx = n >> levels;
    let approx_val = 1.0 / (block as f64).sqrt();
    for q in 0..approx {
        for t in 0..block {
            m.set(q, q * block + t, approx_val);
        }
    }
    for level in (1..=levels).rev() {
        let width = 1usize << level;
        let count = n >> level;
        let offset = n >> level;
        let val = 1.0 / (width as f64).sqrt();
        for q in 0..count {
            let start = q * width;
            for t in 0..width / 2 {
                m.set(offset + q, start + t, val);
                m.set(offset + q, start + width / 2 + t, -val);
            }
        }
    }
    m
}
