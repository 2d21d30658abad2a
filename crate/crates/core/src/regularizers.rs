//! Nonsmooth penalties: the four-case l1 subgradient and smoothed total
//! variation.
//!
//! The l1 subgradient treats a component as "at zero" when |f| < ε and then
//! picks the subgradient element that keeps exact zeros frozen unless the
//! data gradient exceeds λ — that is what preserves sparsity during the
//! iteration. TV uses forward differences that vanish at the last
//! row/column; its gradient divides by the per-pixel magnitude
//! √(Dv² + Dh² + ε), smoothed so a flat region does not divide by zero.
//! `tv_value` reports the exact (unsmoothed) total variation, while
//! `tv_gradient` differentiates the smoothed functional, so the
//! finite-difference check targets the smoothed sum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::solvers::StepMode;

/// l1 penalty parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct L1Params {
    /// Penalty weight λ ≥ 0.
    pub lambda: f64,
    /// Threshold below which a component counts as zero for the case split.
    pub eps_zero: f64,
    /// Per-iteration decay applied in Newton mode (λᵢ = λ·decayⁱ).
    pub decay: f64,
}

impl L1Params {
    pub fn new(lambda: f64) -> Self {
        L1Params {
            lambda,
            eps_zero: 1e-10,
            decay: 0.995,
        }
    }

    pub fn with_decay(mut self, decay: f64) -> Self {
        self.decay = decay;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda < 0.0 {
            return Err(Error::config("lambda must be >= 0"));
        }
        if self.eps_zero <= 0.0 {
            return Err(Error::config("eps_zero must be > 0"));
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(Error::config("decay must lie in (0, 1]"));
        }
        Ok(())
    }

    /// Effective λ at iteration `iter` under the mode's schedule.
    pub fn lambda_at(&self, mode: StepMode, iter: usize) -> f64 {
        lambda_schedule(self.lambda, self.decay, mode, iter)
    }
}

/// Total-variation penalty parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TvParams {
    /// Penalty weight λ ≥ 0.
    pub lambda: f64,
    /// Smoothing term inside the gradient-magnitude square root.
    pub eps_smooth: f64,
}

impl TvParams {
    pub fn new(lambda: f64) -> Self {
        TvParams {
            lambda,
            eps_smooth: 1e-8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda < 0.0 {
            return Err(Error::config("lambda must be >= 0"));
        }
        if self.eps_smooth <= 0.0 {
            return Err(Error::config("eps_smooth must be > 0"));
        }
        Ok(())
    }

    /// TV carries no decay; λ is constant in every mode.
    pub fn lambda_at(&self, mode: StepMode, iter: usize) -> f64 {
        lambda_schedule(self.lambda, 1.0, mode, iter)
    }
}

/// λ schedule: steepest descent and fixed step hold λ constant; Newton
/// decays it geometrically so the penalty bias vanishes as the iteration
/// proceeds.
pub fn lambda_schedule(lambda: f64, decay: f64, mode: StepMode, iter: usize) -> f64 {
    match mode {
        StepMode::FixedStep | StepMode::SteepestDescent => lambda,
        StepMode::Newton => lambda * decay.powi(iter as i32),
    }
}

/// A dense image with row-major pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    rows: usize,
    cols: usize,
    pixels: Vec<f64>,
}

impl ImageGrid {
    pub fn new(rows: usize, cols: usize, pixels: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::dimension("image dimensions must be >= 1"));
        }
        if pixels.len() != rows * cols {
            return Err(Error::dimension(format!(
                "image {rows}x{cols} needs {} pixels, got {}",
                rows * cols,
                pixels.len()
            )));
        }
        if let Some(i) = pixels.iter().position(|v| !v.is_finite()) {
            return Err(Error::numerical(format!(
                "non-finite pixel {} at flat index {i}",
                pixels[i]
            )));
        }
        Ok(ImageGrid { rows, cols, pixels })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1);
        ImageGrid {
            rows,
            cols,
            pixels: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.pixels[j * self.cols + k]
    }

    pub fn set(&mut self, j: usize, k: usize, v: f64) {
        self.pixels[j * self.cols + k] = v;
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [f64] {
        &mut self.pixels
    }

    /// Column `k` as a vector.
    pub fn column(&self, k: usize) -> Vector {
        Vector::from_raw((0..self.rows).map(|j| self.get(j, k)).collect())
    }

    pub fn set_column(&mut self, k: usize, v: &Vector) {
        assert_eq!(v.len(), self.rows);
        for j in 0..self.rows {
            self.set(j, k, v[j]);
        }
    }

    pub fn from_columns(columns: &[Vector]) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::dimension("image needs at least one column"));
        }
        let rows = columns[0].len();
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::dimension("columns have differing lengths"));
        }
        let mut img = ImageGrid::zeros(rows, columns.len());
        for (k, c) in columns.iter().enumerate() {
            img.set_column(k, c);
        }
        Ok(img)
    }

    pub fn transposed(&self) -> ImageGrid {
        let mut out = ImageGrid::zeros(self.cols, self.rows);
        for j in 0..self.rows {
            for k in 0..self.cols {
                out.set(k, j, self.get(j, k));
            }
        }
        out
    }

    /// Vertical forward difference f(j,k) − f(j+1,k); zero on the last row.
    fn dv(&self, j: usize, k: usize) -> f64 {
        if j + 1 < self.rows {
            self.get(j, k) - self.get(j + 1, k)
        } else {
            0.0
        }
    }

    /// Horizontal forward difference f(j,k) − f(j,k+1); zero on the last
    /// column.
    fn dh(&self, j: usize, k: usize) -> f64 {
        if k + 1 < self.cols {
            self.get(j, k) - self.get(j, k + 1)
        } else {
            0.0
        }
    }
}

/// Componentwise l1 subgradient of L(f) + λ‖f‖₁ given the data gradient
/// `grad_l`:
///
/// * |f| ≥ ε          → g + λ·sign(f)
/// * |f| < ε, g < −λ  → g + λ
/// * |f| < ε, g > λ   → g − λ
/// * |f| < ε, |g| ≤ λ → 0
pub fn l1_subgradient(grad_l: &Vector, f: &Vector, lambda: f64, eps_zero: f64) -> Result<Vector> {
    if grad_l.len() != f.len() {
        return Err(Error::dimension(format!(
            "l1_subgradient: gradient length {} but iterate length {}",
            grad_l.len(),
            f.len()
        )));
    }
    let mut out = Vec::with_capacity(f.len());
    for i in 0..f.len() {
        let g = grad_l[i];
        let v = f[i];
        let s = if v.abs() >= eps_zero {
            g + lambda * v.signum()
        } else if g < -lambda {
            g + lambda
        } else if g > lambda {
            g - lambda
        } else {
            0.0
        };
        out.push(s);
    }
    Ok(Vector::from_raw(out))
}

/// Exact total variation: Σ √(Dv² + Dh²) over all pixels.
pub fn tv_value(img: &ImageGrid) -> f64 {
    let mut sum = 0.0;
    for j in 0..img.rows() {
        for k in 0..img.cols() {
            let dv = img.dv(j, k);
            let dh = img.dh(j, k);
            sum += (dv * dv + dh * dh).sqrt();
        }
    }
    sum
}

/// Smoothed total variation Σ √(Dv² + Dh² + ε); the functional that
/// [`tv_gradient`] differentiates.
pub fn tv_value_smoothed(img: &ImageGrid, eps_smooth: f64) -> f64 {
    let mut sum = 0.0;
    for j in 0..img.rows() {
        for k in 0..img.cols() {
            let dv = img.dv(j, k);
            let dh = img.dh(j, k);
            sum += (dv * dv + dh * dh + eps_smooth).sqrt();
        }
    }
    sum
}

/// Per-pixel gradient of the smoothed total variation:
///
/// (Dv(j,k) + Dh(j,k))/|∇(j,k)| − Dv(j−1,k)/|∇(j−1,k)| − Dh(j,k−1)/|∇(j,k−1)|
///
/// with |∇(j,k)| = √(Dv² + Dh² + ε). Terms referencing row −1 or column −1
/// are zero; with ε = 0 a vanished magnitude contributes zero (its
/// numerator is necessarily zero too).
pub fn tv_gradient(img: &ImageGrid, p: &TvParams) -> ImageGrid {
    let rows = img.rows();
    let cols = img.cols();
    let eps = p.eps_smooth;
    // Precompute differences and smoothed magnitudes.
    let mut dv = vec![0.0; rows * cols];
    let mut dh = vec![0.0; rows * cols];
    let mut mag = vec![0.0; rows * cols];
    for j in 0..rows {
        for k in 0..cols {
            let i = j * cols + k;
            dv[i] = img.dv(j, k);
            dh[i] = img.dh(j, k);
            mag[i] = (dv[i] * dv[i] + dh[i] * dh[i] + eps).sqrt();
        }
    }
    let term = |num: f64, m: f64| if m > 0.0 { num / m } else { 0.0 };
    let mut out = ImageGrid::zeros(rows, cols);
    for j in 0..rows {
        for k in 0..cols {
            let i = j * cols + k;
            let mut g = term(dv[i] + dh[i], mag[i]);
            if j > 0 {
                let up = (j - 1) * cols + k;
                g -= term(dv[up], mag[up]);
            }
            if k > 0 {
                let left = j * cols + (k - 1);
                g -= term(dh[left], mag[left]);
            }
            out.set(j, k, g);
        }
    }
    out
}
