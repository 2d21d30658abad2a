//! Observation (measurement) matrices and their empirical properties.
//!
//! Random M×N matrices are generated from a documented SplitMix64 stream
//! (see [`crate::rng`]) so any matrix is reconstructible bit-exactly from
//! `(distribution, seed, m, n)`. Entries are used raw, with no row
//! normalization or scaling.
//!
//! The module also provides two diagnostics: an empirical restricted-
//! isometry ratio estimator (min/max of ‖M₀f‖²/‖f‖² over random k-sparse
//! unit vectors) and the coherence index χ between a basis system and the
//! measurement system. Neither makes a pass/fail judgment; they report the
//! numbers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::rng::SplitMix64;
use crate::transforms::TransformOperator;

/// Entry distribution of a generated observation matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distribution {
    /// Standard normal N(0, 1).
    Normal01,
    /// Uniform on [0, 1).
    Uniform01,
    /// ±1 with equal probability.
    BernoulliPM1,
}

impl std::str::FromStr for Distribution {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "normal01" | "normal" => Ok(Distribution::Normal01),
            "uniform01" | "uniform" => Ok(Distribution::Uniform01),
            "bernoullipm1" | "bernoulli" => Ok(Distribution::BernoulliPM1),
            other => Err(Error::config(format!("unknown distribution {other:?}"))),
        }
    }
}

impl std::fmt::Display for Distribution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Distribution::Normal01 => "normal01",
            Distribution::Uniform01 => "uniform01",
            Distribution::BernoulliPM1 => "bernoullipm1",
        };
        f.write_str(s)
    }
}

fn draw(dist: Distribution, rng: &mut SplitMix64) -> f64 {
    match dist {
        Distribution::Normal01 => rng.normal(),
        Distribution::Uniform01 => rng.uniform01(),
        Distribution::BernoulliPM1 => rng.bernoulli_pm1(),
    }
}

/// Generation parameters recorded alongside a generated matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatrixMeta {
    pub dist: Distribution,
    pub seed: u64,
}

/// An M×N measurement operator, optionally carrying its generation
/// parameters (absent for matrices supplied from external files).
#[derive(Debug, Clone)]
pub struct ObservationMatrix {
    mat: Matrix,
    meta: Option<MatrixMeta>,
}

/// Json sidecar stored next to a matrix CSV.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Sidecar {
    m: usize,
    n: usize,
    dist: Distribution,
    seed: u64,
}

impl ObservationMatrix {
    /// Wraps an externally supplied matrix (no generation provenance).
    pub fn from_matrix(mat: Matrix) -> Self {
        ObservationMatrix { mat, meta: None }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.mat
    }

    pub fn rows(&self) -> usize {
        self.mat.rows()
    }

    pub fn cols(&self) -> usize {
        self.mat.cols()
    }

    pub fn meta(&self) -> Option<&MatrixMeta> {
        self.meta.as_ref()
    }

    /// y = M₀ f.
    pub fn measure(&self, f: &Vector) -> Result<Vector> {
        self.mat.matvec(f)
    }

    /// Writes the matrix as CSV plus a JSON sidecar (same path with a
    /// `.json` extension) when generation parameters are known.
    pub fn save_csv(&self, csv_path: impl AsRef<Path>) -> Result<()> {
        let csv_path = csv_path.as_ref();
        self.mat.write_csv(csv_path)?;
        if let Some(meta) = &self.meta {
            let sidecar = Sidecar {
                m: self.mat.rows(),
                n: self.mat.cols(),
                dist: meta.dist,
                seed: meta.seed,
            };
            let text = serde_json::to_string_pretty(&sidecar)
                .map_err(|e| Error::format(e.to_string()))?;
            std::fs::write(sidecar_path(csv_path), text + "\n")?;
        }
        Ok(())
    }

    /// Loads a matrix CSV. When the JSON sidecar is present the matrix is
    /// regenerated from the recorded parameters and verified bit-exactly
    /// against the file contents.
    pub fn load_csv(csv_path: impl AsRef<Path>) -> Result<Self> {
        let csv_path = csv_path.as_ref();
        let mat = Matrix::read_csv(csv_path)?;
        let sidecar = sidecar_path(csv_path);
        if !sidecar.exists() {
            return Ok(ObservationMatrix::from_matrix(mat));
        }
        let text = std::fs::read_to_string(&sidecar)?;
        let sc: Sidecar =
            serde_json::from_str(&text).map_err(|e| Error::format(format!("sidecar: {e}")))?;
        if sc.m != mat.rows() || sc.n != mat.cols() {
            return Err(Error::format(format!(
                "sidecar says {}x{} but CSV is {}x{}",
                sc.m,
                sc.n,
                mat.rows(),
                mat.cols()
            )));
        }
        let regen = generate_observation(sc.m, sc.n, sc.dist, sc.seed)?;
        if regen.mat != mat {
            return Err(Error::format(
                "matrix CSV does not match regeneration from its sidecar",
            ));
        }
        Ok(regen)
    }
}

fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Generates an M×N observation matrix. Entries are drawn row-major from a
/// single SplitMix64 stream seeded with `seed`, so the same arguments give a
/// bit-identical matrix on every platform.
pub fn generate_observation(
    m: usize,
    n: usize,
    dist: Distribution,
    seed: u64,
) -> Result<ObservationMatrix> {
    if m == 0 || n == 0 {
        return Err(Error::dimension("observation matrix needs m >= 1 and n >= 1"));
    }
    let mut rng = SplitMix64::new(seed);
    let data: Vec<f64> = (0..m * n).map(|_| draw(dist, &mut rng)).collect();
    Ok(ObservationMatrix {
        mat: Matrix::new(m, n, data)?,
        meta: Some(MatrixMeta { dist, seed }),
    })
}

/// Empirical restricted-isometry ratios over random sparse test vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RipEstimate {
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub trials: usize,
    pub sparsity_k: usize,
}

/// Draws `trials` random k-sparse unit vectors (support uniform via
/// Fisher-Yates, values standard normal, then normalized) and returns the
/// min/max of ‖M₀f‖₂² / ‖f‖₂².
///
/// Trial `t` uses the stream `(seed, t)`, so the result is independent of
/// evaluation order and the loop can run in parallel.
pub fn rip_ratio_estimate(
    m0: &Matrix,
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<RipEstimate> {
    let n = m0.cols();
    if k > n {
        return Err(Error::dimension(format!("sparsity k = {k} exceeds n = {n}")));
    }
    if k == 0 {
        return Err(Error::dimension("sparsity k must be >= 1"));
    }
    if trials == 0 {
        return Err(Error::config("trials must be >= 1"));
    }
    let (min_ratio, max_ratio) = (0..trials)
        .into_par_iter()
        .map(|t| {
            let f = sparse_trial_vector(n, k, seed, t as u64);
            let num = m0.matvec(&f).expect("dims checked").norm2().powi(2);
            let den = f.norm2().powi(2);
            let ratio = num / den;
            (ratio, ratio)
        })
        .reduce(
            || (f64::INFINITY, f64::NEG_INFINITY),
            |a, b| (a.0.min(b.0), a.1.max(b.1)),
        );
    Ok(RipEstimate {
        min_ratio,
        max_ratio,
        trials,
        sparsity_k: k,
    })
}

/// The trial vector for stream `(seed, t)`: support first, then values.
pub fn sparse_trial_vector(n: usize, k: usize, seed: u64, trial: u64) -> Vector {
    let mut rng = SplitMix64::stream(seed, trial);
    let support = rng.sample_indices(n, k);
    let mut data = vec![0.0; n];
    for idx in support {
        data[idx] = rng.normal();
    }
    let norm = data.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        for v in &mut data {
            *v /= norm;
        }
    }
    Vector::from_raw(data)
}

/// Coherence index χ(Ψ, M₀) = √N · max |⟨m̂ⱼ, ψₖ⟩| over all pairs of a
/// unit-normalized row m̂ⱼ of M₀ and a basis function ψₖ of Ψ. Lies in
/// [1, √N]: 1 for maximally spread rows, √N when a row aligns with a basis
/// function.
pub fn coherence_index(psi: &TransformOperator, m0: &Matrix) -> Result<f64> {
    if psi.n() != m0.cols() {
        return Err(Error::dimension(format!(
            "transform dimension {} but matrix has {} columns",
            psi.n(),
            m0.cols()
        )));
    }
    let n = m0.cols();
    let basis = psi.as_matrix();
    let mut max_abs: f64 = 0.0;
    for j in 0..m0.rows() {
        let row = m0.row(j);
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::numerical(format!("row {j} of the matrix is zero")));
        }
        for k in 0..n {
            let b = basis.row(k);
            let inner: f64 = row.iter().zip(b).map(|(a, c)| a * c).sum();
            max_abs = max_abs.max((inner / norm).abs());
        }
    }
    Ok((n as f64).sqrt() * max_abs)
}
