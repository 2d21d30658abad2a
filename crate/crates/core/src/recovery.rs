//! Problem assembly and the column-by-column recovery pipeline.
//!
//! The four problem forms reduce to one canonical shape
//! `min λ·penalty(z) + ½‖Bz − c‖²` plus a rule for mapping the canonical
//! variable back to the time domain:
//!
//! | form | sparse in | measured in | B      | z  | map back |
//! |------|-----------|-------------|--------|----|----------|
//! | a    | time      | time        | M₀     | f  | identity |
//! | b    | time      | transform   | M₀Ψ    | f  | identity |
//! | c    | transform | time        | M₀Ψᵀ   | f̃  | Ψᵀ z     |
//! | d    | transform | transform   | M₀     | f̃  | Ψᵀ z     |
//!
//! Images are never reshaped into one long vector; each column is treated
//! as an independent system sharing the same observation matrix (and, in
//! Newton mode, one shared factorization). The l1 path is embarrassingly
//! parallel over columns; TV couples neighboring columns through its
//! gradient, so the TV path iterates the whole image jointly while step
//! sizes and data gradients stay column-wise.

use rayon::prelude::*;
use serde::Serialize;
use std::path::Path;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::imaging::{write_pgm, PgmFormat};
use crate::linalg::{Matrix, Vector};
use crate::regularizers::{
    l1_subgradient, tv_gradient, tv_value, ImageGrid, L1Params, TvParams,
};
use crate::rng::SplitMix64;
use crate::sensing::{generate_observation, ObservationMatrix};
use crate::solvers::{
    auto_newton_ridge, iterate_with, newton_operator, steepest_step, ConvergenceTrace,
    NewtonOperator, SolverConfig, StepMode, TraceRecord,
};
use crate::transforms::TransformOperator;

/// The four problem forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemForm {
    /// (a) sparse in time, measured in time.
    TimeSparseTimeMeas,
    /// (b) sparse in time, measured in the transform domain.
    TimeSparseTransMeas,
    /// (c) sparse in the transform domain, measured in time.
    TransSparseTimeMeas,
    /// (d) sparse and measured in the transform domain.
    TransSparseTransMeas,
}

impl ProblemForm {
    pub fn letter(self) -> &'static str {
        match self {
            ProblemForm::TimeSparseTimeMeas => "a",
            ProblemForm::TimeSparseTransMeas => "b",
            ProblemForm::TransSparseTimeMeas => "c",
            ProblemForm::TransSparseTransMeas => "d",
        }
    }
}

impl std::str::FromStr for ProblemForm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "a" | "time_sparse_time_meas" => Ok(ProblemForm::TimeSparseTimeMeas),
            "b" | "time_sparse_trans_meas" => Ok(ProblemForm::TimeSparseTransMeas),
            "c" | "trans_sparse_time_meas" => Ok(ProblemForm::TransSparseTimeMeas),
            "d" | "trans_sparse_trans_meas" => Ok(ProblemForm::TransSparseTransMeas),
            other => Err(Error::config(format!("unknown problem form {other:?}"))),
        }
    }
}

/// Penalty choice with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regularizer {
    L1(L1Params),
    Tv(TvParams),
}

impl Regularizer {
    pub fn name(&self) -> &'static str {
        match self {
            Regularizer::L1(_) => "l1",
            Regularizer::Tv(_) => "tv",
        }
    }

    pub fn lambda(&self) -> f64 {
        match self {
            Regularizer::L1(p) => p.lambda,
            Regularizer::Tv(p) => p.lambda,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Regularizer::L1(p) => p.validate(),
            Regularizer::Tv(p) => p.validate(),
        }
    }
}

/// Measurements for a single vector or one vector per image column.
#[derive(Debug, Clone)]
pub enum Measurements {
    Single(Vector),
    PerColumn(Vec<Vector>),
}

/// A fully specified recovery task.
#[derive(Debug, Clone)]
pub struct RecoveryProblem {
    pub form: ProblemForm,
    pub obs: ObservationMatrix,
    pub psi: TransformOperator,
    pub measurements: Measurements,
    pub regularizer: Regularizer,
    /// When set, column `k` of an image uses the observation matrix
    /// regenerated from `seed ^ k` instead of the shared one.
    pub per_column_seeds: bool,
}

/// How a canonical solution maps back to the time domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapBack {
    Identity,
    InverseTransform,
}

/// The canonical matrix B and the map-back rule for a problem form.
pub fn reconstruction_matrix(
    form: ProblemForm,
    m0: &Matrix,
    psi: &TransformOperator,
) -> Result<(Matrix, MapBack)> {
    if psi.n() != m0.cols() {
        return Err(Error::dimension(format!(
            "transform dimension {} but matrix has {} columns",
            psi.n(),
            m0.cols()
        )));
    }
    Ok(match form {
        ProblemForm::TimeSparseTimeMeas => (m0.clone(), MapBack::Identity),
        ProblemForm::TimeSparseTransMeas => {
            (m0.matmul(&psi.as_matrix())?, MapBack::Identity)
        }
        ProblemForm::TransSparseTimeMeas => (
            m0.matmul(&psi.as_matrix().transpose())?,
            MapBack::InverseTransform,
        ),
        ProblemForm::TransSparseTransMeas => (m0.clone(), MapBack::InverseTransform),
    })
}

fn map_back(psi: &TransformOperator, rule: MapBack, z: &Vector) -> Result<Vector> {
    match rule {
        MapBack::Identity => Ok(z.clone()),
        MapBack::InverseTransform => psi.inverse(z),
    }
}

/// Measures every column of an image with the shared matrix, or with
/// per-column regenerated matrices when `per_column_seeds` is set.
pub fn measure_columns(
    obs: &ObservationMatrix,
    img: &ImageGrid,
    per_column_seeds: bool,
) -> Result<Vec<Vector>> {
    (0..img.cols())
        .map(|k| {
            let col = img.column(k);
            if per_column_seeds {
                column_observation(obs, k)?.measure(&col)
            } else {
                obs.measure(&col)
            }
        })
        .collect()
}

fn column_observation(obs: &ObservationMatrix, k: usize) -> Result<ObservationMatrix> {
    let meta = obs.meta().ok_or_else(|| {
        Error::config("per-column seeds need a generated observation matrix")
    })?;
    generate_observation(obs.rows(), obs.cols(), meta.dist, meta.seed ^ k as u64)
}

/// y + sigma · (standard normal draws); `sigma == 0` returns `y` unchanged.
pub fn add_measurement_noise(y: &Vector, sigma: f64, seed: u64) -> Result<Vector> {
    if sigma < 0.0 {
        return Err(Error::config("noise sigma must be >= 0"));
    }
    if sigma == 0.0 {
        return Ok(y.clone());
    }
    let mut rng = SplitMix64::new(seed);
    Ok(Vector::from_raw(
        y.iter().map(|v| v + sigma * rng.normal()).collect(),
    ))
}

/// What a recovery produced.
#[derive(Debug, Clone)]
pub enum Recovered {
    Vector(Vector),
    Image(ImageGrid),
}

impl Recovered {
    pub fn as_image(&self) -> Option<&ImageGrid> {
        match self {
            Recovered::Image(img) => Some(img),
            Recovered::Vector(_) => None,
        }
    }

    pub fn as_vector(&self) -> Option<&Vector> {
        match self {
            Recovered::Vector(v) => Some(v),
            Recovered::Image(_) => None,
        }
    }
}

/// Seeds recorded in a report for reproducibility.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct SeedInfo {
    pub matrix: Option<u64>,
    pub noise: Option<u64>,
}

/// Result bundle of a recovery run.
#[derive(Debug, Clone)]
pub struct RecoveryReport {
    pub recovered: Recovered,
    /// One trace per column for l1 image recovery, a single joint trace
    /// for TV, one trace for vector recovery.
    pub traces: Vec<ConvergenceTrace>,
    pub psnr_vs_reference: Option<f64>,
    pub total_iterations: usize,
    pub elapsed: Duration,
    pub form: ProblemForm,
    pub regularizer_name: String,
    pub lambda: f64,
    pub seeds: SeedInfo,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    form: &'a str,
    regularizer: &'a str,
    lambda: f64,
    iterations: usize,
    psnr: Option<f64>,
    elapsed_ms: u128,
    seeds: &'a SeedInfo,
}

impl RecoveryReport {
    /// Serializes the report as a directory: `recovered.pgm` (or
    /// `recovered.csv` for vectors), `trace_col_<k>.csv` or
    /// `trace_joint.csv`, and `report.json`.
    pub fn write_dir(&self, dir: impl AsRef<Path>, trace_stride: usize, maxval: u16) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        match &self.recovered {
            Recovered::Image(img) => {
                write_pgm(img, dir.join("recovered.pgm"), maxval, PgmFormat::Ascii)?;
            }
            Recovered::Vector(v) => {
                v.write_csv(dir.join("recovered.csv"))?;
            }
        }
        if self.traces.len() == 1 {
            self.traces[0].write_csv(dir.join("trace_joint.csv"), trace_stride)?;
        } else {
            for (k, t) in self.traces.iter().enumerate() {
                t.write_csv(dir.join(format!("trace_col_{k}.csv")), trace_stride)?;
            }
        }
        let json = ReportJson {
            form: self.form.letter(),
            regularizer: &self.regularizer_name,
            lambda: self.lambda,
            iterations: self.total_iterations,
            psnr: self.psnr_vs_reference,
            elapsed_ms: self.elapsed.as_millis(),
            seeds: &self.seeds,
        };
        let text =
            serde_json::to_string_pretty(&json).map_err(|e| Error::format(e.to_string()))?;
        std::fs::write(dir.join("report.json"), text + "\n")?;
        Ok(())
    }
}

/// Recovers a single vector (l1 regularizer only).
pub fn recover_vector(
    problem: &RecoveryProblem,
    config: &SolverConfig,
) -> Result<(Vector, ConvergenceTrace)> {
    problem.regularizer.validate()?;
    let p = match problem.regularizer {
        Regularizer::L1(p) => p,
        Regularizer::Tv(_) => {
            return Err(Error::config(
                "TV regularization needs a 2-D target; use recover_image",
            ))
        }
    };
    let y = match &problem.measurements {
        Measurements::Single(y) => y,
        Measurements::PerColumn(_) => {
            return Err(Error::config(
                "vector recovery needs a single measurement vector",
            ))
        }
    };
    let (bmat, rule) = reconstruction_matrix(problem.form, problem.obs.matrix(), &problem.psi)?;
    let (z, trace) = solve_l1(config, &bmat, y, &p, None)?;
    Ok((map_back(&problem.psi, rule, &z)?, trace))
}

fn solve_l1(
    config: &SolverConfig,
    bmat: &Matrix,
    y: &Vector,
    p: &L1Params,
    shared_newton: Option<&NewtonOperator>,
) -> Result<(Vector, ConvergenceTrace)> {
    let mode = config.mode;
    let subgrad = |z: &Vector, grad_l: &Vector, iter: usize| {
        l1_subgradient(grad_l, z, p.lambda_at(mode, iter), p.eps_zero)
            .expect("lengths match by construction")
    };
    let penalty = |z: &Vector, iter: usize| {
        p.lambda_at(mode, iter) * z.iter().map(|v| v.abs()).sum::<f64>()
    };
    iterate_with(
        config,
        bmat,
        y,
        Vector::zeros(bmat.cols()),
        shared_newton,
        subgrad,
        penalty,
    )
}

/// Recovers an image column by column (l1) or jointly (TV).
pub fn recover_image(problem: &RecoveryProblem, config: &SolverConfig) -> Result<RecoveryReport> {
    problem.regularizer.validate()?;
    config.validate()?;
    let start = Instant::now();
    let columns = match &problem.measurements {
        Measurements::PerColumn(cols) => cols,
        Measurements::Single(_) => {
            return Err(Error::config(
                "image recovery needs per-column measurements",
            ))
        }
    };
    if columns.is_empty() {
        return Err(Error::dimension("image recovery needs at least one column"));
    }

    let (recovered, traces) = match problem.regularizer {
        Regularizer::L1(p) => recover_image_l1(problem, config, columns, &p)?,
        Regularizer::Tv(p) => {
            if problem.form != ProblemForm::TimeSparseTimeMeas {
                return Err(Error::config(
                    "TV recovery is only defined for time-domain measurements of the image itself (form a)",
                ));
            }
            if problem.per_column_seeds {
                return Err(Error::config(
                    "TV recovery couples columns and uses one shared observation matrix",
                ));
            }
            recover_image_tv(problem, config, columns, &p)?
        }
    };

    let total_iterations = traces.iter().map(|t| t.len()).sum();
    Ok(RecoveryReport {
        recovered: Recovered::Image(recovered),
        traces,
        psnr_vs_reference: None,
        total_iterations,
        elapsed: start.elapsed(),
        form: problem.form,
        regularizer_name: problem.regularizer.name().to_string(),
        lambda: problem.regularizer.lambda(),
        seeds: SeedInfo {
            matrix: problem.obs.meta().map(|m| m.seed),
            noise: None,
        },
    })
}

fn recover_image_l1(
    problem: &RecoveryProblem,
    config: &SolverConfig,
    columns: &[Vector],
    p: &L1Params,
) -> Result<(ImageGrid, Vec<ConvergenceTrace>)> {
    // One canonical matrix and one Newton factorization serve every column
    // unless each column has its own seeded matrix.
    let shared: Option<(Matrix, MapBack, Option<NewtonOperator>)> = if problem.per_column_seeds {
        None
    } else {
        let (bmat, rule) =
            reconstruction_matrix(problem.form, problem.obs.matrix(), &problem.psi)?;
        let op = if config.mode == StepMode::Newton {
            let eps = config.eps_newton.unwrap_or_else(|| auto_newton_ridge(&bmat));
            Some(newton_operator(&bmat, eps)?)
        } else {
            None
        };
        Some((bmat, rule, op))
    };

    let solved: Vec<(Vector, ConvergenceTrace)> = columns
        .par_iter()
        .enumerate()
        .map(|(k, y)| -> Result<(Vector, ConvergenceTrace)> {
            let (z, trace, rule, psi) = match &shared {
                Some((bmat, rule, op)) => {
                    let (z, t) = solve_l1(config, bmat, y, p, op.as_ref())?;
                    (z, t, *rule, &problem.psi)
                }
                None => {
                    let obs_k = column_observation(&problem.obs, k)?;
                    let (bmat, rule) =
                        reconstruction_matrix(problem.form, obs_k.matrix(), &problem.psi)?;
                    let (z, t) = solve_l1(config, &bmat, y, p, None)?;
                    (z, t, rule, &problem.psi)
                }
            };
            Ok((map_back(psi, rule, &z)?, trace))
        })
        .collect::<Result<Vec<_>>>()?;

    let (cols, traces): (Vec<Vector>, Vec<ConvergenceTrace>) = solved.into_iter().unzip();
    Ok((ImageGrid::from_columns(&cols)?, traces))
}

fn recover_image_tv(
    problem: &RecoveryProblem,
    config: &SolverConfig,
    columns: &[Vector],
    p: &TvParams,
) -> Result<(ImageGrid, Vec<ConvergenceTrace>)> {
    let a = problem.obs.matrix();
    let rows = a.cols();
    let ncols = columns.len();
    for (k, y) in columns.iter().enumerate() {
        if y.len() != a.rows() {
            return Err(Error::dimension(format!(
                "column {k}: {} measurements but the matrix has {} rows",
                y.len(),
                a.rows()
            )));
        }
    }

    let newton = if config.mode == StepMode::Newton {
        let eps = config.eps_newton.unwrap_or_else(|| auto_newton_ridge(a));
        Some(newton_operator(a, eps)?)
    } else {
        None
    };

    let mut img = ImageGrid::zeros(rows, ncols);
    let mut trace = ConvergenceTrace::new();
    for iter in 0..config.max_iters {
        let tv_g = tv_gradient(&img, p);
        let lambda_i = p.lambda_at(config.mode, iter);

        // Column-wise data gradients and steps; the TV gradient couples
        // the columns but was computed from the frozen iterate above.
        let updates: Vec<(Vector, f64, f64)> = (0..ncols)
            .into_par_iter()
            .map(|k| -> Result<(Vector, f64, f64)> {
                let f_k = img.column(k);
                let mut r = a.matvec(&f_k)?;
                let y = &columns[k];
                for i in 0..r.len() {
                    r[i] -= y[i];
                }
                let resid_sq = r.dot(&r)?;
                let grad_l = a.transpose_matvec(&r)?;
                let mut d = grad_l.clone();
                for j in 0..rows {
                    d[j] += lambda_i * tv_g.get(j, k);
                }
                let step = match config.mode {
                    StepMode::FixedStep => {
                        Vector::from_raw(d.iter().map(|v| v * config.fixed_mu).collect())
                    }
                    StepMode::SteepestDescent => {
                        // Step length per column from that column's data
                        // gradient (null-space free denominator).
                        let mu = steepest_step(a, &grad_l, config.eps_denominator)?;
                        Vector::from_raw(d.iter().map(|v| v * mu).collect())
                    }
                    StepMode::Newton => newton.as_ref().expect("newton operator").apply(&d)?,
                };
                let delta_sq = step.dot(&step)?;
                Ok((step, resid_sq, delta_sq))
            })
            .collect::<Result<Vec<_>>>()?;

        // Deterministic merge in column order.
        let mut resid_sq_total = 0.0;
        let mut delta_sq_total = 0.0;
        for (k, (step, resid_sq, delta_sq)) in updates.iter().enumerate() {
            resid_sq_total += resid_sq;
            delta_sq_total += delta_sq;
            for j in 0..rows {
                let v = img.get(j, k) - step[j];
                img.set(j, k, v);
            }
        }
        let residual = resid_sq_total.sqrt();
        let delta = delta_sq_total.sqrt();
        let objective = 0.5 * resid_sq_total + lambda_i * tv_value(&img);
        trace.push(TraceRecord {
            iter: iter + 1,
            residual,
            objective,
            delta,
        });
        if img.pixels().iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                at_iter: iter + 1,
                trace,
            });
        }
        if delta < config.stop_tol {
            break;
        }
    }
    Ok((img, vec![trace]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensing::Distribution;
    use crate::transforms::TransformKind;

    fn identity_obs(n: usize) -> ObservationMatrix {
        ObservationMatrix::from_matrix(Matrix::identity(n))
    }

    fn psi_id(n: usize) -> TransformOperator {
        TransformOperator::new(TransformKind::Identity, n).unwrap()
    }

    #[test]
    fn reconstruction_matrix_form_a_is_m0() {
        let obs = generate_observation(3, 8, Distribution::Normal01, 1).unwrap();
        let (b, rule) =
            reconstruction_matrix(ProblemForm::TimeSparseTimeMeas, obs.matrix(), &psi_id(8))
                .unwrap();
        assert_eq!(&b, obs.matrix());
        assert_eq!(rule, MapBack::Identity);
    }

    #[test]
    fn reconstruction_matrix_identity_transform_degenerates() {
        let obs = generate_observation(3, 8, Distribution::Uniform01, 2).unwrap();
        for form in [
            ProblemForm::TimeSparseTransMeas,
            ProblemForm::TransSparseTimeMeas,
            ProblemForm::TransSparseTransMeas,
        ] {
            let (b, _) = reconstruction_matrix(form, obs.matrix(), &psi_id(8)).unwrap();
            assert_eq!(&b, obs.matrix(), "form {form:?} with identity transform");
        }
    }

    #[test]
    fn reconstruction_matrix_form_c_composition() {
        // B f̃ must equal M₀ f when f̃ = Ψ f.
        let obs = generate_observation(4, 16, Distribution::Normal01, 5).unwrap();
        let psi = TransformOperator::new(TransformKind::Dct, 16).unwrap();
        let (b, rule) =
            reconstruction_matrix(ProblemForm::TransSparseTimeMeas, obs.matrix(), &psi).unwrap();
        assert_eq!(rule, MapBack::InverseTransform);
        let mut rng = SplitMix64::new(6);
        let f = Vector::new((0..16).map(|_| rng.normal()).collect()).unwrap();
        let lhs = b.matvec(&psi.forward(&f).unwrap()).unwrap();
        let rhs = obs.measure(&f).unwrap();
        for i in 0..4 {
            assert!((lhs[i] - rhs[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn recover_identity_one_newton_step_is_exact() {
        let n = 6;
        let mut rng = SplitMix64::new(8);
        let y = Vector::new((0..n).map(|_| rng.normal()).collect()).unwrap();
        let problem = RecoveryProblem {
            form: ProblemForm::TimeSparseTimeMeas,
            obs: identity_obs(n),
            psi: psi_id(n),
            measurements: Measurements::Single(y.clone()),
            regularizer: Regularizer::L1(L1Params::new(0.0)),
            per_column_seeds: false,
        };
        let config = SolverConfig::newton().with_eps_newton(0.0).with_max_iters(1);
        let (f, trace) = recover_vector(&problem, &config).unwrap();
        assert_eq!(trace.len(), 1);
        assert_eq!(f, y);
    }

    #[test]
    fn recover_sparse_vector_steepest_descent() {
        // Ground truth known by construction: f = [0, 3, 0, 0].
        let f_true = Vector::new(vec![0.0, 3.0, 0.0, 0.0]).unwrap();
        let obs = generate_observation(3, 4, Distribution::Normal01, 40).unwrap();
        let y = obs.measure(&f_true).unwrap();
        let problem = RecoveryProblem {
            form: ProblemForm::TimeSparseTimeMeas,
            obs,
            psi: psi_id(4),
            measurements: Measurements::Single(y),
            regularizer: Regularizer::L1(L1Params::new(0.005)),
            per_column_seeds: false,
        };
        let config = SolverConfig::steepest().with_max_iters(5000);
        let (f, _) = recover_vector(&problem, &config).unwrap();
        for i in 0..4 {
            assert!(
                (f[i] - f_true[i]).abs() < 1e-2,
                "component {i}: {} vs {}",
                f[i],
                f_true[i]
            );
        }
    }

    #[test]
    fn recover_noisy_sparse_vector_keeps_support() {
        let f_true = Vector::new(vec![0.0, 3.0, 0.0, 0.0]).unwrap();
        let obs = generate_observation(3, 4, Distribution::Normal01, 40).unwrap();
        let y = obs.measure(&f_true).unwrap();
        let sigma = 0.01 * y.norm2() / (3.0f64).sqrt();
        let noisy = add_measurement_noise(&y, sigma, 99).unwrap();
        let problem = RecoveryProblem {
            form: ProblemForm::TimeSparseTimeMeas,
            obs,
            psi: psi_id(4),
            measurements: Measurements::Single(noisy),
            regularizer: Regularizer::L1(L1Params::new(0.005)),
            per_column_seeds: false,
        };
        let config = SolverConfig::steepest().with_max_iters(5000);
        let (f, _) = recover_vector(&problem, &config).unwrap();
        let max_idx = (0..4).max_by(|&i, &j| f[i].abs().total_cmp(&f[j].abs())).unwrap();
        assert_eq!(max_idx, 1);
        assert!((f[1] - 3.0).abs() < 0.2, "{f:?}");
    }

    #[test]
    fn recover_form_c_dct_support() {
        // f is 1-sparse in the DCT domain (coefficient index 2); recover
        // from M = 4 time-domain measurements of N = 16.
        let n = 16;
        let psi = TransformOperator::new(TransformKind::Dct, n).unwrap();
        let mut coeffs = vec![0.0; n];
        coeffs[2] = 5.0;
        let f_true = psi.inverse(&Vector::new(coeffs).unwrap()).unwrap();
        let obs = generate_observation(4, n, Distribution::Normal01, 12).unwrap();
        let y = obs.measure(&f_true).unwrap();
        let problem = RecoveryProblem {
            form: ProblemForm::TransSparseTimeMeas,
            obs,
            psi: psi.clone(),
            measurements: Measurements::Single(y),
            regularizer: Regularizer::L1(L1Params::new(0.005)),
            per_column_seeds: false,
        };
        let config = SolverConfig::steepest().with_max_iters(10_000);
        let (f, _) = recover_vector(&problem, &config).unwrap();
        let coeffs = psi.forward(&f).unwrap();
        for k in 0..n {
            if k == 2 {
                assert!((coeffs[k] - 5.0).abs() < 0.05, "coef {k}: {}", coeffs[k]);
            } else {
                assert!(coeffs[k].abs() < 0.05, "coef {k}: {}", coeffs[k]);
            }
        }
    }

    #[test]
    fn map_back_round_trip_forms_c_d() {
        let psi = TransformOperator::new(TransformKind::Haar, 8).unwrap();
        let mut rng = SplitMix64::new(31);
        let z = Vector::new((0..8).map(|_| rng.normal()).collect()).unwrap();
        let f = map_back(&psi, MapBack::InverseTransform, &z).unwrap();
        let z2 = psi.forward(&f).unwrap();
        for i in 0..8 {
            assert!((z[i] - z2[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn noise_sigma_zero_is_identity() {
        let y = Vector::new(vec![1.0, -2.0, 3.0]).unwrap();
        let out = add_measurement_noise(&y, 0.0, 123).unwrap();
        assert_eq!(out, y);
    }

    #[test]
    fn noise_standard_deviation_is_calibrated() {
        let y = Vector::zeros(10_000);
        let out = add_measurement_noise(&y, 1.0, 7).unwrap();
        let n = out.len() as f64;
        let mean: f64 = out.iter().sum::<f64>() / n;
        let var: f64 = out.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let sd = var.sqrt();
        assert!((sd - 1.0).abs() < 0.05, "sd = {sd}");
    }

    #[test]
    fn all_zero_image_recovers_to_zero() {
        let obs = generate_observation(4, 8, Distribution::Uniform01, 3).unwrap();
        let img = ImageGrid::zeros(8, 5);
        let measurements = measure_columns(&obs, &img, false).unwrap();
        let problem = RecoveryProblem {
            form: ProblemForm::TimeSparseTimeMeas,
            obs,
            psi: psi_id(8),
            measurements: Measurements::PerColumn(measurements),
            regularizer: Regularizer::L1(L1Params::new(0.01)),
            per_column_seeds: false,
        };
        let config = SolverConfig::steepest().with_max_iters(100);
        let report = recover_image(&problem, &config).unwrap();
        let img = report.recovered.as_image().unwrap();
        assert!(img.pixels().iter().all(|&p| p == 0.0));
        // Zero gradient everywhere: each column stops after one record.
        assert!(report.traces.iter().all(|t| t.len() == 1));
    }

    #[test]
    fn tv_requires_form_a() {
        let obs = generate_observation(4, 8, Distribution::Uniform01, 3).unwrap();
        let img = ImageGrid::zeros(8, 4);
        let measurements = measure_columns(&obs, &img, false).unwrap();
        let problem = RecoveryProblem {
            form: ProblemForm::TransSparseTimeMeas,
            obs,
            psi: psi_id(8),
            measurements: Measurements::PerColumn(measurements),
            regularizer: Regularizer::Tv(TvParams::new(0.001)),
            per_column_seeds: false,
        };
        let config = SolverConfig::steepest().with_max_iters(10);
        assert!(matches!(
            recover_image(&problem, &config),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn per_column_seeds_round_trip() {
        let obs = generate_observation(6, 8, Distribution::Normal01, 77).unwrap();
        let mut img = ImageGrid::zeros(8, 3);
        img.set(2, 0, 1.0);
        img.set(5, 1, -2.0);
        img.set(0, 2, 0.5);
        let measurements = measure_columns(&obs, &img, true).unwrap();
        let problem = RecoveryProblem {
            form: ProblemForm::TimeSparseTimeMeas,
            obs,
            psi: psi_id(8),
            measurements: Measurements::PerColumn(measurements),
            regularizer: Regularizer::L1(L1Params::new(0.005)),
            per_column_seeds: true,
        };
        let config = SolverConfig::steepest().with_max_iters(3000);
        let report = recover_image(&problem, &config).unwrap();
        let rec = report.recovered.as_image().unwrap();
        for j in 0..8 {
            for k in 0..3 {
                assert!(
                    (rec.get(j, k) - img.get(j, k)).abs() < 2e-2,
                    "pixel ({j},{k}): {} vs {}",
                    rec.get(j, k),
                    img.get(j, k)
                );
            }
        }
    }

    #[test]
    fn report_dir_layout() {
        let obs = generate_observation(3, 8, Distribution::Uniform01, 21).unwrap();
        let mut img = ImageGrid::zeros(8, 2);
        img.set(1, 0, 1.0);
        let measurements = measure_columns(&obs, &img, false).unwrap();
        let problem = RecoveryProblem {
            form: ProblemForm::TimeSparseTimeMeas,
            obs,
            psi: psi_id(8),
            measurements: Measurements::PerColumn(measurements),
            regularizer: Regularizer::L1(L1Params::new(0.005)),
            per_column_seeds: false,
        };
        let config = SolverConfig::steepest().with_max_iters(500);
        let report = recover_image(&problem, &config).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("run");
        report.write_dir(&out, 10, 255).unwrap();
        assert!(out.join("recovered.pgm").exists());
        assert!(out.join("trace_col_0.csv").exists());
        assert!(out.join("trace_col_1.csv").exists());
        let json = std::fs::read_to_string(out.join("report.json")).unwrap();
        assert!(json.contains("\"form\": \"a\""));
        assert!(json.contains("\"regularizer\": \"l1\""));
    }
}
