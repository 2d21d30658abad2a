//! Gradient-based iteration engines for least-squares objectives with an
//! optional nonsmooth penalty.
//!
//! All three engines share the update `f ← f − μ·d` where `d` is a
//! (sub)gradient supplied by a callback:
//!
//! * fixed step: μ is a small constant;
//! * steepest descent: μ = ⟨g, g⟩ / (⟨g, AᵀA g⟩ + ε) computed from the
//!   least-squares gradient g = Aᵀ(Af − y), the exact 1-D residual
//!   minimizer along g (ε guards a zero denominator). g lies in the row
//!   space of A, so the denominator cannot collapse even when AᵀA is
//!   singular; the resulting μ also scales the nonsmooth part of the
//!   direction;
//! * Newton: μ is the constant matrix (AᵀA + εI)⁻¹, factored once and
//!   reused across iterations (and across image columns — see
//!   [`NewtonOperator`]). The ridge ε keeps the factorization alive when
//!   the system is underdetermined and AᵀA is singular.
//!
//! The callback receives the current iterate and the least-squares gradient
//! Aᵀ(Af − y) and returns the full update direction, which is how the same
//! engine serves plain least squares, the l1 subgradient, and smoothed TV.

use crate::error::{Error, Result};
use crate::linalg::{CholeskyFactor, Matrix, Vector};

/// Step-size rule selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepMode {
    FixedStep,
    SteepestDescent,
    Newton,
}

impl std::str::FromStr for StepMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fixed" | "fixed_step" => Ok(StepMode::FixedStep),
            "steepest" | "steepest_descent" => Ok(StepMode::SteepestDescent),
            "newton" => Ok(StepMode::Newton),
            other => Err(Error::config(format!("unknown step mode {other:?}"))),
        }
    }
}

impl std::fmt::Display for StepMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            StepMode::FixedStep => "fixed_step",
            StepMode::SteepestDescent => "steepest_descent",
            StepMode::Newton => "newton",
        };
        f.write_str(s)
    }
}

/// Iteration parameters.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SolverConfig {
    pub mode: StepMode,
    /// Step length for [`StepMode::FixedStep`]; ignored otherwise.
    pub fixed_mu: f64,
    /// Denominator guard for the steepest-descent step.
    pub eps_denominator: f64,
    /// Newton ridge; `None` picks 1e-4 · trace(AᵀA)/N, which scales the
    /// ridge with the matrix magnitude so conditioning is uniform across
    /// entry distributions.
    pub eps_newton: Option<f64>,
    pub max_iters: usize,
    /// Stop when ‖f⁺ − f‖₂ falls below this; the iteration budget is the
    /// primary control, this is a secondary early-out.
    pub stop_tol: f64,
}

impl SolverConfig {
    pub fn fixed(mu: f64) -> Self {
        SolverConfig {
            mode: StepMode::FixedStep,
            fixed_mu: mu,
            ..SolverConfig::steepest()
        }
    }

    pub fn steepest() -> Self {
        SolverConfig {
            mode: StepMode::SteepestDescent,
            fixed_mu: 0.0,
            eps_denominator: 1e-12,
            eps_newton: None,
            max_iters: 20_000,
            stop_tol: 1e-8,
        }
    }

    pub fn newton() -> Self {
        SolverConfig {
            mode: StepMode::Newton,
            ..SolverConfig::steepest()
        }
    }

    pub fn with_max_iters(mut self, n: usize) -> Self {
        self.max_iters = n;
        self
    }

    pub fn with_stop_tol(mut self, tol: f64) -> Self {
        self.stop_tol = tol;
        self
    }

    pub fn with_eps_newton(mut self, eps: f64) -> Self {
        self.eps_newton = Some(eps);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::config("max_iters must be >= 1"));
        }
        if self.mode == StepMode::FixedStep && self.fixed_mu <= 0.0 {
            return Err(Error::config("fixed_mu must be > 0 for fixed-step mode"));
        }
        if self.eps_denominator <= 0.0 {
            return Err(Error::config("eps_denominator must be > 0"));
        }
        if let Some(eps) = self.eps_newton {
            if eps < 0.0 || !eps.is_finite() {
                return Err(Error::config("eps_newton must be finite and >= 0"));
            }
        }
        if self.stop_tol < 0.0 {
            return Err(Error::config("stop_tol must be >= 0"));
        }
        Ok(())
    }
}

/// One record per iteration: the residual/objective of the iterate
/// *entering* the step, and the size of the step taken.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    pub residual: f64,
    pub objective: f64,
    pub delta: f64,
}

/// Per-iteration convergence history.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvergenceTrace {
    records: Vec<TraceRecord>,
}

impl ConvergenceTrace {
    pub fn new() -> Self {
        ConvergenceTrace::default()
    }

    pub fn push(&mut self, rec: TraceRecord) {
        self.records.push(rec);
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    /// CSV export (`iter,residual,objective,delta`). With `stride > 1` only
    /// every stride-th record is written, always keeping the last one.
    pub fn to_csv(&self, stride: usize) -> String {
        let stride = stride.max(1);
        let mut out = String::from("iter,residual,objective,delta\n");
        let last = self.records.len().saturating_sub(1);
        for (i, r) in self.records.iter().enumerate() {
            if i % stride == 0 || i == last {
                out.push_str(&format!(
                    "{},{:.16e},{:.16e},{:.16e}\n",
                    r.iter, r.residual, r.objective, r.delta
                ));
            }
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<std::path::Path>, stride: usize) -> Result<()> {
        std::fs::write(path, self.to_csv(stride))?;
        Ok(())
    }
}

/// ∇L(f) = Aᵀ(A f − y) for L(f) = ½‖A f − y‖₂².
pub fn grad_least_squares(a: &Matrix, f: &Vector, y: &Vector) -> Result<Vector> {
    let mut r = a.matvec(f)?;
    if r.len() != y.len() {
        return Err(Error::dimension(format!(
            "gradient: residual length {} but y has length {}",
            r.len(),
            y.len()
        )));
    }
    for i in 0..r.len() {
        r[i] -= y[i];
    }
    a.transpose_matvec(&r)
}

/// Exact line-search step μ = ⟨g, g⟩ / (⟨g, AᵀA g⟩ + eps), the minimizer of
/// the post-step residual along `g` (up to the guard term).
pub fn steepest_step(a: &Matrix, g: &Vector, eps: f64) -> Result<f64> {
    if g.len() != a.cols() {
        return Err(Error::dimension(format!(
            "steepest_step: matrix has {} columns, direction has length {}",
            a.cols(),
            g.len()
        )));
    }
    let num = g.dot(g)?;
    if num == 0.0 {
        return Ok(0.0);
    }
    let ag = a.matvec(g)?;
    Ok(num / (ag.dot(&ag)? + eps))
}

/// The "constant matrix" Newton step operator (AᵀA + εI)⁻¹, held as a
/// Cholesky factorization. Built once per (matrix, ε) pair and shared
/// read-only across iterations and image columns.
#[derive(Debug, Clone)]
pub struct NewtonOperator {
    factor: CholeskyFactor,
    ridge: f64,
}

impl NewtonOperator {
    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    /// (AᵀA + εI)⁻¹ v via the stored factorization.
    pub fn apply(&self, v: &Vector) -> Result<Vector> {
        self.factor.solve(v)
    }
}

/// Default ridge: 1e-4 · trace(AᵀA) / N.
pub fn auto_newton_ridge(a: &Matrix) -> f64 {
    1e-4 * a.frobenius_sq() / a.cols() as f64
}

/// Factors (AᵀA + eps·I). A positive ridge is required whenever the system
/// is underdetermined (rows < cols), since AᵀA is then singular.
pub fn newton_operator(a: &Matrix, eps: f64) -> Result<NewtonOperator> {
    if eps < 0.0 || !eps.is_finite() {
        return Err(Error::config("newton ridge must be finite and >= 0"));
    }
    if eps == 0.0 && a.rows() < a.cols() {
        return Err(Error::config(
            "newton ridge must be > 0 when rows < cols (AᵀA is singular)",
        ));
    }
    let mut gram = a.gram();
    if eps > 0.0 {
        for i in 0..gram.rows() {
            let v = gram.get(i, i);
            gram.set(i, i, v + eps);
        }
    }
    let factor = CholeskyFactor::factor(&gram)?;
    Ok(NewtonOperator { factor, ridge: eps })
}

/// Runs the configured iteration from `f0`.
///
/// Per iteration the engine computes the least-squares gradient, asks
/// `subgrad(f, grad_l, iter)` for the update direction, scales it by the
/// mode's step rule, and records `(iter, residual, objective, delta)`.
/// `penalty(f, iter)` is added to ½‖Af − y‖² for the objective column.
/// Stops at `max_iters` or when the iterate change drops below `stop_tol`;
/// a non-finite iterate aborts with [`Error::Divergence`] carrying the
/// trace recorded so far.
pub fn iterate<S, P>(
    config: &SolverConfig,
    a: &Matrix,
    y: &Vector,
    f0: Vector,
    subgrad: S,
    penalty: P,
) -> Result<(Vector, ConvergenceTrace)>
where
    S: FnMut(&Vector, &Vector, usize) -> Vector,
    P: FnMut(&Vector, usize) -> f64,
{
    iterate_with(config, a, y, f0, None, subgrad, penalty)
}

/// [`iterate`] with an optional pre-built Newton operator so one
/// factorization can serve many runs against the same matrix.
pub fn iterate_with<S, P>(
    config: &SolverConfig,
    a: &Matrix,
    y: &Vector,
    f0: Vector,
    newton: Option<&NewtonOperator>,
    mut subgrad: S,
    mut penalty: P,
) -> Result<(Vector, ConvergenceTrace)>
where
    S: FnMut(&Vector, &Vector, usize) -> Vector,
    P: FnMut(&Vector, usize) -> f64,
{
    config.validate()?;
    if f0.len() != a.cols() {
        return Err(Error::dimension(format!(
            "iterate: matrix has {} columns, start has length {}",
            a.cols(),
            f0.len()
        )));
    }
    if y.len() != a.rows() {
        return Err(Error::dimension(format!(
            "iterate: matrix has {} rows, y has length {}",
            a.rows(),
            y.len()
        )));
    }

    let owned_newton;
    let newton_op = match (config.mode, newton) {
        (StepMode::Newton, Some(op)) => Some(op),
        (StepMode::Newton, None) => {
            let eps = config.eps_newton.unwrap_or_else(|| auto_newton_ridge(a));
            owned_newton = newton_operator(a, eps)?;
            Some(&owned_newton)
        }
        _ => None,
    };

    let mut f = f0;
    let mut trace = ConvergenceTrace::new();
    for iter in 0..config.max_iters {
        let mut r = a.matvec(&f)?;
        for i in 0..r.len() {
            r[i] -= y[i];
        }
        let residual = r.norm2();
        let grad_l = a.transpose_matvec(&r)?;
        let direction = subgrad(&f, &grad_l, iter);
        if direction.len() != f.len() {
            return Err(Error::dimension(format!(
                "subgradient returned length {} for iterate of length {}",
                direction.len(),
                f.len()
            )));
        }

        let step: Vector = match config.mode {
            StepMode::FixedStep => scale(&direction, config.fixed_mu),
            StepMode::SteepestDescent => {
                // The step length comes from the data gradient, not the
                // full direction: grad_l has no null-space component, so
                // the denominator stays bounded below.
                let mu = steepest_step(a, &grad_l, config.eps_denominator)?;
                scale(&direction, mu)
            }
            StepMode::Newton => newton_op.expect("newton operator present").apply(&direction)?,
        };

        let objective = 0.5 * residual * residual + penalty(&f, iter);
        let delta = step.norm2();
        trace.push(TraceRecord {
            iter: iter + 1,
            residual,
            objective,
            delta,
        });

        for i in 0..f.len() {
            f[i] -= step[i];
        }
        if f.has_non_finite() {
            return Err(Error::Divergence {
                at_iter: iter + 1,
                trace,
            });
        }
        if delta < config.stop_tol {
            break;
        }
    }
    Ok((f, trace))
}

fn scale(v: &Vector, s: f64) -> Vector {
    Vector::from_raw(v.iter().map(|x| x * s).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn vec_of(v: &[f64]) -> Vector {
        Vector::new(v.to_vec()).unwrap()
    }

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = SplitMix64::new(seed);
        Matrix::new(rows, cols, (0..rows * cols).map(|_| rng.normal()).collect()).unwrap()
    }

    fn least_squares(a: &Matrix, f: &Vector, y: &Vector) -> f64 {
        let r = a.matvec(f).unwrap();
        let mut s = 0.0;
        for i in 0..r.len() {
            s += (r[i] - y[i]).powi(2);
        }
        0.5 * s
    }

    #[test]
    fn gradient_hand_values() {
        let a = Matrix::identity(2);
        let f = vec_of(&[1.0, 2.0]);
        let g = grad_least_squares(&a, &f, &f).unwrap();
        assert_eq!(g.as_slice(), &[0.0, 0.0]);

        let g = grad_least_squares(&a, &vec_of(&[1.0, 0.0]), &vec_of(&[0.0, 0.0])).unwrap();
        assert_eq!(g.as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let a = random_matrix(5, 7, 21);
        let mut rng = SplitMix64::new(22);
        let f = Vector::new((0..7).map(|_| rng.normal()).collect()).unwrap();
        let y = Vector::new((0..5).map(|_| rng.normal()).collect()).unwrap();
        let g = grad_least_squares(&a, &f, &y).unwrap();
        let h = 1e-6;
        for i in 0..7 {
            let mut fp = f.clone();
            let mut fm = f.clone();
            fp[i] += h;
            fm[i] -= h;
            let fd = (least_squares(&a, &fp, &y) - least_squares(&a, &fm, &y)) / (2.0 * h);
            let denom = g[i].abs().max(1.0);
            assert!(
                (g[i] - fd).abs() / denom < 1e-6,
                "component {i}: analytic {} vs fd {fd}",
                g[i]
            );
        }
    }

    #[test]
    fn steepest_step_hand_values() {
        let a = Matrix::identity(2);
        assert_eq!(steepest_step(&a, &vec_of(&[1.0, 0.0]), 0.0).unwrap(), 1.0);

        let mut a2 = Matrix::identity(3);
        for i in 0..3 {
            a2.set(i, i, 2.0);
        }
        let mu = steepest_step(&a2, &vec_of(&[0.3, -1.0, 2.0]), 0.0).unwrap();
        assert!((mu - 0.25).abs() < 1e-15);

        assert_eq!(
            steepest_step(&a, &vec_of(&[0.0, 0.0]), 1e-12).unwrap(),
            0.0
        );
    }

    #[test]
    fn steepest_step_is_the_line_minimizer() {
        let a = random_matrix(6, 4, 33);
        let mut rng = SplitMix64::new(34);
        let f = Vector::new((0..4).map(|_| rng.normal()).collect()).unwrap();
        let y = Vector::new((0..6).map(|_| rng.normal()).collect()).unwrap();
        let g = grad_least_squares(&a, &f, &y).unwrap();
        let mu = steepest_step(&a, &g, 0.0).unwrap();
        let resid_at = |m: f64| {
            let fm = Vector::from_raw((0..4).map(|i| f[i] - m * g[i]).collect());
            let r = a.matvec(&fm).unwrap();
            (0..6).map(|i| (r[i] - y[i]).powi(2)).sum::<f64>()
        };
        let base = resid_at(mu);
        assert!(resid_at(mu * 1.01) >= base - 1e-12);
        assert!(resid_at(mu * 0.99) >= base - 1e-12);
    }

    #[test]
    fn newton_operator_hand_values() {
        let op = newton_operator(&Matrix::identity(3), 0.0).unwrap();
        let v = vec_of(&[1.0, -2.0, 0.5]);
        let w = op.apply(&v).unwrap();
        for i in 0..3 {
            assert!((w[i] - v[i]).abs() < 1e-14);
        }

        // A = [[1, 0]]: AᵀA + 0.1 I = diag(1.1, 0.1).
        let a = Matrix::from_rows(&[vec![1.0, 0.0]]).unwrap();
        let op = newton_operator(&a, 0.1).unwrap();
        let e1 = op.apply(&vec_of(&[1.0, 0.0])).unwrap();
        let e2 = op.apply(&vec_of(&[0.0, 1.0])).unwrap();
        assert!((e1[0] - 1.0 / 1.1).abs() < 1e-14 && e1[1].abs() < 1e-14);
        assert!((e2[1] - 10.0).abs() < 1e-12 && e2[0].abs() < 1e-14);
    }

    #[test]
    fn newton_operator_inverts() {
        let a = random_matrix(4, 6, 55);
        let eps = 0.37;
        let op = newton_operator(&a, eps).unwrap();
        let mut gram = a.gram();
        for i in 0..6 {
            let v = gram.get(i, i);
            gram.set(i, i, v + eps);
        }
        let mut rng = SplitMix64::new(56);
        let v = Vector::new((0..6).map(|_| rng.normal()).collect()).unwrap();
        let w = op.apply(&gram.matvec(&v).unwrap()).unwrap();
        for i in 0..6 {
            assert!((w[i] - v[i]).abs() < 1e-8, "{w:?} vs {v:?}");
        }
    }

    #[test]
    fn newton_requires_ridge_when_underdetermined() {
        let a = random_matrix(2, 5, 3);
        assert!(matches!(newton_operator(&a, 0.0), Err(Error::Config(_))));
    }

    // The 2-D quadratic (x+y)² + (x+1)² + (y+3)², written as
    // ½‖Af − b‖² with A = √2·[[1,1],[1,0],[0,1]], b = √2·[0,−1,−3].
    // Its minimum is (1/3, −5/3); Newton lands on it in one step.
    #[test]
    fn newton_solves_quadratic_demo_in_one_step() {
        let s = std::f64::consts::SQRT_2;
        let a = Matrix::from_rows(&[vec![s, s], vec![s, 0.0], vec![0.0, s]]).unwrap();
        let b = vec_of(&[0.0, -s, -3.0 * s]);
        let config = SolverConfig::newton().with_eps_newton(0.0).with_max_iters(1);
        let (f, trace) = iterate(
            &config,
            &a,
            &b,
            Vector::zeros(2),
            |_, g, _| g.clone(),
            |_, _| 0.0,
        )
        .unwrap();
        assert_eq!(trace.len(), 1);
        assert!((f[0] - 1.0 / 3.0).abs() < 1e-9);
        assert!((f[1] + 5.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn newton_one_step_on_consistent_square_system() {
        let a = random_matrix(5, 5, 77);
        let mut rng = SplitMix64::new(78);
        let x_true = Vector::new((0..5).map(|_| rng.normal()).collect()).unwrap();
        let y = a.matvec(&x_true).unwrap();
        let config = SolverConfig::newton().with_eps_newton(0.0).with_max_iters(1);
        let (f, _) = iterate(
            &config,
            &a,
            &y,
            Vector::zeros(5),
            |_, g, _| g.clone(),
            |_, _| 0.0,
        )
        .unwrap();
        for i in 0..5 {
            assert!((f[i] - x_true[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_gradient_stops_immediately() {
        let a = Matrix::identity(3);
        let y = vec_of(&[1.0, 2.0, 3.0]);
        let config = SolverConfig::steepest().with_max_iters(100);
        let (f, trace) = iterate(
            &config,
            &a,
            &y,
            y.clone(),
            |_, g, _| g.clone(),
            |_, _| 0.0,
        )
        .unwrap();
        assert_eq!(trace.len(), 1);
        assert_eq!(f, y);
    }

    #[test]
    fn steepest_converges_to_least_squares_solution() {
        // Overdetermined consistent system: steepest descent reaches the
        // direct solve within 1e-6.
        let a = random_matrix(12, 6, 91);
        let mut rng = SplitMix64::new(92);
        let x_true = Vector::new((0..6).map(|_| rng.normal()).collect()).unwrap();
        let y = a.matvec(&x_true).unwrap();
        let config = SolverConfig::steepest().with_max_iters(5000).with_stop_tol(1e-14);
        let (f, _) = iterate(
            &config,
            &a,
            &y,
            Vector::zeros(6),
            |_, g, _| g.clone(),
            |_, _| 0.0,
        )
        .unwrap();
        let direct = crate::linalg::solve_spd(&a.gram(), &a.transpose_matvec(&y).unwrap()).unwrap();
        for i in 0..6 {
            assert!((f[i] - direct[i]).abs() < 1e-6, "{f:?} vs {direct:?}");
        }
    }

    #[test]
    fn steepest_residual_is_monotone() {
        let a = random_matrix(8, 5, 101);
        let mut rng = SplitMix64::new(102);
        let y = Vector::new((0..8).map(|_| rng.normal()).collect()).unwrap();
        let config = SolverConfig::steepest().with_max_iters(200).with_stop_tol(0.0);
        let (_, trace) = iterate(
            &config,
            &a,
            &y,
            Vector::zeros(5),
            |_, g, _| g.clone(),
            |_, _| 0.0,
        )
        .unwrap();
        let r = trace.records();
        for w in r.windows(2) {
            assert!(w[1].residual <= w[0].residual + 1e-12);
        }
    }

    #[test]
    fn divergence_is_reported_with_trace() {
        let a = random_matrix(4, 4, 5);
        let y = vec_of(&[1.0, 1.0, 1.0, 1.0]);
        let config = SolverConfig::fixed(1e6).with_max_iters(1000);
        let err = iterate(
            &config,
            &a,
            &y,
            Vector::zeros(4),
            |_, g, _| g.clone(),
            |_, _| 0.0,
        )
        .unwrap_err();
        match err {
            Error::Divergence { at_iter, trace } => {
                assert!(at_iter >= 1);
                assert_eq!(trace.len(), at_iter);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn trace_csv_has_frozen_header_and_keeps_last_row() {
        let mut t = ConvergenceTrace::new();
        for i in 1..=10 {
            t.push(TraceRecord {
                iter: i,
                residual: i as f64,
                objective: 0.5,
                delta: 0.1,
            });
        }
        let csv = t.to_csv(4);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "iter,residual,objective,delta");
        let rest: Vec<&str> = lines.collect();
        assert!(rest[0].starts_with("1,"));
        assert!(rest.last().unwrap().starts_with("10,"));
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::fixed(0.0).validate().is_err());
        assert!(SolverConfig::steepest().with_max_iters(0).validate().is_err());
        let mut c = SolverConfig::steepest();
        c.eps_denominator = 0.0;
        assert!(c.validate().is_err());
    }
}
