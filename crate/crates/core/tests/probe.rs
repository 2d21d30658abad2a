use cs_core::linalg::Vector;
use cs_core::recovery::*;
use cs_core::regularizers::L1Params;
use cs_core::sensing::{generate_observation, Distribution};
use cs_core::solvers::SolverConfig;
use cs_core::transforms::{TransformKind, TransformOperator};

#[test]
#[ignore]
fn probe_seeds() {
    println!("--- sparse vector N=4 M=3 ---");
    for seed in [1u64, 2, 3, 5, 7, 11, 13, 17, 40, 41, 42] {
        let f_true = Vector::new(vec![0.0, 3.0, 0.0, 0.0]).unwrap();
        let obs = generate_observation(3, 4, Distribution::Normal01, seed).unwrap();
        let y = obs.measure(&f_true).unwrap();
        let problem = RecoveryProblem {
            form: ProblemForm::TimeSparseTimeMeas,
            obs,
            psi: TransformOperator::new(TransformKind::Identity, 4).unwrap(),
            measurements: Measurements::Single(y),
            regularizer: Regularizer::L1(L1Params::new(0.005)),
            per_column_seeds: false,
        };
        let config = SolverConfig::steepest().with_max_iters(5000);
        let (f, _) = recover_vector(&problem, &config).unwrap();
        let err = (0..4).map(|i| (f[i] - f_true[i]).abs()).fold(0.0f64, f64::max);
        println!("seed {seed}: max err {err:.3e}");
    }

    println!("--- form a direct N=16 M=4 K=1 ---");
    for seed in [1u64, 2, 3, 5, 7, 11, 12, 13, 17] {
        let n = 16;
        let mut ft = vec![0.0; n];
        ft[2] = 5.0;
        let f_true = Vector::new(ft).unwrap();
        let obs = generate_observation(4, n, Distribution::Normal01, seed).unwrap();
        let y = obs.measure(&f_true).unwrap();
        let problem = RecoveryProblem {
            form: ProblemForm::TimeSparseTimeMeas,
            obs,
            psi: TransformOperator::new(TransformKind::Identity, n).unwrap(),
            measurements: Measurements::Single(y),
            regularizer: Regularizer::L1(L1Params::new(0.005)),
            per_column_seeds: false,
        };
        let config = SolverConfig::steepest().with_max_iters(10_000);
        let (f, tr) = recover_vector(&problem, &config).unwrap();
        let err_on = (f[2] - 5.0).abs();
        let err_off = (0..n)
            .filter(|&k| k != 2)
            .map(|k| f[k].abs())
            .fold(0.0f64, f64::max);
        let last = tr.last().unwrap();
        println!(
            "seed {seed}: on {err_on:.3e} off {err_off:.3e} resid {:.3e} iters {}",
            last.residual,
            tr.len()
        );
    }

    println!("--- form c dct N=16 M=4 ---");
    for seed in [1u64, 2, 3, 5, 7, 11, 12, 13, 17] {
        let n = 16;
        let psi = TransformOperator::new(TransformKind::Dct, n).unwrap();
        let mut coeffs = vec![0.0; n];
        coeffs[2] = 5.0;
        let f_true = psi.inverse(&Vector::new(coeffs).unwrap()).unwrap();
        let obs = generate_observation(4, n, Distribution::Normal01, seed).unwrap();
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
        let err_on = (coeffs[2] - 5.0).abs();
        let err_off = (0..n)
            .filter(|&k| k != 2)
            .map(|k| coeffs[k].abs())
            .fold(0.0f64, f64::max);
        println!("seed {seed}: on {err_on:.3e} off {err_off:.3e}");
    }
}
