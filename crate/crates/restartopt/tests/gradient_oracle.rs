//! Certify the closed-form gradients of the completion objectives against
//! the central finite-difference oracle, and prove the checker detects a
//! corrupted gradient.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use restartopt::problems::{
    generate_synthetic_mc, generate_synthetic_one_bit, matrix_completion_problem, one_bit_problem,
    svd_init, CorruptedGradient,
};
use restartopt::verify::check_gradient;
use restartopt::Problem;

fn seeded_points(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..dim).map(|_| rng.random_range(-0.5..0.5)).collect())
        .collect()
}

#[test]
fn matrix_completion_gradient_matches_finite_differences() {
    let obs = generate_synthetic_mc::<f64>(20, 15, 3, 0.4, 0.05, 101).unwrap();
    let problem = matrix_completion_problem(obs, 3).unwrap();
    for (i, x) in seeded_points(problem.dim(), 5, 7).into_iter().enumerate() {
        let report = check_gradient(&problem, &x, 1e-5, 1e-4);
        assert!(
            report.pass,
            "point {i}: max_rel_err = {}, worst = {:?}",
            report.max_rel_err, report.worst_coordinate
        );
    }
}

#[test]
fn one_bit_gradient_matches_finite_differences() {
    let obs = generate_synthetic_one_bit::<f64>(20, 15, 3, 0.4, 33).unwrap();
    let problem = one_bit_problem(obs, 3).unwrap();
    for (i, x) in seeded_points(problem.dim(), 5, 11).into_iter().enumerate() {
        let report = check_gradient(&problem, &x, 1e-5, 1e-4);
        assert!(
            report.pass,
            "point {i}: max_rel_err = {}, worst = {:?}",
            report.max_rel_err, report.worst_coordinate
        );
    }
}

#[test]
fn corrupted_completion_gradient_is_caught() {
    let obs = generate_synthetic_mc::<f64>(20, 15, 3, 0.4, 0.05, 101).unwrap();
    let problem = CorruptedGradient::new(matrix_completion_problem(obs, 3).unwrap(), 12);
    let x = &seeded_points(problem.dim(), 1, 7)[0];
    let report = check_gradient(&problem, x, 1e-5, 1e-4);
    assert!(!report.pass);
    assert_eq!(report.worst_coordinate, Some(12));
}

#[test]
fn svd_initialization_feeds_the_objective() {
    // end-to-end: init from the observations, flatten, evaluate
    let obs = generate_synthetic_mc::<f64>(20, 15, 3, 0.5, 0.01, 5).unwrap();
    let problem = matrix_completion_problem(obs.clone(), 3).unwrap();
    let init = svd_init(&obs, 3, 9).unwrap();
    let x = init.factors.flatten();
    assert_eq!(x.len(), problem.dim());
    let f0 = problem.value(&x);
    assert!(f0.is_finite());
    // the SVD start fits an exactly factorized observation set better than
    // the origin fits it
    let zero = vec![0.0; problem.dim()];
    assert!(f0 <= problem.value(&zero));
}
