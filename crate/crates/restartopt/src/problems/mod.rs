//! Benchmark objectives: analytic test functions with known constants,
//! factorized matrix-completion objectives, initialization, and data
//! generation/ingestion.

mod completion;
mod factor;
mod observed;
mod svd;

pub use completion::{balance_norm_sq, matrix_completion_problem, one_bit_problem, MatrixCompletion, OneBitCompletion};
pub use factor::FactorPair;
pub use observed::{
    generate_synthetic_mc, generate_synthetic_one_bit, load_ratings_csv, parse_ratings,
    ObservedMatrix,
};
pub use svd::{svd_init, SvdInit};

use crate::problem::Problem;
use crate::{int, Scalar};

/// Sum-of-cosines testbed `f(x) = sum_i cos(x_i)`.
///
/// Its gradient and Hessian are 1-Lipschitz and it is bounded below by `-d`,
/// so every guarantee can be checked against it with exact constants.
#[derive(Debug, Clone, Copy)]
pub struct CosineSum {
    dim: usize,
}

pub fn cosine_problem(dim: usize) -> CosineSum {
    assert!(dim >= 1, "dimension must be positive");
    CosineSum { dim }
}

impl<F: Scalar> Problem<F> for CosineSum {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[F]) -> F {
        x.iter().fold(F::zero(), |acc, &xi| acc + xi.cos())
    }

    fn gradient(&self, x: &[F]) -> Vec<F> {
        x.iter().map(|&xi| -xi.sin()).collect()
    }

    fn lipschitz_gradient(&self) -> Option<F> {
        Some(F::one())
    }

    fn lipschitz_hessian(&self) -> Option<F> {
        Some(F::one())
    }

    fn lower_bound(&self) -> Option<F> {
        Some(-int::<F>(self.dim))
    }
}

/// Diagonal quadratic `f(x) = (1/2) sum_i lambda_i x_i^2`, the analytic
/// oracle for step and equivalence tests. Its Hessian is constant, so the
/// Hessian-Lipschitz constant is zero.
#[derive(Debug, Clone)]
pub struct DiagQuadratic<F> {
    lambdas: Vec<F>,
}

pub fn diag_quadratic_problem<F: Scalar>(lambdas: Vec<F>) -> DiagQuadratic<F> {
    DiagQuadratic { lambdas }
}

impl<F: Scalar> Problem<F> for DiagQuadratic<F> {
    fn dim(&self) -> usize {
        self.lambdas.len()
    }

    fn value(&self, x: &[F]) -> F {
        let two = F::one() + F::one();
        x.iter()
            .zip(&self.lambdas)
            .fold(F::zero(), |acc, (&xi, &li)| acc + li * xi * xi / two)
    }

    fn gradient(&self, x: &[F]) -> Vec<F> {
        x.iter().zip(&self.lambdas).map(|(&xi, &li)| li * xi).collect()
    }

    fn lipschitz_gradient(&self) -> Option<F> {
        self.lambdas
            .iter()
            .map(|l| l.abs())
            .fold(None, |acc: Option<F>, l| Some(acc.map_or(l, |a| a.max(l))))
    }

    fn lipschitz_hessian(&self) -> Option<F> {
        Some(F::zero())
    }

    fn lower_bound(&self) -> Option<F> {
        if self.lambdas.iter().all(|l| *l >= F::zero()) {
            Some(F::zero())
        } else {
            None
        }
    }
}

/// Wrapper that negates one gradient coordinate, used to prove the gradient
/// checker can detect a broken closed form.
#[derive(Debug, Clone)]
pub struct CorruptedGradient<P> {
    inner: P,
    coordinate: usize,
}

impl<P> CorruptedGradient<P> {
    pub fn new(inner: P, coordinate: usize) -> Self {
        Self { inner, coordinate }
    }
}

impl<F: Scalar, P: Problem<F>> Problem<F> for CorruptedGradient<P> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &[F]) -> F {
        self.inner.value(x)
    }

    fn gradient(&self, x: &[F]) -> Vec<F> {
        let mut g = self.inner.gradient(x);
        if let Some(v) = g.get_mut(self.coordinate) {
            *v = -*v;
        }
        g
    }

    fn lipschitz_gradient(&self) -> Option<F> {
        self.inner.lipschitz_gradient()
    }

    fn lipschitz_hessian(&self) -> Option<F> {
        self.inner.lipschitz_hessian()
    }
}
