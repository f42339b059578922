//! Factorized matrix-completion objectives.
//!
//! Both problems minimize over the flattened pair `(U, V)` and share the
//! balance regularizer `(1/2N) ||U^T U - V^T V||_F^2` that keeps the two
//! factors comparable. The quadratic variant fits observed entries in least
//! squares; the one-bit variant fits observed signs by logistic negative
//! log-likelihood, evaluated through softplus so large products cannot
//! overflow. Closed-form gradients are certified against the central
//! finite-difference oracle.

use crate::error::{Error, Result};
use crate::problem::Problem;
use crate::problems::observed::ObservedMatrix;
use crate::{int, Scalar};

/// `||U^T U - V^T V||_F^2` for row-major factors.
pub fn balance_norm_sq<F: Scalar>(u: &[F], v: &[F], rows: usize, cols: usize, rank: usize) -> F {
    let gram_u = gram(u, rows, rank);
    let gram_v = gram(v, cols, rank);
    let mut acc = F::zero();
    for (a, b) in gram_u.iter().zip(&gram_v) {
        let d = *a - *b;
        acc = acc + d * d;
    }
    acc
}

/// `A^T A` (rank x rank, row-major) for a row-major `rows x rank` factor.
fn gram<F: Scalar>(a: &[F], rows: usize, rank: usize) -> Vec<F> {
    let mut out = vec![F::zero(); rank * rank];
    for i in 0..rows {
        let row = &a[i * rank..(i + 1) * rank];
        for p in 0..rank {
            for q in 0..rank {
                out[p * rank + q] = out[p * rank + q] + row[p] * row[q];
            }
        }
    }
    out
}

/// `A * S` for row-major `rows x rank` times `rank x rank`.
fn times_small<F: Scalar>(a: &[F], s: &[F], rows: usize, rank: usize) -> Vec<F> {
    let mut out = vec![F::zero(); rows * rank];
    for i in 0..rows {
        for k in 0..rank {
            let aik = a[i * rank + k];
            if aik == F::zero() {
                continue;
            }
            for c in 0..rank {
                out[i * rank + c] = out[i * rank + c] + aik * s[k * rank + c];
            }
        }
    }
    out
}

fn split<F>(x: &[F], rows: usize, rank: usize) -> (&[F], &[F]) {
    x.split_at(rows * rank)
}

/// Gradient contribution shared by both objectives: `residual/N` times the
/// opposite factor's row, plus the balance term `(2/N) U M` / `-(2/N) V M`
/// with `M = U^T U - V^T V`. The closure maps a stored entry value and the
/// product `(UV^T)_{ij}` to the derivative of the per-entry loss in the
/// product.
fn assemble_gradient<F: Scalar>(
    obs: &ObservedMatrix<F>,
    u: &[F],
    v: &[F],
    rank: usize,
    inv_n: F,
    residual: impl Fn(F, F) -> F,
) -> Vec<F> {
    let rows = obs.rows();
    let cols = obs.cols();
    let mut grad_u = vec![F::zero(); rows * rank];
    let mut grad_v = vec![F::zero(); cols * rank];
    for &(i, j, target) in obs.entries() {
        let mut p = F::zero();
        for k in 0..rank {
            p = p + u[i * rank + k] * v[j * rank + k];
        }
        let r = residual(target, p) * inv_n;
        for k in 0..rank {
            grad_u[i * rank + k] = grad_u[i * rank + k] + r * v[j * rank + k];
            grad_v[j * rank + k] = grad_v[j * rank + k] + r * u[i * rank + k];
        }
    }

    let gram_u = gram(u, rows, rank);
    let gram_v = gram(v, cols, rank);
    let m: Vec<F> = gram_u
        .iter()
        .zip(&gram_v)
        .map(|(&a, &b)| a - b)
        .collect();
    let two_inv_n = (F::one() + F::one()) * inv_n;
    let um = times_small(u, &m, rows, rank);
    let vm = times_small(v, &m, cols, rank);
    for (g, t) in grad_u.iter_mut().zip(&um) {
        *g = *g + two_inv_n * *t;
    }
    for (g, t) in grad_v.iter_mut().zip(&vm) {
        *g = *g - two_inv_n * *t;
    }

    let mut out = grad_u;
    out.extend_from_slice(&grad_v);
    out
}

/// Least-squares completion
/// `f(U,V) = (1/2N) sum_O ((UV^T)_{ij} - X*_{ij})^2 + (1/2N) ||U^T U - V^T V||_F^2`.
#[derive(Debug, Clone)]
pub struct MatrixCompletion<F> {
    obs: ObservedMatrix<F>,
    rank: usize,
    inv_n: F,
}

pub fn matrix_completion_problem<F: Scalar>(
    obs: ObservedMatrix<F>,
    rank: usize,
) -> Result<MatrixCompletion<F>> {
    if rank == 0 {
        return Err(Error::InvalidParameter("rank must be at least 1".into()));
    }
    let inv_n = F::one() / int::<F>(obs.n_observed());
    Ok(MatrixCompletion { obs, rank, inv_n })
}

impl<F: Scalar> MatrixCompletion<F> {
    pub fn observations(&self) -> &ObservedMatrix<F> {
        &self.obs
    }

    pub fn rank(&self) -> usize {
        self.rank
    }
}

impl<F: Scalar> Problem<F> for MatrixCompletion<F> {
    fn dim(&self) -> usize {
        (self.obs.rows() + self.obs.cols()) * self.rank
    }

    fn value(&self, x: &[F]) -> F {
        let (u, v) = split(x, self.obs.rows(), self.rank);
        let two = F::one() + F::one();
        let mut data = F::zero();
        for &(i, j, target) in self.obs.entries() {
            let mut p = F::zero();
            for k in 0..self.rank {
                p = p + u[i * self.rank + k] * v[j * self.rank + k];
            }
            let e = p - target;
            data = data + e * e;
        }
        let balance = balance_norm_sq(u, v, self.obs.rows(), self.obs.cols(), self.rank);
        self.inv_n * (data + balance) / two
    }

    fn gradient(&self, x: &[F]) -> Vec<F> {
        let (u, v) = split(x, self.obs.rows(), self.rank);
        assemble_gradient(&self.obs, u, v, self.rank, self.inv_n, |target, p| {
            p - target
        })
    }
}

/// Numerically stable `log(1 + exp(t))`.
fn softplus<F: Scalar>(t: F) -> F {
    if t > F::zero() {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// Numerically stable logistic function.
fn sigmoid<F: Scalar>(t: F) -> F {
    if t >= F::zero() {
        F::one() / (F::one() + (-t).exp())
    } else {
        let e = t.exp();
        e / (F::one() + e)
    }
}

/// One-bit completion: observed signs are fit by the logistic likelihood
/// `-(1/N) sum_O [1_{Y=1} log s(p) + 1_{Y=-1} log(1 - s(p))]` plus the
/// balance regularizer, where `p = (UV^T)_{ij}`. Each per-entry term equals
/// `softplus(-Y p)`.
#[derive(Debug, Clone)]
pub struct OneBitCompletion<F> {
    obs: ObservedMatrix<F>,
    rank: usize,
    inv_n: F,
}

pub fn one_bit_problem<F: Scalar>(obs: ObservedMatrix<F>, rank: usize) -> Result<OneBitCompletion<F>> {
    if rank == 0 {
        return Err(Error::InvalidParameter("rank must be at least 1".into()));
    }
    for &(i, j, v) in obs.entries() {
        if v != F::one() && v != -F::one() {
            return Err(Error::InvalidSign {
                row: i,
                col: j,
                value: v.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    let inv_n = F::one() / int::<F>(obs.n_observed());
    Ok(OneBitCompletion { obs, rank, inv_n })
}

impl<F: Scalar> Problem<F> for OneBitCompletion<F> {
    fn dim(&self) -> usize {
        (self.obs.rows() + self.obs.cols()) * self.rank
    }

    fn value(&self, x: &[F]) -> F {
        let (u, v) = split(x, self.obs.rows(), self.rank);
        let two = F::one() + F::one();
        let mut data = F::zero();
        for &(i, j, sign) in self.obs.entries() {
            let mut p = F::zero();
            for k in 0..self.rank {
                p = p + u[i * self.rank + k] * v[j * self.rank + k];
            }
            data = data + softplus(-sign * p);
        }
        let balance = balance_norm_sq(u, v, self.obs.rows(), self.obs.cols(), self.rank);
        self.inv_n * data + self.inv_n * balance / two
    }

    fn gradient(&self, x: &[F]) -> Vec<F> {
        let (u, v) = split(x, self.obs.rows(), self.rank);
        assemble_gradient(&self.obs, u, v, self.rank, self.inv_n, |sign, p| {
            // d/dp softplus(-Y p) = -Y s(-Y p) = s(p) - 1_{Y=1}
            -sign * sigmoid(-sign * p)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn least_squares_hand_example() {
        // One observed entry X*_{00} = 2 with U = V = [[1], [1]]:
        // data term (1/2)(1 - 2)^2 = 0.5, balance 0.
        let obs = ObservedMatrix::from_entries(2, 2, vec![(0, 0, 2.0)]).unwrap();
        let p = matrix_completion_problem(obs, 1).unwrap();
        let x = vec![1.0f64, 1.0, 1.0, 1.0];
        assert!((p.value(&x) - 0.5).abs() <= 1e-15);
        let g = p.gradient(&x);
        assert_eq!(g, vec![-1.0, 0.0, -1.0, 0.0]);
    }

    #[test]
    fn zero_everything_is_stationary() {
        let obs = ObservedMatrix::from_entries(2, 2, vec![(0, 1, 0.0), (1, 0, 0.0)]).unwrap();
        let p = matrix_completion_problem(obs, 1).unwrap();
        let x = vec![0.0; 4];
        assert_eq!(p.value(&x), 0.0);
        assert_eq!(p.gradient(&x), vec![0.0; 4]);
    }

    #[test]
    fn one_bit_hand_values() {
        // Single +1 observation with product 0: data term ln 2; with
        // U = [0], V = [1] the balance term is (1/2)(0 - 1)^2.
        let obs = ObservedMatrix::from_entries(1, 1, vec![(0, 0, 1.0)]).unwrap();
        let p = one_bit_problem(obs, 1).unwrap();
        let x = vec![0.0, 1.0];
        let expected = std::f64::consts::LN_2 + 0.5;
        assert!((p.value(&x) - expected).abs() <= 1e-15);
        // gradient of the data term w.r.t. the product is s(0) - 1 = -0.5,
        // so grad_U = -0.5 * V = [-0.5]; the balance part moves only V.
        let g = p.gradient(&x);
        assert!((g[0] + 0.5).abs() <= 1e-15);
        assert!((g[1] - 2.0).abs() <= 1e-15);
    }

    #[test]
    fn one_bit_saturates_to_zero_loss() {
        // Y = +1 with a strongly positive product: the data term vanishes.
        let obs = ObservedMatrix::from_entries(1, 1, vec![(0, 0, 1.0)]).unwrap();
        let p = one_bit_problem(obs, 1).unwrap();
        let x = vec![40.0, 1.0];
        let balance = (40.0f64 * 40.0 - 1.0).powi(2) / 2.0;
        assert!((p.value(&x) - balance).abs() <= 1e-12 * balance);
    }

    #[test]
    fn one_bit_rejects_non_sign_values() {
        let obs = ObservedMatrix::from_entries(1, 1, vec![(0, 0, 0.5)]).unwrap();
        assert!(matches!(
            one_bit_problem(obs, 1),
            Err(Error::InvalidSign { .. })
        ));
    }

    #[test]
    fn softplus_is_stable_far_out() {
        assert_eq!(softplus(-1000.0f64), 0.0);
        assert!((softplus(1000.0f64) - 1000.0).abs() <= 1e-12);
        assert!((softplus(0.0f64) - std::f64::consts::LN_2).abs() <= 1e-15);
        assert!((sigmoid(-800.0f64)).abs() <= 1e-300);
        assert_eq!(sigmoid(800.0f64), 1.0);
    }

    #[test]
    fn balance_term_is_swap_invariant() {
        use rand::Rng;
        use rand_chacha::rand_core::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let (rows, cols, rank) = (4, 3, 2);
            let u: Vec<f64> = (0..rows * rank).map(|_| rng.random_range(-2.0..2.0)).collect();
            let v: Vec<f64> = (0..cols * rank).map(|_| rng.random_range(-2.0..2.0)).collect();
            let a = balance_norm_sq(&u, &v, rows, cols, rank);
            let b = balance_norm_sq(&v, &u, cols, rows, rank);
            assert_eq!(a, b);
        }
    }
}
