//! Factor initialization from the truncated SVD of the observed matrix.
//!
//! `U = A_{:,1:r} sqrt(S)`, `V = B_{:,1:r} sqrt(S)` where `A S B^T` is the
//! SVD of the sparse observed matrix (zeros at unobserved positions). The
//! truncation is computed by seeded randomized subspace iteration (at most
//! 50 power steps, stopping early once the relative projection residual
//! drops below 1e-10), followed by a one-sided Jacobi SVD of the small
//! projected matrix.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::problems::factor::FactorPair;
use crate::problems::observed::ObservedMatrix;
use crate::{lit, Scalar};

const MAX_POWER_ITERS: usize = 50;
const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct SvdInit<F> {
    pub factors: FactorPair<F>,
    /// Whether the projection residual met the tolerance before the
    /// iteration cap; the factors are returned either way.
    pub converged: bool,
    pub relative_residual: F,
    pub power_iterations: usize,
}

/// Column-major dense block with a fixed number of rows.
struct Block<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Scalar> Block<F> {
    fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![F::zero(); rows * cols],
        }
    }

    fn col(&self, c: usize) -> &[F] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    fn col_mut(&mut self, c: usize) -> &mut [F] {
        &mut self.data[c * self.rows..(c + 1) * self.rows]
    }

    /// Orthonormalize columns in place by modified Gram-Schmidt with one
    /// re-orthogonalization pass. A column whose norm collapses relative to
    /// its original size is linearly dependent on the earlier ones and is
    /// zeroed out instead of normalizing cancellation noise.
    fn orthonormalize(&mut self) {
        let drop_tol = lit::<F>(1e-12);
        for c in 0..self.cols {
            let original_norm = crate::linalg::norm(self.col(c));
            for _pass in 0..2 {
                for prev in 0..c {
                    let mut proj = F::zero();
                    {
                        let (head, tail) = self.data.split_at(c * self.rows);
                        let pc = &head[prev * self.rows..(prev + 1) * self.rows];
                        let cc = &tail[..self.rows];
                        for (a, b) in pc.iter().zip(cc) {
                            proj = proj + *a * *b;
                        }
                    }
                    if proj != F::zero() {
                        let (head, tail) = self.data.split_at_mut(c * self.rows);
                        let pc = &head[prev * self.rows..(prev + 1) * self.rows];
                        let cc = &mut tail[..self.rows];
                        for (b, a) in cc.iter_mut().zip(pc) {
                            *b = *b - proj * *a;
                        }
                    }
                }
            }
            let norm = crate::linalg::norm(self.col(c));
            let col = self.col_mut(c);
            if norm > original_norm * drop_tol && norm > F::zero() {
                for v in col.iter_mut() {
                    *v = *v / norm;
                }
            } else {
                for v in col.iter_mut() {
                    *v = F::zero();
                }
            }
        }
    }
}

/// `A * X` for the sparse observations (result `rows x width`).
fn sparse_times<F: Scalar>(obs: &ObservedMatrix<F>, x: &Block<F>) -> Block<F> {
    let mut out = Block::zeros(obs.rows(), x.cols);
    for c in 0..x.cols {
        let xc = &x.data[c * x.rows..(c + 1) * x.rows];
        let oc = &mut out.data[c * out.rows..(c + 1) * out.rows];
        for &(i, j, v) in obs.entries() {
            oc[i] = oc[i] + v * xc[j];
        }
    }
    out
}

/// `A^T * X` (result `cols x width`).
fn sparse_trans_times<F: Scalar>(obs: &ObservedMatrix<F>, x: &Block<F>) -> Block<F> {
    let mut out = Block::zeros(obs.cols(), x.cols);
    for c in 0..x.cols {
        let xc = &x.data[c * x.rows..(c + 1) * x.rows];
        let oc = &mut out.data[c * out.rows..(c + 1) * out.rows];
        for &(i, j, v) in obs.entries() {
            oc[j] = oc[j] + v * xc[i];
        }
    }
    out
}

/// One-sided Jacobi SVD of the thin matrix `C` (`rows x cols`, `cols`
/// small): returns (column norms, rotation accumulator `Z`) with the columns
/// of `C` mutually orthogonal on exit, so `C_in = C_out_normalized * diag *
/// Z^T`.
fn one_sided_jacobi<F: Scalar>(c: &mut Block<F>) -> Vec<F> {
    let s = c.cols;
    let mut z = vec![F::zero(); s * s];
    for i in 0..s {
        z[i * s + i] = F::one();
    }
    let eps = lit::<F>(1e-28);
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..s {
            for q in p + 1..s {
                let (mut app, mut aqq, mut apq) = (F::zero(), F::zero(), F::zero());
                for i in 0..c.rows {
                    let cp = c.data[p * c.rows + i];
                    let cq = c.data[q * c.rows + i];
                    app = app + cp * cp;
                    aqq = aqq + cq * cq;
                    apq = apq + cp * cq;
                }
                if apq * apq <= eps * app * aqq || apq == F::zero() {
                    continue;
                }
                rotated = true;
                let tau = (aqq - app) / (apq + apq);
                let t = if tau >= F::zero() {
                    F::one() / (tau + (F::one() + tau * tau).sqrt())
                } else {
                    -F::one() / (-tau + (F::one() + tau * tau).sqrt())
                };
                let cs = F::one() / (F::one() + t * t).sqrt();
                let sn = cs * t;
                for i in 0..c.rows {
                    let cp = c.data[p * c.rows + i];
                    let cq = c.data[q * c.rows + i];
                    c.data[p * c.rows + i] = cs * cp - sn * cq;
                    c.data[q * c.rows + i] = sn * cp + cs * cq;
                }
                for i in 0..s {
                    let zp = z[p * s + i];
                    let zq = z[q * s + i];
                    z[p * s + i] = cs * zp - sn * zq;
                    z[q * s + i] = sn * zp + cs * zq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    z
}

/// Rank-`rank` truncated SVD initialization of the observed matrix.
/// Deterministic given the seed.
pub fn svd_init<F>(obs: &ObservedMatrix<F>, rank: usize, seed: u64) -> Result<SvdInit<F>>
where
    F: Scalar,
    StandardNormal: Distribution<F>,
{
    let (m, n) = (obs.rows(), obs.cols());
    if rank == 0 || rank > m.min(n) {
        return Err(Error::InvalidParameter(format!(
            "rank must lie in 1..=min(rows, cols) = {}, got {rank}",
            m.min(n)
        )));
    }
    let total_norm = obs.frob_norm();
    if total_norm == F::zero() {
        return Ok(SvdInit {
            factors: FactorPair::zeros(m, n, rank),
            converged: true,
            relative_residual: F::zero(),
            power_iterations: 0,
        });
    }

    let width = (rank + 5).min(m.min(n));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut omega = Block::zeros(n, width);
    for v in omega.data.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
    let mut q = sparse_times(obs, &omega);
    q.orthonormalize();

    let tol = lit::<F>(RESIDUAL_TOL);
    let mut residual;
    let mut converged = false;
    let mut iterations = 0;
    let mut projected = sparse_trans_times(obs, &q); // holds A^T Q = B^T
    loop {
        // ||A - Q Q^T A||_F^2 = ||A||_F^2 - ||Q^T A||_F^2 for orthonormal Q
        let projected_norm_sq = crate::linalg::norm_sq(&projected.data);
        let gap = (total_norm * total_norm - projected_norm_sq).max(F::zero());
        residual = gap.sqrt() / total_norm;
        if residual < tol {
            converged = true;
            break;
        }
        if iterations >= MAX_POWER_ITERS {
            break;
        }
        iterations += 1;
        let mut w = projected;
        w.orthonormalize();
        q = sparse_times(obs, &w);
        q.orthonormalize();
        projected = sparse_trans_times(obs, &q);
    }

    // projected = B^T (n x width) where B = Q^T A; its one-sided Jacobi SVD
    // gives B^T = V_b diag U_b^T, so A ~ (Q U_b) diag V_b^T.
    let mut c = projected;
    let z = one_sided_jacobi(&mut c);
    let width_s = c.cols;
    let mut order: Vec<usize> = (0..width_s).collect();
    let mut sigmas = Vec::with_capacity(width_s);
    for col in 0..width_s {
        sigmas.push(crate::linalg::norm(c.col(col)));
    }
    order.sort_by(|&a, &b| sigmas[b].partial_cmp(&sigmas[a]).unwrap_or(std::cmp::Ordering::Equal));

    let mut factors = FactorPair::zeros(m, n, rank);
    for (slot, &col) in order.iter().take(rank).enumerate() {
        let sigma = sigmas[col];
        if sigma == F::zero() {
            continue;
        }
        let scale = sigma.sqrt();
        // left factor column: Q * z[col]
        for i in 0..m {
            let mut acc = F::zero();
            for k in 0..width_s {
                acc = acc + q.data[k * m + i] * z[col * width_s + k];
            }
            factors.u[i * rank + slot] = acc * scale;
        }
        // right factor column: normalized column of C
        for j in 0..n {
            factors.v[j * rank + slot] = c.data[col * n + j] / sigma * scale;
        }
    }

    Ok(SvdInit {
        factors,
        converged,
        relative_residual: residual,
        power_iterations: iterations,
    })
}
