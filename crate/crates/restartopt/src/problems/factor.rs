//! Factor pair `(U, V)` and its embedding into the flat vector the solvers
//! operate on: row-major `U` followed by row-major `V`.

use crate::error::{Error, Result};
use crate::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct FactorPair<F> {
    /// `rows x rank`, row-major.
    pub u: Vec<F>,
    /// `cols x rank`, row-major.
    pub v: Vec<F>,
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
}

impl<F: Scalar> FactorPair<F> {
    pub fn new(u: Vec<F>, v: Vec<F>, rows: usize, cols: usize, rank: usize) -> Result<Self> {
        if u.len() != rows * rank {
            return Err(Error::DimensionMismatch {
                expected: rows * rank,
                got: u.len(),
            });
        }
        if v.len() != cols * rank {
            return Err(Error::DimensionMismatch {
                expected: cols * rank,
                got: v.len(),
            });
        }
        Ok(Self {
            u,
            v,
            rows,
            cols,
            rank,
        })
    }

    pub fn zeros(rows: usize, cols: usize, rank: usize) -> Self {
        Self {
            u: vec![F::zero(); rows * rank],
            v: vec![F::zero(); cols * rank],
            rows,
            cols,
            rank,
        }
    }

    /// Flat vector of length `(rows + cols) * rank`.
    pub fn flatten(&self) -> Vec<F> {
        let mut x = Vec::with_capacity(self.u.len() + self.v.len());
        x.extend_from_slice(&self.u);
        x.extend_from_slice(&self.v);
        x
    }

    pub fn unflatten(x: &[F], rows: usize, cols: usize, rank: usize) -> Result<Self> {
        let expected = (rows + cols) * rank;
        if x.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: x.len(),
            });
        }
        let split = rows * rank;
        Ok(Self {
            u: x[..split].to_vec(),
            v: x[split..].to_vec(),
            rows,
            cols,
            rank,
        })
    }

    /// Entry `(U V^T)_{i,j}`.
    pub fn product_entry(&self, i: usize, j: usize) -> F {
        let mut acc = F::zero();
        for k in 0..self.rank {
            acc = acc + self.u[i * self.rank + k] * self.v[j * self.rank + k];
        }
        acc
    }
}
