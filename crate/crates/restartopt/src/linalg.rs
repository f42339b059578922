//! Small dense vector helpers used by the solvers.
//!
//! Reductions run in a fixed sequential order so that repeated runs are
//! bit-reproducible.

use crate::Scalar;

pub fn dot<F: Scalar>(x: &[F], y: &[F]) -> F {
    debug_assert_eq!(x.len(), y.len());
    let mut acc = F::zero();
    for (a, b) in x.iter().zip(y) {
        acc = acc + *a * *b;
    }
    acc
}

pub fn norm_sq<F: Scalar>(x: &[F]) -> F {
    dot(x, x)
}

pub fn norm<F: Scalar>(x: &[F]) -> F {
    norm_sq(x).sqrt()
}

/// Euclidean distance between two points.
pub fn dist<F: Scalar>(x: &[F], y: &[F]) -> F {
    debug_assert_eq!(x.len(), y.len());
    let mut acc = F::zero();
    for (a, b) in x.iter().zip(y) {
        let d = *a - *b;
        acc = acc + d * d;
    }
    acc.sqrt()
}

pub fn all_finite<F: Scalar>(x: &[F]) -> bool {
    x.iter().all(|v| v.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_and_norms() {
        let x = [3.0f64, 4.0];
        assert_eq!(dot(&x, &x), 25.0);
        assert_eq!(norm(&x), 5.0);
        assert_eq!(dist(&x, &[0.0, 0.0]), 5.0);
    }

    #[test]
    fn finite_detection() {
        assert!(all_finite(&[1.0f64, -2.0]));
        assert!(!all_finite(&[1.0f64, f64::NAN]));
        assert!(!all_finite(&[f64::INFINITY]));
    }
}
