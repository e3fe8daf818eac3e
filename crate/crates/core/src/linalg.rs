//! Minimal dense symmetric solver for the penalized-spline fits. Basis
//! dimensions stay at or below 100, so a plain Cholesky is all that is
//! needed.

use crate::num::Real;

#[derive(Clone, Debug)]
pub(crate) struct Mat<F> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<F>,
}

impl<F: Real> Mat<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![F::zero(); rows * cols],
        }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> F {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut F {
        &mut self.data[i * self.cols + j]
    }

    /// Lower-triangular Cholesky factor; `None` if not positive definite.
    pub fn cholesky(&self) -> Option<Mat<F>> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut l = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let mut sum = self.at(i, j);
                for k in 0..j {
                    sum -= l.at(i, k) * l.at(j, k);
                }
                if i == j {
                    if !(sum > F::zero()) {
                        return None;
                    }
                    *l.at_mut(i, j) = sum.sqrt();
                } else {
                    *l.at_mut(i, j) = sum / l.at(j, j);
                }
            }
        }
        Some(l)
    }
}

/// Solves A x = b given the Cholesky factor L of A.
pub(crate) fn chol_solve<F: Real>(l: &Mat<F>, b: &[F]) -> Vec<F> {
    let n = l.rows;
    let mut y = vec![F::zero(); n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l.at(i, k) * y[k];
        }
        y[i] = sum / l.at(i, i);
    }
    let mut x = vec![F::zero(); n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in (i + 1)..n {
            sum -= l.at(k, i) * x[k];
        }
        x[i] = sum / l.at(i, i);
    }
    x
}

/// log det A from its Cholesky factor.
pub(crate) fn chol_log_det<F: Real>(l: &Mat<F>) -> F {
    let mut acc = F::zero();
    for i in 0..l.rows {
        acc += l.at(i, i).ln();
    }
    acc + acc
}
