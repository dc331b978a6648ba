use super::SymMatrix;
use crate::{Error, Result, Scalar};

/// Lower-triangular factor `L` with `L·Lᵀ = A`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky<T> {
    dim: usize,
    // Row-major, upper triangle left at zero.
    lower: Vec<T>,
}

/// Factorizes a symmetric positive-definite matrix. The input is symmetrized
/// as `(a + aᵀ)/2` first, so accumulated round-off asymmetry is tolerated.
pub fn chol_factor<T: Scalar>(a: &SymMatrix<T>) -> Result<Cholesky<T>> {
    let a = a.symmetrized();
    let n = a.dim();
    let mut l = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[(i, j)];
            for k in 0..j {
                sum = sum - l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(sum > T::zero()) {
                    return Err(Error::NotPositiveDefinite { pivot: i, dim: n });
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Ok(Cholesky { dim: n, lower: l })
}

impl<T: Scalar> Cholesky<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.lower[i * self.dim + j]
    }

    /// `log |A| = 2 Σ log L_ii`
    pub fn log_det(&self) -> T {
        let two = T::lit(2.0);
        (0..self.dim).map(|i| self.get(i, i).ln()).sum::<T>() * two
    }

    /// Solves `L y = b` by forward substitution.
    pub fn solve_lower(&self, b: &[T]) -> Vec<T> {
        let n = self.dim;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s = s - self.lower[i * n + k] * y[k];
            }
            y[i] = s / self.lower[i * n + i];
        }
        y
    }

    /// `(x - mu)ᵀ A⁻¹ (x - mu)` without allocating.
    pub fn mahalanobis_sq(&self, x: &[T], mu: &[T]) -> T {
        let n = self.dim;
        debug_assert!(n <= 64, "stack buffer sized for small dimensions");
        let mut buf = [T::zero(); 64];
        let mut q = T::zero();
        for i in 0..n {
            let mut s = x[i] - mu[i];
            for k in 0..i {
                s = s - self.lower[i * n + k] * buf[k];
            }
            let yi = s / self.lower[i * n + i];
            buf[i] = yi;
            q = q + yi * yi;
        }
        q
    }

    /// `L·Lᵀ`
    pub fn reconstruct(&self) -> SymMatrix<T> {
        let n = self.dim;
        let mut out = SymMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut s = T::zero();
                for k in 0..=i.min(j) {
                    s = s + self.get(i, k) * self.get(j, k);
                }
                out[(i, j)] = s;
            }
        }
        out
    }

    /// `L·z`, used to draw correlated Gaussian samples.
    pub fn mul_vec(&self, z: &[T]) -> Vec<T> {
        let n = self.dim;
        (0..n)
            .map(|i| (0..=i).map(|k| self.get(i, k) * z[k]).sum())
            .collect()
    }
}
