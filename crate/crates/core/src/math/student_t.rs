use super::{chol_factor, Cholesky, SymMatrix};
use crate::{Error, Result, Scalar};

/// Multivariate Student-t with location, scale matrix (the matrix inside the
/// quadratic form) and degrees of freedom. The factorization and the
/// normalizing constant are computed once at construction.
#[derive(Debug, Clone)]
pub struct StudentT<T> {
    loc: Vec<T>,
    chol: Cholesky<T>,
    dof: T,
    log_norm: T,
}

impl<T: Scalar> StudentT<T> {
    pub fn new(loc: Vec<T>, scale: &SymMatrix<T>, dof: T) -> Result<Self> {
        if loc.len() != scale.dim() {
            return Err(Error::DimensionMismatch {
                expected: scale.dim(),
                got: loc.len(),
            });
        }
        if !(dof > T::zero()) {
            return Err(Error::InvalidConfig(format!(
                "degrees of freedom must be positive, got {dof}"
            )));
        }
        let chol = chol_factor(scale)?;
        let d = T::from_count(loc.len());
        let half = T::lit(0.5);
        let pi = T::lit(std::f64::consts::PI);
        let log_norm = ((dof + d) * half).lgamma()
            - (dof * half).lgamma()
            - half * d * (dof * pi).ln()
            - half * chol.log_det();
        Ok(Self {
            loc,
            chol,
            dof,
            log_norm,
        })
    }

    pub fn dim(&self) -> usize {
        self.loc.len()
    }

    pub fn dof(&self) -> T {
        self.dof
    }

    pub fn loc(&self) -> &[T] {
        &self.loc
    }

    #[inline]
    pub fn ln_pdf(&self, x: &[T]) -> T {
        debug_assert_eq!(x.len(), self.loc.len());
        let q = self.chol.mahalanobis_sq(x, &self.loc);
        let d = T::from_count(self.loc.len());
        self.log_norm - T::lit(0.5) * (self.dof + d) * (q / self.dof).ln_1p()
    }
}

/// Log density of the multivariate Student-t at `x`.
pub fn mvt_logpdf<T: Scalar>(x: &[T], loc: &[T], scale: &SymMatrix<T>, dof: T) -> Result<T> {
    if x.len() != loc.len() {
        return Err(Error::DimensionMismatch {
            expected: loc.len(),
            got: x.len(),
        });
    }
    Ok(StudentT::new(loc.to_vec(), scale, dof)?.ln_pdf(x))
}

/// Log density of the multivariate normal at `x`.
pub fn gaussian_logpdf<T: Scalar>(x: &[T], mean: &[T], cov: &SymMatrix<T>) -> Result<T> {
    if x.len() != mean.len() || mean.len() != cov.dim() {
        return Err(Error::DimensionMismatch {
            expected: cov.dim(),
            got: x.len(),
        });
    }
    let chol = chol_factor(cov)?;
    Ok(gaussian_logpdf_factored(x, mean, &chol))
}

pub(crate) fn gaussian_logpdf_factored<T: Scalar>(x: &[T], mean: &[T], chol: &Cholesky<T>) -> T {
    let d = T::from_count(mean.len());
    let half = T::lit(0.5);
    let ln_2pi = T::lit((2.0 * std::f64::consts::PI).ln());
    -half * (d * ln_2pi + chol.log_det() + chol.mahalanobis_sq(x, mean))
}
