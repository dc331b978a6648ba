//! Normal-inverse-Wishart conjugate model.
//!
//! Cluster parameters `(μ, Σ)` are integrated out analytically, so each
//! cluster is summarized by its sufficient statistics and every predictive is
//! a multivariate Student-t:
//!
//! * new cluster: `St(m0, (κ0+1)/(κ0(ν0-D+1)) Λ0, ν0-D+1)`
//! * existing cluster: the same with the posterior `(m_k, Λ_k, κ_k, ν_k)`
//!
//! The predictive factorization is rebuilt from scratch on every call. `D` is
//! small in practice, so the `O(D³)` rebuild is cheap; a rank-one
//! up/down-dated Cholesky would be the place to optimize for large `D`.

use crate::math::{chol_factor, StudentT, SymMatrix};
use crate::{Error, Result, Scalar};

/// Prior hyperparameters `{m0, Λ0, κ0, ν0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct NiwHyper<T> {
    m0: Vec<T>,
    lambda0: SymMatrix<T>,
    kappa0: T,
    nu0: T,
}

/// Count, `Σ x` and `Σ x xᵀ` for the members of one cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct SuffStats<T> {
    count: usize,
    sum_x: Vec<T>,
    sum_xxt: SymMatrix<T>,
}

/// Posterior NIW parameters after observing a cluster's members.
#[derive(Debug, Clone, PartialEq)]
pub struct NiwPosterior<T> {
    pub m: Vec<T>,
    pub lambda: SymMatrix<T>,
    pub kappa: T,
    pub nu: T,
}

impl<T: Scalar> NiwHyper<T> {
    pub fn new(m0: Vec<T>, lambda0: SymMatrix<T>, kappa0: T, nu0: T) -> Result<Self> {
        let d = m0.len();
        if d == 0 {
            return Err(Error::InvalidConfig("m0 must be non-empty".into()));
        }
        if lambda0.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: lambda0.dim(),
            });
        }
        if !(kappa0 > T::zero()) {
            return Err(Error::InvalidConfig(format!("kappa0 must be > 0, got {kappa0}")));
        }
        if !(nu0 > T::from_count(d) - T::one()) {
            return Err(Error::InvalidConfig(format!(
                "nu0 must exceed D - 1 = {}, got {nu0}",
                d - 1
            )));
        }
        if m0.iter().any(|v| !v.is_finite()) || lambda0.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("hyperparameters must be finite".into()));
        }
        chol_factor(&lambda0)?;
        Ok(Self {
            m0,
            lambda0,
            kappa0,
            nu0,
        })
    }

    /// Weak data-dependent prior: `κ0 = 1`, `ν0 = D + 1`, `m0` the sample
    /// mean and `Λ0` the diagonal of the sample covariance. Zero-variance
    /// features fall back to unit variance.
    pub fn empirical(rows: &[T], dim: usize) -> Result<Self> {
        if dim == 0 || rows.is_empty() || rows.len() % dim != 0 {
            return Err(Error::InvalidConfig("empirical prior needs at least one row".into()));
        }
        let n = rows.len() / dim;
        let nt = T::from_count(n);
        let mut mean = vec![T::zero(); dim];
        for row in rows.chunks(dim) {
            for (m, &v) in mean.iter_mut().zip(row) {
                *m = *m + v;
            }
        }
        mean.iter_mut().for_each(|m| *m = *m / nt);
        let mut var = vec![T::zero(); dim];
        for row in rows.chunks(dim) {
            for ((s, &v), &m) in var.iter_mut().zip(row).zip(&mean) {
                *s = *s + (v - m) * (v - m);
            }
        }
        let denom = T::from_count(n.saturating_sub(1).max(1));
        for s in var.iter_mut() {
            *s = *s / denom;
            if !(*s > T::zero()) || !s.is_finite() {
                *s = T::one();
            }
        }
        Self::new(
            mean,
            SymMatrix::from_diagonal(&var),
            T::one(),
            T::from_count(dim + 1),
        )
    }

    pub fn dim(&self) -> usize {
        self.m0.len()
    }

    pub fn m0(&self) -> &[T] {
        &self.m0
    }

    pub fn lambda0(&self) -> &SymMatrix<T> {
        &self.lambda0
    }

    pub fn kappa0(&self) -> T {
        self.kappa0
    }

    pub fn nu0(&self) -> T {
        self.nu0
    }

    pub fn prior(&self) -> NiwPosterior<T> {
        NiwPosterior {
            m: self.m0.clone(),
            lambda: self.lambda0.clone(),
            kappa: self.kappa0,
            nu: self.nu0,
        }
    }

    /// Conjugate update of the prior with a cluster's statistics.
    pub fn posterior(&self, s: &SuffStats<T>) -> NiwPosterior<T> {
        if s.count == 0 {
            return self.prior();
        }
        let n = T::from_count(s.count);
        let kappa = self.kappa0 + n;
        let nu = self.nu0 + n;
        let mean = s.mean();
        let m = self
            .m0
            .iter()
            .zip(&mean)
            .map(|(&m0, &xbar)| (self.kappa0 * m0 + n * xbar) / kappa)
            .collect();
        let diff: Vec<T> = mean.iter().zip(&self.m0).map(|(&a, &b)| a - b).collect();
        let mut lambda = self.lambda0.add(&s.scatter());
        lambda.add_outer(&diff, self.kappa0 * n / kappa);
        NiwPosterior {
            m,
            lambda,
            kappa,
            nu,
        }
    }

    /// Predictive for a point in a brand new cluster.
    pub fn predictive_new_dist(&self) -> Result<StudentT<T>> {
        self.prior().predictive(self.dim())
    }

    /// Predictive for a point joining a cluster with statistics `s`.
    pub fn predictive_dist(&self, s: &SuffStats<T>) -> Result<StudentT<T>> {
        self.posterior(s).predictive(self.dim())
    }

    /// Log predictive density of `x` under a new cluster.
    pub fn predictive_new(&self, x: &[T]) -> Result<T> {
        self.check_dim(x)?;
        Ok(self.predictive_new_dist()?.ln_pdf(x))
    }

    /// Log predictive density of `x` joining the cluster summarized by `s`.
    /// Empty clusters must go through [`predictive_new`](Self::predictive_new).
    pub fn predictive_existing(&self, s: &SuffStats<T>, x: &[T]) -> Result<T> {
        if s.count == 0 {
            return Err(Error::EmptyCluster);
        }
        self.check_dim(x)?;
        Ok(self.predictive_dist(s)?.ln_pdf(x))
    }

    /// Marginal likelihood of a set of points forming one cluster, as the
    /// chain of sequential predictives `Σ_j log p(x_j | x_1..x_{j-1})`.
    pub fn cluster_log_marginal<'a, I>(&self, points: I) -> Result<T>
    where
        I: IntoIterator<Item = &'a [T]>,
    {
        let mut stats = SuffStats::empty(self.dim());
        let mut total = T::zero();
        for x in points {
            self.check_dim(x)?;
            total = total + self.predictive_dist(&stats)?.ln_pdf(x);
            stats.add(x);
        }
        if stats.count == 0 {
            return Err(Error::EmptyCluster);
        }
        Ok(total)
    }

    /// Closed-form log marginal likelihood of a cluster from its statistics:
    /// `-(ND/2) ln π + ln Γ_D(ν_N/2) - ln Γ_D(ν_0/2) + (ν_0/2) ln|Λ_0|
    ///  - (ν_N/2) ln|Λ_N| + (D/2)(ln κ_0 - ln κ_N)`.
    pub fn log_marginal(&self, s: &SuffStats<T>) -> Result<T> {
        if s.count == 0 {
            return Err(Error::EmptyCluster);
        }
        let d = self.dim();
        let half = T::lit(0.5);
        let post = self.posterior(s);
        let ld0 = chol_factor(&self.lambda0)?.log_det();
        let ldn = chol_factor(&post.lambda)?.log_det();
        let nd = T::from_count(s.count * d);
        Ok(-half * nd * T::lit(std::f64::consts::PI).ln() + ln_mvgamma(d, half * post.nu) - ln_mvgamma(d, half * self.nu0)
            + half * self.nu0 * ld0
            - half * post.nu * ldn
            + half * T::from_count(d) * (self.kappa0.ln() - post.kappa.ln()))
    }

    fn check_dim(&self, x: &[T]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn cast<U: Scalar>(&self) -> NiwHyper<U> {
        NiwHyper {
            m0: self.m0.iter().map(|v| U::lit(v.as_f64())).collect(),
            lambda0: self.lambda0.cast(),
            kappa0: U::lit(self.kappa0.as_f64()),
            nu0: U::lit(self.nu0.as_f64()),
        }
    }
}

/// Log multivariate gamma `ln Γ_D(a)`.
fn ln_mvgamma<T: Scalar>(d: usize, a: T) -> T {
    let quarter = T::lit(0.25);
    let mut out = T::from_count(d * d.saturating_sub(1)) * quarter * T::lit(std::f64::consts::PI).ln();
    for j in 0..d {
        out = out + (a - T::lit(0.5) * T::from_count(j)).lgamma();
    }
    out
}

impl<T: Scalar> NiwPosterior<T> {
    /// Student-t with dof `ν-D+1`, location `m` and scale
    /// `(κ+1)/(κ(ν-D+1)) Λ`.
    pub fn predictive(&self, dim: usize) -> Result<StudentT<T>> {
        let dof = self.nu - T::from_count(dim) + T::one();
        let factor = (self.kappa + T::one()) / (self.kappa * dof);
        StudentT::new(self.m.clone(), &self.lambda.scale(factor), dof)
    }
}

impl<T: Scalar> SuffStats<T> {
    pub fn empty(dim: usize) -> Self {
        Self {
            count: 0,
            sum_x: vec![T::zero(); dim],
            sum_xxt: SymMatrix::zeros(dim),
        }
    }

    pub fn from_points<'a, I: IntoIterator<Item = &'a [T]>>(dim: usize, points: I) -> Self {
        let mut s = Self::empty(dim);
        for x in points {
            s.add(x);
        }
        s
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn dim(&self) -> usize {
        self.sum_x.len()
    }

    pub fn sum_x(&self) -> &[T] {
        &self.sum_x
    }

    pub fn sum_xxt(&self) -> &SymMatrix<T> {
        &self.sum_xxt
    }

    pub fn add(&mut self, x: &[T]) {
        debug_assert_eq!(x.len(), self.dim());
        self.count += 1;
        for (s, &v) in self.sum_x.iter_mut().zip(x) {
            *s = *s + v;
        }
        self.sum_xxt.add_outer(x, T::one());
    }

    /// Inverse of [`add`](Self::add). Resets to exact zeros once the count
    /// reaches 0 so no accumulation residue survives.
    pub fn remove(&mut self, x: &[T]) -> Result<()> {
        if self.count == 0 {
            return Err(Error::EmptyCluster);
        }
        debug_assert_eq!(x.len(), self.dim());
        self.count -= 1;
        if self.count == 0 {
            *self = Self::empty(self.dim());
            return Ok(());
        }
        for (s, &v) in self.sum_x.iter_mut().zip(x) {
            *s = *s - v;
        }
        self.sum_xxt.add_outer(x, -T::one());
        Ok(())
    }

    /// Sample mean; zeros for an empty cluster.
    pub fn mean(&self) -> Vec<T> {
        if self.count == 0 {
            return vec![T::zero(); self.dim()];
        }
        let n = T::from_count(self.count);
        self.sum_x.iter().map(|&s| s / n).collect()
    }

    /// Scatter about the mean, `Σ x xᵀ - n x̄ x̄ᵀ`, symmetrized.
    pub fn scatter(&self) -> SymMatrix<T> {
        let mut s = self.sum_xxt.clone();
        if self.count > 0 {
            let mean = self.mean();
            s.add_outer(&mean, -T::from_count(self.count));
        }
        s.symmetrized()
    }
}
