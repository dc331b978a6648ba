//! Finite semi-supervised Gaussian mixture fit by EM.
//!
//! Labeled points have hard responsibility on their label's component;
//! unlabeled points get soft responsibilities. Used as the comparison
//! baseline: with `k` equal to the number of predefined classes it has no
//! room for undefined classes and a single Gaussian per class.

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::Dataset;
use crate::math::{chol_factor, gaussian_logpdf_factored, log_sum_exp, Cholesky, SymMatrix};
use crate::partition::Labels;
use crate::{Error, Result, Scalar};

/// Ridge added to every covariance, relative to its mean diagonal.
const COV_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GmmParams<T> {
    pub weights: Vec<T>,
    pub means: Vec<Vec<T>>,
    pub covariances: Vec<SymMatrix<T>>,
}

impl<T> GmmParams<T> {
    pub fn k(&self) -> usize {
        self.weights.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SsgmmFit<T> {
    pub params: GmmParams<T>,
    /// Row-major `N × K`.
    pub responsibilities: Vec<T>,
    /// Label attached to each component; `0` for components beyond the
    /// labeled classes.
    pub component_labels: Vec<u32>,
    /// Argmax responsibility per point.
    pub assignments: Vec<usize>,
    /// Observed-data log-likelihood before each M step.
    pub log_likelihood: Vec<T>,
    pub converged: bool,
}

impl<T: Scalar> SsgmmFit<T> {
    pub fn mapped_labels(&self) -> Vec<u32> {
        self.assignments.iter().map(|&k| self.component_labels[k]).collect()
    }

    /// Components carrying a label are identified by that label; unlabeled
    /// components stay distinct.
    pub fn evaluation_labels(&self) -> Vec<u64> {
        self.assignments
            .iter()
            .map(|&k| match self.component_labels[k] {
                0 => (1u64 << 32) + k as u64,
                q => u64::from(q),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmSettings {
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for EmSettings {
    fn default() -> Self {
        Self {
            max_iter: 500,
            tol: 1e-8,
            seed: 0,
        }
    }
}

/// Fits a `k`-component mixture. Component `j < L` belongs to the `j`-th
/// smallest observed label; components `L..k` start at randomly chosen
/// unlabeled points. Iterates until the log-likelihood improves by less than
/// `tol` or `max_iter` M steps have run.
pub fn ssgmm_fit<T: Scalar>(data: &Dataset<T>, labels: &Labels, k: usize, em: EmSettings) -> Result<SsgmmFit<T>> {
    if labels.len() != data.n() {
        return Err(Error::LengthMismatch {
            left: data.n(),
            right: labels.len(),
        });
    }
    let classes = labels.distinct();
    if k == 0 || k < classes.len() {
        return Err(Error::InvalidConfig(format!(
            "k = {k} must be >= number of labeled classes ({})",
            classes.len()
        )));
    }
    if em.max_iter == 0 || !(em.tol > 0.0) {
        return Err(Error::InvalidConfig("max_iter must be >= 1 and tol > 0".into()));
    }
    let n = data.n();
    let d = data.dim();
    let mut component_labels = classes.clone();
    component_labels.resize(k, 0);
    // Hard component for labeled points.
    let fixed: Vec<Option<usize>> = (0..n)
        .map(|i| match labels.get(i) {
            0 => None,
            y => classes.iter().position(|&c| c == y),
        })
        .collect();

    let mut params = initial_params(data, labels, &classes, k, em.seed)?;
    let mut resp = vec![T::zero(); n * k];
    let mut history = Vec::new();
    let mut converged = false;
    let mut log_terms = vec![T::zero(); k];
    for _ in 0..em.max_iter {
        // E step
        let chols: Vec<Cholesky<T>> = params.covariances.iter().map(chol_factor).collect::<Result<_>>()?;
        let ln_w: Vec<T> = params.weights.iter().map(|w| w.ln()).collect();
        let mut ll = T::zero();
        for i in 0..n {
            let x = data.row(i);
            let row = &mut resp[i * k..(i + 1) * k];
            match fixed[i] {
                Some(c) => {
                    ll = ll + ln_w[c] + gaussian_logpdf_factored(x, &params.means[c], &chols[c]);
                    row.iter_mut().for_each(|r| *r = T::zero());
                    row[c] = T::one();
                }
                None => {
                    for j in 0..k {
                        log_terms[j] = ln_w[j] + gaussian_logpdf_factored(x, &params.means[j], &chols[j]);
                    }
                    let total = log_sum_exp(&log_terms)?;
                    ll = ll + total;
                    for j in 0..k {
                        row[j] = (log_terms[j] - total).exp();
                    }
                }
            }
        }
        let improved = history.last().map(|&prev: &T| ll - prev);
        history.push(ll);
        if let Some(delta) = improved {
            if delta.abs() < T::lit(em.tol) {
                converged = true;
                break;
            }
        }
        params = m_step(data, &resp, k, d)?;
    }

    let assignments = (0..n)
        .map(|i| {
            let row = &resp[i * k..(i + 1) * k];
            let mut best = 0;
            for j in 1..k {
                if row[j] > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect();
    Ok(SsgmmFit {
        params,
        responsibilities: resp,
        component_labels,
        assignments,
        log_likelihood: history,
        converged,
    })
}

fn regularize<T: Scalar>(cov: &mut SymMatrix<T>) {
    let d = cov.dim();
    let ridge = T::lit(COV_FLOOR) * cov.trace() / T::from_count(d);
    for i in 0..d {
        cov[(i, i)] = cov[(i, i)] + ridge;
    }
}

fn initial_params<T: Scalar>(
    data: &Dataset<T>,
    labels: &Labels,
    classes: &[u32],
    k: usize,
    seed: u64,
) -> Result<GmmParams<T>> {
    let d = data.dim();
    let all: Vec<usize> = (0..data.n()).collect();
    let (_, mut global_cov) = weighted_moments(data, &all, d);
    regularize(&mut global_cov);
    let mut means = Vec::with_capacity(k);
    for &c in classes {
        let members: Vec<usize> = (0..data.n()).filter(|&i| labels.get(i) == c).collect();
        means.push(weighted_moments(data, &members, d).0);
    }
    let unlabeled: Vec<usize> = (0..data.n()).filter(|&i| labels.get(i) == 0).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool = if unlabeled.is_empty() { &all } else { &unlabeled };
    while means.len() < k {
        let &i = pool.choose(&mut rng).expect("dataset is non-empty");
        means.push(data.row(i).to_vec());
    }
    Ok(GmmParams {
        weights: vec![T::one() / T::from_count(k); k],
        means,
        covariances: vec![global_cov; k],
    })
}

fn weighted_moments<T: Scalar>(data: &Dataset<T>, idx: &[usize], d: usize) -> (Vec<T>, SymMatrix<T>) {
    let n = T::from_count(idx.len().max(1));
    let mut mean = vec![T::zero(); d];
    for &i in idx {
        for (m, &v) in mean.iter_mut().zip(data.row(i)) {
            *m = *m + v;
        }
    }
    mean.iter_mut().for_each(|m| *m = *m / n);
    let mut cov = SymMatrix::zeros(d);
    let mut diff = vec![T::zero(); d];
    for &i in idx {
        for ((df, &v), &m) in diff.iter_mut().zip(data.row(i)).zip(&mean) {
            *df = v - m;
        }
        cov.add_outer(&diff, T::one() / n);
    }
    (mean, cov)
}

fn m_step<T: Scalar>(data: &Dataset<T>, resp: &[T], k: usize, d: usize) -> Result<GmmParams<T>> {
    let n = data.n();
    let floor = T::lit(10.0 * f64::EPSILON);
    let mut weights = Vec::with_capacity(k);
    let mut means = Vec::with_capacity(k);
    let mut covariances = Vec::with_capacity(k);
    let mut diff = vec![T::zero(); d];
    for j in 0..k {
        let mass: T = (0..n).map(|i| resp[i * k + j]).sum();
        if !(mass > floor) {
            return Err(Error::DegenerateComponent {
                component: j,
                mass: mass.as_f64(),
            });
        }
        let mut mean = vec![T::zero(); d];
        for i in 0..n {
            let r = resp[i * k + j];
            for (m, &v) in mean.iter_mut().zip(data.row(i)) {
                *m = *m + r * v;
            }
        }
        mean.iter_mut().for_each(|m| *m = *m / mass);
        let mut cov = SymMatrix::zeros(d);
        for i in 0..n {
            let r = resp[i * k + j];
            for ((df, &v), &m) in diff.iter_mut().zip(data.row(i)).zip(&mean) {
                *df = v - m;
            }
            cov.add_outer(&diff, r / mass);
        }
        regularize(&mut cov);
        weights.push(mass / T::from_count(n));
        means.push(mean);
        covariances.push(cov.symmetrized());
    }
    Ok(GmmParams {
        weights,
        means,
        covariances,
    })
}
