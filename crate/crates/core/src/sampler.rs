//! Collapsed Gibbs sampler for the semi-supervised infinite Gaussian mixture.
//!
//! Each sweep visits every point, removes it from its cluster, scores every
//! admissible destination as `CRP prior × Student-t predictive` in log space
//! and draws a new destination. Differently labeled points are never placed
//! together. With all labels `0` this is the ordinary DP mixture sampler.

use std::collections::HashMap;

use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::math::{sample_categorical, StudentT, SymMatrix};
use crate::niw::{NiwHyper, SuffStats};
use crate::partition::{ClusterId, Labels, PartitionState, Target};
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitStrategy {
    /// Everything in one cluster, except labeled points whose label clashes
    /// with it, which get one cluster per label.
    SingleCluster,
    /// One cluster per observed label holding that label's points, plus one
    /// cluster with all unlabeled points.
    PerLabelPlusOne,
    /// Uniform random allocation over `k` slots, labeled points redirected
    /// when the slot's tag clashes.
    RandomK(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig<T> {
    pub alpha: T,
    pub hyper: NiwHyper<T>,
    pub n_iterations: usize,
    pub n_burn_in: usize,
    pub seed: u64,
    pub init: InitStrategy,
    /// Visit points in a fresh random order each sweep instead of ascending
    /// index order.
    pub random_scan: bool,
}

impl<T: Scalar> SamplerConfig<T> {
    /// `α = 1`, empirical prior, 2000 iterations with 1500 burn-in,
    /// per-label-plus-one start.
    pub fn defaults_for(data: &Dataset<T>, seed: u64) -> Result<Self> {
        Ok(Self {
            alpha: T::one(),
            hyper: NiwHyper::empirical(data.as_row_major(), data.dim())?,
            n_iterations: 2000,
            n_burn_in: 1500,
            seed,
            init: InitStrategy::PerLabelPlusOne,
            random_scan: false,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > T::zero()) || !self.alpha.is_finite() {
            return Err(Error::InvalidConfig(format!("alpha must be positive, got {}", self.alpha)));
        }
        if self.n_iterations == 0 {
            return Err(Error::InvalidConfig("n_iterations must be >= 1".into()));
        }
        if self.n_burn_in >= self.n_iterations {
            return Err(Error::InvalidConfig(format!(
                "n_burn_in ({}) must be < n_iterations ({})",
                self.n_burn_in, self.n_iterations
            )));
        }
        if let InitStrategy::RandomK(0) = self.init {
            return Err(Error::InvalidConfig("random-k init needs k >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord<T> {
    pub iteration: usize,
    pub k: usize,
    pub log_joint: T,
}

/// Assignment vector and tags at one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot<T> {
    pub iteration: usize,
    pub z: Vec<ClusterId>,
    /// Live clusters in registry order with their tags.
    pub q: Vec<(ClusterId, u32)>,
    pub log_joint: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerTrace<T> {
    pub records: Vec<TraceRecord<T>>,
    /// Highest log joint among post-burn-in iterations.
    pub best: Snapshot<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSummary<T> {
    pub q: u32,
    pub count: usize,
    /// Posterior mean `m_k`.
    pub mean: Vec<T>,
    /// `Λ_k / (ν_k - D - 1)`; `None` when `ν_k <= D + 1`.
    pub covariance: Option<SymMatrix<T>>,
}

/// Result of one chain, read off its best post-burn-in snapshot. Cluster ids
/// are compacted to `0..K` in registry order.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult<T> {
    pub assignments: Vec<usize>,
    pub mapped_labels: Vec<u32>,
    pub clusters: Vec<ClusterSummary<T>>,
    pub trace: SamplerTrace<T>,
}

impl<T: Scalar> FitResult<T> {
    pub fn k(&self) -> usize {
        self.clusters.len()
    }

    /// Partition used for scoring: clusters tagged `q > 0` are identified by
    /// their label (so the components of a multimodal class merge), each
    /// untagged cluster stays a class of its own.
    pub fn evaluation_labels(&self) -> Vec<u64> {
        self.assignments
            .iter()
            .map(|&c| match self.clusters[c].q {
                0 => (1u64 << 32) + c as u64,
                q => u64::from(q),
            })
            .collect()
    }

    pub fn write_assignments(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        crate::data::write_assignments(path, &self.assignments, &self.mapped_labels)
    }
}

/// Gibbs sampler over a partition of `data`. Predictive distributions of
/// untouched clusters are kept between point updates; a cluster's entry is
/// rebuilt from its statistics whenever they change.
pub struct GibbsSampler<'a, T: Scalar> {
    data: &'a Dataset<T>,
    labels: &'a Labels,
    hyper: &'a NiwHyper<T>,
    state: PartitionState<T>,
    constrained: bool,
    new_cluster: StudentT<T>,
    cache: HashMap<ClusterId, StudentT<T>>,
    weights: Vec<(Target, T)>,
    log_post: Vec<T>,
    order: Vec<usize>,
}

impl<'a, T: Scalar> GibbsSampler<'a, T> {
    /// Sampler honoring the cannot-link constraints implied by `labels`.
    pub fn new(
        state: PartitionState<T>,
        data: &'a Dataset<T>,
        labels: &'a Labels,
        hyper: &'a NiwHyper<T>,
    ) -> Result<Self> {
        Self::build(state, data, labels, hyper, true)
    }

    /// Plain DP mixture sampler that ignores labels entirely.
    pub fn unconstrained(
        state: PartitionState<T>,
        data: &'a Dataset<T>,
        labels: &'a Labels,
        hyper: &'a NiwHyper<T>,
    ) -> Result<Self> {
        Self::build(state, data, labels, hyper, false)
    }

    fn build(
        state: PartitionState<T>,
        data: &'a Dataset<T>,
        labels: &'a Labels,
        hyper: &'a NiwHyper<T>,
        constrained: bool,
    ) -> Result<Self> {
        check_shapes(data, labels, hyper)?;
        if state.n_total() != data.n() || state.n_assigned() != data.n() {
            return Err(Error::InvalidConfig("every point must be assigned before sampling".into()));
        }
        Ok(Self {
            data,
            labels,
            hyper,
            state,
            constrained,
            new_cluster: hyper.predictive_new_dist()?,
            cache: HashMap::new(),
            weights: Vec::new(),
            log_post: Vec::new(),
            order: (0..data.n()).collect(),
        })
    }

    pub fn state(&self) -> &PartitionState<T> {
        &self.state
    }

    pub fn into_state(self) -> PartitionState<T> {
        self.state
    }

    fn label(&self, i: usize) -> u32 {
        if self.constrained {
            self.labels.get(i)
        } else {
            0
        }
    }

    /// Resamples the assignment of point `i`.
    pub fn update_point<R: Rng + ?Sized>(&mut self, i: usize, rng: &mut R) -> Result<()> {
        let x = self.data.row(i);
        let y = self.label(i);
        let (old, _) = self.state.unassign(i, x, y)?;
        self.cache.remove(&old);

        self.state.fill_crp_log_weights(i, &mut self.weights);
        if self.constrained {
            self.state.apply_constraints(y, &mut self.weights);
        }
        self.log_post.clear();
        for &(target, prior) in &self.weights {
            if prior == T::neg_infinity() {
                self.log_post.push(prior);
                continue;
            }
            let predictive = match target {
                Target::New => &self.new_cluster,
                Target::Existing(id) => {
                    if !self.cache.contains_key(&id) {
                        let stats = &self.state.cluster(id).expect("live cluster").stats;
                        self.cache.insert(id, self.hyper.predictive_dist(stats)?);
                    }
                    &self.cache[&id]
                }
            };
            self.log_post.push(prior + predictive.ln_pdf(x));
        }
        let pick = sample_categorical(&self.log_post, rng)?;
        let new = self.state.assign(i, self.weights[pick].0, x, y)?;
        self.cache.remove(&new);
        Ok(())
    }

    /// One pass over all points.
    pub fn sweep<R: Rng + ?Sized>(&mut self, random_scan: bool, rng: &mut R) -> Result<()> {
        if random_scan {
            self.order.shuffle(rng);
        }
        for pos in 0..self.order.len() {
            let i = self.order[pos];
            self.update_point(i, rng)?;
        }
        debug_assert!(
            !self.constrained || self.state.check_invariants(self.labels).is_ok(),
            "{:?}",
            self.state.check_invariants(self.labels)
        );
        Ok(())
    }
}

fn check_shapes<T: Scalar>(data: &Dataset<T>, labels: &Labels, hyper: &NiwHyper<T>) -> Result<()> {
    if labels.len() != data.n() {
        return Err(Error::LengthMismatch {
            left: data.n(),
            right: labels.len(),
        });
    }
    if hyper.dim() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            got: hyper.dim(),
        });
    }
    Ok(())
}

/// One ascending-order sweep over all points.
pub fn gibbs_sweep<T: Scalar, R: Rng + ?Sized>(
    state: &mut PartitionState<T>,
    data: &Dataset<T>,
    labels: &Labels,
    hyper: &NiwHyper<T>,
    rng: &mut R,
) -> Result<()> {
    let placeholder = PartitionState::new(state.n_total(), state.dim(), state.alpha())?;
    let owned = std::mem::replace(state, placeholder);
    let mut sampler = GibbsSampler::new(owned, data, labels, hyper)?;
    let res = sampler.sweep(false, rng);
    *state = sampler.into_state();
    res
}

/// Collapsed log joint `log p(Z, X | α, H)`: the CRP partition probability
/// `K log α + Σ_k log Γ(N_k) - Σ_{n<N} log(α+n)` plus each cluster's marginal
/// likelihood.
pub fn log_joint<T: Scalar>(state: &PartitionState<T>, data: &Dataset<T>, hyper: &NiwHyper<T>) -> Result<T> {
    // Statistics are rebuilt in index order so the value depends only on the
    // set partition, not on the update history.
    let mut members: IndexMap<ClusterId, SuffStats<T>> = IndexMap::new();
    let mut n = 0;
    for (i, z) in state.assignments().iter().enumerate() {
        if let Some(id) = z {
            members
                .entry(*id)
                .or_insert_with(|| SuffStats::empty(data.dim()))
                .add(data.row(i));
            n += 1;
        }
    }
    let alpha = state.alpha();
    let mut total = T::from_count(members.len()) * alpha.ln() - ((alpha + T::from_count(n)).lgamma() - alpha.lgamma());
    for s in members.values() {
        total = total + T::from_count(s.count()).lgamma() + hyper.log_marginal(s)?;
    }
    Ok(total)
}

/// Builds the starting partition for `strategy`.
pub fn initialize<T: Scalar, R: Rng + ?Sized>(
    data: &Dataset<T>,
    labels: &Labels,
    alpha: T,
    strategy: InitStrategy,
    rng: &mut R,
) -> Result<PartitionState<T>> {
    if labels.len() != data.n() {
        return Err(Error::LengthMismatch {
            left: data.n(),
            right: labels.len(),
        });
    }
    let mut state = PartitionState::new(data.n(), data.dim(), alpha)?;
    // Cluster currently holding each label, so labeled points never clash.
    let mut home: HashMap<u32, ClusterId> = HashMap::new();
    let mut place = |state: &mut PartitionState<T>, i: usize, preferred: Option<ClusterId>| -> Result<ClusterId> {
        let y = labels.get(i);
        let target = match preferred {
            Some(id) if y == 0 => Target::Existing(id),
            Some(id) => {
                let q = state.cluster(id).map_or(0, |c| c.q);
                if q == 0 || q == y {
                    Target::Existing(id)
                } else {
                    home.get(&y).map_or(Target::New, |&h| Target::Existing(h))
                }
            }
            None => Target::New,
        };
        let id = state.assign(i, target, data.row(i), y)?;
        if y > 0 {
            home.entry(y).or_insert(id);
        }
        Ok(id)
    };
    match strategy {
        InitStrategy::SingleCluster => {
            let mut main = None;
            for i in 0..data.n() {
                let id = place(&mut state, i, main)?;
                main.get_or_insert(id);
            }
        }
        InitStrategy::PerLabelPlusOne => {
            for y in labels.distinct() {
                let mut cluster = None;
                for i in (0..data.n()).filter(|&i| labels.get(i) == y) {
                    cluster = Some(place(&mut state, i, cluster)?);
                }
            }
            let mut rest = None;
            for i in (0..data.n()).filter(|&i| labels.get(i) == 0) {
                rest = Some(place(&mut state, i, rest)?);
            }
        }
        InitStrategy::RandomK(k) => {
            let mut slots: Vec<Option<ClusterId>> = vec![None; k.max(1)];
            for i in 0..data.n() {
                let s = rng.random_range(0..slots.len());
                let id = place(&mut state, i, slots[s])?;
                if slots[s].is_none() {
                    slots[s] = Some(id);
                }
            }
        }
    }
    Ok(state)
}

fn snapshot<T: Scalar>(state: &PartitionState<T>, iteration: usize, log_joint: T) -> Snapshot<T> {
    Snapshot {
        iteration,
        z: state.assignments().iter().map(|z| z.expect("all points assigned")).collect(),
        q: state.clusters().map(|(id, c)| (id, c.q)).collect(),
        log_joint,
    }
}

fn summarize<T: Scalar>(
    best: &Snapshot<T>,
    data: &Dataset<T>,
    hyper: &NiwHyper<T>,
) -> (Vec<usize>, Vec<u32>, Vec<ClusterSummary<T>>) {
    let compact: HashMap<ClusterId, usize> = best.q.iter().enumerate().map(|(k, &(id, _))| (id, k)).collect();
    let assignments: Vec<usize> = best.z.iter().map(|id| compact[id]).collect();
    let mapped: Vec<u32> = assignments.iter().map(|&k| best.q[k].1).collect();
    let mut stats = vec![SuffStats::empty(data.dim()); best.q.len()];
    for (i, &k) in assignments.iter().enumerate() {
        stats[k].add(data.row(i));
    }
    let d = T::from_count(data.dim());
    let clusters = stats
        .iter()
        .zip(&best.q)
        .map(|(s, &(_, q))| {
            let post = hyper.posterior(s);
            let denom = post.nu - d - T::one();
            ClusterSummary {
                q,
                count: s.count(),
                mean: post.m.clone(),
                covariance: (denom > T::zero()).then(|| post.lambda.scale(T::one() / denom)),
            }
        })
        .collect();
    (assignments, mapped, clusters)
}

fn chain_rng(seed: u64, chain: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain as u64);
    rng
}

fn run_chain<T: Scalar>(
    data: &Dataset<T>,
    labels: &Labels,
    config: &SamplerConfig<T>,
    chain: usize,
) -> Result<FitResult<T>> {
    config.validate()?;
    check_shapes(data, labels, &config.hyper)?;
    let mut rng = chain_rng(config.seed, chain);
    let state = initialize(data, labels, config.alpha, config.init, &mut rng)?;
    let mut sampler = GibbsSampler::new(state, data, labels, &config.hyper)?;
    let mut records = Vec::with_capacity(config.n_iterations);
    let mut best: Option<Snapshot<T>> = None;
    for iteration in 1..=config.n_iterations {
        sampler.sweep(config.random_scan, &mut rng)?;
        let lj = log_joint(sampler.state(), data, &config.hyper)?;
        records.push(TraceRecord {
            iteration,
            k: sampler.state().k(),
            log_joint: lj,
        });
        if iteration > config.n_burn_in && best.as_ref().is_none_or(|b| lj > b.log_joint) {
            best = Some(snapshot(sampler.state(), iteration, lj));
        }
    }
    let best = best.expect("n_burn_in < n_iterations");
    let (assignments, mapped_labels, clusters) = summarize(&best, data, &config.hyper);
    Ok(FitResult {
        assignments,
        mapped_labels,
        clusters,
        trace: SamplerTrace { records, best },
    })
}

/// Runs one chain. Deterministic for a fixed config and seed.
pub fn fit<T: Scalar>(data: &Dataset<T>, labels: &Labels, config: &SamplerConfig<T>) -> Result<FitResult<T>> {
    run_chain(data, labels, config, 0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiChainFit<T> {
    /// Index of the chain with the highest best log joint.
    pub winner: usize,
    pub chain_best_log_joint: Vec<T>,
    pub result: FitResult<T>,
}

/// Runs `n_chains` independent chains concurrently. Chain `c` draws from
/// stream `c` of the generator seeded with `config.seed`; chain 0 reproduces
/// [`fit`].
pub fn fit_chains<T: Scalar>(
    data: &Dataset<T>,
    labels: &Labels,
    config: &SamplerConfig<T>,
    n_chains: usize,
) -> Result<MultiChainFit<T>> {
    if n_chains == 0 {
        return Err(Error::InvalidConfig("n_chains must be >= 1".into()));
    }
    let results: Vec<FitResult<T>> = (0..n_chains)
        .into_par_iter()
        .map(|c| run_chain(data, labels, config, c))
        .collect::<Result<_>>()?;
    let scores: Vec<T> = results.iter().map(|r| r.trace.best.log_joint).collect();
    let mut winner = 0;
    for (c, &s) in scores.iter().enumerate() {
        if s > scores[winner] {
            winner = c;
        }
    }
    let result = results.into_iter().nth(winner).expect("winner in range");
    Ok(MultiChainFit {
        winner,
        chain_best_log_joint: scores,
        result,
    })
}
