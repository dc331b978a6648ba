//! Clustering state: assignments, live clusters with their sufficient
//! statistics, and the per-cluster label tag `q`.
//!
//! A cluster's tag is the unique observed label among its members, or `0` if
//! it has no labeled member. Differently labeled points never share a cluster
//! (cannot-link); equally labeled points may be spread over several clusters.

use std::fmt;

use indexmap::IndexMap;

use crate::niw::SuffStats;
use crate::{Error, Result, Scalar};

/// Observed labels, one per point. `0` means unlabeled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labels(Vec<u32>);

impl Labels {
    pub fn new(y: Vec<u32>) -> Self {
        Self(y)
    }

    pub fn unlabeled(n: usize) -> Self {
        Self(vec![0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> u32 {
        self.0[i]
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn n_labeled(&self) -> usize {
        self.0.iter().filter(|&&y| y > 0).count()
    }

    /// Distinct positive labels in ascending order.
    pub fn distinct(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self.0.iter().copied().filter(|&y| y > 0).collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

impl From<Vec<u32>> for Labels {
    fn from(y: Vec<u32>) -> Self {
        Self(y)
    }
}

/// Stable cluster handle. Never reused within one state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClusterId(pub usize);

impl fmt::Display for ClusterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Where a point may go: an existing cluster or a fresh one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Existing(ClusterId),
    New,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster<T> {
    pub stats: SuffStats<T>,
    pub q: u32,
    pub labeled_count: usize,
}

impl<T: Scalar> Cluster<T> {
    pub fn count(&self) -> usize {
        self.stats.count()
    }
}

#[derive(Debug, Clone)]
pub struct PartitionState<T> {
    z: Vec<Option<ClusterId>>,
    clusters: IndexMap<ClusterId, Cluster<T>>,
    alpha: T,
    dim: usize,
    next_id: usize,
}

impl<T: Scalar> PartitionState<T> {
    /// Empty state for `n` points with every point unassigned.
    pub fn new(n: usize, dim: usize, alpha: T) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidConfig("partition needs at least one point".into()));
        }
        if !(alpha > T::zero()) || !alpha.is_finite() {
            return Err(Error::InvalidConfig(format!("alpha must be positive, got {alpha}")));
        }
        Ok(Self {
            z: vec![None; n],
            clusters: IndexMap::new(),
            alpha,
            dim,
            next_id: 0,
        })
    }

    pub fn n_total(&self) -> usize {
        self.z.len()
    }

    pub fn n_assigned(&self) -> usize {
        self.z.iter().filter(|z| z.is_some()).count()
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of live clusters.
    pub fn k(&self) -> usize {
        self.clusters.len()
    }

    pub fn z(&self, i: usize) -> Option<ClusterId> {
        self.z[i]
    }

    pub fn assignments(&self) -> &[Option<ClusterId>] {
        &self.z
    }

    pub fn cluster(&self, id: ClusterId) -> Option<&Cluster<T>> {
        self.clusters.get(&id)
    }

    /// Live clusters in insertion order.
    pub fn clusters(&self) -> impl Iterator<Item = (ClusterId, &Cluster<T>)> {
        self.clusters.iter().map(|(&id, c)| (id, c))
    }

    pub fn cluster_ids(&self) -> Vec<ClusterId> {
        self.clusters.keys().copied().collect()
    }

    /// CRP prior weights for point `i`, with `i` itself excluded from the
    /// counts: `log(N_k⁻ⁱ / (N+α-1))` per live cluster and
    /// `log(α / (N+α-1))` for a new one (always the last entry).
    pub fn crp_log_weights(&self, i: usize) -> Vec<(Target, T)> {
        let mut out = Vec::with_capacity(self.clusters.len() + 1);
        self.fill_crp_log_weights(i, &mut out);
        out
    }

    pub(crate) fn fill_crp_log_weights(&self, i: usize, out: &mut Vec<(Target, T)>) {
        out.clear();
        let own = self.z[i];
        let ln_denom = (T::from_count(self.n_total()) + self.alpha - T::one()).ln();
        for (&id, c) in &self.clusters {
            let n = c.count() - usize::from(own == Some(id));
            if n > 0 {
                out.push((Target::Existing(id), T::from_count(n).ln() - ln_denom));
            }
        }
        out.push((Target::New, self.alpha.ln() - ln_denom));
    }

    /// [`crp_log_weights`](Self::crp_log_weights) with clusters that would
    /// violate cannot-link set to `-inf`. Unlabeled points (`y_i = 0`) are
    /// unconstrained; the new-cluster entry is never excluded.
    pub fn constrained_log_weights(&self, i: usize, y_i: u32) -> Vec<(Target, T)> {
        let mut out = self.crp_log_weights(i);
        self.apply_constraints(y_i, &mut out);
        out
    }

    pub(crate) fn apply_constraints(&self, y_i: u32, weights: &mut [(Target, T)]) {
        if y_i == 0 {
            return;
        }
        for (target, w) in weights.iter_mut() {
            if let Target::Existing(id) = target {
                let q = self.clusters[&*id].q;
                if q > 0 && q != y_i {
                    *w = T::neg_infinity();
                }
            }
        }
    }

    /// Places unassigned point `i` into `target` and updates the tag.
    pub fn assign(&mut self, i: usize, target: Target, x: &[T], y_i: u32) -> Result<ClusterId> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if let Some(id) = self.z[i] {
            return Err(Error::InvalidConfig(format!("point {i} already in cluster {id}")));
        }
        let id = match target {
            Target::Existing(id) => {
                let c = self.clusters.get(&id).ok_or(Error::EmptyCluster)?;
                if y_i > 0 && c.q > 0 && c.q != y_i {
                    return Err(Error::ConstraintViolation { label: y_i, tag: c.q });
                }
                id
            }
            Target::New => {
                let id = ClusterId(self.next_id);
                self.next_id += 1;
                self.clusters.insert(
                    id,
                    Cluster {
                        stats: SuffStats::empty(self.dim),
                        q: 0,
                        labeled_count: 0,
                    },
                );
                id
            }
        };
        let c = self.clusters.get_mut(&id).expect("cluster is live");
        c.stats.add(x);
        if y_i > 0 {
            c.q = y_i;
            c.labeled_count += 1;
        }
        self.z[i] = Some(id);
        Ok(id)
    }

    /// Removes point `i` from its cluster. Returns the cluster id and whether
    /// the cluster was deregistered because it became empty.
    pub fn unassign(&mut self, i: usize, x: &[T], y_i: u32) -> Result<(ClusterId, bool)> {
        let id = self.z[i]
            .take()
            .ok_or_else(|| Error::InvalidConfig(format!("point {i} is not assigned")))?;
        let c = self.clusters.get_mut(&id).expect("assigned cluster is live");
        c.stats.remove(x)?;
        if y_i > 0 {
            c.labeled_count -= 1;
            if c.labeled_count == 0 {
                c.q = 0;
            }
        }
        let emptied = c.count() == 0;
        if emptied {
            self.clusters.shift_remove(&id);
        }
        Ok((id, emptied))
    }

    /// Per-point label read off the cluster tags: `q_{z_i}`, so `0` marks
    /// points in clusters with no labeled member.
    pub fn finalize_labels(&self) -> Vec<u32> {
        self.z
            .iter()
            .map(|z| z.map_or(0, |id| self.clusters[&id].q))
            .collect()
    }

    /// Full consistency scan against the labels (counts, tags, cannot-link).
    pub fn check_invariants(&self, labels: &Labels) -> std::result::Result<(), String> {
        let mut counts: IndexMap<ClusterId, (usize, usize, Option<u32>)> = IndexMap::new();
        for (i, z) in self.z.iter().enumerate() {
            let Some(id) = z else { continue };
            if !self.clusters.contains_key(id) {
                return Err(format!("point {i} refers to dead cluster {id}"));
            }
            let e = counts.entry(*id).or_insert((0, 0, None));
            e.0 += 1;
            let y = labels.get(i);
            if y > 0 {
                e.1 += 1;
                match e.2 {
                    Some(prev) if prev != y => {
                        return Err(format!("cluster {id} holds labels {prev} and {y}"));
                    }
                    _ => e.2 = Some(y),
                }
            }
        }
        for (id, c) in &self.clusters {
            let (n, nl, lab) = counts.get(id).copied().unwrap_or((0, 0, None));
            if c.count() == 0 {
                return Err(format!("cluster {id} is empty but registered"));
            }
            if c.count() != n {
                return Err(format!("cluster {id} count {} but {n} members", c.count()));
            }
            if c.labeled_count != nl {
                return Err(format!("cluster {id} labeled_count {} but {nl}", c.labeled_count));
            }
            if c.q != lab.unwrap_or(0) {
                return Err(format!("cluster {id} tag {} but members say {lab:?}", c.q));
            }
        }
        Ok(())
    }
}
