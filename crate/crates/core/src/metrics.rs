//! Clustering evaluation: adjusted Rand index, contingency tables and the
//! undefined-class detection rate.

use std::collections::{BTreeMap, HashMap};
use std::hash::Hash;

use crate::{Error, Result};

fn check_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::LengthMismatch { left: a, right: b });
    }
    Ok(())
}

#[inline]
fn pairs(n: u64) -> i128 {
    let n = i128::from(n);
    n * (n - 1) / 2
}

/// Adjusted Rand index between a reference partition and a predicted one.
///
/// With `P = C(n,2)`, `t1 = Σ_i C(|c_i|,2)`, `t2 = Σ_j C(|c'_j|,2)` and
/// `I = Σ_ij C(m_ij,2)`, the index `(I - t3) / ((t1+t2)/2 - t3)` with
/// `t3 = t1·t2/P` is evaluated as `2(I·P - t1·t2) / ((t1+t2)·P - 2·t1·t2)`
/// in exact integer arithmetic; only the final ratio is floating point.
/// When the denominator vanishes (e.g. one class and one cluster) the result
/// is 1.0 by convention.
pub fn ari<A, B>(truth: &[A], pred: &[B]) -> Result<f64>
where
    A: Eq + Hash,
    B: Eq + Hash,
{
    check_len(truth.len(), pred.len())?;
    if truth.len() < 2 {
        return Err(Error::InvalidConfig("ARI needs at least two points".into()));
    }
    let mut joint: HashMap<(&A, &B), u64> = HashMap::new();
    let mut rows: HashMap<&A, u64> = HashMap::new();
    let mut cols: HashMap<&B, u64> = HashMap::new();
    for (a, b) in truth.iter().zip(pred) {
        *joint.entry((a, b)).or_default() += 1;
        *rows.entry(a).or_default() += 1;
        *cols.entry(b).or_default() += 1;
    }
    let index: i128 = joint.values().map(|&m| pairs(m)).sum();
    let t1: i128 = rows.values().map(|&m| pairs(m)).sum();
    let t2: i128 = cols.values().map(|&m| pairs(m)).sum();
    let p = pairs(truth.len() as u64);
    let num = 2 * (index * p - t1 * t2);
    let den = (t1 + t2) * p - 2 * t1 * t2;
    if den == 0 {
        return Ok(1.0);
    }
    Ok(num as f64 / den as f64)
}

/// Counts of points per (true class, predicted cluster).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable<A, B> {
    /// Row labels, ascending.
    pub rows: Vec<A>,
    /// Column labels, ascending (so an undefined `0` column comes first).
    pub cols: Vec<B>,
    pub counts: Vec<Vec<u64>>,
}

impl<A, B> ContingencyTable<A, B> {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        (0..self.cols.len())
            .map(|j| self.counts.iter().map(|r| r[j]).sum())
            .collect()
    }
}

impl<A: std::fmt::Display, B: std::fmt::Display> ContingencyTable<A, B> {
    /// CSV with a `class` column followed by one column per cluster.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("class");
        for c in &self.cols {
            out.push_str(&format!(",{c}"));
        }
        out.push('\n');
        for (r, row) in self.rows.iter().zip(&self.counts) {
            out.push_str(&r.to_string());
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

pub fn confusion<A, B>(truth: &[A], pred: &[B]) -> Result<ContingencyTable<A, B>>
where
    A: Ord + Clone,
    B: Ord + Clone,
{
    check_len(truth.len(), pred.len())?;
    let rows: Vec<A> = truth.iter().cloned().collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    let cols: Vec<B> = pred.iter().cloned().collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    let row_ix: BTreeMap<&A, usize> = rows.iter().enumerate().map(|(i, a)| (a, i)).collect();
    let col_ix: BTreeMap<&B, usize> = cols.iter().enumerate().map(|(j, b)| (b, j)).collect();
    let mut counts = vec![vec![0u64; cols.len()]; rows.len()];
    for (a, b) in truth.iter().zip(pred) {
        counts[row_ix[a]][col_ix[b]] += 1;
    }
    Ok(ContingencyTable { rows, cols, counts })
}

/// Fraction of undefined-class points that received mapped label 0. With no
/// undefined-class points at all the rate is 1.0.
pub fn undefined_detection_rate(truth: &[u32], mapped: &[u32], undefined_class_ids: &[u32]) -> Result<f64> {
    check_len(truth.len(), mapped.len())?;
    let (mut total, mut hit) = (0usize, 0usize);
    for (t, m) in truth.iter().zip(mapped) {
        if undefined_class_ids.contains(t) {
            total += 1;
            if *m == 0 {
                hit += 1;
            }
        }
    }
    if total == 0 {
        return Ok(1.0);
    }
    Ok(hit as f64 / total as f64)
}

/// Number of clusters tagged with a predefined label (`mapped > 0`) whose
/// members are mostly undefined-class points.
pub fn tagged_clusters_with_undefined_majority(
    truth: &[u32],
    assignments: &[usize],
    mapped: &[u32],
    undefined_class_ids: &[u32],
) -> Result<usize> {
    check_len(truth.len(), assignments.len())?;
    check_len(truth.len(), mapped.len())?;
    let mut per_cluster: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for ((t, &k), &m) in truth.iter().zip(assignments).zip(mapped) {
        if m == 0 {
            continue;
        }
        let e = per_cluster.entry(k).or_default();
        e.0 += 1;
        if undefined_class_ids.contains(t) {
            e.1 += 1;
        }
    }
    Ok(per_cluster.values().filter(|&&(n, u)| 2 * u > n).count())
}
