//! Exact posterior over set partitions for tiny datasets, compared against
//! the Gibbs sampler's empirical partition frequencies.

#![allow(dead_code)]

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ssigmm::data::Dataset;
use ssigmm::niw::NiwHyper;
use ssigmm::partition::{Labels, PartitionState, Target};
use ssigmm::sampler::{initialize, log_joint, GibbsSampler, InitStrategy};

use super::{canonical, crp_log_prob, niw_log_evidence, set_partitions};

pub const ALPHA: f64 = 1.0;

/// Fixed 2-D points with a posterior spread over many partitions.
pub fn oracle_points(n: usize) -> Vec<Vec<f64>> {
    let all = [[0.0, 0.0], [0.6, 0.4], [2.1, 1.7], [2.5, 1.2], [-0.9, 2.2]];
    all[..n].iter().map(|p| p.to_vec()).collect()
}

pub struct Enumeration {
    /// Normalized posterior per admissible partition (restricted-growth key).
    pub probs: HashMap<Vec<usize>, f64>,
    /// Largest |library log_joint - oracle score| over admissible partitions.
    pub max_log_joint_gap: f64,
    /// log Σ exp(score) over admissible partitions.
    pub log_total: f64,
}

/// Scores every partition that keeps differently labeled points apart as
/// CRP prior × Π NIW evidence, and normalizes.
pub fn enumerate(points: &[Vec<f64>], labels: &[u32], hyper: &NiwHyper<f64>) -> Enumeration {
    let n = points.len();
    let data = Dataset::from_rows(points).unwrap();
    let m0 = hyper.m0().to_vec();
    let l0 = hyper.lambda0().to_rows();
    let mut scores = Vec::new();
    let mut gap: f64 = 0.0;
    for part in set_partitions(n) {
        let k = part.iter().max().unwrap() + 1;
        let mut ok = true;
        for i in 0..n {
            for j in 0..n {
                if part[i] == part[j] && labels[i] > 0 && labels[j] > 0 && labels[i] != labels[j] {
                    ok = false;
                }
            }
        }
        if !ok {
            continue;
        }
        let blocks: Vec<Vec<Vec<f64>>> = (0..k)
            .map(|b| (0..n).filter(|&i| part[i] == b).map(|i| points[i].clone()).collect())
            .collect();
        let sizes: Vec<usize> = blocks.iter().map(Vec::len).collect();
        let mut score = crp_log_prob(&sizes, ALPHA);
        for b in &blocks {
            score += niw_log_evidence(&m0, &l0, hyper.kappa0(), hyper.nu0(), b);
        }
        let mut st = PartitionState::new(n, data.dim(), ALPHA).unwrap();
        let mut ids = Vec::new();
        for i in 0..n {
            let t = if part[i] < ids.len() { Target::Existing(ids[part[i]]) } else { Target::New };
            let id = st.assign(i, t, data.row(i), 0).unwrap();
            if part[i] == ids.len() {
                ids.push(id);
            }
        }
        gap = gap.max((log_joint(&st, &data, hyper).unwrap() - score).abs());
        scores.push((part, score));
    }
    let mx = scores.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = scores.iter().map(|s| (s.1 - mx).exp()).sum();
    let probs = scores.iter().map(|(p, s)| (p.clone(), (s - mx).exp() / z)).collect();
    Enumeration {
        probs,
        max_log_joint_gap: gap,
        log_total: mx + z.ln(),
    }
}

pub struct OracleRun {
    pub n_partitions: usize,
    pub tv: f64,
    /// Sweeps in which two differently labeled points shared a cluster.
    pub violations: usize,
    pub max_log_joint_gap: f64,
}

pub fn run_oracle(n: usize, labels: &[u32], burn_in: usize, sweeps: usize, seed: u64) -> OracleRun {
    let points = oracle_points(n);
    let data = Dataset::from_rows(&points).unwrap();
    let hyper = NiwHyper::empirical(data.as_row_major(), data.dim()).unwrap();
    let exact = enumerate(&points, labels, &hyper);
    let y = Labels::new(labels.to_vec());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let state = initialize(&data, &y, ALPHA, InitStrategy::PerLabelPlusOne, &mut rng).unwrap();
    let mut sampler = GibbsSampler::new(state, &data, &y, &hyper).unwrap();
    for _ in 0..burn_in {
        sampler.sweep(false, &mut rng).unwrap();
    }
    let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut violations = 0;
    for _ in 0..sweeps {
        sampler.sweep(false, &mut rng).unwrap();
        let z: Vec<_> = sampler.state().assignments().iter().map(|z| z.unwrap()).collect();
        'pairs: for i in 0..n {
            for j in i + 1..n {
                if labels[i] > 0 && labels[j] > 0 && labels[i] != labels[j] && z[i] == z[j] {
                    violations += 1;
                    break 'pairs;
                }
            }
        }
        *counts.entry(canonical(&z)).or_default() += 1;
    }
    let mut tv = 0.0;
    for (p, &pr) in &exact.probs {
        let emp = counts.get(p).copied().unwrap_or(0) as f64 / sweeps as f64;
        tv += (emp - pr).abs();
    }
    // mass on partitions outside the admissible set
    for (p, &c) in &counts {
        if !exact.probs.contains_key(p) {
            tv += c as f64 / sweeps as f64;
        }
    }
    OracleRun {
        n_partitions: exact.probs.len(),
        tv: tv / 2.0,
        violations,
        max_log_joint_gap: exact.max_log_joint_gap,
    }
}
