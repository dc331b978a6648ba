//! Reference computations written independently of the library code paths
//! they check.

#![allow(dead_code)]

pub mod oracle;
pub mod suites;

use std::collections::HashMap;
use std::f64::consts::PI;

/// Determinant by Gaussian elimination with partial pivoting.
pub fn det(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut d = 1.0;
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
        if m[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            m.swap(p, c);
            d = -d;
        }
        d *= m[c][c];
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            for k in c..n {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    d
}

pub fn ln_mvgamma(d: usize, a: f64) -> f64 {
    let mut s = (d * (d - 1)) as f64 / 4.0 * PI.ln();
    for j in 1..=d {
        s += libm::lgamma(a + (1.0 - j as f64) / 2.0);
    }
    s
}

/// NIW posterior by a literal two-pass transcription of the update block.
pub struct Post {
    pub m: Vec<f64>,
    pub lambda: Vec<Vec<f64>>,
    pub kappa: f64,
    pub nu: f64,
}

pub fn two_pass_posterior(m0: &[f64], l0: &[Vec<f64>], k0: f64, nu0: f64, pts: &[Vec<f64>]) -> Post {
    let d = m0.len();
    let n = pts.len() as f64;
    let mut mean = vec![0.0; d];
    for p in pts {
        for j in 0..d {
            mean[j] += p[j];
        }
    }
    for v in &mut mean {
        *v /= n;
    }
    let mut lambda = l0.to_vec();
    for p in pts {
        for r in 0..d {
            for c in 0..d {
                lambda[r][c] += (p[r] - mean[r]) * (p[c] - mean[c]);
            }
        }
    }
    let kappa = k0 + n;
    for r in 0..d {
        for c in 0..d {
            lambda[r][c] += k0 * n / kappa * (mean[r] - m0[r]) * (mean[c] - m0[c]);
        }
    }
    let m = (0..d).map(|j| (k0 * m0[j] + n * mean[j]) / kappa).collect();
    Post {
        m,
        lambda,
        kappa,
        nu: nu0 + n,
    }
}

/// `log p(X)` for one NIW cluster as the ratio of normalizing constants.
pub fn niw_log_evidence(m0: &[f64], l0: &[Vec<f64>], k0: f64, nu0: f64, pts: &[Vec<f64>]) -> f64 {
    let d = m0.len();
    let n = pts.len() as f64;
    let post = two_pass_posterior(m0, l0, k0, nu0, pts);
    -n * d as f64 / 2.0 * PI.ln() + ln_mvgamma(d, post.nu / 2.0) - ln_mvgamma(d, nu0 / 2.0)
        + nu0 / 2.0 * det(l0).ln()
        - post.nu / 2.0 * det(&post.lambda).ln()
        + d as f64 / 2.0 * (k0 / post.kappa).ln()
}

/// Multivariate normal log density with explicit inverse via cofactors
/// (`d <= 2`).
pub fn gauss_logpdf_2d(x: &[f64], mu: &[f64], cov: &[Vec<f64>]) -> f64 {
    let dt = det(cov);
    let (dx, dy) = (x[0] - mu[0], x[1] - mu[1]);
    let q = (cov[1][1] * dx * dx - 2.0 * cov[0][1] * dx * dy + cov[0][0] * dy * dy) / dt;
    -(2.0 * PI).ln() - 0.5 * dt.ln() - 0.5 * q
}

/// Every set partition of `0..n` as a restricted-growth string.
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        let next = prefix.iter().max().map_or(0, |m| m + 1);
        for b in 0..=next {
            prefix.push(b);
            rec(prefix, n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(n), n, &mut out);
    out
}

/// Canonical restricted-growth form of an arbitrary labeling.
pub fn canonical<T: Eq + std::hash::Hash + Copy>(z: &[T]) -> Vec<usize> {
    let mut seen: HashMap<T, usize> = HashMap::new();
    z.iter()
        .map(|v| {
            let k = seen.len();
            *seen.entry(*v).or_insert(k)
        })
        .collect()
}

/// `log` of the CRP probability of a partition with block sizes `sizes`:
/// `α^K Π (n_k - 1)! / Π_{i<N} (α + i)`.
pub fn crp_log_prob(sizes: &[usize], alpha: f64) -> f64 {
    let n: usize = sizes.iter().sum();
    let mut s = sizes.len() as f64 * alpha.ln();
    for &k in sizes {
        for j in 1..k {
            s += (j as f64).ln();
        }
    }
    for i in 0..n {
        s -= (alpha + i as f64).ln();
    }
    s
}

fn choose2(k: u64) -> f64 {
    (k * k.saturating_sub(1)) as f64 / 2.0
}

/// ARI written out term by term: `t1`, `t2`, `t3 = 2 t1 t2 / (n(n-1))`,
/// `(Σ C(m_ij,2) - t3) / (½(t1+t2) - t3)`.
pub fn ari_transcribed(c: &[u32], cp: &[u32]) -> f64 {
    let n = c.len() as u64;
    let classes: Vec<u32> = {
        let mut v = c.to_vec();
        v.sort_unstable();
        v.dedup();
        v
    };
    let clusters: Vec<u32> = {
        let mut v = cp.to_vec();
        v.sort_unstable();
        v.dedup();
        v
    };
    let mut sum_m = 0.0;
    for &a in &classes {
        for &b in &clusters {
            let m = c.iter().zip(cp).filter(|(x, y)| **x == a && **y == b).count() as u64;
            sum_m += choose2(m);
        }
    }
    let t1: f64 = classes
        .iter()
        .map(|&a| choose2(c.iter().filter(|&&x| x == a).count() as u64))
        .sum();
    let t2: f64 = clusters
        .iter()
        .map(|&b| choose2(cp.iter().filter(|&&x| x == b).count() as u64))
        .sum();
    let t3 = 2.0 * t1 * t2 / (n * (n - 1)) as f64;
    (sum_m - t3) / (0.5 * (t1 + t2) - t3)
}

/// Composite Simpson rule on `[a, b]` with `n` (even) intervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}
