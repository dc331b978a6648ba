//! Randomized invariant suites for the conjugate model and the numerical
//! kernels. Each runs a deterministic proptest runner and reports the first
//! failure as a message.

#![allow(dead_code)]

use std::f64::consts::PI;

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

use ssigmm::math::{gaussian_logpdf, log_sum_exp, mvt_logpdf, StudentT, SymMatrix};
use ssigmm::niw::{NiwHyper, SuffStats};

use super::{gauss_logpdf_2d, niw_log_evidence, two_pass_posterior};

pub const CASES: u32 = 1000;

pub fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn run<S: Strategy>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String> {
    runner(cases).run(&strategy, test).map_err(|e| e.to_string())
}

/// SPD matrix `L Lᵀ + εI` with a random lower factor.
pub fn spd(d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (proptest::collection::vec(-1.5..1.5f64, d * d), proptest::collection::vec(0.3..2.0f64, d)).prop_map(
        move |(off, diag)| {
            let mut l = vec![vec![0.0; d]; d];
            for r in 0..d {
                for c in 0..r {
                    l[r][c] = off[r * d + c];
                }
                l[r][r] = diag[r];
            }
            let mut a = vec![vec![0.0; d]; d];
            for r in 0..d {
                for c in 0..d {
                    a[r][c] = (0..d).map(|k| l[r][k] * l[c][k]).sum::<f64>();
                }
                a[r][r] += 0.05;
            }
            a
        },
    )
}

pub fn points(d: usize, n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    proptest::collection::vec(proptest::collection::vec(-4.0..4.0f64, d), n)
}

#[derive(Debug, Clone)]
pub struct Hyper {
    pub m0: Vec<f64>,
    pub l0: Vec<Vec<f64>>,
    pub k0: f64,
    pub nu0: f64,
}

impl Hyper {
    pub fn build(&self) -> NiwHyper<f64> {
        NiwHyper::new(self.m0.clone(), SymMatrix::from_rows(&self.l0).unwrap(), self.k0, self.nu0).unwrap()
    }
}

pub fn hyper(d: usize) -> impl Strategy<Value = Hyper> {
    (
        proptest::collection::vec(-2.0..2.0f64, d),
        spd(d),
        0.1..5.0f64,
        0.0..6.0f64,
    )
        .prop_map(move |(m0, l0, k0, extra)| Hyper {
            m0,
            l0,
            k0,
            nu0: (d as f64 - 1.0) + 0.5 + extra,
        })
}

fn dim() -> impl Strategy<Value = usize> {
    1usize..=3
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

fn slices(p: &[Vec<f64>]) -> impl Iterator<Item = &[f64]> {
    p.iter().map(Vec::as_slice)
}

/// add then remove restores the posterior within 1e-10.
pub fn niw_round_trip(cases: u32) -> Result<(), String> {
    let s = dim().prop_flat_map(|d| (hyper(d), points(d, 6), proptest::collection::vec(-4.0..4.0f64, d)));
    run(cases, s, |(h, pts, x)| {
        let h = h.build();
        let base = SuffStats::from_points(h.dim(), slices(&pts));
        let mut s = base.clone();
        s.add(&x);
        s.remove(&x).unwrap();
        let a = h.posterior(&base);
        let b = h.posterior(&s);
        prop_assert!((a.kappa - b.kappa).abs() <= 1e-10 && (a.nu - b.nu).abs() <= 1e-10);
        for (u, v) in a.m.iter().zip(&b.m) {
            prop_assert!((u - v).abs() <= 1e-10 * u.abs().max(1.0), "m {u} vs {v}");
        }
        let scale = a.lambda.max_abs().max(1.0);
        prop_assert!(a.lambda.max_abs_diff(&b.lambda) <= 1e-10 * scale);
        Ok(())
    })
}

/// Posterior of empty statistics is the prior.
pub fn niw_prior_reduction(cases: u32) -> Result<(), String> {
    run(cases, dim().prop_flat_map(hyper), |h| {
        let nh = h.build();
        let p = nh.posterior(&SuffStats::empty(nh.dim()));
        prop_assert_eq!(p.kappa, h.k0);
        prop_assert_eq!(p.nu, h.nu0);
        for (u, v) in p.m.iter().zip(&h.m0) {
            prop_assert!((u - v).abs() <= 1e-15);
        }
        prop_assert!(p.lambda.max_abs_diff(&SymMatrix::from_rows(&h.l0).unwrap()) <= 1e-15);
        Ok(())
    })
}

/// All 120 orderings of five points give the same chain marginal.
pub fn niw_exchangeability(cases: u32) -> Result<(), String> {
    let s = dim().prop_flat_map(|d| (hyper(d), points(d, 5)));
    run(cases, s, |(h, pts)| {
        let h = h.build();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut perm: Vec<usize> = (0..5).collect();
        // Heap's algorithm.
        let mut c = [0usize; 5];
        let mut eval = |perm: &[usize]| {
            let v = h.cluster_log_marginal(perm.iter().map(|&i| pts[i].as_slice())).unwrap();
            lo = lo.min(v);
            hi = hi.max(v);
        };
        eval(&perm);
        let mut count = 1;
        let mut i = 0;
        while i < 5 {
            if c[i] < i {
                if i % 2 == 0 {
                    perm.swap(0, i);
                } else {
                    perm.swap(c[i], i);
                }
                eval(&perm);
                count += 1;
                c[i] += 1;
                i = 0;
            } else {
                c[i] = 0;
                i += 1;
            }
        }
        prop_assert_eq!(count, 120);
        prop_assert!(hi - lo < 1e-8, "spread {}", hi - lo);
        Ok(())
    })
}

/// Chain marginal equals the ratio of NIW normalizing constants.
pub fn niw_marginal_vs_normalizer(cases: u32) -> Result<(), String> {
    let s = dim().prop_flat_map(|d| (hyper(d), 1usize..=8).prop_flat_map(move |(h, n)| (Just(h), points(d, n))));
    run(cases, s, |(h, pts)| {
        let oracle = niw_log_evidence(&h.m0, &h.l0, h.k0, h.nu0, &pts);
        let nh = h.build();
        let chain = nh.cluster_log_marginal(slices(&pts)).unwrap();
        prop_assert!(rel(chain, oracle) < 1e-8, "chain {chain} oracle {oracle}");
        let closed = nh.log_marginal(&SuffStats::from_points(nh.dim(), slices(&pts))).unwrap();
        prop_assert!(rel(closed, oracle) < 1e-8, "closed {closed} oracle {oracle}");
        Ok(())
    })
}

/// predictive_existing(stats(P), x) = marginal(P + x) - marginal(P).
pub fn niw_predictive_consistency(cases: u32) -> Result<(), String> {
    let s = dim().prop_flat_map(|d| {
        (hyper(d), 1usize..=6, proptest::collection::vec(-4.0..4.0f64, d))
            .prop_flat_map(move |(h, n, x)| (Just(h), points(d, n), Just(x)))
    });
    run(cases, s, |(h, pts, x)| {
        let h = h.build();
        let stats = SuffStats::from_points(h.dim(), slices(&pts));
        let pred = h.predictive_existing(&stats, &x).unwrap();
        let mut more = pts.clone();
        more.push(x.clone());
        let diff = h.cluster_log_marginal(slices(&more)).unwrap() - h.cluster_log_marginal(slices(&pts)).unwrap();
        prop_assert!((pred - diff).abs() < 1e-8, "{pred} vs {diff}");
        Ok(())
    })
}

/// Posterior scale matrix against a two-pass transcription on 150 points.
pub fn niw_posterior_vs_two_pass(cases: u32) -> Result<(), String> {
    let s = (hyper(2), points(2, 150));
    run(cases, s, |(h, pts)| {
        let oracle = two_pass_posterior(&h.m0, &h.l0, h.k0, h.nu0, &pts);
        let nh = h.build();
        let p = nh.posterior(&SuffStats::from_points(2, slices(&pts)));
        prop_assert_eq!(p.kappa, oracle.kappa);
        prop_assert_eq!(p.nu, oracle.nu);
        for r in 0..2 {
            prop_assert!(rel(p.m[r], oracle.m[r]) < 1e-8);
            for c in 0..2 {
                let scale = oracle.lambda[r][r].abs().max(oracle.lambda[c][c].abs());
                prop_assert!((p.lambda[(r, c)] - oracle.lambda[r][c]).abs() < 1e-8 * scale);
            }
        }
        Ok(())
    })
}

/// With ν0 = D + 1 every predictive built along a chain has dof >= 2.
pub fn niw_default_dof(cases: u32) -> Result<(), String> {
    let s = dim().prop_flat_map(|d| (Just(d), points(d, 12)));
    run(cases, s, |(d, pts)| {
        let flat: Vec<f64> = pts.iter().flatten().copied().collect();
        let h = NiwHyper::empirical(&flat, d).unwrap();
        prop_assert_eq!(h.nu0(), d as f64 + 1.0);
        prop_assert_eq!(h.kappa0(), 1.0);
        let mut s = SuffStats::empty(d);
        prop_assert!(h.predictive_new_dist().unwrap().dof() >= 2.0);
        for p in &pts {
            s.add(p);
            prop_assert!(h.predictive_dist(&s).unwrap().dof() >= 2.0);
        }
        Ok(())
    })
}

const DOFS: [f64; 4] = [1.0, 2.0, 5.0, 30.0];

/// ∫ exp(mvt_logpdf) over the line, via x = loc + s·tan θ.
pub fn mvt_normalization_1d(cases: u32) -> Result<(), String> {
    let s = (-3.0..3.0f64, 0.2..3.0f64, 0usize..4);
    run(cases, s, |(loc, sd, di)| {
        let dof = DOFS[di];
        let dist = StudentT::new(vec![loc], &SymMatrix::from_diagonal(&[sd * sd]), dof).unwrap();
        let n = 4000;
        let h = PI / n as f64;
        let mut total = 0.0;
        for k in 0..n {
            let th = -PI / 2.0 + (k as f64 + 0.5) * h;
            let x = loc + sd * th.tan();
            total += dist.ln_pdf(&[x]).exp() * sd / th.cos().powi(2) * h;
        }
        prop_assert!((total - 1.0).abs() < 1e-3, "dof {dof}: {total}");
        Ok(())
    })
}

/// ∫ exp(mvt_logpdf) over the plane, polar coordinates in the frame of the
/// scale's Cholesky factor with radius r = tan θ.
pub fn mvt_normalization_2d(cases: u32) -> Result<(), String> {
    let s = (proptest::collection::vec(-3.0..3.0f64, 2), spd(2), 0usize..4);
    run(cases, s, |(loc, scale, di)| {
        let dof = DOFS[di];
        let l00 = scale[0][0].sqrt();
        let l10 = scale[1][0] / l00;
        let l11 = (scale[1][1] - l10 * l10).sqrt();
        let jac = l00 * l11;
        let m = SymMatrix::from_rows(&scale).unwrap();
        let n_r = 1500;
        let n_phi = 8;
        let h = PI / 2.0 / n_r as f64;
        let mut total = 0.0;
        for a in 0..n_phi {
            let phi = 2.0 * PI * a as f64 / n_phi as f64;
            let (u, v) = (phi.cos(), phi.sin());
            let mut radial = 0.0;
            for k in 0..n_r {
                let th = (k as f64 + 0.5) * h;
                let r = th.tan();
                let (w0, w1) = (r * u, r * v);
                let x = [loc[0] + l00 * w0, loc[1] + l10 * w0 + l11 * w1];
                radial += mvt_logpdf(&x, &loc, &m, dof).unwrap().exp() * r / th.cos().powi(2) * h;
            }
            total += radial * jac * 2.0 * PI / n_phi as f64;
        }
        prop_assert!((total - 1.0).abs() < 1e-3, "dof {dof}: {total}");
        Ok(())
    })
}

/// Predictive for a new cluster integrates to one in 1-D. The tan map is
/// warped near ±π/2, θ = π/2 (1 - (1 - v)^4), so dof < 1 tails stay
/// integrable under the midpoint rule.
pub fn predictive_new_normalization(cases: u32) -> Result<(), String> {
    run(cases, hyper(1), |h| {
        let dof = h.nu0;
        let scale = ((h.k0 + 1.0) / (h.k0 * dof) * h.l0[0][0]).sqrt();
        let h = h.build();
        let dist = h.predictive_new_dist().unwrap();
        let n = 4000;
        let step = 1.0 / n as f64;
        let mut full = 0.0;
        for k in 0..n {
            let v = (k as f64 + 0.5) * step;
            let th = PI / 2.0 * (1.0 - (1.0 - v).powi(4));
            let dth = PI / 2.0 * 4.0 * (1.0 - v).powi(3);
            for sign in [-1.0, 1.0] {
                let x = h.m0()[0] + sign * scale * th.tan();
                full += dist.ln_pdf(&[x]).exp() * scale / th.cos().powi(2) * dth * step;
            }
        }
        prop_assert!((full - 1.0).abs() < 1e-3, "dof {dof}: {full}");
        Ok(())
    })
}

/// dof = 1e6 matches the Gaussian with covariance = scale within 1e-3, at
/// points up to four Mahalanobis units from the location.
pub fn t_normal_limit(cases: u32) -> Result<(), String> {
    let s = (proptest::collection::vec(-3.0..3.0f64, 2), spd(2), proptest::collection::vec(-2.8..2.8f64, 2));
    run(cases, s, |(loc, scale, w)| {
        let m = SymMatrix::from_rows(&scale).unwrap();
        let l00 = scale[0][0].sqrt();
        let l10 = scale[1][0] / l00;
        let l11 = (scale[1][1] - l10 * l10).sqrt();
        let x = [loc[0] + l00 * w[0], loc[1] + l10 * w[0] + l11 * w[1]];
        let t = mvt_logpdf(&x, &loc, &m, 1e6).unwrap();
        let g = gauss_logpdf_2d(&x, &loc, &scale);
        prop_assert!((t - g).abs() < 1e-3, "t {t} gauss {g}");
        prop_assert!((gaussian_logpdf(&x, &loc, &m).unwrap() - g).abs() < 1e-10);
        Ok(())
    })
}

/// log_sum_exp(v + c) = log_sum_exp(v) + c within 1e-12.
pub fn lse_shift(cases: u32) -> Result<(), String> {
    let s = (proptest::collection::vec(-30.0..30.0f64, 1..12), -50.0..50.0f64);
    run(cases, s, |(v, c)| {
        let a = log_sum_exp(&v).unwrap();
        let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
        let b = log_sum_exp(&shifted).unwrap();
        prop_assert!((b - (a + c)).abs() < 1e-12, "{b} vs {}", a + c);
        Ok(())
    })
}

/// 10^4 points from a compact Gaussian (weak prior): the predictive matches the Gaussian
/// fitted to those points within 1e-2 log density near the bulk.
pub fn large_n_gaussian_limit(cases: u32) -> Result<(), String> {
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    let s = (proptest::collection::vec(-3.0..3.0f64, 2), 0.3..1.0f64, any::<u64>(), proptest::collection::vec(-1.5..1.5f64, 2));
    run(cases, s, |(mu, sd, seed, off)| {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<Vec<f64>> = (0..10_000)
            .map(|_| {
                vec![
                    mu[0] + sd * Distribution::<f64>::sample(&StandardNormal, &mut rng),
                    mu[1] + sd * Distribution::<f64>::sample(&StandardNormal, &mut rng),
                ]
            })
            .collect();
        let h = NiwHyper::new(vec![0.0, 0.0], SymMatrix::from_diagonal(&[0.1, 0.1]), 0.01, 3.0).unwrap();
        let stats = SuffStats::from_points(2, slices(&pts));
        let n = pts.len() as f64;
        let mean = stats.mean();
        let mut cov = vec![vec![0.0; 2]; 2];
        for p in &pts {
            for r in 0..2 {
                for c in 0..2 {
                    cov[r][c] += (p[r] - mean[r]) * (p[c] - mean[c]) / n;
                }
            }
        }
        let x = [mean[0] + off[0] * sd, mean[1] + off[1] * sd];
        let pred = h.predictive_existing(&stats, &x).unwrap();
        let g = gauss_logpdf_2d(&x, &mean, &cov);
        prop_assert!((pred - g).abs() < 1e-2, "pred {pred} gauss {g}");
        Ok(())
    })
}

/// Every suite, in report order.
pub fn all() -> Vec<(&'static str, fn(u32) -> Result<(), String>)> {
    vec![
        ("niw round trip", niw_round_trip),
        ("niw prior reduction", niw_prior_reduction),
        ("niw exchangeability (120 permutations)", niw_exchangeability),
        ("niw marginal vs normalizer ratio", niw_marginal_vs_normalizer),
        ("niw predictive consistency", niw_predictive_consistency),
        ("niw posterior vs two-pass", niw_posterior_vs_two_pass),
        ("niw default dof >= 2", niw_default_dof),
        ("mvt normalization 1-D", mvt_normalization_1d),
        ("mvt normalization 2-D", mvt_normalization_2d),
        ("predictive_new normalization", predictive_new_normalization),
        ("t -> normal limit", t_normal_limit),
        ("log_sum_exp shift invariance", lse_shift),
        ("large-N Gaussian limit", large_n_gaussian_limit),
    ]
}
