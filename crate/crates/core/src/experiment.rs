//! End-to-end runs: load or generate data, fit one of the three methods,
//! score against ground truth and assemble the JSON report.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::{ssgmm_fit, EmSettings, SsgmmFit};
use crate::data::{generate_synthetic, make_cv_splits, mask_labels, read_csv, Dataset, SynthSpec};
use crate::math::SymMatrix;
use crate::metrics::{ari, confusion, tagged_clusters_with_undefined_majority, undefined_detection_rate};
use crate::niw::NiwHyper;
use crate::partition::Labels;
use crate::sampler::{fit_chains, FitResult, InitStrategy, SamplerConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Ssigmm,
    Igmm,
    Ssgmm,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Ssigmm => "ssigmm",
            Method::Igmm => "igmm",
            Method::Ssgmm => "ssgmm",
        }
    }
}

/// Explicit NIW hyperparameters. When absent the empirical prior is used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperSettings {
    pub m0: Vec<f64>,
    pub lambda0: Vec<Vec<f64>>,
    pub kappa0: f64,
    pub nu0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerSettings {
    pub alpha: f64,
    pub n_iterations: usize,
    pub n_burn_in: usize,
    pub init: InitStrategy,
    pub random_scan: bool,
    pub hyper: Option<HyperSettings>,
}

impl Default for SamplerSettings {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            n_iterations: 2000,
            n_burn_in: 1500,
            init: InitStrategy::PerLabelPlusOne,
            random_scan: false,
            hyper: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmConfig {
    /// Number of components; defaults to the number of predefined classes.
    pub k: Option<usize>,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        let em = EmSettings::default();
        Self {
            k: None,
            max_iter: em.max_iter,
            tol: em.tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CvSettings {
    pub n_folds: usize,
    pub label_fraction: f64,
    /// Classes that may receive labels. Defaults to the synthetic layout's
    /// predefined classes, or the classes seen in a CSV `label` column.
    pub predefined_class_ids: Option<Vec<u32>>,
}

impl Default for CvSettings {
    fn default() -> Self {
        Self {
            n_folds: 5,
            label_fraction: 0.1,
            predefined_class_ids: None,
        }
    }
}

/// Everything a `fit` or `crossval` run depends on. Serialized verbatim into
/// the report as `config_echo`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub method: Method,
    /// Dataset CSV. Mutually exclusive with `synth`.
    pub data_csv: Option<PathBuf>,
    /// Synthetic layout: a shipped name (`default`, `mouse-surrogate`) or a
    /// path to a layout JSON file.
    pub synth: Option<String>,
    pub sampler: SamplerSettings,
    pub em: EmConfig,
    pub cv: CvSettings,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub n_chains: usize,
    pub strict_repro: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            method: Method::default(),
            data_csv: None,
            synth: None,
            sampler: SamplerSettings::default(),
            em: EmConfig::default(),
            cv: CvSettings::default(),
            out: None,
            seed: None,
            n_chains: 1,
            strict_repro: false,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.data_csv, &self.synth) {
            (None, None) => return Err(Error::InvalidConfig("one of data_csv or synth is required".into())),
            (Some(_), Some(_)) => {
                return Err(Error::InvalidConfig("data_csv and synth are mutually exclusive".into()))
            }
            _ => {}
        }
        if self.n_chains == 0 {
            return Err(Error::InvalidConfig("n_chains must be >= 1".into()));
        }
        if self.strict_repro && self.seed.is_none() {
            return Err(Error::InvalidConfig("strict_repro requires an explicit seed".into()));
        }
        let s = &self.sampler;
        if !(s.alpha > 0.0) || !s.alpha.is_finite() {
            return Err(Error::InvalidConfig(format!("sampler.alpha must be positive, got {}", s.alpha)));
        }
        if s.n_iterations == 0 || s.n_burn_in >= s.n_iterations {
            return Err(Error::InvalidConfig(format!(
                "sampler.n_burn_in ({}) must be < sampler.n_iterations ({})",
                s.n_burn_in, s.n_iterations
            )));
        }
        if self.cv.n_folds < 2 {
            return Err(Error::InvalidConfig(format!("cv.n_folds must be >= 2, got {}", self.cv.n_folds)));
        }
        if !(0.0..=1.0).contains(&self.cv.label_fraction) {
            return Err(Error::InvalidConfig(format!(
                "cv.label_fraction must lie in [0, 1], got {}",
                self.cv.label_fraction
            )));
        }
        if self.em.max_iter == 0 || !(self.em.tol > 0.0) {
            return Err(Error::InvalidConfig("em.max_iter must be >= 1 and em.tol > 0".into()));
        }
        Ok(())
    }
}

/// A dataset together with which classes count as predefined.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub data: Dataset<f64>,
    pub predefined: Vec<u32>,
    pub undefined: Vec<u32>,
}

/// Resolves a synthetic layout name or path.
pub fn load_synth_spec(name_or_path: &str) -> Result<SynthSpec> {
    if let Some(spec) = SynthSpec::builtin(name_or_path) {
        return Ok(spec);
    }
    SynthSpec::from_json(&fs::read_to_string(name_or_path)?)
}

pub fn load_data(config: &RunConfig) -> Result<LoadedData> {
    let (data, layout_predefined) = match (&config.data_csv, &config.synth) {
        (Some(path), None) => (read_csv::<f64>(path)?, None),
        (None, Some(name)) => {
            let spec = load_synth_spec(name)?;
            (generate_synthetic(&spec)?, Some(spec.predefined_class_ids()))
        }
        _ => return Err(Error::InvalidConfig("exactly one of data_csv or synth is required".into())),
    };
    let predefined = match (&config.cv.predefined_class_ids, layout_predefined, &data.labels) {
        (Some(ids), _, _) => ids.clone(),
        (None, Some(ids), _) => ids,
        (None, None, Some(y)) => y.distinct(),
        (None, None, None) => Vec::new(),
    };
    let mut undefined: Vec<u32> = data
        .true_labels
        .iter()
        .flatten()
        .copied()
        .filter(|c| !predefined.contains(c))
        .collect();
    undefined.sort_unstable();
    undefined.dedup();
    Ok(LoadedData {
        data,
        predefined,
        undefined,
    })
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent seed for sub-run `stream` of a master seed.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    splitmix64(master ^ splitmix64(stream))
}

fn sampler_config(config: &RunConfig, data: &Dataset<f64>, seed: u64) -> Result<SamplerConfig<f64>> {
    let s = &config.sampler;
    let hyper = match &s.hyper {
        None => NiwHyper::empirical(data.as_row_major(), data.dim())?,
        Some(h) => {
            let lambda0 = SymMatrix::from_rows(&h.lambda0)
                .ok_or_else(|| Error::InvalidConfig("sampler.hyper.lambda0: not a square matrix".into()))?;
            NiwHyper::new(h.m0.clone(), lambda0, h.kappa0, h.nu0)?
        }
    };
    let c = SamplerConfig {
        alpha: s.alpha,
        hyper,
        n_iterations: s.n_iterations,
        n_burn_in: s.n_burn_in,
        seed,
        init: s.init,
        random_scan: s.random_scan,
    };
    c.validate()?;
    Ok(c)
}

/// Output of one model fit on the full (transductive) point set.
#[derive(Debug, Clone)]
pub enum MethodFit {
    Sampler {
        fit: FitResult<f64>,
        winner: usize,
    },
    Ssgmm(SsgmmFit<f64>),
}

impl MethodFit {
    /// Cluster index per point.
    pub fn assignments(&self) -> &[usize] {
        match self {
            MethodFit::Sampler { fit, .. } => &fit.assignments,
            MethodFit::Ssgmm(f) => &f.assignments,
        }
    }

    /// Label per point after the cluster-to-label mapping (`0` = undefined).
    pub fn mapped_labels(&self) -> Vec<u32> {
        match self {
            MethodFit::Sampler { fit, .. } => fit.mapped_labels.clone(),
            MethodFit::Ssgmm(f) => f.mapped_labels(),
        }
    }

    pub fn k(&self) -> usize {
        match self {
            MethodFit::Sampler { fit, .. } => fit.k(),
            MethodFit::Ssgmm(f) => f.params.k(),
        }
    }

    /// Labels used for ARI. For `igmm` these are the raw cluster ids; for
    /// the semi-supervised methods clusters sharing a tag are merged and
    /// untagged clusters stay distinct.
    pub fn scoring_labels(&self, method: Method) -> Vec<u64> {
        match (self, method) {
            (MethodFit::Sampler { fit, .. }, Method::Igmm) => fit.assignments.iter().map(|&k| k as u64).collect(),
            (MethodFit::Sampler { fit, .. }, _) => fit.evaluation_labels(),
            (MethodFit::Ssgmm(f), _) => f.evaluation_labels(),
        }
    }
}

/// Fits `method` to `data` with observed labels `labels`.
pub fn fit_method(
    config: &RunConfig,
    data: &Dataset<f64>,
    labels: &Labels,
    predefined: &[u32],
    seed: u64,
) -> Result<MethodFit> {
    match config.method {
        Method::Ssigmm | Method::Igmm => {
            let sc = sampler_config(config, data, seed)?;
            let zeros;
            let labels = if config.method == Method::Igmm {
                zeros = Labels::unlabeled(data.n());
                &zeros
            } else {
                labels
            };
            let multi = fit_chains(data, labels, &sc, config.n_chains)?;
            Ok(MethodFit::Sampler {
                fit: multi.result,
                winner: multi.winner,
            })
        }
        Method::Ssgmm => {
            let k = config.em.k.unwrap_or(predefined.len().max(labels.distinct().len()).max(1));
            let em = EmSettings {
                max_iter: config.em.max_iter,
                tol: config.em.tol,
                seed,
            };
            Ok(MethodFit::Ssgmm(ssgmm_fit(data, labels, k, em)?))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    /// 1-based fold number; `0` for a single fit on the whole dataset.
    pub fold: usize,
    pub n_test: usize,
    pub n_labeled: usize,
    pub ari: Option<f64>,
    pub undefined_detection_rate: Option<f64>,
    pub k_final: usize,
    /// Clusters carrying a predefined label whose members are mostly
    /// undefined-class points (over all points, train and test).
    pub tagged_undefined_majority: Option<usize>,
    pub best_log_joint: Option<f64>,
    pub winning_chain: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub method: Method,
    /// Mean over folds for `crossval`.
    pub ari: Option<f64>,
    /// Mean over folds for `crossval`.
    pub k_final: f64,
    /// `null` for `igmm`, which never maps clusters to labels.
    pub undefined_detection_rate: Option<f64>,
    pub per_fold: Vec<FoldReport>,
    pub seed: u64,
    pub config_echo: RunConfig,
}

impl Report {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// Scores `fit` on the points in `eval` (all points when `None`).
fn score_fold(
    method: Method,
    fold: usize,
    fit: &MethodFit,
    loaded: &LoadedData,
    labels: &Labels,
    eval: Option<&[usize]>,
) -> Result<FoldReport> {
    let data = &loaded.data;
    let all: Vec<usize>;
    let eval = match eval {
        Some(e) => e,
        None => {
            all = (0..data.n()).collect();
            &all
        }
    };
    let mut report = FoldReport {
        fold,
        n_test: eval.len(),
        n_labeled: labels.n_labeled(),
        ari: None,
        undefined_detection_rate: None,
        k_final: fit.k(),
        tagged_undefined_majority: None,
        best_log_joint: None,
        winning_chain: None,
    };
    if let MethodFit::Sampler { fit: f, winner } = fit {
        report.best_log_joint = Some(f.trace.best.log_joint);
        report.winning_chain = Some(*winner);
    }
    if let Some(truth) = &data.true_labels {
        let scoring = fit.scoring_labels(method);
        let t: Vec<u32> = eval.iter().map(|&i| truth[i]).collect();
        let p: Vec<u64> = eval.iter().map(|&i| scoring[i]).collect();
        if t.len() >= 2 {
            report.ari = Some(ari(&t, &p)?);
        }
        if method != Method::Igmm {
            let mapped = fit.mapped_labels();
            let m: Vec<u32> = eval.iter().map(|&i| mapped[i]).collect();
            report.undefined_detection_rate = Some(undefined_detection_rate(&t, &m, &loaded.undefined)?);
            report.tagged_undefined_majority = Some(tagged_clusters_with_undefined_majority(
                truth,
                fit.assignments(),
                &mapped,
                &loaded.undefined,
            )?);
        }
    }
    Ok(report)
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let v: Vec<f64> = values.collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn effective(config: &RunConfig, seed: u64) -> RunConfig {
    let mut echo = config.clone();
    echo.seed = Some(seed);
    echo
}

/// Result of a single fit on the whole dataset.
#[derive(Debug, Clone)]
pub struct FitRun {
    pub report: Report,
    pub fit: MethodFit,
    pub labels: Labels,
    pub loaded: LoadedData,
}

/// Fits on every point. Observed labels come from the CSV `label` column, or
/// for synthetic data from labeling `cv.label_fraction` of each predefined
/// class.
pub fn run_fit(config: &RunConfig, seed: u64) -> Result<FitRun> {
    config.validate()?;
    let loaded = load_data(config)?;
    let data = &loaded.data;
    let labels = match (&data.labels, &data.true_labels) {
        (Some(y), _) => y.clone(),
        (None, Some(truth)) if config.synth.is_some() => {
            mask_labels(truth, config.cv.label_fraction, &loaded.predefined, derive_seed(seed, 0))?
        }
        _ => Labels::unlabeled(data.n()),
    };
    let fit = fit_method(config, data, &labels, &loaded.predefined, derive_seed(seed, 1))?;
    let fold = score_fold(config.method, 0, &fit, &loaded, &labels, None)?;
    let report = Report {
        command: "fit".into(),
        method: config.method,
        ari: fold.ari,
        k_final: fold.k_final as f64,
        undefined_detection_rate: fold.undefined_detection_rate,
        per_fold: vec![fold],
        seed,
        config_echo: effective(config, seed),
    };
    Ok(FitRun {
        report,
        fit,
        labels,
        loaded,
    })
}

/// One cross-validation fold's fit, kept for inspection.
#[derive(Debug, Clone)]
pub struct FoldRun {
    pub fold: usize,
    pub labels: Labels,
    pub test_indices: Vec<usize>,
    pub fit: MethodFit,
}

#[derive(Debug, Clone)]
pub struct CrossvalRun {
    pub report: Report,
    pub folds: Vec<FoldRun>,
    pub loaded: LoadedData,
}

/// Transductive k-fold protocol: each fold's model sees every point, labels
/// only on a fraction of the training folds, and is scored on the held-out
/// fold. Splits use `seed`; fold `f` samples with `derive_seed(seed, f)`.
pub fn run_crossval(config: &RunConfig, seed: u64) -> Result<CrossvalRun> {
    config.validate()?;
    let loaded = load_data(config)?;
    let truth = loaded
        .data
        .true_labels
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("crossval needs ground-truth classes (true_class column)".into()))?;
    let splits = make_cv_splits(truth, config.cv.n_folds, config.cv.label_fraction, &loaded.predefined, seed)?;
    let folds: Vec<(FoldRun, FoldReport)> = splits
        .into_par_iter()
        .map(|split| {
            let fit = fit_method(
                config,
                &loaded.data,
                &split.labels,
                &loaded.predefined,
                derive_seed(seed, split.fold as u64),
            )?;
            let rep = score_fold(config.method, split.fold, &fit, &loaded, &split.labels, Some(&split.test_indices))?;
            Ok((
                FoldRun {
                    fold: split.fold,
                    labels: split.labels,
                    test_indices: split.test_indices,
                    fit,
                },
                rep,
            ))
        })
        .collect::<Result<_>>()?;
    let (runs, per_fold): (Vec<FoldRun>, Vec<FoldReport>) = folds.into_iter().unzip();
    let report = Report {
        command: "crossval".into(),
        method: config.method,
        ari: mean(per_fold.iter().filter_map(|f| f.ari)),
        k_final: mean(per_fold.iter().map(|f| f.k_final as f64)).unwrap_or(0.0),
        undefined_detection_rate: mean(per_fold.iter().filter_map(|f| f.undefined_detection_rate)),
        per_fold,
        seed,
        config_echo: effective(config, seed),
    };
    Ok(CrossvalRun {
        report,
        folds: runs,
        loaded,
    })
}

fn write_confusion(path: &Path, truth: &[u32], scoring: &[u64], idx: &[usize]) -> Result<()> {
    let t: Vec<u32> = idx.iter().map(|&i| truth[i]).collect();
    let p: Vec<u64> = idx.iter().map(|&i| scoring[i]).collect();
    fs::write(path, confusion(&t, &p)?.to_csv())?;
    Ok(())
}

/// Writes `report.json`, `assignments.csv`, `trace.csv` (sampler methods)
/// and `confusion.csv` (when ground truth is present) into `dir`.
pub fn write_fit_outputs(dir: &Path, run: &FitRun) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mapped = run.fit.mapped_labels();
    crate::data::write_assignments(dir.join("assignments.csv"), run.fit.assignments(), &mapped)?;
    if let MethodFit::Sampler { fit, .. } = &run.fit {
        let mut trace = String::from("iteration,k,log_joint\n");
        for r in &fit.trace.records {
            trace.push_str(&format!("{},{},{}\n", r.iteration, r.k, r.log_joint));
        }
        fs::write(dir.join("trace.csv"), trace)?;
    }
    if let Some(truth) = &run.loaded.data.true_labels {
        let all: Vec<usize> = (0..truth.len()).collect();
        write_confusion(&dir.join("confusion.csv"), truth, &run.fit.scoring_labels(run.report.method), &all)?;
    }
    fs::write(dir.join("report.json"), run.report.to_json()?)?;
    Ok(())
}

/// Writes `report.json` and one `confusion_fold{f}.csv` per fold (test
/// points only) into `dir`.
pub fn write_crossval_outputs(dir: &Path, run: &CrossvalRun) -> Result<()> {
    fs::create_dir_all(dir)?;
    if let Some(truth) = &run.loaded.data.true_labels {
        for f in &run.folds {
            let scoring = f.fit.scoring_labels(run.report.method);
            write_confusion(&dir.join(format!("confusion_fold{}.csv", f.fold)), truth, &scoring, &f.test_indices)?;
        }
    }
    fs::write(dir.join("report.json"), run.report.to_json()?)?;
    Ok(())
}
