use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::partition::Labels;
use crate::{Error, Result};

/// One transductive fold: the label vector the model sees, and the held-out
/// points on which metrics are computed.
#[derive(Debug, Clone, PartialEq)]
pub struct CvFold {
    /// 1-based fold number.
    pub fold: usize,
    pub labels: Labels,
    pub test_indices: Vec<usize>,
}

/// Stratified `n_folds`-fold splits. Each class's points are shuffled and
/// dealt round-robin into folds, so per-class fold sizes differ by at most
/// one. For every fold, `round(label_fraction · n_c)` training points of each
/// predefined class `c` keep their label; everything else, including the whole
/// test fold and all undefined-class points, is unlabeled.
pub fn make_cv_splits(
    true_labels: &[u32],
    n_folds: usize,
    label_fraction: f64,
    predefined_class_ids: &[u32],
    seed: u64,
) -> Result<Vec<CvFold>> {
    if n_folds < 2 {
        return Err(Error::InvalidConfig(format!("n_folds must be >= 2, got {n_folds}")));
    }
    if !(0.0..=1.0).contains(&label_fraction) {
        return Err(Error::InvalidConfig(format!(
            "label_fraction must lie in [0, 1], got {label_fraction}"
        )));
    }
    let mut by_class: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, &c) in true_labels.iter().enumerate() {
        by_class.entry(c).or_default().push(i);
    }
    for (&class, members) in &by_class {
        if members.len() < n_folds {
            return Err(Error::ClassTooSmall {
                class,
                count: members.len(),
                folds: n_folds,
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0usize; true_labels.len()];
    // Rotating the starting fold per class keeps overall fold sizes balanced.
    let mut start = 0;
    for members in by_class.values() {
        let mut shuffled = members.clone();
        shuffled.shuffle(&mut rng);
        for (pos, &i) in shuffled.iter().enumerate() {
            fold_of[i] = (start + pos) % n_folds;
        }
        start = (start + shuffled.len()) % n_folds;
    }

    let mut folds = Vec::with_capacity(n_folds);
    for f in 0..n_folds {
        let test_indices: Vec<usize> = (0..true_labels.len()).filter(|&i| fold_of[i] == f).collect();
        let mut y = vec![0u32; true_labels.len()];
        for (&class, members) in &by_class {
            if class == 0 || !predefined_class_ids.contains(&class) {
                continue;
            }
            let mut train: Vec<usize> = members.iter().copied().filter(|&i| fold_of[i] != f).collect();
            let n_label = (label_fraction * train.len() as f64).round() as usize;
            train.shuffle(&mut rng);
            for &i in &train[..n_label] {
                y[i] = class;
            }
        }
        folds.push(CvFold {
            fold: f + 1,
            labels: Labels::new(y),
            test_indices,
        });
    }
    Ok(folds)
}

/// Labels `round(label_fraction · n_c)` randomly chosen points of every
/// predefined class `c`; all other points stay unlabeled.
pub fn mask_labels(true_labels: &[u32], label_fraction: f64, predefined_class_ids: &[u32], seed: u64) -> Result<Labels> {
    if !(0.0..=1.0).contains(&label_fraction) {
        return Err(Error::InvalidConfig(format!(
            "label_fraction must lie in [0, 1], got {label_fraction}"
        )));
    }
    let mut by_class: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, &c) in true_labels.iter().enumerate() {
        if c > 0 && predefined_class_ids.contains(&c) {
            by_class.entry(c).or_default().push(i);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut y = vec![0u32; true_labels.len()];
    for (&class, members) in &by_class {
        let mut members = members.clone();
        let n_label = (label_fraction * members.len() as f64).round() as usize;
        members.shuffle(&mut rng);
        for &i in &members[..n_label] {
            y[i] = class;
        }
    }
    Ok(Labels::new(y))
}
