//! Datasets, the synthetic benchmark generator, cross-validation splits and
//! CSV I/O.

mod csv_io;
mod cv;
mod synth;

pub use csv_io::{
    read_assignments, read_csv, read_csv_from, write_assignments, write_dataset_csv, AssignmentRows,
};
pub use cv::{make_cv_splits, mask_labels, CvFold};
pub use synth::{generate_synthetic, SynthComponent, SynthSpec};

use crate::partition::Labels;
use crate::{Error, Result, Scalar};

/// `N × D` observation matrix (row-major) with optional observed labels and
/// optional ground-truth classes.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    x: Vec<T>,
    n: usize,
    dim: usize,
    pub labels: Option<Labels>,
    pub true_labels: Option<Vec<u32>>,
    pub feature_names: Vec<String>,
}

impl<T: Scalar> Dataset<T> {
    /// Builds from row-major values. Rejects empty input and non-finite
    /// entries.
    pub fn from_row_major(x: Vec<T>, dim: usize) -> Result<Self> {
        if dim == 0 || x.is_empty() {
            return Err(Error::InvalidConfig("dataset needs N >= 1 and D >= 1".into()));
        }
        if x.len() % dim != 0 {
            return Err(Error::InvalidConfig(format!(
                "{} values do not form rows of width {dim}",
                x.len()
            )));
        }
        if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parse {
                row: pos / dim + 1,
                column: format!("f{}", pos % dim + 1),
                message: "non-finite value".into(),
            });
        }
        let n = x.len() / dim;
        Ok(Self {
            x,
            n,
            dim,
            labels: None,
            true_labels: None,
            feature_names: (1..=dim).map(|j| format!("f{j}")).collect(),
        })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidConfig("ragged rows".into()));
        }
        Self::from_row_major(rows.iter().flatten().copied().collect(), dim)
    }

    pub fn with_true_labels(mut self, t: Vec<u32>) -> Result<Self> {
        if t.len() != self.n {
            return Err(Error::LengthMismatch {
                left: self.n,
                right: t.len(),
            });
        }
        self.true_labels = Some(t);
        Ok(self)
    }

    pub fn with_labels(mut self, y: Labels) -> Result<Self> {
        if y.len() != self.n {
            return Err(Error::LengthMismatch {
                left: self.n,
                right: y.len(),
            });
        }
        self.labels = Some(y);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.x.chunks(self.dim)
    }

    pub fn as_row_major(&self) -> &[T] {
        &self.x
    }

    /// Observed labels, or all-unlabeled if none were given.
    pub fn labels_or_unlabeled(&self) -> Labels {
        self.labels.clone().unwrap_or_else(|| Labels::unlabeled(self.n))
    }

    pub fn cast<U: Scalar>(&self) -> Dataset<U> {
        Dataset {
            x: self.x.iter().map(|v| U::lit(v.as_f64())).collect(),
            n: self.n,
            dim: self.dim,
            labels: self.labels.clone(),
            true_labels: self.true_labels.clone(),
            feature_names: self.feature_names.clone(),
        }
    }
}
