use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::math::{chol_factor, SymMatrix};
use crate::{Error, Result, Scalar};

/// One Gaussian component of a synthetic layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthComponent {
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
    pub class_id: u32,
    pub count: usize,
}

/// Layout of a synthetic benchmark. Several components may share a class id
/// (multimodal classes).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub components: Vec<SynthComponent>,
    #[serde(default)]
    pub undefined_class_ids: Vec<u32>,
    pub seed: u64,
}

const DEFAULT_LAYOUT: &str = include_str!("../../configs/synthetic_default.json");
const MOUSE_SURROGATE_LAYOUT: &str = include_str!("../../configs/mouse_surrogate.json");

impl SynthSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    /// Frozen 2-D layout: 10 components × 150 points, 8 classes. Classes 1
    /// and 2 are bimodal, 3–6 unimodal, 7 and 8 are never labeled.
    pub fn default_layout() -> Self {
        Self::from_json(DEFAULT_LAYOUT).expect("shipped layout is valid")
    }

    /// 4-D six-class layout with class sizes 716/956/903/292/66/127; classes
    /// 4–6 are never labeled.
    pub fn mouse_surrogate() -> Self {
        Self::from_json(MOUSE_SURROGATE_LAYOUT).expect("shipped layout is valid")
    }

    /// Looks up a shipped layout by name.
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "default" | "synthetic-default" => Some(Self::default_layout()),
            "mouse-surrogate" => Some(Self::mouse_surrogate()),
            _ => None,
        }
    }

    pub fn dim(&self) -> usize {
        self.components.first().map_or(0, |c| c.mean.len())
    }

    pub fn total_count(&self) -> usize {
        self.components.iter().map(|c| c.count).sum()
    }

    /// Distinct class ids that are not listed as undefined, ascending.
    pub fn predefined_class_ids(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self
            .components
            .iter()
            .map(|c| c.class_id)
            .filter(|id| !self.undefined_class_ids.contains(id))
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::InvalidConfig("components: must be non-empty".into()));
        }
        let dim = self.dim();
        if dim == 0 {
            return Err(Error::InvalidConfig("components[0].mean: must be non-empty".into()));
        }
        for (k, c) in self.components.iter().enumerate() {
            if c.mean.len() != dim {
                return Err(Error::InvalidConfig(format!(
                    "components[{k}].mean: expected {dim} entries, got {}",
                    c.mean.len()
                )));
            }
            if c.mean.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidConfig(format!("components[{k}].mean: non-finite entry")));
            }
            if c.class_id == 0 {
                return Err(Error::InvalidConfig(format!("components[{k}].class_id: must be positive")));
            }
            if c.count == 0 {
                return Err(Error::InvalidConfig(format!("components[{k}].count: must be >= 1")));
            }
            let cov = SymMatrix::from_rows(&c.cov)
                .filter(|m| m.dim() == dim)
                .ok_or_else(|| {
                    Error::InvalidConfig(format!("components[{k}].cov: expected a {dim}x{dim} matrix"))
                })?;
            if cov.max_asymmetry() > 1e-9 {
                return Err(Error::InvalidConfig(format!("components[{k}].cov: not symmetric")));
            }
            if chol_factor(&cov).is_err() {
                return Err(Error::InvalidConfig(format!(
                    "components[{k}].cov: not positive definite"
                )));
            }
        }
        Ok(())
    }
}

/// Draws every component's points in order with a generator seeded from
/// `spec.seed`. Rows carry their component's class id as the true label.
pub fn generate_synthetic<T: Scalar>(spec: &SynthSpec) -> Result<Dataset<T>> {
    spec.validate()?;
    let dim = spec.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut x = Vec::with_capacity(spec.total_count() * dim);
    let mut truth = Vec::with_capacity(spec.total_count());
    for c in &spec.components {
        let cov = SymMatrix::from_rows(&c.cov).expect("validated");
        let chol = chol_factor(&cov)?;
        for _ in 0..c.count {
            let z: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            let offset = chol.mul_vec(&z);
            x.extend(c.mean.iter().zip(&offset).map(|(m, o)| T::lit(m + o)));
            truth.push(c.class_id);
        }
    }
    Dataset::from_row_major(x, dim)?.with_true_labels(truth)
}
