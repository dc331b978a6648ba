use rand::Rng;

use crate::{Error, Result, Scalar};

/// Overflow-safe `log Σ exp(v_i)`. Entries equal to `-inf` carry no mass.
pub fn log_sum_exp<T: Scalar>(v: &[T]) -> Result<T> {
    let max = v.iter().copied().fold(T::neg_infinity(), T::max);
    if max == T::neg_infinity() {
        return Err(Error::AllNegInfinite);
    }
    let sum: T = v.iter().map(|&w| (w - max).exp()).sum();
    Ok(max + sum.ln())
}

/// Draws an index with probability proportional to `exp(log_weights[i])`.
pub fn sample_categorical<T: Scalar, R: Rng + ?Sized>(log_weights: &[T], rng: &mut R) -> Result<usize> {
    let total = log_sum_exp(log_weights)?;
    let u = T::lit(rng.random::<f64>());
    let mut cumulative = T::zero();
    let mut last_feasible = 0;
    for (i, &w) in log_weights.iter().enumerate() {
        if w == T::neg_infinity() {
            continue;
        }
        cumulative = cumulative + (w - total).exp();
        last_feasible = i;
        if u < cumulative {
            return Ok(i);
        }
    }
    // Round-off can leave the cumulative sum a hair below 1.
    Ok(last_feasible)
}
