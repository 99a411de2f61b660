//! Relevance measures: odds, Laplace smoothing, weight of evidence and
//! activation difference.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Laplace smoothing parameters: training-set size `N` and class count `K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Laplace {
    pub training_size: u64,
    pub classes: u32,
}

impl Laplace {
    pub fn new(training_size: u64, classes: u32) -> Result<Self> {
        if training_size < 1 || classes < 2 {
            return Err(Error::Validation(format!(
                "Laplace correction needs N >= 1 and K >= 2 (got N={training_size}, K={classes})"
            )));
        }
        Ok(Self { training_size, classes })
    }

    pub fn correct<T: Scalar>(&self, p: T) -> T {
        laplace_correct(p, self.training_size, self.classes)
    }
}

/// `p / (1 - p)`, defined for `0 <= p < 1`.
pub fn odds<T: Scalar>(p: T) -> Result<T> {
    if !(p >= T::zero() && p < T::one()) {
        return Err(Error::Domain(format!("odds undefined for probability {p}")));
    }
    Ok(p / (T::one() - p))
}

/// `(pN + 1) / (N + K)`; maps `[0, 1]` strictly inside `(0, 1)`.
pub fn laplace_correct<T: Scalar>(p: T, training_size: u64, classes: u32) -> T {
    let n = T::of(training_size as f64);
    let k = T::of(classes as f64);
    (p * n + T::one()) / (n + k)
}

fn log2_odds<T: Scalar>(p: T) -> Result<T> {
    if !(p > T::zero() && p < T::one()) {
        return Err(Error::Domain(format!(
            "log-odds undefined for probability {p}; enable Laplace correction"
        )));
    }
    Ok(odds(p)?.log2())
}

/// `log2 odds(p_full) − log2 odds(p_removed)`, with both probabilities
/// Laplace-corrected first when `laplace` is given.
pub fn weight_of_evidence<T: Scalar>(p_full: T, p_removed: T, laplace: Option<Laplace>) -> Result<T> {
    for p in [p_full, p_removed] {
        if !(p >= T::zero() && p <= T::one()) {
            return Err(Error::Domain(format!("probability {p} outside [0, 1]")));
        }
    }
    let (a, b) = match laplace {
        Some(l) => (l.correct(p_full), l.correct(p_removed)),
        None => (p_full, p_removed),
    };
    Ok(log2_odds(a)? - log2_odds(b)?)
}

/// `g_full − g_removed`; positive when removing the window lowered the unit.
#[inline]
pub fn activation_difference<T: Scalar>(g_full: T, g_removed: T) -> T {
    g_full - g_removed
}
