//! Classical component-count heuristics: the Kaiser eigenvalue rule and
//! Kneedle knee detection on scree curves.

use crate::error::{Error, Result};
use crate::matrix::SvdResult;
use crate::scalar::Scalar;

/// Per-component explained variance, nonincreasing.
#[derive(Clone, Debug, PartialEq)]
pub struct ScreeCurve<T> {
    pub variances: Vec<T>,
    pub normalized: bool,
}

impl<T: Scalar> ScreeCurve<T> {
    /// Wraps an arbitrary nonincreasing curve.
    pub fn new(variances: Vec<T>, normalized: bool) -> Result<Self> {
        if variances.iter().any(|v| !v.is_finite() || *v < T::zero()) {
            return Err(Error::domain("scree values must be finite and nonnegative"));
        }
        if variances.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::domain("scree values must be nonincreasing"));
        }
        Ok(Self {
            variances,
            normalized,
        })
    }

    pub fn len(&self) -> usize {
        self.variances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variances.is_empty()
    }
}

/// `λ_i²`, or `λ_i² / Σ λ_j²` when `normalized`.
pub fn scree<T: Scalar>(s: &SvdResult<T>, normalized: bool) -> Result<ScreeCurve<T>> {
    let mut variances: Vec<T> = s.singular_values().iter().map(|&l| l * l).collect();
    if normalized {
        let total: T = variances.iter().copied().sum();
        if !(total > T::zero()) {
            return Err(Error::Degenerate(
                "all singular values are zero; cannot normalize the scree curve".into(),
            ));
        }
        for v in &mut variances {
            *v /= total;
        }
    }
    Ok(ScreeCurve {
        variances,
        normalized,
    })
}

/// Number of correlation-matrix eigenvalues that are at least one.
pub fn kaiser<T: Scalar>(eigenvalues_of_correlation: &[T]) -> usize {
    eigenvalues_of_correlation
        .iter()
        .filter(|&&e| e >= T::one())
        .count()
}

pub const DEFAULT_SENSITIVITY: f64 = 1.0;

/// Kneedle knee detection on a decreasing convex curve.
///
/// Returns the number of components that precede the knee point, i.e. the
/// 0-based position of the knee along the curve. `None` means no local
/// maximum of the difference curve was confirmed by a subsequent drop below
/// its threshold.
///
/// Steps: min-max normalize both axes; flip the decreasing curve to
/// `1 − y`; take the difference `y' − x`; for each local maximum `i` set the
/// threshold `d_i − S·mean(Δx)`; accept the first maximum after which the
/// difference falls below its threshold before the next local maximum.
pub fn kneedle<T: Scalar>(curve: &ScreeCurve<T>, sensitivity: T) -> Result<Option<usize>> {
    let y = &curve.variances;
    let len = y.len();
    if len < 3 {
        return Err(Error::domain(format!(
            "kneedle needs at least 3 points, got {len}"
        )));
    }
    if !(sensitivity > T::zero()) {
        return Err(Error::domain("kneedle sensitivity must be positive"));
    }
    let (lo, hi) = y
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let span = hi - lo;
    if !(span > T::zero()) {
        return Ok(None);
    }
    let last = T::from_count(len - 1);
    let diff: Vec<T> = y
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let x_norm = T::from_count(i) / last;
            let y_norm = (v - lo) / span;
            (T::one() - y_norm) - x_norm
        })
        .collect();

    let maxima: Vec<usize> = (1..len - 1)
        .filter(|&i| diff[i] > diff[i - 1] && diff[i] >= diff[i + 1])
        .collect();
    // x is evenly spaced, so mean(Δx_norm) = 1/(len−1)
    let step = sensitivity / last;
    for (c, &i) in maxima.iter().enumerate() {
        let threshold = diff[i] - step;
        let end = maxima.get(c + 1).copied().unwrap_or(len);
        if (i + 1..end).any(|j| diff[j] < threshold) {
            return Ok(Some(i));
        }
    }
    Ok(None)
}
