//! Shannon entropy in bits.

use crate::error::{Error, Result};

/// Slack allowed on the total mass of a probability vector.
pub const NORMALIZATION_SLACK: f64 = 1e-9;

/// `−Σ p log₂ p` with the convention `0 · log 0 = 0`.
pub fn shannon_entropy(probs: &[f64]) -> Result<f64> {
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::Validation(
            "entropy requires finite nonnegative probabilities".into(),
        ));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_SLACK {
        return Err(Error::Validation(format!(
            "probabilities sum to {total}, expected 1"
        )));
    }
    let h: f64 = probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum();
    // rounding can leave -0.0 or a few ulps below zero for a degenerate input
    Ok(h.max(0.0))
}
