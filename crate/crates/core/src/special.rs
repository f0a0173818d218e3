//! Special functions needed by the photon-number statistics.

use crate::error::{Error, Result};

/// Upper end of the argument range accepted by [`bessel_i0`].
pub const BESSEL_I0_MAX_ARG: f64 = 200.0;

/// Modified Bessel function of the first kind, order zero.
///
/// Summed from the power series `Σ (x/2)^{2k} / k!²`. Every term is
/// positive, so the partial sums carry no cancellation error and the
/// series is accurate to a few ulps over the whole accepted range
/// `0 ≤ x ≤ 200`.
pub fn bessel_i0(x: f64) -> Result<f64> {
    if !(0.0..=BESSEL_I0_MAX_ARG).contains(&x) {
        return Err(Error::Domain(format!(
            "bessel_i0 requires 0 <= x <= {BESSEL_I0_MAX_ARG}, got {x}"
        )));
    }
    let q = 0.25 * x * x;
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    let mut k = 0.0_f64;
    loop {
        k += 1.0;
        term *= q / (k * k);
        sum += term;
        // past the peak of the terms the ratio q/k² < 1 and shrinking
        if term < sum * 1e-17 && k * k > q {
            break;
        }
    }
    Ok(sum)
}

/// `ln(n!)` by direct accumulation of `ln k`.
pub fn ln_factorial(n: u64) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// `ln(k!)` for `k = 0..=n`, built incrementally.
pub(crate) fn ln_factorial_table(n: usize) -> Vec<f64> {
    let mut table = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    table.push(acc);
    for k in 1..=n {
        acc += (k as f64).ln();
        table.push(acc);
    }
    table
}
