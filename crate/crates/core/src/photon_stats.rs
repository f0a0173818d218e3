//! Photon-number statistics of a TMCC beam.
//!
//! A two-mode coherently correlated state expands over `|n⟩⊗|n⟩` only, with
//! amplitudes `λⁿ/n!` normalized by `I₀(2|λ|)`. Each mode therefore sees the
//! same marginal photon-number law
//!
//! ```text
//! P_n(λ) = λ^{2n} / (n!² I₀(2λ))
//! ```
//!
//! which is narrower than Poisson for every `λ > 0`. All sums over `n` are
//! truncated at a certified `n_max` and the kept mass is renormalized.

use crate::entropy::shannon_entropy;
use crate::error::{Error, Result};
use crate::special::{bessel_i0, ln_factorial, ln_factorial_table, BESSEL_I0_MAX_ARG};

/// Maximum probability mass allowed beyond `n_max`.
pub const TAIL_TOLERANCE: f64 = 1e-12;

/// Smallest truncation bound ever chosen automatically.
pub const MIN_N_MAX: usize = 25;

/// Largest accepted `|λ|`; the normalization needs `I₀(2|λ|)`.
pub const LAMBDA_MAX: f64 = BESSEL_I0_MAX_ARG / 2.0;

/// Source parameter `|λ|` of a TMCC beam together with its Fock truncation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TmccState {
    lambda: f64,
    n_max: usize,
}

impl TmccState {
    /// State with an automatically certified truncation bound.
    pub fn new(lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        Ok(Self {
            lambda,
            n_max: auto_n_max(lambda),
        })
    }

    /// State with a caller-chosen truncation bound. The bound is checked
    /// when the distribution is built.
    pub fn with_n_max(lambda: f64, n_max: usize) -> Result<Self> {
        check_lambda(lambda)?;
        if n_max < 1 {
            return Err(Error::Domain("n_max must be at least 1".into()));
        }
        Ok(Self { lambda, n_max })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn distribution(&self) -> Result<PhotonDistribution> {
        build_distribution(self)
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..=LAMBDA_MAX).contains(&lambda) {
        return Err(Error::Domain(format!(
            "lambda must lie in [0, {LAMBDA_MAX}], got {lambda}"
        )));
    }
    Ok(())
}

/// Truncated, renormalized probability mass function over photon numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonDistribution {
    probs: Vec<f64>,
    tail_mass: f64,
}

impl PhotonDistribution {
    /// Wraps an already truncated PMF. `probs` is renormalized; `tail_mass`
    /// is the mass that was cut off before renormalization.
    pub fn from_truncated(mut probs: Vec<f64>, tail_mass: f64) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Validation("empty distribution".into()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::Validation(
                "probabilities must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if total <= 0.0 {
            return Err(Error::Validation("distribution has zero mass".into()));
        }
        for p in &mut probs {
            *p /= total;
        }
        Ok(Self { probs, tail_mass })
    }

    /// The vacuum: zero photons with certainty.
    pub fn vacuum() -> Self {
        Self {
            probs: vec![1.0],
            tail_mass: 0.0,
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Probability of exactly `n` photons; zero beyond the truncation.
    pub fn pmf(&self, n: usize) -> f64 {
        self.probs.get(n).copied().unwrap_or(0.0)
    }

    pub fn n_max(&self) -> usize {
        self.probs.len() - 1
    }

    /// Mass discarded by the truncation, recorded before renormalization.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }

    pub fn second_moment(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(n, p)| (n * n) as f64 * p)
            .sum()
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.second_moment() - mean * mean
    }

    /// Cumulative distribution with the last entry pinned to exactly 1.
    pub fn cdf(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = self
            .probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        if let Some(last) = cdf.last_mut() {
            *last = 1.0;
        }
        cdf
    }
}

/// `P_n(λ) = λ^{2n} / (n!² I₀(2λ))`, evaluated in log space.
pub fn photon_number_pmf(lambda: f64, n: u64) -> Result<f64> {
    check_lambda(lambda)?;
    if lambda == 0.0 {
        return Ok(if n == 0 { 1.0 } else { 0.0 });
    }
    let ln_norm = bessel_i0(2.0 * lambda)?.ln();
    let ln_p = 2.0 * n as f64 * lambda.ln() - 2.0 * ln_factorial(n) - ln_norm;
    Ok(ln_p.exp().min(1.0))
}

// Smallest n ≥ MIN_N_MAX whose tail Σ_{j>n} P_j is certified below the
// tolerance. Successive ratios P_{j+1}/P_j = λ²/(j+1)² decrease in j, so once
// r = λ²/(n+2)² < 1 the tail is bounded by P_{n+1}/(1 − r).
fn auto_n_max(lambda: f64) -> usize {
    if lambda == 0.0 {
        return MIN_N_MAX;
    }
    let ln_norm = bessel_i0(2.0 * lambda)
        .expect("lambda checked by caller")
        .ln();
    let ln_l2 = 2.0 * lambda.ln();
    let mut n = MIN_N_MAX;
    let mut ln_fact_next = ln_factorial(n as u64 + 1);
    loop {
        let next = (n + 1) as f64;
        let ratio = lambda * lambda / ((next + 1.0) * (next + 1.0));
        if ratio < 1.0 {
            let ln_p_next = next * ln_l2 - 2.0 * ln_fact_next - ln_norm;
            if ln_p_next.exp() / (1.0 - ratio) < TAIL_TOLERANCE {
                return n;
            }
        }
        n += 1;
        ln_fact_next += ((n + 1) as f64).ln();
    }
}

/// Truncated TMCC photon-number PMF with its recorded tail mass.
pub fn build_distribution(state: &TmccState) -> Result<PhotonDistribution> {
    let lambda = state.lambda;
    let n_max = state.n_max;
    if lambda == 0.0 {
        let mut probs = vec![0.0; n_max + 1];
        probs[0] = 1.0;
        return PhotonDistribution::from_truncated(probs, 0.0);
    }
    let ln_norm = bessel_i0(2.0 * lambda)?.ln();
    let ln_l2 = 2.0 * lambda.ln();
    let ln_p = |n: usize, ln_fact: f64| n as f64 * ln_l2 - 2.0 * ln_fact - ln_norm;

    let ln_fact = ln_factorial_table(n_max);
    let probs: Vec<f64> = (0..=n_max).map(|n| ln_p(n, ln_fact[n]).exp()).collect();

    // Sum the discarded terms explicitly until they stop contributing.
    let mut tail_mass = 0.0;
    let mut n = n_max;
    let mut lf = ln_fact[n_max];
    loop {
        n += 1;
        lf += (n as f64).ln();
        let p = ln_p(n, lf).exp();
        tail_mass += p;
        let past_peak = (n as f64) > lambda;
        if past_peak && (p <= tail_mass * 1e-17 || p < 1e-300) {
            break;
        }
    }
    if tail_mass > TAIL_TOLERANCE {
        return Err(Error::Truncation {
            lambda,
            n_max,
            tail_mass,
            limit: TAIL_TOLERANCE,
        });
    }
    PhotonDistribution::from_truncated(probs, tail_mass)
}

pub fn mean_photon_number(state: &TmccState) -> Result<f64> {
    Ok(build_distribution(state)?.mean())
}

pub fn second_moment(state: &TmccState) -> Result<f64> {
    Ok(build_distribution(state)?.second_moment())
}

/// Mandel parameter `Q = (Var − ⟨n⟩)/⟨n⟩`; negative for sub-Poisson light.
pub fn mandel_q(state: &TmccState) -> Result<f64> {
    let dist = build_distribution(state)?;
    let mean = dist.mean();
    if mean <= 0.0 {
        return Err(Error::Domain(
            "Mandel Q is undefined for zero mean photon number".into(),
        ));
    }
    Ok((dist.variance() - mean) / mean)
}

/// Entropy of the full photon-number distribution in bits: the information
/// gained when every photon count is its own letter.
pub fn max_info(state: &TmccState) -> Result<f64> {
    let dist = build_distribution(state)?;
    shannon_entropy(dist.probs())
}

#[cfg(test)]
mod tests {
    use super::*;

    // Direct summation with plain f64 products, independent of the log-space path.
    fn oracle_pmf(lambda: f64, n_terms: usize) -> Vec<f64> {
        let mut terms = Vec::with_capacity(n_terms);
        let mut t = 1.0_f64;
        for n in 0..n_terms {
            if n > 0 {
                t *= lambda * lambda / ((n * n) as f64);
            }
            terms.push(t);
        }
        let z: f64 = terms.iter().sum();
        terms.iter().map(|t| t / z).collect()
    }

    fn oracle_moment(lambda: f64, k: i32) -> f64 {
        oracle_pmf(lambda, 400)
            .iter()
            .enumerate()
            .map(|(n, p)| (n as f64).powi(k) * p)
            .sum()
    }

    #[test]
    fn pmf_vacuum() {
        assert_eq!(photon_number_pmf(0.0, 0).unwrap(), 1.0);
        assert_eq!(photon_number_pmf(0.0, 3).unwrap(), 0.0);
    }

    #[test]
    fn pmf_at_lambda_one() {
        let p0 = photon_number_pmf(1.0, 0).unwrap();
        let p1 = photon_number_pmf(1.0, 1).unwrap();
        let p2 = photon_number_pmf(1.0, 2).unwrap();
        assert!((p0 - 0.438_676_279_837_048_74).abs() < 1e-14);
        assert!((p1 - p0).abs() < 1e-15);
        assert!((p2 - 0.109_669_069_959_262_18).abs() < 1e-14);
    }

    #[test]
    fn pmf_rejects_negative_lambda() {
        assert!(matches!(photon_number_pmf(-1.0, 0), Err(Error::Domain(_))));
        assert!(TmccState::new(-0.5).is_err());
        assert!(TmccState::new(f64::INFINITY).is_err());
        assert!(TmccState::with_n_max(1.0, 0).is_err());
    }

    #[test]
    fn pmf_large_n_does_not_overflow() {
        let p = photon_number_pmf(50.0, 200).unwrap();
        assert!(p.is_finite() && p >= 0.0);
        let peak = photon_number_pmf(50.0, 50).unwrap();
        assert!(peak > 0.01 && peak < 1.0);
    }

    #[test]
    fn vacuum_distribution() {
        let dist = build_distribution(&TmccState::new(0.0).unwrap()).unwrap();
        assert_eq!(dist.pmf(0), 1.0);
        assert!(dist.probs()[1..].iter().all(|&p| p == 0.0));
        assert_eq!(dist.tail_mass(), 0.0);
    }

    #[test]
    fn explicit_truncation_matches_pointwise() {
        let state = TmccState::with_n_max(1.0, 30).unwrap();
        let dist = build_distribution(&state).unwrap();
        assert_eq!(dist.n_max(), 30);
        assert!(dist.tail_mass() < 1e-15);
        for n in 0..=30 {
            let direct = photon_number_pmf(1.0, n as u64).unwrap();
            assert!((dist.pmf(n) - direct).abs() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn short_truncation_is_rejected() {
        let state = TmccState::with_n_max(5.0, 8).unwrap();
        match build_distribution(&state) {
            Err(Error::Truncation {
                n_max, tail_mass, ..
            }) => {
                assert_eq!(n_max, 8);
                assert!(tail_mass > TAIL_TOLERANCE);
            }
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn auto_truncation_normalizes() {
        for lambda in [0.1, 0.5, 1.0, 2.0, 4.5, 5.0, 7.0, 10.0, 30.0, 100.0] {
            let state = TmccState::new(lambda).unwrap();
            assert!(state.n_max() >= MIN_N_MAX);
            let dist = build_distribution(&state).unwrap();
            let total: f64 = dist.probs().iter().sum();
            assert!((total - 1.0).abs() <= 1e-9, "lambda {lambda}: {total}");
            assert!(dist.tail_mass() < TAIL_TOLERANCE, "lambda {lambda}");
        }
    }

    #[test]
    fn moments_against_oracle() {
        let frozen = [
            (1.0, 0.697_774_657_964_008, -0.264_647_231_241_696_2),
            (3.0, 2.737_077_913_058_746, -0.448_899_685_811_170_35),
            (4.5, 4.242_104_656_828_669, -0.468_530_773_543_436_1),
        ];
        for (lambda, mean, q) in frozen {
            let state = TmccState::new(lambda).unwrap();
            let got_mean = mean_photon_number(&state).unwrap();
            assert!((got_mean - mean).abs() < 1e-12, "mean at {lambda}");
            assert!((got_mean - oracle_moment(lambda, 1)).abs() < 1e-12);
            let got_q = mandel_q(&state).unwrap();
            assert!((got_q - q).abs() < 1e-10, "Q at {lambda}: {got_q}");
        }
        assert_eq!(
            mean_photon_number(&TmccState::new(0.0).unwrap()).unwrap(),
            0.0
        );
    }

    #[test]
    fn second_moment_equals_lambda_squared() {
        assert_eq!(second_moment(&TmccState::new(0.0).unwrap()).unwrap(), 0.0);
        for lambda in [1.0, 3.0] {
            let got = second_moment(&TmccState::new(lambda).unwrap()).unwrap();
            let oracle = oracle_moment(lambda, 2);
            assert!((oracle - lambda * lambda).abs() < 1e-9);
            assert!((got - lambda * lambda).abs() < 1e-9, "{lambda}: {got}");
        }
    }

    #[test]
    fn mandel_q_zero_mean_is_domain_error() {
        let state = TmccState::new(0.0).unwrap();
        assert!(matches!(mandel_q(&state), Err(Error::Domain(_))));
    }

    #[test]
    fn max_info_values() {
        assert_eq!(max_info(&TmccState::new(0.0).unwrap()).unwrap(), 0.0);
        let h = max_info(&TmccState::new(1.0).unwrap()).unwrap();
        let oracle: f64 = oracle_pmf(1.0, 60)
            .iter()
            .filter(|p| **p > 0.0)
            .map(|p| -p * p.log2())
            .sum();
        assert!((h - oracle).abs() < 1e-12);
        assert!((h - 1.478_528_455_551_292_6).abs() < 1e-12);
    }

    #[test]
    fn cdf_ends_at_one() {
        let dist = build_distribution(&TmccState::new(2.0).unwrap()).unwrap();
        let cdf = dist.cdf();
        assert_eq!(*cdf.last().unwrap(), 1.0);
        assert!(cdf.windows(2).all(|w| w[0] <= w[1]));
    }
}
