//! Intercept-resend (state cloning) attack on a TMCC channel.
//!
//! Eve counts the photons `n` in the mode travelling to Bob and re-emits a
//! fresh state prepared to carry `n` photons on average: either a TMCC beam
//! with parameter `λ_n` (chosen so that `⟨n⟩(λ_n) = n`) or a coherent beam
//! with Poisson statistics of mean `n`. Bob's count then fluctuates around
//! `n` and his letter can differ from Alice's.
//!
//! Two estimators of the letter error rate are provided:
//!
//! * [`Estimator::PaperLiteral`] sums the boundary-letter double sums and
//!   the interior-letter marginals exactly as the closed-form expression
//!   does, then applies the uniform `1/m` weighting. Interior letters are
//!   counted as always correct.
//! * [`Estimator::ProbabilityWeighted`] averages the exact probability that
//!   Bob's letter equals Alice's over Alice's photon-number distribution.
//!   This is the quantity the Monte Carlo sessions measure.

use std::fmt;

use crate::alphabet::{center_from_mean, AlphabetSize, AlphabetSpec};
use crate::error::{Error, Result};
use crate::photon_stats::{
    build_distribution, PhotonDistribution, TmccState, LAMBDA_MAX, MIN_N_MAX, TAIL_TOLERANCE,
};
use crate::special::ln_factorial;

/// Default tolerance on `⟨n⟩(λ_n) − n` for the resend-parameter search.
pub const DEFAULT_SOLVER_TOLERANCE: f64 = 1e-10;

const MAX_BISECTIONS: usize = 200;

/// Light source Eve uses to re-emit the intercepted pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ResendSource {
    Tmcc,
    Poisson,
}

impl fmt::Display for ResendSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Tmcc => "tmcc",
            Self::Poisson => "poisson",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Estimator {
    PaperLiteral,
    ProbabilityWeighted,
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::PaperLiteral => "paper-literal",
            Self::ProbabilityWeighted => "weighted",
        })
    }
}

/// Configuration of a cloning attack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CloneAttack {
    source: ResendSource,
    solver_tolerance: f64,
}

impl CloneAttack {
    pub fn new(source: ResendSource) -> Self {
        Self {
            source,
            solver_tolerance: DEFAULT_SOLVER_TOLERANCE,
        }
    }

    pub fn with_tolerance(source: ResendSource, solver_tolerance: f64) -> Result<Self> {
        if !(solver_tolerance > 0.0 && solver_tolerance <= 1e-3) {
            return Err(Error::Validation(format!(
                "solver tolerance must lie in (0, 1e-3], got {solver_tolerance}"
            )));
        }
        Ok(Self {
            source,
            solver_tolerance,
        })
    }

    pub fn source(&self) -> ResendSource {
        self.source
    }

    pub fn solver_tolerance(&self) -> f64 {
        self.solver_tolerance
    }

    /// Photon-number distribution Bob receives after Eve counted `n`.
    pub fn resend_pmf(&self, n: u64) -> Result<PhotonDistribution> {
        match self.source {
            ResendSource::Tmcc => {
                let lambda = lambda_for_target(n, self.solver_tolerance)?;
                build_distribution(&TmccState::new(lambda)?)
            }
            ResendSource::Poisson => poisson_distribution(n as f64),
        }
    }
}

/// `e^{−μ} μ^k / k!`, evaluated in log space.
pub fn poisson_pmf(mean: f64, k: u64) -> Result<f64> {
    if !mean.is_finite() || mean < 0.0 {
        return Err(Error::Domain(format!(
            "Poisson mean must be finite and nonnegative, got {mean}"
        )));
    }
    if mean == 0.0 {
        return Ok(if k == 0 { 1.0 } else { 0.0 });
    }
    Ok((-mean + k as f64 * mean.ln() - ln_factorial(k)).exp())
}

/// Poisson law truncated where the remaining tail is certified below
/// [`TAIL_TOLERANCE`].
pub fn poisson_distribution(mean: f64) -> Result<PhotonDistribution> {
    if mean == 0.0 {
        return Ok(PhotonDistribution::vacuum());
    }
    let mut probs = vec![poisson_pmf(mean, 0)?];
    let mut k = 0usize;
    loop {
        let next = poisson_pmf(mean, k as u64 + 1)?;
        // P_{j+1}/P_j = μ/(j+1) decreases in j
        let ratio = mean / (k + 2) as f64;
        if k >= MIN_N_MAX && ratio < 1.0 && next / (1.0 - ratio) < TAIL_TOLERANCE {
            let mut tail = 0.0;
            let mut j = k as u64 + 1;
            loop {
                let p = poisson_pmf(mean, j)?;
                tail += p;
                if p <= tail * 1e-17 || p < 1e-300 {
                    break;
                }
                j += 1;
            }
            return PhotonDistribution::from_truncated(probs, tail);
        }
        probs.push(next);
        k += 1;
    }
}

/// Source parameter `λ_n` whose TMCC mean photon number equals `n`.
/// `λ_0 = 0` exactly.
pub fn lambda_for_target(n: u64, tol: f64) -> Result<f64> {
    lambda_for_mean(n as f64, tol)
}

/// Inverts the mean photon number `⟨n⟩(λ)`, which is strictly increasing.
///
/// Bisection on `[0, upper]`, with `upper` doubled until the mean exceeds
/// the target; stops once the mean is within `tol` of the target.
pub fn lambda_for_mean(target: f64, tol: f64) -> Result<f64> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Validation(format!(
            "solver tolerance must be positive, got {tol}"
        )));
    }
    if !target.is_finite() || target < 0.0 {
        return Err(Error::Domain(format!(
            "target mean photon number must be finite and nonnegative, got {target}"
        )));
    }
    if target == 0.0 {
        return Ok(0.0);
    }
    let mean_at =
        |lambda: f64| -> Result<f64> { Ok(build_distribution(&TmccState::new(lambda)?)?.mean()) };

    let mut lo = 0.0;
    let mut hi = target.max(1.0);
    while mean_at(hi)? < target {
        if hi >= LAMBDA_MAX {
            return Err(Error::Solver(format!(
                "no lambda <= {LAMBDA_MAX} reaches mean photon number {target}"
            )));
        }
        lo = hi;
        hi = (2.0 * hi).min(LAMBDA_MAX);
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let mean = mean_at(mid)?;
        if (mean - target).abs() <= tol {
            return Ok(mid);
        }
        if mean < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            return Ok(0.5 * (lo + hi));
        }
    }
    Err(Error::Solver(format!(
        "bisection for mean {target} did not converge in {MAX_BISECTIONS} steps"
    )))
}

/// Resend distributions for every photon number Eve can observe from a state.
#[derive(Debug, Clone)]
pub struct ResendTable {
    attack: CloneAttack,
    table: Vec<PhotonDistribution>,
}

impl ResendTable {
    /// Covers `n = 0..=n_max`.
    pub fn new(attack: CloneAttack, n_max: usize) -> Result<Self> {
        let table = (0..=n_max as u64)
            .map(|n| attack.resend_pmf(n))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { attack, table })
    }

    pub fn attack(&self) -> CloneAttack {
        self.attack
    }

    pub fn get(&self, n: usize) -> &PhotonDistribution {
        &self.table[n]
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

/// Unconditional photon-number distribution of Eve's re-emitted beam,
/// `P̃_k = Σ_n P_n(λ) P_k(resend from n)`.
pub fn mixture_pmf(state: &TmccState, attack: CloneAttack) -> Result<PhotonDistribution> {
    let dist = build_distribution(state)?;
    let table = ResendTable::new(attack, dist.n_max())?;
    let len = (0..table.len())
        .map(|n| table.get(n).probs().len())
        .max()
        .unwrap_or(1);
    let mut probs = vec![0.0; len];
    let mut tail = dist.tail_mass();
    for (n, &pn) in dist.probs().iter().enumerate() {
        let resend = table.get(n);
        for (k, pk) in resend.probs().iter().enumerate() {
            probs[k] += pn * pk;
        }
        tail += pn * resend.tail_mass();
    }
    PhotonDistribution::from_truncated(probs, tail)
}

/// Outcome of the analytic QBER calculation for one `(λ, m, source)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QberReport {
    pub estimator: Estimator,
    pub size: AlphabetSize,
    pub center: u64,
    /// Probability-weighted: `P_B(x|x)`, the chance Bob reads letter `x`
    /// given Alice read `x` (1 for letters Alice never reads).
    /// Paper-literal: the per-letter contribution to the correctness sum.
    pub per_letter_correct: Vec<f64>,
    /// Letter error probability.
    pub p_err: f64,
    /// `p_err / log₂ m`.
    pub p_err_per_bit: f64,
    /// Expected fraction of differing code bits; probability-weighted only.
    pub p_err_per_bit_hamming: Option<f64>,
    /// Letters with no photon-number support at this center.
    pub empty_letters: Vec<usize>,
}

pub fn analytic_qber(
    state: &TmccState,
    size: AlphabetSize,
    attack: CloneAttack,
    estimator: Estimator,
) -> Result<QberReport> {
    let dist = build_distribution(state)?;
    let spec = AlphabetSpec::new(size, center_from_mean(dist.mean())?);
    let table = ResendTable::new(attack, dist.n_max())?;
    let report = match estimator {
        Estimator::ProbabilityWeighted => weighted(&dist, &spec, &table),
        Estimator::PaperLiteral => literal(&dist, &spec, &table),
    };
    Ok(report)
}

// joint[a][b] = P(Alice reads a, Bob reads b)
fn letter_joint(
    dist: &PhotonDistribution,
    spec: &AlphabetSpec,
    table: &ResendTable,
) -> Vec<Vec<f64>> {
    let m = spec.size().letters();
    let mut joint = vec![vec![0.0; m]; m];
    for (n, &pn) in dist.probs().iter().enumerate() {
        if pn == 0.0 {
            continue;
        }
        let a = spec.letter_index(n as u64);
        for (k, &pk) in table.get(n).probs().iter().enumerate() {
            joint[a][spec.letter_index(k as u64)] += pn * pk;
        }
    }
    joint
}

fn weighted(dist: &PhotonDistribution, spec: &AlphabetSpec, table: &ResendTable) -> QberReport {
    let size = spec.size();
    let m = size.letters();
    let bits = size.bits_per_letter() as f64;
    let joint = letter_joint(dist, spec, table);

    let mut correct = 0.0;
    let mut flipped_bits = 0.0;
    let mut per_letter_correct = Vec::with_capacity(m);
    for (a, row) in joint.iter().enumerate() {
        let sent: f64 = row.iter().sum();
        correct += row[a];
        per_letter_correct.push(if sent > 0.0 {
            (row[a] / sent).clamp(0.0, 1.0)
        } else {
            1.0
        });
        for (b, p) in row.iter().enumerate() {
            flipped_bits += p * ((a ^ b).count_ones() as f64);
        }
    }
    let p_err = (1.0 - correct).clamp(0.0, 1.0);
    QberReport {
        estimator: Estimator::ProbabilityWeighted,
        size,
        center: spec.center(),
        per_letter_correct,
        p_err,
        p_err_per_bit: p_err / bits,
        p_err_per_bit_hamming: Some((flipped_bits / bits).clamp(0.0, 1.0)),
        empty_letters: spec.empty_letters(),
    }
}

fn literal(dist: &PhotonDistribution, spec: &AlphabetSpec, table: &ResendTable) -> QberReport {
    let size = spec.size();
    let m = size.letters();
    let first = spec.region(0);
    let last = spec.region(m - 1).expect("the top letter is never empty");

    let mut per_letter_correct = vec![0.0; m];
    for (n, &pn) in dist.probs().iter().enumerate() {
        if pn == 0.0 {
            continue;
        }
        let n64 = n as u64;
        let resend = table.get(n);
        if let Some(r) = first.filter(|r| r.contains(n64)) {
            let kept: f64 = resend.probs().iter().take(r.hi.unwrap() as usize + 1).sum();
            per_letter_correct[0] += pn * kept;
        } else if last.contains(n64) {
            let kept: f64 = resend.probs().iter().skip(last.lo as usize).sum();
            per_letter_correct[m - 1] += pn * kept;
        } else {
            // interior letters: Alice's marginal only
            per_letter_correct[spec.letter_index(n64)] += pn;
        }
    }
    let total: f64 = per_letter_correct.iter().sum();
    let p_err = (1.0 - total / m as f64).clamp(0.0, 1.0);
    QberReport {
        estimator: Estimator::PaperLiteral,
        size,
        center: spec.center(),
        per_letter_correct,
        p_err,
        p_err_per_bit: p_err / size.bits_per_letter() as f64,
        p_err_per_bit_hamming: None,
        empty_letters: spec.empty_letters(),
    }
}
