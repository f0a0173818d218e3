use thiserror::Error;

/// Errors produced by the analytic calculators, the simulator and the CLI.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A Fock-space truncation leaves more probability mass than allowed.
    #[error(
        "truncation at n_max = {n_max} leaves tail mass {tail_mass:e} (limit {limit:e}) for lambda = {lambda}; increase n_max"
    )]
    Truncation {
        lambda: f64,
        n_max: usize,
        tail_mass: f64,
        limit: f64,
    },

    /// Malformed input: non-normalized probabilities, bad configuration, length mismatches.
    #[error("validation error: {0}")]
    Validation(String),

    /// Root finding failed to converge.
    #[error("solver error: {0}")]
    Solver(String),
}

pub type Result<T> = std::result::Result<T, Error>;
