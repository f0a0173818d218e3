//! Large-alphabet photon-number key distribution over two-mode coherently
//! correlated (TMCC) beams.
//!
//! The crate computes the photon-number statistics of a TMCC source, the
//! information carried by 2-, 4- and 8-letter photon-count alphabets, and the
//! error rate an intercept-resend eavesdropper introduces. A seeded Monte
//! Carlo simulator runs complete key-distribution sessions to cross-check
//! the analytic results.

pub mod alphabet;
pub mod cli;
pub mod eavesdrop;
pub mod entropy;
pub mod error;
pub mod photon_stats;
pub mod sim;
pub mod special;

pub use alphabet::{
    alphabet_entropy, center_from_mean, encode_letter, letter_pmf, AlphabetSize, AlphabetSpec,
    Letter,
};
pub use eavesdrop::{
    analytic_qber, lambda_for_mean, lambda_for_target, mixture_pmf, poisson_pmf, CloneAttack,
    Estimator, QberReport, ResendSource,
};
pub use entropy::shannon_entropy;
pub use error::{Error, Result};
pub use photon_stats::{
    build_distribution, mandel_q, max_info, mean_photon_number, photon_number_pmf, second_moment,
    PhotonDistribution, TmccState,
};

pub use sim::{
    compare_keys, empirical_stats, run_session, run_session_sharded, Attack, Session,
    SessionConfig, SessionResult,
};
pub use special::bessel_i0;
