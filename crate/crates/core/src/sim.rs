//! Monte Carlo key-distribution sessions.
//!
//! In every time slot Alice counts `n_A` photons in her TMCC mode. Without an
//! eavesdropper Bob counts the same number, since the state only contains
//! `|n⟩⊗|n⟩` terms. Under a cloning attack Eve counts `n_A` on Bob's mode and
//! Bob receives a count drawn from her re-emitted beam. Both parties encode
//! their counts against the same fixed center and the session reports the
//! resulting letter and bit error rates.
//!
//! Slot `i` draws its randomness from a ChaCha8 stream keyed by the session
//! seed with stream id `i`, so any slot can be replayed in isolation and a
//! session split across threads reproduces the sequential tallies exactly.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::alphabet::{center_from_mean, encode_letter, AlphabetSize, AlphabetSpec, Letter};
use crate::eavesdrop::{CloneAttack, ResendSource, ResendTable};
use crate::error::{Error, Result};
use crate::photon_stats::{build_distribution, PhotonDistribution, TmccState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Attack {
    None,
    Clone(ResendSource),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionConfig {
    pub lambda: f64,
    pub alphabet_size: AlphabetSize,
    pub slots: u64,
    pub seed: u64,
    pub attack: Attack,
}

impl SessionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.slots < 1 {
            return Err(Error::Validation(
                "a session needs at least one slot".into(),
            ));
        }
        TmccState::new(self.lambda).map(|_| ())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionResult {
    pub slots: u64,
    pub center: u64,
    pub letter_error_rate: f64,
    /// Letter error rate divided by `log₂ m`.
    pub bit_error_rate_eq14: f64,
    /// Fraction of differing code bits.
    pub bit_error_rate_hamming: f64,
    /// Frequency of each of Alice's letters.
    pub empirical_letter_freq: Vec<f64>,
    pub empirical_mean: f64,
    /// `None` when Alice never saw a photon.
    pub empirical_mandel_q: Option<f64>,
}

/// One simulated time slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotRecord {
    pub slot: u64,
    pub n_alice: u64,
    pub n_bob: u64,
    pub letter_alice: Letter,
    pub letter_bob: Letter,
}

/// Inverse-CDF sampler over photon numbers.
#[derive(Debug, Clone)]
pub struct InverseCdf {
    cdf: Vec<f64>,
}

impl InverseCdf {
    pub fn new(dist: &PhotonDistribution) -> Self {
        Self { cdf: dist.cdf() }
    }

    /// Smallest `n` with `CDF(n) > draw`.
    pub fn sample(&self, draw: f64) -> u64 {
        let n = self.cdf.partition_point(|&c| c <= draw);
        n.min(self.cdf.len() - 1) as u64
    }
}

pub fn sample_photon_number(dist: &PhotonDistribution, draw: f64) -> u64 {
    InverseCdf::new(dist).sample(draw)
}

/// Error rates between two letter streams.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyComparison {
    pub letter_error_rate: f64,
    pub bit_error_rate_eq14: f64,
    pub bit_error_rate_hamming: f64,
}

pub fn compare_keys(a: &[Letter], b: &[Letter], size: AlphabetSize) -> Result<KeyComparison> {
    if a.len() != b.len() {
        return Err(Error::Validation(format!(
            "key lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::Validation("cannot compare empty keys".into()));
    }
    let m = size.letters();
    if let Some(bad) = a.iter().chain(b).find(|l| l.index() >= m) {
        return Err(Error::Validation(format!(
            "letter {} is not part of a {m}-letter alphabet",
            bad.index()
        )));
    }
    let mismatches = a.iter().zip(b).filter(|(x, y)| x != y).count() as u64;
    let flipped: u64 = a.iter().zip(b).map(|(x, y)| x.hamming(*y) as u64).sum();
    Ok(rates(mismatches, flipped, a.len() as u64, size))
}

fn rates(mismatches: u64, flipped_bits: u64, slots: u64, size: AlphabetSize) -> KeyComparison {
    let bits = size.bits_per_letter() as f64;
    let letter = mismatches as f64 / slots as f64;
    KeyComparison {
        letter_error_rate: letter,
        bit_error_rate_eq14: letter / bits,
        bit_error_rate_hamming: flipped_bits as f64 / (slots as f64 * bits),
    }
}

/// Sample mean and Mandel parameter of a photon-count record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalStats {
    pub mean: f64,
    pub mandel_q: f64,
}

/// Uses the unbiased sample variance.
pub fn empirical_stats(counts: &[u64]) -> Result<EmpiricalStats> {
    if counts.len() < 2 {
        return Err(Error::Validation(
            "empirical statistics need at least two counts".into(),
        ));
    }
    let sum: u128 = counts.iter().map(|&n| n as u128).sum();
    let sum_sq: u128 = counts.iter().map(|&n| (n as u128) * (n as u128)).sum();
    let (mean, mandel_q) = moments(counts.len() as u64, sum, sum_sq);
    let mandel_q = mandel_q.ok_or_else(|| {
        Error::Domain("Mandel Q is undefined for an all-zero count record".into())
    })?;
    Ok(EmpiricalStats { mean, mandel_q })
}

fn moments(len: u64, sum: u128, sum_sq: u128) -> (f64, Option<f64>) {
    let n = len as u128;
    let mean = sum as f64 / len as f64;
    if sum == 0 || len < 2 {
        return (mean, None);
    }
    // exact integer numerator: N Σn² − (Σn)²
    let numer = n * sum_sq - sum * sum;
    let variance = numer as f64 / (n * (n - 1)) as f64;
    (mean, Some((variance - mean) / mean))
}

/// Exact integer tallies over a range of slots. Tallies of disjoint ranges
/// merge by addition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tally {
    pub slots: u64,
    pub letter_errors: u64,
    pub flipped_bits: u64,
    pub letter_counts: Vec<u64>,
    pub sum_n: u128,
    pub sum_n_sq: u128,
}

impl Tally {
    fn empty(letters: usize) -> Self {
        Self {
            slots: 0,
            letter_errors: 0,
            flipped_bits: 0,
            letter_counts: vec![0; letters],
            sum_n: 0,
            sum_n_sq: 0,
        }
    }

    fn record(&mut self, r: &SlotRecord) {
        self.slots += 1;
        if r.letter_alice != r.letter_bob {
            self.letter_errors += 1;
        }
        self.flipped_bits += r.letter_alice.hamming(r.letter_bob) as u64;
        self.letter_counts[r.letter_alice.index()] += 1;
        self.sum_n += r.n_alice as u128;
        self.sum_n_sq += (r.n_alice as u128) * (r.n_alice as u128);
    }

    pub fn merge(mut self, other: &Tally) -> Self {
        self.slots += other.slots;
        self.letter_errors += other.letter_errors;
        self.flipped_bits += other.flipped_bits;
        for (a, b) in self.letter_counts.iter_mut().zip(&other.letter_counts) {
            *a += b;
        }
        self.sum_n += other.sum_n;
        self.sum_n_sq += other.sum_n_sq;
        self
    }
}

/// A configured session with its samplers prepared.
#[derive(Debug, Clone)]
pub struct Session {
    config: SessionConfig,
    spec: AlphabetSpec,
    alice: InverseCdf,
    resend: Option<Vec<InverseCdf>>,
    key: <ChaCha8Rng as SeedableRng>::Seed,
}

impl Session {
    pub fn new(config: SessionConfig) -> Result<Self> {
        config.validate()?;
        let dist = build_distribution(&TmccState::new(config.lambda)?)?;
        let spec = AlphabetSpec::new(config.alphabet_size, center_from_mean(dist.mean())?);
        let resend = match config.attack {
            Attack::None => None,
            Attack::Clone(source) => {
                let table = ResendTable::new(CloneAttack::new(source), dist.n_max())?;
                Some(
                    (0..table.len())
                        .map(|n| InverseCdf::new(table.get(n)))
                        .collect(),
                )
            }
        };
        Ok(Self {
            config,
            spec,
            alice: InverseCdf::new(&dist),
            resend,
            key: ChaCha8Rng::seed_from_u64(config.seed).get_seed(),
        })
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn spec(&self) -> &AlphabetSpec {
        &self.spec
    }

    /// Replays slot `i`; depends only on the configuration and `i`.
    pub fn slot(&self, i: u64) -> SlotRecord {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(i);
        let draw_alice: f64 = rng.gen();
        let draw_bob: f64 = rng.gen();
        let n_alice = self.alice.sample(draw_alice);
        let n_bob = match &self.resend {
            None => n_alice,
            Some(table) => table[n_alice as usize].sample(draw_bob),
        };
        SlotRecord {
            slot: i,
            n_alice,
            n_bob,
            letter_alice: encode_letter(n_alice, &self.spec),
            letter_bob: encode_letter(n_bob, &self.spec),
        }
    }

    pub fn records(&self, range: Range<u64>) -> impl Iterator<Item = SlotRecord> + '_ {
        range.map(move |i| self.slot(i))
    }

    pub fn tally(&self, range: Range<u64>) -> Tally {
        let mut tally = Tally::empty(self.config.alphabet_size.letters());
        for r in self.records(range) {
            tally.record(&r);
        }
        tally
    }

    pub fn run(&self) -> SessionResult {
        self.finish(&self.tally(0..self.config.slots))
    }

    /// Splits the slots into `shards` contiguous ranges evaluated on
    /// separate threads. Output equals [`Session::run`] bit for bit.
    pub fn run_sharded(&self, shards: usize) -> SessionResult {
        let shards = (shards.max(1) as u64).min(self.config.slots);
        let per = self.config.slots.div_ceil(shards);
        let ranges: Vec<Range<u64>> = (0..shards)
            .map(|s| (s * per).min(self.config.slots)..((s + 1) * per).min(self.config.slots))
            .collect();
        let tallies: Vec<Tally> = std::thread::scope(|scope| {
            let handles: Vec<_> = ranges
                .into_iter()
                .map(|r| scope.spawn(move || self.tally(r)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("session shard panicked"))
                .collect()
        });
        let total = tallies.iter().fold(
            Tally::empty(self.config.alphabet_size.letters()),
            Tally::merge,
        );
        self.finish(&total)
    }

    pub fn finish(&self, tally: &Tally) -> SessionResult {
        let size = self.config.alphabet_size;
        let r = rates(tally.letter_errors, tally.flipped_bits, tally.slots, size);
        let (empirical_mean, empirical_mandel_q) =
            moments(tally.slots, tally.sum_n, tally.sum_n_sq);
        SessionResult {
            slots: tally.slots,
            center: self.spec.center(),
            letter_error_rate: r.letter_error_rate,
            bit_error_rate_eq14: r.bit_error_rate_eq14,
            bit_error_rate_hamming: r.bit_error_rate_hamming,
            empirical_letter_freq: tally
                .letter_counts
                .iter()
                .map(|&c| c as f64 / tally.slots as f64)
                .collect(),
            empirical_mean,
            empirical_mandel_q,
        }
    }
}

pub fn run_session(config: SessionConfig) -> Result<SessionResult> {
    Ok(Session::new(config)?.run())
}

pub fn run_session_sharded(config: SessionConfig, shards: usize) -> Result<SessionResult> {
    Ok(Session::new(config)?.run_sharded(shards))
}
