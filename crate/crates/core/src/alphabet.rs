//! Photon-count alphabets.
//!
//! Each alphabet of size `m ∈ {2, 4, 8}` partitions the photon numbers into
//! `m` contiguous regions around a center `c` (the rounded mean photon
//! number). With `h = m/2 − 1` the lowest letter covers `n ≤ c − h`, the
//! highest covers `n ≥ c − h + m − 1`, and every letter in between is a
//! single photon number:
//!
//! | m | letter 0   | inner letters      | letter m−1 |
//! |---|------------|--------------------|------------|
//! | 2 | `n ≤ c`    | none               | `n ≥ c+1`  |
//! | 4 | `n ≤ c−1`  | `c`, `c+1`         | `n ≥ c+2`  |
//! | 8 | `n ≤ c−3`  | `c−2` ..= `c+3`    | `n ≥ c+4`  |
//!
//! Letters carry their natural binary code, so letter 2 of the quaternary
//! alphabet reads `10`. A binary tie `n = c` falls into letter 0, which
//! makes every alphabet a coarsening of the next larger one.

use std::fmt;

use crate::entropy::shannon_entropy;
use crate::error::{Error, Result};
use crate::photon_stats::{build_distribution, PhotonDistribution, TmccState};

/// Number of letters in an alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AlphabetSize {
    Binary,
    Quaternary,
    Octuple,
}

impl AlphabetSize {
    pub const ALL: [AlphabetSize; 3] = [Self::Binary, Self::Quaternary, Self::Octuple];

    pub fn letters(self) -> usize {
        match self {
            Self::Binary => 2,
            Self::Quaternary => 4,
            Self::Octuple => 8,
        }
    }

    pub fn bits_per_letter(self) -> u32 {
        match self {
            Self::Binary => 1,
            Self::Quaternary => 2,
            Self::Octuple => 3,
        }
    }
}

impl TryFrom<usize> for AlphabetSize {
    type Error = Error;

    fn try_from(m: usize) -> Result<Self> {
        match m {
            2 => Ok(Self::Binary),
            4 => Ok(Self::Quaternary),
            8 => Ok(Self::Octuple),
            other => Err(Error::Validation(format!(
                "alphabet size must be 2, 4 or 8, got {other}"
            ))),
        }
    }
}

impl fmt::Display for AlphabetSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letters())
    }
}

/// One letter of an alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Letter {
    index: u8,
    width: u8,
}

impl Letter {
    pub fn new(index: usize, size: AlphabetSize) -> Result<Self> {
        if index >= size.letters() {
            return Err(Error::Validation(format!(
                "letter {index} out of range for a {size}-letter alphabet"
            )));
        }
        Ok(Self {
            index: index as u8,
            width: size.bits_per_letter() as u8,
        })
    }

    pub fn index(self) -> usize {
        self.index as usize
    }

    /// Natural binary code, most significant bit first.
    pub fn bits(self) -> String {
        format!("{:0width$b}", self.index, width = self.width as usize)
    }

    /// Number of differing code bits between two letters.
    pub fn hamming(self, other: Letter) -> u32 {
        (self.index ^ other.index).count_ones()
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.bits())
    }
}

/// Inclusive photon-number range of one letter; `hi = None` is unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Region {
    pub lo: u64,
    pub hi: Option<u64>,
}

impl Region {
    pub fn contains(&self, n: u64) -> bool {
        n >= self.lo && self.hi.is_none_or(|hi| n <= hi)
    }
}

/// An alphabet of a given size centered on the rounded mean photon number.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlphabetSpec {
    size: AlphabetSize,
    center: u64,
}

impl AlphabetSpec {
    pub fn new(size: AlphabetSize, center: u64) -> Self {
        Self { size, center }
    }

    /// Alphabet centered on the rounded mean of `state`.
    pub fn for_state(size: AlphabetSize, state: &TmccState) -> Result<Self> {
        let mean = build_distribution(state)?.mean();
        Ok(Self::new(size, center_from_mean(mean)?))
    }

    pub fn size(&self) -> AlphabetSize {
        self.size
    }

    pub fn center(&self) -> u64 {
        self.center
    }

    // Photon number at which letter 0 ends, as a signed offset.
    fn low_edge(&self) -> i64 {
        self.center as i64 - (self.size.letters() as i64 / 2 - 1)
    }

    pub fn letter_index(&self, n: u64) -> usize {
        let last = self.size.letters() as i64 - 1;
        (n as i64 - self.low_edge()).clamp(0, last) as usize
    }

    /// Photon-number region of letter `index`, or `None` when the letter
    /// has no nonnegative support (low center, large alphabet).
    pub fn region(&self, index: usize) -> Option<Region> {
        let m = self.size.letters();
        assert!(index < m, "letter index {index} out of range");
        let edge = self.low_edge();
        let lo = if index == 0 { 0 } else { edge + index as i64 };
        let hi = if index == m - 1 {
            None
        } else {
            Some(edge + index as i64)
        };
        match hi {
            Some(hi) if hi < 0 => None,
            Some(hi) => Some(Region {
                lo: lo.max(0) as u64,
                hi: Some(hi as u64),
            }),
            None => Some(Region {
                lo: lo.max(0) as u64,
                hi: None,
            }),
        }
    }

    /// Letters whose region contains no photon number.
    pub fn empty_letters(&self) -> Vec<usize> {
        (0..self.size.letters())
            .filter(|&x| self.region(x).is_none())
            .collect()
    }
}

/// Rounds the mean photon number half-up to the alphabet center.
pub fn center_from_mean(mean: f64) -> Result<u64> {
    if !mean.is_finite() || mean < 0.0 {
        return Err(Error::Domain(format!(
            "mean photon number must be finite and nonnegative, got {mean}"
        )));
    }
    Ok((mean + 0.5).floor() as u64)
}

pub fn encode_letter(n: u64, spec: &AlphabetSpec) -> Letter {
    Letter {
        index: spec.letter_index(n) as u8,
        width: spec.size.bits_per_letter() as u8,
    }
}

/// Probability of each letter under a photon-number distribution.
pub fn letter_pmf(dist: &PhotonDistribution, spec: &AlphabetSpec) -> Result<Vec<f64>> {
    let total: f64 = dist.probs().iter().sum();
    if (total - 1.0).abs() > crate::entropy::NORMALIZATION_SLACK {
        return Err(Error::Validation(format!(
            "photon distribution sums to {total}, expected 1"
        )));
    }
    let mut letters = vec![0.0; spec.size.letters()];
    for (n, p) in dist.probs().iter().enumerate() {
        letters[spec.letter_index(n as u64)] += p;
    }
    Ok(letters)
}

/// Information gained per photon-number measurement with an `m`-letter
/// alphabet centered on the rounded mean of `state`.
pub fn alphabet_entropy(state: &TmccState, size: AlphabetSize) -> Result<f64> {
    let dist = build_distribution(state)?;
    let spec = AlphabetSpec::new(size, center_from_mean(dist.mean())?);
    shannon_entropy(&letter_pmf(&dist, &spec)?)
}
