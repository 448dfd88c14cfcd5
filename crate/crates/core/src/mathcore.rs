//! Bit strings and the information measures used throughout the crate.
//!
//! All logarithms are base 2, and `0 · log 0` is taken to be `0`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};

/// Normalization tolerance for [`Distribution`].
pub const PROB_TOLERANCE: f64 = 1e-12;

/// A fixed-length binary string.
///
/// Bits are indexed left to right, so `"0110".parse()` has bit 1 at index 1.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct BitString {
    bits: Vec<bool>,
}

impl BitString {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            bits: vec![false; len],
        }
    }

    pub fn ones(len: usize) -> Self {
        Self {
            bits: vec![true; len],
        }
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        Self {
            bits: (0..len).map(|_| rng.gen::<bool>()).collect(),
        }
    }

    /// The low `width` bits of `value`, most significant first.
    pub fn from_u64(value: u64, width: usize) -> Self {
        assert!(width <= 64, "width {width} exceeds 64 bits");
        Self {
            bits: (0..width)
                .rev()
                .map(|shift| (value >> shift) & 1 == 1)
                .collect(),
        }
    }

    /// Reads the bits as a big-endian unsigned integer. Panics above 64 bits.
    pub fn to_u64(&self) -> u64 {
        assert!(self.len() <= 64, "{} bits do not fit in u64", self.len());
        self.bits
            .iter()
            .fold(0u64, |acc, &b| (acc << 1) | u64::from(b))
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, index: usize) -> bool {
        self.bits[index]
    }

    pub fn set(&mut self, index: usize, value: bool) {
        self.bits[index] = value;
    }

    pub fn flip(&mut self, index: usize) {
        self.bits[index] = !self.bits[index];
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.bits.iter().copied()
    }

    pub fn xor(&self, other: &BitString) -> Result<BitString> {
        ensure_same_len(self, other)?;
        Ok(BitString {
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(a, b)| a ^ b)
                .collect(),
        })
    }

    /// `self ∥ other`.
    pub fn concat(&self, other: &BitString) -> BitString {
        let mut bits = Vec::with_capacity(self.len() + other.len());
        bits.extend_from_slice(&self.bits);
        bits.extend_from_slice(&other.bits);
        BitString { bits }
    }

    pub fn slice(&self, start: usize, end: usize) -> BitString {
        BitString {
            bits: self.bits[start..end].to_vec(),
        }
    }

    pub fn weight(&self) -> usize {
        hamming_weight(self)
    }

    /// Packs the bits MSB-first into bytes, zero-padding the final byte.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.bits
            .chunks(8)
            .map(|chunk| {
                chunk
                    .iter()
                    .enumerate()
                    .fold(0u8, |acc, (i, &b)| acc | (u8::from(b) << (7 - i)))
            })
            .collect()
    }

    pub fn from_bytes(bytes: &[u8], len: usize) -> Result<BitString> {
        let needed = len.div_ceil(8);
        if bytes.len() != needed {
            return Err(Error::LengthMismatch {
                expected: needed * 8,
                actual: bytes.len() * 8,
            });
        }
        let bits: Vec<bool> = (0..len)
            .map(|i| bytes[i / 8] & (0x80 >> (i % 8)) != 0)
            .collect();
        // padding bits must be zero so hex encoding stays canonical
        if (len..needed * 8).any(|i| bytes[i / 8] & (0x80 >> (i % 8)) != 0) {
            return Err(Error::InvalidParameter(
                "non-zero padding bits in packed bit string".into(),
            ));
        }
        Ok(BitString { bits })
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.to_bytes())
    }

    pub fn from_hex(text: &str, len: usize) -> Result<BitString> {
        let bytes = hex::decode(text).map_err(|e| Error::Parse {
            context: "hex string".into(),
            message: e.to_string(),
        })?;
        Self::from_bytes(&bytes, len)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse {
                    context: "bit string".into(),
                    message: format!("unexpected character {other:?}"),
                }),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BitString { bits })
    }
}

impl FromIterator<bool> for BitString {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        BitString {
            bits: iter.into_iter().collect(),
        }
    }
}

fn ensure_same_len(a: &BitString, b: &BitString) -> Result<()> {
    if a.len() == b.len() {
        Ok(())
    } else {
        Err(Error::LengthMismatch {
            expected: a.len(),
            actual: b.len(),
        })
    }
}

pub fn hamming_weight(s: &BitString) -> usize {
    s.bits.iter().filter(|&&b| b).count()
}

pub fn hamming_distance(a: &BitString, b: &BitString) -> Result<usize> {
    ensure_same_len(a, b)?;
    Ok(a.bits.iter().zip(&b.bits).filter(|(x, y)| x != y).count())
}

/// A finite probability distribution over opaque labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution<L: Ord> {
    probs: BTreeMap<L, f64>,
}

impl<L: Ord + Clone> Distribution<L> {
    pub fn new(probs: impl IntoIterator<Item = (L, f64)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (label, p) in probs {
            if !(p.is_finite() && p >= 0.0) {
                return Err(Error::InvalidDistribution(format!(
                    "probability {p} is negative or not finite"
                )));
            }
            if map.insert(label, p).is_some() {
                return Err(Error::InvalidDistribution("duplicate label".into()));
            }
        }
        if map.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        let total: f64 = map.values().sum();
        if (total - 1.0).abs() > PROB_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}"
            )));
        }
        Ok(Self { probs: map })
    }

    pub fn uniform(labels: impl IntoIterator<Item = L>) -> Result<Self> {
        let labels: Vec<L> = labels.into_iter().collect();
        let p = 1.0 / labels.len() as f64;
        Self::new(labels.into_iter().map(|l| (l, p)))
    }

    pub fn point_mass(label: L) -> Self {
        Self {
            probs: BTreeMap::from([(label, 1.0)]),
        }
    }

    /// Normalizes non-negative weights (e.g. counts) into a distribution.
    pub fn from_weights(weights: impl IntoIterator<Item = (L, f64)>) -> Result<Self> {
        let weights: Vec<(L, f64)> = weights.into_iter().collect();
        let total: f64 = weights.iter().map(|(_, w)| w).sum();
        if !(total > 0.0) {
            return Err(Error::InvalidDistribution("weights sum to zero".into()));
        }
        Self::new(weights.into_iter().map(|(l, w)| (l, w / total)))
    }

    pub fn prob(&self, label: &L) -> f64 {
        self.probs.get(label).copied().unwrap_or(0.0)
    }

    pub fn support_len(&self) -> usize {
        self.probs.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&L, f64)> {
        self.probs.iter().map(|(l, &p)| (l, p))
    }
}

pub fn shannon_entropy<L: Ord + Clone>(d: &Distribution<L>) -> f64 {
    d.iter()
        .filter(|(_, p)| *p > 0.0)
        .map(|(_, p)| -p * p.log2())
        .sum::<f64>()
        .max(0.0)
}

pub fn min_entropy<L: Ord + Clone>(d: &Distribution<L>) -> f64 {
    let max_p = d.iter().map(|(_, p)| p).fold(0.0_f64, f64::max);
    // -log2(1) is -0.0
    (-max_p.log2()).max(0.0)
}

/// Half the L1 distance between two distributions over the same support.
pub fn statistical_distance<L: Ord + Clone>(
    a: &Distribution<L>,
    b: &Distribution<L>,
) -> Result<f64> {
    if a.probs.len() != b.probs.len() || a.probs.keys().zip(b.probs.keys()).any(|(x, y)| x != y) {
        return Err(Error::SupportMismatch);
    }
    let sum: f64 = a
        .probs
        .values()
        .zip(b.probs.values())
        .map(|(p, q)| (p - q).abs())
        .sum();
    Ok((0.5 * sum).min(1.0))
}

/// Two readings of "the challenge set is uniform".
///
/// `LogCardinality` compares the entropy against `log2 |support|` (maximal
/// entropy); `Literal` compares it against `|support|` itself, which only
/// holds for degenerate supports and is kept for comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UniformityReading {
    LogCardinality,
    Literal,
}

pub fn meets_uniformity<L: Ord + Clone>(d: &Distribution<L>, reading: UniformityReading) -> bool {
    let h = shannon_entropy(d);
    let target = match reading {
        UniformityReading::LogCardinality => (d.support_len() as f64).log2(),
        UniformityReading::Literal => d.support_len() as f64,
    };
    (h - target).abs() <= 1e-9
}
