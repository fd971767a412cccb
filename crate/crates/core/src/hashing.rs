//! Bit strings and the Toeplitz universal hash family `Σ^ℓ → Σ^{ℓ/2}`.
//!
//! A hash is described by `ℓ/2 + ℓ − 1` seed bits; entry `(i, j)` of the
//! Toeplitz matrix is `seed[i − j + ℓ − 1]`. For `x ≠ x'` the collision
//! probability over a uniform seed is exactly `2^{-ℓ/2}`.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct BitString {
    bits: Vec<bool>,
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        Self { bits: vec![false; len] }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Self {
        Self {
            bits: (0..len).map(|_| rng.random::<bool>()).collect(),
        }
    }

    /// Parses `"0110..."`.
    pub fn parse(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::Parse {
                    input: s.to_string(),
                    reason: format!("unexpected character {c:?}"),
                }),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::from_bits)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn as_u8(&self) -> Vec<u8> {
        self.bits.iter().map(|&b| b as u8).collect()
    }

    pub fn xor(&self, other: &Self) -> Result<Self> {
        self.require_len(other.len())?;
        Ok(Self {
            bits: self.bits.iter().zip(&other.bits).map(|(a, b)| a ^ b).collect(),
        })
    }

    pub fn hamming(&self, other: &Self) -> Result<usize> {
        self.require_len(other.len())?;
        Ok(self.bits.iter().zip(&other.bits).filter(|(a, b)| a != b).count())
    }

    pub fn weight(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    fn require_len(&self, len: usize) -> Result<()> {
        if self.len() != len {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                actual: len,
            });
        }
        Ok(())
    }

    /// Lowercase hex, most significant bit first; the last nibble is padded
    /// with zero bits on the right.
    pub fn to_hex(&self) -> String {
        self.bits
            .chunks(4)
            .map(|chunk| {
                let v = chunk
                    .iter()
                    .enumerate()
                    .fold(0u32, |acc, (k, &b)| acc | ((b as u32) << (3 - k)));
                char::from_digit(v, 16).expect("nibble")
            })
            .collect()
    }

    pub fn from_hex(hex: &str, len: usize) -> Result<Self> {
        let err = |reason: String| Error::Parse {
            input: hex.to_string(),
            reason,
        };
        if hex.len() != len.div_ceil(4) {
            return Err(err(format!("expected {} hex digits for {len} bits", len.div_ceil(4))));
        }
        let mut bits = Vec::with_capacity(hex.len() * 4);
        for c in hex.chars() {
            let v = c.to_digit(16).ok_or_else(|| err(format!("bad digit {c:?}")))?;
            bits.extend((0..4).map(|k| v >> (3 - k) & 1 == 1));
        }
        if bits[len..].iter().any(|&b| b) {
            return Err(err("nonzero padding bits".into()));
        }
        bits.truncate(len);
        Ok(Self { bits })
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

impl FromIterator<bool> for BitString {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        Self::from_bits(iter.into_iter().collect())
    }
}

#[derive(Serialize, Deserialize)]
struct BitStringRepr {
    bits: usize,
    hex: String,
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        BitStringRepr {
            bits: self.len(),
            hex: self.to_hex(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = BitStringRepr::deserialize(d)?;
        Self::from_hex(&repr.hex, repr.bits).map_err(serde::de::Error::custom)
    }
}

/// A member of the Toeplitz family for input length `ell`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashSpec {
    pub ell: usize,
    pub seed: BitString,
}

pub fn seed_length(ell: usize) -> usize {
    ell / 2 + ell - 1
}

fn check_ell(ell: usize) -> Result<()> {
    if ell < 2 || !ell.is_multiple_of(2) {
        return Err(Error::OddLength(ell));
    }
    Ok(())
}

impl HashSpec {
    pub fn new(ell: usize, seed: BitString) -> Result<Self> {
        check_ell(ell)?;
        if seed.len() != seed_length(ell) {
            return Err(Error::LengthMismatch {
                expected: seed_length(ell),
                actual: seed.len(),
            });
        }
        Ok(Self { ell, seed })
    }

    pub fn output_len(&self) -> usize {
        self.ell / 2
    }

    /// `T[i][j]`, zero-based.
    pub fn entry(&self, i: usize, j: usize) -> bool {
        self.seed.get(i + self.ell - 1 - j)
    }
}

/// Draws a uniform member of the family.
pub fn sample_hash<R: Rng + ?Sized>(ell: usize, rng: &mut R) -> Result<HashSpec> {
    check_ell(ell)?;
    HashSpec::new(ell, BitString::random(rng, seed_length(ell)))
}

/// `T·m` over GF(2).
pub fn hash(spec: &HashSpec, m: &BitString) -> Result<BitString> {
    if m.len() != spec.ell {
        return Err(Error::LengthMismatch {
            expected: spec.ell,
            actual: m.len(),
        });
    }
    Ok((0..spec.output_len())
        .map(|i| (0..spec.ell).fold(false, |acc, j| acc ^ (spec.entry(i, j) & m.get(j))))
        .collect())
}

/// Expected number of hash collisions among `sessions` independent
/// comparisons of distinct inputs with `out_bits`-bit outputs.
pub fn expected_collisions(sessions: u64, out_bits: usize) -> f64 {
    sessions as f64 * 0.5f64.powi(out_bits as i32)
}
