//! The symmetric group `S_n` and its subset `K_n` of fixed-point-free
//! involutions.
//!
//! Permutations are stored as image arrays. Composition follows the usual
//! function convention: `a.compose(&b)` is `a ∘ b`, so `b` is applied first.
//! Every protocol identity that depends on the side a factor is composed on
//! is written against this convention.
//!
//! Textual form is cycle notation with implicit fixed points, e.g.
//! `(1 2 3)(4 5)` for a permutation of degree 6. The identity prints as `()`.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest supported degree. `20!` is the largest factorial below `2^63`,
/// which keeps Lehmer ranks in a `u64`.
pub const MAX_DEGREE: usize = 20;

/// A bijection on `{1, ..., n}`.
///
/// Stored 0-indexed in a fixed-size array so the type is `Copy`; slots at or
/// past `degree` are always zero. The derived ordering compares degree first
/// and then images lexicographically, which coincides with Lehmer-rank order
/// within one degree.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    degree: u8,
    images: [u8; MAX_DEGREE],
}

/// Lehmer rank of a permutation: a dense index in `[0, n!)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PermIndex {
    pub value: u64,
    pub degree: u8,
}

/// Sign of a permutation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn sign(self) -> i32 {
        match self {
            Parity::Even => 1,
            Parity::Odd => -1,
        }
    }
}

fn check_degree(n: usize) -> Result<()> {
    if (2..=MAX_DEGREE).contains(&n) {
        Ok(())
    } else {
        Err(Error::DegreeOutOfRange(n))
    }
}

/// `n!` for `n <= 20`.
pub fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

/// `(n-1)!!` for even `n`: the number of perfect matchings on `n` points,
/// i.e. `|K_n|`. Zero for odd `n`.
pub fn involution_count(n: usize) -> u64 {
    if n % 2 == 1 {
        return 0;
    }
    (1..n as u64).step_by(2).product()
}

impl Permutation {
    pub fn identity(n: usize) -> Result<Self> {
        check_degree(n)?;
        let mut images = [0u8; MAX_DEGREE];
        for (i, slot) in images.iter_mut().enumerate().take(n) {
            *slot = i as u8;
        }
        Ok(Self {
            degree: n as u8,
            images,
        })
    }

    /// Builds a permutation from 1-indexed images: `images[i - 1] = σ(i)`.
    pub fn from_images(images: &[usize]) -> Result<Self> {
        let n = images.len();
        check_degree(n)?;
        let mut seen = [false; MAX_DEGREE];
        let mut out = [0u8; MAX_DEGREE];
        for (i, &v) in images.iter().enumerate() {
            if v == 0 || v > n {
                return Err(Error::InvalidPermutation {
                    degree: n,
                    reason: format!("image {v} of {} is outside 1..={n}", i + 1),
                });
            }
            if seen[v - 1] {
                return Err(Error::InvalidPermutation {
                    degree: n,
                    reason: format!("{v} appears twice"),
                });
            }
            seen[v - 1] = true;
            out[i] = (v - 1) as u8;
        }
        Ok(Self {
            degree: n as u8,
            images: out,
        })
    }

    /// Builds a permutation from disjoint cycles given as 1-indexed points.
    pub fn from_cycles(n: usize, cycles: &[Vec<usize>]) -> Result<Self> {
        check_degree(n)?;
        let mut images: Vec<usize> = (1..=n).collect();
        let mut used = [false; MAX_DEGREE];
        for cycle in cycles {
            for &p in cycle {
                if p == 0 || p > n {
                    return Err(Error::InvalidPermutation {
                        degree: n,
                        reason: format!("point {p} is outside 1..={n}"),
                    });
                }
                if used[p - 1] {
                    return Err(Error::InvalidPermutation {
                        degree: n,
                        reason: format!("point {p} appears in more than one place"),
                    });
                }
                used[p - 1] = true;
            }
            for (k, &p) in cycle.iter().enumerate() {
                images[p - 1] = cycle[(k + 1) % cycle.len()];
            }
        }
        Self::from_images(&images)
    }

    /// Parses cycle notation such as `(1 2 3)(4 5)`; points not mentioned are
    /// fixed. `()` and the empty string denote the identity.
    pub fn parse_cycles(n: usize, s: &str) -> Result<Self> {
        let err = |reason: &str| Error::Parse {
            input: s.to_string(),
            reason: reason.to_string(),
        };
        let mut cycles = Vec::new();
        let mut rest = s.trim();
        while !rest.is_empty() {
            let body = rest.strip_prefix('(').ok_or_else(|| err("expected '('"))?;
            let close = body.find(')').ok_or_else(|| err("unbalanced '('"))?;
            let points = body[..close]
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<usize>().map_err(|_| err("non-numeric point")))
                .collect::<Result<Vec<_>>>()?;
            if !points.is_empty() {
                cycles.push(points);
            }
            rest = body[close + 1..].trim_start();
        }
        Self::from_cycles(n, &cycles)
    }

    #[inline]
    pub fn degree(&self) -> usize {
        self.degree as usize
    }

    /// `σ(i)` for 1-indexed `i`.
    ///
    /// Panics if `i` is outside `1..=n`.
    pub fn apply(&self, i: usize) -> usize {
        assert!(i >= 1 && i <= self.degree(), "point {i} outside 1..={}", self.degree);
        self.images[i - 1] as usize + 1
    }

    /// 1-indexed image array.
    pub fn images(&self) -> Vec<usize> {
        self.images[..self.degree()].iter().map(|&v| v as usize + 1).collect()
    }

    /// `self ∘ other`, i.e. `i ↦ self(other(i))`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.degree != other.degree {
            return Err(Error::DegreeMismatch {
                left: self.degree(),
                right: other.degree(),
            });
        }
        Ok(self.compose_unchecked(other))
    }

    /// Composition for callers that already know the degrees agree.
    pub(crate) fn compose_unchecked(&self, other: &Self) -> Self {
        debug_assert_eq!(self.degree, other.degree);
        let mut images = [0u8; MAX_DEGREE];
        for (dst, &b) in images.iter_mut().zip(&other.images[..self.degree()]) {
            *dst = self.images[b as usize];
        }
        Self {
            degree: self.degree,
            images,
        }
    }

    pub fn inverse(&self) -> Self {
        let mut images = [0u8; MAX_DEGREE];
        for i in 0..self.degree() {
            images[self.images[i] as usize] = i as u8;
        }
        Self {
            degree: self.degree,
            images,
        }
    }

    pub fn is_identity(&self) -> bool {
        (0..self.degree()).all(|i| self.images[i] as usize == i)
    }

    /// Cycle decomposition in canonical form: each cycle starts at its
    /// smallest point, cycles are sorted by that point, and fixed points are
    /// included as singletons. Points are 1-indexed.
    pub fn orbits(&self) -> Vec<Vec<usize>> {
        let n = self.degree();
        let mut seen = [false; MAX_DEGREE];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                cycle.push(i + 1);
                i = self.images[i] as usize;
            }
            out.push(cycle);
        }
        out
    }

    /// `Σ (ℓ_i − 1)` over the orbit lengths: the length of a minimal
    /// decomposition into transpositions.
    pub fn transposition_count(&self) -> usize {
        let orbits = self.orbits();
        self.degree() - orbits.len()
    }

    pub fn parity(&self) -> Parity {
        if self.transposition_count().is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    /// `+1` for even permutations, `−1` for odd ones.
    pub fn sign(&self) -> i32 {
        self.parity().sign()
    }

    /// Membership in `K_n`: `σ ∘ σ = id` and no fixed points.
    pub fn is_fixed_point_free_involution(&self) -> bool {
        (0..self.degree()).all(|i| {
            let j = self.images[i] as usize;
            j != i && self.images[j] as usize == i
        })
    }

    /// Lehmer rank in `[0, n!)`.
    pub fn rank(&self) -> PermIndex {
        let n = self.degree();
        let mut value = 0u64;
        for i in 0..n {
            let smaller_after = self.images[i + 1..n].iter().filter(|&&v| v < self.images[i]).count() as u64;
            value = value * (n - i) as u64 + smaller_after;
        }
        PermIndex {
            value,
            degree: self.degree,
        }
    }

    pub fn unrank(index: PermIndex) -> Result<Self> {
        let n = index.degree as usize;
        check_degree(n)?;
        let size = factorial(n);
        if index.value >= size {
            return Err(Error::IndexOutOfRange {
                index: index.value,
                degree: n,
                size,
            });
        }
        Ok(Self::unrank_unchecked(index.value, n))
    }

    pub(crate) fn unrank_unchecked(mut value: u64, n: usize) -> Self {
        let mut digits = [0u8; MAX_DEGREE];
        for i in (0..n).rev() {
            let base = (n - i) as u64;
            digits[i] = (value % base) as u8;
            value /= base;
        }
        let mut remaining: [u8; MAX_DEGREE] = [0; MAX_DEGREE];
        for (k, slot) in remaining.iter_mut().enumerate().take(n) {
            *slot = k as u8;
        }
        let mut len = n;
        let mut images = [0u8; MAX_DEGREE];
        for i in 0..n {
            let d = digits[i] as usize;
            images[i] = remaining[d];
            remaining.copy_within(d + 1..len, d);
            len -= 1;
        }
        Self {
            degree: n as u8,
            images,
        }
    }

    /// Uniform element of `S_n` (Fisher–Yates).
    pub fn random<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Result<Self> {
        let mut p = Self::identity(n)?;
        p.images[..n].shuffle(rng);
        Ok(p)
    }

    /// Uniform element of `K_n`, drawn as a uniform perfect matching: the
    /// smallest unpaired point is matched with a uniformly chosen other
    /// unpaired point until none remain.
    pub fn random_involution<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Result<Self> {
        check_degree(n)?;
        if n % 2 == 1 {
            return Err(Error::OddDegree(n));
        }
        let mut unpaired: Vec<u8> = (0..n as u8).collect();
        let mut images = [0u8; MAX_DEGREE];
        while !unpaired.is_empty() {
            let a = unpaired.remove(0);
            let k = rng.random_range(0..unpaired.len());
            let b = unpaired.remove(k);
            images[a as usize] = b;
            images[b as usize] = a;
        }
        Ok(Self {
            degree: n as u8,
            images,
        })
    }

    /// Iterates over all of `S_n` in rank order.
    pub fn all(n: usize) -> Result<impl Iterator<Item = Permutation>> {
        check_degree(n)?;
        Ok((0..factorial(n)).map(move |v| Self::unrank_unchecked(v, n)))
    }

    /// All of `K_n` by recursive matching, in lexicographic order of images.
    pub fn all_involutions(n: usize) -> Result<Vec<Permutation>> {
        check_degree(n)?;
        if n % 2 == 1 {
            return Ok(Vec::new());
        }
        fn extend(images: &mut [u8; MAX_DEGREE], used: &mut [bool; MAX_DEGREE], n: usize, out: &mut Vec<Permutation>) {
            let Some(a) = (0..n).find(|&i| !used[i]) else {
                out.push(Permutation {
                    degree: n as u8,
                    images: *images,
                });
                return;
            };
            used[a] = true;
            for b in a + 1..n {
                if used[b] {
                    continue;
                }
                used[b] = true;
                images[a] = b as u8;
                images[b] = a as u8;
                extend(images, used, n, out);
                images[b] = 0;
                used[b] = false;
            }
            images[a] = 0;
            used[a] = false;
        }
        let mut out = Vec::new();
        extend(&mut [0; MAX_DEGREE], &mut [false; MAX_DEGREE], n, &mut out);
        out.sort();
        Ok(out)
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut any = false;
        for cycle in self.orbits().into_iter().filter(|c| c.len() > 1) {
            any = true;
            write!(f, "(")?;
            for (k, p) in cycle.iter().enumerate() {
                if k > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{p}")?;
            }
            write!(f, ")")?;
        }
        if !any {
            write!(f, "()")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "S{}{}", self.degree, self)
    }
}

#[derive(Serialize, Deserialize)]
struct PermutationRepr {
    n: usize,
    cycles: String,
}

impl Serialize for Permutation {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        PermutationRepr {
            n: self.degree(),
            cycles: self.to_string(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Permutation {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = PermutationRepr::deserialize(deserializer)?;
        Permutation::parse_cycles(repr.n, &repr.cycles).map_err(serde::de::Error::custom)
    }
}
