//! Binary emotion codes and the two genetic operators acting on them.
//!
//! A code is an `m`-bit string (`m` even). Its emotional tendency value
//! (ETV) is the number of set bits: 0 is total opposition, `m` total
//! support, `m/2` neutral.

use std::fmt;
use std::ops::Range;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const WORD: usize = 64;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct EmotionCode {
    words: Vec<u64>,
    len: usize,
}

impl EmotionCode {
    /// All-zero code of length `m`.
    pub fn zeros(m: usize) -> Result<Self> {
        check_len(m)?;
        Ok(EmotionCode {
            words: vec![0; m.div_ceil(WORD)],
            len: m,
        })
    }

    /// All-one code of length `m`.
    pub fn ones(m: usize) -> Result<Self> {
        let mut code = Self::zeros(m)?;
        for j in 0..m {
            code.set(j, true);
        }
        Ok(code)
    }

    /// Builds a code from a slice of 0/1 digits.
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        let mut code = Self::zeros(bits.len())?;
        for (j, &b) in bits.iter().enumerate() {
            match b {
                0 => {}
                1 => code.set(j, true),
                other => return Err(Error::arg(format!("bit {j} is {other}, expected 0 or 1"))),
            }
        }
        Ok(code)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, j: usize) -> bool {
        assert!(j < self.len, "bit index {j} out of range for length {}", self.len);
        self.words[j / WORD] >> (j % WORD) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, j: usize, bit: bool) {
        assert!(j < self.len, "bit index {j} out of range for length {}", self.len);
        let mask = 1u64 << (j % WORD);
        if bit {
            self.words[j / WORD] |= mask;
        } else {
            self.words[j / WORD] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, j: usize) {
        assert!(j < self.len, "bit index {j} out of range for length {}", self.len);
        self.words[j / WORD] ^= 1u64 << (j % WORD);
    }

    /// Emotional tendency value: the number of 1-bits.
    #[inline]
    pub fn etv(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    pub fn bits(&self) -> impl Iterator<Item = u8> + '_ {
        (0..self.len).map(|j| self.get(j) as u8)
    }

    pub fn to_bits(&self) -> Vec<u8> {
        self.bits().collect()
    }

    fn segment_eq(&self, other: &EmotionCode, range: Range<usize>) -> bool {
        range.into_iter().all(|j| self.get(j) == other.get(j))
    }
}

impl fmt::Display for EmotionCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.bits() {
            f.write_str(if b == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for EmotionCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EmotionCode({self}, etv={})", self.etv())
    }
}

fn check_len(m: usize) -> Result<()> {
    if m == 0 || !m.is_multiple_of(2) {
        return Err(Error::arg(format!(
            "code length must be a positive even integer, got {m}"
        )));
    }
    Ok(())
}

/// Per-bit flip probability used by [`mutate`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MutationParams {
    pub rate: f64,
}

impl MutationParams {
    pub fn new(rate: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&rate) {
            return Err(Error::arg(format!("mutation rate must lie in [0, 1], got {rate}")));
        }
        Ok(MutationParams { rate })
    }
}

impl Default for MutationParams {
    fn default() -> Self {
        MutationParams { rate: 0.01 }
    }
}

/// A code of length `m` with exactly `etv` ones at uniformly random positions.
pub fn code_with_etv<R: Rng + ?Sized>(etv: u32, m: usize, rng: &mut R) -> Result<EmotionCode> {
    let mut code = EmotionCode::zeros(m)?;
    if etv as usize > m {
        return Err(Error::arg(format!("etv {etv} exceeds code length {m}")));
    }
    for j in index::sample(rng, m, etv as usize) {
        code.set(j, true);
    }
    Ok(code)
}

pub fn etv(code: &EmotionCode) -> u32 {
    code.etv()
}

/// Random-prefix mutation.
///
/// Draws a prefix length uniformly from `0..=m`, then flips each bit of the
/// prefix independently with probability `params.rate`. Always consumes one
/// length draw plus one uniform draw per prefix position.
pub fn mutate<R: Rng + ?Sized>(code: &EmotionCode, params: MutationParams, rng: &mut R) -> EmotionCode {
    let mut out = code.clone();
    let len = rng.random_range(0..=code.len() as u32) as usize;
    for j in 0..len {
        if rng.random::<f64>() < params.rate {
            out.flip(j);
        }
    }
    out
}

/// Result of a crossover, including the copied segment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Crossover {
    pub code: EmotionCode,
    pub segment: Range<usize>,
}

/// One-directional segment copy from the information code into the node code.
///
/// The segment length is `floor(gamma * m)` and its start is uniform over
/// `0..=m - len`. Bits outside the segment are untouched.
pub fn crossover_segment<R: Rng + ?Sized>(
    node_code: &EmotionCode,
    info_code: &EmotionCode,
    gamma: f64,
    rng: &mut R,
) -> Result<Crossover> {
    if node_code.len() != info_code.len() {
        return Err(Error::arg(format!(
            "code lengths differ: node {} vs info {}",
            node_code.len(),
            info_code.len()
        )));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::arg(format!("crossover gamma must lie in [0, 1], got {gamma}")));
    }
    let m = node_code.len();
    let len = ((gamma * m as f64).floor() as usize).min(m);
    let start = rng.random_range(0..=(m - len) as u32) as usize;
    let segment = start..start + len;

    let mut code = node_code.clone();
    if !code.segment_eq(info_code, segment.clone()) {
        for j in segment.clone() {
            code.set(j, info_code.get(j));
        }
    }
    Ok(Crossover { code, segment })
}

pub fn crossover<R: Rng + ?Sized>(
    node_code: &EmotionCode,
    info_code: &EmotionCode,
    gamma: f64,
    rng: &mut R,
) -> Result<EmotionCode> {
    crossover_segment(node_code, info_code, gamma, rng).map(|c| c.code)
}
