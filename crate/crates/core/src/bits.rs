use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ProtocolError;
use crate::kernel::SimRng;

/// Fixed-length classical bit string (secrets, keys, masks, messages).
#[derive(Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![false; len])
    }

    pub fn random(len: usize, rng: &mut SimRng) -> Self {
        Self(rng.bits(len))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<bool> {
        self.0.get(index).copied()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.0.iter().copied()
    }

    pub fn push(&mut self, bit: bool) {
        self.0.push(bit);
    }

    pub fn flip(&mut self, index: usize) {
        self.0[index] = !self.0[index];
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|b| **b).count()
    }

    pub fn xor(&self, other: &BitString) -> Result<BitString, ProtocolError> {
        self.expect_len(other.len())?;
        Ok(Self(
            self.iter().zip(other.iter()).map(|(a, b)| a ^ b).collect(),
        ))
    }

    pub fn expect_len(&self, expected: usize) -> Result<(), ProtocolError> {
        if self.len() == expected {
            Ok(())
        } else {
            Err(ProtocolError::LengthMismatch {
                expected,
                found: self.len(),
            })
        }
    }

    /// Index of the first position where the two strings differ.
    pub fn first_difference(&self, other: &BitString) -> Option<usize> {
        self.iter().zip(other.iter()).position(|(a, b)| a != b)
    }
}

impl FromIterator<bool> for BitString {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl FromStr for BitString {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(ProtocolError::Parse(format!(
                    "unexpected character {other:?}"
                ))),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Self)
    }
}

impl TryFrom<String> for BitString {
    type Error = ProtocolError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<BitString> for String {
    fn from(b: BitString) -> Self {
        b.to_string()
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            f.write_str(if *b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}
