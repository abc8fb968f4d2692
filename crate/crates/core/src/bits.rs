use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A finite binary string, most significant (first) bit at index 0.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BitString(Vec<bool>);

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid bit character {0:?}")]
pub struct BitParseError(pub char);

impl BitString {
    pub fn new() -> Self {
        BitString(Vec::new())
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        BitString(bits)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn get(&self, i: usize) -> Option<bool> {
        self.0.get(i).copied()
    }

    pub fn push(&mut self, b: bool) {
        self.0.push(b);
    }

    pub fn extend_from(&mut self, other: &BitString) {
        self.0.extend_from_slice(&other.0);
    }

    /// Appends the low `width` bits of `value`, most significant first.
    pub fn push_uint(&mut self, value: u64, width: u32) {
        for k in (0..width).rev() {
            self.0.push((value >> k) & 1 == 1);
        }
    }

    pub fn starts_with(&self, prefix: &BitString) -> bool {
        self.0.starts_with(&prefix.0)
    }

    /// Hex dump with the final byte zero-padded on the right. Empty strings dump as `-`.
    pub fn to_hex(&self) -> String {
        if self.0.is_empty() {
            return "-".to_string();
        }
        let bytes: Vec<u8> = self
            .0
            .chunks(8)
            .map(|chunk| {
                chunk
                    .iter()
                    .enumerate()
                    .fold(0u8, |acc, (k, &b)| acc | ((b as u8) << (7 - k)))
            })
            .collect();
        hex::encode(bytes)
    }

    pub fn from_hex(text: &str, len: usize) -> Option<BitString> {
        if text == "-" {
            return (len == 0).then(BitString::new);
        }
        let bytes = hex::decode(text).ok()?;
        if bytes.len() != len.div_ceil(8) {
            return None;
        }
        let bits: Vec<bool> = (0..len).map(|k| (bytes[k / 8] >> (7 - k % 8)) & 1 == 1).collect();
        let round_trip = BitString(bits);
        (round_trip.to_hex() == text).then_some(round_trip)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{self}\"")
    }
}

impl FromStr for BitString {
    type Err = BitParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(BitParseError(other)),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(BitString)
    }
}

/// Shorthand for literals in tests and examples; panics on a non-binary character.
pub fn bits(s: &str) -> BitString {
    s.parse().expect("binary literal")
}
