use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Fixed-width bit pattern.
///
/// Bit 0 is the leftmost character of the text form and the most significant
/// bit of the numeric value, matching the register convention where the ket
/// string reads left to right.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    bits: Vec<bool>,
}

impl BitString {
    pub fn zeros(width: usize) -> Self {
        BitString { bits: vec![false; width] }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        BitString { bits }
    }

    /// Builds the `width`-bit pattern whose numeric value is `value`.
    pub fn from_value(value: u64, width: usize) -> Result<Self> {
        if width > 63 {
            return Err(Error::Config(format!("bit width {width} exceeds 63")));
        }
        if width < 64 && value >= (1u64 << width) {
            return Err(Error::Config(format!(
                "value {value} does not fit in {width} bits"
            )));
        }
        let bits = (0..width).map(|i| value >> (width - 1 - i) & 1 == 1).collect();
        Ok(BitString { bits })
    }

    pub fn width(&self) -> usize {
        self.bits.len()
    }

    pub fn bit(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn set(&mut self, i: usize, value: bool) {
        self.bits[i] = value;
    }

    /// Numeric value with bit 0 as the most significant bit.
    pub fn to_value(&self) -> u64 {
        self.bits.iter().fold(0u64, |acc, &b| acc << 1 | b as u64)
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.bits.iter().copied()
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn concat(&self, other: &BitString) -> BitString {
        let mut bits = self.bits.clone();
        bits.extend_from_slice(&other.bits);
        BitString { bits }
    }

    /// Left-pads with zeros up to `width`.
    pub fn widened(&self, width: usize) -> Result<BitString> {
        if width < self.width() {
            return Err(Error::WidthMismatch(format!(
                "cannot narrow {} bits to {width}",
                self.width()
            )));
        }
        let mut bits = vec![false; width - self.width()];
        bits.extend_from_slice(&self.bits);
        Ok(BitString { bits })
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
        if s.is_empty() {
            return Err(Error::Config("empty bit string".into()));
        }
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Config(format!(
                    "bit string may only contain 0 and 1, found {other:?}"
                ))),
            })
            .collect::<Result<Vec<_>>>()
            .map(BitString::from_bits)
    }
}
