//! Bit-granular payloads.
//!
//! Packing is most-significant-bit first; when exported as bytes the final
//! byte is zero-padded in its low-order bits. Padding never takes part in XOR.

use std::fmt;
use std::str::FromStr;

use bitvec::prelude::*;

use crate::error::{Error, Result};

/// A bit string of arbitrary length.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Bits(BitVec<u8, Msb0>);

impl Bits {
    pub fn zeros(len: usize) -> Self {
        Bits(BitVec::repeat(false, len))
    }

    /// Takes the first `len` bits of `bytes`. Any bits beyond `len` are
    /// dropped.
    pub fn from_bytes(bytes: &[u8], len: usize) -> Result<Self> {
        if bytes.len() * 8 < len {
            return Err(Error::SizeMismatch {
                expected: len,
                actual: bytes.len() * 8,
            });
        }
        let mut bv = BitVec::<u8, Msb0>::from_slice(&bytes[..len.div_ceil(8)]);
        bv.truncate(len);
        Ok(Bits(bv))
    }

    /// `ceil(len/8)` bytes, padding bits zero.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut bv = self.0.clone();
        bv.set_uninitialized(false);
        bv.into_vec()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Copies out `len` bits starting at bit `start`.
    pub fn slice(&self, start: usize, len: usize) -> Bits {
        Bits(self.0[start..start + len].to_bitvec())
    }

    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a Bits>) -> Bits {
        let mut out = BitVec::new();
        for p in parts {
            out.extend_from_bitslice(&p.0);
        }
        Bits(out)
    }

    /// In-place XOR with an equal-length bit string.
    pub fn xor_assign(&mut self, other: &Bits) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::SizeMismatch {
                expected: self.len(),
                actual: other.len(),
            });
        }
        *self.0.as_mut_bitslice() ^= other.0.as_bitslice();
        Ok(())
    }

    pub fn xor(&self, other: &Bits) -> Result<Bits> {
        let mut out = self.clone();
        out.xor_assign(other)?;
        Ok(out)
    }

    pub fn get(&self, i: usize) -> Option<bool> {
        self.0.get(i).map(|b| *b)
    }

    pub fn count_ones(&self) -> usize {
        self.0.count_ones()
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.0.iter() {
            f.write_str(if *b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bits({self})")
    }
}

/// Parses a string of `0`/`1` characters.
impl FromStr for Bits {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parameter(format!("not a bit: {other:?}"))),
            })
            .collect::<Result<BitVec<u8, Msb0>>>()
            .map(Bits)
    }
}
