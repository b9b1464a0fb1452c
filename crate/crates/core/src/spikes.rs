//! Packed spike vectors and HWC spike tensors.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Height × width × channels, stored channel-fastest.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Shape3 {
    pub h: usize,
    pub w: usize,
    pub c: usize,
}

impl Shape3 {
    pub const fn new(h: usize, w: usize, c: usize) -> Self {
        Shape3 { h, w, c }
    }

    pub fn len(&self) -> usize {
        self.h * self.w * self.c
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, y: usize, x: usize, ch: usize) -> usize {
        (y * self.w + x) * self.c + ch
    }
}

impl fmt::Display for Shape3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.h, self.w, self.c)
    }
}

/// Bit vector packed into 32-bit words, bit `i` at word `i / 32`, position `i % 32`.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct SpikeBits {
    len: usize,
    words: Vec<u32>,
}

impl SpikeBits {
    pub fn zeros(len: usize) -> Self {
        SpikeBits {
            len,
            words: vec![0; len.div_ceil(32)],
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut s = SpikeBits::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                s.set(i, true);
            }
        }
        s
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u32] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / 32] >> (i % 32)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: bool) {
        debug_assert!(i < self.len);
        let mask = 1u32 << (i % 32);
        if v {
            self.words[i / 32] |= mask;
        } else {
            self.words[i / 32] &= !mask;
        }
    }

    pub fn push(&mut self, v: bool) {
        if self.len % 32 == 0 {
            self.words.push(0);
        }
        self.len += 1;
        self.set(self.len - 1, v);
    }

    pub fn extend_from(&mut self, other: &SpikeBits) {
        if self.len % 32 == 0 {
            self.words.extend_from_slice(&other.words);
            self.len += other.len;
        } else {
            for i in 0..other.len {
                self.push(other.get(i));
            }
        }
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn clear(&mut self) {
        self.len = 0;
        self.words.clear();
    }

    pub fn fill_zero(&mut self) {
        self.words.iter_mut().for_each(|w| *w = 0);
    }

    /// Indices of set bits in increasing order.
    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 32 + b)
            })
        })
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len).map(|i| self.get(i)).collect()
    }
}

impl fmt::Debug for SpikeBits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SpikeBits[{}; ", self.len)?;
        for i in 0..self.len.min(64) {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        if self.len > 64 {
            f.write_str("…")?;
        }
        f.write_str("]")
    }
}

/// Spikes of one layer boundary at one time-step.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SpikeTensor {
    shape: Shape3,
    bits: SpikeBits,
}

impl SpikeTensor {
    pub fn zeros(shape: Shape3) -> Self {
        SpikeTensor {
            shape,
            bits: SpikeBits::zeros(shape.len()),
        }
    }

    pub fn from_bits(shape: Shape3, bits: SpikeBits) -> Result<Self> {
        if bits.len() != shape.len() {
            return Err(Error::Shape(format!(
                "{} bits do not fill a {shape} tensor",
                bits.len()
            )));
        }
        Ok(SpikeTensor { shape, bits })
    }

    pub fn shape(&self) -> Shape3 {
        self.shape
    }

    pub fn bits(&self) -> &SpikeBits {
        &self.bits
    }

    pub fn bits_mut(&mut self) -> &mut SpikeBits {
        &mut self.bits
    }

    pub fn get(&self, y: usize, x: usize, c: usize) -> bool {
        self.bits.get(self.shape.index(y, x, c))
    }

    pub fn count_ones(&self) -> u64 {
        self.bits.count_ones()
    }
}
