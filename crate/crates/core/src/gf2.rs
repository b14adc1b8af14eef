//! Bit-packed vectors and matrices over GF(2).
//!
//! Bits are packed into little-endian `u64` words, bit `i` living in word
//! `i / 64` at position `i % 64`. Serialized to bytes this is exactly "bit `i`
//! at byte `i / 8`, least-significant bit first", which is the layout used by
//! the sphere cache.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

const WORD_BITS: usize = 64;

fn words_for(len: usize) -> usize {
    len.div_ceil(WORD_BITS)
}

/// Binary vector of fixed length.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitVector {
    len: usize,
    words: Vec<u64>,
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        BitVector {
            len,
            words: vec![0; words_for(len)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut v = BitVector {
            len,
            words: vec![u64::MAX; words_for(len)],
        };
        v.clear_padding();
        v
    }

    /// Builds a vector from any iterator of booleans.
    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut words = Vec::new();
        let mut len = 0;
        for bit in bits {
            if len % WORD_BITS == 0 {
                words.push(0);
            }
            if bit {
                words[len / WORD_BITS] |= 1 << (len % WORD_BITS);
            }
            len += 1;
        }
        BitVector { len, words }
    }

    /// Builds a vector from 0/1 integers; any nonzero value counts as a one.
    pub fn from_u8s(bits: &[u8]) -> Self {
        Self::from_bits(bits.iter().map(|&b| b != 0))
    }

    /// Builds a vector from its packed words, clearing any padding bits.
    pub fn from_words(len: usize, words: &[u64]) -> Result<Self> {
        if words.len() != words_for(len) {
            return Err(Error::LengthMismatch {
                expected: words_for(len),
                found: words.len(),
            });
        }
        let mut v = BitVector {
            len,
            words: words.to_vec(),
        };
        v.clear_padding();
        Ok(v)
    }

    /// Decodes `ceil(len / 8)` packed bytes (LSB-first). Nonzero padding bits
    /// are rejected.
    pub fn from_packed_bytes(len: usize, bytes: &[u8]) -> Result<Self> {
        let nbytes = len.div_ceil(8);
        if bytes.len() != nbytes {
            return Err(Error::LengthMismatch {
                expected: nbytes,
                found: bytes.len(),
            });
        }
        let mut words = vec![0u64; words_for(len)];
        for (i, &b) in bytes.iter().enumerate() {
            words[i / 8] |= (b as u64) << (8 * (i % 8));
        }
        let v = BitVector { len, words };
        let mut cleaned = v.clone();
        cleaned.clear_padding();
        if cleaned != v {
            return Err(Error::Invalid(
                "nonzero padding bits in packed vector".into(),
            ));
        }
        Ok(v)
    }

    /// Packs into `ceil(len / 8)` bytes, bit `i` at byte `i / 8`, LSB-first.
    pub fn to_packed_bytes(&self) -> Vec<u8> {
        let nbytes = self.len.div_ceil(8);
        (0..nbytes)
            .map(|i| (self.words[i / 8] >> (8 * (i % 8))) as u8)
            .collect()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Raw packed words, including the zeroed padding of the last word.
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(
            i < self.len,
            "bit index {i} out of range for length {}",
            self.len
        );
        (self.words[i / WORD_BITS] >> (i % WORD_BITS)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, bit: bool) {
        assert!(
            i < self.len,
            "bit index {i} out of range for length {}",
            self.len
        );
        let mask = 1u64 << (i % WORD_BITS);
        if bit {
            self.words[i / WORD_BITS] |= mask;
        } else {
            self.words[i / WORD_BITS] &= !mask;
        }
    }

    pub fn flip(&mut self, i: usize) {
        assert!(
            i < self.len,
            "bit index {i} out of range for length {}",
            self.len
        );
        self.words[i / WORD_BITS] ^= 1 << (i % WORD_BITS);
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Indices of the set bits, ascending.
    pub fn support(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.weight());
        for (wi, &w) in self.words.iter().enumerate() {
            let mut w = w;
            while w != 0 {
                let tz = w.trailing_zeros() as usize;
                out.push(wi * WORD_BITS + tz);
                w &= w - 1;
            }
        }
        out
    }

    /// Hamming weight.
    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn xor(&self, other: &BitVector) -> Result<BitVector> {
        let mut out = self.clone();
        out.xor_assign(other)?;
        Ok(out)
    }

    pub fn xor_assign(&mut self, other: &BitVector) -> Result<()> {
        self.check_len(other.len)?;
        self.xor_words(&other.words);
        Ok(())
    }

    /// XORs packed words into `self`. Caller guarantees equal length.
    pub(crate) fn xor_words(&mut self, other: &[u64]) {
        for (a, b) in self.words.iter_mut().zip(other) {
            *a ^= *b;
        }
    }

    pub fn hamming_distance(&self, other: &BitVector) -> Result<usize> {
        self.check_len(other.len)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum())
    }

    /// The sub-vector of bits `[start, start + len)`.
    pub fn slice(&self, start: usize, len: usize) -> BitVector {
        assert!(start + len <= self.len, "slice out of range");
        BitVector::from_bits((start..start + len).map(|i| self.get(i)))
    }

    /// Concatenation `[self | other]`.
    pub fn concat(&self, other: &BitVector) -> BitVector {
        BitVector::from_bits(self.iter().chain(other.iter()))
    }

    fn check_len(&self, other: usize) -> Result<()> {
        if self.len != other {
            return Err(Error::LengthMismatch {
                expected: self.len,
                found: other,
            });
        }
        Ok(())
    }

    fn clear_padding(&mut self) {
        let tail = self.len % WORD_BITS;
        if tail != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << tail) - 1;
            }
        }
    }
}

/// Lexicographic order over the bit sequence, bit 0 first. Vectors of
/// different length compare by length first.
impl Ord for BitVector {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len.cmp(&other.len).then_with(|| {
            self.words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a.reverse_bits().cmp(&b.reverse_bits()))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
    }
}

impl PartialOrd for BitVector {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector({self})")
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl serde::Serialize for BitVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Dense binary matrix stored as packed rows.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BinaryMatrix {
    cols: usize,
    rows: Vec<BitVector>,
}

impl BinaryMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        BinaryMatrix {
            cols,
            rows: vec![BitVector::zeros(cols); rows],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.rows[i].set(i, true);
        }
        m
    }

    /// Every row must have length `cols`.
    pub fn from_rows(cols: usize, rows: Vec<BitVector>) -> Result<Self> {
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::LengthMismatch {
                expected: cols,
                found: bad.len(),
            });
        }
        Ok(BinaryMatrix { cols, rows })
    }

    /// Convenience for literal matrices in tests and examples.
    pub fn from_u8_rows(rows: &[&[u8]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        Self::from_rows(cols, rows.iter().map(|r| BitVector::from_u8s(r)).collect())
    }

    pub fn rows(&self) -> usize {
        self.rows.len()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &BitVector {
        &self.rows[i]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &BitVector> {
        self.rows.iter()
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.rows[r].get(c)
    }

    pub fn set(&mut self, r: usize, c: usize, bit: bool) {
        self.rows[r].set(c, bit);
    }

    /// Row-vector product `v · M`: the XOR of the rows selected by `v`.
    pub fn vec_mul(&self, v: &BitVector) -> Result<BitVector> {
        if v.len() != self.rows() {
            return Err(Error::LengthMismatch {
                expected: self.rows(),
                found: v.len(),
            });
        }
        let mut out = BitVector::zeros(self.cols);
        for i in v.support() {
            out.xor_words(self.rows[i].words());
        }
        Ok(out)
    }

    /// Matrix product `self · rhs`.
    pub fn mul(&self, rhs: &BinaryMatrix) -> Result<BinaryMatrix> {
        let rows = self
            .rows
            .iter()
            .map(|r| rhs.vec_mul(r))
            .collect::<Result<Vec<_>>>()?;
        Ok(BinaryMatrix {
            cols: rhs.cols,
            rows,
        })
    }

    pub fn transpose(&self) -> BinaryMatrix {
        let mut t = BinaryMatrix::zeros(self.cols, self.rows());
        for (r, row) in self.rows.iter().enumerate() {
            for c in row.support() {
                t.rows[c].set(r, true);
            }
        }
        t
    }

    /// Syndrome-style product `M · vᵀ`.
    pub fn mul_vec_transposed(&self, v: &BitVector) -> Result<BitVector> {
        if v.len() != self.cols {
            return Err(Error::LengthMismatch {
                expected: self.cols,
                found: v.len(),
            });
        }
        Ok(BitVector::from_bits(self.rows.iter().map(|r| {
            r.words()
                .iter()
                .zip(v.words())
                .map(|(a, b)| (a & b).count_ones())
                .sum::<u32>()
                % 2
                == 1
        })))
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(BitVector::is_zero)
    }

    /// Row-major concatenation of every row's packed bytes.
    pub fn to_packed_bytes(&self) -> Vec<u8> {
        self.rows.iter().flat_map(|r| r.to_packed_bytes()).collect()
    }
}

/// `v · M`, see [`BinaryMatrix::vec_mul`].
pub fn gf2_mat_vec(v: &BitVector, m: &BinaryMatrix) -> Result<BitVector> {
    m.vec_mul(v)
}

pub fn vec_xor(a: &BitVector, b: &BitVector) -> Result<BitVector> {
    a.xor(b)
}

pub fn hamming_weight(v: &BitVector) -> usize {
    v.weight()
}

pub fn hamming_distance(a: &BitVector, b: &BitVector) -> Result<usize> {
    a.hamming_distance(b)
}
