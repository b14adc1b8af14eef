use crate::channel::{euclidean_distance, NoiseModel, SoftVector};
use crate::code::BlockCode;
use crate::error::{Error, Result};
use crate::gf2::BitVector;
use crate::scalar::Real;
use crate::sphere::{check_enumeration_cap, DEFAULT_ENUMERATION_CAP};

use super::{DecodeOutcome, InitialDecoder, Stage};

/// Exhaustive maximum-likelihood decoding over all `2^K` messages.
///
/// Candidates are ranked by correlation `⟨y, x(c)⟩`, which orders them exactly
/// as `‖y − x(c)‖` does. Correlations are assembled from per-byte lookup
/// tables so each codeword costs `ceil(N/8)` additions. Ties go to the lowest
/// message index. Every codeword counts as one metric evaluation.
pub fn mld_decode<T: Real, C: BlockCode + ?Sized>(
    y: &SoftVector<T>,
    code: &C,
) -> Result<DecodeOutcome<T>> {
    mld_decode_capped(y, code, DEFAULT_ENUMERATION_CAP)
}

pub fn mld_decode_capped<T: Real, C: BlockCode + ?Sized>(
    y: &SoftVector<T>,
    code: &C,
    cap: usize,
) -> Result<DecodeOutcome<T>> {
    let g = code.generator();
    let (k, n) = (g.rows(), g.cols());
    check_enumeration_cap(k, cap)?;
    if y.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            found: y.len(),
        });
    }

    let ys = y.as_slice();
    let words = n.div_ceil(64);
    let two = T::lit(2.0);
    // One 256-entry table per byte of the packed codeword; bytes past the
    // block end keep an all-zero table.
    let mut tables = vec![[T::zero(); 256]; words * 8];
    for (j, table) in tables.iter_mut().enumerate() {
        let chunk = ys.get(8 * j..(8 * j + 8).min(n)).unwrap_or(&[]);
        table[0] = chunk.iter().copied().sum();
        for b in 1..256usize {
            let low = b.trailing_zeros() as usize;
            let y_low = chunk.get(low).copied().unwrap_or_else(T::zero);
            table[b] = table[b & (b - 1)] - two * y_low;
        }
    }
    let correlation = |cw: &[u64]| {
        let mut corr = T::zero();
        for (&word, tab) in cw.iter().zip(tables.chunks_exact(8)) {
            let t = |b: usize| tab[b][(word >> (8 * b)) as u8 as usize];
            corr = corr + (((t(0) + t(1)) + (t(2) + t(3))) + ((t(4) + t(5)) + (t(6) + t(7))));
        }
        corr
    };

    // Gray-code walk, inlined: codeword i differs from i-1 by one generator
    // row, and its message index is i ^ (i >> 1).
    let rows: Vec<u64> = g
        .row_iter()
        .flat_map(|r| r.words().iter().copied())
        .collect();
    let mut cw = vec![0u64; words];
    let mut best_corr = correlation(&cw);
    let mut best_index = 0u64;
    let mut consider = |i: u64, corr: T| {
        if corr >= best_corr {
            let index = i ^ (i >> 1);
            if corr > best_corr || index < best_index {
                best_corr = corr;
                best_index = index;
            }
        }
    };
    if words == 1 {
        // Single-word codewords (N <= 64) skip the slice plumbing.
        let mut w = 0u64;
        for i in 1u64..(1u64 << k) {
            w ^= rows[i.trailing_zeros() as usize];
            consider(i, correlation(std::slice::from_ref(&w)));
        }
    } else {
        for i in 1u64..(1u64 << k) {
            let r = i.trailing_zeros() as usize;
            for (a, b) in cw.iter_mut().zip(&rows[r * words..(r + 1) * words]) {
                *a ^= *b;
            }
            consider(i, correlation(&cw));
        }
    }

    let message = BitVector::from_bits((0..k).map(|j| (best_index >> j) & 1 == 1));
    let codeword = code.encode(&message)?;
    Ok(DecodeOutcome {
        metric: euclidean_distance(y, &codeword)?,
        v_estimate: code.precode(&message)?,
        codeword,
        message,
        crc_pass: true,
        stage: Stage::Initial,
        boost_rounds: 0,
        metric_evals: 1u64 << k,
        trace: None,
    })
}

/// [`mld_decode`] as a first-stage decoder.
#[derive(Clone, Copy, Debug)]
pub struct MlDecoder {
    pub enumeration_cap: usize,
}

impl Default for MlDecoder {
    fn default() -> Self {
        MlDecoder {
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
        }
    }
}

impl<C: BlockCode + ?Sized, T: Real> InitialDecoder<C, T> for MlDecoder {
    fn decode(&self, code: &C, y: &SoftVector<T>, _: &NoiseModel<T>) -> Result<DecodeOutcome<T>> {
        mld_decode_capped(y, code, self.enumeration_cap)
    }
}
