//! CRC-aided successive cancellation list decoding.
//!
//! LLR-domain decoder with the exact path metric
//! `PM += ln(1 + exp(−(1 − 2u)·λ))` and the exact check-node update
//! `f(a, b) = 2 atanh(tanh(a/2)·tanh(b/2))`, evaluated in its stable
//! max-star form. With these, the final metric of a path equals
//! `‖y − x‖² / (2σ²)` up to a common constant, so the list ranks complete
//! paths exactly as the Euclidean metric does.
//!
//! Path state lives in flat double-buffered arrays; forking a path copies its
//! rows into the next buffer, so the decoder allocates only up front.

use serde::{Deserialize, Serialize};

use crate::channel::{euclidean_distance, llr, NoiseModel, SoftVector};
use crate::code::CaPolarCode;
use crate::error::{Error, Result};
use crate::gf2::BitVector;
use crate::scalar::Real;

use super::{DecodeOutcome, InitialDecoder, Stage};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SclConfig {
    pub list_size: usize,
}

impl SclConfig {
    pub fn new(list_size: usize) -> Result<Self> {
        if list_size == 0 {
            return Err(Error::Invalid("list size must be at least 1".into()));
        }
        Ok(SclConfig { list_size })
    }
}

/// One surviving path at the end of list decoding.
#[derive(Clone, Debug, PartialEq)]
pub struct ListPath<T> {
    pub v: BitVector,
    pub path_metric: T,
    pub crc_pass: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SclDecoder {
    cfg: SclConfig,
}

impl SclDecoder {
    pub fn new(cfg: SclConfig) -> Self {
        SclDecoder { cfg }
    }

    pub fn list_size(&self) -> usize {
        self.cfg.list_size
    }

    /// Runs the list decoder and returns every surviving path, best metric
    /// first (ties keep list order).
    pub fn decode_list<T: Real>(&self, code: &CaPolarCode, llrs: &[T]) -> Result<Vec<ListPath<T>>> {
        let n = code.n();
        if llrs.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: llrs.len(),
            });
        }
        let mut state = ListState::new(n, self.cfg.list_size);
        let info = code.polar().info_mask();
        for (i, &is_info) in info.iter().enumerate() {
            for p in 0..state.active {
                state.update_llrs(p, i, llrs);
            }
            if is_info {
                state.fork(i);
            } else {
                for p in 0..state.active {
                    state.decide(p, i, false);
                }
            }
        }

        let mut paths: Vec<ListPath<T>> = (0..state.active)
            .map(|p| {
                let v = code.v_from_u(state.u_row(p));
                let crc_pass = code.crc_check(&v).expect("v has length K + K_crc");
                ListPath {
                    v,
                    path_metric: state.pm[p],
                    crc_pass,
                }
            })
            .collect();
        paths.sort_by(|a, b| {
            a.path_metric
                .partial_cmp(&b.path_metric)
                .expect("finite metrics")
        });
        Ok(paths)
    }

    /// CA-SCL decision from channel LLRs: the best CRC-passing path, or the
    /// best path overall when none passes.
    pub fn decode_llrs<T: Real>(&self, code: &CaPolarCode, llrs: &[T]) -> Result<ListPath<T>> {
        let paths = self.decode_list(code, llrs)?;
        let pick = paths.iter().position(|p| p.crc_pass).unwrap_or(0);
        Ok(paths.into_iter().nth(pick).expect("list is never empty"))
    }
}

impl<T: Real> InitialDecoder<CaPolarCode, T> for SclDecoder {
    fn decode(
        &self,
        code: &CaPolarCode,
        y: &SoftVector<T>,
        noise: &NoiseModel<T>,
    ) -> Result<DecodeOutcome<T>> {
        scl_decode(y, noise, code, &self.cfg)
    }
}

pub fn scl_decode<T: Real>(
    y: &SoftVector<T>,
    noise: &NoiseModel<T>,
    code: &CaPolarCode,
    cfg: &SclConfig,
) -> Result<DecodeOutcome<T>> {
    let best = SclDecoder::new(*cfg).decode_llrs(code, &llr(y, noise))?;
    let codeword = code.polar_encode(&best.v)?;
    Ok(DecodeOutcome {
        metric: euclidean_distance(y, &codeword)?,
        message: code.extract_message(&best.v)?,
        codeword,
        v_estimate: best.v,
        crc_pass: best.crc_pass,
        stage: Stage::Initial,
        boost_rounds: 0,
        metric_evals: 0,
        trace: None,
    })
}

/// `2 atanh(tanh(a/2) tanh(b/2))`.
fn boxplus<T: Real>(a: T, b: T) -> T {
    let sign = if (a < T::zero()) != (b < T::zero()) {
        -T::one()
    } else {
        T::one()
    };
    sign * a.abs().min(b.abs()) + (a + b).abs().neg().exp().ln_1p()
        - (a - b).abs().neg().exp().ln_1p()
}

/// Flat storage for up to `capacity` paths.
///
/// Per path, stage `s` (`0 ≤ s < n`) of the LLR tree and of the left-child
/// partial sums occupy indices `2^s .. 2^{s+1}` of a length-`N` row; stage `n`
/// is the shared channel input.
struct ListState<T> {
    n: usize,
    stages: usize,
    capacity: usize,
    active: usize,
    llr: Vec<T>,
    left: Vec<u8>,
    u: Vec<u8>,
    pm: Vec<T>,
    next_llr: Vec<T>,
    next_left: Vec<u8>,
    next_u: Vec<u8>,
    next_pm: Vec<T>,
    scratch: Vec<u8>,
    candidates: Vec<(T, usize, bool)>,
}

impl<T: Real> ListState<T> {
    fn new(n: usize, capacity: usize) -> Self {
        ListState {
            n,
            stages: n.trailing_zeros() as usize,
            capacity,
            active: 1,
            llr: vec![T::zero(); capacity * n],
            left: vec![0; capacity * n],
            u: vec![0; capacity * n],
            pm: vec![T::zero(); capacity],
            next_llr: vec![T::zero(); capacity * n],
            next_left: vec![0; capacity * n],
            next_u: vec![0; capacity * n],
            next_pm: vec![T::zero(); capacity],
            scratch: vec![0; n],
            candidates: Vec::with_capacity(2 * capacity),
        }
    }

    fn u_row(&self, p: usize) -> &[u8] {
        &self.u[p * self.n..(p + 1) * self.n]
    }

    /// Brings path `p`'s LLR for leaf `i` up to date at `llr[row + 1]`.
    fn update_llrs(&mut self, p: usize, i: usize, channel: &[T]) {
        let n = self.n;
        if n == 1 {
            self.llr[p * n] = channel[0];
            return;
        }
        let row = &mut self.llr[p * n..(p + 1) * n];
        let left = &self.left[p * n..(p + 1) * n];
        let top = if i == 0 {
            self.stages - 1
        } else {
            i.trailing_zeros() as usize
        };
        for s in (0..=top).rev() {
            let half = 1usize << s;
            let (lower, upper) = row.split_at_mut(2 * half);
            let parent: &[T] = if s + 1 == self.stages {
                channel
            } else {
                &upper[..2 * half]
            };
            let child = &mut lower[half..2 * half];
            if (i >> s) & 1 == 1 {
                let sums = &left[half..2 * half];
                for j in 0..half {
                    let a = parent[j];
                    child[j] = parent[half + j] + if sums[j] == 1 { -a } else { a };
                }
            } else {
                for j in 0..half {
                    child[j] = boxplus(parent[j], parent[half + j]);
                }
            }
        }
    }

    fn leaf_llr(&self, p: usize) -> T {
        if self.n == 1 {
            self.llr[0]
        } else {
            self.llr[p * self.n + 1]
        }
    }

    fn penalty(lambda: T, bit: bool) -> T {
        (if bit { -lambda } else { lambda }).softplus_neg()
    }

    /// Fixes `u_i = bit` on path `p` and folds it into the partial sums.
    fn decide(&mut self, p: usize, i: usize, bit: bool) {
        let n = self.n;
        self.pm[p] = self.pm[p] + Self::penalty(self.leaf_llr(p), bit);
        self.u[p * n + i] = bit as u8;
        let left = &mut self.left[p * n..(p + 1) * n];
        let cur = &mut self.scratch;
        cur[0] = bit as u8;
        let mut len = 1;
        for s in 0..self.stages {
            let half = 1usize << s;
            if (i >> s) & 1 == 0 {
                left[half..2 * half].copy_from_slice(&cur[..len]);
                return;
            }
            // Parent partial sums are (left ⊕ right, right).
            for j in 0..half {
                cur[half + j] = cur[j];
                cur[j] ^= left[half + j];
            }
            len *= 2;
        }
    }

    /// Splits every path on information bit `i` and keeps the best
    /// `capacity` children.
    fn fork(&mut self, i: usize) {
        let n = self.n;
        self.candidates.clear();
        for p in 0..self.active {
            let lambda = self.leaf_llr(p);
            for bit in [false, true] {
                self.candidates
                    .push((self.pm[p] + Self::penalty(lambda, bit), p, bit));
            }
        }
        if self.candidates.len() > self.capacity {
            self.candidates.sort_by(|a, b| {
                a.0.partial_cmp(&b.0)
                    .expect("finite metrics")
                    .then(a.1.cmp(&b.1))
                    .then(a.2.cmp(&b.2))
            });
            self.candidates.truncate(self.capacity);
        }
        for (slot, &(_, parent, _)) in self.candidates.iter().enumerate() {
            let (src, dst) = (parent * n..(parent + 1) * n, slot * n..(slot + 1) * n);
            self.next_llr[dst.clone()].copy_from_slice(&self.llr[src.clone()]);
            self.next_left[dst.clone()].copy_from_slice(&self.left[src.clone()]);
            self.next_u[dst].copy_from_slice(&self.u[src]);
            self.next_pm[slot] = self.pm[parent];
        }
        std::mem::swap(&mut self.llr, &mut self.next_llr);
        std::mem::swap(&mut self.left, &mut self.next_left);
        std::mem::swap(&mut self.u, &mut self.next_u);
        std::mem::swap(&mut self.pm, &mut self.next_pm);
        self.active = self.candidates.len();
        for slot in 0..self.active {
            let bit = self.candidates[slot].2;
            self.decide(slot, i, bit);
        }
    }
}
