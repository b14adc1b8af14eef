//! Baseline decoders and the shared decode-outcome record.

mod hard;
mod mld;
mod scl;

pub use hard::SystematicHardDecoder;
pub use mld::{mld_decode, mld_decode_capped, MlDecoder};
pub use scl::{scl_decode, ListPath, SclConfig, SclDecoder};

use serde::Serialize;

use crate::channel::{NoiseModel, SoftVector};
use crate::error::Result;
use crate::gf2::BitVector;
use crate::scalar::Real;
use crate::wsd::BoostTrace;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    /// Returned straight from the first-stage decoder.
    Initial,
    /// Produced by sphere refinement.
    Boosted,
}

/// Result of decoding one block.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecodeOutcome<T> {
    pub codeword: BitVector,
    /// Input of the inner code (`m · G_crc` for CRC-aided codes).
    pub v_estimate: BitVector,
    pub message: BitVector,
    /// `‖y − x(ĉ)‖`.
    pub metric: T,
    pub crc_pass: bool,
    pub stage: Stage,
    pub boost_rounds: usize,
    /// Candidate Euclidean-metric evaluations charged to this block.
    pub metric_evals: u64,
    pub trace: Option<BoostTrace<T>>,
}

/// A first-stage decoder usable in front of sphere refinement.
pub trait InitialDecoder<C: ?Sized, T: Real>: Sync {
    fn decode(
        &self,
        code: &C,
        y: &SoftVector<T>,
        noise: &NoiseModel<T>,
    ) -> Result<DecodeOutcome<T>>;
}
