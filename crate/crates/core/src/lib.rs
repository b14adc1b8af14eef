//! Two-stage near-ML decoding for CRC-aided polar codes over BPSK/AWGN:
//! CA-SCL list decoding followed by code-weight sphere refinement.
//!
//! The numeric core is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`, which the harness uses throughout.

pub mod channel;
pub mod code;
pub mod decoder;
pub mod error;
pub mod gf2;
pub mod scalar;
pub mod sim;
pub mod sphere;
pub mod wsd;

pub use channel::{
    awgn_transmit, bpsk_modulate, correlation, euclidean_distance, llr, snr_to_sigma,
    squared_distance, NoiseModel, SnrMode, SnrSpec, SoftVector,
};
pub use code::{
    build_ca_polar, encode, BlockCode, CaPolarCode, CrcSpec, Fingerprint, LinearCode, PolarSpec,
};
pub use decoder::{
    mld_decode, scl_decode, DecodeOutcome, InitialDecoder, MlDecoder, SclConfig, SclDecoder, Stage,
    SystematicHardDecoder,
};
pub use error::{CacheError, Error, Result};
pub use gf2::{BinaryMatrix, BitVector};
pub use scalar::Real;
pub use sphere::{
    build_sphere, enumerate_spectrum, load_sphere, save_sphere, SphereSet, WeightSpectrum,
};
pub use wsd::{two_stage_decode, wsd_refine, BoostTrace, Termination, WsdConfig, WsdMode};

pub type SoftVector64 = SoftVector<f64>;
pub type SoftVector32 = SoftVector<f32>;
pub type NoiseModel64 = NoiseModel<f64>;
pub type NoiseModel32 = NoiseModel<f32>;
pub type DecodeOutcome64 = DecodeOutcome<f64>;
pub type DecodeOutcome32 = DecodeOutcome<f32>;
pub type BoostTrace64 = BoostTrace<f64>;
