use crate::channel::{euclidean_distance, NoiseModel, SoftVector};
use crate::code::{BlockCode, LinearCode};
use crate::error::{Error, Result};
use crate::scalar::Real;

use super::{DecodeOutcome, InitialDecoder, Stage};

/// Hard decisions on the systematic positions of a `[I | P]` code. The block
/// "passes" when the full hard-decision vector is itself a codeword.
#[derive(Clone, Copy, Debug, Default)]
pub struct SystematicHardDecoder;

impl<T: Real> InitialDecoder<LinearCode, T> for SystematicHardDecoder {
    fn decode(
        &self,
        code: &LinearCode,
        y: &SoftVector<T>,
        _noise: &NoiseModel<T>,
    ) -> Result<DecodeOutcome<T>> {
        if code.systematic_parity_check().is_none() {
            return Err(Error::Invalid(
                "hard-decision decoder needs a systematic code".into(),
            ));
        }
        if y.len() != code.block_len() {
            return Err(Error::LengthMismatch {
                expected: code.block_len(),
                found: y.len(),
            });
        }
        let hard = y.hard_decision();
        let message = hard.slice(0, code.message_len());
        let reencoded = code.encode(&message)?;
        let crc_pass = reencoded == hard;
        Ok(DecodeOutcome {
            metric: euclidean_distance(y, &hard)?,
            codeword: hard,
            v_estimate: message.clone(),
            message,
            crc_pass,
            stage: Stage::Initial,
            boost_rounds: 0,
            metric_evals: 0,
            trace: None,
        })
    }
}
