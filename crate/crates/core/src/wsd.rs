//! Code-weight sphere decoding: greedy refinement over `ĉ + S_r(0)` and the
//! two-stage decoder built on it.
//!
//! Each round moves from the current codeword `ĉ` to the best candidate
//! `ĉ ⊕ w`, `w ∈ S_r(0)`, and stops as soon as that candidate is not strictly
//! closer to `y`. Scoring is incremental: with `z_i = y_i·x_i(ĉ)`,
//!
//! ```text
//! ‖y − x(ĉ ⊕ w)‖² = ‖y − x(ĉ)‖² + 4 Σ_{i ∈ supp(w)} z_i
//! ```
//!
//! so a candidate costs `w_H(w)` additions. Each candidate still counts as
//! one metric evaluation.

use serde::{Deserialize, Serialize};

use crate::channel::{squared_distance, NoiseModel, SoftVector};
use crate::code::BlockCode;
use crate::decoder::{DecodeOutcome, InitialDecoder, Stage};
use crate::error::{Error, Result};
use crate::gf2::BitVector;
use crate::scalar::Real;
use crate::sphere::SphereSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum WsdMode {
    /// Refine only blocks whose first-stage estimate fails the CRC.
    #[default]
    #[serde(rename = "standard")]
    Standard,
    /// Refine every block.
    #[serde(rename = "aom", alias = "always_on")]
    AlwaysOn,
}

impl WsdMode {
    pub fn as_str(self) -> &'static str {
        match self {
            WsdMode::Standard => "standard",
            WsdMode::AlwaysOn => "aom",
        }
    }
}

impl std::str::FromStr for WsdMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(WsdMode::Standard),
            "aom" | "always_on" | "always-on" => Ok(WsdMode::AlwaysOn),
            other => Err(Error::Invalid(format!("unknown WSD mode {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WsdConfig {
    pub radius_index: usize,
    pub max_rounds: usize,
    #[serde(default)]
    pub mode: WsdMode,
}

impl WsdConfig {
    pub fn new(radius_index: usize, max_rounds: usize, mode: WsdMode) -> Result<Self> {
        let cfg = WsdConfig {
            radius_index,
            max_rounds,
            mode,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.radius_index == 0 || self.max_rounds == 0 {
            return Err(Error::Invalid(format!(
                "WSD needs radius index >= 1 and rounds >= 1, got r={} J={}",
                self.radius_index, self.max_rounds
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// The first-stage estimate passed its check; no refinement ran.
    CrcEarlyExit,
    /// The best neighbour was not strictly better.
    NoImprovement,
    /// Every allowed round improved the metric.
    MaxRounds,
}

/// Record of one refinement run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoostTrace<T> {
    /// Accepted metrics `M^(0) > M^(1) > …`.
    pub metrics: Vec<T>,
    pub rounds_executed: usize,
    pub termination: Termination,
    pub metric_evals: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Refinement<T> {
    pub codeword: BitVector,
    pub trace: BoostTrace<T>,
}

/// Greedy sphere refinement from the codeword `start`, at most `max_rounds`
/// rounds.
pub fn wsd_refine<T: Real, C: BlockCode + ?Sized>(
    y: &SoftVector<T>,
    start: &BitVector,
    code: &C,
    sphere: &SphereSet,
    max_rounds: usize,
) -> Result<Refinement<T>> {
    if sphere.code_fingerprint() != code.fingerprint() {
        return Err(Error::FingerprintMismatch);
    }
    let n = code.block_len();
    if y.len() != n || start.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            found: if y.len() != n { y.len() } else { start.len() },
        });
    }
    if sphere.is_empty() || max_rounds == 0 {
        return Err(Error::Invalid(
            "refinement needs a nonempty sphere and J >= 1".into(),
        ));
    }

    let ys = y.as_slice();
    let mut current = start.clone();
    let mut d2 = squared_distance(y, &current)?;
    let mut metric = d2.sqrt();
    // z_i = y_i · x_i(current)
    let mut z: Vec<T> = ys
        .iter()
        .zip(current.iter())
        .map(|(&v, b)| if b { -v } else { v })
        .collect();
    let mut trace = BoostTrace {
        metrics: vec![metric],
        rounds_executed: 0,
        termination: Termination::MaxRounds,
        metric_evals: 0,
    };

    for _ in 0..max_rounds {
        trace.rounds_executed += 1;
        trace.metric_evals += sphere.member_count() as u64;

        let mut best = (T::infinity(), 0usize);
        for i in 0..sphere.member_count() {
            let delta: T = sphere.support(i).iter().map(|&p| z[p as usize]).sum();
            if delta < best.0 {
                best = (delta, i);
            }
        }

        let mut candidate = current.clone();
        candidate.xor_assign(&sphere.members()[best.1])?;
        let cand_d2 = squared_distance(y, &candidate)?;
        let cand_metric = cand_d2.sqrt();
        if cand_metric >= metric {
            trace.termination = Termination::NoImprovement;
            break;
        }
        for &p in sphere.support(best.1) {
            z[p as usize] = -z[p as usize];
        }
        current = candidate;
        d2 = cand_d2;
        metric = cand_metric;
        trace.metrics.push(metric);
    }
    debug_assert_eq!(d2.sqrt(), metric);
    Ok(Refinement {
        codeword: current,
        trace,
    })
}

/// `‖y − x(c ⊕ w)‖²` from `‖y − x(c)‖²` using only the support of `w`.
pub fn delta_squared_distance<T: Real>(
    y: &SoftVector<T>,
    center: &BitVector,
    center_d2: T,
    support: &[u32],
) -> T {
    let ys = y.as_slice();
    let shift: T = support
        .iter()
        .map(|&p| {
            let p = p as usize;
            if center.get(p) {
                -ys[p]
            } else {
                ys[p]
            }
        })
        .sum();
    center_d2 + T::lit(4.0) * shift
}

/// Initial decoding followed, when needed, by sphere refinement.
pub fn two_stage_decode<T, C, D>(
    y: &SoftVector<T>,
    noise: &NoiseModel<T>,
    code: &C,
    initial: &D,
    sphere: &SphereSet,
    cfg: &WsdConfig,
) -> Result<DecodeOutcome<T>>
where
    T: Real,
    C: BlockCode + ?Sized,
    D: InitialDecoder<C, T> + ?Sized,
{
    cfg.validate()?;
    if sphere.radius_index() != cfg.radius_index {
        return Err(Error::Invalid(format!(
            "sphere has radius index {}, configuration asks for {}",
            sphere.radius_index(),
            cfg.radius_index
        )));
    }
    if sphere.code_fingerprint() != code.fingerprint() {
        return Err(Error::FingerprintMismatch);
    }

    let first = initial.decode(code, y, noise)?;
    if cfg.mode == WsdMode::Standard && first.crc_pass {
        let metric = first.metric;
        return Ok(DecodeOutcome {
            trace: Some(BoostTrace {
                metrics: vec![metric],
                rounds_executed: 0,
                termination: Termination::CrcEarlyExit,
                metric_evals: 0,
            }),
            ..first
        });
    }

    // Re-encode so the refinement starts inside the concatenated code.
    let start = code.encode(&first.message)?;
    let refined = wsd_refine(y, &start, code, sphere, cfg.max_rounds)?;
    let message = code.message_of(&refined.codeword)?;
    Ok(DecodeOutcome {
        v_estimate: code.precode(&message)?,
        message,
        metric: *refined.trace.metrics.last().expect("at least M(0)"),
        codeword: refined.codeword,
        crc_pass: true,
        stage: Stage::Boosted,
        boost_rounds: refined.trace.rounds_executed,
        metric_evals: first.metric_evals + refined.trace.metric_evals,
        trace: Some(refined.trace),
    })
}
