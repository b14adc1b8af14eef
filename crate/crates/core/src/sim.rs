//! Monte-Carlo BLER and complexity campaigns.
//!
//! Every trial draws from its own ChaCha8 stream keyed by the point seed and
//! the trial index, and trials are scanned in index order when applying the
//! stopping rule, so results depend only on the configuration and seed.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::channel::{
    awgn_transmit, bpsk_modulate, snr_to_sigma, NoiseModel, SnrMode, SnrSpec, SoftVector,
};
use crate::code::{BlockCode, CaPolarCode, CrcSpec};
use crate::decoder::{DecodeOutcome, InitialDecoder, MlDecoder, SclConfig, SclDecoder, Stage};
use crate::error::{Error, Result};
use crate::gf2::BitVector;
use crate::sphere::{build_sphere, SphereSet, DEFAULT_ENUMERATION_CAP};
use crate::wsd::{two_stage_decode, WsdConfig};

pub const DEFAULT_TARGET_BLOCK_ERRORS: u64 = 100;
pub const DEFAULT_MAX_BLOCKS: u64 = 1_000_000;
pub const DEFAULT_LIST_SIZE: usize = 32;
/// Trials decoded per parallel batch. Fixed so that the stopping point never
/// depends on the worker count.
pub const BATCH_SIZE: u64 = 512;
/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959963984540054;
pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecoderKind {
    Scl,
    SclWsd,
    Mld,
}

impl DecoderKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DecoderKind::Scl => "scl",
            DecoderKind::SclWsd => "scl_wsd",
            DecoderKind::Mld => "mld",
        }
    }
}

impl std::str::FromStr for DecoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scl" => Ok(DecoderKind::Scl),
            "scl_wsd" | "scl-wsd" => Ok(DecoderKind::SclWsd),
            "mld" => Ok(DecoderKind::Mld),
            other => Err(Error::Config(format!("unknown decoder {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeParams {
    pub n: usize,
    pub k: usize,
    /// Bit `i` is the coefficient of `x^i`. Written as a hex string; numbers
    /// are accepted too.
    #[serde(serialize_with = "ser_poly", deserialize_with = "de_poly")]
    pub crc_poly: u64,
}

fn ser_poly<S: Serializer>(poly: &u64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(&format_args!("{poly:#X}"))
}

fn de_poly<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<u64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Poly {
        Num(u64),
        Text(String),
    }
    match Poly::deserialize(d)? {
        Poly::Num(v) => Ok(v),
        Poly::Text(s) => parse_poly(&s).map_err(serde::de::Error::custom),
    }
}

/// Parses `0xE21`, `0b111` or a decimal integer.
pub fn parse_poly(s: &str) -> Result<u64> {
    let t = s.trim();
    let parsed = if let Some(h) = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        u64::from_str_radix(h, 16)
    } else if let Some(b) = t.strip_prefix("0b") {
        u64::from_str_radix(b, 2)
    } else {
        t.parse()
    };
    parsed.map_err(|_| Error::Config(format!("bad CRC polynomial {s:?}")))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnrGrid {
    #[serde(default)]
    pub mode: SnrMode,
    pub grid: Vec<f64>,
}

impl SnrGrid {
    /// `start, start + step, …` up to `stop` inclusive (with a small
    /// tolerance for accumulated rounding).
    pub fn range(mode: SnrMode, start: f64, stop: f64, step: f64) -> Result<Self> {
        if step.is_nan() || step <= 0.0 || !start.is_finite() || !stop.is_finite() || stop < start {
            return Err(Error::Config(format!(
                "bad SNR range start={start} stop={stop} step={step}"
            )));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        let grid = (0..count).map(|i| start + i as f64 * step).collect();
        Ok(SnrGrid { mode, grid })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Trials {
    #[serde(default = "default_max_blocks")]
    pub max_blocks: u64,
    #[serde(default = "default_target")]
    pub target_block_errors: u64,
}

fn default_max_blocks() -> u64 {
    DEFAULT_MAX_BLOCKS
}

fn default_target() -> u64 {
    DEFAULT_TARGET_BLOCK_ERRORS
}

fn default_list_size() -> usize {
    DEFAULT_LIST_SIZE
}

impl Default for Trials {
    fn default() -> Self {
        Trials {
            max_blocks: DEFAULT_MAX_BLOCKS,
            target_block_errors: DEFAULT_TARGET_BLOCK_ERRORS,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub code: CodeParams,
    pub decoder: DecoderKind,
    #[serde(default = "default_list_size")]
    pub list_size: usize,
    #[serde(default)]
    pub wsd: Option<WsdConfig>,
    pub snr: SnrGrid,
    #[serde(default)]
    pub trials: Trials,
    pub seed: u64,
    #[serde(default)]
    pub sphere_cache_path: Option<PathBuf>,
}

impl SimConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SimConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.snr.grid.is_empty() {
            return Err(Error::Config("SNR grid is empty".into()));
        }
        if self.snr.grid.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("SNR grid has non-finite values".into()));
        }
        if self.trials.max_blocks == 0 || self.trials.target_block_errors == 0 {
            return Err(Error::Config(
                "max_blocks and target_block_errors must be at least 1".into(),
            ));
        }
        if self.list_size == 0 {
            return Err(Error::Config("list_size must be at least 1".into()));
        }
        match (self.decoder, &self.wsd) {
            (DecoderKind::SclWsd, None) => {
                Err(Error::Config("decoder scl_wsd needs a wsd section".into()))
            }
            (DecoderKind::SclWsd, Some(w)) => w.validate(),
            _ => Ok(()),
        }
    }
}

/// One measured SNR point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlerPoint {
    pub snr_db: f64,
    pub blocks_simulated: u64,
    pub block_errors: u64,
    pub bler: f64,
    pub bler_ci_low: f64,
    pub bler_ci_high: f64,
    pub total_metric_evals: u64,
    pub avg_metric_evals_per_block: f64,
    /// Per-block figure divided by `N`.
    pub avg_metric_evals_per_bit: f64,
    pub avg_boost_rounds: f64,
    /// Fraction of blocks whose first-stage estimate failed the CRC (for
    /// `scl_wsd`: blocks that entered refinement).
    pub crc_fail_rate_hat: f64,
}

/// Wilson score interval for `errors / blocks` at normal quantile `z`.
pub fn wilson_interval(errors: u64, blocks: u64, z: f64) -> (f64, f64) {
    if blocks == 0 {
        return (0.0, 1.0);
    }
    let n = blocks as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    (
        (center - half).max(0.0).min(p),
        (center + half).min(1.0).max(p),
    )
}

/// Seed of the `index`-th SNR point of a campaign.
pub fn point_seed(campaign_seed: u64, snr_index: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(campaign_seed.to_le_bytes());
    h.update((snr_index as u64).to_le_bytes());
    u64::from_le_bytes(h.finalize()[..8].try_into().expect("8 bytes"))
}

/// Private generator of one trial.
pub fn trial_rng(point_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(point_seed);
    rng.set_stream(trial);
    rng
}

#[derive(Clone, Copy, Default)]
struct TrialStat {
    error: bool,
    crc_fail: bool,
    evals: u64,
    rounds: u64,
}

/// A configuration with its code, decoders and sphere set up.
pub struct Campaign {
    cfg: SimConfig,
    code: CaPolarCode,
    scl: SclDecoder,
    sphere: Option<SphereSet>,
}

impl Campaign {
    /// Builds the code and, for `scl_wsd`, loads or enumerates the sphere.
    /// A configured cache path that is missing or belongs to another code is
    /// an error.
    pub fn new(cfg: SimConfig) -> Result<Self> {
        cfg.validate()?;
        let crc = CrcSpec::from_poly(cfg.code.crc_poly)?;
        let code = CaPolarCode::new(cfg.code.n, cfg.code.k, crc)?;
        if cfg.decoder == DecoderKind::Mld && code.k() > DEFAULT_ENUMERATION_CAP {
            return Err(Error::EnumerationCap {
                k: code.k(),
                cap: DEFAULT_ENUMERATION_CAP,
            });
        }
        let sphere = match (cfg.decoder, &cfg.wsd) {
            (DecoderKind::SclWsd, Some(w)) => Some(match &cfg.sphere_cache_path {
                Some(path) => SphereSet::load_for(path, &code, w.radius_index)?,
                None => build_sphere(&code, w.radius_index)?,
            }),
            _ => None,
        };
        let scl = SclDecoder::new(SclConfig::new(cfg.list_size)?);
        Ok(Campaign {
            cfg,
            code,
            scl,
            sphere,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn code(&self) -> &CaPolarCode {
        &self.code
    }

    pub fn sphere(&self) -> Option<&SphereSet> {
        self.sphere.as_ref()
    }

    pub fn noise(&self, snr_db: f64) -> Result<NoiseModel<f64>> {
        let spec = SnrSpec {
            mode: self.cfg.snr.mode,
            value_db: snr_db,
        };
        snr_to_sigma(spec, self.code.rate())
    }

    pub fn decode(
        &self,
        y: &SoftVector<f64>,
        noise: &NoiseModel<f64>,
    ) -> Result<DecodeOutcome<f64>> {
        match self.cfg.decoder {
            DecoderKind::Scl => self.scl.decode(&self.code, y, noise),
            DecoderKind::Mld => MlDecoder::default().decode(&self.code, y, noise),
            DecoderKind::SclWsd => {
                let (sphere, wsd) = (
                    self.sphere.as_ref().expect("sphere prepared"),
                    self.cfg.wsd.as_ref().expect("validated"),
                );
                two_stage_decode(y, noise, &self.code, &self.scl, sphere, wsd)
            }
        }
    }

    /// Transmits and decodes trial `trial` of a point; returns the sent
    /// message, the channel output and the decoder outcome.
    pub fn run_trial(
        &self,
        noise: &NoiseModel<f64>,
        point_seed: u64,
        trial: u64,
    ) -> Result<(BitVector, SoftVector<f64>, DecodeOutcome<f64>)> {
        let mut rng = trial_rng(point_seed, trial);
        let message = BitVector::from_bits((0..self.code.k()).map(|_| rng.gen::<bool>()));
        let x = bpsk_modulate::<f64>(&self.code.encode(&message)?);
        let y = awgn_transmit(&x, noise, &mut rng);
        let out = self.decode(&y, noise)?;
        Ok((message, y, out))
    }

    fn trial_stat(
        &self,
        noise: &NoiseModel<f64>,
        point_seed: u64,
        trial: u64,
    ) -> Result<TrialStat> {
        let (message, _, out) = self.run_trial(noise, point_seed, trial)?;
        let crc_fail = match self.cfg.decoder {
            DecoderKind::SclWsd => out.stage == Stage::Boosted,
            _ => !out.crc_pass,
        };
        Ok(TrialStat {
            error: out.message != message,
            crc_fail,
            evals: out.metric_evals,
            rounds: out.boost_rounds as u64,
        })
    }

    /// Simulates one SNR point on the current rayon pool.
    pub fn run_point(&self, snr_db: f64, point_seed: u64) -> Result<BlerPoint> {
        let noise = self.noise(snr_db)?;
        let Trials {
            max_blocks,
            target_block_errors,
        } = self.cfg.trials;

        let (mut blocks, mut errors, mut evals, mut rounds, mut fails) =
            (0u64, 0u64, 0u64, 0u64, 0u64);
        'outer: while blocks < max_blocks {
            let end = (blocks + BATCH_SIZE).min(max_blocks);
            let stats: Vec<TrialStat> = (blocks..end)
                .into_par_iter()
                .map(|t| self.trial_stat(&noise, point_seed, t))
                .collect::<Result<_>>()?;
            for s in stats {
                blocks += 1;
                errors += s.error as u64;
                fails += s.crc_fail as u64;
                evals += s.evals;
                rounds += s.rounds;
                if errors >= target_block_errors {
                    break 'outer;
                }
            }
        }

        let n = blocks as f64;
        let bler = errors as f64 / n;
        let (lo, hi) = wilson_interval(errors, blocks, Z_95);
        let per_block = evals as f64 / n;
        Ok(BlerPoint {
            snr_db,
            blocks_simulated: blocks,
            block_errors: errors,
            bler,
            bler_ci_low: lo,
            bler_ci_high: hi,
            total_metric_evals: evals,
            avg_metric_evals_per_block: per_block,
            avg_metric_evals_per_bit: per_block / self.code.n() as f64,
            avg_boost_rounds: rounds as f64 / n,
            crc_fail_rate_hat: fails as f64 / n,
        })
    }

    /// Runs every grid point, in order.
    pub fn run_all(&self) -> Result<Vec<BlerPoint>> {
        self.cfg
            .snr
            .grid
            .iter()
            .enumerate()
            .map(|(i, &snr)| self.run_point(snr, point_seed(self.cfg.seed, i)))
            .collect()
    }
}

/// One point of `cfg` on the global rayon pool.
pub fn run_bler_point(cfg: &SimConfig, snr_db: f64, point_seed: u64) -> Result<BlerPoint> {
    Campaign::new(cfg.clone())?.run_point(snr_db, point_seed)
}

#[derive(Clone, Debug, Default)]
pub struct SweepOptions {
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
    /// CSV destination. The JSON sidecar goes next to it with a `.json`
    /// extension.
    pub csv_out: Option<PathBuf>,
}

/// Runs the whole grid and writes the CSV and sidecar when requested.
pub fn run_sweep(cfg: &SimConfig, opts: &SweepOptions) -> Result<Vec<BlerPoint>> {
    let campaign = Campaign::new(cfg.clone())?;
    let points = match opts.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(|| campaign.run_all())?,
        None => campaign.run_all()?,
    };
    if let Some(path) = &opts.csv_out {
        fs::write(path, csv_string(cfg, &points)?).map_err(|e| Error::io(path, e))?;
        let side = sidecar_path(path);
        fs::write(&side, sidecar_json(&campaign)).map_err(|e| Error::io(&side, e))?;
    }
    Ok(points)
}

pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

#[derive(Serialize)]
struct CsvRow<'a> {
    snr_db: f64,
    snr_mode: &'a str,
    decoder: &'a str,
    list_size: Option<usize>,
    radius: Option<usize>,
    max_rounds: Option<usize>,
    mode: Option<&'a str>,
    blocks: u64,
    errors: u64,
    bler: f64,
    ci_low: f64,
    ci_high: f64,
    avg_evals_block: f64,
    avg_evals_bit: f64,
    avg_boost_rounds: f64,
    crc_fail_rate: f64,
    seed: u64,
}

pub const CSV_HEADER: &str = "snr_db,snr_mode,decoder,list_size,radius,max_rounds,mode,blocks,errors,bler,ci_low,ci_high,avg_evals_block,avg_evals_bit,avg_boost_rounds,crc_fail_rate,seed";

/// Renders the points as CSV with a header row.
pub fn csv_string(cfg: &SimConfig, points: &[BlerPoint]) -> Result<String> {
    let wsd = match cfg.decoder {
        DecoderKind::SclWsd => cfg.wsd,
        _ => None,
    };
    let list_size = (cfg.decoder != DecoderKind::Mld).then_some(cfg.list_size);
    let mut w = csv::Writer::from_writer(Vec::new());
    for p in points {
        w.serialize(CsvRow {
            snr_db: p.snr_db,
            snr_mode: cfg.snr.mode.as_str(),
            decoder: cfg.decoder.as_str(),
            list_size,
            radius: wsd.map(|w| w.radius_index),
            max_rounds: wsd.map(|w| w.max_rounds),
            mode: wsd.map(|w| w.mode.as_str()),
            blocks: p.blocks_simulated,
            errors: p.block_errors,
            bler: p.bler,
            ci_low: p.bler_ci_low,
            ci_high: p.bler_ci_high,
            avg_evals_block: p.avg_metric_evals_per_block,
            avg_evals_bit: p.avg_metric_evals_per_bit,
            avg_boost_rounds: p.avg_boost_rounds,
            crc_fail_rate: p.crc_fail_rate_hat,
            seed: cfg.seed,
        })
        .map_err(|e| Error::Config(format!("csv: {e}")))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Config(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

#[derive(Serialize)]
struct Sidecar<'a> {
    tool_version: &'a str,
    code_fingerprint: String,
    seed: u64,
    sphere_members: Option<usize>,
    config: &'a SimConfig,
}

pub fn sidecar_json(campaign: &Campaign) -> String {
    let side = Sidecar {
        tool_version: TOOL_VERSION,
        code_fingerprint: campaign.code.fingerprint().to_string(),
        seed: campaign.cfg.seed,
        sphere_members: campaign.sphere.as_ref().map(|s| s.member_count()),
        config: &campaign.cfg,
    };
    let mut s = serde_json::to_string_pretty(&side).expect("sidecar serializes");
    s.push('\n');
    s
}
