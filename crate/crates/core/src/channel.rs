//! BPSK over AWGN: modulation, noise, SNR conversion and LLRs.
//!
//! Gaussian samples come from `rand_distr::StandardNormal` (the ziggurat
//! method of rand_distr 0.4) driven by a ChaCha stream, so a seed fixes the
//! noise exactly.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::BitVector;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SnrMode {
    /// Energy per information bit; uses the code rate `K/N`.
    #[default]
    EbN0,
    /// Energy per channel symbol.
    EsN0,
}

impl SnrMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SnrMode::EbN0 => "ebn0",
            SnrMode::EsN0 => "esn0",
        }
    }
}

impl std::str::FromStr for SnrMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ebn0" => Ok(SnrMode::EbN0),
            "esn0" => Ok(SnrMode::EsN0),
            other => Err(Error::Invalid(format!("unknown SNR mode {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnrSpec {
    pub mode: SnrMode,
    pub value_db: f64,
}

impl SnrSpec {
    pub fn ebn0(value_db: f64) -> Self {
        SnrSpec {
            mode: SnrMode::EbN0,
            value_db,
        }
    }

    pub fn esn0(value_db: f64) -> Self {
        SnrSpec {
            mode: SnrMode::EsN0,
            value_db,
        }
    }
}

/// Per-dimension noise standard deviation, `σ² = N_0 / 2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseModel<T> {
    sigma: T,
}

impl<T: Real> NoiseModel<T> {
    pub fn new(sigma: T) -> Result<Self> {
        if !(sigma > T::zero() && sigma.is_finite()) {
            return Err(Error::Invalid(format!(
                "noise sigma must be positive, got {sigma}"
            )));
        }
        Ok(NoiseModel { sigma })
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn variance(&self) -> T {
        self.sigma * self.sigma
    }
}

/// Real-valued channel vector (modulated symbols or received samples).
#[derive(Clone, Debug, PartialEq, Default)]
pub struct SoftVector<T>(Vec<T>);

impl<T: Real> SoftVector<T> {
    pub fn new(samples: Vec<T>) -> Result<Self> {
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::Invalid(
                "soft vector holds a non-finite sample".into(),
            ));
        }
        Ok(SoftVector(samples))
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }

    pub fn norm_squared(&self) -> T {
        self.0.iter().map(|&v| v * v).sum()
    }

    /// Sign-based hard decision, `y_i < 0 ⇒ 1`.
    pub fn hard_decision(&self) -> BitVector {
        BitVector::from_bits(self.0.iter().map(|&v| v < T::zero()))
    }
}

/// `x = 1 − 2c`.
pub fn bpsk_modulate<T: Real>(c: &BitVector) -> SoftVector<T> {
    SoftVector(
        c.iter()
            .map(|b| if b { -T::one() } else { T::one() })
            .collect(),
    )
}

/// Noise level for a given SNR. `rate` is ignored in Es/N0 mode.
pub fn snr_to_sigma<T: Real>(spec: SnrSpec, rate: f64) -> Result<NoiseModel<T>> {
    if !spec.value_db.is_finite() {
        return Err(Error::Invalid("SNR must be finite".into()));
    }
    let linear = 10f64.powf(spec.value_db / 10.0);
    let variance = match spec.mode {
        SnrMode::EbN0 => {
            if !(rate > 0.0 && rate <= 1.0) {
                return Err(Error::Invalid(format!(
                    "code rate must lie in (0, 1], got {rate}"
                )));
            }
            1.0 / (2.0 * rate * linear)
        }
        SnrMode::EsN0 => 1.0 / (2.0 * linear),
    };
    NoiseModel::new(T::lit(variance.sqrt()))
}

/// `y = x + n`, `n_i ~ N(0, σ²)` i.i.d., drawn from `rng` in index order.
pub fn awgn_transmit<T: Real, R: Rng + ?Sized>(
    x: &SoftVector<T>,
    noise: &NoiseModel<T>,
    rng: &mut R,
) -> SoftVector<T> {
    SoftVector(
        x.0.iter()
            .map(|&xi| {
                let n: f64 = rng.sample(StandardNormal);
                xi + noise.sigma * T::lit(n)
            })
            .collect(),
    )
}

/// `llr_i = 2 y_i / σ²`, positive favouring bit 0.
pub fn llr<T: Real>(y: &SoftVector<T>, noise: &NoiseModel<T>) -> Vec<T> {
    let scale = T::lit(2.0) / noise.variance();
    y.0.iter().map(|&v| v * scale).collect()
}

/// `‖y − x(c)‖²`, computed directly.
pub fn squared_distance<T: Real>(y: &SoftVector<T>, c: &BitVector) -> Result<T> {
    if y.len() != c.len() {
        return Err(Error::LengthMismatch {
            expected: y.len(),
            found: c.len(),
        });
    }
    Ok(y.0
        .iter()
        .zip(c.iter())
        .map(|(&v, b)| {
            let d = v - if b { -T::one() } else { T::one() };
            d * d
        })
        .sum())
}

/// `‖y − x(c)‖`.
pub fn euclidean_distance<T: Real>(y: &SoftVector<T>, c: &BitVector) -> Result<T> {
    Ok(squared_distance(y, c)?.sqrt())
}

/// `⟨y, x(c)⟩`.
pub fn correlation<T: Real>(y: &SoftVector<T>, c: &BitVector) -> Result<T> {
    if y.len() != c.len() {
        return Err(Error::LengthMismatch {
            expected: y.len(),
            found: c.len(),
        });
    }
    Ok(y.0
        .iter()
        .zip(c.iter())
        .map(|(&v, b)| if b { -v } else { v })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn modulation() {
        let x: SoftVector<f64> = bpsk_modulate(&BitVector::zeros(4));
        assert_eq!(x.as_slice(), &[1.0; 4]);
        let c = BitVector::from_u8s(&[0, 1]);
        let x: SoftVector<f32> = bpsk_modulate(&c);
        assert_eq!(x.as_slice(), &[1.0, -1.0]);
        assert_eq!(x.hard_decision(), c);
    }

    #[test]
    fn snr_conversion() {
        let n: NoiseModel<f64> = snr_to_sigma(SnrSpec::ebn0(0.0), 0.25).unwrap();
        assert!((n.variance() - 2.0).abs() < 1e-12);
        assert!((n.sigma() - std::f64::consts::SQRT_2).abs() < 1e-6);
        let n: NoiseModel<f64> = snr_to_sigma(SnrSpec::esn0(0.0), 0.0).unwrap();
        assert!((n.variance() - 0.5).abs() < 1e-12);
        assert!(snr_to_sigma::<f64>(SnrSpec::ebn0(1.0), 0.0).is_err());
        assert!(snr_to_sigma::<f64>(SnrSpec::ebn0(f64::NAN), 0.5).is_err());
        let mut last = f64::INFINITY;
        for db in 0..60 {
            let s = snr_to_sigma::<f64>(SnrSpec::ebn0(db as f64), 0.5)
                .unwrap()
                .sigma();
            assert!(s < last);
            last = s;
        }
        assert!(last < 1e-2);
    }

    #[test]
    fn noise_statistics() {
        let noise = NoiseModel::new(0.8f64).unwrap();
        let x = SoftVector::new(vec![0.0; 1_000_000]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let y = awgn_transmit(&x, &noise, &mut rng);
        let n = y.len() as f64;
        let mean = y.as_slice().iter().sum::<f64>() / n;
        let var = y.as_slice().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 4.0 * 0.8 / 1000.0, "mean {mean}");
        assert!((var / 0.64 - 1.0).abs() < 0.01, "var {var}");

        let tiny = NoiseModel::new(1e-300f64).unwrap();
        let x = SoftVector::new(vec![1.0, -1.0]).unwrap();
        assert_eq!(awgn_transmit(&x, &tiny, &mut rng), x);

        let mut r1 = ChaCha8Rng::seed_from_u64(1);
        let mut r2 = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(
            awgn_transmit(&x, &noise, &mut r1),
            awgn_transmit(&x, &noise, &mut r2)
        );
        assert!(NoiseModel::new(0.0f64).is_err());
    }

    #[test]
    fn llr_values() {
        let noise = NoiseModel::new(0.7f64).unwrap();
        let s2 = noise.variance();
        let y = SoftVector::new(vec![0.0, s2 / 2.0, -0.3, 1.2]).unwrap();
        let l = llr(&y, &noise);
        assert_eq!(l[0], 0.0);
        assert!((l[1] - 1.0).abs() < 1e-12);
        for (li, yi) in l.iter().zip(y.as_slice()) {
            assert!(li.signum() == yi.signum());
        }
    }

    #[test]
    fn distance_identity_and_argmin_equivalence() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let noise = NoiseModel::new(1.0f64).unwrap();
        for _ in 0..1000 {
            let n = rng.gen_range(1..100);
            let y = awgn_transmit(&SoftVector::new(vec![0.0; n]).unwrap(), &noise, &mut rng);
            let cands: Vec<BitVector> = (0..8)
                .map(|_| BitVector::from_bits((0..n).map(|_| rng.gen::<bool>())))
                .collect();
            for c in &cands {
                let direct = squared_distance(&y, c).unwrap();
                let via_corr = y.norm_squared() - 2.0 * correlation(&y, c).unwrap() + n as f64;
                assert!((direct - via_corr).abs() <= 1e-9 * direct.abs().max(1.0));
            }
            let by_dist = cands.iter().min_by(|a, b| {
                squared_distance(&y, a)
                    .unwrap()
                    .total_cmp(&squared_distance(&y, b).unwrap())
            });
            let by_corr = cands.iter().max_by(|a, b| {
                correlation(&y, a)
                    .unwrap()
                    .total_cmp(&correlation(&y, b).unwrap())
            });
            assert_eq!(
                squared_distance(&y, by_dist.unwrap()).unwrap(),
                squared_distance(&y, by_corr.unwrap()).unwrap()
            );
        }
    }
}
