//! Code construction: CRC precoding, polar generator selection from the 5G-NR
//! reliability sequence, and the concatenated CRC-aided polar code.

use std::fmt;
use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gf2::{BinaryMatrix, BitVector};

/// Universal polar reliability sequence of 3GPP TS 38.212 (Table 5.3.1.2-1),
/// N_max = 1024, listed in ascending reliability. One index per line.
const NR_SEQUENCE_TXT: &str = include_str!("../data/nr_reliability_sequence.txt");

/// The 5G-NR reliability sequence, least reliable index first.
pub fn nr_reliability_sequence() -> &'static [usize] {
    static SEQ: OnceLock<Vec<usize>> = OnceLock::new();
    SEQ.get_or_init(|| {
        NR_SEQUENCE_TXT
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                l.trim()
                    .parse()
                    .expect("reliability sequence asset is malformed")
            })
            .collect()
    })
}

/// SHA-256 of a generator matrix in row-major packed form.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Fingerprint(pub [u8; 32]);

impl Fingerprint {
    pub fn of_matrix(m: &BinaryMatrix) -> Self {
        Fingerprint(Sha256::digest(m.to_packed_bytes()).into())
    }
}

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fingerprint({self})")
    }
}

/// A binary linear code described by a `K × N` generator over its messages.
///
/// Everything downstream of construction (enumeration, spheres, the ML oracle
/// and the refinement stage) only needs this view of a code.
pub trait BlockCode: Sync {
    fn generator(&self) -> &BinaryMatrix;

    fn fingerprint(&self) -> &Fingerprint;

    fn block_len(&self) -> usize {
        self.generator().cols()
    }

    fn message_len(&self) -> usize {
        self.generator().rows()
    }

    fn encode(&self, message: &BitVector) -> Result<BitVector> {
        self.generator().vec_mul(message)
    }

    /// The vector handed to the inner code for `message` (the CRC-encoded
    /// `v` for concatenated codes, the message itself otherwise).
    fn precode(&self, message: &BitVector) -> Result<BitVector> {
        if message.len() != self.message_len() {
            return Err(Error::LengthMismatch {
                expected: self.message_len(),
                found: message.len(),
            });
        }
        Ok(message.clone())
    }

    /// Message whose encoding is `codeword`. Only meaningful for codewords.
    fn message_of(&self, codeword: &BitVector) -> Result<BitVector>;
}

/// A plain linear code given only by its generator matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearCode {
    generator: BinaryMatrix,
    fingerprint: Fingerprint,
    // K independent columns of the generator and the inverse of that K × K
    // submatrix: m = c[pivots] · inverse.
    pivots: Vec<usize>,
    inverse: BinaryMatrix,
}

impl LinearCode {
    /// The generator must have full row rank.
    pub fn new(generator: BinaryMatrix) -> Result<Self> {
        let (pivots, inverse) = invert_on_pivots(&generator)?;
        let fingerprint = Fingerprint::of_matrix(&generator);
        Ok(LinearCode {
            generator,
            fingerprint,
            pivots,
            inverse,
        })
    }

    /// Random code in systematic form `[I_K | P]`.
    pub fn random_systematic<R: Rng + ?Sized>(k: usize, n: usize, rng: &mut R) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::Invalid(format!(
                "need 1 <= k <= n, got k={k}, n={n}"
            )));
        }
        let rows = (0..k)
            .map(|i| BitVector::from_bits((0..n).map(|j| if j < k { i == j } else { rng.gen() })))
            .collect();
        Self::new(BinaryMatrix::from_rows(n, rows)?)
    }

    /// Parity-check matrix `[Pᵀ | I]` when the generator is systematic.
    pub fn systematic_parity_check(&self) -> Option<BinaryMatrix> {
        let (k, n) = (self.generator.rows(), self.generator.cols());
        let systematic = (0..k).all(|i| (0..k).all(|j| self.generator.get(i, j) == (i == j)));
        if !systematic {
            return None;
        }
        let rows = (0..n - k)
            .map(|p| {
                BitVector::from_bits((0..n).map(|j| {
                    if j < k {
                        self.generator.get(j, k + p)
                    } else {
                        j - k == p
                    }
                }))
            })
            .collect();
        BinaryMatrix::from_rows(n, rows).ok()
    }
}

impl BlockCode for LinearCode {
    fn generator(&self) -> &BinaryMatrix {
        &self.generator
    }

    fn fingerprint(&self) -> &Fingerprint {
        &self.fingerprint
    }

    fn message_of(&self, codeword: &BitVector) -> Result<BitVector> {
        if codeword.len() != self.block_len() {
            return Err(Error::LengthMismatch {
                expected: self.block_len(),
                found: codeword.len(),
            });
        }
        let picked = BitVector::from_bits(self.pivots.iter().map(|&j| codeword.get(j)));
        self.inverse.vec_mul(&picked)
    }
}

/// Picks `K` linearly independent columns of a `K × N` generator and inverts
/// the generator restricted to them.
fn invert_on_pivots(g: &BinaryMatrix) -> Result<(Vec<usize>, BinaryMatrix)> {
    let k = g.rows();
    // Fully reduced basis: every vector is zero on the other vectors' leads.
    let mut basis: Vec<(usize, BitVector)> = Vec::with_capacity(k);
    let mut pivots = Vec::with_capacity(k);
    for (j, col) in g.transpose().row_iter().enumerate() {
        if pivots.len() == k {
            break;
        }
        let mut v = col.clone();
        for (lead, b) in &basis {
            if v.get(*lead) {
                v.xor_assign(b)?;
            }
        }
        let Some(&lead) = v.support().first() else {
            continue;
        };
        for (_, b) in basis.iter_mut() {
            if b.get(lead) {
                b.xor_assign(&v)?;
            }
        }
        basis.push((lead, v));
        pivots.push(j);
    }
    if pivots.len() < k {
        return Err(Error::Construction(format!(
            "generator has rank {} < {k}",
            pivots.len()
        )));
    }
    // Row-reduce [A | I] to [I | A^{-1}], A = g[:, pivots].
    let mut rows: Vec<(BitVector, BitVector)> = (0..k)
        .map(|i| {
            let a = BitVector::from_bits(pivots.iter().map(|&j| g.get(i, j)));
            let mut e = BitVector::zeros(k);
            e.set(i, true);
            (a, e)
        })
        .collect();
    for col in 0..k {
        let p = (col..k)
            .find(|&r| rows[r].0.get(col))
            .ok_or_else(|| Error::Construction("singular pivot block".into()))?;
        rows.swap(col, p);
        let (pa, pe) = rows[col].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != col && row.0.get(col) {
                row.0.xor_assign(&pa)?;
                row.1.xor_assign(&pe)?;
            }
        }
    }
    let inverse = BinaryMatrix::from_rows(k, rows.into_iter().map(|(_, e)| e).collect())?;
    Ok((pivots, inverse))
}

/// CRC generator polynomial `g(x)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrcSpec {
    /// Coefficients of `x^0 ..= x^degree`.
    coefficients: Vec<bool>,
}

impl CrcSpec {
    /// `g(x) = 1 + x^5 + x^9 + x^10 + x^11`.
    pub const CRC11_POLY: u64 = 0xE21;

    pub fn new(coefficients: Vec<bool>) -> Result<Self> {
        let degree = coefficients
            .len()
            .checked_sub(1)
            .ok_or_else(|| Error::Construction("empty CRC polynomial".into()))?;
        if degree == 0 || !coefficients[0] || !coefficients[degree] {
            return Err(Error::Construction(
                "CRC polynomial needs degree >= 1 and nonzero x^0 and leading coefficients".into(),
            ));
        }
        Ok(CrcSpec { coefficients })
    }

    /// Polynomial given as an integer whose bit `k` is the coefficient of
    /// `x^k`, e.g. `0xE21` for `1 + x^5 + x^9 + x^10 + x^11`.
    pub fn from_poly(poly: u64) -> Result<Self> {
        if poly == 0 {
            return Err(Error::Construction("zero CRC polynomial".into()));
        }
        let degree = 63 - poly.leading_zeros() as usize;
        Self::new((0..=degree).map(|k| (poly >> k) & 1 == 1).collect())
    }

    pub fn crc11() -> Self {
        Self::from_poly(Self::CRC11_POLY).expect("valid constant")
    }

    /// Number of parity bits.
    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn coefficients(&self) -> &[bool] {
        &self.coefficients
    }

    pub fn to_poly(&self) -> u64 {
        self.coefficients
            .iter()
            .enumerate()
            .fold(0, |acc, (k, &c)| acc | ((c as u64) << k))
    }
}

/// Systematic-append CRC matrices for `K`-bit messages.
///
/// Message bit `m_0` is the highest-degree coefficient of `m(x)`; the parity
/// block `p(x) = m(x)·x^{K_crc} mod g(x)` follows the message with its
/// highest-degree coefficient first. No register preset, reflection or final
/// XOR. Returns `(g_crc, h_crc)` of shapes `K × (K+K_crc)` and
/// `K_crc × (K+K_crc)`.
pub fn build_crc_matrices(spec: &CrcSpec, k: usize) -> Result<(BinaryMatrix, BinaryMatrix)> {
    if k == 0 {
        return Err(Error::Invalid(
            "CRC message length must be at least 1".into(),
        ));
    }
    let r = spec.degree();
    let g = spec.coefficients();
    let parity_row = |i: usize| -> Vec<bool> {
        // x^{K-1-i+r} mod g(x), by long division.
        let mut rem = vec![false; k + r];
        rem[k - 1 - i + r] = true;
        for d in (r..k + r).rev() {
            if rem[d] {
                for (j, &c) in g.iter().enumerate() {
                    rem[d - r + j] ^= c;
                }
            }
        }
        (0..r).map(|j| rem[r - 1 - j]).collect()
    };
    let parity: Vec<Vec<bool>> = (0..k).map(parity_row).collect();

    let g_rows = (0..k)
        .map(|i| BitVector::from_bits((0..k).map(|j| i == j).chain(parity[i].iter().copied())))
        .collect();
    let h_rows = (0..r)
        .map(|p| BitVector::from_bits((0..k).map(|j| parity[j][p]).chain((0..r).map(|q| p == q))))
        .collect();
    Ok((
        BinaryMatrix::from_rows(k + r, g_rows)?,
        BinaryMatrix::from_rows(k + r, h_rows)?,
    ))
}

/// Picks the `k_total` most reliable positions below `n`, sorted ascending.
pub fn select_info_set(n: usize, k_total: usize, sequence: &[usize]) -> Result<Vec<usize>> {
    if !n.is_power_of_two() {
        return Err(Error::Invalid(format!(
            "blocklength {n} is not a power of two"
        )));
    }
    if k_total > n {
        return Err(Error::Invalid(format!(
            "cannot place {k_total} information bits in a length-{n} code"
        )));
    }
    let filtered: Vec<usize> = sequence.iter().copied().filter(|&i| i < n).collect();
    if filtered.len() < n {
        return Err(Error::Invalid(format!(
            "reliability sequence does not cover blocklength {n}"
        )));
    }
    let mut set = filtered[n - k_total..].to_vec();
    set.sort_unstable();
    Ok(set)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolarSpec {
    n: usize,
    info_set: Vec<usize>,
}

impl PolarSpec {
    pub fn new(n: usize, mut info_set: Vec<usize>) -> Result<Self> {
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::Construction(format!(
                "blocklength {n} is not a power of two"
            )));
        }
        info_set.sort_unstable();
        if info_set.windows(2).any(|w| w[0] == w[1]) || info_set.iter().any(|&i| i >= n) {
            return Err(Error::Construction(
                "information set must hold distinct indices below N".into(),
            ));
        }
        Ok(PolarSpec { n, info_set })
    }

    /// Information set chosen by the 5G-NR reliability sequence.
    pub fn nr(n: usize, k_total: usize) -> Result<Self> {
        Self::new(n, select_info_set(n, k_total, nr_reliability_sequence())?)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn info_set(&self) -> &[usize] {
        &self.info_set
    }

    /// Frozen-position mask, `true` for information positions.
    pub fn info_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.n];
        for &i in &self.info_set {
            mask[i] = true;
        }
        mask
    }
}

/// Rows of `F^{⊗n}`, `F = [[1,0],[1,1]]`, selected by the information set.
///
/// Entry `(i, j)` of the Kronecker power is one iff the binary digits of `j`
/// are a subset of those of `i`.
pub fn polar_generator(spec: &PolarSpec) -> BinaryMatrix {
    let n = spec.n();
    let rows = spec
        .info_set()
        .iter()
        .map(|&i| BitVector::from_bits((0..n).map(|j| j & !i == 0)))
        .collect();
    BinaryMatrix::from_rows(n, rows).expect("rows have length N")
}

/// Full description of a CRC-aided polar code.
#[derive(Clone, Debug)]
pub struct CaPolarCode {
    k: usize,
    crc: CrcSpec,
    polar: PolarSpec,
    g_crc: BinaryMatrix,
    h_crc: BinaryMatrix,
    g_polar: BinaryMatrix,
    g_combined: BinaryMatrix,
    fingerprint: Fingerprint,
}

impl CaPolarCode {
    /// CA-polar code with the 5G-NR information set.
    pub fn new(n: usize, k: usize, crc: CrcSpec) -> Result<Self> {
        let k_total = k + crc.degree();
        if k == 0 || k_total > n {
            return Err(Error::Construction(format!(
                "K + K_crc = {k_total} does not fit blocklength {n}"
            )));
        }
        let polar = PolarSpec::nr(n, k_total).map_err(|e| Error::Construction(e.to_string()))?;
        Self::with_polar(k, crc, polar)
    }

    pub fn with_polar(k: usize, crc: CrcSpec, polar: PolarSpec) -> Result<Self> {
        if polar.info_set().len() != k + crc.degree() {
            return Err(Error::Construction(format!(
                "information set has {} positions, need K + K_crc = {}",
                polar.info_set().len(),
                k + crc.degree()
            )));
        }
        let (g_crc, h_crc) = build_crc_matrices(&crc, k)?;
        let g_polar = polar_generator(&polar);
        let g_combined = g_crc.mul(&g_polar)?;
        let fingerprint = Fingerprint::of_matrix(&g_combined);
        Ok(CaPolarCode {
            k,
            crc,
            polar,
            g_crc,
            h_crc,
            g_polar,
            g_combined,
            fingerprint,
        })
    }

    pub fn n(&self) -> usize {
        self.polar.n()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn crc_len(&self) -> usize {
        self.crc.degree()
    }

    /// Length of the CRC-encoded message, `K + K_crc`.
    pub fn v_len(&self) -> usize {
        self.k + self.crc.degree()
    }

    /// `K / N`; CRC bits do not count as information.
    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n() as f64
    }

    pub fn crc(&self) -> &CrcSpec {
        &self.crc
    }

    pub fn polar(&self) -> &PolarSpec {
        &self.polar
    }

    pub fn g_crc(&self) -> &BinaryMatrix {
        &self.g_crc
    }

    pub fn h_crc(&self) -> &BinaryMatrix {
        &self.h_crc
    }

    pub fn g_polar(&self) -> &BinaryMatrix {
        &self.g_polar
    }

    pub fn g_combined(&self) -> &BinaryMatrix {
        &self.g_combined
    }

    /// `v = m · G_crc`.
    pub fn crc_encode(&self, m: &BitVector) -> Result<BitVector> {
        self.g_crc.vec_mul(m)
    }

    /// Polar encoding of a CRC-encoded message, `c = v · G`.
    pub fn polar_encode(&self, v: &BitVector) -> Result<BitVector> {
        self.g_polar.vec_mul(v)
    }

    /// Explicit two-step encoding `(m · G_crc) · G`.
    pub fn encode_two_step(&self, m: &BitVector) -> Result<BitVector> {
        self.polar_encode(&self.crc_encode(m)?)
    }

    pub fn crc_check(&self, v: &BitVector) -> Result<bool> {
        Ok(self.h_crc.mul_vec_transposed(v)?.is_zero())
    }

    /// First `K` bits of `v`.
    pub fn extract_message(&self, v: &BitVector) -> Result<BitVector> {
        if v.len() != self.v_len() {
            return Err(Error::LengthMismatch {
                expected: self.v_len(),
                found: v.len(),
            });
        }
        Ok(v.slice(0, self.k))
    }

    /// Reads `v` back off the information positions of the polar input `u`.
    pub fn v_from_u(&self, u: &[u8]) -> BitVector {
        BitVector::from_bits(self.polar.info_set().iter().map(|&i| u[i] != 0))
    }
}

impl BlockCode for CaPolarCode {
    fn generator(&self) -> &BinaryMatrix {
        &self.g_combined
    }

    fn fingerprint(&self) -> &Fingerprint {
        &self.fingerprint
    }

    fn precode(&self, message: &BitVector) -> Result<BitVector> {
        self.crc_encode(message)
    }

    /// `F^{⊗n}` is an involution, so `u = c · F^{⊗n}`; the message sits in
    /// the first `K` information positions of `u`.
    fn message_of(&self, codeword: &BitVector) -> Result<BitVector> {
        if codeword.len() != self.n() {
            return Err(Error::LengthMismatch {
                expected: self.n(),
                found: codeword.len(),
            });
        }
        let u = polar_transform(codeword);
        Ok(BitVector::from_bits(
            self.polar.info_set()[..self.k].iter().map(|&i| u.get(i)),
        ))
    }
}

/// `x = u · F^{⊗n}` by butterflies. Length must be a power of two.
pub fn polar_transform(u: &BitVector) -> BitVector {
    let n = u.len();
    debug_assert!(n.is_power_of_two());
    let mut x: Vec<bool> = u.iter().collect();
    let mut half = 1;
    while half < n {
        for block in (0..n).step_by(2 * half) {
            for j in block..block + half {
                x[j] ^= x[j + half];
            }
        }
        half *= 2;
    }
    BitVector::from_bits(x)
}

pub fn build_ca_polar(n: usize, k: usize, crc: CrcSpec) -> Result<CaPolarCode> {
    CaPolarCode::new(n, k, crc)
}

pub fn encode<C: BlockCode + ?Sized>(m: &BitVector, code: &C) -> Result<BitVector> {
    code.encode(m)
}
