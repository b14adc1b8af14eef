//! Weight spectra, code-weight sphere sets and their on-disk cache.
//!
//! A sphere set `S_r(0)` holds every nonzero codeword of weight at most `d_r`,
//! the `r`-th smallest nonzero weight of the code. By linearity the sphere
//! around any codeword `ĉ` is `ĉ + S_r(0)`, so one stored set serves every
//! center.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::code::{BlockCode, Fingerprint};
use crate::error::{CacheError, Error, Result};
use crate::gf2::{BinaryMatrix, BitVector};

/// Largest message length enumerated without an explicit override.
pub const DEFAULT_ENUMERATION_CAP: usize = 26;

pub(crate) fn check_enumeration_cap(k: usize, cap: usize) -> Result<()> {
    if k > cap || k >= 64 {
        return Err(Error::EnumerationCap { k, cap });
    }
    Ok(())
}

/// Walks all `2^K` codewords of `g` in Gray-code order, one row XOR per step.
///
/// `f` receives the message index (bit `j` is `m_j`) and the packed codeword.
pub(crate) fn for_each_codeword(g: &BinaryMatrix, mut f: impl FnMut(u64, &[u64])) {
    let k = g.rows();
    let mut cw = vec![0u64; g.cols().div_ceil(64)];
    f(0, &cw);
    for i in 1u64..(1u64 << k) {
        let row = i.trailing_zeros() as usize;
        for (a, b) in cw.iter_mut().zip(g.row(row).words()) {
            *a ^= *b;
        }
        f(i ^ (i >> 1), &cw);
    }
}

fn popcount(words: &[u64]) -> usize {
    words.iter().map(|w| w.count_ones() as usize).sum()
}

/// Distinct codeword weights `d_0 = 0 < d_1 < … < d_L` with their counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightSpectrum {
    weights: Vec<usize>,
    shell_counts: Vec<u64>,
}

impl WeightSpectrum {
    pub fn weights(&self) -> &[usize] {
        &self.weights
    }

    pub fn shell_counts(&self) -> &[u64] {
        &self.shell_counts
    }

    /// Number of codewords, `2^K` for a full-rank generator.
    pub fn total(&self) -> u64 {
        self.shell_counts.iter().sum()
    }

    /// `L`, the index of the largest distinct weight.
    pub fn max_radius_index(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn min_distance(&self) -> Option<usize> {
        self.weights.get(1).copied()
    }

    /// `|S_r(0)|`, the number of nonzero codewords with weight ≤ `d_r`.
    pub fn sphere_cardinality(&self, r: usize) -> u64 {
        self.shell_counts[1..=r.min(self.max_radius_index())]
            .iter()
            .sum()
    }

    /// The spectrum as `(weight, count)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.weights
            .iter()
            .copied()
            .zip(self.shell_counts.iter().copied())
    }
}

pub fn enumerate_spectrum<C: BlockCode + ?Sized>(code: &C) -> Result<WeightSpectrum> {
    enumerate_spectrum_capped(code, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_spectrum_capped<C: BlockCode + ?Sized>(
    code: &C,
    cap: usize,
) -> Result<WeightSpectrum> {
    let g = code.generator();
    check_enumeration_cap(g.rows(), cap)?;
    let mut hist = vec![0u64; g.cols() + 1];
    for_each_codeword(g, |_, cw| hist[popcount(cw)] += 1);
    let (weights, shell_counts) = hist
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(w, &c)| (w, c))
        .unzip();
    Ok(WeightSpectrum {
        weights,
        shell_counts,
    })
}

/// The pre-stored low-weight codewords `S_r(0)` of one code.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SphereSet {
    code_fingerprint: Fingerprint,
    n: usize,
    k: usize,
    radius_index: usize,
    weights_included: Vec<usize>,
    members: Vec<BitVector>,
    // Flattened supports of the members, `support_offsets[i]..support_offsets[i+1]`.
    support_positions: Vec<u32>,
    support_offsets: Vec<usize>,
}

impl SphereSet {
    fn assemble(
        code_fingerprint: Fingerprint,
        n: usize,
        k: usize,
        radius_index: usize,
        weights_included: Vec<usize>,
        members: Vec<BitVector>,
    ) -> Self {
        let mut support_positions = Vec::new();
        let mut support_offsets = Vec::with_capacity(members.len() + 1);
        support_offsets.push(0);
        for m in &members {
            support_positions.extend(m.support().into_iter().map(|p| p as u32));
            support_offsets.push(support_positions.len());
        }
        SphereSet {
            code_fingerprint,
            n,
            k,
            radius_index,
            weights_included,
            members,
            support_positions,
            support_offsets,
        }
    }

    pub fn code_fingerprint(&self) -> &Fingerprint {
        &self.code_fingerprint
    }

    pub fn block_len(&self) -> usize {
        self.n
    }

    pub fn message_len(&self) -> usize {
        self.k
    }

    pub fn radius_index(&self) -> usize {
        self.radius_index
    }

    /// `d_1 ..= d_r`.
    pub fn weights_included(&self) -> &[usize] {
        &self.weights_included
    }

    pub fn members(&self) -> &[BitVector] {
        &self.members
    }

    pub fn member_count(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Nonzero positions of member `i`, ascending.
    pub fn support(&self, i: usize) -> &[u32] {
        &self.support_positions[self.support_offsets[i]..self.support_offsets[i + 1]]
    }

    pub fn member_weight(&self, i: usize) -> usize {
        self.support_offsets[i + 1] - self.support_offsets[i]
    }

    /// Candidates `center ⊕ w` for each member `w`, in stored order.
    pub fn recenter<'a>(
        &'a self,
        center: &'a BitVector,
    ) -> Result<impl ExactSizeIterator<Item = BitVector> + 'a> {
        if center.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                found: center.len(),
            });
        }
        Ok(self.members.iter().map(move |w| {
            let mut c = center.clone();
            c.xor_words(w.words());
            c
        }))
    }

    /// Sphere of radius index `r` built by exhaustive enumeration.
    pub fn build<C: BlockCode + ?Sized>(code: &C, r: usize) -> Result<Self> {
        Self::build_capped(code, r, DEFAULT_ENUMERATION_CAP)
    }

    pub fn build_capped<C: BlockCode + ?Sized>(code: &C, r: usize, cap: usize) -> Result<Self> {
        let spectrum = enumerate_spectrum_capped(code, cap)?;
        if r == 0 || r > spectrum.max_radius_index() {
            return Err(Error::Invalid(format!(
                "radius index {r} outside 1..={}",
                spectrum.max_radius_index()
            )));
        }
        let g = code.generator();
        let d_r = spectrum.weights[r];
        let mut members = Vec::with_capacity(spectrum.sphere_cardinality(r) as usize);
        for_each_codeword(g, |_, cw| {
            let w = popcount(cw);
            if w > 0 && w <= d_r {
                members.push(BitVector::from_words(g.cols(), cw).expect("word count matches"));
            }
        });
        members.sort_by(|a, b| a.weight().cmp(&b.weight()).then_with(|| a.cmp(b)));
        Ok(Self::assemble(
            *code.fingerprint(),
            g.cols(),
            g.rows(),
            r,
            spectrum.weights[1..=r].to_vec(),
            members,
        ))
    }

    const MAGIC: &'static [u8; 4] = b"WSD1";
    const VERSION: u16 = 1;

    /// Serializes to the cache format (little-endian throughout):
    /// magic `WSD1`, version u16, N u32, K u32, radius index u16, member
    /// count u64, 32-byte fingerprint, weight count u16 and one u16 per
    /// weight, the packed members (`ceil(N/8)` bytes each), and a CRC-32 of
    /// the payload.
    pub fn to_bytes(&self) -> Vec<u8> {
        let row = self.n.div_ceil(8);
        let mut out = Vec::with_capacity(64 + self.members.len() * row);
        out.extend_from_slice(Self::MAGIC);
        out.extend_from_slice(&Self::VERSION.to_le_bytes());
        out.extend_from_slice(&(self.n as u32).to_le_bytes());
        out.extend_from_slice(&(self.k as u32).to_le_bytes());
        out.extend_from_slice(&(self.radius_index as u16).to_le_bytes());
        out.extend_from_slice(&(self.members.len() as u64).to_le_bytes());
        out.extend_from_slice(&self.code_fingerprint.0);
        out.extend_from_slice(&(self.weights_included.len() as u16).to_le_bytes());
        for &w in &self.weights_included {
            out.extend_from_slice(&(w as u16).to_le_bytes());
        }
        let payload_start = out.len();
        for m in &self.members {
            out.extend_from_slice(&m.to_packed_bytes());
        }
        let crc = crc32fast::hash(&out[payload_start..]);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CacheError> {
        let mut rd = Reader { bytes, pos: 0 };
        if rd.take(4)? != Self::MAGIC {
            return Err(CacheError::BadHeader("missing WSD1 magic".into()));
        }
        let version = rd.u16()?;
        if version != Self::VERSION {
            return Err(CacheError::UnsupportedVersion(version));
        }
        let n = rd.u32()? as usize;
        let k = rd.u32()? as usize;
        let radius_index = rd.u16()? as usize;
        let count = usize::try_from(rd.u64()?)
            .map_err(|_| CacheError::BadHeader("member count overflows".into()))?;
        let mut fp = [0u8; 32];
        fp.copy_from_slice(rd.take(32)?);
        let nweights = rd.u16()? as usize;
        let weights_included = (0..nweights)
            .map(|_| rd.u16().map(usize::from))
            .collect::<Result<Vec<_>, _>>()?;
        if n == 0 || radius_index == 0 || nweights != radius_index {
            return Err(CacheError::BadHeader(format!(
                "N={n}, radius index {radius_index}, {nweights} weights"
            )));
        }

        let row = n.div_ceil(8);
        let expected = count
            .checked_mul(row)
            .and_then(|p| p.checked_add(4))
            .ok_or_else(|| CacheError::BadHeader("payload size overflows".into()))?;
        let rest = &bytes[rd.pos..];
        if rest.len() < expected {
            return Err(CacheError::Truncated {
                expected,
                found: rest.len(),
            });
        }
        if rest.len() > expected {
            return Err(CacheError::Inconsistent(format!(
                "{} trailing bytes after checksum",
                rest.len() - expected
            )));
        }
        let (payload, tail) = rest.split_at(count * row);
        let stored = u32::from_le_bytes(tail.try_into().expect("4 bytes"));
        let computed = crc32fast::hash(payload);
        if stored != computed {
            return Err(CacheError::Integrity { stored, computed });
        }

        let members = payload
            .chunks_exact(row)
            .map(|c| BitVector::from_packed_bytes(n, c))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| CacheError::Inconsistent(e.to_string()))?;
        if weights_included.windows(2).any(|w| w[0] >= w[1]) || weights_included[0] == 0 {
            return Err(CacheError::Inconsistent(
                "weights not strictly increasing".into(),
            ));
        }
        for pair in members.windows(2) {
            let key = |m: &BitVector| (m.weight(), m.clone());
            if key(&pair[0]) >= key(&pair[1]) {
                return Err(CacheError::Inconsistent("members not sorted".into()));
            }
        }
        if let Some(bad) = members
            .iter()
            .find(|m| !weights_included.contains(&m.weight()))
        {
            return Err(CacheError::Inconsistent(format!(
                "member of weight {} outside the included shells",
                bad.weight()
            )));
        }
        Ok(Self::assemble(
            Fingerprint(fp),
            n,
            k,
            radius_index,
            weights_included,
            members,
        ))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.to_bytes())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::from_bytes(&bytes)?)
    }

    /// Loads a cache and checks it belongs to `code` with radius index `r`.
    pub fn load_for<C: BlockCode + ?Sized>(
        path: impl AsRef<Path>,
        code: &C,
        r: usize,
    ) -> Result<Self> {
        let sphere = Self::load(path)?;
        if sphere.code_fingerprint != *code.fingerprint() {
            return Err(CacheError::FingerprintMismatch.into());
        }
        if sphere.radius_index != r {
            return Err(CacheError::Inconsistent(format!(
                "cache holds radius index {}, requested {r}",
                sphere.radius_index
            ))
            .into());
        }
        Ok(sphere)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8], CacheError> {
        let end = self.pos + len;
        let s = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| CacheError::BadHeader("header truncated".into()))?;
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16, CacheError> {
        Ok(u16::from_le_bytes(
            self.take(2)?.try_into().expect("2 bytes"),
        ))
    }

    fn u32(&mut self) -> Result<u32, CacheError> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn u64(&mut self) -> Result<u64, CacheError> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }
}

pub fn build_sphere<C: BlockCode + ?Sized>(code: &C, r: usize) -> Result<SphereSet> {
    SphereSet::build(code, r)
}

pub fn save_sphere(sphere: &SphereSet, path: impl AsRef<Path>) -> Result<()> {
    sphere.save(path)
}

pub fn load_sphere(path: impl AsRef<Path>) -> Result<SphereSet> {
    SphereSet::load(path)
}
