//! The partial-observation model: entries of `A` are kept independently with
//! probability `p`, entries of `b` with probability `q`, and missing entries are stored
//! as exact zeros (`Â = δ ∘ A`, `b̂ = δ ∘ b`).
//!
//! Also home to [`SeededRng`], the single source of randomness for the crate.

use alloc::string::ToString;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::densela::{DenseMatrix, DenseVector};
use crate::error::{Error, Result};
use crate::math;

/// Observation probabilities: `p` for entries of `A`, `q` for entries of `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservationRates {
    p: f64,
    q: f64,
}

impl ObservationRates {
    /// Both rates must lie in `(0, 1]`; they appear as `1/p²` and `1/(pq)` in the
    /// corrected gradient.
    pub fn new(p: f64, q: f64) -> Result<Self> {
        for (name, v) in [("p", p), ("q", q)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::InvalidArgument(alloc::format!(
                    "observation rate {name} = {v} must lie in (0, 1]"
                )));
            }
        }
        Ok(Self { p, q })
    }

    pub const fn full() -> Self {
        Self { p: 1.0, q: 1.0 }
    }

    #[inline]
    pub fn p(&self) -> f64 {
        self.p
    }

    #[inline]
    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn is_full(&self) -> bool {
        self.p == 1.0 && self.q == 1.0
    }
}

/// Stream ids used by the experiment protocol. One (seed, stream) pair is one
/// independent random sequence.
pub mod streams {
    /// Problem generation (`A`, `z`).
    pub const PROBLEM: u64 = 0;
    /// Power-iteration restarts and other internal needs.
    pub const INTERNAL: u64 = 1;
    /// `ρ` estimation.
    pub const RHO: u64 = 500;

    /// Maximum number of trials with non-overlapping stream ranges.
    pub const MAX_TRIALS: usize = 1000;

    /// Masks for trial `trial` (0-based).
    pub const fn trial_masks(trial: usize) -> u64 {
        1000 + trial as u64
    }

    /// Block-pair draws for trial `trial` (0-based).
    pub const fn trial_pairs(trial: usize) -> u64 {
        2000 + trial as u64
    }
}

/// Seeded, splittable random number generator.
///
/// ChaCha8 keyed by `seed` (expanded with `SeedableRng::seed_from_u64`) with its 64-bit
/// stream id set to `stream`. The output depends only on `(seed, stream)` and is the same
/// on every platform.
#[derive(Debug, Clone, PartialEq)]
pub struct SeededRng {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
    spare_normal: Option<f64>,
}

const TWO_POW_64: f64 = 18_446_744_073_709_551_616.0;

impl SeededRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            seed,
            stream,
            inner,
            spare_normal: None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// An independent generator derived from this one's `(seed, stream)` and `index`.
    /// Does not depend on how much of `self` has been consumed.
    pub fn substream(&self, index: u64) -> SeededRng {
        let key = splitmix64(self.seed ^ splitmix64(index.wrapping_add(0x9E37_79B9_7F4A_7C15)));
        SeededRng::new(key, self.stream)
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// `true` with probability `p`. Always consumes exactly one `u64`.
    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        let u = self.next_u64();
        if p >= 1.0 {
            true
        } else if p <= 0.0 {
            false
        } else {
            u < (p * TWO_POW_64) as u64
        }
    }

    /// Uniform integer in `[0, n)`, unbiased (Lemire's multiply-and-reject).
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        let n = n as u64;
        let threshold = n.wrapping_neg() % n;
        loop {
            let m = (self.next_u64() as u128) * (n as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as usize;
            }
        }
    }

    /// Standard normal variate by the polar Box–Muller method; variates are produced in
    /// pairs and the second one is cached.
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.uniform() - 1.0;
            let v = 2.0 * self.uniform() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let f = math::sqrt(-2.0 * math::ln(s) / s);
                self.spare_normal = Some(v * f);
                return u * f;
            }
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Observed matrix `Â` together with its mask `δ_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedMatrix {
    values: DenseMatrix,
    mask: Vec<bool>,
}

impl MaskedMatrix {
    /// Wraps values and a row-major mask. Values at unobserved positions must be zero.
    pub fn from_parts(values: DenseMatrix, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != values.rows() * values.cols() {
            return Err(Error::DimensionMismatch {
                op: "MaskedMatrix::from_parts",
                expected: values.rows() * values.cols(),
                actual: mask.len(),
            });
        }
        if values
            .as_slice()
            .iter()
            .zip(&mask)
            .any(|(&v, &observed)| !observed && v != 0.0)
        {
            return Err(Error::invalid(
                "masked matrix has a nonzero value at an unobserved position".to_string(),
            ));
        }
        Ok(Self { values, mask })
    }

    pub fn fully_observed(a: &DenseMatrix) -> Self {
        Self {
            values: a.clone(),
            mask: alloc::vec![true; a.rows() * a.cols()],
        }
    }

    #[inline]
    pub fn values(&self) -> &DenseMatrix {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn is_observed(&self, i: usize, j: usize) -> bool {
        self.mask[i * self.values.cols() + j]
    }

    pub fn rows(&self) -> usize {
        self.values.rows()
    }

    pub fn cols(&self) -> usize {
        self.values.cols()
    }

    pub fn observed_fraction(&self) -> f64 {
        observed_fraction(&self.mask)
    }
}

/// Observed vector `b̂` together with its mask `δ_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedVector {
    values: DenseVector,
    mask: Vec<bool>,
}

impl MaskedVector {
    pub fn from_parts(values: DenseVector, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != values.len() {
            return Err(Error::DimensionMismatch {
                op: "MaskedVector::from_parts",
                expected: values.len(),
                actual: mask.len(),
            });
        }
        if values
            .iter()
            .zip(&mask)
            .any(|(&v, &observed)| !observed && v != 0.0)
        {
            return Err(Error::invalid(
                "masked vector has a nonzero value at an unobserved position".to_string(),
            ));
        }
        Ok(Self { values, mask })
    }

    pub fn fully_observed(b: &DenseVector) -> Self {
        Self {
            values: b.clone(),
            mask: alloc::vec![true; b.len()],
        }
    }

    #[inline]
    pub fn values(&self) -> &DenseVector {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn observed_fraction(&self) -> f64 {
        observed_fraction(&self.mask)
    }
}

fn observed_fraction(mask: &[bool]) -> f64 {
    if mask.is_empty() {
        return 1.0;
    }
    mask.iter().filter(|&&m| m).count() as f64 / mask.len() as f64
}

/// Keeps each entry of `a` with probability `p`, drawing in row-major order.
pub fn apply_mask_matrix(
    a: &DenseMatrix,
    rates: ObservationRates,
    rng: &mut SeededRng,
) -> MaskedMatrix {
    let mut values = a.clone();
    let mut mask = Vec::with_capacity(a.rows() * a.cols());
    for v in values.as_mut_slice() {
        let keep = rng.bernoulli(rates.p());
        if !keep {
            *v = 0.0;
        }
        mask.push(keep);
    }
    MaskedMatrix { values, mask }
}

/// Keeps each entry of `b` with probability `q`.
pub fn apply_mask_vector(b: &DenseVector, q: f64, rng: &mut SeededRng) -> MaskedVector {
    let mut values = b.clone();
    let mut mask = Vec::with_capacity(b.len());
    for v in values.as_mut_slice() {
        let keep = rng.bernoulli(q);
        if !keep {
            *v = 0.0;
        }
        mask.push(keep);
    }
    MaskedVector { values, mask }
}

/// Magic bytes of the bit-packed mask dump.
pub const MASK_MAGIC: &[u8; 4] = b"LSQM";
const MASK_HEADER_LEN: usize = 16;

/// Bit-packed mask dump.
///
/// Layout: `"LSQM"`, rows (u32 LE), cols (u32 LE), four zero bytes, then the row-major
/// mask packed eight entries per byte, least significant bit first. A vector mask is
/// stored with `cols = 1`.
pub fn encode_mask(rows: usize, cols: usize, mask: &[bool]) -> Result<Vec<u8>> {
    if mask.len() != rows * cols {
        return Err(Error::DimensionMismatch {
            op: "encode_mask",
            expected: rows * cols,
            actual: mask.len(),
        });
    }
    let (r, c) = match (u32::try_from(rows), u32::try_from(cols)) {
        (Ok(r), Ok(c)) => (r, c),
        _ => return Err(Error::invalid("mask dimensions exceed u32")),
    };
    let mut out = Vec::with_capacity(MASK_HEADER_LEN + mask.len().div_ceil(8));
    out.extend_from_slice(MASK_MAGIC);
    out.extend_from_slice(&r.to_le_bytes());
    out.extend_from_slice(&c.to_le_bytes());
    out.extend_from_slice(&[0u8; 4]);
    for chunk in mask.chunks(8) {
        let byte = chunk
            .iter()
            .enumerate()
            .fold(0u8, |acc, (bit, &m)| acc | ((m as u8) << bit));
        out.push(byte);
    }
    Ok(out)
}

/// Inverse of [`encode_mask`]: returns `(rows, cols, mask)`.
pub fn decode_mask(bytes: &[u8]) -> Result<(usize, usize, Vec<bool>)> {
    if bytes.len() < MASK_HEADER_LEN || &bytes[..4] != MASK_MAGIC {
        return Err(Error::invalid(
            "not a mask dump (bad magic or short header)",
        ));
    }
    let rows = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let count = rows * cols;
    let body = &bytes[MASK_HEADER_LEN..];
    if body.len() != count.div_ceil(8) {
        return Err(Error::DimensionMismatch {
            op: "decode_mask",
            expected: count.div_ceil(8),
            actual: body.len(),
        });
    }
    let mask = (0..count)
        .map(|k| body[k / 8] >> (k % 8) & 1 == 1)
        .collect();
    Ok((rows, cols, mask))
}
