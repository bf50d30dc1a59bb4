//! Constants of the constant-step mean-square bound
//!
//! ```text
//! E‖x^k − A†b‖² ≤ (1 − 2ασ²_min/(st) + 2α²ρ)^k ‖x⁰ − A†b‖² + αC / (σ²_min − α·st·ρ)
//! ```
//!
//! valid for `0 < α < σ²_min / (st·ρ)`, where `ρ = ‖E[BᵀB]‖₂` for the random linear part
//! `B` of the corrected gradient:
//!
//! ```text
//! B = (1/p²) E_J Â_{I,J}ᵀ Â_{I,:} − ((1 − p)/p²) diag(E_J Â_{I,J}ᵀ Â_{I,:})
//! ```
//!
//! `ρ` has no closed form; it is estimated by Monte Carlo over masks and block pairs
//! with a batch-means standard error.

use alloc::vec;
use alloc::vec::Vec;

use crate::densela::{smallest_singular_value, symmetric_spectral_norm, DenseMatrix, DenseVector};
use crate::error::{Error, Result};
use crate::math;
use crate::observation::{ObservationRates, SeededRng};
use crate::partition::PairSampler;

/// Number of batches used for the batch-means standard error of `ρ`.
pub const RHO_BATCHES: usize = 10;
pub const MIN_RHO_SAMPLES: usize = 100;
pub const DEFAULT_RHO_SAMPLES: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoEstimate {
    pub rho: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryConstants {
    pub sigma_min: f64,
    pub rho: f64,
    pub rho_stderr: f64,
    pub c: f64,
    /// `σ²_min / (s·t·ρ)`.
    pub alpha_max: f64,
    pub s: usize,
    pub t: usize,
}

impl TheoryConstants {
    pub fn new(sigma_min: f64, rho: RhoEstimate, c: f64, s: usize, t: usize) -> Result<Self> {
        if !(rho.rho > 0.0) {
            return Err(Error::InvalidArgument(alloc::format!(
                "rho = {} must be positive",
                rho.rho
            )));
        }
        if !(c >= 0.0) {
            return Err(Error::InvalidArgument(alloc::format!(
                "C = {c} must be nonnegative"
            )));
        }
        if s == 0 || t == 0 {
            return Err(Error::invalid("s and t must be positive"));
        }
        Ok(Self {
            sigma_min,
            rho: rho.rho,
            rho_stderr: rho.stderr,
            c,
            alpha_max: sigma_min * sigma_min / ((s * t) as f64 * rho.rho),
            s,
            t,
        })
    }

    /// σ_min(A), C in closed form and ρ by Monte Carlo.
    pub fn compute(
        a: &DenseMatrix,
        b: &DenseVector,
        x_star: &DenseVector,
        rates: ObservationRates,
        sampler: &PairSampler,
        rho_samples: usize,
        rng: &SeededRng,
    ) -> Result<Self> {
        let sigma_min = smallest_singular_value(a)?;
        let c = constant_c(a, b, x_star, rates)?;
        let rho = estimate_rho(a, rates, sampler, rho_samples, rng)?;
        Self::new(sigma_min, rho, c, sampler.s(), sampler.t())
    }

    fn st(&self) -> f64 {
        (self.s * self.t) as f64
    }

    /// `1 − 2ασ²_min/(st) + 2α²ρ`.
    pub fn contraction_factor(&self, alpha: f64) -> f64 {
        let s2 = self.sigma_min * self.sigma_min;
        1.0 - 2.0 * alpha * s2 / self.st() + 2.0 * alpha * alpha * self.rho
    }

    /// Asymptotic radius `αC / (σ²_min − α·st·ρ)`.
    pub fn horizon(&self, alpha: f64) -> Result<f64> {
        self.check_alpha(alpha)?;
        let s2 = self.sigma_min * self.sigma_min;
        Ok(alpha * self.c / (s2 - alpha * self.st() * self.rho))
    }

    fn check_alpha(&self, alpha: f64) -> Result<()> {
        if !(alpha > 0.0 && alpha < self.alpha_max) {
            return Err(Error::StepSizeAboveCeiling {
                alpha,
                ceiling: self.alpha_max,
            });
        }
        Ok(())
    }
}

/// Largest admissible constant step, `σ²_min / (s·t·ρ)`.
pub fn step_size_ceiling(constants: &TheoryConstants) -> f64 {
    constants.alpha_max
}

/// Bound on `E‖x^k − A†b‖²` after `k` constant steps of size `alpha`.
///
/// The power of the contraction factor is evaluated as `exp(k·ln f)`.
pub fn bound_curve(
    constants: &TheoryConstants,
    alpha: f64,
    initial_error_sq: f64,
    k: usize,
) -> Result<f64> {
    let horizon = constants.horizon(alpha)?;
    let f = constants.contraction_factor(alpha);
    let decay = if k == 0 {
        1.0
    } else if f > 0.0 {
        math::exp(k as f64 * math::ln(f))
    } else {
        math::powi(f, k.min(i32::MAX as usize) as i32).abs()
    };
    Ok(decay * initial_error_sq + horizon)
}

/// Closed-form constant
///
/// ```text
/// C = (2/p²)‖A‖²_F‖Ax* − b‖² + (2(1−q)/(p²q))‖A‖²_F‖b‖²
///   + (2(1−p)/p³)‖A‖²_F x*ᵀ diag(AᵀA) x* + (2(1−p)²/p³)‖diag(AᵀA) x*‖²
/// ```
///
/// with `x* = A†b`.
pub fn constant_c(
    a: &DenseMatrix,
    b: &DenseVector,
    x_star: &DenseVector,
    rates: ObservationRates,
) -> Result<f64> {
    if a.rows() != b.len() || a.cols() != x_star.len() {
        return Err(Error::DimensionMismatch {
            op: "constant_c",
            expected: a.cols(),
            actual: x_star.len(),
        });
    }
    let (p, q) = (rates.p(), rates.q());
    let fro2 = a.frobenius_norm_sq();
    let residual = a.matvec(x_star)?.sub(b)?.norm_sq();
    let b2 = b.norm_sq();
    let mut col_norms = vec![0.0; a.cols()];
    for i in 0..a.rows() {
        for (d, &v) in col_norms.iter_mut().zip(a.row(i)) {
            *d += v * v;
        }
    }
    let quad: f64 = col_norms
        .iter()
        .zip(x_star.iter())
        .map(|(d, x)| d * x * x)
        .sum();
    let dx2: f64 = col_norms
        .iter()
        .zip(x_star.iter())
        .map(|(d, x)| (d * x) * (d * x))
        .sum();
    let p2 = p * p;
    let p3 = p2 * p;
    Ok(2.0 / p2 * fro2 * residual
        + 2.0 * (1.0 - q) / (p2 * q) * fro2 * b2
        + 2.0 * (1.0 - p) / p3 * fro2 * quad
        + 2.0 * (1.0 - p) * (1.0 - p) / p3 * dx2)
}

/// Sizes of the [`RHO_BATCHES`] batches for `num_samples` draws.
pub fn rho_batch_sizes(num_samples: usize) -> [usize; RHO_BATCHES] {
    let base = num_samples / RHO_BATCHES;
    let extra = num_samples % RHO_BATCHES;
    core::array::from_fn(|b| base + usize::from(b < extra))
}

/// Sum of `BᵀB` over `count` independent (mask, pair) draws from `rng`.
///
/// Each draw samples a pair, then masks the rows of `I` in row-major order. `B` is never
/// formed: with `Y = Â_{I,:}/p²`, `u_j = Σ_i Â_ij y_i` and `d_j = ((1−p)/p²)‖Â_{I,j}‖²`,
/// the rows of `B` are `u_j − d_j e_j` for `j ∈ J`.
pub fn rho_batch_sum(
    a: &DenseMatrix,
    rates: ObservationRates,
    sampler: &PairSampler,
    count: usize,
    rng: &mut SeededRng,
) -> DenseMatrix {
    let n = a.cols();
    let p = rates.p();
    let p2 = p * p;
    let coef = (1.0 - p) / p2;
    // upper triangle only, mirrored at the end
    let mut acc = DenseMatrix::zeros(n, n);
    let mut y: Vec<f64> = Vec::new();
    let mut masked: Vec<f64> = Vec::new();
    let mut u = Vec::new();
    let mut d = Vec::new();
    let mut z = Vec::new();

    for _ in 0..count {
        let (rows, cols) = sampler.sample_blocks(rng);
        let ni = rows.len();
        masked.clear();
        for &i in rows {
            for &v in a.row(i) {
                masked.push(if rng.bernoulli(p) { v } else { 0.0 });
            }
        }
        y.clear();
        y.extend(masked.iter().map(|v| v / p2));

        // u_j = Σ_i Â_ij y_i and d_j for j ∈ J
        u.clear();
        u.resize(cols.len() * n, 0.0);
        d.clear();
        for (c, &j) in cols.iter().enumerate() {
            let uj = &mut u[c * n..(c + 1) * n];
            let mut norm_sq = 0.0;
            for k in 0..ni {
                let aij = masked[k * n + j];
                if aij == 0.0 {
                    continue;
                }
                norm_sq += aij * aij;
                for (o, &yv) in uj.iter_mut().zip(&y[k * n..(k + 1) * n]) {
                    *o += aij * yv;
                }
            }
            d.push(coef * norm_sq);
        }

        if cols.len() <= ni {
            // Σ_j b_j b_jᵀ with b_j = u_j − d_j e_j
            for (c, &j) in cols.iter().enumerate() {
                let bj = &mut u[c * n..(c + 1) * n];
                bj[j] -= d[c];
                add_outer_upper(&mut acc, bj, bj);
            }
        } else {
            // Σ_{i,i'} K_ii' y_i y_i'ᵀ with K = Â_{I,J} Â_{I,J}ᵀ, then the cross and
            // diagonal terms of the d_j correction.
            z.clear();
            z.resize(ni * n, 0.0);
            for k in 0..ni {
                for l in 0..ni {
                    let kkl: f64 = cols
                        .iter()
                        .map(|&j| masked[k * n + j] * masked[l * n + j])
                        .sum();
                    if kkl == 0.0 {
                        continue;
                    }
                    for (o, &yv) in z[k * n..(k + 1) * n].iter_mut().zip(&y[l * n..(l + 1) * n]) {
                        *o += kkl * yv;
                    }
                }
            }
            for k in 0..ni {
                add_outer_upper(&mut acc, &y[k * n..(k + 1) * n], &z[k * n..(k + 1) * n]);
            }
            for (c, &j) in cols.iter().enumerate() {
                let uj = &u[c * n..(c + 1) * n];
                let dj = d[c];
                if dj == 0.0 {
                    continue;
                }
                // −d_j (u_j e_jᵀ + e_j u_jᵀ) + d_j² e_j e_jᵀ
                for (k, &uk) in uj.iter().enumerate() {
                    let (r, c2) = if k <= j { (k, j) } else { (j, k) };
                    acc[(r, c2)] -= dj * uk;
                }
                acc[(j, j)] -= dj * uj[j];
                acc[(j, j)] += dj * dj;
            }
        }
    }

    for k in 0..n {
        for l in 0..k {
            acc[(k, l)] = acc[(l, k)];
        }
    }
    acc
}

// acc[k][l] += x_k w_l for l ≥ k. For the symmetric sum Σ y_i z_iᵀ (z = K y) the upper
// triangle of the non-symmetric summands adds up to the upper triangle of the symmetric
// total, because Σ_i y_i z_iᵀ is itself symmetric.
fn add_outer_upper(acc: &mut DenseMatrix, x: &[f64], w: &[f64]) {
    let n = x.len();
    for k in 0..n {
        let xk = x[k];
        if xk == 0.0 {
            continue;
        }
        let row = &mut acc.row_mut(k)[k..];
        for (o, &wl) in row.iter_mut().zip(&w[k..n]) {
            *o += xk * wl;
        }
    }
}

/// Combines per-batch sums of `BᵀB` (with their sample counts) into `ρ` and its
/// batch-means standard error. Reduction is in slice order.
pub fn combine_rho_batches(batches: &[(DenseMatrix, usize)]) -> Result<RhoEstimate> {
    let (first, _) = batches
        .first()
        .ok_or_else(|| Error::invalid("no rho batches"))?;
    let n = first.rows();
    let mut total = DenseMatrix::zeros(n, n);
    let mut count = 0usize;
    let mut per_batch = Vec::with_capacity(batches.len());
    for (sum, len) in batches {
        if *len == 0 {
            continue;
        }
        for (t, s) in total.as_mut_slice().iter_mut().zip(sum.as_slice()) {
            *t += s;
        }
        count += len;
        per_batch.push(symmetric_spectral_norm(&sum.scaled(1.0 / *len as f64))?);
    }
    let rho = symmetric_spectral_norm(&total.scaled(1.0 / count as f64))?;
    let nb = per_batch.len() as f64;
    let stderr = if per_batch.len() < 2 {
        0.0
    } else {
        let mean = per_batch.iter().sum::<f64>() / nb;
        let var = per_batch
            .iter()
            .map(|r| (r - mean) * (r - mean))
            .sum::<f64>()
            / (nb - 1.0);
        math::sqrt(var / nb)
    };
    Ok(RhoEstimate { rho, stderr })
}

/// Monte Carlo estimate of `ρ = ‖E[BᵀB]‖₂` over masks and block pairs.
///
/// Samples are split into [`RHO_BATCHES`] batches; batch `k` draws from
/// `rng.substream(k)`, so the result does not depend on how batches are scheduled.
pub fn estimate_rho(
    a: &DenseMatrix,
    rates: ObservationRates,
    sampler: &PairSampler,
    num_samples: usize,
    rng: &SeededRng,
) -> Result<RhoEstimate> {
    check_rho_inputs(a, sampler, num_samples)?;
    let batches: Vec<(DenseMatrix, usize)> = rho_batch_sizes(num_samples)
        .iter()
        .enumerate()
        .map(|(k, &len)| {
            let mut r = rng.substream(k as u64);
            (rho_batch_sum(a, rates, sampler, len, &mut r), len)
        })
        .collect();
    combine_rho_batches(&batches)
}

pub fn check_rho_inputs(a: &DenseMatrix, sampler: &PairSampler, num_samples: usize) -> Result<()> {
    if num_samples < MIN_RHO_SAMPLES {
        return Err(Error::InvalidArgument(alloc::format!(
            "rho estimation needs at least {MIN_RHO_SAMPLES} samples, got {num_samples}"
        )));
    }
    if sampler.rows().universe() != a.rows() || sampler.cols().universe() != a.cols() {
        return Err(Error::invalid("partitions do not match the matrix shape"));
    }
    Ok(())
}
