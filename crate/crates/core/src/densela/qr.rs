use alloc::vec;
use alloc::vec::Vec;

use super::{DenseMatrix, DenseVector};
use crate::error::{Error, Result};
use crate::math;

/// Relative tolerance on `|R_jj| / ‖A‖_F` below which a matrix is treated as rank
/// deficient.
pub const DEFAULT_RANK_TOLERANCE: f64 = 1e-12;

/// Householder QR factorization `A = QR` of an `m × n` matrix with `m ≥ n`.
///
/// Reflector `k` is `H_k = I − β_k v_k v_kᵀ` acting on rows `k..m`.
#[derive(Debug, Clone)]
pub struct HouseholderQr {
    rows: usize,
    cols: usize,
    /// Upper triangle holds R; the strict lower part is scratch.
    r: DenseMatrix,
    reflectors: Vec<(f64, Vec<f64>)>,
    frobenius: f64,
}

impl HouseholderQr {
    pub fn new(a: &DenseMatrix) -> Result<Self> {
        let (m, n) = (a.rows(), a.cols());
        if m < n {
            return Err(Error::DimensionMismatch {
                op: "HouseholderQr::new (rows >= cols)",
                expected: n,
                actual: m,
            });
        }
        let frobenius = a.frobenius_norm();
        let mut r = a.clone();
        let mut reflectors = Vec::with_capacity(n);

        for k in 0..n {
            let mut v: Vec<f64> = (k..m).map(|i| r[(i, k)]).collect();
            let norm = v.iter().fold(0.0, |acc: f64, &x| math::hypot(acc, x));
            if norm == 0.0 {
                reflectors.push((0.0, v));
                continue;
            }
            let alpha = if v[0] >= 0.0 { -norm } else { norm };
            v[0] -= alpha;
            let vtv: f64 = v.iter().map(|x| x * x).sum();
            let beta = if vtv == 0.0 { 0.0 } else { 2.0 / vtv };

            for j in k..n {
                let dot: f64 = v
                    .iter()
                    .enumerate()
                    .map(|(t, &vi)| vi * r[(k + t, j)])
                    .sum();
                let s = beta * dot;
                if s != 0.0 {
                    for (t, &vi) in v.iter().enumerate() {
                        r[(k + t, j)] -= s * vi;
                    }
                }
            }
            r[(k, k)] = alpha;
            for i in k + 1..m {
                r[(i, k)] = 0.0;
            }
            reflectors.push((beta, v));
        }

        Ok(Self {
            rows: m,
            cols: n,
            r,
            reflectors,
            frobenius,
        })
    }

    /// The `n × n` upper-triangular factor.
    pub fn r(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.cols, self.cols, |i, j| {
            if j >= i {
                self.r[(i, j)]
            } else {
                0.0
            }
        })
    }

    /// The full `m × m` orthogonal factor.
    pub fn q_full(&self) -> DenseMatrix {
        let mut q = DenseMatrix::identity(self.rows);
        // Q = H_0 H_1 ... H_{n-1}: apply to I right to left.
        for (k, (beta, v)) in self.reflectors.iter().enumerate().rev() {
            if *beta == 0.0 {
                continue;
            }
            for j in 0..self.rows {
                let dot: f64 = v
                    .iter()
                    .enumerate()
                    .map(|(t, &vi)| vi * q[(k + t, j)])
                    .sum();
                let s = beta * dot;
                if s != 0.0 {
                    for (t, &vi) in v.iter().enumerate() {
                        q[(k + t, j)] -= s * vi;
                    }
                }
            }
        }
        q
    }

    /// `Qᵀy`.
    pub fn apply_qt(&self, y: &DenseVector) -> Result<DenseVector> {
        if y.len() != self.rows {
            return Err(Error::DimensionMismatch {
                op: "HouseholderQr::apply_qt",
                expected: self.rows,
                actual: y.len(),
            });
        }
        let mut out = y.clone();
        for (k, (beta, v)) in self.reflectors.iter().enumerate() {
            let dot: f64 = v.iter().enumerate().map(|(t, &vi)| vi * out[k + t]).sum();
            let s = beta * dot;
            for (t, &vi) in v.iter().enumerate() {
                out[k + t] -= s * vi;
            }
        }
        Ok(out)
    }

    /// Fails with [`Error::Singular`] on the first `|R_jj| < tol · ‖A‖_F`.
    pub fn check_full_rank(&self, tol: f64) -> Result<()> {
        let threshold = tol * self.frobenius;
        for j in 0..self.cols {
            let d = self.r[(j, j)].abs();
            if d < threshold || d == 0.0 {
                return Err(Error::Singular {
                    index: j,
                    value: d,
                    tolerance: threshold,
                });
            }
        }
        Ok(())
    }

    /// Least-squares solve `min ‖Ax − b‖₂` using the stored factorization.
    pub fn solve_least_squares(&self, b: &DenseVector, tol: f64) -> Result<DenseVector> {
        self.check_full_rank(tol)?;
        let qtb = self.apply_qt(b)?;
        let n = self.cols;
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut acc = qtb[i];
            for j in i + 1..n {
                acc -= self.r[(i, j)] * x[j];
            }
            x[i] = acc / self.r[(i, i)];
        }
        Ok(DenseVector::new(x))
    }
}

/// `A†b` for a full-column-rank `A` via Householder QR.
pub fn least_squares_solution(a: &DenseMatrix, b: &DenseVector) -> Result<DenseVector> {
    least_squares_solution_with_tolerance(a, b, DEFAULT_RANK_TOLERANCE)
}

pub fn least_squares_solution_with_tolerance(
    a: &DenseMatrix,
    b: &DenseVector,
    rank_tolerance: f64,
) -> Result<DenseVector> {
    if a.rows() != b.len() {
        return Err(Error::DimensionMismatch {
            op: "least_squares_solution",
            expected: a.rows(),
            actual: b.len(),
        });
    }
    HouseholderQr::new(a)?.solve_least_squares(b, rank_tolerance)
}

/// Orthonormal basis of `ran(A)^⊥`: the trailing `m − n` columns of the full Q.
///
/// For `m == n` the result is an `m × 0` matrix.
pub fn range_complement_basis(a: &DenseMatrix) -> Result<DenseMatrix> {
    let qr = HouseholderQr::new(a)?;
    qr.check_full_rank(DEFAULT_RANK_TOLERANCE)?;
    let q = qr.q_full();
    let (m, n) = (a.rows(), a.cols());
    Ok(DenseMatrix::from_fn(m, m - n, |i, j| q[(i, n + j)]))
}
