use alloc::vec;
use alloc::vec::Vec;

use super::DenseMatrix;
use crate::error::{Error, Result};
use crate::math;
use crate::observation::SeededRng;

pub const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_OFF_TOLERANCE: f64 = 1e-12;

/// Relative change in the Rayleigh quotient at which power iteration stops.
pub const POWER_ITERATION_TOLERANCE: f64 = 1e-10;
const POWER_MAX_ITERATIONS: usize = 50_000;
const POWER_MAX_RESTARTS: u64 = 4;
const SYMMETRY_TOLERANCE: f64 = 1e-8;

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, sorted ascending.
///
/// Sweeps until the off-diagonal Frobenius norm is at most `1e-12 · ‖M‖_F`.
pub fn jacobi_eigenvalues(m: &DenseMatrix) -> Result<Vec<f64>> {
    check_symmetric(m)?;
    let n = m.rows();
    let mut a = m.clone();
    let target = JACOBI_OFF_TOLERANCE * m.frobenius_norm();

    let mut converged = false;
    for _ in 0..=JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&a) <= target {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, p, q);
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            op: "jacobi_eigenvalues",
            iterations: JACOBI_MAX_SWEEPS,
        });
    }

    let mut values: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    values.sort_by(|x, y| x.total_cmp(y));
    Ok(values)
}

fn off_diagonal_norm(a: &DenseMatrix) -> f64 {
    let n = a.rows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a[(i, j)] * a[(i, j)];
            }
        }
    }
    math::sqrt(acc)
}

fn rotate(a: &mut DenseMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    if apq == 0.0 {
        return;
    }
    let tau = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
    let t = if tau >= 0.0 {
        1.0 / (tau + math::sqrt(1.0 + tau * tau))
    } else {
        -1.0 / (-tau + math::sqrt(1.0 + tau * tau))
    };
    let c = 1.0 / math::sqrt(1.0 + t * t);
    let s = t * c;
    let n = a.rows();
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = c * apk - s * aqk;
        a[(q, k)] = s * apk + c * aqk;
    }
}

/// `σ_min(A)` as the square root of the smallest eigenvalue of `AᵀA`.
pub fn smallest_singular_value(a: &DenseMatrix) -> Result<f64> {
    if a.rows() < a.cols() {
        return Err(Error::DimensionMismatch {
            op: "smallest_singular_value (rows >= cols)",
            expected: a.cols(),
            actual: a.rows(),
        });
    }
    if a.cols() == 0 {
        return Err(Error::invalid(
            "smallest_singular_value of a matrix with no columns",
        ));
    }
    let values = jacobi_eigenvalues(&a.gram())?;
    Ok(math::sqrt(values[0].max(0.0)))
}

/// Largest eigenvalue (= spectral norm) of a symmetric positive semidefinite matrix.
///
/// Power iteration from the all-ones vector, stopping once the Rayleigh quotient changes
/// by at most [`POWER_ITERATION_TOLERANCE`] relative. If the iterate collapses, or the
/// converged value is below the largest diagonal entry (which bounds `λ_max` from
/// below for PSD input), the start vector is re-randomized.
pub fn symmetric_spectral_norm(m: &DenseMatrix) -> Result<f64> {
    check_symmetric(m)?;
    let n = m.rows();
    let scale = m.frobenius_norm();
    if n == 0 || scale == 0.0 {
        return Ok(0.0);
    }
    let max_diag = (0..n).map(|i| m[(i, i)]).fold(f64::NEG_INFINITY, f64::max);

    let mut start = vec![1.0; n];
    for attempt in 0..=POWER_MAX_RESTARTS {
        if let Some(lambda) = power_iterate(m, &start, scale) {
            if lambda >= max_diag - 1e-10 * scale {
                return Ok(lambda);
            }
        }
        let mut rng = SeededRng::new(0x5EED_5EED, attempt);
        start = (0..n).map(|_| rng.standard_normal()).collect();
    }
    Err(Error::NoConvergence {
        op: "symmetric_spectral_norm",
        iterations: POWER_MAX_ITERATIONS,
    })
}

fn power_iterate(m: &DenseMatrix, start: &[f64], scale: f64) -> Option<f64> {
    let n = start.len();
    let norm = math::sqrt(start.iter().map(|v| v * v).sum());
    if norm == 0.0 {
        return None;
    }
    let mut v: Vec<f64> = start.iter().map(|x| x / norm).collect();
    let mut w = vec![0.0; n];
    let mut previous = f64::NAN;

    for _ in 0..POWER_MAX_ITERATIONS {
        for (i, wi) in w.iter_mut().enumerate() {
            *wi = m.row(i).iter().zip(&v).map(|(a, b)| a * b).sum();
        }
        let lambda: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
        let wn = math::sqrt(w.iter().map(|x| x * x).sum());
        if wn <= 1e-300 * scale.max(1.0) || !wn.is_finite() {
            return None;
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / wn;
        }
        if (lambda - previous).abs() <= POWER_ITERATION_TOLERANCE * lambda.abs() {
            return Some(lambda);
        }
        previous = lambda;
    }
    None
}

fn check_symmetric(m: &DenseMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            op: "symmetric matrix (square)",
            expected: m.rows(),
            actual: m.cols(),
        });
    }
    let n = m.rows();
    let scale = m.max_abs();
    if scale == 0.0 {
        return Ok(());
    }
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    let asymmetry = worst / scale;
    if asymmetry > SYMMETRY_TOLERANCE {
        return Err(Error::NotSymmetric { asymmetry });
    }
    Ok(())
}
