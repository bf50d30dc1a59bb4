//! Seeded synthetic least-squares problems.
//!
//! `A` has i.i.d. standard normal entries. A consistent right-hand side is `b = Az` with
//! `z` standard normal; an inconsistent one adds `N·1`, where the columns of `N` are an
//! orthonormal basis of `ran(A)^⊥` and `1` is the all-ones `(m − n)`-vector. Since
//! `AᵀN = 0`, the least-squares solution is the same in both cases and the residual
//! satisfies `‖Ax* − b‖² = m − n`.
//!
//! All draws come from stream [`streams::PROBLEM`] of the seed: `A` row-major, then `z`.

use crate::densela::{least_squares_solution, range_complement_basis, DenseMatrix, DenseVector};
use crate::error::{Error, Result};
use crate::observation::{streams, SeededRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProblemSpec {
    pub m: usize,
    pub n: usize,
    /// `b ∈ ran(A)` when true.
    pub consistent: bool,
    pub seed: u64,
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m < self.n {
            return Err(Error::InvalidArgument(alloc::format!(
                "problem needs m >= n >= 1 (got m = {}, n = {})",
                self.m,
                self.n
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub a: DenseMatrix,
    pub b: DenseVector,
    /// `A†b` from the fully observed data.
    pub x_star: DenseVector,
    /// Set when an inconsistent right-hand side was requested with `m == n`; `b` is
    /// then consistent.
    pub degenerate_inconsistent: bool,
}

pub fn generate_problem(spec: &ProblemSpec) -> Result<Problem> {
    spec.validate()?;
    let (m, n) = (spec.m, spec.n);
    let mut rng = SeededRng::new(spec.seed, streams::PROBLEM);
    let a = DenseMatrix::from_fn(m, n, |_, _| rng.standard_normal());
    let z: DenseVector = (0..n).map(|_| rng.standard_normal()).collect();
    let mut b = a.matvec(&z)?;

    let degenerate_inconsistent = !spec.consistent && m == n;
    if !spec.consistent && m > n {
        let basis = range_complement_basis(&a)?;
        for i in 0..m {
            b[i] += basis.row(i).iter().sum::<f64>();
        }
    }
    let x_star = least_squares_solution(&a, &b)?;
    Ok(Problem {
        a,
        b,
        x_star,
        degenerate_inconsistent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn consistent_has_zero_residual() {
        let p = generate_problem(&ProblemSpec {
            m: 40,
            n: 8,
            consistent: true,
            seed: 3,
        })
        .unwrap();
        let r = p.a.matvec(&p.x_star).unwrap().sub(&p.b).unwrap().norm();
        assert!(r <= 1e-8 * p.a.frobenius_norm() * p.b.norm());
    }

    #[test]
    fn inconsistent_residual_is_m_minus_n() {
        let p = generate_problem(&ProblemSpec {
            m: 40,
            n: 8,
            consistent: false,
            seed: 3,
        })
        .unwrap();
        let r2 = p.a.matvec(&p.x_star).unwrap().sub(&p.b).unwrap().norm_sq();
        assert!((r2 - 32.0).abs() <= 1e-6 * 32.0, "{r2}");
        // same A and z as the consistent problem, so the same solution
        let c = generate_problem(&ProblemSpec {
            m: 40,
            n: 8,
            consistent: true,
            seed: 3,
        })
        .unwrap();
        assert_eq!(p.a, c.a);
        assert!(p.x_star.distance_sq(&c.x_star).sqrt() <= 1e-10 * c.x_star.norm());
    }

    #[test]
    fn square_inconsistent_degenerates() {
        let p = generate_problem(&ProblemSpec {
            m: 5,
            n: 5,
            consistent: false,
            seed: 1,
        })
        .unwrap();
        assert!(p.degenerate_inconsistent);
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = ProblemSpec {
            m: 12,
            n: 4,
            consistent: false,
            seed: 99,
        };
        assert_eq!(
            generate_problem(&spec).unwrap(),
            generate_problem(&spec).unwrap()
        );
    }

    #[test]
    fn rejects_wide() {
        assert!(generate_problem(&ProblemSpec {
            m: 2,
            n: 3,
            consistent: true,
            seed: 0
        })
        .is_err());
    }
}
