//! Problem and mask files.
//!
//! A problem file is plain text: a header line `m n seed consistent`, then `A` one row
//! per line, then `b` on one line, every value with 17 significant digits.

use std::fmt::Write as _;
use std::path::Path;

use maskedsgd_core::densela::least_squares_solution;
use maskedsgd_core::observation::{decode_mask, encode_mask};
use maskedsgd_core::{DenseMatrix, DenseVector, Problem, ProblemSpec};

use crate::error::{HarnessError, Result};
use crate::table::fmt_sig17;

pub fn render_problem(spec: &ProblemSpec, problem: &Problem) -> String {
    let mut out = format!("{} {} {} {}\n", spec.m, spec.n, spec.seed, spec.consistent);
    for i in 0..problem.a.rows() {
        let row: Vec<String> = problem.a.row(i).iter().map(|&v| fmt_sig17(v)).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    let b: Vec<String> = problem.b.iter().map(|&v| fmt_sig17(v)).collect();
    let _ = writeln!(out, "{}", b.join(" "));
    out
}

/// Parses a problem file; `x_star` is recomputed from the stored `A` and `b`.
pub fn parse_problem(text: &str) -> std::result::Result<(ProblemSpec, Problem), String> {
    let mut tokens = text.split_whitespace();
    let mut next = |what: &str| tokens.next().ok_or_else(|| format!("missing {what}"));
    let m: usize = next("m")?.parse().map_err(|e| format!("m: {e}"))?;
    let n: usize = next("n")?.parse().map_err(|e| format!("n: {e}"))?;
    let seed: u64 = next("seed")?.parse().map_err(|e| format!("seed: {e}"))?;
    let consistent: bool = next("consistent")?
        .parse()
        .map_err(|e| format!("consistent: {e}"))?;
    let spec = ProblemSpec {
        m,
        n,
        consistent,
        seed,
    };
    spec.validate().map_err(|e| e.to_string())?;
    let mut values = Vec::with_capacity(m * n + m);
    for k in 0..m * n + m {
        let tok = next("value").map_err(|_| format!("expected {} values, found {k}", m * n + m))?;
        values.push(
            tok.parse::<f64>()
                .map_err(|e| format!("value {}: `{tok}`: {e}", k + 1))?,
        );
    }
    if tokens.next().is_some() {
        return Err("trailing data after b".into());
    }
    let b = DenseVector::from(values.split_off(m * n));
    let a = DenseMatrix::new(m, n, values).map_err(|e| e.to_string())?;
    let x_star = least_squares_solution(&a, &b).map_err(|e| e.to_string())?;
    Ok((
        spec,
        Problem {
            a,
            b,
            x_star,
            degenerate_inconsistent: !consistent && m == n,
        },
    ))
}

pub fn write_problem(path: &Path, spec: &ProblemSpec, problem: &Problem) -> Result<()> {
    std::fs::write(path, render_problem(spec, problem)).map_err(|e| HarnessError::io(path, e))
}

pub fn read_problem(path: &Path) -> Result<(ProblemSpec, Problem)> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    parse_problem(&text).map_err(|msg| HarnessError::Format {
        path: path.display().to_string(),
        what: "problem file",
        msg,
    })
}

pub fn write_mask(path: &Path, rows: usize, cols: usize, mask: &[bool]) -> Result<()> {
    let bytes = encode_mask(rows, cols, mask)?;
    std::fs::write(path, bytes).map_err(|e| HarnessError::io(path, e))
}

pub fn read_mask(path: &Path) -> Result<(usize, usize, Vec<bool>)> {
    let bytes = std::fs::read(path).map_err(|e| HarnessError::io(path, e))?;
    decode_mask(&bytes).map_err(|e| HarnessError::Format {
        path: path.display().to_string(),
        what: "mask dump",
        msg: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use maskedsgd_core::generate_problem;

    #[test]
    fn problem_round_trip_is_bit_exact() {
        let spec = ProblemSpec {
            m: 9,
            n: 4,
            consistent: false,
            seed: 17,
        };
        let p = generate_problem(&spec).unwrap();
        let (spec2, p2) = parse_problem(&render_problem(&spec, &p)).unwrap();
        assert_eq!(spec2, spec);
        assert_eq!(p2.a, p.a);
        assert_eq!(p2.b, p.b);
        assert_eq!(p2.x_star, p.x_star);
    }

    #[test]
    fn truncated_problem_rejected() {
        let spec = ProblemSpec {
            m: 3,
            n: 2,
            consistent: true,
            seed: 1,
        };
        let p = generate_problem(&spec).unwrap();
        let text = render_problem(&spec, &p);
        let cut = &text[..text.rfind(' ').unwrap()];
        assert!(parse_problem(cut).is_err());
        assert!(parse_problem(&format!("{text} 1.0")).is_err());
    }
}
