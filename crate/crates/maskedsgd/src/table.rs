//! CSV emission and re-parsing of experiment results.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{HarnessError, Result};
use crate::experiment::ExperimentResult;

/// The columns a CSV file carries.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub iterations: Vec<usize>,
    pub mean: Vec<f64>,
    /// One column per trial.
    pub trials: Vec<Vec<f64>>,
    pub bound: Option<Vec<f64>>,
}

impl From<&ExperimentResult> for CsvTable {
    fn from(r: &ExperimentResult) -> Self {
        Self {
            iterations: r.iterations.clone(),
            mean: r.mean_relative_error.clone(),
            trials: r.per_trial_errors.clone(),
            bound: r.bound_overlay.clone(),
        }
    }
}

/// `{:.16e}`: 17 significant digits, which round-trips every finite `f64`.
pub fn fmt_sig17(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn render_csv(table: &CsvTable) -> String {
    let mut out = String::from("iteration,mean_rel_err");
    for t in 1..=table.trials.len() {
        let _ = write!(out, ",trial_{t}");
    }
    if table.bound.is_some() {
        out.push_str(",bound");
    }
    out.push('\n');
    for (c, k) in table.iterations.iter().enumerate() {
        let _ = write!(out, "{k},{}", fmt_sig17(table.mean[c]));
        for row in &table.trials {
            let _ = write!(out, ",{}", fmt_sig17(row[c]));
        }
        if let Some(b) = &table.bound {
            let _ = write!(out, ",{}", fmt_sig17(b[c]));
        }
        out.push('\n');
    }
    out
}

pub fn emit_csv(result: &ExperimentResult, path: &Path) -> Result<()> {
    if result.iterations.is_empty() {
        return Err(HarnessError::config("cannot write an empty result"));
    }
    std::fs::write(path, render_csv(&CsvTable::from(result))).map_err(|e| HarnessError::io(path, e))
}

pub fn parse_csv(text: &str) -> std::result::Result<CsvTable, String> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().ok_or("empty file")?.split(',').collect();
    if header.len() < 2 || header[0] != "iteration" || header[1] != "mean_rel_err" {
        return Err("header must start with `iteration,mean_rel_err`".into());
    }
    let has_bound = header.last() == Some(&"bound");
    let trial_cols = header.len() - 2 - usize::from(has_bound);
    for (t, name) in header[2..2 + trial_cols].iter().enumerate() {
        if *name != format!("trial_{}", t + 1) {
            return Err(format!("unexpected column `{name}`"));
        }
    }
    let mut table = CsvTable {
        iterations: Vec::new(),
        mean: Vec::new(),
        trials: vec![Vec::new(); trial_cols],
        bound: has_bound.then(Vec::new),
    };
    for (i, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != header.len() {
            return Err(format!(
                "row {} has {} cells, expected {}",
                i + 1,
                cells.len(),
                header.len()
            ));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| format!("row {}: `{s}`: {e}", i + 1))
        };
        table.iterations.push(
            cells[0]
                .parse()
                .map_err(|e| format!("row {}: {e}", i + 1))?,
        );
        table.mean.push(num(cells[1])?);
        for t in 0..trial_cols {
            table.trials[t].push(num(cells[2 + t])?);
        }
        if let Some(b) = &mut table.bound {
            b.push(num(cells[cells.len() - 1])?);
        }
    }
    Ok(table)
}

pub fn read_csv(path: &Path) -> Result<CsvTable> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    parse_csv(&text).map_err(|msg| HarnessError::Format {
        path: path.display().to_string(),
        what: "CSV",
        msg,
    })
}
