//! Flat `key = value` experiment files.
//!
//! ```text
//! # lines starting with '#' are comments
//! m = 1000
//! n = 200
//! p = 0.9
//! q = 0.9
//! ell = 2
//! tau = 200
//! alpha = 1e-4          # or stage_1 = 1e-4,30000  stage_2 = ...
//! trials = 10
//! iterations = 200000
//! mask_mode = fixed     # fixed | fresh
//! seed = 1
//! consistent = true
//! ```
//!
//! Optional keys: `record_every`, `overlay_bound`, `rule` (`corrected` | `naive`),
//! `rho_samples`. With a stage ladder, `iterations` defaults to the ladder's length.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use maskedsgd_core::solver::DEFAULT_RECORD_EVERY;
use maskedsgd_core::theory::DEFAULT_RHO_SAMPLES;
use maskedsgd_core::{GradientRule, MaskMode, ObservationRates, ProblemSpec, Stage, StepSchedule};

use crate::error::{HarnessError, Result};
use crate::experiment::{ExperimentSpec, DEFAULT_TRIALS};

const KNOWN_KEYS: &[&str] = &[
    "m",
    "n",
    "p",
    "q",
    "ell",
    "tau",
    "alpha",
    "trials",
    "iterations",
    "mask_mode",
    "seed",
    "consistent",
    "record_every",
    "overlay_bound",
    "rule",
    "rho_samples",
];

/// Raw `key -> (line, value)` pairs of a config file, in key order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigEntries {
    entries: BTreeMap<String, (usize, String)>,
}

impl ConfigEntries {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(HarnessError::Config {
                    line,
                    msg: format!("expected `key = value`, got `{content}`"),
                });
            };
            let key = key.trim();
            let value = value.trim();
            if !KNOWN_KEYS.contains(&key) && stage_index(key).is_none() {
                return Err(HarnessError::Config {
                    line,
                    msg: format!("unknown key `{key}`"),
                });
            }
            if value.is_empty() {
                return Err(HarnessError::Config {
                    line,
                    msg: format!("`{key}` has no value"),
                });
            }
            if entries
                .insert(key.to_string(), (line, value.to_string()))
                .is_some()
            {
                return Err(HarnessError::Config {
                    line,
                    msg: format!("duplicate key `{key}`"),
                });
            }
        }
        Ok(Self { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), (0, value.into()));
    }

    pub fn remove(&mut self, key: &str) {
        self.entries.remove(key);
    }

    pub fn clear_stages(&mut self) {
        self.entries.retain(|k, _| stage_index(k).is_none());
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => v.parse().map(Some).map_err(|e| HarnessError::Config {
                line: *line,
                msg: format!("`{key}`: cannot parse `{v}`: {e}"),
            }),
        }
    }

    fn required<T: std::str::FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.parsed(key)?
            .ok_or_else(|| HarnessError::config(format!("missing required key `{key}`")))
    }

    fn line_of(&self, key: &str) -> usize {
        self.entries.get(key).map_or(0, |(l, _)| *l)
    }

    fn schedule(&self) -> Result<StepSchedule> {
        let mut stages: Vec<(usize, usize, &str)> = self
            .entries
            .iter()
            .filter_map(|(k, (line, v))| stage_index(k).map(|i| (i, *line, v.as_str())))
            .collect();
        stages.sort_by_key(|s| s.0);
        let alpha = self.parsed::<f64>("alpha")?;
        let schedule = match (alpha, stages.is_empty()) {
            (Some(_), false) => {
                return Err(HarnessError::config(
                    "give either `alpha` or `stage_i`, not both",
                ))
            }
            (None, true) => {
                return Err(HarnessError::config(
                    "missing `alpha` (or `stage_i` entries)",
                ))
            }
            (Some(a), true) => StepSchedule::Constant(a),
            (None, false) => {
                let mut out = Vec::with_capacity(stages.len());
                for (pos, (i, line, v)) in stages.into_iter().enumerate() {
                    if i != pos + 1 {
                        return Err(HarnessError::Config {
                            line,
                            msg: format!("stage_{i} without stage_{}", pos + 1),
                        });
                    }
                    out.push(parse_stage(v).map_err(|msg| HarnessError::Config { line, msg })?);
                }
                StepSchedule::Piecewise(out)
            }
        };
        schedule
            .validate()
            .map_err(|e| HarnessError::config(e.to_string()))?;
        Ok(schedule)
    }

    pub fn to_spec(&self) -> Result<ExperimentSpec> {
        let m = self.required("m")?;
        let n = self.required("n")?;
        let p: f64 = self.required("p")?;
        let q: f64 = self.required("q")?;
        let rates = ObservationRates::new(p, q).map_err(|e| HarnessError::Config {
            line: if p > 0.0 && p <= 1.0 {
                self.line_of("q")
            } else {
                self.line_of("p")
            },
            msg: e.to_string(),
        })?;
        let schedule = self.schedule()?;
        let max_iterations = match (self.parsed::<usize>("iterations")?, schedule.horizon()) {
            (Some(it), _) => it,
            (None, Some(h)) => h,
            (None, None) => return Err(HarnessError::config("missing required key `iterations`")),
        };
        let mask_mode = match self.get("mask_mode") {
            None => MaskMode::FixedPerTrial,
            Some(v) => parse_mask_mode(v).map_err(|msg| HarnessError::Config {
                line: self.line_of("mask_mode"),
                msg,
            })?,
        };
        let rule = match self.get("rule") {
            None => GradientRule::Corrected,
            Some(v) => parse_rule(v).map_err(|msg| HarnessError::Config {
                line: self.line_of("rule"),
                msg,
            })?,
        };
        let spec = ExperimentSpec {
            problem: ProblemSpec {
                m,
                n,
                consistent: self.parsed("consistent")?.unwrap_or(true),
                seed: self.parsed("seed")?.unwrap_or(0),
            },
            rates,
            row_block_size: self.required("ell")?,
            col_block_size: self.required("tau")?,
            schedule,
            trials: self.parsed("trials")?.unwrap_or(DEFAULT_TRIALS),
            max_iterations,
            mask_mode,
            rule,
            record_every: self.parsed("record_every")?.unwrap_or(DEFAULT_RECORD_EVERY),
            overlay_bound: self.parsed("overlay_bound")?.unwrap_or(false),
            rho_samples: self.parsed("rho_samples")?.unwrap_or(DEFAULT_RHO_SAMPLES),
        };
        spec.validate().map_err(|e| match e {
            HarnessError::Core(c) => HarnessError::config(c.to_string()),
            other => other,
        })?;
        Ok(spec)
    }

    pub fn from_spec(spec: &ExperimentSpec) -> Self {
        let mut c = Self::default();
        c.set("m", spec.problem.m.to_string());
        c.set("n", spec.problem.n.to_string());
        c.set("p", fmt_f64(spec.rates.p()));
        c.set("q", fmt_f64(spec.rates.q()));
        c.set("ell", spec.row_block_size.to_string());
        c.set("tau", spec.col_block_size.to_string());
        match &spec.schedule {
            StepSchedule::Constant(a) => c.set("alpha", fmt_f64(*a)),
            StepSchedule::Piecewise(stages) => {
                for (i, s) in stages.iter().enumerate() {
                    c.set(
                        &format!("stage_{}", i + 1),
                        format!("{},{}", fmt_f64(s.beta), s.length),
                    );
                }
            }
        }
        c.set("trials", spec.trials.to_string());
        c.set("iterations", spec.max_iterations.to_string());
        c.set("mask_mode", mask_mode_name(spec.mask_mode));
        c.set("seed", spec.problem.seed.to_string());
        c.set("consistent", spec.problem.consistent.to_string());
        c.set("record_every", spec.record_every.to_string());
        c.set("overlay_bound", spec.overlay_bound.to_string());
        c.set("rule", rule_name(spec.rule));
        c.set("rho_samples", spec.rho_samples.to_string());
        c
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentSpec> {
    ConfigEntries::parse(text)?.to_spec()
}

/// Writes every key, required ones first, stages in order.
pub fn serialize_config(spec: &ExperimentSpec) -> String {
    let entries = ConfigEntries::from_spec(spec);
    let mut keys: Vec<&String> = entries.entries.keys().collect();
    let alpha_rank = KNOWN_KEYS.iter().position(|k| *k == "alpha").unwrap();
    // stages take the place of alpha
    keys.sort_by_key(|k| match stage_index(k) {
        Some(i) => (alpha_rank, i),
        None => (KNOWN_KEYS.iter().position(|known| known == k).unwrap(), 0),
    });
    let mut out = String::new();
    for k in keys {
        let _ = writeln!(out, "{k} = {}", entries.entries[k].1);
    }
    out
}

fn stage_index(key: &str) -> Option<usize> {
    key.strip_prefix("stage_")?.parse().ok().filter(|&i| i >= 1)
}

/// Parses `beta,T`.
pub fn parse_stage(v: &str) -> std::result::Result<Stage, String> {
    let (beta, len) = v
        .split_once(',')
        .ok_or_else(|| format!("stage `{v}` is not `beta,T`"))?;
    let beta: f64 = beta
        .trim()
        .parse()
        .map_err(|e| format!("stage step `{}`: {e}", beta.trim()))?;
    let length =
        parse_count(len.trim()).map_err(|e| format!("stage length `{}`: {e}", len.trim()))?;
    Ok(Stage { beta, length })
}

/// An iteration count, also accepting integral floats such as `3e4`.
pub fn parse_count(v: &str) -> std::result::Result<usize, String> {
    if let Ok(n) = v.parse::<usize>() {
        return Ok(n);
    }
    let f: f64 = v.parse().map_err(|e| format!("{e}"))?;
    if f >= 0.0 && f.fract() == 0.0 && f <= u32::MAX as f64 {
        Ok(f as usize)
    } else {
        Err("not a nonnegative integer".into())
    }
}

pub fn parse_mask_mode(v: &str) -> std::result::Result<MaskMode, String> {
    match v {
        "fixed" => Ok(MaskMode::FixedPerTrial),
        "fresh" => Ok(MaskMode::FreshPerIteration),
        _ => Err(format!("mask_mode `{v}` is not `fixed` or `fresh`")),
    }
}

pub fn mask_mode_name(mode: MaskMode) -> &'static str {
    match mode {
        MaskMode::FixedPerTrial => "fixed",
        MaskMode::FreshPerIteration => "fresh",
    }
}

pub fn parse_rule(v: &str) -> std::result::Result<GradientRule, String> {
    match v {
        "corrected" => Ok(GradientRule::Corrected),
        "naive" => Ok(GradientRule::Naive),
        _ => Err(format!("rule `{v}` is not `corrected` or `naive`")),
    }
}

pub fn rule_name(rule: GradientRule) -> &'static str {
    match rule {
        GradientRule::Corrected => "corrected",
        GradientRule::Naive => "naive",
    }
}

// Shortest representation that parses back to the same bits.
fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}
