//! Multi-trial convergence experiments.

use log::warn;
use rayon::prelude::*;

use maskedsgd_core::observation::streams;
use maskedsgd_core::solver::{self, TrialRngs};
use maskedsgd_core::theory::{self, bound_curve, DEFAULT_RHO_SAMPLES};
use maskedsgd_core::{
    generate_problem, DenseMatrix, Error as CoreError, GradientRule, MaskMode, ObservationRates,
    PairSampler, Problem, ProblemSpec, RhoEstimate, SeededRng, SolverConfig, StepSchedule,
    TheoryConstants,
};

use crate::error::{HarnessError, Result};

pub const DEFAULT_TRIALS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub problem: ProblemSpec,
    pub rates: ObservationRates,
    /// Contiguous row block size `ℓ`.
    pub row_block_size: usize,
    /// Contiguous column block size `τ`.
    pub col_block_size: usize,
    pub schedule: StepSchedule,
    pub trials: usize,
    pub max_iterations: usize,
    pub mask_mode: MaskMode,
    pub rule: GradientRule,
    pub record_every: usize,
    pub overlay_bound: bool,
    pub rho_samples: usize,
}

impl ExperimentSpec {
    /// Defaults for everything but the problem, rates, blocks, schedule and length.
    pub fn new(
        problem: ProblemSpec,
        rates: ObservationRates,
        row_block_size: usize,
        col_block_size: usize,
        schedule: StepSchedule,
        max_iterations: usize,
    ) -> Self {
        Self {
            problem,
            rates,
            row_block_size,
            col_block_size,
            schedule,
            trials: DEFAULT_TRIALS,
            max_iterations,
            mask_mode: MaskMode::FixedPerTrial,
            rule: GradientRule::Corrected,
            record_every: solver::DEFAULT_RECORD_EVERY,
            overlay_bound: false,
            rho_samples: DEFAULT_RHO_SAMPLES,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.problem.validate()?;
        let (m, n) = (self.problem.m, self.problem.n);
        if !(1..=m).contains(&self.row_block_size) {
            return Err(HarnessError::config(format!(
                "ell = {} must lie in 1..={m}",
                self.row_block_size
            )));
        }
        if !(1..=n).contains(&self.col_block_size) {
            return Err(HarnessError::config(format!(
                "tau = {} must lie in 1..={n}",
                self.col_block_size
            )));
        }
        if self.trials == 0 || self.trials > streams::MAX_TRIALS {
            return Err(HarnessError::config(format!(
                "trials = {} must lie in 1..={}",
                self.trials,
                streams::MAX_TRIALS
            )));
        }
        if self.overlay_bound && !matches!(self.schedule, StepSchedule::Constant(_)) {
            return Err(HarnessError::config(
                "the bound overlay needs a constant step size",
            ));
        }
        self.solver_config().validate(n)?;
        Ok(())
    }

    pub fn sampler(&self) -> Result<PairSampler> {
        Ok(PairSampler::contiguous(
            self.problem.m,
            self.problem.n,
            self.row_block_size,
            self.col_block_size,
        )?)
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig::new(self.schedule.clone(), self.max_iterations, self.rates)
            .with_mask_mode(self.mask_mode)
            .with_rule(self.rule)
            .with_record_every(self.record_every)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub iterations: Vec<usize>,
    /// Mean over the trials that did not diverge.
    pub mean_relative_error: Vec<f64>,
    /// One row per trial; rows of diverged trials are NaN.
    pub per_trial_errors: Vec<Vec<f64>>,
    pub diverged: Vec<bool>,
    /// `‖A†b‖²`.
    pub reference_norm_sq: f64,
    /// Bound on the relative error at each checkpoint.
    pub bound_overlay: Option<Vec<f64>>,
    pub constants: Option<TheoryConstants>,
}

impl ExperimentResult {
    pub fn trials(&self) -> usize {
        self.per_trial_errors.len()
    }

    /// Standard error of the trial mean at each checkpoint (0 with one surviving trial).
    pub fn mean_stderr(&self) -> Vec<f64> {
        let rows: Vec<&Vec<f64>> = self.surviving_rows().collect();
        let n = rows.len() as f64;
        (0..self.iterations.len())
            .map(|c| {
                if rows.len() < 2 {
                    return 0.0;
                }
                let mean = self.mean_relative_error[c];
                let var = rows.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / (n - 1.0);
                (var / n).sqrt()
            })
            .collect()
    }

    fn surviving_rows(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.per_trial_errors
            .iter()
            .zip(&self.diverged)
            .filter(|(_, d)| !**d)
            .map(|(r, _)| r)
    }

    pub fn last_mean(&self) -> f64 {
        *self.mean_relative_error.last().expect("nonempty result")
    }

    pub fn last_stderr(&self) -> f64 {
        *self.mean_stderr().last().expect("nonempty result")
    }
}

/// Arithmetic mean of the rows in `rows`, summed in slice order.
pub fn checkpoint_means(rows: &[&[f64]]) -> Vec<f64> {
    let len = rows.first().map_or(0, |r| r.len());
    let count = rows.len() as f64;
    (0..len)
        .map(|c| rows.iter().map(|r| r[c]).sum::<f64>() / count)
        .collect()
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let problem = generate_problem(&spec.problem)?;
    if problem.degenerate_inconsistent {
        warn!("m = n: no room for an inconsistent right-hand side, b is consistent");
    }
    run_on_problem(spec, &problem)
}

/// As [`run_experiment`] on an already generated (or loaded) problem. The reference is
/// `problem.x_star`, which comes from the fully observed data.
pub fn run_on_problem(spec: &ExperimentSpec, problem: &Problem) -> Result<ExperimentResult> {
    spec.validate()?;
    let sampler = spec.sampler()?;
    let config = spec.solver_config();
    let seed = spec.problem.seed;

    let outcomes: Vec<std::result::Result<Vec<f64>, CoreError>> = (0..spec.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rngs = TrialRngs::for_trial(seed, trial);
            solver::run(
                &problem.a,
                &problem.b,
                &sampler,
                &config,
                &mut rngs,
                &problem.x_star,
            )
            .map(|trace| trace.relative_errors)
        })
        .collect();

    let iterations = checkpoint_grid(spec.max_iterations, spec.record_every);
    let mut per_trial_errors = Vec::with_capacity(spec.trials);
    let mut diverged = Vec::with_capacity(spec.trials);
    for (trial, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(errors) => {
                debug_assert_eq!(errors.len(), iterations.len());
                per_trial_errors.push(errors);
                diverged.push(false);
            }
            Err(CoreError::Divergence {
                iteration,
                relative_error,
            }) => {
                warn!(
                    "trial {} diverged at k = {iteration} (relative error {relative_error:e})",
                    trial + 1
                );
                per_trial_errors.push(vec![f64::NAN; iterations.len()]);
                diverged.push(true);
            }
            Err(e) => return Err(e.into()),
        }
    }
    if diverged.iter().all(|&d| d) {
        return Err(HarnessError::AllTrialsDiverged {
            trials: spec.trials,
        });
    }
    let surviving: Vec<&[f64]> = per_trial_errors
        .iter()
        .zip(&diverged)
        .filter(|(_, d)| !**d)
        .map(|(r, _)| r.as_slice())
        .collect();
    let mean_relative_error = checkpoint_means(&surviving);

    let reference_norm_sq = problem.x_star.norm_sq();
    let (bound_overlay, constants) = if spec.overlay_bound {
        overlay(spec, problem, &sampler, &iterations, reference_norm_sq)?
    } else {
        (None, None)
    };

    Ok(ExperimentResult {
        iterations,
        mean_relative_error,
        per_trial_errors,
        diverged,
        reference_norm_sq,
        bound_overlay,
        constants,
    })
}

/// Iteration 0, every multiple of `every`, and `max_iterations`.
pub fn checkpoint_grid(max_iterations: usize, every: usize) -> Vec<usize> {
    let mut grid: Vec<usize> = (0..=max_iterations).step_by(every).collect();
    if *grid.last().unwrap() != max_iterations {
        grid.push(max_iterations);
    }
    grid
}

fn overlay(
    spec: &ExperimentSpec,
    problem: &Problem,
    sampler: &PairSampler,
    iterations: &[usize],
    reference_norm_sq: f64,
) -> Result<(Option<Vec<f64>>, Option<TheoryConstants>)> {
    let constants = theory_constants(
        problem,
        spec.rates,
        sampler,
        spec.rho_samples,
        spec.problem.seed,
    )?;
    let StepSchedule::Constant(alpha) = spec.schedule else {
        unreachable!("validated")
    };
    if alpha >= constants.alpha_max {
        warn!(
            "alpha = {alpha:e} is not below the ceiling {:e}; no bound overlay",
            constants.alpha_max
        );
        return Ok((None, Some(constants)));
    }
    // x⁰ = 0, so the initial squared error is ‖A†b‖²
    let curve = iterations
        .iter()
        .map(|&k| Ok(bound_curve(&constants, alpha, reference_norm_sq, k)? / reference_norm_sq))
        .collect::<std::result::Result<Vec<f64>, CoreError>>()?;
    Ok((Some(curve), Some(constants)))
}

/// Theory constants with `ρ` drawn from stream [`streams::RHO`] of `seed`.
pub fn theory_constants(
    problem: &Problem,
    rates: ObservationRates,
    sampler: &PairSampler,
    rho_samples: usize,
    seed: u64,
) -> Result<TheoryConstants> {
    let sigma_min = maskedsgd_core::densela::smallest_singular_value(&problem.a)?;
    let c = theory::constant_c(&problem.a, &problem.b, &problem.x_star, rates)?;
    let rho = estimate_rho_parallel(
        &problem.a,
        rates,
        sampler,
        rho_samples,
        &SeededRng::new(seed, streams::RHO),
    )?;
    Ok(TheoryConstants::new(
        sigma_min,
        rho,
        c,
        sampler.s(),
        sampler.t(),
    )?)
}

/// [`theory::estimate_rho`] with the batches run concurrently; bitwise equal to it.
pub fn estimate_rho_parallel(
    a: &DenseMatrix,
    rates: ObservationRates,
    sampler: &PairSampler,
    num_samples: usize,
    rng: &SeededRng,
) -> Result<RhoEstimate> {
    theory::check_rho_inputs(a, sampler, num_samples)?;
    let batches: Vec<(DenseMatrix, usize)> = theory::rho_batch_sizes(num_samples)
        .par_iter()
        .enumerate()
        .map(|(k, &len)| {
            let mut r = rng.substream(k as u64);
            (theory::rho_batch_sum(a, rates, sampler, len, &mut r), len)
        })
        .collect();
    Ok(theory::combine_rho_batches(&batches)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(trials: usize) -> ExperimentSpec {
        let mut spec = ExperimentSpec::new(
            ProblemSpec {
                m: 30,
                n: 6,
                consistent: true,
                seed: 5,
            },
            ObservationRates::new(0.9, 0.9).unwrap(),
            3,
            2,
            StepSchedule::Constant(2e-3),
            2_000,
        );
        spec.trials = trials;
        spec
    }

    #[test]
    fn grid_includes_zero_and_last() {
        assert_eq!(checkpoint_grid(250, 100), vec![0, 100, 200, 250]);
        assert_eq!(checkpoint_grid(200, 100), vec![0, 100, 200]);
    }

    #[test]
    fn single_trial_mean_is_the_trace() {
        let r = run_experiment(&small(1)).unwrap();
        assert_eq!(r.mean_relative_error, r.per_trial_errors[0]);
    }

    #[test]
    fn mean_is_exact_row_average() {
        let r = run_experiment(&small(4)).unwrap();
        for c in 0..r.iterations.len() {
            let s: f64 = r.per_trial_errors.iter().map(|row| row[c]).sum();
            assert_eq!(r.mean_relative_error[c], s / 4.0);
        }
    }

    #[test]
    fn deterministic() {
        let spec = small(3);
        assert_eq!(
            run_experiment(&spec).unwrap(),
            run_experiment(&spec).unwrap()
        );
    }

    #[test]
    fn parallel_rho_matches_sequential() {
        let p = generate_problem(&ProblemSpec {
            m: 12,
            n: 4,
            consistent: true,
            seed: 2,
        })
        .unwrap();
        let sampler = PairSampler::contiguous(12, 4, 3, 2).unwrap();
        let rates = ObservationRates::new(0.7, 0.8).unwrap();
        let rng = SeededRng::new(2, streams::RHO);
        let seq = theory::estimate_rho(&p.a, rates, &sampler, 5_000, &rng).unwrap();
        let par = estimate_rho_parallel(&p.a, rates, &sampler, 5_000, &rng).unwrap();
        assert_eq!(seq.rho.to_bits(), par.rho.to_bits());
        assert_eq!(seq.stderr.to_bits(), par.stderr.to_bits());
    }

    #[test]
    fn all_diverged_is_an_error() {
        let mut spec = small(2);
        spec.schedule = StepSchedule::Constant(5.0);
        let err = run_experiment(&spec).unwrap_err();
        assert!(matches!(err, HarnessError::AllTrialsDiverged { trials: 2 }));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn overlay_in_relative_units_starts_at_one() {
        let mut spec = small(2);
        spec.mask_mode = MaskMode::FreshPerIteration;
        spec.overlay_bound = true;
        spec.rho_samples = 2_000;
        let problem = generate_problem(&spec.problem).unwrap();
        let c = theory_constants(&problem, spec.rates, &spec.sampler().unwrap(), 2_000, 5).unwrap();
        spec.schedule = StepSchedule::Constant(c.alpha_max / 2.0);
        let r = run_experiment(&spec).unwrap();
        let bound = r.bound_overlay.unwrap();
        // at k = 0 the bound is e0 + horizon ≥ e0
        assert!(bound[0] >= 1.0);
        assert_eq!(bound.len(), r.iterations.len());
    }

    #[test]
    fn rejects_bad_blocks_and_trials() {
        let mut spec = small(1);
        spec.row_block_size = 31;
        assert!(spec.validate().is_err());
        let mut spec = small(1);
        spec.trials = 0;
        assert!(spec.validate().is_err());
        let mut spec = small(1);
        spec.trials = streams::MAX_TRIALS + 1;
        assert!(spec.validate().is_err());
    }
}
