//! Canned figure recipes: `m = 1000`, `n = 200`, row blocks of 2, one column block.

use std::path::Path;

use log::info;

use maskedsgd_core::{MaskMode, ObservationRates, ProblemSpec, Stage, StepSchedule};

use crate::error::{HarnessError, Result};
use crate::experiment::{run_experiment, ExperimentResult, ExperimentSpec, DEFAULT_TRIALS};
use crate::svg::Plot;
use crate::table::emit_csv;

pub const FIGURE_M: usize = 1000;
pub const FIGURE_N: usize = 200;
pub const FIGURE_ROW_BLOCK: usize = 2;
pub const FIGURE_ITERATIONS: usize = 200_000;

/// The step-size ladder: `(1e-4, 3e4)`, `(10^-4.5, 4e4)`, `(1e-5, 1.3e5)`.
pub fn ladder() -> Vec<Stage> {
    vec![
        Stage {
            beta: 1e-4,
            length: 30_000,
        },
        Stage {
            beta: 10f64.powf(-4.5),
            length: 40_000,
        },
        Stage {
            beta: 1e-5,
            length: 130_000,
        },
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// Constant step `1e-4`, rates `(1,1)`, `(0.9,0.9)`, `(0.7,0.7)`.
    Rates,
    /// Rates `0.9`, steps `1e-4`, `10^-4.5`, `1e-5`.
    StepSizes,
    /// The ladder against the constant step `1e-4`, rates `0.9`.
    Ladder,
}

impl Figure {
    pub fn name(self) -> &'static str {
        match self {
            Figure::Rates => "fig1",
            Figure::StepSizes => "fig2",
            Figure::Ladder => "fig3",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReproOptions {
    pub seed: u64,
    pub trials: usize,
    /// Length of the constant-step runs; the ladder comparison always uses the ladder's
    /// length.
    pub iterations: usize,
    /// Fresh per iteration by default: with masks fixed per trial the iterates settle
    /// on the fixed-mask solution and the curves lose their step-size dependence.
    pub mask_mode: MaskMode,
    pub record_every: usize,
}

impl Default for ReproOptions {
    fn default() -> Self {
        Self {
            seed: 1,
            trials: DEFAULT_TRIALS,
            iterations: FIGURE_ITERATIONS,
            mask_mode: MaskMode::FreshPerIteration,
            record_every: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub consistent: bool,
    /// `(legend label, spec)` per curve.
    pub series: Vec<(String, ExperimentSpec)>,
}

impl Panel {
    pub fn name(&self) -> &'static str {
        if self.consistent {
            "consistent"
        } else {
            "inconsistent"
        }
    }
}

fn base(
    consistent: bool,
    rate: f64,
    schedule: StepSchedule,
    iterations: usize,
    opts: &ReproOptions,
) -> ExperimentSpec {
    let mut spec = ExperimentSpec::new(
        ProblemSpec {
            m: FIGURE_M,
            n: FIGURE_N,
            consistent,
            seed: opts.seed,
        },
        ObservationRates::new(rate, rate).expect("rates in (0, 1]"),
        FIGURE_ROW_BLOCK,
        FIGURE_N,
        schedule,
        iterations,
    );
    spec.trials = opts.trials;
    spec.mask_mode = opts.mask_mode;
    spec.record_every = opts.record_every;
    spec
}

/// One panel per right-hand side (consistent first), all curves sharing the seed and
/// hence the data.
pub fn figure_panels(fig: Figure, opts: &ReproOptions) -> Vec<Panel> {
    [true, false]
        .into_iter()
        .map(|consistent| {
            let series = match fig {
                Figure::Rates => [1.0, 0.9, 0.7]
                    .into_iter()
                    .map(|r| {
                        (
                            format!("p = q = {r}"),
                            base(
                                consistent,
                                r,
                                StepSchedule::Constant(1e-4),
                                opts.iterations,
                                opts,
                            ),
                        )
                    })
                    .collect(),
                Figure::StepSizes => [(1e-4, "1e-4"), (10f64.powf(-4.5), "1e-4.5"), (1e-5, "1e-5")]
                    .into_iter()
                    .map(|(alpha, name)| {
                        (
                            format!("alpha = {name}"),
                            base(
                                consistent,
                                0.9,
                                StepSchedule::Constant(alpha),
                                opts.iterations,
                                opts,
                            ),
                        )
                    })
                    .collect(),
                Figure::Ladder => {
                    let total = ladder().iter().map(|s| s.length).sum();
                    vec![
                        (
                            "alpha = 1e-4".to_string(),
                            base(consistent, 0.9, StepSchedule::Constant(1e-4), total, opts),
                        ),
                        (
                            "ladder".to_string(),
                            base(
                                consistent,
                                0.9,
                                StepSchedule::Piecewise(ladder()),
                                total,
                                opts,
                            ),
                        ),
                    ]
                }
            };
            Panel { consistent, series }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PanelResult {
    pub panel: Panel,
    pub results: Vec<ExperimentResult>,
}

pub fn run_panel(panel: &Panel) -> Result<PanelResult> {
    let results = panel
        .series
        .iter()
        .map(|(label, spec)| {
            info!(
                "{} / {label}: {} trials x {} iterations",
                panel.name(),
                spec.trials,
                spec.max_iterations
            );
            run_experiment(spec)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PanelResult {
        panel: panel.clone(),
        results,
    })
}

/// Runs every panel and writes `<fig>_<panel>_<i>.csv` per curve and
/// `<fig>_<panel>.svg` per panel into `out_dir`.
pub fn run_figure(fig: Figure, opts: &ReproOptions, out_dir: &Path) -> Result<Vec<PanelResult>> {
    std::fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    let mut out = Vec::new();
    for panel in figure_panels(fig, opts) {
        let res = run_panel(&panel)?;
        let mut plot = Plot::new(format!("{} ({} b)", fig.name(), panel.name()), true);
        for (i, ((label, _), r)) in panel.series.iter().zip(&res.results).enumerate() {
            emit_csv(
                r,
                &out_dir.join(format!("{}_{}_{}.csv", fig.name(), panel.name(), i + 1)),
            )?;
            plot.add_result(label, r);
        }
        crate::svg::write_plot(
            &plot,
            &out_dir.join(format!("{}_{}.svg", fig.name(), panel.name())),
        )?;
        out.push(res);
    }
    Ok(out)
}
