//! `maskedsgd` command line.
//!
//! Exit status: 0 on success, 1 for usage, configuration and I/O errors, 2 for
//! numerical failures.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::warn;

use maskedsgd_core::observation::streams;
use maskedsgd_core::solver::{self, draw_fixed_masks, TrialRngs};
use maskedsgd_core::theory::bound_curve;
use maskedsgd_core::{generate_problem, MaskMode, Problem, ProblemSpec, StepSchedule};

use crate::config::{mask_mode_name, parse_stage, serialize_config, ConfigEntries};
use crate::dump::{read_problem, write_mask, write_problem};
use crate::error::{HarnessError, Result};
use crate::experiment::{checkpoint_grid, run_on_problem, theory_constants, ExperimentSpec};
use crate::repro::{self, Figure, ReproOptions};
use crate::svg::Plot;
use crate::table::{emit_csv, fmt_sig17, render_csv, CsvTable};

#[derive(Debug, Parser)]
#[command(
    name = "maskedsgd",
    version,
    about = "SGD for least squares with partially observed data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a seeded problem and write it to a file.
    Generate {
        #[arg(long, default_value_t = 1000)]
        m: usize,
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Add a component orthogonal to the range of A to b.
        #[arg(long)]
        inconsistent: bool,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Solve once and print the relative-error trace as CSV.
    Run {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Read the problem from a file instead of generating it.
        #[arg(long)]
        problem: Option<PathBuf>,
        /// 1-based trial whose random streams are used.
        #[arg(long, default_value_t = 1)]
        trial: usize,
        /// Write the fixed masks to `<PREFIX>.A.lsqm` and `<PREFIX>.b.lsqm`.
        #[arg(long, value_name = "PREFIX")]
        mask_dump: Option<PathBuf>,
    },
    /// Run a multi-trial experiment.
    Experiment {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// CSV output; printed to stdout when omitted.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Linear instead of logarithmic y axis in the SVG.
        #[arg(long)]
        linear_y: bool,
        /// Write the fully resolved configuration here.
        #[arg(long)]
        save_config: Option<PathBuf>,
    },
    /// Print the convergence bound for a constant step size as `k,bound,relative_bound`.
    Bound {
        #[command(flatten)]
        exp: ExperimentArgs,
    },
    /// Regenerate one of the canned figures.
    Repro {
        #[arg(value_enum)]
        figure: FigureArg,
        #[arg(long, default_value = "repro_out")]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        /// Length of the constant-step runs.
        #[arg(long, default_value_t = repro::FIGURE_ITERATIONS)]
        iterations: usize,
        #[arg(long, value_enum, default_value_t = MaskModeArg::Fresh)]
        mask_mode: MaskModeArg,
        #[arg(long, default_value_t = 100)]
        record_every: usize,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FigureArg {
    Fig1,
    Fig2,
    Fig3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MaskModeArg {
    Fixed,
    Fresh,
}

impl From<MaskModeArg> for MaskMode {
    fn from(m: MaskModeArg) -> Self {
        match m {
            MaskModeArg::Fixed => MaskMode::FixedPerTrial,
            MaskModeArg::Fresh => MaskMode::FreshPerIteration,
        }
    }
}

/// Experiment settings: a config file, overridden key by key by flags. Keys left unset
/// take the figure defaults (`m = 1000`, `n = 200`, `p = q = 0.9`, `ell = 2`,
/// `tau = n`, `alpha = 1e-4`, `iterations = 200000`).
#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    /// Row block size.
    #[arg(long)]
    ell: Option<usize>,
    /// Column block size.
    #[arg(long)]
    tau: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Ladder stage `beta,T`; repeat in order.
    #[arg(long, value_name = "BETA,T", conflicts_with = "alpha")]
    stage: Vec<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long, value_enum)]
    mask_mode: Option<MaskModeArg>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, conflicts_with = "consistent")]
    inconsistent: bool,
    #[arg(long)]
    consistent: bool,
    #[arg(long)]
    record_every: Option<usize>,
    #[arg(long)]
    overlay_bound: bool,
    /// `corrected` or `naive`.
    #[arg(long)]
    rule: Option<String>,
    #[arg(long)]
    rho_samples: Option<usize>,
}

impl ExperimentArgs {
    fn resolve(&self) -> Result<ExperimentSpec> {
        let mut entries = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
                ConfigEntries::parse(&text)?
            }
            None => ConfigEntries::default(),
        };
        let mut set = |key: &str, v: Option<String>| {
            if let Some(v) = v {
                entries.set(key, v);
            }
        };
        set("m", self.m.map(|v| v.to_string()));
        set("n", self.n.map(|v| v.to_string()));
        set("p", self.p.map(|v| format!("{v:?}")));
        set("q", self.q.map(|v| format!("{v:?}")));
        set("ell", self.ell.map(|v| v.to_string()));
        set("tau", self.tau.map(|v| v.to_string()));
        set("trials", self.trials.map(|v| v.to_string()));
        set("iterations", self.iterations.map(|v| v.to_string()));
        set(
            "mask_mode",
            self.mask_mode.map(|m| mask_mode_name(m.into()).to_string()),
        );
        set("seed", self.seed.map(|v| v.to_string()));
        set("record_every", self.record_every.map(|v| v.to_string()));
        set("rule", self.rule.clone());
        set("rho_samples", self.rho_samples.map(|v| v.to_string()));
        if self.inconsistent {
            entries.set("consistent", "false");
        }
        if self.consistent {
            entries.set("consistent", "true");
        }
        if self.overlay_bound {
            entries.set("overlay_bound", "true");
        }
        if let Some(alpha) = self.alpha {
            entries.clear_stages();
            entries.set("alpha", format!("{alpha:?}"));
        }
        if !self.stage.is_empty() {
            entries.remove("alpha");
            entries.clear_stages();
            for (i, s) in self.stage.iter().enumerate() {
                parse_stage(s).map_err(HarnessError::config)?;
                entries.set(&format!("stage_{}", i + 1), s.clone());
            }
        }

        for (key, default) in [
            ("m", "1000"),
            ("n", "200"),
            ("p", "0.9"),
            ("q", "0.9"),
            ("ell", "2"),
        ] {
            if entries.get(key).is_none() {
                entries.set(key, default);
            }
        }
        if entries.get("tau").is_none() {
            let n = entries.get("n").unwrap().to_string();
            entries.set("tau", n);
        }
        if entries.get("stage_1").is_none() {
            if entries.get("alpha").is_none() {
                entries.set("alpha", "1e-4");
            }
            if entries.get("iterations").is_none() {
                entries.set("iterations", repro::FIGURE_ITERATIONS.to_string());
            }
        }
        entries.to_spec()
    }
}

fn load_problem(spec: &mut ExperimentSpec, path: Option<&PathBuf>) -> Result<Problem> {
    match path {
        Some(path) => {
            let (ps, problem) = read_problem(path)?;
            spec.problem = ps;
            spec.validate()?;
            Ok(problem)
        }
        None => {
            let problem = generate_problem(&spec.problem)?;
            if problem.degenerate_inconsistent {
                warn!("m = n: no room for an inconsistent right-hand side, b is consistent");
            }
            Ok(problem)
        }
    }
}

/// Parses `args` (program name first) and runs the command, writing normal output to
/// `out` and diagnostics to `err`. Returns the exit status.
pub fn run_cli(args: Vec<OsString>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{rendered}");
                    0
                }
                _ => {
                    let _ = write!(err, "{rendered}");
                    1
                }
            };
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn main_with_args(args: Vec<OsString>) -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_cli(args, &mut stdout.lock(), &mut stderr.lock())
}

fn write_out(out: &mut dyn Write, s: &str) -> Result<()> {
    out.write_all(s.as_bytes())
        .map_err(|e| HarnessError::io("<stdout>", e))
}

fn dispatch(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match command {
        Command::Generate {
            m,
            n,
            seed,
            inconsistent,
            output,
        } => {
            let spec = ProblemSpec {
                m,
                n,
                consistent: !inconsistent,
                seed,
            };
            let problem = generate_problem(&spec)?;
            if problem.degenerate_inconsistent {
                warn!("m = n: no room for an inconsistent right-hand side, b is consistent");
            }
            write_problem(&output, &spec, &problem)
        }
        Command::Run {
            exp,
            problem,
            trial,
            mask_dump,
        } => {
            let mut spec = exp.resolve()?;
            let problem = load_problem(&mut spec, problem.as_ref())?;
            if trial == 0 || trial > streams::MAX_TRIALS {
                return Err(HarnessError::config(format!(
                    "--trial must lie in 1..={}",
                    streams::MAX_TRIALS
                )));
            }
            let mut rngs = TrialRngs::for_trial(spec.problem.seed, trial - 1);
            if let Some(prefix) = mask_dump {
                if spec.mask_mode != MaskMode::FixedPerTrial {
                    return Err(HarnessError::config("--mask-dump needs --mask-mode fixed"));
                }
                let mut masks = rngs.masks.clone();
                let (a_hat, b_hat) =
                    draw_fixed_masks(&problem.a, &problem.b, spec.rates, &mut masks);
                let with = |ext: &str| {
                    let mut p = prefix.clone().into_os_string();
                    p.push(ext);
                    PathBuf::from(p)
                };
                write_mask(&with(".A.lsqm"), a_hat.rows(), a_hat.cols(), a_hat.mask())?;
                write_mask(&with(".b.lsqm"), b_hat.len(), 1, b_hat.mask())?;
            }
            let trace = solver::run(
                &problem.a,
                &problem.b,
                &spec.sampler()?,
                &spec.solver_config(),
                &mut rngs,
                &problem.x_star,
            )?;
            let mut s = String::from("iteration,rel_err\n");
            for (k, e) in trace.iterations.iter().zip(&trace.relative_errors) {
                s.push_str(&format!("{k},{}\n", fmt_sig17(*e)));
            }
            write_out(out, &s)
        }
        Command::Experiment {
            exp,
            csv,
            svg,
            linear_y,
            save_config,
        } => {
            let mut spec = exp.resolve()?;
            if let Some(path) = save_config {
                std::fs::write(&path, serialize_config(&spec))
                    .map_err(|e| HarnessError::io(&path, e))?;
            }
            let problem = load_problem(&mut spec, None)?;
            let result = run_on_problem(&spec, &problem)?;
            match csv {
                Some(path) => emit_csv(&result, &path)?,
                None => write_out(out, &render_csv(&CsvTable::from(&result)))?,
            }
            if let Some(path) = svg {
                let mut plot = Plot::new("convergence", !linear_y);
                plot.add_result("mean", &result);
                crate::svg::write_plot(&plot, &path)?;
            }
            let _ = writeln!(
                err,
                "final mean relative error {} ({} of {} trials diverged)",
                fmt_sig17(result.last_mean()),
                result.diverged.iter().filter(|&&d| d).count(),
                result.trials()
            );
            Ok(())
        }
        Command::Bound { exp } => {
            let mut spec = exp.resolve()?;
            let StepSchedule::Constant(alpha) = spec.schedule else {
                return Err(HarnessError::config("the bound needs a constant --alpha"));
            };
            let problem = load_problem(&mut spec, None)?;
            let c = theory_constants(
                &problem,
                spec.rates,
                &spec.sampler()?,
                spec.rho_samples,
                spec.problem.seed,
            )?;
            let _ = writeln!(
                err,
                "sigma_min = {}, rho = {} (stderr {}), C = {}, ceiling = {}",
                fmt_sig17(c.sigma_min),
                fmt_sig17(c.rho),
                fmt_sig17(c.rho_stderr),
                fmt_sig17(c.c),
                fmt_sig17(c.alpha_max)
            );
            let e0 = problem.x_star.norm_sq();
            let mut s = String::from("k,bound,relative_bound\n");
            for k in checkpoint_grid(spec.max_iterations, spec.record_every) {
                let b = bound_curve(&c, alpha, e0, k)?;
                s.push_str(&format!("{k},{},{}\n", fmt_sig17(b), fmt_sig17(b / e0)));
            }
            write_out(out, &s)
        }
        Command::Repro {
            figure,
            out_dir,
            seed,
            trials,
            iterations,
            mask_mode,
            record_every,
        } => {
            let fig = match figure {
                FigureArg::Fig1 => Figure::Rates,
                FigureArg::Fig2 => Figure::StepSizes,
                FigureArg::Fig3 => Figure::Ladder,
            };
            let opts = ReproOptions {
                seed,
                trials,
                iterations,
                mask_mode: mask_mode.into(),
                record_every,
            };
            for panel in repro::run_figure(fig, &opts, &out_dir)? {
                for ((label, _), r) in panel.panel.series.iter().zip(&panel.results) {
                    let _ = writeln!(
                        out,
                        "{} {} {label}: final mean relative error {} (stderr {})",
                        fig.name(),
                        panel.panel.name(),
                        fmt_sig17(r.last_mean()),
                        fmt_sig17(r.last_stderr())
                    );
                }
            }
            Ok(())
        }
    }
}
