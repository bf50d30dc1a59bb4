//! Block SGD iterations for `min ‖Ax − b‖₂` on Bernoulli-masked data.
//!
//! Each step samples `(I, J)` uniformly from the partition product and moves along
//!
//! ```text
//! g(x) = E_J Â_{I,J}ᵀ (Â_{I,:} x / p² − b̂_I / (pq)) − ((1 − p)/p²) D x
//! ```
//!
//! where `E_J` embeds a `|J|`-vector into the coordinates `J` and `D` is diagonal with
//! `D_jj = ‖Â_{I,j}‖²` for `j ∈ J` and zero elsewhere. Its expectation over masks and
//! pairs is `Aᵀ(Ax − b)/(st)`. The uncorrected direction `E_J Â_{I,J}ᵀ(Â_{I,:}x − b̂_I)`
//! is available as [`GradientRule::Naive`]; at `p = q = 1` both coincide bit for bit.

use alloc::vec;
use alloc::vec::Vec;

use crate::densela::{DenseMatrix, DenseVector};
use crate::error::{Error, Result};
use crate::observation::{
    apply_mask_matrix, apply_mask_vector, streams, MaskedMatrix, MaskedVector, ObservationRates,
    SeededRng,
};
use crate::partition::PairSampler;

/// Relative error above which [`run`] reports divergence.
pub const DEFAULT_DIVERGENCE_THRESHOLD: f64 = 1e12;
pub const DEFAULT_RECORD_EVERY: usize = 100;

/// One rung of a piecewise-constant step-size ladder: step `beta` for `length`
/// iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stage {
    pub beta: f64,
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepSchedule {
    Constant(f64),
    /// Strictly decreasing steps with nondecreasing stage lengths.
    Piecewise(Vec<Stage>),
}

impl StepSchedule {
    pub fn constant(alpha: f64) -> Result<Self> {
        let s = StepSchedule::Constant(alpha);
        s.validate()?;
        Ok(s)
    }

    pub fn piecewise(stages: Vec<Stage>) -> Result<Self> {
        let s = StepSchedule::Piecewise(stages);
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            StepSchedule::Constant(alpha) => {
                if !(alpha.is_finite() && *alpha > 0.0) {
                    return Err(Error::InvalidArgument(alloc::format!(
                        "step size {alpha} must be positive and finite"
                    )));
                }
            }
            StepSchedule::Piecewise(stages) => {
                if stages.is_empty() {
                    return Err(Error::invalid("piecewise schedule has no stages"));
                }
                for (i, st) in stages.iter().enumerate() {
                    if !(st.beta.is_finite() && st.beta > 0.0) {
                        return Err(Error::InvalidArgument(alloc::format!(
                            "stage {} step {} must be positive and finite",
                            i + 1,
                            st.beta
                        )));
                    }
                    if st.length == 0 {
                        return Err(Error::InvalidArgument(alloc::format!(
                            "stage {} has zero length",
                            i + 1
                        )));
                    }
                }
                for (i, w) in stages.windows(2).enumerate() {
                    if w[1].beta >= w[0].beta {
                        return Err(Error::InvalidArgument(alloc::format!(
                            "stage steps must strictly decrease (stage {} -> {})",
                            i + 1,
                            i + 2
                        )));
                    }
                    if w[1].length < w[0].length {
                        return Err(Error::InvalidArgument(alloc::format!(
                            "stage lengths must not decrease (stage {} -> {})",
                            i + 1,
                            i + 2
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Total number of iterations covered, `None` for a constant schedule.
    pub fn horizon(&self) -> Option<usize> {
        match self {
            StepSchedule::Constant(_) => None,
            StepSchedule::Piecewise(stages) => Some(stages.iter().map(|s| s.length).sum()),
        }
    }

    /// Step size of iteration `k` (1-based): `β_i` for the first stage with
    /// `k ≤ T_1 + … + T_i`.
    pub fn step_size_at(&self, k: usize) -> Result<f64> {
        if k == 0 {
            return Err(Error::invalid("iterations are numbered from 1"));
        }
        match self {
            StepSchedule::Constant(alpha) => Ok(*alpha),
            StepSchedule::Piecewise(stages) => {
                let mut end = 0;
                for s in stages {
                    end += s.length;
                    if k <= end {
                        return Ok(s.beta);
                    }
                }
                Err(Error::OutOfSchedule { k, total: end })
            }
        }
    }
}

/// Free-function form of [`StepSchedule::step_size_at`].
pub fn step_size_at(schedule: &StepSchedule, k: usize) -> Result<f64> {
    schedule.step_size_at(k)
}

/// When the observation masks are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MaskMode {
    /// `Â`, `b̂` drawn once before the first iteration and held fixed.
    FixedPerTrial,
    /// Fresh masks every iteration. Only the rows in the sampled block enter the step,
    /// so only those are drawn.
    #[default]
    FreshPerIteration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GradientRule {
    /// Rescaled and diagonally corrected direction (unbiased).
    #[default]
    Corrected,
    /// The raw block gradient on observed data (biased unless `p = q = 1`).
    Naive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub schedule: StepSchedule,
    pub max_iterations: usize,
    pub rates: ObservationRates,
    pub mask_mode: MaskMode,
    pub rule: GradientRule,
    /// Log the relative error every this many iterations (plus iteration 0 and the last).
    pub record_every: usize,
    /// Defaults to the zero vector.
    pub initial_iterate: Option<DenseVector>,
    pub divergence_threshold: f64,
}

impl SolverConfig {
    pub fn new(schedule: StepSchedule, max_iterations: usize, rates: ObservationRates) -> Self {
        Self {
            schedule,
            max_iterations,
            rates,
            mask_mode: MaskMode::default(),
            rule: GradientRule::default(),
            record_every: DEFAULT_RECORD_EVERY,
            initial_iterate: None,
            divergence_threshold: DEFAULT_DIVERGENCE_THRESHOLD,
        }
    }

    pub fn with_mask_mode(mut self, mode: MaskMode) -> Self {
        self.mask_mode = mode;
        self
    }

    pub fn with_rule(mut self, rule: GradientRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn with_record_every(mut self, every: usize) -> Self {
        self.record_every = every;
        self
    }

    pub fn with_initial_iterate(mut self, x0: DenseVector) -> Self {
        self.initial_iterate = Some(x0);
        self
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        self.schedule.validate()?;
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations must be at least 1"));
        }
        if self.record_every == 0 {
            return Err(Error::invalid("record_every must be at least 1"));
        }
        if let Some(total) = self.schedule.horizon() {
            if total < self.max_iterations {
                return Err(Error::InvalidArgument(alloc::format!(
                    "step schedule covers {total} iterations but max_iterations is {}",
                    self.max_iterations
                )));
            }
        }
        if let Some(x0) = &self.initial_iterate {
            if x0.len() != n {
                return Err(Error::DimensionMismatch {
                    op: "initial iterate",
                    expected: n,
                    actual: x0.len(),
                });
            }
        }
        Ok(())
    }
}

/// Relative errors `‖x^k − A†b‖² / ‖A†b‖²` at the logged iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateTrace {
    pub iterations: Vec<usize>,
    pub relative_errors: Vec<f64>,
    pub final_iterate: DenseVector,
}

/// Random streams for one solver run.
#[derive(Debug, Clone)]
pub struct TrialRngs {
    pub masks: SeededRng,
    pub pairs: SeededRng,
}

impl TrialRngs {
    /// Streams `1000 + trial` (masks) and `2000 + trial` (pairs) under `seed`.
    pub fn for_trial(seed: u64, trial: usize) -> Self {
        Self {
            masks: SeededRng::new(seed, streams::trial_masks(trial)),
            pairs: SeededRng::new(seed, streams::trial_pairs(trial)),
        }
    }
}

/// The masks [`run`] uses in [`MaskMode::FixedPerTrial`]: `Â` row-major, then `b̂`,
/// from the trial's mask stream.
pub fn draw_fixed_masks(
    a: &DenseMatrix,
    b: &DenseVector,
    rates: ObservationRates,
    rng: &mut SeededRng,
) -> (MaskedMatrix, MaskedVector) {
    let a_hat = apply_mask_matrix(a, rates, rng);
    let b_hat = apply_mask_vector(b, rates.q(), rng);
    (a_hat, b_hat)
}

pub fn relative_error(x: &DenseVector, reference: &DenseVector, reference_norm_sq: f64) -> f64 {
    x.distance_sq(reference) / reference_norm_sq
}

// Rows of the sampled block as seen by the gradient kernel.
trait BlockRows {
    fn len(&self) -> usize;
    fn row(&self, k: usize) -> &[f64];
    fn rhs(&self, k: usize) -> f64;
}

struct MaskedBlock<'a> {
    a_hat: &'a DenseMatrix,
    b_hat: &'a DenseVector,
    rows: &'a [usize],
}

impl BlockRows for MaskedBlock<'_> {
    fn len(&self) -> usize {
        self.rows.len()
    }

    #[inline]
    fn row(&self, k: usize) -> &[f64] {
        self.a_hat.row(self.rows[k])
    }

    #[inline]
    fn rhs(&self, k: usize) -> f64 {
        self.b_hat[self.rows[k]]
    }
}

// Freshly masked copy of the sampled rows.
struct ScratchBlock {
    n: usize,
    values: Vec<f64>,
    rhs: Vec<f64>,
}

impl ScratchBlock {
    fn fill(
        &mut self,
        a: &DenseMatrix,
        b: &DenseVector,
        rows: &[usize],
        rates: ObservationRates,
        rng: &mut SeededRng,
    ) {
        self.values.clear();
        self.rhs.clear();
        for &i in rows {
            for &v in a.row(i) {
                self.values
                    .push(if rng.bernoulli(rates.p()) { v } else { 0.0 });
            }
        }
        for &i in rows {
            self.rhs
                .push(if rng.bernoulli(rates.q()) { b[i] } else { 0.0 });
        }
    }
}

impl BlockRows for ScratchBlock {
    fn len(&self) -> usize {
        self.rhs.len()
    }

    #[inline]
    fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.n..(k + 1) * self.n]
    }

    #[inline]
    fn rhs(&self, k: usize) -> f64 {
        self.rhs[k]
    }
}

/// Writes the direction restricted to `cols` into `out` (`out[c]` is coordinate
/// `cols[c]`). `residual` is scratch of length `|I|`.
fn block_direction<R: BlockRows>(
    block: &R,
    x: &[f64],
    cols: &[usize],
    rule: GradientRule,
    rates: ObservationRates,
    residual: &mut Vec<f64>,
    out: &mut [f64],
) {
    let p = rates.p();
    let p2 = p * p;
    let pq = p * rates.q();
    residual.clear();
    for k in 0..block.len() {
        let dot: f64 = block.row(k).iter().zip(x).map(|(a, b)| a * b).sum();
        residual.push(match rule {
            GradientRule::Corrected => dot / p2 - block.rhs(k) / pq,
            GradientRule::Naive => dot - block.rhs(k),
        });
    }
    let correct = rule == GradientRule::Corrected && p < 1.0;
    let coef = (1.0 - p) / p2;
    for (o, &j) in out.iter_mut().zip(cols) {
        let mut g = 0.0;
        let mut col_norm_sq = 0.0;
        for (k, &r) in residual.iter().enumerate() {
            let a = block.row(k)[j];
            g += a * r;
            col_norm_sq += a * a;
        }
        if correct {
            g -= coef * col_norm_sq * x[j];
        }
        *o = g;
    }
}

fn check_gradient_inputs(
    a_hat: &MaskedMatrix,
    b_hat: &MaskedVector,
    x: &DenseVector,
    rows: &[usize],
    cols: &[usize],
) -> Result<()> {
    let (m, n) = (a_hat.rows(), a_hat.cols());
    if b_hat.len() != m {
        return Err(Error::DimensionMismatch {
            op: "gradient (b length)",
            expected: m,
            actual: b_hat.len(),
        });
    }
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            op: "gradient (x length)",
            expected: n,
            actual: x.len(),
        });
    }
    if rows.is_empty() || cols.is_empty() {
        return Err(Error::invalid("row and column blocks must be nonempty"));
    }
    if rows.iter().any(|&i| i >= m) || cols.iter().any(|&j| j >= n) {
        return Err(Error::invalid("block index out of range"));
    }
    Ok(())
}

fn gradient_with_rule(
    a_hat: &MaskedMatrix,
    b_hat: &MaskedVector,
    x: &DenseVector,
    rows: &[usize],
    cols: &[usize],
    rates: ObservationRates,
    rule: GradientRule,
) -> Result<DenseVector> {
    check_gradient_inputs(a_hat, b_hat, x, rows, cols)?;
    let block = MaskedBlock {
        a_hat: a_hat.values(),
        b_hat: b_hat.values(),
        rows,
    };
    let mut on_cols = vec![0.0; cols.len()];
    let mut residual = Vec::with_capacity(rows.len());
    block_direction(
        &block,
        x.as_slice(),
        cols,
        rule,
        rates,
        &mut residual,
        &mut on_cols,
    );
    let mut g = DenseVector::zeros(x.len());
    for (&j, v) in cols.iter().zip(on_cols) {
        g[j] = v;
    }
    Ok(g)
}

/// Bias-corrected stochastic gradient `g(x)` for the block pair `(rows, cols)`.
///
/// Supported on `cols`; costs `O(|I|·n + |I|·|J|)`.
pub fn stochastic_gradient(
    a_hat: &MaskedMatrix,
    b_hat: &MaskedVector,
    x: &DenseVector,
    rows: &[usize],
    cols: &[usize],
    rates: ObservationRates,
) -> Result<DenseVector> {
    gradient_with_rule(a_hat, b_hat, x, rows, cols, rates, GradientRule::Corrected)
}

/// The uncorrected block gradient `E_J Â_{I,J}ᵀ (Â_{I,:}x − b̂_I)`.
pub fn naive_gradient(
    a_hat: &MaskedMatrix,
    b_hat: &MaskedVector,
    x: &DenseVector,
    rows: &[usize],
    cols: &[usize],
) -> Result<DenseVector> {
    gradient_with_rule(
        a_hat,
        b_hat,
        x,
        rows,
        cols,
        ObservationRates::full(),
        GradientRule::Naive,
    )
}

/// `x − α g`.
pub fn sgd_step(x: &DenseVector, gradient: &DenseVector, alpha: f64) -> Result<DenseVector> {
    if x.len() != gradient.len() {
        return Err(Error::DimensionMismatch {
            op: "sgd_step",
            expected: x.len(),
            actual: gradient.len(),
        });
    }
    if !(alpha > 0.0) {
        return Err(Error::invalid("step size must be positive"));
    }
    Ok(x.iter()
        .zip(gradient.iter())
        .map(|(xi, gi)| xi - alpha * gi)
        .collect())
}

/// Runs `config.max_iterations` steps from `x⁰` (zero by default).
///
/// `reference` is `A†b` computed from the fully observed data; it is only used for
/// logging. Masks come from `rngs.masks` and block pairs from `rngs.pairs`.
pub fn run(
    a: &DenseMatrix,
    b: &DenseVector,
    sampler: &PairSampler,
    config: &SolverConfig,
    rngs: &mut TrialRngs,
    reference: &DenseVector,
) -> Result<IterateTrace> {
    let (m, n) = (a.rows(), a.cols());
    if b.len() != m {
        return Err(Error::DimensionMismatch {
            op: "run (b length)",
            expected: m,
            actual: b.len(),
        });
    }
    if reference.len() != n {
        return Err(Error::DimensionMismatch {
            op: "run (reference length)",
            expected: n,
            actual: reference.len(),
        });
    }
    if sampler.rows().universe() != m || sampler.cols().universe() != n {
        return Err(Error::invalid("partitions do not match the matrix shape"));
    }
    config.validate(n)?;
    let reference_norm_sq = reference.norm_sq();
    if reference_norm_sq == 0.0 {
        return Err(Error::invalid(
            "reference solution is zero; relative error undefined",
        ));
    }

    let rates = config.rates;
    let mut x = config
        .initial_iterate
        .clone()
        .unwrap_or_else(|| DenseVector::zeros(n));

    let fixed = match config.mask_mode {
        MaskMode::FixedPerTrial => Some(draw_fixed_masks(a, b, rates, &mut rngs.masks)),
        MaskMode::FreshPerIteration => None,
    };
    let mut scratch = ScratchBlock {
        n,
        values: Vec::new(),
        rhs: Vec::new(),
    };
    let max_block = sampler
        .cols()
        .blocks()
        .iter()
        .map(Vec::len)
        .max()
        .unwrap_or(0);
    let mut direction = vec![0.0; max_block];
    let mut residual = Vec::new();

    let capacity = config.max_iterations / config.record_every + 2;
    let mut iterations = Vec::with_capacity(capacity);
    let mut relative_errors = Vec::with_capacity(capacity);
    let mut record = |k: usize, x: &DenseVector| -> Result<()> {
        let err = relative_error(x, reference, reference_norm_sq);
        if !(err <= config.divergence_threshold) {
            return Err(Error::Divergence {
                iteration: k,
                relative_error: err,
            });
        }
        iterations.push(k);
        relative_errors.push(err);
        Ok(())
    };
    record(0, &x)?;

    for k in 1..=config.max_iterations {
        let alpha = config.schedule.step_size_at(k)?;
        let (rows, cols) = sampler.sample_blocks(&mut rngs.pairs);
        let out = &mut direction[..cols.len()];
        match &fixed {
            Some((a_hat, b_hat)) => {
                let block = MaskedBlock {
                    a_hat: a_hat.values(),
                    b_hat: b_hat.values(),
                    rows,
                };
                block_direction(
                    &block,
                    x.as_slice(),
                    cols,
                    config.rule,
                    rates,
                    &mut residual,
                    out,
                );
            }
            None => {
                scratch.fill(a, b, rows, rates, &mut rngs.masks);
                block_direction(
                    &scratch,
                    x.as_slice(),
                    cols,
                    config.rule,
                    rates,
                    &mut residual,
                    out,
                );
            }
        }
        let xs = x.as_mut_slice();
        for (&j, &g) in cols.iter().zip(out.iter()) {
            xs[j] -= alpha * g;
        }
        if k % config.record_every == 0 || k == config.max_iterations {
            record(k, &x)?;
        }
    }

    Ok(IterateTrace {
        iterations,
        relative_errors,
        final_iterate: x,
    })
}

/// The four closed-form updates obtained from extreme partitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecialCase {
    /// `s = m, t = n`: one entry `(row, col)` per step.
    Entry { row: usize, col: usize },
    /// `s = m, t = 1`: one full row per step.
    Row { row: usize },
    /// `s = 1, t = n`: one full column per step.
    Column { col: usize },
    /// `s = t = 1`: full (deterministic-partition) gradient step.
    Full,
}

impl SpecialCase {
    /// Identifies which case a sampled pair `(row_block, col_block)` of `sampler`
    /// belongs to. Fails if the partitions are not one of the four extreme shapes.
    pub fn from_sampler(sampler: &PairSampler, pair: (usize, usize)) -> Result<Self> {
        let (m, n) = (sampler.rows().universe(), sampler.cols().universe());
        let (s, t) = (sampler.s(), sampler.t());
        let row = sampler.rows().block(pair.0)[0];
        let col = sampler.cols().block(pair.1)[0];
        if s == m && t == n {
            Ok(SpecialCase::Entry { row, col })
        } else if s == m && t == 1 {
            Ok(SpecialCase::Row { row })
        } else if s == 1 && t == n {
            Ok(SpecialCase::Column { col })
        } else if s == 1 && t == 1 {
            Ok(SpecialCase::Full)
        } else {
            Err(Error::InvalidArgument(alloc::format!(
                "partition shape (s, t) = ({s}, {t}) is not a special case for a {m}x{n} matrix"
            )))
        }
    }

    /// The row and column blocks the case corresponds to.
    pub fn blocks(&self, m: usize, n: usize) -> (Vec<usize>, Vec<usize>) {
        match *self {
            SpecialCase::Entry { row, col } => (vec![row], vec![col]),
            SpecialCase::Row { row } => (vec![row], (0..n).collect()),
            SpecialCase::Column { col } => ((0..m).collect(), vec![col]),
            SpecialCase::Full => ((0..m).collect(), (0..n).collect()),
        }
    }
}

/// One corrected step in the closed form of `case`, without forming any `n × n` matrix.
/// The entry and row cases only read row `i` of the data.
pub fn specialized_step(
    case: SpecialCase,
    a_hat: &MaskedMatrix,
    b_hat: &MaskedVector,
    x: &DenseVector,
    rates: ObservationRates,
    alpha: f64,
) -> Result<DenseVector> {
    let (m, n) = (a_hat.rows(), a_hat.cols());
    if b_hat.len() != m || x.len() != n {
        return Err(Error::DimensionMismatch {
            op: "specialized_step",
            expected: n,
            actual: x.len(),
        });
    }
    let in_range = match case {
        SpecialCase::Entry { row, col } => row < m && col < n,
        SpecialCase::Row { row } => row < m,
        SpecialCase::Column { col } => col < n,
        SpecialCase::Full => true,
    };
    if !in_range {
        return Err(Error::invalid("special-case index out of range"));
    }
    let a = a_hat.values();
    let b = b_hat.values();
    let p = rates.p();
    let p2 = p * p;
    let pq = p * rates.q();
    let coef = (1.0 - p) / p2;
    let row_residual = |i: usize| -> f64 {
        let dot: f64 = a.row(i).iter().zip(x.iter()).map(|(u, v)| u * v).sum();
        dot / p2 - b[i] / pq
    };

    let mut next = x.clone();
    match case {
        SpecialCase::Entry { row, col } => {
            let aij = a[(row, col)];
            let inner = row_residual(row) - coef * aij * x[col];
            next[col] = x[col] - alpha * aij * inner;
        }
        SpecialCase::Row { row } => {
            let r = row_residual(row);
            for (j, &aij) in a.row(row).iter().enumerate() {
                next[j] = x[j] - alpha * (aij * r - coef * aij * aij * x[j]);
            }
        }
        SpecialCase::Column { col } => {
            let mut g = 0.0;
            for i in 0..m {
                let aij = a[(i, col)];
                g += aij * (row_residual(i) - coef * aij * x[col]);
            }
            next[col] = x[col] - alpha * g;
        }
        SpecialCase::Full => {
            let r: Vec<f64> = (0..m).map(row_residual).collect();
            let mut g = vec![0.0; n];
            let mut diag = vec![0.0; n];
            for (i, &ri) in r.iter().enumerate() {
                for (j, &aij) in a.row(i).iter().enumerate() {
                    g[j] += aij * ri;
                    diag[j] += aij * aij;
                }
            }
            for j in 0..n {
                next[j] = x[j] - alpha * (g[j] - coef * diag[j] * x[j]);
            }
        }
    }
    Ok(next)
}
