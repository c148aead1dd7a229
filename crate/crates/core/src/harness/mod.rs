//! Monte Carlo certification of the tracking guarantee.
//!
//! For each radius the robust set is built once; every trial then samples a
//! population of `N` vehicles and checks whether the robust set is contained in
//! the population's exact aggregate set. Each trial draws from its own ChaCha8
//! stream, keyed by `(seed, radius index, trial index)`, so results do not
//! depend on scheduling.

mod stats;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use stats::{
    clopper_pearson, clopper_pearson_upper, envelope_constants, fit_constants, linear_fit,
    ConstantsFit, LinearFit,
};

use crate::aggregate::{is_subset_exact, AggregateFlexSet};
use crate::ambiguity::{robust_set, DiscreteDistribution, RobustOptions};
use crate::error::{Error, Result};
use crate::model::{Population, TimeGrid, DEFAULT_TOLERANCE};

/// Confidence level of the reported intervals.
pub const CONFIDENCE_ALPHA: f64 = 0.05;

/// How trials are scheduled. Results are identical either way.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExecutionMode {
    Sequential,
    /// Rayon work stealing; falls back to sequential without the `parallel` feature.
    #[default]
    Parallel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub distribution: DiscreteDistribution,
    pub n: usize,
    pub epsilons: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    pub steps: usize,
    pub power: f64,
    #[serde(default)]
    pub normalize: bool,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if self.n == 0 {
            return Err(Error::InvalidConfig(
                "population size must be at least 1".into(),
            ));
        }
        if self.epsilons.is_empty() {
            return Err(Error::InvalidConfig(
                "at least one radius is required".into(),
            ));
        }
        if self.epsilons.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
            return Err(Error::InvalidConfig(
                "radii must be finite and non-negative".into(),
            ));
        }
        if let Some(i) = self.epsilons.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(format!(
                "radii must be strictly increasing (epsilons[{i}] = {}, epsilons[{}] = {})",
                self.epsilons[i],
                i + 1,
                self.epsilons[i + 1]
            )));
        }
        TimeGrid::new(self.steps)?;
        if !(self.power > 0.0 && self.power.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "power must be positive, got {}",
                self.power
            )));
        }
        let ceiling = self.power * self.steps as f64;
        if (self.distribution.ceiling() - ceiling).abs() > DEFAULT_TOLERANCE * ceiling.max(1.0) {
            return Err(Error::InvalidConfig(format!(
                "distribution ceiling {} does not match m T = {ceiling}",
                self.distribution.ceiling()
            )));
        }
        Ok(())
    }
}

/// Outcome of all trials at one radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationStats {
    pub epsilon: f64,
    pub n: usize,
    pub steps: usize,
    pub trials: u64,
    pub violations: u64,
    pub beta_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// The robust set was empty, so every trial counts as tracked.
    pub degenerate: bool,
}

impl ViolationStats {
    pub fn from_counts(
        epsilon: f64,
        n: usize,
        steps: usize,
        trials: u64,
        violations: u64,
        degenerate: bool,
    ) -> Self {
        let (ci_lo, ci_hi) = clopper_pearson(violations, trials, CONFIDENCE_ALPHA);
        let beta_hat = violations as f64 / trials as f64;
        Self {
            epsilon,
            n,
            steps,
            trials,
            violations,
            beta_hat,
            ci_lo,
            ci_hi,
            degenerate,
        }
    }
}

/// A radius whose robust set could not be built.
#[derive(Debug, Clone, PartialEq)]
pub struct SkippedRadius {
    pub epsilon: f64,
    pub reason: Error,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrialReport {
    pub rows: Vec<ViolationStats>,
    pub skipped: Vec<SkippedRadius>,
}

/// The generator for one trial.
pub fn trial_rng(seed: u64, epsilon_index: usize, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((epsilon_index as u64) << 32) | (trial & 0xffff_ffff));
    rng
}

/// Draws `n` requirements independently from `p`.
pub fn sample_population<R: Rng + ?Sized>(
    p: &DiscreteDistribution,
    n: usize,
    grid: TimeGrid,
    power: f64,
    rng: &mut R,
) -> Result<Population> {
    let index =
        WeightedIndex::new(p.weights()).map_err(|e| Error::InvalidDistribution(e.to_string()))?;
    let intervals: Vec<(f64, f64)> = (0..n).map(|_| p.atoms()[index.sample(rng)]).collect();
    Population::from_intervals(grid, power, &intervals)
}

fn violated(
    cfg: &TrialConfig,
    set: &AggregateFlexSet,
    grid: TimeGrid,
    epsilon_index: usize,
    trial: u64,
) -> Result<bool> {
    let mut rng = trial_rng(cfg.seed, epsilon_index, trial);
    let pop = sample_population(&cfg.distribution, cfg.n, grid, cfg.power, &mut rng)?;
    Ok(!is_subset_exact(set, &pop, cfg.tolerance)?)
}

/// Per-trial violation flags at one radius, in trial order.
pub fn trial_decisions(
    cfg: &TrialConfig,
    set: &AggregateFlexSet,
    epsilon_index: usize,
    mode: ExecutionMode,
) -> Result<Vec<bool>> {
    let grid = TimeGrid::new(cfg.steps)?;
    match mode {
        #[cfg(feature = "parallel")]
        ExecutionMode::Parallel => (0..cfg.trials)
            .into_par_iter()
            .map(|t| violated(cfg, set, grid, epsilon_index, t))
            .collect(),
        _ => (0..cfg.trials)
            .map(|t| violated(cfg, set, grid, epsilon_index, t))
            .collect(),
    }
}

pub fn run_trials(cfg: &TrialConfig) -> Result<TrialReport> {
    run_trials_with(cfg, ExecutionMode::default())
}

pub fn run_trials_with(cfg: &TrialConfig, mode: ExecutionMode) -> Result<TrialReport> {
    cfg.validate()?;
    let grid = TimeGrid::new(cfg.steps)?;
    let options = RobustOptions {
        normalize: cfg.normalize,
        tolerance: cfg.tolerance,
    };
    let mut report = TrialReport::default();
    for (k, &epsilon) in cfg.epsilons.iter().enumerate() {
        let robust = match robust_set(&cfg.distribution, cfg.n, epsilon, grid, cfg.power, options) {
            Ok(r) => r,
            Err(reason @ Error::BudgetInfeasible { .. }) => {
                log::warn!("skipping radius {epsilon}: {reason}");
                report.skipped.push(SkippedRadius { epsilon, reason });
                continue;
            }
            Err(e) => return Err(e),
        };
        let violations = if robust.empty {
            0
        } else {
            trial_decisions(cfg, &robust.flex, k, mode)?
                .into_iter()
                .filter(|&v| v)
                .count() as u64
        };
        log::info!("eps={epsilon}: {violations}/{} violations", cfg.trials);
        report.rows.push(ViolationStats::from_counts(
            epsilon,
            cfg.n,
            cfg.steps,
            cfg.trials,
            violations,
            robust.empty,
        ));
    }
    Ok(report)
}
