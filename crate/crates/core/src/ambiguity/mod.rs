//! Discrete distributions over charging requirements, Wasserstein-1 distances
//! and the distributionally robust aggregate set.
//!
//! The ground metric on requirement space is L1 on `(e_lo, e_hi)`:
//! `d((a, b), (a', b')) = |a - a'| + |b - b'|`. Arrival, departure and power
//! are shared by every atom and contribute nothing.

mod concentration;
mod push;

use serde::{Deserialize, Serialize};

pub use concentration::{
    beta_from_epsilon, epsilon_from_beta, ConcentrationConstants, Evaluated, RangeWarning,
};
pub use push::{push_lower, push_upper, PushOutcome};

use crate::aggregate::AggregateFlexSet;
use crate::error::{Error, Result};
use crate::model::{Population, TimeGrid, DEFAULT_TOLERANCE};
use crate::transport;

/// Allowed deviation of the weight total from one.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

/// Slack allowed when re-checking that a worst-case distribution lies in the ball.
pub const BUDGET_TOLERANCE: f64 = 1e-9;

/// A finitely supported distribution of `(e_lo, e_hi)` requirements on `[0, ceiling]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution", into = "RawDistribution")]
pub struct DiscreteDistribution {
    atoms: Vec<(f64, f64)>,
    weights: Vec<f64>,
    ceiling: f64,
}

#[derive(Serialize, Deserialize)]
struct RawDistribution {
    atoms: Vec<(f64, f64)>,
    weights: Vec<f64>,
    ceiling: f64,
}

impl TryFrom<RawDistribution> for DiscreteDistribution {
    type Error = Error;

    fn try_from(raw: RawDistribution) -> Result<Self> {
        Self::new(raw.atoms, raw.weights, raw.ceiling)
    }
}

impl From<DiscreteDistribution> for RawDistribution {
    fn from(d: DiscreteDistribution) -> Self {
        Self {
            atoms: d.atoms,
            weights: d.weights,
            ceiling: d.ceiling,
        }
    }
}

impl DiscreteDistribution {
    pub fn new(atoms: Vec<(f64, f64)>, weights: Vec<f64>, ceiling: f64) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidDistribution(
                "at least one atom is required".into(),
            ));
        }
        if atoms.len() != weights.len() {
            return Err(Error::InvalidDistribution(format!(
                "{} atoms but {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        if !(ceiling > 0.0 && ceiling.is_finite()) {
            return Err(Error::InvalidDistribution(format!(
                "ceiling must be positive, got {ceiling}"
            )));
        }
        for (i, &w) in weights.iter().enumerate() {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidDistribution(format!(
                    "weights[{i}] = {w} is not positive"
                )));
            }
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        for (i, &(lo, hi)) in atoms.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi && hi <= ceiling) {
                return Err(Error::InvalidDistribution(format!(
                    "atoms[{i}] = ({lo}, {hi}) violates 0 <= e_lo <= e_hi <= {ceiling}"
                )));
            }
        }
        Ok(Self {
            atoms,
            weights,
            ceiling,
        })
    }

    /// Equal weights over `atoms` (repeats allowed).
    pub fn uniform(atoms: Vec<(f64, f64)>, ceiling: f64) -> Result<Self> {
        let w = 1.0 / atoms.len().max(1) as f64;
        let weights = vec![w; atoms.len()];
        let total: f64 = weights.iter().sum();
        // absorb the rounding of n * (1/n) so long supports stay valid
        let mut weights = weights;
        if let Some(last) = weights.last_mut() {
            *last += 1.0 - total;
        }
        Self::new(atoms, weights, ceiling)
    }

    pub fn point_mass(atom: (f64, f64), ceiling: f64) -> Result<Self> {
        Self::new(vec![atom], vec![1.0], ceiling)
    }

    /// Empirical distribution of a population on `[0, m T]`.
    pub fn empirical(pop: &Population) -> Result<Self> {
        Self::uniform(pop.intervals(), pop.power() * pop.steps() as f64)
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn ceiling(&self) -> f64 {
        self.ceiling
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Same weights, atoms and ceiling multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let atoms = self
            .atoms
            .iter()
            .map(|&(lo, hi)| (lo * factor, (hi * factor).min(self.ceiling * factor)))
            .collect();
        Self::new(atoms, self.weights.clone(), self.ceiling * factor)
    }

    /// Atoms and weights sorted lexicographically by `(e_lo, e_hi)`.
    fn sorted(&self) -> Vec<((f64, f64), f64)> {
        let mut v: Vec<_> = self
            .atoms
            .iter()
            .copied()
            .zip(self.weights.iter().copied())
            .collect();
        v.sort_by(|a, b| a.0 .0.total_cmp(&b.0 .0).then(a.0 .1.total_cmp(&b.0 .1)));
        v
    }

    /// True when the support is totally ordered componentwise.
    fn is_chain(&self) -> bool {
        self.sorted().windows(2).all(|w| w[0].0 .1 <= w[1].0 .1)
    }
}

fn l1(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).abs() + (a.1 - b.1).abs()
}

fn check_same_domain(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<()> {
    if (p.ceiling - q.ceiling).abs() > DEFAULT_TOLERANCE * p.ceiling.max(1.0) {
        return Err(Error::InvalidDistribution(format!(
            "distributions live on different domains [0, {}] and [0, {}]",
            p.ceiling, q.ceiling
        )));
    }
    Ok(())
}

/// Exact W1 under the L1 ground metric.
///
/// When both supports are chains the monotone coupling is optimal for both
/// coordinates at once and the distance splits into two one-dimensional terms.
pub fn wasserstein1(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<f64> {
    check_same_domain(p, q)?;
    if p.is_chain() && q.is_chain() {
        Ok(wasserstein1_marginals(p, q))
    } else {
        Ok(wasserstein1_transport(p, q))
    }
}

/// W1 from the full transport problem, without the chain shortcut.
pub fn wasserstein1_transport(p: &DiscreteDistribution, q: &DiscreteDistribution) -> f64 {
    transport::solve(&p.weights, &q.weights, |i, j| l1(p.atoms[i], q.atoms[j])).cost
}

/// Sum of the coordinate-wise one-dimensional distances. A lower bound on W1
/// in general and equal to it for chain supports.
pub fn wasserstein1_marginals(p: &DiscreteDistribution, q: &DiscreteDistribution) -> f64 {
    let marginal = |d: &DiscreteDistribution, pick: fn(&(f64, f64)) -> f64| -> Vec<(f64, f64)> {
        d.atoms
            .iter()
            .map(pick)
            .zip(d.weights.iter().copied())
            .collect()
    };
    transport::w1_line(&marginal(p, |a| a.0), &marginal(q, |a| a.0))
        + transport::w1_line(&marginal(p, |a| a.1), &marginal(q, |a| a.1))
}

/// An equal-weight `n`-point approximation of a distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    /// Sorted lexicographically.
    pub support: Vec<(f64, f64)>,
    /// Exact W1 distance to the source distribution.
    pub cost: f64,
}

fn lower_median(mut pieces: Vec<(f64, f64)>) -> f64 {
    pieces.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pieces.iter().map(|p| p.1).sum();
    let half = 0.5 * total * (1.0 - 1e-12);
    let mut acc = 0.0;
    for &(x, w) in &pieces {
        acc += w;
        if acc >= half {
            return x;
        }
    }
    pieces.last().map_or(0.0, |p| p.0)
}

/// Projects `p` onto `n` equal-weight atoms.
///
/// Atoms are sorted lexicographically, the cumulative mass is cut into `n`
/// chunks of `1/n`, and each chunk is replaced by its per-coordinate weighted
/// lower median. The reported cost is the exact distance, not a bound.
pub fn project_to_n_points(p: &DiscreteDistribution, n: usize) -> Result<Projection> {
    if n == 0 {
        return Err(Error::Domain("projection needs at least one point".into()));
    }
    let sorted = p.sorted();
    let mut bounds = Vec::with_capacity(sorted.len());
    let mut start = 0.0;
    for (k, &(_, w)) in sorted.iter().enumerate() {
        let end = if k + 1 == sorted.len() {
            1.0
        } else {
            start + w
        };
        bounds.push((start, end));
        start = end;
    }
    let nf = n as f64;
    let mut support = Vec::with_capacity(n);
    let mut first = 0;
    for j in 0..n {
        let (lo_edge, hi_edge) = (j as f64 / nf, (j + 1) as f64 / nf);
        let mut lows = Vec::new();
        let mut highs = Vec::new();
        let mut k = first;
        while k < sorted.len() && bounds[k].0 < hi_edge {
            let (s, e) = bounds[k];
            let mass = e.min(hi_edge) - s.max(lo_edge);
            if mass > 1e-15 {
                lows.push((sorted[k].0 .0, mass));
                highs.push((sorted[k].0 .1, mass));
            }
            if e <= hi_edge {
                first = k + 1;
            }
            k += 1;
        }
        if lows.is_empty() {
            // only reachable through rounding at the right edge
            let last = sorted[sorted.len() - 1].0;
            support.push(last);
        } else {
            support.push((lower_median(lows), lower_median(highs)));
        }
    }
    support.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let q = DiscreteDistribution::uniform(support.clone(), p.ceiling)?;
    let cost = wasserstein1(p, &q)?;
    Ok(Projection { support, cost })
}

/// Options for [`robust_set`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustOptions {
    /// Measure distances on energies divided by `m T`, so radii live in `[0, 1]`.
    pub normalize: bool,
    pub tolerance: f64,
}

impl Default for RobustOptions {
    fn default() -> Self {
        Self {
            normalize: false,
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

/// The distributionally robust aggregate set and the bookkeeping behind it.
///
/// Distances (`epsilon`, `projection_cost`, budgets, verified distances) are in
/// normalized units when `scale != 1`; energies (`projection`, `kappa_*`, the
/// populations inside `flex`) are always in raw units.
#[derive(Debug, Clone, Serialize)]
pub struct RobustSetResult {
    pub flex: AggregateFlexSet,
    pub epsilon: f64,
    pub beta: Option<f64>,
    pub n: usize,
    pub scale: f64,
    pub projection: Vec<(f64, f64)>,
    pub projection_cost: f64,
    pub budget_lo: f64,
    pub budget_hi: f64,
    pub i_c_lo: usize,
    pub kappa_lo: f64,
    pub i_c_hi: usize,
    pub kappa_hi: f64,
    /// Atoms whose `e_hi` had to be raised to their pushed `e_lo`.
    pub repaired_lo: usize,
    /// Atoms whose `e_lo` had to be lowered to their pushed `e_hi`.
    pub repaired_hi: usize,
    pub distance_lo: f64,
    pub distance_hi: f64,
    pub empty: bool,
}

/// Builds the robust set for radius `epsilon` and population size `n`.
pub fn robust_set(
    p: &DiscreteDistribution,
    n: usize,
    epsilon: f64,
    grid: TimeGrid,
    power: f64,
    options: RobustOptions,
) -> Result<RobustSetResult> {
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(Error::Domain(format!(
            "radius must be non-negative, got {epsilon}"
        )));
    }
    let ceiling = power * grid.steps() as f64;
    if (p.ceiling - ceiling).abs() > DEFAULT_TOLERANCE * ceiling.max(1.0) {
        return Err(Error::InvalidDistribution(format!(
            "distribution ceiling {} does not match m T = {ceiling}",
            p.ceiling
        )));
    }
    let scale = if options.normalize { ceiling } else { 1.0 };
    let work = if options.normalize {
        p.scaled(1.0 / scale)?
    } else {
        p.clone()
    };
    let top = work.ceiling;

    let projection = project_to_n_points(&work, n)?;
    if epsilon < projection.cost {
        return Err(Error::BudgetInfeasible {
            epsilon,
            projection_cost: projection.cost,
        });
    }
    let budget = epsilon - projection.cost;

    let lower = push::push_lower_coupled(&projection.support, budget, top)?;
    let mut by_hi = projection.support.clone();
    by_hi.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)));
    let upper = push::push_upper_coupled(&by_hi, budget)?;

    let distance_lo = wasserstein1(
        &work,
        &DiscreteDistribution::uniform(lower.atoms.clone(), top)?,
    )?;
    let distance_hi = wasserstein1(
        &work,
        &DiscreteDistribution::uniform(upper.atoms.clone(), top)?,
    )?;
    for distance in [distance_lo, distance_hi] {
        if distance > epsilon + BUDGET_TOLERANCE {
            return Err(Error::BudgetAccounting { distance, epsilon });
        }
    }

    let to_raw = |atoms: &[(f64, f64)]| -> Vec<(f64, f64)> {
        atoms
            .iter()
            .map(|&(lo, hi)| {
                let hi = (hi * scale).clamp(0.0, ceiling);
                ((lo * scale).clamp(0.0, hi), hi)
            })
            .collect()
    };
    let pop_lo = Population::from_intervals(grid, power, &to_raw(&lower.atoms))?;
    let pop_hi = Population::from_intervals(grid, power, &to_raw(&upper.atoms))?;
    let flex = AggregateFlexSet::from_worst_case(&pop_lo, &pop_hi, options.tolerance)?;
    let empty = flex.is_empty();
    log::debug!(
        "robust set: eps={epsilon}, eps0={}, i_c=({}, {}), empty={empty}",
        projection.cost,
        lower.outcome.critical,
        upper.outcome.critical
    );

    Ok(RobustSetResult {
        flex,
        epsilon,
        beta: None,
        n,
        scale,
        projection: to_raw(&projection.support),
        projection_cost: projection.cost,
        budget_lo: lower.outcome.spent,
        budget_hi: upper.outcome.spent,
        i_c_lo: lower.outcome.critical,
        kappa_lo: lower.outcome.kappa * scale,
        i_c_hi: upper.outcome.critical,
        kappa_hi: upper.outcome.kappa * scale,
        repaired_lo: lower.repaired,
        repaired_hi: upper.repaired,
        distance_lo,
        distance_hi,
        empty,
    })
}

/// Robust set for a target confidence complement `beta`, with the radius taken
/// from the concentration relation.
pub fn robust_set_for_beta(
    p: &DiscreteDistribution,
    n: usize,
    beta: f64,
    constants: ConcentrationConstants,
    grid: TimeGrid,
    power: f64,
    options: RobustOptions,
) -> Result<RobustSetResult> {
    let epsilon = epsilon_from_beta(beta, n, constants)?.value;
    let mut out = robust_set(p, n, epsilon, grid, power, options)?;
    out.beta = Some(beta);
    Ok(out)
}
