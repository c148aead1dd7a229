//! Exact aggregate flexibility sets of homogeneous populations.
//!
//! For a population with lower/upper fastest-charge sums `nu_lo`/`nu_hi`, the
//! aggregate set is the convex hull of the permutations of the `T + 1` spliced
//! vectors `mu_t = (nu_hi[..t], nu_lo[t..])`. Equivalently (Hoffman's
//! circulation theorem on the vehicle/step transportation network) a profile
//! `u` belongs to it iff, for every `k`, the `k` largest entries of `u` sum to
//! at most `prefix_k(nu_hi)` and the `k` smallest sum to at least
//! `suffix_k(nu_lo)`. Membership itself is always decided by a flow
//! computation; the bound form is used for structural checks.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::{Feasibility, FlowNetwork};
use crate::majorization::{prefix_dominates, suffix_dominates, SortedVector};
use crate::model::{accumulate_fastest, ChargingProfile, Population, TimeGrid};

/// Sums of the fastest-charge profiles at each member's lower and upper energy.
pub fn nu_bounds(pop: &Population) -> (Vec<f64>, Vec<f64>) {
    let steps = pop.steps();
    let (mut lo, mut hi) = (vec![0.0; steps], vec![0.0; steps]);
    for xi in pop.members() {
        accumulate_fastest(xi.e_lo(), pop.power(), &mut lo);
        accumulate_fastest(xi.e_hi(), pop.power(), &mut hi);
    }
    (lo, hi)
}

/// The spliced vectors `mu_0, ..., mu_T` for a `(nu_lo, nu_hi)` pair.
pub fn spliced_vertices(nu_lo: &[f64], nu_hi: &[f64]) -> Vec<Vec<f64>> {
    (0..=nu_lo.len())
        .map(|t| nu_hi[..t].iter().chain(&nu_lo[t..]).copied().collect())
        .collect()
}

/// Whether `u` satisfies the prefix/suffix bounds induced by `(nu_lo, nu_hi)`.
pub fn within_bounds(nu_lo: &[f64], nu_hi: &[f64], u: &[f64], tol: f64) -> bool {
    let (lo, hi, x) = (
        SortedVector::new(nu_lo),
        SortedVector::new(nu_hi),
        SortedVector::new(u),
    );
    (1..=x.len()).all(|k| x.prefix(k) <= hi.prefix(k) + tol && x.suffix(k) + tol >= lo.suffix(k))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Generators {
    Single {
        population: Population,
    },
    /// Intersection of the sets of two worst-case populations.
    Pair {
        lower: Population,
        upper: Population,
    },
}

/// An aggregate flexibility set parameterised by `(nu_lo, nu_hi)`, together
/// with the population(s) it was built from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateFlexSet {
    nu_lo: Vec<f64>,
    nu_hi: Vec<f64>,
    generators: Generators,
    representatives: Vec<Vec<f64>>,
    regular: bool,
    empty: bool,
}

impl AggregateFlexSet {
    pub fn from_population(pop: &Population) -> Self {
        let (nu_lo, nu_hi) = nu_bounds(pop);
        let representatives = spliced_vertices(&nu_lo, &nu_hi);
        Self {
            nu_lo,
            nu_hi,
            generators: Generators::Single {
                population: pop.clone(),
            },
            representatives,
            regular: true,
            empty: false,
        }
    }

    /// `F(lower) ∩ F(upper)`, parameterised by `nu_lo(lower)` and `nu_hi(upper)`.
    ///
    /// Requires `nu_hi(upper)` to be prefix-dominated by `nu_hi(lower)` and
    /// `nu_lo(lower)` to suffix-dominate `nu_lo(upper)`; under those orderings the
    /// intersection is exactly the bound set of the returned parameter pair.
    pub fn from_worst_case(lower: &Population, upper: &Population, tol: f64) -> Result<Self> {
        if lower.grid() != upper.grid()
            || lower.len() != upper.len()
            || lower.power() != upper.power()
        {
            return Err(Error::InvalidConfig(
                "worst-case populations must share horizon, size and power rating".into(),
            ));
        }
        let (lo_l, hi_l) = nu_bounds(lower);
        let (lo_u, hi_u) = nu_bounds(upper);
        if !prefix_dominates(&hi_l, &hi_u, tol)? || !suffix_dominates(&lo_l, &lo_u, tol)? {
            return Err(Error::InvalidConfig(
                "worst-case populations are not ordered: upper must tighten nu_hi and lower must tighten nu_lo"
                    .into(),
            ));
        }
        let (nu_lo, nu_hi) = (lo_l, hi_u);
        let steps = nu_lo.len();
        let totals_cross = nu_lo.iter().sum::<f64>() > nu_hi.iter().sum::<f64>() + tol;
        let spliced = spliced_vertices(&nu_lo, &nu_hi);
        let regular = !totals_cross
            && spliced
                .iter()
                .all(|mu| within_bounds(&nu_lo, &nu_hi, mu, tol));
        let (representatives, empty) = if totals_cross {
            (Vec::new(), true)
        } else if regular {
            (spliced, false)
        } else {
            match extreme_witnesses(&nu_lo, &nu_hi, steps, tol) {
                Some(w) => (w, false),
                None => (Vec::new(), true),
            }
        };
        Ok(Self {
            nu_lo,
            nu_hi,
            generators: Generators::Pair {
                lower: lower.clone(),
                upper: upper.clone(),
            },
            representatives,
            regular,
            empty,
        })
    }

    pub fn nu_lo(&self) -> &[f64] {
        &self.nu_lo
    }

    pub fn nu_hi(&self) -> &[f64] {
        &self.nu_hi
    }

    pub fn steps(&self) -> usize {
        self.nu_lo.len()
    }

    pub fn grid(&self) -> TimeGrid {
        self.gen_lo().grid()
    }

    pub fn power(&self) -> f64 {
        self.gen_lo().power()
    }

    pub fn size(&self) -> usize {
        self.gen_lo().len()
    }

    /// Population whose lower energies generate `nu_lo`.
    pub fn gen_lo(&self) -> &Population {
        match &self.generators {
            Generators::Single { population } => population,
            Generators::Pair { lower, .. } => lower,
        }
    }

    /// Population whose upper energies generate `nu_hi`.
    pub fn gen_hi(&self) -> &Population {
        match &self.generators {
            Generators::Single { population } => population,
            Generators::Pair { upper, .. } => upper,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.empty
    }

    /// Whether every spliced vector lies inside the set. Always true for sets
    /// built from a single population.
    pub fn is_regular(&self) -> bool {
        self.regular
    }

    /// `mu_0 = nu_lo, ..., mu_T = nu_hi`: the first `t` entries come from
    /// `nu_hi`, the rest from `nu_lo`.
    pub fn sorted_vertices(&self) -> Vec<Vec<f64>> {
        spliced_vertices(&self.nu_lo, &self.nu_hi)
    }

    /// Points whose membership in another set decides inclusion of this set:
    /// the spliced vertices for regular sets, otherwise the maximisers of every
    /// top-`k` sum and minimisers of every bottom-`k` sum over the set.
    pub fn representatives(&self) -> &[Vec<f64>] {
        &self.representatives
    }

    /// Membership via flow feasibility against every generating population.
    pub fn contains(&self, u: &[f64], tol: f64) -> Result<bool> {
        if self.empty {
            return Ok(false);
        }
        match &self.generators {
            Generators::Single { population } => contains(population, u, tol),
            Generators::Pair { lower, upper } => {
                Ok(contains(lower, u, tol)? && contains(upper, u, tol)?)
            }
        }
    }
}

fn validate_profile(pop: &Population, u: &[f64], tol: f64) -> Result<Vec<f64>> {
    if u.len() != pop.steps() {
        return Err(Error::DimensionMismatch {
            expected: pop.steps(),
            actual: u.len(),
        });
    }
    u.iter()
        .enumerate()
        .map(|(index, &value)| {
            if !value.is_finite() || value < -tol {
                Err(Error::NegativeEntry { index, value })
            } else {
                Ok(value.max(0.0))
            }
        })
        .collect()
}

/// Vehicle/step transportation network: source -> vehicle `[lo_i, hi_i]`,
/// vehicle -> step `[0, m]`, step -> sink `[u_t, u_t]`.
struct DisaggregationNetwork {
    network: FlowNetwork,
    source: usize,
    sink: usize,
    first_step: usize,
}

impl DisaggregationNetwork {
    fn build(pop: &Population, u: &[f64]) -> Self {
        let (n, steps) = (pop.len(), pop.steps());
        let source = 0;
        let first_step = n + 1;
        let sink = n + steps + 1;
        let mut network = FlowNetwork::new(n + steps + 2);
        for (i, xi) in pop.members().iter().enumerate() {
            network.add_edge(source, 1 + i, xi.e_lo(), xi.e_hi());
        }
        for i in 0..n {
            for t in 0..steps {
                network.add_edge(1 + i, first_step + t, 0.0, pop.power());
            }
        }
        for (t, &demand) in u.iter().enumerate() {
            network.add_edge(first_step + t, sink, demand, demand);
        }
        Self {
            network,
            source,
            sink,
            first_step,
        }
    }
}

/// Whether the population can jointly track the aggregate profile `u`.
pub fn contains(pop: &Population, u: &[f64], tol: f64) -> Result<bool> {
    let u = validate_profile(pop, u, tol)?;
    let total: f64 = u.iter().sum();
    if total < pop.total_lo() - tol || total > pop.total_hi() + tol {
        return Ok(false);
    }
    let net = DisaggregationNetwork::build(pop, &u);
    Ok(matches!(
        net.network.feasible_flow(net.source, net.sink, tol),
        Feasibility::Feasible(_)
    ))
}

/// Per-vehicle profiles that sum to a target aggregate profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decomposition {
    pub per_ev: Vec<ChargingProfile>,
}

/// Certificate of infeasibility: the 1-indexed steps on the sink side of a
/// minimum cut whose demand cannot be served, and the unrouted amount.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfeasibleCut {
    pub steps: Vec<usize>,
    pub deficit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum DecomposeOutcome {
    Feasible(Decomposition),
    Infeasible(InfeasibleCut),
}

/// Disaggregates `u` into individually feasible profiles, or returns the cut
/// that blocks it.
pub fn decompose(pop: &Population, u: &[f64], tol: f64) -> Result<DecomposeOutcome> {
    let u = validate_profile(pop, u, tol)?;
    let (n, steps) = (pop.len(), pop.steps());
    let net = DisaggregationNetwork::build(pop, &u);
    let first_step = net.first_step;
    match net.network.feasible_flow(net.source, net.sink, tol) {
        Feasibility::Feasible(flows) => {
            // edge order: n source arcs, then n * steps vehicle arcs
            let per_ev = (0..n)
                .map(|i| {
                    let row = flows[n + i * steps..n + (i + 1) * steps].to_vec();
                    ChargingProfile::from_rounded(row, tol)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(DecomposeOutcome::Feasible(Decomposition { per_ev }))
        }
        Feasibility::Infeasible { reachable, deficit } => {
            let steps = (0..steps)
                .filter(|&t| u[t] > tol && !reachable[first_step + t])
                .map(|t| t + 1)
                .collect();
            Ok(DecomposeOutcome::Infeasible(InfeasibleCut {
                steps,
                deficit,
            }))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum SubsetVerdict {
    Subset,
    /// `index` points into [`AggregateFlexSet::representatives`].
    NotSubset {
        index: usize,
        witness: Vec<f64>,
    },
}

impl SubsetVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, SubsetVerdict::Subset)
    }
}

/// Exact inclusion `set ⊆ F(pop)`.
///
/// `F(pop)` is cut out by bounds on its top-`k` and bottom-`k` sums. The
/// representatives of `set` attain the extreme values of those sums over
/// `set`, so testing them decides inclusion.
pub fn subset_verdict(set: &AggregateFlexSet, pop: &Population, tol: f64) -> Result<SubsetVerdict> {
    if set.steps() != pop.steps() {
        return Err(Error::DimensionMismatch {
            expected: pop.steps(),
            actual: set.steps(),
        });
    }
    if set.is_empty() {
        return Ok(SubsetVerdict::Subset);
    }
    for (index, rep) in set.representatives().iter().enumerate() {
        if !contains(pop, rep, tol)? {
            return Ok(SubsetVerdict::NotSubset {
                index,
                witness: rep.clone(),
            });
        }
    }
    Ok(SubsetVerdict::Subset)
}

pub fn is_subset_exact(set: &AggregateFlexSet, pop: &Population, tol: f64) -> Result<bool> {
    Ok(subset_verdict(set, pop, tol)?.holds())
}

/// How the majorization conditions on `nu_lo` are read in the fast test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LowerReading {
    /// Every tail sum of the set's `nu_lo` is at least the population's.
    #[default]
    Tail,
    /// Every prefix sum of the set's `nu_lo` is at most the population's.
    Prefix,
}

/// Experimental inclusion test from the total-energy and majorization
/// conditions on the parameter vectors. Sets whose `nu_lo` is not
/// elementwise below `nu_hi` are reported as not certified.
pub fn is_subset_fast(
    set: &AggregateFlexSet,
    pop: &Population,
    reading: LowerReading,
    tol: f64,
) -> Result<bool> {
    if set.steps() != pop.steps() {
        return Err(Error::DimensionMismatch {
            expected: pop.steps(),
            actual: set.steps(),
        });
    }
    if set.is_empty() {
        return Ok(true);
    }
    let (lo, hi) = (set.nu_lo(), set.nu_hi());
    if lo.iter().zip(hi).any(|(l, h)| *l > *h + tol) {
        return Ok(false);
    }
    let (pop_lo, pop_hi) = nu_bounds(pop);
    let sum = |v: &[f64]| v.iter().sum::<f64>();
    let totals = sum(lo) >= sum(&pop_lo) - tol && sum(hi) <= sum(&pop_hi) + tol;
    let lower = match reading {
        LowerReading::Tail => suffix_dominates(lo, &pop_lo, tol)?,
        LowerReading::Prefix => prefix_dominates(&pop_lo, lo, tol)?,
    };
    Ok(totals && lower && prefix_dominates(&pop_hi, hi, tol)?)
}

/// `a * x + b * y <= c`
#[derive(Debug, Clone, Copy)]
struct HalfPlane {
    a: f64,
    b: f64,
    c: f64,
}

/// Bound constraints on the two-level vector with `k` copies of `x` and
/// `steps - k` copies of `y`, under the ordering `x >= y` or `y >= x`.
fn two_level_constraints(
    lo: &SortedVector,
    hi: &SortedVector,
    k: usize,
    x_larger: bool,
) -> Vec<HalfPlane> {
    let steps = lo.len();
    let rest = steps - k;
    // (count of the larger value, count of the smaller value) within the top j
    let split = |j: usize, big: usize| (j.min(big), j.saturating_sub(big));
    let mut out = Vec::with_capacity(2 * steps + 3);
    for j in 1..=steps {
        let (top, bottom) = if x_larger {
            let (nx, ny) = split(j, k);
            let (my, mx) = split(j, rest);
            ((nx, ny), (mx, my))
        } else {
            let (ny, nx) = split(j, rest);
            let (mx, my) = split(j, k);
            ((nx, ny), (mx, my))
        };
        out.push(HalfPlane {
            a: top.0 as f64,
            b: top.1 as f64,
            c: hi.prefix(j),
        });
        out.push(HalfPlane {
            a: -(bottom.0 as f64),
            b: -(bottom.1 as f64),
            c: -lo.suffix(j),
        });
    }
    if x_larger {
        out.push(HalfPlane {
            a: -1.0,
            b: 1.0,
            c: 0.0,
        });
    } else {
        out.push(HalfPlane {
            a: 1.0,
            b: -1.0,
            c: 0.0,
        });
    }
    if rest == 0 {
        out.push(HalfPlane {
            a: 0.0,
            b: 1.0,
            c: 0.0,
        });
        out.push(HalfPlane {
            a: 0.0,
            b: -1.0,
            c: 0.0,
        });
    }
    out
}

/// Optimises `x` over a bounded polygon by enumerating constraint intersections.
fn optimise_x(constraints: &[HalfPlane], maximise: bool, tol: f64) -> Option<(f64, f64)> {
    let feasible = |x: f64, y: f64| {
        constraints
            .iter()
            .all(|h| h.a * x + h.b * y <= h.c + tol * (1.0 + h.c.abs()))
    };
    let mut best: Option<(f64, f64)> = None;
    for (i, p) in constraints.iter().enumerate() {
        for q in &constraints[i + 1..] {
            let det = p.a * q.b - q.a * p.b;
            if det.abs() < 1e-12 {
                continue;
            }
            let x = (p.c * q.b - q.c * p.b) / det;
            let y = (p.a * q.c - q.a * p.c) / det;
            if !feasible(x, y) {
                continue;
            }
            let better = match best {
                None => true,
                Some((bx, _)) => {
                    if maximise {
                        x > bx
                    } else {
                        x < bx
                    }
                }
            };
            if better {
                best = Some((x, y));
            }
        }
    }
    best
}

/// Maximisers of each top-`k` sum and minimisers of each bottom-`k` sum over
/// the bound set of `(nu_lo, nu_hi)`. By symmetry and convexity each optimum is
/// attained by a vector with two distinct values, which reduces every problem
/// to a two-variable linear program. Returns `None` if the set is empty.
fn extreme_witnesses(
    nu_lo: &[f64],
    nu_hi: &[f64],
    steps: usize,
    tol: f64,
) -> Option<Vec<Vec<f64>>> {
    let (lo, hi) = (SortedVector::new(nu_lo), SortedVector::new(nu_hi));
    let mut witnesses: Vec<Vec<f64>> = Vec::with_capacity(2 * steps);
    for k in 1..=steps {
        for maximise in [true, false] {
            let best = [true, false]
                .into_iter()
                .filter_map(|x_larger| {
                    optimise_x(&two_level_constraints(&lo, &hi, k, x_larger), maximise, tol)
                })
                .reduce(|a, b| if (b.0 > a.0) == maximise { b } else { a })?;
            let (x, y) = (best.0.max(0.0), best.1.max(0.0));
            let mut v: Vec<f64> = std::iter::repeat_n(x, k)
                .chain(std::iter::repeat_n(y, steps - k))
                .collect();
            v.sort_by(|a, b| b.total_cmp(a));
            if !witnesses
                .iter()
                .any(|w| w.iter().zip(&v).all(|(a, b)| (a - b).abs() <= tol))
            {
                witnesses.push(v);
            }
        }
    }
    Some(witnesses)
}
