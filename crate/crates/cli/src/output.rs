//! JSON documents emitted by the subcommands. Every type here deserializes
//! back to an equal value.

use evflex::aggregate::{spliced_vertices, AggregateFlexSet, DecomposeOutcome};
use evflex::ambiguity::RobustSetResult;
use evflex::harness::{ConstantsFit, LinearFit};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateSummary {
    pub steps: usize,
    pub power: f64,
    pub nu_lo: Vec<f64>,
    pub nu_hi: Vec<f64>,
    /// Spliced vectors `(nu_hi[..t], nu_lo[t..])` for `t = 0..=T`.
    pub vertices: Vec<Vec<f64>>,
}

impl AggregateSummary {
    pub fn new(set: &AggregateFlexSet) -> Self {
        Self {
            steps: set.steps(),
            power: set.power(),
            nu_lo: set.nu_lo().to_vec(),
            nu_hi: set.nu_hi().to_vec(),
            vertices: spliced_vertices(set.nu_lo(), set.nu_hi()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    /// One profile per vehicle, summing to the tested aggregate.
    Decomposition { per_vehicle: Vec<Vec<f64>> },
    /// 1-indexed steps whose demand cannot be served, and the unmet amount.
    Cut { steps: Vec<usize>, deficit: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberSummary {
    pub profile: Vec<f64>,
    pub member: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Certificate>,
}

impl MemberSummary {
    pub fn new(profile: Vec<f64>, outcome: Option<DecomposeOutcome>, member: bool) -> Self {
        let certificate = outcome.map(|o| match o {
            DecomposeOutcome::Feasible(d) => Certificate::Decomposition {
                per_vehicle: d.per_ev.into_iter().map(|p| p.into_vec()).collect(),
            },
            DecomposeOutcome::Infeasible(cut) => Certificate::Cut {
                steps: cut.steps,
                deficit: cut.deficit,
            },
        });
        Self {
            profile,
            member,
            certificate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustSummary {
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
    pub repaired_lo: usize,
    pub repaired_hi: usize,
    pub distance_lo: f64,
    pub distance_hi: f64,
    pub lower_population: Vec<(f64, f64)>,
    pub upper_population: Vec<(f64, f64)>,
    pub nu_lo: Vec<f64>,
    pub nu_hi: Vec<f64>,
    pub representatives: Vec<Vec<f64>>,
    pub regular: bool,
    pub empty: bool,
}

impl From<&RobustSetResult> for RobustSummary {
    fn from(r: &RobustSetResult) -> Self {
        Self {
            epsilon: r.epsilon,
            beta: r.beta,
            n: r.n,
            scale: r.scale,
            projection: r.projection.clone(),
            projection_cost: r.projection_cost,
            budget_lo: r.budget_lo,
            budget_hi: r.budget_hi,
            i_c_lo: r.i_c_lo,
            kappa_lo: r.kappa_lo,
            i_c_hi: r.i_c_hi,
            kappa_hi: r.kappa_hi,
            repaired_lo: r.repaired_lo,
            repaired_hi: r.repaired_hi,
            distance_lo: r.distance_lo,
            distance_hi: r.distance_hi,
            lower_population: r.flex.gen_lo().intervals(),
            upper_population: r.flex.gen_hi().intervals(),
            nu_lo: r.flex.nu_lo().to_vec(),
            nu_hi: r.flex.nu_hi().to_vec(),
            representatives: r.flex.representatives().to_vec(),
            regular: r.flex.is_regular(),
            empty: r.empty,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub c1: f64,
    pub c2: f64,
    pub r_squared: f64,
    pub fit: LinearFit,
    pub used: usize,
    pub excluded: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub envelope_c1: Option<f64>,
}

impl FitSummary {
    pub fn new(fit: &ConstantsFit, envelope_c1: Option<f64>) -> Self {
        Self {
            c1: fit.constants.c1(),
            c2: fit.constants.c2(),
            r_squared: fit.fit.r_squared,
            fit: fit.fit,
            used: fit.used,
            excluded: fit.excluded,
            envelope_c1,
        }
    }
}
