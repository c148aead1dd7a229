use thiserror::Error;

/// Errors produced by the aggregation, ambiguity and harness layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("energy {energy} is outside the feasible range [0, {max}]")]
    EnergyOutOfRange { energy: f64, max: f64 },
    #[error("dimension mismatch: expected length {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("entry {index} is negative or not finite ({value})")]
    NegativeEntry { index: usize, value: f64 },
    #[error("vector is not sorted non-increasing (entry {index} < entry {next})", next = index + 1)]
    NotMonotone { index: usize },
    #[error("invalid charging requirement: {0}")]
    InvalidRequirement(String),
    #[error("population is not homogeneous: {0}")]
    Heterogeneous(String),
    #[error("population must contain at least one vehicle")]
    EmptyPopulation,
    #[error("transport budget must be non-negative, got {0}")]
    NegativeBudget(f64),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("radius {epsilon} is smaller than the projection cost {projection_cost}")]
    BudgetInfeasible { epsilon: f64, projection_cost: f64 },
    #[error("worst-case distribution lies at distance {distance} > radius {epsilon}")]
    BudgetAccounting { distance: f64, epsilon: f64 },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
