//! The measure-concentration relation `beta = c1 * exp(-c2 * N * eps^2)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Positive constants of the concentration bound. Never hard-coded: supplied by
/// configuration or fitted from Monte Carlo output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationConstants {
    c1: f64,
    c2: f64,
}

impl ConcentrationConstants {
    pub fn new(c1: f64, c2: f64) -> Result<Self> {
        if !(c1 > 0.0 && c1.is_finite() && c2 > 0.0 && c2.is_finite()) {
            return Err(Error::Domain(format!(
                "constants must be positive and finite, got c1={c1}, c2={c2}"
            )));
        }
        Ok(Self { c1, c2 })
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }
}

/// The bound is only stated for radii in `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeWarning {
    pub epsilon: f64,
}

impl std::fmt::Display for RangeWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "radius {} lies outside (0, 1] where the concentration bound is stated",
            self.epsilon
        )
    }
}

/// A value of the relation plus an optional out-of-range warning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluated {
    pub value: f64,
    pub warning: Option<RangeWarning>,
}

fn check_n(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("population size must be positive".into()));
    }
    Ok(n as f64)
}

fn warn_if_wide(epsilon: f64) -> Option<RangeWarning> {
    (epsilon > 1.0).then(|| {
        let w = RangeWarning { epsilon };
        log::warn!("{w}");
        w
    })
}

pub fn beta_from_epsilon(epsilon: f64, n: usize, c: ConcentrationConstants) -> Result<Evaluated> {
    let n = check_n(n)?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Domain(format!(
            "radius must be positive, got {epsilon}"
        )));
    }
    Ok(Evaluated {
        value: c.c1 * (-c.c2 * n * epsilon * epsilon).exp(),
        warning: warn_if_wide(epsilon),
    })
}

pub fn epsilon_from_beta(beta: f64, n: usize, c: ConcentrationConstants) -> Result<Evaluated> {
    let n = check_n(n)?;
    if !(beta > 0.0 && beta < c.c1) {
        return Err(Error::Domain(format!(
            "beta must lie in (0, c1 = {}), got {beta}",
            c.c1
        )));
    }
    let epsilon = ((c.c1 / beta).ln() / (c.c2 * n)).sqrt();
    Ok(Evaluated {
        value: epsilon,
        warning: warn_if_wide(epsilon),
    })
}
