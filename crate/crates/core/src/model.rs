//! Charging-job domain types.
//!
//! Only homogeneous populations are modelled: every vehicle is connected for
//! the whole horizon (arrival at step 1, departure at step `T`) and shares a
//! single power rating `m`. Energies are in units of `m * delta` with the step
//! duration fixed to one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance used for interval and equality checks on energies.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// A horizon of `T` unit-length steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeGrid {
    steps: usize,
}

impl TimeGrid {
    pub fn new(steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidRequirement(
                "time horizon must have at least one step".into(),
            ));
        }
        Ok(Self { steps })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Step duration. Always one.
    pub fn delta(&self) -> f64 {
        1.0
    }
}

/// One vehicle's charging job: energy interval, connection window and power rating.
///
/// Steps are 1-indexed to match the usual `{a, ..., d}` window notation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChargingRequirement {
    e_lo: f64,
    e_hi: f64,
    arrive: usize,
    depart: usize,
    power: f64,
}

impl ChargingRequirement {
    /// Builds a requirement connected for the whole horizon.
    pub fn homogeneous(e_lo: f64, e_hi: f64, grid: TimeGrid, power: f64) -> Result<Self> {
        Self::new(e_lo, e_hi, 1, grid.steps(), power, grid)
    }

    pub fn new(
        e_lo: f64,
        e_hi: f64,
        arrive: usize,
        depart: usize,
        power: f64,
        grid: TimeGrid,
    ) -> Result<Self> {
        if !(power.is_finite() && power > 0.0) {
            return Err(Error::InvalidRequirement(format!(
                "power rating must be positive, got {power}"
            )));
        }
        if arrive < 1 || arrive > depart || depart > grid.steps() {
            return Err(Error::InvalidRequirement(format!(
                "connection window [{arrive}, {depart}] does not fit in 1..={}",
                grid.steps()
            )));
        }
        let cap = power * (depart - arrive + 1) as f64;
        if !(e_lo.is_finite() && e_hi.is_finite()) || e_lo < 0.0 || e_lo > e_hi || e_hi > cap {
            return Err(Error::InvalidRequirement(format!(
                "energy interval [{e_lo}, {e_hi}] must satisfy 0 <= lo <= hi <= {cap}"
            )));
        }
        Ok(Self {
            e_lo,
            e_hi,
            arrive,
            depart,
            power,
        })
    }

    pub fn e_lo(&self) -> f64 {
        self.e_lo
    }

    pub fn e_hi(&self) -> f64 {
        self.e_hi
    }

    pub fn arrive(&self) -> usize {
        self.arrive
    }

    pub fn depart(&self) -> usize {
        self.depart
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    fn is_connected(&self, step: usize) -> bool {
        (self.arrive..=self.depart).contains(&step)
    }
}

/// A non-negative, finite energy-per-step profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChargingProfile(Vec<f64>);

impl ChargingProfile {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::NegativeEntry { index, value });
        }
        Ok(Self(values))
    }

    /// Clamps values that are negative by at most `tol` (flow round-off) to zero.
    pub(crate) fn from_rounded(mut values: Vec<f64>, tol: f64) -> Result<Self> {
        for v in values.iter_mut() {
            if *v < 0.0 && *v >= -tol {
                *v = 0.0;
            }
        }
        Self::new(values)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

impl AsRef<[f64]> for ChargingProfile {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// An ordered, homogeneous collection of charging requirements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Population {
    members: Vec<ChargingRequirement>,
    grid: TimeGrid,
    power: f64,
}

impl Population {
    pub fn new(members: Vec<ChargingRequirement>, grid: TimeGrid) -> Result<Self> {
        let first = members.first().ok_or(Error::EmptyPopulation)?;
        let power = first.power();
        for (i, xi) in members.iter().enumerate() {
            if xi.arrive() != 1 || xi.depart() != grid.steps() {
                return Err(Error::Heterogeneous(format!(
                    "vehicle {i} is connected over [{}, {}], expected [1, {}]",
                    xi.arrive(),
                    xi.depart(),
                    grid.steps()
                )));
            }
            if xi.power() != power {
                return Err(Error::Heterogeneous(format!(
                    "vehicle {i} has power {} but vehicle 0 has {power}",
                    xi.power()
                )));
            }
        }
        Ok(Self {
            members,
            grid,
            power,
        })
    }

    /// Builds a population from `(e_lo, e_hi)` pairs.
    pub fn from_intervals(grid: TimeGrid, power: f64, intervals: &[(f64, f64)]) -> Result<Self> {
        let members = intervals
            .iter()
            .map(|&(lo, hi)| ChargingRequirement::homogeneous(lo, hi, grid, power))
            .collect::<Result<Vec<_>>>()?;
        Self::new(members, grid)
    }

    pub fn members(&self) -> &[ChargingRequirement] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn steps(&self) -> usize {
        self.grid.steps()
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn intervals(&self) -> Vec<(f64, f64)> {
        self.members
            .iter()
            .map(|xi| (xi.e_lo(), xi.e_hi()))
            .collect()
    }

    pub fn total_lo(&self) -> f64 {
        self.members.iter().map(|xi| xi.e_lo()).sum()
    }

    pub fn total_hi(&self) -> f64 {
        self.members.iter().map(|xi| xi.e_hi()).sum()
    }

    /// Concatenates two populations sharing horizon and power rating.
    pub fn union(&self, other: &Population) -> Result<Population> {
        if self.grid != other.grid {
            return Err(Error::DimensionMismatch {
                expected: self.steps(),
                actual: other.steps(),
            });
        }
        let mut members = self.members.clone();
        members.extend_from_slice(&other.members);
        Population::new(members, self.grid)
    }
}

fn check_energy(e: f64, power: f64, steps: usize) -> Result<()> {
    let max = power * steps as f64;
    if !e.is_finite() || e < 0.0 || e > max {
        return Err(Error::EnergyOutOfRange { energy: e, max });
    }
    Ok(())
}

/// Splits `e` into `q` full-power steps and a remainder `r < m`.
fn full_steps(e: f64, power: f64, steps: usize) -> (usize, f64) {
    let mut q = (e / power).floor() as usize;
    let mut r = e - power * q as f64;
    if r < 0.0 && q > 0 {
        q -= 1;
        r += power;
    }
    if q >= steps {
        return (steps, 0.0);
    }
    (q, r.max(0.0))
}

/// Adds the fastest-charge profile of `e` into `acc` without allocating.
pub(crate) fn accumulate_fastest(e: f64, power: f64, acc: &mut [f64]) {
    let (q, r) = full_steps(e, power, acc.len());
    for slot in acc.iter_mut().take(q) {
        *slot += power;
    }
    if q < acc.len() {
        acc[q] += r;
    }
}

/// The profile that delivers `e` as early as possible: `q` steps at full power,
/// the remainder in the next step, zeros afterwards.
pub fn fastest_profile(e: f64, power: f64, steps: usize) -> Result<ChargingProfile> {
    if !(power.is_finite() && power > 0.0) {
        return Err(Error::InvalidRequirement(format!(
            "power rating must be positive, got {power}"
        )));
    }
    check_energy(e, power, steps)?;
    let mut values = vec![0.0; steps];
    accumulate_fastest(e, power, &mut values);
    Ok(ChargingProfile(values))
}

/// Sum of the first `k` entries of the fastest-charge profile of `e`.
pub fn fastest_prefix(e: f64, power: f64, k: usize) -> f64 {
    e.min(power * k as f64)
}

/// Whether `u` respects `xi`'s power limits, connection window and energy interval.
pub fn is_individually_feasible(
    u: &ChargingProfile,
    xi: &ChargingRequirement,
    steps: usize,
    tol: f64,
) -> Result<bool> {
    if u.len() != steps {
        return Err(Error::DimensionMismatch {
            expected: steps,
            actual: u.len(),
        });
    }
    let within_limits = u.as_slice().iter().enumerate().all(|(t, &x)| {
        if xi.is_connected(t + 1) {
            x >= -tol && x <= xi.power() + tol
        } else {
            x.abs() <= tol
        }
    });
    let total = u.total();
    Ok(within_limits && total >= xi.e_lo() - tol && total <= xi.e_hi() + tol)
}
