//! Worst-case transport plans: spend a budget pushing equal-weight atoms to the
//! boundary of the energy domain, nearest first.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Result of one push.
///
/// `critical` is the 1-indexed position (in ascending order of the pushed
/// coordinate) of the first atom that could not reach the boundary. It is `n + 1`
/// when the budget is zero and `0` when every atom reached the boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PushOutcome {
    pub values: Vec<f64>,
    pub critical: usize,
    pub kappa: f64,
    /// Transport cost actually spent.
    pub spent: f64,
}

fn check_inputs(values: &[f64], budget: f64, n: usize) -> Result<()> {
    if !(budget.is_finite() && budget >= 0.0) {
        return Err(Error::NegativeBudget(budget));
    }
    if values.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: values.len(),
        });
    }
    if let Some(i) = values.windows(2).position(|w| w[0] > w[1]) {
        return Err(Error::InvalidConfig(format!(
            "values must be sorted non-decreasing (entry {i} > entry {})",
            i + 1
        )));
    }
    Ok(())
}

/// Walks `order`, moving each atom fully while `full(i)` fits in the budget and
/// partially (via `partial(i, remaining)`) at the first one that does not.
fn walk(
    order: impl Iterator<Item = usize>,
    n: usize,
    budget: f64,
    full: impl Fn(usize) -> f64,
    mut apply: impl FnMut(usize, Option<f64>),
) -> (usize, f64, f64) {
    if budget == 0.0 {
        return (n + 1, 0.0, 0.0);
    }
    let mut remaining = budget;
    for i in order {
        let cost = full(i);
        if cost <= remaining {
            remaining -= cost;
            apply(i, None);
        } else {
            let moved = remaining * n as f64;
            apply(i, Some(moved));
            return (i + 1, moved, budget);
        }
    }
    (0, 0.0, budget - remaining)
}

/// Pushes lower energies up toward `ceiling`, starting from the largest.
pub fn push_lower(values: &[f64], budget: f64, ceiling: f64, n: usize) -> Result<PushOutcome> {
    check_inputs(values, budget, n)?;
    let mut out = values.to_vec();
    let nf = n as f64;
    let (critical, kappa, spent) = walk(
        (0..n).rev(),
        n,
        budget,
        |i| (ceiling - values[i]) / nf,
        |i, partial| out[i] = partial.map_or(ceiling, |k| values[i] + k),
    );
    Ok(PushOutcome {
        values: out,
        critical,
        kappa,
        spent,
    })
}

/// Pushes upper energies down toward zero, starting from the smallest.
pub fn push_upper(values: &[f64], budget: f64, n: usize) -> Result<PushOutcome> {
    check_inputs(values, budget, n)?;
    let mut out = values.to_vec();
    let nf = n as f64;
    let (critical, kappa, spent) = walk(
        0..n,
        n,
        budget,
        |i| values[i] / nf,
        |i, partial| out[i] = partial.map_or(0.0, |k| values[i] - k),
    );
    Ok(PushOutcome {
        values: out,
        critical,
        kappa,
        spent,
    })
}

/// Atom-level push used for worst-case populations.
///
/// Same order and case structure as the coordinate pushes, but each move also
/// pays for keeping the atom an interval: raising `e_lo` past `e_hi` drags `e_hi`
/// along (and symmetrically for the upper push). `repaired` counts dragged atoms.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct CoupledPush {
    pub atoms: Vec<(f64, f64)>,
    pub outcome: PushOutcome,
    pub repaired: usize,
}

/// Displacement bought by `paid` (in energy units) when the first `gap` units
/// are free of repair and every later unit costs double.
fn displacement(paid: f64, gap: f64) -> f64 {
    if paid <= gap {
        paid
    } else {
        0.5 * (paid + gap)
    }
}

/// `atoms` must be sorted by `e_lo` ascending.
pub(crate) fn push_lower_coupled(
    atoms: &[(f64, f64)],
    budget: f64,
    ceiling: f64,
) -> Result<CoupledPush> {
    let n = atoms.len();
    let lows: Vec<f64> = atoms.iter().map(|a| a.0).collect();
    check_inputs(&lows, budget, n)?;
    let nf = n as f64;
    let mut out = atoms.to_vec();
    let (critical, kappa, spent) = walk(
        (0..n).rev(),
        n,
        budget,
        |i| ((ceiling - atoms[i].0) + (ceiling - atoms[i].1)) / nf,
        |i, partial| {
            let (lo, hi) = atoms[i];
            let target = partial
                .map_or(ceiling, |paid| lo + displacement(paid, hi - lo))
                .min(ceiling);
            out[i] = (target, hi.max(target));
        },
    );
    let kappa = if critical >= 1 && critical <= n {
        out[critical - 1].0 - atoms[critical - 1].0
    } else {
        kappa
    };
    let repaired = out
        .iter()
        .zip(atoms)
        .filter(|(new, old)| new.1 > old.1)
        .count();
    let values = out.iter().map(|a| a.0).collect();
    Ok(CoupledPush {
        atoms: out,
        outcome: PushOutcome {
            values,
            critical,
            kappa,
            spent,
        },
        repaired,
    })
}

/// `atoms` must be sorted by `e_hi` ascending.
pub(crate) fn push_upper_coupled(atoms: &[(f64, f64)], budget: f64) -> Result<CoupledPush> {
    let n = atoms.len();
    let highs: Vec<f64> = atoms.iter().map(|a| a.1).collect();
    check_inputs(&highs, budget, n)?;
    let nf = n as f64;
    let mut out = atoms.to_vec();
    let (critical, kappa, spent) = walk(
        0..n,
        n,
        budget,
        |i| (atoms[i].0 + atoms[i].1) / nf,
        |i, partial| {
            let (lo, hi) = atoms[i];
            let target = partial
                .map_or(0.0, |paid| hi - displacement(paid, hi - lo))
                .max(0.0);
            out[i] = (lo.min(target), target);
        },
    );
    let kappa = if critical >= 1 && critical <= n {
        atoms[critical - 1].1 - out[critical - 1].1
    } else {
        kappa
    };
    let repaired = out
        .iter()
        .zip(atoms)
        .filter(|(new, old)| new.0 < old.0)
        .count();
    let values = out.iter().map(|a| a.1).collect();
    Ok(CoupledPush {
        atoms: out,
        outcome: PushOutcome {
            values,
            critical,
            kappa,
            spent,
        },
        repaired,
    })
}
