//! Majorization and permutahedron primitives.
//!
//! All comparisons sort their inputs non-increasingly first, so they accept
//! vectors in any coordinate order. Prefix sums are compared with an absolute
//! tolerance.

use crate::error::{Error, Result};

/// A vector sorted non-increasingly together with its prefix sums.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedVector {
    entries: Vec<f64>,
    /// `prefix[k]` is the sum of the first `k` entries; `prefix[0] == 0`.
    prefix: Vec<f64>,
}

impl SortedVector {
    /// Sorts an arbitrary vector.
    pub fn new(values: &[f64]) -> Self {
        let mut entries = values.to_vec();
        entries.sort_by(|a, b| b.total_cmp(a));
        Self::from_entries(entries)
    }

    /// Wraps a vector that is already sorted non-increasingly.
    pub fn from_sorted(values: Vec<f64>) -> Result<Self> {
        if let Some(index) = first_increase(&values) {
            return Err(Error::NotMonotone { index });
        }
        Ok(Self::from_entries(values))
    }

    fn from_entries(entries: Vec<f64>) -> Self {
        let mut prefix = Vec::with_capacity(entries.len() + 1);
        let mut acc = 0.0;
        prefix.push(acc);
        for &x in &entries {
            acc += x;
            prefix.push(acc);
        }
        Self { entries, prefix }
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sum of the `k` largest entries.
    pub fn prefix(&self, k: usize) -> f64 {
        self.prefix[k]
    }

    /// Sum of the `k` smallest entries.
    pub fn suffix(&self, k: usize) -> f64 {
        self.total() - self.prefix[self.len() - k]
    }

    pub fn total(&self) -> f64 {
        self.prefix[self.len()]
    }
}

/// Index `i` of the first pair with `x[i] < x[i + 1]`, if any.
pub fn first_increase(x: &[f64]) -> Option<usize> {
    x.windows(2).position(|w| w[0] < w[1])
}

fn same_len(y: &[f64], x: &[f64]) -> Result<()> {
    if y.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: y.len(),
            actual: x.len(),
        });
    }
    Ok(())
}

fn prefixes_bounded(y: &SortedVector, x: &SortedVector, tol: f64) -> bool {
    (1..=x.len()).all(|k| x.prefix(k) <= y.prefix(k) + tol)
}

/// `x ⪯ y`: every sorted prefix sum of `x` is at most that of `y`, totals equal.
pub fn strong_majorizes(y: &[f64], x: &[f64], tol: f64) -> Result<bool> {
    same_len(y, x)?;
    let (ys, xs) = (SortedVector::new(y), SortedVector::new(x));
    Ok(prefixes_bounded(&ys, &xs, tol) && (xs.total() - ys.total()).abs() <= tol)
}

/// Weak reading of `x ⪯ y` without the equal-total requirement.
pub fn prefix_dominates(y: &[f64], x: &[f64], tol: f64) -> Result<bool> {
    same_len(y, x)?;
    Ok(prefixes_bounded(
        &SortedVector::new(y),
        &SortedVector::new(x),
        tol,
    ))
}

/// Every sum of the `k` smallest entries of `x` is at least that of `y`.
pub fn suffix_dominates(x: &[f64], y: &[f64], tol: f64) -> Result<bool> {
    same_len(y, x)?;
    let (xs, ys) = (SortedVector::new(x), SortedVector::new(y));
    Ok((1..=x.len()).all(|k| xs.suffix(k) + tol >= ys.suffix(k)))
}

/// Membership of `x` in the permutahedron spanned by the permutations of `v`.
pub fn permutahedron_contains(v: &[f64], x: &[f64], tol: f64) -> Result<bool> {
    strong_majorizes(v, x, tol)
}

/// `Π(x) ⊆ Π(y)`.
pub fn permutahedron_subset(x: &[f64], y: &[f64], tol: f64) -> Result<bool> {
    strong_majorizes(y, x, tol)
}

/// Generator of `Π(x) + Π(y)` for monotone `x` and `y`.
pub fn minkowski_sum_permutahedra(x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    same_len(x, y)?;
    for v in [x, y] {
        if let Some(index) = first_increase(v) {
            return Err(Error::NotMonotone { index });
        }
    }
    Ok(x.iter().zip(y).map(|(a, b)| a + b).collect())
}
