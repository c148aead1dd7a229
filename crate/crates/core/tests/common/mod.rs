//! Independent oracles shared by the integration tests. Nothing here calls
//! the library's own membership, majorization or transport routines.
#![allow(dead_code)]

use minilp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem};
use rand::Rng;

/// All permutations of `x`, duplicates included.
pub fn permutations(x: &[f64]) -> Vec<Vec<f64>> {
    if x.len() <= 1 {
        return vec![x.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..x.len() {
        let mut rest = x.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

fn dedup(mut pts: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    pts
}

/// Fastest-charge profile computed slot by slot.
pub fn fastest(e: f64, m: f64, steps: usize) -> Vec<f64> {
    let mut left = e;
    (0..steps)
        .map(|_| {
            let x = left.min(m).max(0.0);
            left -= x;
            x
        })
        .collect()
}

pub fn nu(intervals: &[(f64, f64)], m: f64, steps: usize) -> (Vec<f64>, Vec<f64>) {
    let mut lo = vec![0.0; steps];
    let mut hi = vec![0.0; steps];
    for &(a, b) in intervals {
        for (acc, v) in lo.iter_mut().zip(fastest(a, m, steps)) {
            *acc += v;
        }
        for (acc, v) in hi.iter_mut().zip(fastest(b, m, steps)) {
            *acc += v;
        }
    }
    (lo, hi)
}

/// Every permutation of every spliced vector `(nu_hi[..t], nu_lo[t..])`.
pub fn spliced_permutations(nu_lo: &[f64], nu_hi: &[f64]) -> Vec<Vec<f64>> {
    let steps = nu_lo.len();
    let mut pts = Vec::new();
    for t in 0..=steps {
        let mu: Vec<f64> = (0..steps)
            .map(|k| if k < t { nu_hi[k] } else { nu_lo[k] })
            .collect();
        pts.extend(permutations(&mu));
    }
    dedup(pts)
}

/// Smallest `d` such that `u` is within `d` (per coordinate) of the convex hull of `vertices`.
pub fn hull_distance(vertices: &[Vec<f64>], u: &[f64]) -> f64 {
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let lambdas: Vec<_> = vertices
        .iter()
        .map(|_| lp.add_var(0.0, (0.0, f64::INFINITY)))
        .collect();
    let d = lp.add_var(1.0, (0.0, f64::INFINITY));
    let mut sum = LinearExpr::empty();
    for &l in &lambdas {
        sum.add(l, 1.0);
    }
    lp.add_constraint(sum, ComparisonOp::Eq, 1.0);
    for (t, &ut) in u.iter().enumerate() {
        let mut up = LinearExpr::empty();
        let mut down = LinearExpr::empty();
        for (v, &l) in vertices.iter().zip(&lambdas) {
            up.add(l, v[t]);
            down.add(l, v[t]);
        }
        up.add(d, -1.0);
        down.add(d, 1.0);
        lp.add_constraint(up, ComparisonOp::Le, ut);
        lp.add_constraint(down, ComparisonOp::Ge, ut);
    }
    lp.solve().expect("hull LP is always feasible").objective()
}

pub fn hull_contains(vertices: &[Vec<f64>], u: &[f64], tol: f64) -> bool {
    hull_distance(vertices, u) <= tol
}

/// Membership in the Minkowski sum of individual sets, as one LP over
/// per-vehicle profiles. Returns the smallest per-step mismatch.
pub fn minkowski_distance(intervals: &[(f64, f64)], m: f64, u: &[f64]) -> f64 {
    let steps = u.len();
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<Vec<_>> = intervals
        .iter()
        .map(|_| (0..steps).map(|_| lp.add_var(0.0, (0.0, m))).collect())
        .collect();
    let d = lp.add_var(1.0, (0.0, f64::INFINITY));
    for (row, &(lo, hi)) in vars.iter().zip(intervals) {
        let mut e = LinearExpr::empty();
        for &x in row {
            e.add(x, 1.0);
        }
        lp.add_constraint(e.clone(), ComparisonOp::Ge, lo);
        lp.add_constraint(e, ComparisonOp::Le, hi);
    }
    for t in 0..steps {
        let mut up = LinearExpr::empty();
        let mut down = LinearExpr::empty();
        for row in &vars {
            up.add(row[t], 1.0);
            down.add(row[t], 1.0);
        }
        up.add(d, -1.0);
        down.add(d, 1.0);
        lp.add_constraint(up, ComparisonOp::Le, u[t]);
        lp.add_constraint(down, ComparisonOp::Ge, u[t]);
    }
    lp.solve()
        .expect("Minkowski LP is always feasible")
        .objective()
}

/// W1 under the L1 ground metric as a transport LP.
pub fn transport_lp(p: &[((f64, f64), f64)], q: &[((f64, f64), f64)]) -> f64 {
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let mut rows = vec![LinearExpr::empty(); p.len()];
    let mut cols = vec![LinearExpr::empty(); q.len()];
    for (i, &(a, _)) in p.iter().enumerate() {
        for (j, &(b, _)) in q.iter().enumerate() {
            let x = lp.add_var((a.0 - b.0).abs() + (a.1 - b.1).abs(), (0.0, f64::INFINITY));
            rows[i].add(x, 1.0);
            cols[j].add(x, 1.0);
        }
    }
    for (e, &(_, w)) in rows.into_iter().zip(p) {
        lp.add_constraint(e, ComparisonOp::Eq, w);
    }
    for (e, &(_, w)) in cols.into_iter().zip(q) {
        lp.add_constraint(e, ComparisonOp::Eq, w);
    }
    lp.solve()
        .expect("balanced transport LP is feasible")
        .objective()
}

/// Random `(e_lo, e_hi)` pairs on `[0, ceiling]`, snapped to a quarter grid
/// half of the time so ties and boundary values show up.
pub fn random_intervals<R: Rng>(rng: &mut R, count: usize, ceiling: f64) -> Vec<(f64, f64)> {
    (0..count)
        .map(|_| {
            let mut a = rng.random_range(0.0..=ceiling);
            let mut b = rng.random_range(0.0..=ceiling);
            if rng.random_bool(0.5) {
                a = (a * 4.0).round() / 4.0;
                b = (b * 4.0).round() / 4.0;
            }
            (a.min(b), a.max(b))
        })
        .collect()
}

/// Random probability vector with strictly positive entries.
pub fn random_weights<R: Rng>(rng: &mut R, count: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..count).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut w: Vec<f64> = raw.iter().map(|x| x / total).collect();
    let drift: f64 = 1.0 - w.iter().sum::<f64>();
    w[0] += drift;
    w
}

/// Random point of the hull of `vertices` (Dirichlet-like weights on a random subset).
pub fn random_hull_point<R: Rng>(rng: &mut R, vertices: &[Vec<f64>]) -> Vec<f64> {
    let k = rng.random_range(1..=vertices.len().min(6));
    let picks: Vec<usize> = (0..k)
        .map(|_| rng.random_range(0..vertices.len()))
        .collect();
    let raw: Vec<f64> = picks
        .iter()
        .map(|_| -rng.random_range(1e-9f64..1.0).ln())
        .collect();
    let total: f64 = raw.iter().sum();
    let mut u = vec![0.0; vertices[0].len()];
    for (&i, &w) in picks.iter().zip(&raw) {
        for (acc, v) in u.iter_mut().zip(&vertices[i]) {
            *acc += w / total * v;
        }
    }
    u
}

/// Spearman rank correlation and its exact one-sided permutation p-value
/// (probability of a correlation at most as large under random ranking).
pub fn spearman_lower_tail(x: &[f64], y: &[f64]) -> (f64, f64) {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for k in i..=j {
                r[idx[k]] = avg;
            }
            i = j + 1;
        }
        r
    }
    fn pearson(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        if va == 0.0 || vb == 0.0 {
            0.0
        } else {
            cov / (va * vb).sqrt()
        }
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let rho = pearson(&rx, &ry);
    let perms = permutations(&ry);
    let hits = perms
        .iter()
        .filter(|p| pearson(&rx, p) <= rho + 1e-12)
        .count();
    (rho, hits as f64 / perms.len() as f64)
}
