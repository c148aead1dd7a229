//! Discrete optimal transport between two weighted point sets.
//!
//! Solved as a min-cost flow on the complete bipartite graph with successive
//! shortest paths (Dijkstra on reduced costs). Masses are real-valued; each
//! augmentation exhausts a supply, a demand or a reverse arc, so the number of
//! rounds stays close to `n + k` in practice.

/// An optimal coupling and its cost.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    pub cost: f64,
    /// `(source index, target index, mass)` for every non-zero entry.
    pub flows: Vec<(usize, usize, f64)>,
}

const MASS_EPS: f64 = 1e-15;

/// Minimum-cost coupling of `supply` and `demand` under `cost(i, j)`.
///
/// Both mass vectors must be non-negative with (numerically) equal totals.
pub fn solve<F>(supply: &[f64], demand: &[f64], cost: F) -> TransportPlan
where
    F: Fn(usize, usize) -> f64,
{
    let (n, k) = (supply.len(), demand.len());
    let c: Vec<f64> = (0..n)
        .flat_map(|i| (0..k).map(move |j| (i, j)))
        .map(|(i, j)| cost(i, j))
        .collect();
    let mut flow = vec![0.0; n * k];
    let mut left = supply.to_vec();
    let mut need = demand.to_vec();
    // potentials: [0, n) sources, [n, n + k) targets
    let mut pot = vec![0.0; n + k];
    let mut dist = vec![f64::INFINITY; n + k];
    let mut parent = vec![usize::MAX; n + k];
    let mut done = vec![false; n + k];

    let max_rounds = 16 * (n + k) * (n + k) + 64;
    for _ in 0..max_rounds {
        let Some(src) = (0..n).find(|&i| left[i] > MASS_EPS) else {
            break;
        };
        if !need.iter().any(|&d| d > MASS_EPS) {
            break;
        }
        dist.iter_mut().for_each(|d| *d = f64::INFINITY);
        parent.iter_mut().for_each(|p| *p = usize::MAX);
        done.iter_mut().for_each(|d| *d = false);
        dist[src] = 0.0;
        loop {
            let mut v = usize::MAX;
            let mut best = f64::INFINITY;
            for (u, &d) in dist.iter().enumerate() {
                if !done[u] && d < best {
                    best = d;
                    v = u;
                }
            }
            if v == usize::MAX {
                break;
            }
            done[v] = true;
            if v < n {
                for j in 0..k {
                    let w = n + j;
                    let reduced = (c[v * k + j] + pot[v] - pot[w]).max(0.0);
                    if best + reduced < dist[w] {
                        dist[w] = best + reduced;
                        parent[w] = v;
                    }
                }
            } else {
                let j = v - n;
                for i in 0..n {
                    if flow[i * k + j] > MASS_EPS {
                        let reduced = (-c[i * k + j] + pot[v] - pot[i]).max(0.0);
                        if best + reduced < dist[i] {
                            dist[i] = best + reduced;
                            parent[i] = v;
                        }
                    }
                }
            }
        }
        let Some(sink) = (0..k)
            .filter(|&j| need[j] > MASS_EPS && dist[n + j].is_finite())
            .min_by(|&a, &b| dist[n + a].total_cmp(&dist[n + b]))
            .map(|j| n + j)
        else {
            break;
        };
        let reach = dist[sink];
        for v in 0..n + k {
            pot[v] += dist[v].min(reach);
        }

        let mut amount = left[src].min(need[sink - n]);
        let mut v = sink;
        while v != src {
            let u = parent[v];
            if u >= n {
                // backward arc: target u cancels flow from source v
                amount = amount.min(flow[v * k + (u - n)]);
            }
            v = u;
        }
        let mut v = sink;
        while v != src {
            let u = parent[v];
            if u < n {
                flow[u * k + (v - n)] += amount;
            } else {
                flow[v * k + (u - n)] -= amount;
            }
            v = u;
        }
        left[src] -= amount;
        need[sink - n] -= amount;
    }

    let mut total = 0.0;
    let mut flows = Vec::new();
    for i in 0..n {
        for j in 0..k {
            let f = flow[i * k + j];
            if f > MASS_EPS {
                total += f * c[i * k + j];
                flows.push((i, j, f));
            }
        }
    }
    TransportPlan { cost: total, flows }
}

/// Wasserstein-1 distance between two weighted point sets on the real line.
pub fn w1_line(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    // integrate |F_a - F_b| over the merged support
    let mut events: Vec<(f64, f64)> = a.iter().map(|&(x, w)| (x, w)).collect();
    events.extend(b.iter().map(|&(x, w)| (x, -w)));
    events.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut diff = 0.0;
    let mut total = 0.0;
    for pair in events.windows(2) {
        diff += pair[0].1;
        total += diff.abs() * (pair[1].0 - pair[0].0);
    }
    total
}
