//! Feasible flows with lower bounds on real-valued capacities.
//!
//! An s-t network with edge bounds `[lower, upper]` is turned into a
//! circulation by adding a `sink -> source` arc of unbounded capacity and
//! moving every lower bound into node excesses. A super source / super sink
//! pair then carries the excesses, and the original problem is feasible iff
//! a maximum flow (Dinic) saturates all super-source arcs.

use std::collections::VecDeque;

#[derive(Debug, Clone)]
struct Arc {
    to: usize,
    residual: f64,
}

/// Handle for an edge added with [`FlowNetwork::add_edge`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeId(usize);

#[derive(Debug, Clone)]
pub struct FlowNetwork {
    nodes: usize,
    arcs: Vec<Arc>,
    adjacency: Vec<Vec<usize>>,
    /// `(arc index, lower, upper)` per user edge.
    bounds: Vec<(usize, f64, f64)>,
    excess: Vec<f64>,
}

/// Outcome of [`FlowNetwork::feasible_flow`].
#[derive(Debug, Clone)]
pub enum Feasibility {
    /// Flow on every user edge, indexed by [`EdgeId`].
    Feasible(Vec<f64>),
    /// `reachable[v]` marks the super-source side of a minimum cut; `deficit`
    /// is the amount of lower-bound demand that could not be routed.
    Infeasible { reachable: Vec<bool>, deficit: f64 },
}

impl FlowNetwork {
    pub fn new(nodes: usize) -> Self {
        // two extra nodes for the super source and super sink
        Self {
            nodes,
            arcs: Vec::new(),
            adjacency: vec![Vec::new(); nodes + 2],
            bounds: Vec::new(),
            excess: vec![0.0; nodes],
        }
    }

    fn push_arc(&mut self, from: usize, to: usize, cap: f64) -> usize {
        let id = self.arcs.len();
        self.arcs.push(Arc { to, residual: cap });
        self.arcs.push(Arc {
            to: from,
            residual: 0.0,
        });
        self.adjacency[from].push(id);
        self.adjacency[to].push(id + 1);
        id
    }

    pub fn add_edge(&mut self, from: usize, to: usize, lower: f64, upper: f64) -> EdgeId {
        debug_assert!(
            lower <= upper,
            "edge bounds [{lower}, {upper}] are inverted"
        );
        let arc = self.push_arc(from, to, upper - lower);
        self.excess[to] += lower;
        self.excess[from] -= lower;
        self.bounds.push((arc, lower, upper));
        EdgeId(self.bounds.len() - 1)
    }

    /// Searches for a flow from `source` to `sink` that respects every bound.
    pub fn feasible_flow(mut self, source: usize, sink: usize, tol: f64) -> Feasibility {
        let (s_star, t_star) = (self.nodes, self.nodes + 1);
        self.push_arc(sink, source, f64::INFINITY);
        let mut required = 0.0;
        for v in 0..self.nodes {
            let e = self.excess[v];
            if e > 0.0 {
                self.push_arc(s_star, v, e);
                required += e;
            } else if e < 0.0 {
                self.push_arc(v, t_star, -e);
            }
        }
        let routed = self.max_flow(s_star, t_star);
        let deficit = required - routed;
        if deficit > tol {
            let reachable = self.residual_reachable(s_star);
            return Feasibility::Infeasible {
                reachable: reachable[..self.nodes].to_vec(),
                deficit,
            };
        }
        let flows = self
            .bounds
            .iter()
            .map(|&(arc, lower, upper)| lower + ((upper - lower) - self.arcs[arc].residual))
            .collect();
        Feasibility::Feasible(flows)
    }

    fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let n = self.adjacency.len();
        let mut total = 0.0;
        let mut level = vec![usize::MAX; n];
        let mut cursor = vec![0usize; n];
        loop {
            level.iter_mut().for_each(|l| *l = usize::MAX);
            level[s] = 0;
            let mut queue = VecDeque::from([s]);
            while let Some(v) = queue.pop_front() {
                for &a in &self.adjacency[v] {
                    let arc = &self.arcs[a];
                    if arc.residual > RESIDUAL_EPS && level[arc.to] == usize::MAX {
                        level[arc.to] = level[v] + 1;
                        queue.push_back(arc.to);
                    }
                }
            }
            if level[t] == usize::MAX {
                return total;
            }
            cursor.iter_mut().for_each(|c| *c = 0);
            loop {
                let pushed = self.augment(s, t, f64::INFINITY, &level, &mut cursor);
                if pushed <= RESIDUAL_EPS {
                    break;
                }
                total += pushed;
            }
        }
    }

    fn augment(
        &mut self,
        v: usize,
        t: usize,
        limit: f64,
        level: &[usize],
        cursor: &mut [usize],
    ) -> f64 {
        if v == t {
            return limit;
        }
        while cursor[v] < self.adjacency[v].len() {
            let a = self.adjacency[v][cursor[v]];
            let (to, residual) = (self.arcs[a].to, self.arcs[a].residual);
            if residual > RESIDUAL_EPS && level[to] == level[v] + 1 {
                let pushed = self.augment(to, t, limit.min(residual), level, cursor);
                if pushed > RESIDUAL_EPS {
                    self.arcs[a].residual -= pushed;
                    self.arcs[a ^ 1].residual += pushed;
                    return pushed;
                }
            }
            cursor[v] += 1;
        }
        0.0
    }

    fn residual_reachable(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adjacency.len()];
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(v) = stack.pop() {
            for &a in &self.adjacency[v] {
                let arc = &self.arcs[a];
                if arc.residual > RESIDUAL_EPS && !seen[arc.to] {
                    seen[arc.to] = true;
                    stack.push(arc.to);
                }
            }
        }
        seen
    }
}

/// Residual capacity below this is treated as saturated.
const RESIDUAL_EPS: f64 = 1e-13;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lower_bound_forces_flow() {
        // 0 -> 1 must carry at least 2, 1 -> 2 at most 3
        let mut net = FlowNetwork::new(3);
        let a = net.add_edge(0, 1, 2.0, 5.0);
        let b = net.add_edge(1, 2, 0.0, 3.0);
        match net.feasible_flow(0, 2, 1e-9) {
            Feasibility::Feasible(f) => {
                assert!(f[a.0] >= 2.0 - 1e-12 && f[a.0] <= 3.0 + 1e-12);
                assert!((f[a.0] - f[b.0]).abs() < 1e-12);
            }
            Feasibility::Infeasible { .. } => panic!("expected feasible"),
        }
    }

    #[test]
    fn conflicting_bounds_are_infeasible() {
        let mut net = FlowNetwork::new(3);
        net.add_edge(0, 1, 4.0, 5.0);
        net.add_edge(1, 2, 0.0, 3.0);
        match net.feasible_flow(0, 2, 1e-9) {
            Feasibility::Infeasible { deficit, .. } => assert!((deficit - 1.0).abs() < 1e-12),
            Feasibility::Feasible(_) => panic!("expected infeasible"),
        }
    }

    #[test]
    fn exact_edges_are_respected() {
        let mut net = FlowNetwork::new(4);
        net.add_edge(0, 1, 0.0, 1.0);
        net.add_edge(0, 2, 0.0, 1.0);
        let x = net.add_edge(1, 3, 0.75, 0.75);
        let y = net.add_edge(2, 3, 0.5, 0.5);
        match net.feasible_flow(0, 3, 1e-9) {
            Feasibility::Feasible(f) => {
                assert!((f[x.0] - 0.75).abs() < 1e-12);
                assert!((f[y.0] - 0.5).abs() < 1e-12);
            }
            Feasibility::Infeasible { .. } => panic!("expected feasible"),
        }
    }
}
