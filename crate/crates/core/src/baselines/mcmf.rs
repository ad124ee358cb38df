//! Successive-shortest-path min-cost flow with Johnson potentials.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
struct Edge {
    to: usize,
    cap: i64,
    cost: f64,
}

#[derive(Debug, Clone, Default)]
pub struct MinCostFlow {
    edges: Vec<Edge>,
    adj: Vec<Vec<usize>>,
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // min-heap on distance
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl MinCostFlow {
    pub fn new(nodes: usize) -> Self {
        Self {
            edges: Vec::new(),
            adj: vec![Vec::new(); nodes],
        }
    }

    pub fn add_edge(&mut self, from: usize, to: usize, cap: i64, cost: f64) {
        self.adj[from].push(self.edges.len());
        self.edges.push(Edge { to, cap, cost });
        self.adj[to].push(self.edges.len());
        self.edges.push(Edge {
            to: from,
            cap: 0,
            cost: -cost,
        });
    }

    /// Bellman-Ford distances from `s` over edges with residual capacity.
    fn bellman_ford(&self, s: usize) -> Result<Vec<f64>> {
        let n = self.adj.len();
        let mut dist = vec![f64::INFINITY; n];
        dist[s] = 0.0;
        for round in 0..n {
            let mut changed = false;
            for u in 0..n {
                if dist[u].is_infinite() {
                    continue;
                }
                for &e in &self.adj[u] {
                    let ed = &self.edges[e];
                    if ed.cap > 0 && dist[u] + ed.cost < dist[ed.to] - 1e-12 {
                        dist[ed.to] = dist[u] + ed.cost;
                        changed = true;
                    }
                }
            }
            if !changed {
                return Ok(dist);
            }
            if round + 1 == n {
                return Err(Error::Shape("negative cycle in flow network".into()));
            }
        }
        Ok(dist)
    }

    /// Augments along cheapest paths while `accept(path_cost)` holds.
    /// Returns `(flow, total cost)`.
    pub fn min_cost_flow<F: Fn(f64) -> bool>(&mut self, s: usize, t: usize, accept: F) -> Result<(i64, f64)> {
        let n = self.adj.len();
        let mut potential = self.bellman_ford(s)?;
        for p in potential.iter_mut() {
            if p.is_infinite() {
                *p = 0.0;
            }
        }
        let (mut flow, mut cost) = (0i64, 0.0);
        loop {
            let mut dist = vec![f64::INFINITY; n];
            let mut via = vec![usize::MAX; n];
            dist[s] = 0.0;
            let mut heap = BinaryHeap::from([Entry(0.0, s)]);
            while let Some(Entry(d, u)) = heap.pop() {
                if d > dist[u] {
                    continue;
                }
                for &e in &self.adj[u] {
                    let ed = &self.edges[e];
                    if ed.cap <= 0 {
                        continue;
                    }
                    // reduced costs are nonnegative up to rounding
                    let rc = (ed.cost + potential[u] - potential[ed.to]).max(0.0);
                    if d + rc < dist[ed.to] {
                        dist[ed.to] = d + rc;
                        via[ed.to] = e;
                        heap.push(Entry(dist[ed.to], ed.to));
                    }
                }
            }
            if dist[t].is_infinite() {
                break;
            }
            for v in 0..n {
                if dist[v].is_finite() {
                    potential[v] += dist[v];
                }
            }
            let mut push = i64::MAX;
            let mut path_cost = 0.0;
            let mut v = t;
            while v != s {
                let e = via[v];
                push = push.min(self.edges[e].cap);
                path_cost += self.edges[e].cost;
                v = self.edges[e ^ 1].to;
            }
            if !accept(path_cost) {
                break;
            }
            let mut v = t;
            while v != s {
                let e = via[v];
                self.edges[e].cap -= push;
                self.edges[e ^ 1].cap += push;
                v = self.edges[e ^ 1].to;
            }
            flow += push;
            cost += push as f64 * path_cost;
        }
        Ok((flow, cost))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn picks_cheaper_route() {
        let mut g = MinCostFlow::new(4);
        g.add_edge(0, 1, 2, 1.0);
        g.add_edge(0, 2, 2, 3.0);
        g.add_edge(1, 3, 1, 1.0);
        g.add_edge(2, 3, 2, 1.0);
        g.add_edge(1, 2, 1, 0.5);
        let (f, c) = g.min_cost_flow(0, 3, |_| true).unwrap();
        assert_eq!(f, 3);
        // 0-1-3 (2), 0-1-2-3 (2.5), 0-2-3 (4)
        assert!((c - 8.5).abs() < 1e-12);
    }

    #[test]
    fn assignment_needs_rerouting() {
        // worker 0 prefers job 0, but the optimum sends it to job 1
        let mut g = MinCostFlow::new(6);
        g.add_edge(0, 1, 1, 0.0);
        g.add_edge(0, 2, 1, 0.0);
        g.add_edge(1, 3, 1, -10.0);
        g.add_edge(1, 4, 1, -9.0);
        g.add_edge(2, 3, 1, -8.0);
        g.add_edge(3, 5, 1, 0.0);
        g.add_edge(4, 5, 1, 0.0);
        let (f, c) = g.min_cost_flow(0, 5, |pc| pc < 0.0).unwrap();
        assert_eq!(f, 2);
        assert!((c + 17.0).abs() < 1e-12);
    }
}
