//! Exact combinatorial engines: min-cost max-flow with arc lower bounds, and
//! minimum-cost rectangular assignment.
//!
//! `min_cost_flow` is successive shortest augmenting paths with node
//! potentials. Lower bounds go through the usual excess transformation: a
//! feasible circulation is found first from a super source, then the flow is
//! pushed to its maximum value along shortest paths.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{domain, infeasible, Result};

const INF_CAP: i64 = i64::MAX / 4;
/// Reduced costs above `-POTENTIAL_TOL` are treated as non-negative.
const POTENTIAL_TOL: f64 = 1e-12;

/// A directed arc with integral bounds and a real unit cost.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowArc {
    pub from: usize,
    pub to: usize,
    pub lower: i64,
    pub capacity: i64,
    pub cost: f64,
}

#[derive(Debug, Clone, Default)]
pub struct FlowNetwork {
    nodes: usize,
    source: usize,
    sink: usize,
    arcs: Vec<FlowArc>,
    value_limit: Option<i64>,
}

impl FlowNetwork {
    pub fn new(nodes: usize, source: usize, sink: usize) -> Self {
        Self { nodes, source, sink, arcs: Vec::new(), value_limit: None }
    }

    /// Add an arc and return its id.
    pub fn add_arc(&mut self, from: usize, to: usize, lower: i64, capacity: i64, cost: f64) -> usize {
        self.arcs.push(FlowArc { from, to, lower, capacity, cost });
        self.arcs.len() - 1
    }

    /// Cap the source-to-sink flow value; the result is then a min-cost flow
    /// of the largest value not exceeding the cap.
    pub fn set_value_limit(&mut self, limit: Option<i64>) {
        self.value_limit = limit;
    }

    pub fn arcs(&self) -> &[FlowArc] {
        &self.arcs
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn sink(&self) -> usize {
        self.sink
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowResult {
    /// Flow on each arc, in `add_arc` order.
    pub flows: Vec<i64>,
    pub value: i64,
    pub cost: f64,
}

#[derive(Debug, Clone, Copy)]
struct HeapItem {
    dist: f64,
    node: usize,
}

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapItem {}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance, then node id
        other.dist.total_cmp(&self.dist).then_with(|| other.node.cmp(&self.node))
    }
}

/// Residual graph with paired edges `e` / `e ^ 1`.
struct Residual {
    adj: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<i64>,
    cost: Vec<f64>,
}

impl Residual {
    fn new(n: usize) -> Self {
        Self { adj: vec![Vec::new(); n], to: Vec::new(), cap: Vec::new(), cost: Vec::new() }
    }

    fn add(&mut self, u: usize, v: usize, cap: i64, cost: f64) -> usize {
        let e = self.to.len();
        self.adj[u].push(e);
        self.to.push(v);
        self.cap.push(cap);
        self.cost.push(cost);
        self.adj[v].push(e + 1);
        self.to.push(u);
        self.cap.push(0);
        self.cost.push(-cost);
        e
    }

    fn n(&self) -> usize {
        self.adj.len()
    }

    /// Shortest distances from `s` over positive-capacity edges; `None` on a
    /// negative cycle.
    fn bellman_ford(&self, s: usize) -> Option<Vec<f64>> {
        let n = self.n();
        let mut dist = vec![f64::INFINITY; n];
        dist[s] = 0.0;
        for round in 0..n {
            let mut changed = false;
            for u in 0..n {
                if dist[u].is_infinite() {
                    continue;
                }
                for &e in &self.adj[u] {
                    if self.cap[e] > 0 {
                        let nd = dist[u] + self.cost[e];
                        if nd < dist[self.to[e]] - POTENTIAL_TOL {
                            dist[self.to[e]] = nd;
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                return Some(dist);
            }
            if round + 1 == n {
                return None;
            }
        }
        Some(dist)
    }

    /// Dijkstra on reduced costs; returns distances and the edge used to
    /// reach each node.
    fn dijkstra(&self, s: usize, pot: &[f64]) -> (Vec<f64>, Vec<usize>) {
        let n = self.n();
        let mut dist = vec![f64::INFINITY; n];
        let mut prev = vec![usize::MAX; n];
        let mut heap = BinaryHeap::new();
        dist[s] = 0.0;
        heap.push(HeapItem { dist: 0.0, node: s });
        while let Some(HeapItem { dist: d, node: u }) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for &e in &self.adj[u] {
                if self.cap[e] <= 0 {
                    continue;
                }
                let v = self.to[e];
                let rc = (self.cost[e] + pot[u] - pot[v]).max(0.0);
                let nd = d + rc;
                if nd < dist[v] {
                    dist[v] = nd;
                    prev[v] = e;
                    heap.push(HeapItem { dist: nd, node: v });
                }
            }
        }
        (dist, prev)
    }

    /// Successive shortest paths from `s` to `t`, pushing at most `limit`.
    fn augment(&mut self, s: usize, t: usize, limit: i64) -> Result<i64> {
        let Some(mut pot) = self.bellman_ford(s) else {
            return Err(domain!("flow network has a negative-cost cycle"));
        };
        for p in pot.iter_mut() {
            if p.is_infinite() {
                *p = 0.0;
            }
        }
        let mut pushed = 0;
        while pushed < limit {
            let (dist, prev) = self.dijkstra(s, &pot);
            if dist[t].is_infinite() {
                break;
            }
            for v in 0..self.n() {
                if dist[v].is_finite() {
                    pot[v] += dist[v];
                }
            }
            let mut bottleneck = limit - pushed;
            let mut v = t;
            while v != s {
                let e = prev[v];
                bottleneck = bottleneck.min(self.cap[e]);
                v = self.to[e ^ 1];
            }
            let mut v = t;
            while v != s {
                let e = prev[v];
                self.cap[e] -= bottleneck;
                self.cap[e ^ 1] += bottleneck;
                v = self.to[e ^ 1];
            }
            pushed += bottleneck;
        }
        debug_assert!(self.reduced_costs_nonnegative(s, &pot));
        Ok(pushed)
    }

    /// Optimality certificate: no residual edge among nodes reachable from `s`
    /// has a negative reduced cost.
    fn reduced_costs_nonnegative(&self, s: usize, pot: &[f64]) -> bool {
        let reach = self.reachable(s);
        (0..self.n()).filter(|&u| reach[u]).all(|u| {
            self.adj[u].iter().all(|&e| {
                self.cap[e] <= 0
                    || !reach[self.to[e]]
                    || self.cost[e] + pot[u] - pot[self.to[e]] >= -1e-6 * (1.0 + self.cost[e].abs())
            })
        })
    }

    fn reachable(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.n()];
        let mut stack = vec![s];
        seen[s] = true;
        while let Some(u) = stack.pop() {
            for &e in &self.adj[u] {
                if self.cap[e] > 0 && !seen[self.to[e]] {
                    seen[self.to[e]] = true;
                    stack.push(self.to[e]);
                }
            }
        }
        seen
    }
}

/// Maximum-value flow of minimum cost among all maximum flows, respecting arc
/// lower bounds. Fails with [`crate::Error::Infeasible`] when the lower bounds
/// cannot be met, naming the node set whose demand is stuck.
pub fn min_cost_flow(net: &FlowNetwork) -> Result<FlowResult> {
    let n = net.nodes;
    if net.source >= n || net.sink >= n || net.source == net.sink {
        return Err(domain!("invalid source/sink ({}, {}) for {n} nodes", net.source, net.sink));
    }
    for (i, a) in net.arcs.iter().enumerate() {
        if a.from >= n || a.to >= n {
            return Err(domain!("arc {i} references a node outside 0..{n}"));
        }
        if a.lower < 0 || a.lower > a.capacity {
            return Err(domain!("arc {i} has bounds [{}, {}]", a.lower, a.capacity));
        }
        if !a.cost.is_finite() {
            return Err(domain!("arc {i} has non-finite cost"));
        }
    }

    // layout: original nodes, [limited source], super source, super sink
    let mut next = n;
    let source = match net.value_limit {
        Some(_) => {
            next += 1;
            n
        }
        None => net.source,
    };
    let super_s = next;
    let super_t = next + 1;
    let mut g = Residual::new(next + 2);

    let mut excess = vec![0i64; next];
    let arc_edges: Vec<usize> = net
        .arcs
        .iter()
        .map(|a| {
            excess[a.to] += a.lower;
            excess[a.from] -= a.lower;
            g.add(a.from, a.to, a.capacity - a.lower, a.cost)
        })
        .collect();
    if let Some(limit) = net.value_limit {
        if limit < 0 {
            return Err(domain!("negative flow value limit {limit}"));
        }
        g.add(source, net.source, limit, 0.0);
    }
    let back_edge = g.add(net.sink, source, INF_CAP, 0.0);

    let mut required = 0;
    let mut helper_edges = Vec::new();
    for (v, &ex) in excess.iter().enumerate() {
        match ex.cmp(&0) {
            Ordering::Greater => {
                helper_edges.push(g.add(super_s, v, ex, 0.0));
                required += ex;
            }
            Ordering::Less => helper_edges.push(g.add(v, super_t, -ex, 0.0)),
            Ordering::Equal => {}
        }
    }

    if required > 0 {
        let got = g.augment(super_s, super_t, required)?;
        if got < required {
            let reach = g.reachable(super_s);
            let cut: Vec<usize> = (0..n).filter(|&v| reach[v]).collect();
            return Err(infeasible!(
                "lower bounds cannot be met: {} of {required} units of forced flow are stuck behind the cut {cut:?}",
                required - got
            ));
        }
    }
    for e in helper_edges {
        g.cap[e] = 0;
        g.cap[e ^ 1] = 0;
    }
    // flow on the sink->source edge is the value of the feasible flow found so far
    let initial_value = g.cap[back_edge ^ 1];
    g.cap[back_edge] = 0;
    g.cap[back_edge ^ 1] = 0;

    let remaining = net.value_limit.map_or(INF_CAP, |l| l - initial_value);
    let extra = g.augment(source, net.sink, remaining.max(0))?;

    let flows: Vec<i64> = net.arcs.iter().zip(&arc_edges).map(|(a, &e)| a.lower + g.cap[e ^ 1]).collect();
    let cost = net.arcs.iter().zip(&flows).map(|(a, &f)| f as f64 * a.cost).sum();
    Ok(FlowResult { flows, value: initial_value + extra, cost })
}

/// A set of disjoint `(row, column)` pairs and their total cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    pub pairs: Vec<(usize, usize)>,
    pub cost: f64,
}

/// Minimum-cost choice of `size` disjoint `(row, column)` pairs in a
/// rectangular cost matrix. Pairs are returned sorted by row.
pub fn min_cost_matching(costs: &[Vec<f64>], size: usize) -> Result<Matching> {
    let rows = costs.len();
    let cols = costs.first().map_or(0, Vec::len);
    if costs.iter().any(|r| r.len() != cols) {
        return Err(domain!("cost matrix rows have different lengths"));
    }
    if costs.iter().flatten().any(|c| !c.is_finite()) {
        return Err(domain!("cost matrix has non-finite entries"));
    }
    if size > rows.min(cols) {
        return Err(domain!("cannot pick {size} pairs from a {rows}x{cols} matrix"));
    }
    if size == 0 {
        return Ok(Matching { pairs: Vec::new(), cost: 0.0 });
    }

    let mut pairs = if size == rows {
        hungarian(costs)
    } else if size == cols {
        let t: Vec<Vec<f64>> = (0..cols).map(|j| (0..rows).map(|i| costs[i][j]).collect()).collect();
        hungarian(&t).into_iter().map(|(j, i)| (i, j)).collect()
    } else {
        // Square padding: dummy rows must take real columns and dummy columns
        // must take real rows, leaving exactly `size` real pairs.
        let n = rows + cols - size;
        let forbidden = 1.0 + 2.0 * costs.iter().flatten().map(|c| c.abs()).sum::<f64>();
        let padded: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| match (i < rows, j < cols) {
                        (true, true) => costs[i][j],
                        (false, false) => forbidden,
                        _ => 0.0,
                    })
                    .collect()
            })
            .collect();
        hungarian(&padded).into_iter().filter(|&(i, j)| i < rows && j < cols).collect()
    };
    pairs.sort_unstable();
    let cost = pairs.iter().map(|&(i, j)| costs[i][j]).sum();
    Ok(Matching { pairs, cost })
}

/// Shortest-augmenting-path Hungarian method for `rows <= cols`; every row is
/// assigned.
fn hungarian(a: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let n = a.len();
    let m = a[0].len();
    debug_assert!(n <= m);
    // 1-based, column 0 is the virtual start
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = a[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    (1..=m).filter(|&j| p[j] != 0).map(|j| (p[j] - 1, j - 1)).collect()
}
