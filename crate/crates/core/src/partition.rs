//! Partition algorithms: the cheapest feasible clustering for fixed centers.
//!
//! Lower/upper cluster-size constraints become a min-cost flow on the
//! complete bipartite graph between centers and clients. When the bounds are
//! not all equal, every distinct assignment of bound values to centers is
//! tried and the cheapest flow kept.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, infeasible, Result};
use crate::flow::{min_cost_flow, FlowNetwork};
use crate::metric::{nearest_of, power, CenterSet, Clustering, MetricInstance};

/// Which family of feasible clusterings is allowed.
///
/// Chromatic, l-diversity, fault-tolerant, semi-supervised and uncertain
/// constraints are not implemented. Fault tolerance reduces to a chromatic
/// instance; the uncertain (assigned) case forces every point of one
/// uncertain group into the same cluster.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstraintSpec {
    #[default]
    Unconstrained,
    /// Cluster `i` holds at least `r[i]` clients.
    RGather { r: Vec<usize> },
    /// Cluster `i` holds at most `r[i]` clients.
    RCapacity { r: Vec<usize> },
    /// Exactly `m` clients are left out.
    Outlier { m: usize },
}

impl ConstraintSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ConstraintSpec::Unconstrained => "unconstrained",
            ConstraintSpec::RGather { .. } => "r_gather",
            ConstraintSpec::RCapacity { .. } => "r_capacity",
            ConstraintSpec::Outlier { .. } => "outlier",
        }
    }

    /// All bounds equal (or no bounds at all).
    pub fn is_uniform(&self) -> bool {
        match self {
            ConstraintSpec::RGather { r } | ConstraintSpec::RCapacity { r } => r.windows(2).all(|w| w[0] == w[1]),
            _ => true,
        }
    }

    /// Invariant under relabelling clusters.
    pub fn is_symmetric(&self) -> bool {
        self.is_uniform()
    }

    pub fn outliers(&self) -> usize {
        match self {
            ConstraintSpec::Outlier { m } => *m,
            _ => 0,
        }
    }

    /// Check the spec against `n` clients and `k` clusters.
    pub fn validate(&self, n: usize, k: usize) -> Result<()> {
        match self {
            ConstraintSpec::Unconstrained => Ok(()),
            ConstraintSpec::RGather { r } => {
                check_len(r, k)?;
                let sum: usize = r.iter().sum();
                if sum > n {
                    return Err(infeasible!("r-gather bounds sum to {sum} but there are only {n} clients"));
                }
                Ok(())
            }
            ConstraintSpec::RCapacity { r } => {
                check_len(r, k)?;
                let sum: usize = r.iter().sum();
                if sum < n {
                    return Err(infeasible!("r-capacity bounds sum to {sum}, fewer than the {n} clients"));
                }
                Ok(())
            }
            ConstraintSpec::Outlier { m } => {
                if *m >= n {
                    return Err(infeasible!("outlier budget {m} must be below the {n} clients"));
                }
                Ok(())
            }
        }
    }

    /// Does `clustering` satisfy the spec (cluster `i` against bound `i`)?
    pub fn admits(&self, clustering: &Clustering) -> bool {
        let sizes = clustering.sizes();
        let excluded = clustering.excluded().len();
        match self {
            ConstraintSpec::Unconstrained => excluded == 0,
            ConstraintSpec::RGather { r } => excluded == 0 && sizes.iter().zip(r).all(|(s, r)| s >= r),
            ConstraintSpec::RCapacity { r } => excluded == 0 && sizes.iter().zip(r).all(|(s, r)| s <= r),
            ConstraintSpec::Outlier { m } => excluded == *m,
        }
    }
}

fn check_len(r: &[usize], k: usize) -> Result<()> {
    if r.len() != k {
        return Err(domain!("{} size bounds given for k = {k}", r.len()));
    }
    Ok(())
}

/// Cheapest feasible clustering for a fixed center set. Cluster `i` is served
/// by center `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionResult {
    pub clustering: Clustering,
    pub cost: f64,
    /// For size constraints: the bound assigned to each center in the optimum.
    pub demand_assignment: Option<Vec<usize>>,
}

/// Dispatch on the constraint kind.
pub fn partition(instance: &MetricInstance, centers: &CenterSet, spec: &ConstraintSpec) -> Result<PartitionResult> {
    spec.validate(instance.n_clients(), centers.k())?;
    match spec {
        ConstraintSpec::Unconstrained => Ok(partition_voronoi(instance, centers)),
        ConstraintSpec::RGather { r } => partition_r_gather(instance, centers, r),
        ConstraintSpec::RCapacity { r } => partition_r_capacity(instance, centers, r),
        ConstraintSpec::Outlier { m } => partition_outlier(instance, centers, *m),
    }
}

fn partition_voronoi(instance: &MetricInstance, centers: &CenterSet) -> PartitionResult {
    partition_outlier(instance, centers, 0).expect("m = 0 is always feasible")
}

/// Every cluster `i` gets at least `r[i]` clients.
pub fn partition_r_gather(instance: &MetricInstance, centers: &CenterSet, r: &[usize]) -> Result<PartitionResult> {
    ConstraintSpec::RGather { r: r.to_vec() }.validate(instance.n_clients(), centers.k())?;
    let n = instance.n_clients() as i64;
    best_over_assignments(instance, centers, r, |b| (b as i64, n))
}

/// Every cluster `i` gets at most `r[i]` clients.
pub fn partition_r_capacity(instance: &MetricInstance, centers: &CenterSet, r: &[usize]) -> Result<PartitionResult> {
    ConstraintSpec::RCapacity { r: r.to_vec() }.validate(instance.n_clients(), centers.k())?;
    best_over_assignments(instance, centers, r, |b| (0, b as i64))
}

/// Drop the `m` clients farthest from the centers (ties: larger index first),
/// then assign the rest to their nearest center.
pub fn partition_outlier(instance: &MetricInstance, centers: &CenterSet, m: usize) -> Result<PartitionResult> {
    let n = instance.n_clients();
    ConstraintSpec::Outlier { m }.validate(n, centers.k())?;
    let pts = centers.points(instance);
    let nearest: Vec<(usize, f64)> = (0..n).map(|c| nearest_of(instance, &pts, instance.client_point(c))).collect();
    let mut labels: Vec<Option<usize>> = nearest.iter().map(|&(i, _)| Some(i)).collect();
    if m > 0 {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_unstable_by(|&a, &b| nearest[b].1.total_cmp(&nearest[a].1).then(b.cmp(&a)));
        for &z in &order[..m] {
            labels[z] = None;
        }
    }
    let cost = labels
        .iter()
        .zip(&nearest)
        .filter(|(l, _)| l.is_some())
        .map(|(_, &(_, d))| power(d, instance.ell()))
        .sum();
    Ok(PartitionResult { clustering: Clustering::new(labels, centers.k())?, cost, demand_assignment: None })
}

/// Distinct permutations of `values` in lexicographic order.
pub fn distinct_permutations(values: &[usize]) -> Vec<Vec<usize>> {
    let mut cur = values.to_vec();
    cur.sort_unstable();
    let mut out = vec![cur.clone()];
    while next_permutation(&mut cur) {
        out.push(cur.clone());
    }
    out
}

fn next_permutation(v: &mut [usize]) -> bool {
    let Some(i) = v.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let j = v.iter().rposition(|&x| x > v[i]).expect("pivot has a larger successor");
    v.swap(i, j);
    v[i + 1..].reverse();
    true
}

/// Try every distinct bound assignment; `bounds(b)` maps a bound value to the
/// (lower, upper) load of the center receiving it.
fn best_over_assignments(
    instance: &MetricInstance,
    centers: &CenterSet,
    r: &[usize],
    bounds: impl Fn(usize) -> (i64, i64) + Sync,
) -> Result<PartitionResult> {
    let perms = distinct_permutations(r);
    let solved: Vec<Result<(Vec<usize>, f64)>> = perms
        .par_iter()
        .map(|perm| {
            let loads: Vec<(i64, i64)> = perm.iter().map(|&b| bounds(b)).collect();
            assign_by_flow(instance, centers, &loads)
        })
        .collect();
    let mut best: Option<(usize, Vec<usize>, f64)> = None;
    for (i, s) in solved.into_iter().enumerate() {
        let (labels, cost) = s?;
        if best.as_ref().is_none_or(|b| cost < b.2) {
            best = Some((i, labels, cost));
        }
    }
    let (i, labels, cost) = best.expect("at least one permutation");
    Ok(PartitionResult {
        clustering: Clustering::from_labels(labels, centers.k())?,
        cost,
        demand_assignment: Some(perms[i].clone()),
    })
}

/// Min-cost assignment of every client to a center with per-center load
/// bounds `loads[i] = (lower, upper)`.
pub fn assign_by_flow(instance: &MetricInstance, centers: &CenterSet, loads: &[(i64, i64)]) -> Result<(Vec<usize>, f64)> {
    let k = centers.k();
    let n = instance.n_clients();
    let source = 0;
    let sink = k + n + 1;
    let mut net = FlowNetwork::new(k + n + 2, source, sink);
    for (i, &(lo, hi)) in loads.iter().enumerate() {
        net.add_arc(source, 1 + i, lo, hi, 0.0);
    }
    let mut serve = Vec::with_capacity(k * n);
    for (i, &f) in centers.as_slice().iter().enumerate() {
        for c in 0..n {
            serve.push((net.add_arc(1 + i, 1 + k + c, 0, 1, instance.service_cost(c, f)), i, c));
        }
    }
    for c in 0..n {
        net.add_arc(1 + k + c, sink, 1, 1, 0.0);
    }
    let flow = min_cost_flow(&net)?;
    let mut labels = vec![usize::MAX; n];
    for &(arc, i, c) in &serve {
        if flow.flows[arc] > 0 {
            labels[c] = i;
        }
    }
    debug_assert!(labels.iter().all(|&l| l < k));
    Ok((labels, flow.cost))
}
