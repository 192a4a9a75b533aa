//! Exhaustive solvers for tiny instances. Slow on purpose: every answer is a
//! plain minimum over an explicit enumeration.

use itertools::Itertools;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metric::{mcpm_centers, power, CenterSet, Clustering, MetricInstance};
use crate::partition::{distinct_permutations, ConstraintSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleBudget {
    pub max_clients: usize,
    pub max_facilities: usize,
    pub max_k: usize,
    /// Labelings (times outlier sets) enumerated.
    pub max_states: u64,
}

impl Default for OracleBudget {
    fn default() -> Self {
        Self { max_clients: 8, max_facilities: 7, max_k: 3, max_states: 10_000_000 }
    }
}

impl OracleBudget {
    fn check(&self, instance: &MetricInstance, k: usize, facilities_used: bool) -> Result<()> {
        let over = |what: &str, got: usize, max: usize| Error::Budget(format!("{what} = {got} exceeds the oracle limit {max}"));
        if instance.n_clients() > self.max_clients {
            return Err(over("|C|", instance.n_clients(), self.max_clients));
        }
        if facilities_used && instance.n_facilities() > self.max_facilities {
            return Err(over("|L|", instance.n_facilities(), self.max_facilities));
        }
        if k > self.max_k {
            return Err(over("k", k, self.max_k));
        }
        Ok(())
    }

    fn check_states(&self, states: u64) -> Result<()> {
        if states > self.max_states {
            return Err(Error::Budget(format!("{states} states exceed the oracle limit {}", self.max_states)));
        }
        Ok(())
    }
}

fn check_k(instance: &MetricInstance, k: usize, sites: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    if k > sites {
        return Err(Error::Infeasible(format!("k = {k} exceeds the {sites} candidate sites")));
    }
    if instance.n_clients() == 0 {
        return Err(Error::Domain("instance has no clients".into()));
    }
    Ok(())
}

fn voronoi_cost(instance: &MetricInstance, points: &[usize]) -> f64 {
    instance
        .clients()
        .iter()
        .map(|&c| points.iter().map(|&p| power(instance.dist(c, p), instance.ell())).fold(f64::INFINITY, f64::min))
        .sum()
}

/// Exact `OPT(L, C)` over all `k`-subsets of facilities with nearest-center
/// assignment. Ties go to the lexicographically first subset.
pub fn oracle_unconstrained(instance: &MetricInstance, k: usize, budget: &OracleBudget) -> Result<(CenterSet, f64)> {
    budget.check(instance, k, true)?;
    check_k(instance, k, instance.n_facilities())?;
    let (best, cost) = min_subset(instance, instance.facilities(), k)?;
    Ok((CenterSet::new(best, instance.n_facilities())?, cost))
}

/// Exact `OPT(C, C)`: centers restricted to client locations. Returns client
/// indices.
pub fn oracle_unconstrained_on_clients(instance: &MetricInstance, k: usize, budget: &OracleBudget) -> Result<(Vec<usize>, f64)> {
    budget.check(instance, k, false)?;
    check_k(instance, k, instance.n_clients())?;
    min_subset(instance, instance.clients(), k)
}

fn min_subset(instance: &MetricInstance, sites: &[usize], k: usize) -> Result<(Vec<usize>, f64)> {
    let mut best: Option<(Vec<usize>, f64)> = None;
    for subset in (0..sites.len()).combinations(k) {
        let pts: Vec<usize> = subset.iter().map(|&i| sites[i]).collect();
        let cost = voronoi_cost(instance, &pts);
        if best.as_ref().is_none_or(|b| cost < b.1) {
            best = Some((subset, cost));
        }
    }
    best.ok_or_else(|| Error::Internal("no center subsets".into()))
}

/// Exact constrained optimum.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedOptimum {
    pub clustering: Clustering,
    /// Center of cluster `j` at position `j`.
    pub centers: CenterSet,
    pub cost: f64,
}

/// Decode labeling number `code` of `free` clients in base `k`. Client
/// `free[0]` is the most significant digit.
fn decode(code: u64, free: &[usize], k: usize, n: usize) -> Vec<Option<usize>> {
    let mut labels = vec![None; n];
    let mut c = code;
    for &x in free.iter().rev() {
        labels[x] = Some((c % k as u64) as usize);
        c /= k as u64;
    }
    labels
}

fn size_feasible(spec: &ConstraintSpec, sizes: &[usize]) -> bool {
    match spec {
        ConstraintSpec::RGather { r } => sizes.iter().zip(r).all(|(s, r)| s >= r),
        ConstraintSpec::RCapacity { r } => sizes.iter().zip(r).all(|(s, r)| s <= r),
        _ => true,
    }
}

/// Exact `Psi*` optimum: every feasible labeling (and outlier set), centers
/// recovered by matching. Empty clusters are allowed wherever the constraint
/// allows them.
pub fn oracle_constrained(
    instance: &MetricInstance,
    k: usize,
    spec: &ConstraintSpec,
    budget: &OracleBudget,
) -> Result<ConstrainedOptimum> {
    budget.check(instance, k, true)?;
    check_k(instance, k, instance.n_facilities())?;
    let n = instance.n_clients();
    spec.validate(n, k)?;
    let m = spec.outliers();
    let free_count = n - m;
    let pinned = spec.is_symmetric() && free_count > 0;
    let per_set = (k as u64).pow((free_count - usize::from(pinned)) as u32);
    let sets: Vec<Vec<usize>> = (0..n).combinations(m).collect();
    budget.check_states(per_set.saturating_mul(sets.len() as u64))?;

    let mut best: Option<(f64, usize, u64, Clustering, CenterSet)> = None;
    for (si, z) in sets.iter().enumerate() {
        let free: Vec<usize> = (0..n).filter(|x| !z.contains(x)).collect();
        // leading digit first; pinned labelings keep it at 0
        let found = (0..per_set)
            .into_par_iter()
            .map(|code| -> Result<Option<(f64, u64, Clustering, CenterSet)>> {
                let labels = decode(code, &free, k, n);
                let clustering = Clustering::new(labels, k)?;
                if !size_feasible(spec, &clustering.sizes()) {
                    return Ok(None);
                }
                let (centers, report) = mcpm_centers(instance, &clustering, true)?;
                Ok(Some((report.total, code, clustering, centers)))
            })
            .try_fold(
                || None,
                |acc: Option<(f64, u64, Clustering, CenterSet)>, x| {
                    x.map(|x| match (acc, x) {
                        (Some(a), Some(b)) => Some(if (b.0, b.1) < (a.0, a.1) { b } else { a }),
                        (a, b) => a.or(b),
                    })
                },
            )
            .try_reduce(
                || None,
                |a, b| {
                    Ok(match (a, b) {
                        (Some(a), Some(b)) => Some(if (b.0, b.1) < (a.0, a.1) { b } else { a }),
                        (a, b) => a.or(b),
                    })
                },
            )?;
        if let Some((cost, code, clustering, centers)) = found {
            if best.as_ref().is_none_or(|b| cost < b.0) {
                best = Some((cost, si, code, clustering, centers));
            }
        }
    }
    let (cost, _, _, clustering, centers) =
        best.ok_or_else(|| Error::Infeasible(format!("no {} clustering exists", spec.name())))?;
    Ok(ConstrainedOptimum { clustering, centers, cost })
}

/// Exact partition cost for fixed centers: every labeling (and outlier set),
/// feasibility checked against every assignment of the bounds to centers.
pub fn oracle_partition(
    instance: &MetricInstance,
    centers: &CenterSet,
    spec: &ConstraintSpec,
    budget: &OracleBudget,
) -> Result<(Clustering, f64)> {
    let k = centers.k();
    budget.check(instance, k, false)?;
    let n = instance.n_clients();
    spec.validate(n, k)?;
    let m = spec.outliers();
    let sets: Vec<Vec<usize>> = (0..n).combinations(m).collect();
    let per_set = (k as u64).pow((n - m) as u32);
    budget.check_states(per_set.saturating_mul(sets.len() as u64))?;
    let bound_orders: Vec<Vec<usize>> = match spec {
        ConstraintSpec::RGather { r } | ConstraintSpec::RCapacity { r } => distinct_permutations(r),
        _ => vec![],
    };
    let pts = centers.points(instance);
    let mut best: Option<(f64, Clustering)> = None;
    for z in &sets {
        let free: Vec<usize> = (0..n).filter(|x| !z.contains(x)).collect();
        for code in 0..per_set {
            let labels = decode(code, &free, k, n);
            let clustering = Clustering::new(labels, k)?;
            let sizes = clustering.sizes();
            let feasible = match spec {
                ConstraintSpec::RGather { .. } | ConstraintSpec::RCapacity { .. } => {
                    bound_orders.iter().any(|r| size_feasible(&relabel(spec, r), &sizes))
                }
                _ => true,
            };
            if !feasible {
                continue;
            }
            let cost: f64 = (0..n)
                .filter_map(|x| clustering.label(x).map(|j| power(instance.dist(instance.client_point(x), pts[j]), instance.ell())))
                .sum();
            if best.as_ref().is_none_or(|b| cost < b.0) {
                best = Some((cost, clustering));
            }
        }
    }
    let (cost, clustering) = best.ok_or_else(|| Error::Infeasible(format!("no {} assignment exists", spec.name())))?;
    Ok((clustering, cost))
}

fn relabel(spec: &ConstraintSpec, r: &[usize]) -> ConstraintSpec {
    match spec {
        ConstraintSpec::RGather { .. } => ConstraintSpec::RGather { r: r.to_vec() },
        ConstraintSpec::RCapacity { .. } => ConstraintSpec::RCapacity { r: r.to_vec() },
        other => other.clone(),
    }
}

/// `Psi` by trying every cluster-to-center bijection.
pub fn brute_force_psi(instance: &MetricInstance, centers: &CenterSet, clustering: &Clustering) -> f64 {
    let k = centers.k();
    let pts = centers.points(instance);
    (0..k)
        .permutations(k)
        .map(|perm| cluster_cost(instance, clustering, |j| pts[perm[j]]))
        .fold(f64::INFINITY, f64::min)
}

/// `Psi*` by trying every injection of clusters into facilities. Returns the
/// facility of each cluster and the cost.
pub fn brute_force_mcpm(instance: &MetricInstance, clustering: &Clustering) -> (Vec<usize>, f64) {
    let k = clustering.k();
    let mut best = (Vec::new(), f64::INFINITY);
    for inj in (0..instance.n_facilities()).permutations(k) {
        let cost = cluster_cost(instance, clustering, |j| instance.facility_point(inj[j]));
        if cost < best.1 {
            best = (inj, cost);
        }
    }
    best
}

fn cluster_cost(instance: &MetricInstance, clustering: &Clustering, center_of: impl Fn(usize) -> usize) -> f64 {
    (0..clustering.n_clients())
        .filter_map(|x| clustering.label(x).map(|j| power(instance.dist(instance.client_point(x), center_of(j)), instance.ell())))
        .sum()
}
