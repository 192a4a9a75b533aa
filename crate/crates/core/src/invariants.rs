//! Checkable inequalities of the k-service setting and the decoy-instance
//! regression. Shared by `kservice verify` and the acceptance suite.

use rand::seq::index;
use rand::Rng;

use crate::error::Result;
use crate::instances::BadInstanceBundle;
use crate::list::{build_list, AlgorithmParams};
use crate::metric::{approx_eq, approx_le, power, psi, MetricInstance};
use crate::oracle::{oracle_unconstrained, oracle_unconstrained_on_clients, OracleBudget};

/// One row of a verification table.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub checked: u64,
    pub violations: u64,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &str) -> Self {
        Self { name: name.to_string(), checked: 0, violations: 0, detail: String::new() }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    fn record(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.violations += 1;
            if self.detail.is_empty() {
                self.detail = what();
            }
        }
    }
}

/// Every point id used by the instance, clients first.
fn used_points(instance: &MetricInstance) -> Vec<usize> {
    let mut pts: Vec<usize> = instance.clients().iter().chain(instance.facilities()).copied().collect();
    let mut seen = std::collections::HashSet::new();
    pts.retain(|p| seen.insert(*p));
    pts
}

/// Zero diagonal, symmetry, non-negativity and the triangle inequality over
/// the used points; all triples when there are at most `exhaustive_limit`
/// points, otherwise `samples` random triples.
pub fn check_metric_axioms<R: Rng + ?Sized>(
    instance: &MetricInstance,
    exhaustive_limit: usize,
    samples: usize,
    rng: &mut R,
) -> CheckOutcome {
    let pts = used_points(instance);
    let d = |a: usize, b: usize| instance.dist(a, b);
    let mut out = CheckOutcome::new("metric axioms");
    for &a in &pts {
        out.record(d(a, a) == 0.0, || format!("d({a},{a}) = {}", d(a, a)));
    }
    let mut triple = |a: usize, b: usize, c: usize| {
        let (ab, bc, ac) = (d(a, b), d(b, c), d(a, c));
        out.record(ab >= 0.0 && ab == d(b, a), || format!("d({a},{b}) = {ab}, d({b},{a}) = {}", d(b, a)));
        out.record(approx_le(ac, ab + bc), || format!("d({a},{c}) = {ac} > d({a},{b}) + d({b},{c}) = {}", ab + bc));
    };
    if pts.len() <= exhaustive_limit {
        for &a in &pts {
            for &b in &pts {
                for &c in &pts {
                    triple(a, b, c);
                }
            }
        }
    } else {
        for _ in 0..samples {
            let pick = |rng: &mut R| pts[rng.random_range(0..pts.len())];
            let (a, b, c) = (pick(rng), pick(rng), pick(rng));
            triple(a, b, c);
        }
    }
    out
}

/// `d^l(a,b) <= 2^(l-1) (d^l(a,c) + d^l(c,b))` on random triples and
/// `d^l(a,b) <= 3^(l-1) (d^l(a,c) + d^l(c,e) + d^l(e,b))` on random quadruples.
pub fn check_power_triangle<R: Rng + ?Sized>(instance: &MetricInstance, samples: usize, rng: &mut R) -> CheckOutcome {
    let pts = used_points(instance);
    let ell = instance.ell();
    let c = |a: usize, b: usize| power(instance.dist(a, b), ell);
    let mut out = CheckOutcome::new("power triangle");
    for _ in 0..samples {
        let q: Vec<usize> = (0..4).map(|_| pts[rng.random_range(0..pts.len())]).collect();
        let (a, b, x, y) = (q[0], q[1], q[2], q[3]);
        let rhs3 = 2f64.powf(ell - 1.0) * (c(a, x) + c(x, b));
        out.record(approx_le(c(a, b), rhs3), || format!("triple ({a},{b},{x}): {} > {rhs3}", c(a, b)));
        let rhs4 = 3f64.powf(ell - 1.0) * (c(a, x) + c(x, y) + c(y, b));
        out.record(approx_le(c(a, b), rhs4), || format!("quadruple ({a},{b},{x},{y}): {} > {rhs4}", c(a, b)));
    }
    out
}

fn random_subset<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    let size = rng.random_range(1..=n);
    let mut s = index::sample(rng, n, size).into_vec();
    s.sort_unstable();
    s
}

/// `Phi` of a single center point over client subset `s`.
fn phi_one(instance: &MetricInstance, center: usize, s: &[usize]) -> f64 {
    s.iter().map(|&x| power(instance.dist(center, instance.client_point(x)), instance.ell())).sum()
}

fn best_single(instance: &MetricInstance, s: &[usize]) -> f64 {
    instance.facilities().iter().map(|&f| phi_one(instance, f, s)).fold(f64::INFINITY, f64::min)
}

fn nearest_facility(instance: &MetricInstance, p: usize) -> usize {
    let mut best = (instance.facilities()[0], f64::INFINITY);
    for &f in instance.facilities() {
        let d = instance.dist(p, f);
        if d < best.1 {
            best = (f, d);
        }
    }
    best.0
}

/// Averaged over `x` in `S`, the nearest facility to `x` costs at most
/// `3^l` times the best single facility for `S`.
pub fn check_lemma1<R: Rng + ?Sized>(instance: &MetricInstance, subsets: usize, rng: &mut R) -> CheckOutcome {
    let mut out = CheckOutcome::new("nearest-facility average (3^l)");
    let factor = 3f64.powf(instance.ell());
    for _ in 0..subsets {
        let s = random_subset(instance.n_clients(), rng);
        let avg = s
            .iter()
            .map(|&x| phi_one(instance, nearest_facility(instance, instance.client_point(x)), &s))
            .sum::<f64>()
            / s.len() as f64;
        let bound = factor * best_single(instance, &s);
        out.record(approx_le(avg, bound), || format!("|S| = {}: average {avg} > {bound}", s.len()));
    }
    out
}

/// Averaged over `x` in `S`, centering at `x` itself costs at most `2^l`
/// times the best single facility for `S`.
pub fn check_lemma2<R: Rng + ?Sized>(instance: &MetricInstance, subsets: usize, rng: &mut R) -> CheckOutcome {
    let mut out = CheckOutcome::new("client-center average (2^l)");
    let factor = 2f64.powf(instance.ell());
    for _ in 0..subsets {
        let s = random_subset(instance.n_clients(), rng);
        let avg = s.iter().map(|&x| phi_one(instance, instance.client_point(x), &s)).sum::<f64>() / s.len() as f64;
        let bound = factor * best_single(instance, &s);
        out.record(approx_le(avg, bound), || format!("|S| = {}: average {avg} > {bound}", s.len()));
    }
    out
}

/// `OPT(C, C) <= 2^l OPT(L, C)` by exhaustive search.
pub fn check_fact4(instance: &MetricInstance, k: usize, budget: &OracleBudget) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new("client centers vs facilities (2^l)");
    let on_clients = oracle_unconstrained_on_clients(instance, k, budget)?.1;
    let on_l = oracle_unconstrained(instance, k, budget)?.1;
    let bound = 2f64.powf(instance.ell()) * on_l;
    out.record(approx_le(on_clients, bound), || format!("OPT(C,C) = {on_clients} > {bound}"));
    Ok(out)
}

/// Shortest paths by Floyd-Warshall, independent of the instance's own
/// distance computation.
fn floyd_warshall(nodes: usize, edges: &[(usize, usize, f64)]) -> Vec<Vec<f64>> {
    let mut d = vec![vec![f64::INFINITY; nodes]; nodes];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for &(u, v, w) in edges {
        d[u][v] = d[u][v].min(w);
        d[v][u] = d[v][u].min(w);
    }
    for m in 0..nodes {
        for i in 0..nodes {
            for j in 0..nodes {
                let via = d[i][m] + d[m][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// The decoy-instance claims: gadget distances, planted cost, and for each
/// seed no listed center set uses an optimal facility nor beats
/// `(3^l - delta') |C|` on the planted clustering.
pub fn check_bad_instance(bundle: &BadInstanceBundle, params: &AlgorithmParams, seeds: &[u64]) -> Result<Vec<CheckOutcome>> {
    let inst = &bundle.instance;
    let p = &bundle.params;
    let mut outcomes = Vec::new();

    let mut dist = CheckOutcome::new("gadget distances");
    if let crate::metric::Metric::Graph { nodes, edges, .. } = inst.metric() {
        let fw = floyd_warshall(*nodes, edges);
        for (a, row) in fw.iter().enumerate() {
            for (b, &want) in row.iter().enumerate() {
                dist.record(approx_eq(want, inst.dist(a, b)), || format!("d({a},{b}): {} vs {want}", inst.dist(a, b)));
            }
        }
    }
    let n = p.n_clients();
    for x in 0..n {
        for y in 0..n {
            if x == y || x / p.s != y / p.s {
                continue;
            }
            let dxy = inst.dist(inst.client_point(x), inst.client_point(y));
            dist.record(approx_eq(dxy, 2.0), || format!("clients {x},{y} at {dxy}, expected 2"));
            for &f in &bundle.decoy_map[y] {
                let dd = inst.dist(inst.client_point(x), inst.facility_point(f));
                dist.record(approx_eq(dd, 3.0 - p.delta), || format!("client {x} to decoy {f} at {dd}, expected {}", 3.0 - p.delta));
            }
        }
    }
    outcomes.push(dist);

    let mut planted = CheckOutcome::new("planted cost = |C|");
    let total = psi(inst, &bundle.optimal_centers, &bundle.target_clustering, false)?.total;
    planted.record(approx_eq(total, n as f64), || format!("planted cost {total}"));
    outcomes.push(planted);

    let bound = p.list_lower_bound();
    let mut no_star = CheckOutcome::new("no optimal facility listed");
    let mut floor = CheckOutcome::new(&format!("list cost >= {bound:.6}"));
    for &seed in seeds {
        let list = build_list(inst, p.k, params, seed)?;
        let mut best = f64::INFINITY;
        for cand in list.iter() {
            let hit = cand.centers.as_slice().iter().find(|f| bundle.optimal_centers.contains(**f)).copied();
            no_star.record(hit.is_none(), || format!("seed {seed}: candidate uses optimal facility {}", hit.unwrap_or(0)));
            best = best.min(psi(inst, &cand.centers, &bundle.target_clustering, false)?.total);
        }
        floor.record(best >= bound - 1e-6, || format!("seed {seed}: best listed cost {best} < {bound}"));
    }
    outcomes.push(no_star);
    outcomes.push(floor);
    Ok(outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{gen_bad_instance, gen_random, BadInstanceParams, RandomSpec};
    use crate::sampling::substream;

    #[test]
    fn random_instance_satisfies_everything() {
        let mut rng = substream(4, &[]);
        for ell in [1.0, 2.0] {
            let inst = gen_random(&RandomSpec { ell, ..RandomSpec::new(6, 5) }, &mut rng).unwrap();
            assert!(check_metric_axioms(&inst, 50, 0, &mut rng).passed());
            assert!(check_power_triangle(&inst, 500, &mut rng).passed());
            assert!(check_lemma1(&inst, 30, &mut rng).passed());
            assert!(check_lemma2(&inst, 30, &mut rng).passed());
            assert!(check_fact4(&inst, 2, &OracleBudget::default()).unwrap().passed());
        }
    }

    #[test]
    fn broken_triangle_is_caught() {
        let rows = vec![vec![0.0, 1.0, 5.0], vec![1.0, 0.0, 1.0], vec![5.0, 1.0, 0.0]];
        let m = crate::metric::DistanceMatrix::from_rows(&rows).unwrap();
        let inst = MetricInstance::new(vec![0, 1], vec![2], crate::metric::Metric::Matrix(m), 1.0, Some(false)).unwrap();
        let out = check_metric_axioms(&inst, 50, 0, &mut substream(1, &[]));
        assert!(!out.passed());
        assert!(out.detail.contains('>'));
    }

    #[test]
    fn bad_instance_claims_hold() {
        let b = gen_bad_instance(&BadInstanceParams::new(2, 3, 0.1, 1.0)).unwrap();
        let params = AlgorithmParams::practical(2, 0.5).unwrap().with_eta(10);
        for o in check_bad_instance(&b, &params, &[1, 2]).unwrap() {
            assert!(o.passed(), "{o:?}");
        }
    }
}
