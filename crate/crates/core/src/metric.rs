//! Metric instances, the clustering cost functions and optimal center recovery.
//!
//! Points are identified by dense integer ids. A [`MetricInstance`] holds the
//! client list `C`, the facility list `L` (both as point ids, possibly
//! overlapping) and a distance oracle over the id universe. Costs are always
//! `d^ell`: `ell = 1` is k-median, `ell = 2` is k-means.
//!
//! Client and facility *indices* (positions in those lists) are used
//! everywhere else in the crate; point ids only appear at the I/O boundary and
//! when two roles share a location.

use std::collections::{BTreeMap, HashSet};

use petgraph::graph::{NodeIndex, UnGraph};

use crate::error::{domain, infeasible, Error, Result};
use crate::flow::min_cost_matching;

/// Relative tolerance used for cost comparisons.
pub const COST_RTOL: f64 = 1e-9;

/// Matrix-mode instances at or below this many points are checked for the
/// triangle inequality on load unless told otherwise.
pub const TRIANGLE_CHECK_LIMIT: usize = 512;

/// `a <= b` up to [`COST_RTOL`].
pub fn approx_le(a: f64, b: f64) -> bool {
    a <= b + COST_RTOL * a.abs().max(b.abs()).max(1.0)
}

/// `|a - b|` within [`COST_RTOL`] relative.
pub fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= COST_RTOL * a.abs().max(b.abs()).max(1.0)
}

/// Raise a distance to the cost exponent, exactly for small integral exponents.
#[inline]
pub fn power(d: f64, ell: f64) -> f64 {
    if ell == 1.0 {
        d
    } else if ell == 2.0 {
        d * d
    } else if ell.fract() == 0.0 && ell <= 64.0 {
        d.powi(ell as i32)
    } else {
        d.powf(ell)
    }
}

/// Dense symmetric distance matrix over point ids `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidMetric(format!(
                    "matrix row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(Self { n, data })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.data[a * self.n + b]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n.max(1)).map(<[f64]>::to_vec).collect()
    }

    /// Symmetry, zero diagonal, finiteness and non-negativity.
    pub fn check_basic_axioms(&self) -> Result<()> {
        for a in 0..self.n {
            if self.get(a, a) != 0.0 {
                return Err(Error::InvalidMetric(format!("d({a},{a}) = {} != 0", self.get(a, a))));
            }
            for b in 0..self.n {
                let d = self.get(a, b);
                if !d.is_finite() || d < 0.0 {
                    return Err(Error::InvalidMetric(format!("d({a},{b}) = {d} is not a finite non-negative value")));
                }
                if d != self.get(b, a) {
                    return Err(Error::InvalidMetric(format!(
                        "d({a},{b}) = {d} but d({b},{a}) = {}",
                        self.get(b, a)
                    )));
                }
            }
        }
        Ok(())
    }

    /// O(n^3) triangle-inequality check.
    pub fn check_triangle(&self) -> Result<()> {
        for a in 0..self.n {
            for b in 0..self.n {
                let ab = self.get(a, b);
                for c in 0..self.n {
                    let via = self.get(a, c) + self.get(c, b);
                    if !approx_le(ab, via) {
                        return Err(Error::InvalidMetric(format!(
                            "triangle inequality fails: d({a},{b}) = {ab} > d({a},{c}) + d({c},{b}) = {via}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// The distance oracle behind an instance.
#[derive(Debug, Clone, PartialEq)]
pub enum Metric {
    /// Explicit matrix over the whole id universe.
    Matrix(DistanceMatrix),
    /// Coordinates per point id; ids without coordinates are unused.
    Euclidean { coords: Vec<Option<Vec<f64>>> },
    /// Weighted undirected graph; distances are shortest paths, computed eagerly.
    Graph {
        nodes: usize,
        edges: Vec<(usize, usize, f64)>,
        apsp: DistanceMatrix,
    },
}

impl Metric {
    pub fn mode_name(&self) -> &'static str {
        match self {
            Metric::Matrix(_) => "matrix",
            Metric::Euclidean { .. } => "euclidean",
            Metric::Graph { .. } => "graph",
        }
    }

    /// Size of the point-id range.
    pub fn universe(&self) -> usize {
        match self {
            Metric::Matrix(m) => m.len(),
            Metric::Euclidean { coords } => coords.len(),
            Metric::Graph { nodes, .. } => *nodes,
        }
    }

    #[inline]
    pub fn dist(&self, a: usize, b: usize) -> f64 {
        match self {
            Metric::Matrix(m) => m.get(a, b),
            Metric::Graph { apsp, .. } => apsp.get(a, b),
            Metric::Euclidean { coords } => {
                let (Some(pa), Some(pb)) = (&coords[a], &coords[b]) else {
                    panic!("point {a} or {b} has no coordinates");
                };
                euclidean(pa, pb)
            }
        }
    }
}

#[inline]
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// All-pairs shortest paths by one Dijkstra run per node.
pub fn graph_apsp(nodes: usize, edges: &[(usize, usize, f64)]) -> Result<DistanceMatrix> {
    let mut g: UnGraph<(), f64> = UnGraph::with_capacity(nodes, edges.len());
    for _ in 0..nodes {
        g.add_node(());
    }
    for &(u, v, w) in edges {
        if u >= nodes || v >= nodes {
            return Err(Error::InvalidMetric(format!("edge ({u},{v}) references a node outside 0..{nodes}")));
        }
        if !w.is_finite() || w < 0.0 {
            return Err(Error::InvalidMetric(format!("edge ({u},{v}) has weight {w}")));
        }
        g.add_edge(NodeIndex::new(u), NodeIndex::new(v), w);
    }
    let mut data = vec![f64::INFINITY; nodes * nodes];
    for s in 0..nodes {
        let reached = petgraph::algo::dijkstra(&g, NodeIndex::new(s), None, |e| *e.weight());
        for (node, d) in reached {
            data[s * nodes + node.index()] = d;
        }
    }
    // Dijkstra sums along different paths for (a,b) and (b,a); pin exact symmetry.
    for a in 0..nodes {
        for b in (a + 1)..nodes {
            let d = data[a * nodes + b].min(data[b * nodes + a]);
            data[a * nodes + b] = d;
            data[b * nodes + a] = d;
        }
    }
    Ok(DistanceMatrix { n: nodes, data })
}

/// A k-service instance: clients, candidate facility locations, a metric and `ell`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricInstance {
    clients: Vec<usize>,
    facilities: Vec<usize>,
    metric: Metric,
    ell: f64,
}

impl MetricInstance {
    /// Build and validate an instance. Matrix mode checks the triangle
    /// inequality when `check_triangle` is `Some(true)`, or by default when the
    /// universe has at most [`TRIANGLE_CHECK_LIMIT`] points.
    pub fn new(
        clients: Vec<usize>,
        facilities: Vec<usize>,
        metric: Metric,
        ell: f64,
        check_triangle: Option<bool>,
    ) -> Result<Self> {
        if clients.is_empty() {
            return Err(domain!("instance has no clients"));
        }
        if facilities.is_empty() {
            return Err(domain!("instance has no facilities"));
        }
        if !(ell.is_finite() && ell >= 1.0) {
            return Err(domain!("ell must be a finite real >= 1, got {ell}"));
        }
        let universe = metric.universe();
        for (what, ids) in [("client", &clients), ("facility", &facilities)] {
            let mut seen = HashSet::with_capacity(ids.len());
            for &id in ids.iter() {
                if id >= universe {
                    return Err(domain!("{what} id {id} is outside the metric's point range 0..{universe}"));
                }
                if !seen.insert(id) {
                    return Err(domain!("duplicate {what} id {id}"));
                }
                if let Metric::Euclidean { coords } = &metric {
                    if coords[id].is_none() {
                        return Err(domain!("{what} id {id} has no coordinates"));
                    }
                }
            }
        }
        match &metric {
            Metric::Matrix(m) => {
                m.check_basic_axioms()?;
                if check_triangle.unwrap_or(m.len() <= TRIANGLE_CHECK_LIMIT) {
                    m.check_triangle()?;
                }
            }
            Metric::Euclidean { coords } => {
                let mut dim = None;
                for (id, c) in coords.iter().enumerate() {
                    if let Some(c) = c {
                        if c.is_empty() || c.iter().any(|x| !x.is_finite()) {
                            return Err(domain!("point {id} has invalid coordinates"));
                        }
                        match dim {
                            None => dim = Some(c.len()),
                            Some(d) if d != c.len() => {
                                return Err(domain!("point {id} has dimension {}, expected {d}", c.len()))
                            }
                            _ => {}
                        }
                    }
                }
            }
            Metric::Graph { apsp, .. } => {
                for &c in &clients {
                    for &f in &facilities {
                        if !apsp.get(c, f).is_finite() {
                            return Err(Error::InvalidMetric(format!(
                                "graph is disconnected: client {c} cannot reach facility {f}"
                            )));
                        }
                    }
                }
            }
        }
        Ok(Self { clients, facilities, metric, ell })
    }

    pub fn from_matrix(clients: Vec<usize>, facilities: Vec<usize>, rows: &[Vec<f64>], ell: f64) -> Result<Self> {
        Self::new(clients, facilities, Metric::Matrix(DistanceMatrix::from_rows(rows)?), ell, None)
    }

    pub fn from_coords(
        clients: Vec<usize>,
        facilities: Vec<usize>,
        coords: &BTreeMap<usize, Vec<f64>>,
        ell: f64,
    ) -> Result<Self> {
        let universe = coords.keys().next_back().map_or(0, |&m| m + 1);
        let mut dense = vec![None; universe];
        for (&id, c) in coords {
            dense[id] = Some(c.clone());
        }
        Self::new(clients, facilities, Metric::Euclidean { coords: dense }, ell, None)
    }

    /// Graph instance over nodes `0..nodes` (`nodes` is widened to cover every
    /// referenced id).
    pub fn from_graph(
        clients: Vec<usize>,
        facilities: Vec<usize>,
        edges: Vec<(usize, usize, f64)>,
        ell: f64,
    ) -> Result<Self> {
        let nodes = clients
            .iter()
            .chain(&facilities)
            .copied()
            .chain(edges.iter().flat_map(|&(u, v, _)| [u, v]))
            .max()
            .map_or(0, |m| m + 1);
        let apsp = graph_apsp(nodes, &edges)?;
        Self::new(clients, facilities, Metric::Graph { nodes, edges, apsp }, ell, None)
    }

    pub fn clients(&self) -> &[usize] {
        &self.clients
    }

    pub fn facilities(&self) -> &[usize] {
        &self.facilities
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    pub fn n_clients(&self) -> usize {
        self.clients.len()
    }

    pub fn n_facilities(&self) -> usize {
        self.facilities.len()
    }

    /// Same instance with a different cost exponent.
    pub fn with_ell(&self, ell: f64) -> Result<Self> {
        if !(ell.is_finite() && ell >= 1.0) {
            return Err(domain!("ell must be a finite real >= 1, got {ell}"));
        }
        Ok(Self { ell, ..self.clone() })
    }

    /// Distance between two point ids.
    #[inline]
    pub fn dist(&self, a: usize, b: usize) -> f64 {
        self.metric.dist(a, b)
    }

    /// `d(a, b)^ell` between two point ids.
    #[inline]
    pub fn cost(&self, a: usize, b: usize) -> f64 {
        power(self.dist(a, b), self.ell)
    }

    #[inline]
    pub fn client_point(&self, client: usize) -> usize {
        self.clients[client]
    }

    #[inline]
    pub fn facility_point(&self, facility: usize) -> usize {
        self.facilities[facility]
    }

    /// `d(client, facility)^ell` by index.
    #[inline]
    pub fn service_cost(&self, client: usize, facility: usize) -> f64 {
        self.cost(self.clients[client], self.facilities[facility])
    }

    /// True when every client location is also a facility location.
    pub fn clients_are_facilities(&self) -> bool {
        let fac: HashSet<usize> = self.facilities.iter().copied().collect();
        self.clients.iter().all(|c| fac.contains(c))
    }

    /// Facility index located at `point`, if any.
    pub fn facility_at_point(&self, point: usize) -> Option<usize> {
        self.facilities.iter().position(|&f| f == point)
    }
}

/// `k` distinct facility indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CenterSet(Vec<usize>);

impl CenterSet {
    pub fn new(facilities: Vec<usize>, n_facilities: usize) -> Result<Self> {
        if facilities.is_empty() {
            return Err(domain!("center set is empty"));
        }
        let mut seen = HashSet::with_capacity(facilities.len());
        for &f in &facilities {
            if f >= n_facilities {
                return Err(domain!("facility index {f} is outside 0..{n_facilities}"));
            }
            if !seen.insert(f) {
                return Err(domain!("facility {f} appears twice in a center set"));
            }
        }
        Ok(Self(facilities))
    }

    /// Caller guarantees distinct, in-range indices.
    pub(crate) fn new_unchecked(facilities: Vec<usize>) -> Self {
        debug_assert!({
            let s: HashSet<_> = facilities.iter().collect();
            s.len() == facilities.len()
        });
        Self(facilities)
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }

    pub fn contains(&self, facility: usize) -> bool {
        self.0.contains(&facility)
    }

    /// Point ids of the centers.
    pub fn points(&self, instance: &MetricInstance) -> Vec<usize> {
        self.0.iter().map(|&f| instance.facility_point(f)).collect()
    }
}

/// Assignment of clients to cluster labels `0..k`; `None` marks an excluded
/// client (outlier).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clustering {
    labels: Vec<Option<usize>>,
    k: usize,
}

impl Clustering {
    pub fn new(labels: Vec<Option<usize>>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(domain!("a clustering needs k >= 1"));
        }
        if let Some((i, l)) = labels.iter().enumerate().find_map(|(i, l)| l.filter(|&l| l >= k).map(|l| (i, l))) {
            return Err(domain!("client {i} has label {l} outside 0..{k}"));
        }
        Ok(Self { labels, k })
    }

    /// Every client labelled.
    pub fn from_labels(labels: Vec<usize>, k: usize) -> Result<Self> {
        Self::new(labels.into_iter().map(Some).collect(), k)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn label(&self, client: usize) -> Option<usize> {
        self.labels[client]
    }

    pub fn n_clients(&self) -> usize {
        self.labels.len()
    }

    /// Members of each cluster, in client order.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (i, l) in self.labels.iter().enumerate() {
            if let Some(l) = l {
                out[*l].push(i);
            }
        }
        out
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut out = vec![0; self.k];
        for l in self.labels.iter().flatten() {
            out[*l] += 1;
        }
        out
    }

    /// Excluded clients (the outlier set `Z`).
    pub fn excluded(&self) -> Vec<usize> {
        self.labels.iter().enumerate().filter(|(_, l)| l.is_none()).map(|(i, _)| i).collect()
    }

    pub fn has_empty_cluster(&self) -> bool {
        self.sizes().contains(&0)
    }
}

/// Total and per-cluster cost of serving a clustering by a center set, with
/// the cluster-to-center correspondence that achieves it.
#[derive(Debug, Clone, PartialEq)]
pub struct CostReport {
    pub total: f64,
    pub per_cluster: Vec<f64>,
    /// `matching[cluster]` is the position of the serving center in the center set.
    pub matching: Vec<usize>,
}

/// Nearest of `points` to point `p` as `(position, distance)`; ties go to the
/// smaller position.
#[inline]
pub fn nearest_of(instance: &MetricInstance, points: &[usize], p: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, &q) in points.iter().enumerate() {
        let d = instance.dist(p, q);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// `sum_{x in subset} min_{p in points} d(p, x)^ell` where `points` are point ids.
pub fn phi_points(instance: &MetricInstance, points: &[usize], subset: &[usize]) -> Result<f64> {
    if points.is_empty() {
        return Err(domain!("phi needs a non-empty center set"));
    }
    Ok(subset
        .iter()
        .map(|&x| power(nearest_of(instance, points, instance.client_point(x)).1, instance.ell()))
        .sum())
}

/// Cost of serving the clients in `subset` by their nearest center.
pub fn phi(instance: &MetricInstance, centers: &CenterSet, subset: &[usize]) -> Result<f64> {
    phi_points(instance, &centers.points(instance), subset)
}

/// Assign every client to its nearest center (ties to the lower center position).
pub fn voronoi_partition(instance: &MetricInstance, centers: &CenterSet) -> Clustering {
    let pts = centers.points(instance);
    let labels = (0..instance.n_clients())
        .map(|c| Some(nearest_of(instance, &pts, instance.client_point(c)).0))
        .collect();
    Clustering { labels, k: centers.k() }
}

/// Per-(cluster, facility) service cost `sum_{x in C_j} d(x, f)^ell` for
/// the given facility indices.
fn cluster_cost_matrix(instance: &MetricInstance, clusters: &[Vec<usize>], facilities: &[usize]) -> Vec<Vec<f64>> {
    clusters
        .iter()
        .map(|members| {
            facilities
                .iter()
                .map(|&f| members.iter().map(|&x| instance.service_cost(x, f)).sum())
                .collect()
        })
        .collect()
}

fn check_clusters(clustering: &Clustering, allow_empty: bool) -> Result<()> {
    if !allow_empty {
        if let Some(j) = clustering.sizes().iter().position(|&s| s == 0) {
            return Err(domain!("cluster {j} is empty"));
        }
    }
    Ok(())
}

/// Minimum over cluster-to-center bijections of the total service cost.
pub fn psi(instance: &MetricInstance, centers: &CenterSet, clustering: &Clustering, allow_empty: bool) -> Result<CostReport> {
    if clustering.k() != centers.k() {
        return Err(domain!("clustering has {} clusters but {} centers were given", clustering.k(), centers.k()));
    }
    if clustering.n_clients() != instance.n_clients() {
        return Err(domain!("clustering covers {} clients, instance has {}", clustering.n_clients(), instance.n_clients()));
    }
    check_clusters(clustering, allow_empty)?;
    let costs = cluster_cost_matrix(instance, &clustering.clusters(), centers.as_slice());
    let m = min_cost_matching(&costs, centers.k())?;
    let mut matching = vec![0; centers.k()];
    let mut per_cluster = vec![0.0; centers.k()];
    for &(j, i) in &m.pairs {
        matching[j] = i;
        per_cluster[j] = costs[j][i];
    }
    Ok(CostReport { total: per_cluster.iter().sum(), per_cluster, matching })
}

/// Optimal centers for a fixed clustering: a minimum-cost matching of the `k`
/// clusters to `k` distinct facilities. The returned center set lists the
/// center of cluster `j` at position `j`; its cost is `Psi*` of the clustering.
pub fn mcpm_centers(instance: &MetricInstance, clustering: &Clustering, allow_empty: bool) -> Result<(CenterSet, CostReport)> {
    let k = clustering.k();
    if k > instance.n_facilities() {
        return Err(infeasible!("{k} clusters but only {} facilities", instance.n_facilities()));
    }
    if clustering.n_clients() != instance.n_clients() {
        return Err(domain!("clustering covers {} clients, instance has {}", clustering.n_clients(), instance.n_clients()));
    }
    check_clusters(clustering, allow_empty)?;
    let all: Vec<usize> = (0..instance.n_facilities()).collect();
    let costs = cluster_cost_matrix(instance, &clustering.clusters(), &all);
    let m = min_cost_matching(&costs, k)?;
    let mut chosen = vec![0; k];
    let mut per_cluster = vec![0.0; k];
    for &(j, f) in &m.pairs {
        chosen[j] = f;
        per_cluster[j] = costs[j][f];
    }
    let report = CostReport { total: per_cluster.iter().sum(), per_cluster, matching: (0..k).collect() };
    Ok((CenterSet::new_unchecked(chosen), report))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Clients and facilities on a line; point id = position in `xs`.
    fn line(xs: &[f64], clients: Vec<usize>, facilities: Vec<usize>, ell: f64) -> MetricInstance {
        let coords = xs.iter().enumerate().map(|(i, &x)| (i, vec![x])).collect();
        MetricInstance::from_coords(clients, facilities, &coords, ell).unwrap()
    }

    #[test]
    fn phi_zero_distance() {
        let inst = line(&[0.0], vec![0], vec![0], 1.0);
        let f = CenterSet::new(vec![0], 1).unwrap();
        assert_eq!(phi(&inst, &f, &[0]).unwrap(), 0.0);
    }

    #[test]
    fn phi_direct_formula() {
        // points: 0 -> x=0, 1 -> x=10, 2 -> x=1, 3 -> x=9
        let inst = line(&[0.0, 10.0, 1.0, 9.0], vec![2, 3], vec![0, 1], 2.0);
        let f = CenterSet::new(vec![0, 1], 2).unwrap();
        assert_eq!(phi(&inst, &f, &[0, 1]).unwrap(), 2.0);
    }

    #[test]
    fn phi_rejects_empty_centers() {
        let inst = line(&[0.0], vec![0], vec![0], 1.0);
        assert!(matches!(phi_points(&inst, &[], &[0]), Err(Error::Domain(_))));
        assert!(CenterSet::new(vec![], 1).is_err());
    }

    #[test]
    fn voronoi_by_inspection_and_tie_rule() {
        // facilities at 0 and 10, clients at 1, 2, 9 and 5 (equidistant).
        let inst = line(&[0.0, 10.0, 1.0, 2.0, 9.0, 5.0], vec![2, 3, 4, 5], vec![0, 1], 1.0);
        let f = CenterSet::new(vec![0, 1], 2).unwrap();
        let c = voronoi_partition(&inst, &f);
        assert_eq!(c.labels(), &[Some(0), Some(0), Some(1), Some(0)]);
    }

    #[test]
    fn psi_two_permutations() {
        // d(a,f1)=1, d(a,f2)=3, d(b,f1)=2, d(b,f2)=1; points a=0, b=1, f1=2, f2=3.
        let rows = vec![
            vec![0.0, 2.0, 1.0, 3.0],
            vec![2.0, 0.0, 2.0, 1.0],
            vec![1.0, 2.0, 0.0, 2.0],
            vec![3.0, 1.0, 2.0, 0.0],
        ];
        let inst = MetricInstance::from_matrix(vec![0, 1], vec![2, 3], &rows, 1.0).unwrap();
        let f = CenterSet::new(vec![0, 1], 2).unwrap();
        let cl = Clustering::from_labels(vec![0, 1], 2).unwrap();
        let r = psi(&inst, &f, &cl, false).unwrap();
        assert_eq!(r.total, 2.0);
        assert_eq!(r.matching, vec![0, 1]);
        // the swapped labelling matches the other way round
        let swapped = Clustering::from_labels(vec![1, 0], 2).unwrap();
        let r = psi(&inst, &f, &swapped, false).unwrap();
        assert_eq!(r.total, 2.0);
        assert_eq!(r.matching, vec![1, 0]);
    }

    #[test]
    fn psi_rejects_mismatch_and_empty() {
        let inst = line(&[0.0, 1.0, 2.0], vec![0, 1], vec![0, 1, 2], 1.0);
        let f = CenterSet::new(vec![0, 1], 3).unwrap();
        let one = Clustering::from_labels(vec![0, 0], 1).unwrap();
        assert!(matches!(psi(&inst, &f, &one, false), Err(Error::Domain(_))));
        let empty = Clustering::from_labels(vec![0, 0], 2).unwrap();
        assert!(psi(&inst, &f, &empty, false).is_err());
        assert!(psi(&inst, &f, &empty, true).is_ok());
    }

    #[test]
    fn mcpm_zero_spread() {
        let inst = line(&[0.0, 5.0, 10.0], vec![0, 2], vec![0, 1, 2], 2.0);
        let cl = Clustering::from_labels(vec![0, 1], 2).unwrap();
        let (f, r) = mcpm_centers(&inst, &cl, false).unwrap();
        assert_eq!(r.total, 0.0);
        assert_eq!(f.as_slice(), &[0, 2]);
    }

    #[test]
    fn mcpm_needs_enough_facilities() {
        let inst = line(&[0.0, 1.0], vec![0, 1], vec![0], 1.0);
        let cl = Clustering::from_labels(vec![0, 1], 2).unwrap();
        assert!(matches!(mcpm_centers(&inst, &cl, false), Err(Error::Infeasible(_))));
    }

    #[test]
    fn matrix_axioms_checked_on_load() {
        let asym = vec![vec![0.0, 1.0], vec![2.0, 0.0]];
        assert!(matches!(MetricInstance::from_matrix(vec![0], vec![1], &asym, 1.0), Err(Error::InvalidMetric(_))));
        let no_triangle = vec![vec![0.0, 1.0, 5.0], vec![1.0, 0.0, 1.0], vec![5.0, 1.0, 0.0]];
        assert!(matches!(
            MetricInstance::from_matrix(vec![0], vec![2], &no_triangle, 1.0),
            Err(Error::InvalidMetric(_))
        ));
        let skip = MetricInstance::new(
            vec![0],
            vec![2],
            Metric::Matrix(DistanceMatrix::from_rows(&no_triangle).unwrap()),
            1.0,
            Some(false),
        );
        assert!(skip.is_ok());
    }

    #[test]
    fn graph_shortest_paths() {
        // path 0 -1- 1 -2- 2, plus a long direct edge 0-2
        let inst = MetricInstance::from_graph(vec![0], vec![2], vec![(0, 1, 1.0), (1, 2, 2.0), (0, 2, 10.0)], 1.0).unwrap();
        assert_eq!(inst.dist(0, 2), 3.0);
        assert_eq!(inst.dist(2, 0), 3.0);
    }

    #[test]
    fn power_matches_powf() {
        for d in [0.0, 0.5, 1.0, 3.7] {
            for ell in [1.0, 2.0, 3.0, 1.5] {
                assert!((power(d, ell) - f64::powf(d, ell)).abs() < 1e-12);
            }
        }
    }
}
