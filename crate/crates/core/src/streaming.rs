//! Multi-pass streaming over the clients. Facilities stay resident; clients
//! arrive as `(id, payload)` records and are only ever read front to back.
//!
//! The memory meter counts stored client records and representative-graph
//! vertices, not bytes.

use std::cmp::Ordering;
use std::collections::hash_map::Entry;
use std::collections::{BinaryHeap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::flow::{min_cost_flow, FlowNetwork};
use crate::list::{AlgorithmParams, CandidateList, Repetition};
use crate::metric::{euclidean, power, CenterSet, Clustering, Metric, MetricInstance};
use crate::partition::{distinct_permutations, ConstraintSpec, PartitionResult};
use crate::solver::{Provenance, Solution};
use crate::sampling::{kmeanspp_by, substream, tags, SolverRng, WeightedReservoir};

/// Payload of a client record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Payload {
    /// Euclidean coordinates.
    Coords(Vec<f64>),
    /// Distances to every point id of the universe.
    Row(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub id: usize,
    pub payload: Payload,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PayloadKind {
    Coords,
    Row,
}

/// A replayable client source.
pub trait PointStream {
    /// One full traversal; `visit(ordinal, record)` sees every record in order.
    fn pass(&mut self, visit: &mut dyn FnMut(usize, &Record) -> Result<()>) -> Result<()>;
    /// Completed or started traversals so far.
    fn passes(&self) -> usize;
}

/// Records held in memory; used for tests and offline comparisons.
#[derive(Debug, Clone)]
pub struct MemoryStream {
    records: Vec<Record>,
    passes: usize,
}

impl MemoryStream {
    pub fn new(records: Vec<Record>) -> Self {
        Self { records, passes: 0 }
    }

    /// The clients of `instance` in index order.
    pub fn from_instance(instance: &MetricInstance) -> Self {
        let records = instance
            .clients()
            .iter()
            .map(|&c| Record { id: c, payload: payload_of(instance, c) })
            .collect();
        Self::new(records)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

fn payload_of(instance: &MetricInstance, point: usize) -> Payload {
    match instance.metric() {
        Metric::Euclidean { coords } => Payload::Coords(coords[point].clone().expect("validated instance")),
        m => Payload::Row((0..m.universe()).map(|q| m.dist(point, q)).collect()),
    }
}

impl PointStream for MemoryStream {
    fn pass(&mut self, visit: &mut dyn FnMut(usize, &Record) -> Result<()>) -> Result<()> {
        self.passes += 1;
        for (i, r) in self.records.iter().enumerate() {
            visit(i, r)?;
        }
        Ok(())
    }

    fn passes(&self) -> usize {
        self.passes
    }
}

/// Newline-delimited records read from disk on every pass. A line is either
/// `id v1 v2 ...` or a JSON object `{"id": .., "coords": [..]}` /
/// `{"id": .., "row": [..]}`. Blank lines and lines starting with `#` are
/// skipped.
#[derive(Debug, Clone)]
pub struct FileStream {
    path: PathBuf,
    kind: PayloadKind,
    passes: usize,
}

#[derive(Deserialize)]
struct JsonRecord {
    id: usize,
    coords: Option<Vec<f64>>,
    row: Option<Vec<f64>>,
}

impl FileStream {
    pub fn open(path: impl AsRef<Path>, kind: PayloadKind) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        File::open(&path)?;
        Ok(Self { path, kind, passes: 0 })
    }

    fn parse(&self, line: &str, lineno: usize) -> Result<Record> {
        let bad = |msg: String| Error::Parse(format!("{}:{lineno}: {msg}", self.path.display()));
        if line.starts_with('{') {
            let r: JsonRecord = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
            let payload = match (r.coords, r.row) {
                (Some(c), None) => Payload::Coords(c),
                (None, Some(w)) => Payload::Row(w),
                _ => return Err(bad("record needs exactly one of \"coords\" and \"row\"".into())),
            };
            return Ok(Record { id: r.id, payload });
        }
        let mut it = line.split_whitespace();
        let id = it.next().unwrap_or_default().parse::<usize>().map_err(|e| bad(format!("record id: {e}")))?;
        let values = it
            .enumerate()
            .map(|(i, v)| v.parse::<f64>().map_err(|e| bad(format!("value {}: {e}", i + 1))))
            .collect::<Result<Vec<f64>>>()?;
        let payload = match self.kind {
            PayloadKind::Coords => Payload::Coords(values),
            PayloadKind::Row => Payload::Row(values),
        };
        Ok(Record { id, payload })
    }
}

impl PointStream for FileStream {
    fn pass(&mut self, visit: &mut dyn FnMut(usize, &Record) -> Result<()>) -> Result<()> {
        self.passes += 1;
        let reader = BufReader::new(File::open(&self.path)?);
        let mut ordinal = 0;
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let rec = self.parse(t, i + 1)?;
            visit(ordinal, &rec)?;
            ordinal += 1;
        }
        Ok(())
    }

    fn passes(&self) -> usize {
        self.passes
    }
}

/// Write the clients of `instance` as a whitespace stream file.
pub fn write_stream_file(instance: &MetricInstance, path: impl AsRef<Path>) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::BufWriter::new(File::create(path)?);
    for &c in instance.clients() {
        let (Payload::Coords(v) | Payload::Row(v)) = payload_of(instance, c);
        write!(out, "{c}")?;
        for x in v {
            write!(out, " {x:?}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

/// Resident side of a stream: facilities and the exponent.
#[derive(Debug, Clone)]
pub struct StreamContext {
    ell: f64,
    kind: PayloadKind,
    /// Facility point ids.
    facilities: Vec<usize>,
    /// Facility coordinates in coords mode.
    facility_coords: Vec<Vec<f64>>,
}

impl StreamContext {
    pub fn from_instance(instance: &MetricInstance) -> Self {
        let (kind, facility_coords) = match instance.metric() {
            Metric::Euclidean { coords } => (
                PayloadKind::Coords,
                instance.facilities().iter().map(|&f| coords[f].clone().expect("validated instance")).collect(),
            ),
            _ => (PayloadKind::Row, Vec::new()),
        };
        Self { ell: instance.ell(), kind, facilities: instance.facilities().to_vec(), facility_coords }
    }

    pub fn kind(&self) -> PayloadKind {
        self.kind
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    pub fn n_facilities(&self) -> usize {
        self.facilities.len()
    }

    pub fn facility_point(&self, f: usize) -> usize {
        self.facilities[f]
    }

    /// `d(record, facility f)`.
    pub fn facility_dist(&self, rec: &Record, f: usize) -> Result<f64> {
        match &rec.payload {
            Payload::Coords(c) => {
                let fc = self.facility_coords.get(f).ok_or_else(|| domain!("coords record in a row-mode stream"))?;
                if fc.len() != c.len() {
                    return Err(domain!("record {} has dimension {}, facilities have {}", rec.id, c.len(), fc.len()));
                }
                Ok(euclidean(c, fc))
            }
            Payload::Row(row) => row_entry(rec, row, self.facilities[f]),
        }
    }

    pub fn facility_cost(&self, rec: &Record, f: usize) -> Result<f64> {
        Ok(power(self.facility_dist(rec, f)?, self.ell))
    }

    /// `d(a, b)` between two client records.
    pub fn record_dist(&self, a: &Record, b: &Record) -> Result<f64> {
        match (&a.payload, &b.payload) {
            (Payload::Coords(x), Payload::Coords(y)) => Ok(euclidean(x, y)),
            (Payload::Row(row), _) => row_entry(a, row, b.id),
            _ => Err(domain!("records {} and {} have incompatible payloads", a.id, b.id)),
        }
    }

    /// Nearest center (facility indices) as `(position, distance)`; ties to
    /// the smaller position.
    pub fn nearest(&self, rec: &Record, centers: &[usize]) -> Result<(usize, f64)> {
        let mut best = (0, f64::INFINITY);
        for (i, &f) in centers.iter().enumerate() {
            let d = self.facility_dist(rec, f)?;
            if d < best.1 {
                best = (i, d);
            }
        }
        Ok(best)
    }

    /// The `k` nearest facilities, ties to the lower index.
    pub fn k_nearest(&self, rec: &Record, k: usize) -> Result<Vec<usize>> {
        let mut order = (0..self.n_facilities()).map(|f| Ok((self.facility_dist(rec, f)?, f))).collect::<Result<Vec<_>>>()?;
        order.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        order.truncate(k);
        Ok(order.into_iter().map(|(_, f)| f).collect())
    }
}

fn row_entry(rec: &Record, row: &[f64], point: usize) -> Result<f64> {
    row.get(point)
        .copied()
        .ok_or_else(|| domain!("record {} has {} distances, point {point} is out of range", rec.id, row.len()))
}

/// Peak count of stored records and graph vertices.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MemoryMeter {
    peak: usize,
}

impl MemoryMeter {
    pub fn observe(&mut self, stored: usize) {
        self.peak = self.peak.max(stored);
    }

    pub fn peak(&self) -> usize {
        self.peak
    }
}

/// How pass 1 picks the seed set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StreamSeeding {
    /// k-means++ with this many centers on a uniform sample of
    /// `8 * centers * ceil(log2(n + 1))` records.
    Sample { centers: usize },
    /// Use the records at these stream positions.
    Fixed(Vec<usize>),
}

pub const SAMPLE_SEEDING_NOTE: &str =
    "one-pass uniform sample of 8k*ceil(log2(n+1)) records, then k-means++ on the sample; no constant-factor guarantee";

/// Pass-1 sample size after `seen` records.
pub fn seed_sample_capacity(centers: usize, seen: usize) -> usize {
    let log = (usize::BITS - seen.leading_zeros()) as usize; // ceil(log2(seen + 1))
    8 * centers * log
}

/// Output of [`stream_list`].
#[derive(Debug, Clone)]
pub struct StreamList {
    /// Sample positions refer to stream ordinals.
    pub list: CandidateList,
    pub seeds: Vec<Record>,
    pub n_records: usize,
    pub passes: usize,
    pub peak_records: usize,
    pub seeding_note: String,
}

#[derive(Debug, Clone)]
struct Keyed {
    key: f64,
    ordinal: usize,
    record: Record,
}

impl PartialEq for Keyed {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Keyed {}
impl PartialOrd for Keyed {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Keyed {
    fn cmp(&self, o: &Self) -> Ordering {
        self.key.total_cmp(&o.key).then(self.ordinal.cmp(&o.ordinal))
    }
}

/// Three passes: seeding, one weighted reservoir per sample slot, then the
/// sampled records and their `k` nearest facilities. Slot `s` of repetition
/// `r` uses the same generator as the offline reservoir scheme, so with
/// fixed seeds both produce identical pools.
pub fn stream_list<S: PointStream + ?Sized>(
    stream: &mut S,
    ctx: &StreamContext,
    k: usize,
    params: &AlgorithmParams,
    seeding: &StreamSeeding,
    seed: u64,
) -> Result<StreamList> {
    params.validate()?;
    if k == 0 {
        return Err(domain!("k must be at least 1"));
    }
    if k > ctx.n_facilities() {
        return Err(Error::Infeasible(format!("k = {k} exceeds the {} facilities", ctx.n_facilities())));
    }
    let start = stream.passes();
    let mut meter = MemoryMeter::default();

    // pass 1: seeds
    let mut n = 0usize;
    let (seed_ordinals, seeds, note) = match seeding {
        StreamSeeding::Sample { centers } => {
            let centers = *centers;
            let mut rng = substream(seed, &[tags::STREAM_SEED_SAMPLE]);
            let mut heap: BinaryHeap<Keyed> = BinaryHeap::new();
            stream.pass(&mut |i, rec| {
                n += 1;
                heap.push(Keyed { key: rng.random::<f64>(), ordinal: i, record: rec.clone() });
                if heap.len() > seed_sample_capacity(centers, n) {
                    heap.pop();
                }
                meter.observe(heap.len());
                Ok(())
            })?;
            let mut sample: Vec<Keyed> = heap.into_vec();
            sample.sort_unstable_by_key(|s| s.ordinal);
            if centers > sample.len() {
                return Err(Error::Infeasible(format!("cannot seed {centers} centers from {n} records")));
            }
            let costs = sample
                .iter()
                .map(|a| sample.iter().map(|b| Ok(power(ctx.record_dist(&a.record, &b.record)?, ctx.ell))).collect())
                .collect::<Result<Vec<Vec<f64>>>>()?;
            let (picks, _) =
                kmeanspp_by(sample.len(), centers, |a, b| costs[a][b], &mut substream(seed, &[tags::SEEDING]))?;
            let ords = picks.iter().map(|&p| sample[p].ordinal).collect::<Vec<_>>();
            let recs = picks.iter().map(|&p| sample[p].record.clone()).collect::<Vec<_>>();
            (ords, recs, SAMPLE_SEEDING_NOTE.to_string())
        }
        StreamSeeding::Fixed(ords) => {
            let want: HashMap<usize, usize> = ords.iter().enumerate().map(|(pos, &o)| (o, pos)).collect();
            let mut found: Vec<Option<Record>> = vec![None; ords.len()];
            stream.pass(&mut |i, rec| {
                n += 1;
                if let Some(&pos) = want.get(&i) {
                    found[pos] = Some(rec.clone());
                }
                Ok(())
            })?;
            meter.observe(found.len());
            // repeated ordinals share one record
            let recs = ords
                .iter()
                .map(|o| found[want[o]].clone().ok_or_else(|| domain!("seed position {o} is past the end of the stream")))
                .collect::<Result<Vec<_>>>()?;
            (ords.clone(), recs, "fixed seeds".to_string())
        }
    };
    if k > n {
        return Err(Error::Infeasible(format!("k = {k} exceeds the {n} clients")));
    }

    // pass 2: one reservoir per slot
    let draws = params.eta * k;
    let n_slots = params.repetitions * draws;
    let mut slots: Vec<(WeightedReservoir<usize>, SolverRng)> = (0..n_slots)
        .map(|i| {
            let (r, s) = (i / draws, i % draws);
            (WeightedReservoir::new(), substream(seed, &[tags::REPETITION, r as u64, tags::SLOT, s as u64]))
        })
        .collect();
    meter.observe(seeds.len() + n_slots);
    stream.pass(&mut |i, rec| {
        let mut d = f64::INFINITY;
        for s in &seeds {
            let x = ctx.record_dist(rec, s)?;
            if x < d {
                d = x;
            }
        }
        let w = power(d, ctx.ell);
        for (slot, rng) in slots.iter_mut() {
            slot.offer(i, w, rng);
        }
        Ok(())
    })?;
    let picked: Vec<usize> = slots.into_iter().map(|(s, _)| s.finish().expect("non-empty stream")).collect();

    // pass 3: sampled records, held per slot
    let mut slots_of: HashMap<usize, Vec<usize>> = HashMap::new();
    for (slot, &o) in picked.iter().enumerate() {
        slots_of.entry(o).or_default().push(slot);
    }
    let mut held: Vec<Option<Record>> = vec![None; n_slots];
    stream.pass(&mut |i, rec| {
        if let Some(ss) = slots_of.get(&i) {
            for &s in ss {
                held[s] = Some(rec.clone());
            }
        }
        Ok(())
    })?;
    meter.observe(seeds.len() + n_slots);

    let mut nearest: HashMap<usize, Vec<usize>> = HashMap::new();
    for (o, rec) in seed_ordinals.iter().zip(&seeds) {
        if let Entry::Vacant(e) = nearest.entry(*o) {
            e.insert(ctx.k_nearest(rec, k)?);
        }
    }
    for (slot, rec) in held.iter().enumerate() {
        if let Entry::Vacant(e) = nearest.entry(picked[slot]) {
            e.insert(ctx.k_nearest(rec.as_ref().expect("filled in pass 3"), k)?);
        }
    }
    let repetitions = (0..params.repetitions)
        .map(|r| {
            let mut samples = picked[r * draws..(r + 1) * draws].to_vec();
            samples.extend_from_slice(&seed_ordinals);
            let mut pool: Vec<usize> = samples.iter().flat_map(|o| nearest[o].iter().copied()).collect();
            pool.sort_unstable();
            pool.dedup();
            Repetition { index: r, samples, pool }
        })
        .collect();
    Ok(StreamList {
        list: CandidateList::new(k, seed_ordinals, repetitions, params.dedup),
        seeds,
        n_records: n,
        passes: stream.passes() - start,
        peak_records: meter.peak(),
        seeding_note: note,
    })
}

/// Quantized cost to one center; `None` is the zero-distance bucket.
pub type Bucket = Option<i64>;

/// One class of clients sharing a distance signature.
#[derive(Debug, Clone, PartialEq)]
pub struct RepVertex {
    pub signature: Vec<Bucket>,
    /// `n_v`: clients mapped here.
    pub count: usize,
    /// Stored cost to each center.
    pub weights: Vec<f64>,
}

/// Centers on the left, signature classes on the right.
#[derive(Debug, Clone)]
pub struct RepresentativeGraph {
    centers: Vec<usize>,
    epsilon: f64,
    log_base: f64,
    vertices: Vec<RepVertex>,
    index: HashMap<Vec<Bucket>, usize>,
}

impl RepresentativeGraph {
    pub fn new(centers: &CenterSet, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(domain!("epsilon must be in (0, 1), got {epsilon}"));
        }
        Ok(Self {
            centers: centers.as_slice().to_vec(),
            epsilon,
            log_base: epsilon.ln_1p(),
            vertices: Vec::new(),
            index: HashMap::new(),
        })
    }

    pub fn centers(&self) -> &[usize] {
        &self.centers
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn vertices(&self) -> &[RepVertex] {
        &self.vertices
    }

    /// `sum n_v`.
    pub fn total(&self) -> usize {
        self.vertices.iter().map(|v| v.count).sum()
    }

    fn bucket(&self, cost: f64) -> Bucket {
        (cost > 0.0).then(|| (cost.ln() / self.log_base).floor() as i64)
    }

    /// Geometric midpoint of the bucket.
    pub fn bucket_weight(&self, b: Bucket) -> f64 {
        b.map_or(0.0, |b| ((b as f64 + 0.5) * self.log_base).exp())
    }

    pub fn signature(&self, ctx: &StreamContext, rec: &Record) -> Result<Vec<Bucket>> {
        self.centers.iter().map(|&f| Ok(self.bucket(ctx.facility_cost(rec, f)?))).collect()
    }

    /// `phi(rec)`, if its class exists.
    pub fn vertex_of(&self, ctx: &StreamContext, rec: &Record) -> Result<Option<usize>> {
        Ok(self.index.get(&self.signature(ctx, rec)?).copied())
    }

    /// Add one client; returns its vertex.
    pub fn add(&mut self, ctx: &StreamContext, rec: &Record) -> Result<usize> {
        let sig = self.signature(ctx, rec)?;
        if let Some(&v) = self.index.get(&sig) {
            self.vertices[v].count += 1;
            return Ok(v);
        }
        let weights = sig.iter().map(|&b| self.bucket_weight(b)).collect();
        let v = self.vertices.len();
        self.vertices.push(RepVertex { signature: sig.clone(), count: 1, weights });
        self.index.insert(sig, v);
        Ok(v)
    }
}

/// One pass.
pub fn build_representative_graph<S: PointStream + ?Sized>(
    stream: &mut S,
    ctx: &StreamContext,
    centers: &CenterSet,
    epsilon: f64,
) -> Result<RepresentativeGraph> {
    let mut g = RepresentativeGraph::new(centers, epsilon)?;
    stream.pass(&mut |_, rec| g.add(ctx, rec).map(|_| ()))?;
    Ok(g)
}

/// Flow on the representative graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphFlow {
    /// `counts[v][i]`: clients of class `v` sent to center `i`.
    pub counts: Vec<Vec<usize>>,
    /// Cost under the stored weights.
    pub cost: f64,
    pub demand_assignment: Vec<usize>,
}

/// Min-cost flow over the classes, every class counting as `n_v` clients.
pub fn solve_graph_flow(graph: &RepresentativeGraph, spec: &ConstraintSpec) -> Result<GraphFlow> {
    let k = graph.centers.len();
    let n = graph.total();
    spec.validate(n, k)?;
    let (r, gather) = match spec {
        ConstraintSpec::RGather { r } => (r, true),
        ConstraintSpec::RCapacity { r } => (r, false),
        other => return Err(domain!("{} constraints are not solved by flow", other.name())),
    };
    let perms = distinct_permutations(r);
    let solved = perms
        .par_iter()
        .map(|perm| {
            let nv = graph.vertices.len();
            let (source, sink) = (0, k + nv + 1);
            let mut net = FlowNetwork::new(k + nv + 2, source, sink);
            for (i, &b) in perm.iter().enumerate() {
                if gather {
                    net.add_arc(source, 1 + i, b as i64, n as i64, 0.0);
                } else {
                    net.add_arc(source, 1 + i, 0, b as i64, 0.0);
                }
            }
            let mut arcs = Vec::with_capacity(k * nv);
            for (v, vert) in graph.vertices.iter().enumerate() {
                for i in 0..k {
                    arcs.push((net.add_arc(1 + i, 1 + k + v, 0, vert.count as i64, vert.weights[i]), v, i));
                }
                net.add_arc(1 + k + v, sink, vert.count as i64, vert.count as i64, 0.0);
            }
            let flow = min_cost_flow(&net)?;
            let mut counts = vec![vec![0usize; k]; nv];
            for &(a, v, i) in &arcs {
                counts[v][i] = flow.flows[a] as usize;
            }
            Ok(GraphFlow { counts, cost: flow.cost, demand_assignment: perm.clone() })
        })
        .collect::<Vec<Result<GraphFlow>>>();
    let mut best: Option<GraphFlow> = None;
    for s in solved {
        let s = s?;
        if best.as_ref().is_none_or(|b| s.cost < b.cost) {
            best = Some(s);
        }
    }
    best.ok_or_else(|| Error::Internal("no bound assignment".into()))
}

/// Hands out a graph flow's per-class quotas to actual clients, first center
/// with quota left, in stream order.
struct Realizer<'a> {
    graph: &'a RepresentativeGraph,
    left: Vec<Vec<usize>>,
    cost: f64,
}

impl<'a> Realizer<'a> {
    fn new(graph: &'a RepresentativeGraph, flow: &GraphFlow) -> Self {
        Self { graph, left: flow.counts.clone(), cost: 0.0 }
    }

    fn assign(&mut self, ctx: &StreamContext, rec: &Record) -> Result<usize> {
        let v = self
            .graph
            .vertex_of(ctx, rec)?
            .ok_or_else(|| Error::Internal(format!("record {} changed between passes", rec.id)))?;
        let i = self.left[v]
            .iter()
            .position(|&q| q > 0)
            .ok_or_else(|| Error::Internal(format!("class {v} ran out of quota")))?;
        self.left[v][i] -= 1;
        self.cost += ctx.facility_cost(rec, self.graph.centers[i])?;
        Ok(i)
    }
}

/// Partition result of a streaming run.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamPartition {
    /// Labels by stream position.
    pub result: PartitionResult,
    /// Record id at each stream position.
    pub ids: Vec<usize>,
    /// Flow cost under the stored weights (flow constraints only).
    pub approx_cost: Option<f64>,
    pub passes: usize,
    pub peak_records: usize,
}

/// Two passes. Size constraints: build the representative graph, solve its
/// flow, then realize it. Outliers: keep the `m` farthest clients, then
/// assign the rest to their nearest center.
pub fn stream_partition<S: PointStream + ?Sized>(
    stream: &mut S,
    ctx: &StreamContext,
    centers: &CenterSet,
    spec: &ConstraintSpec,
    epsilon: f64,
) -> Result<StreamPartition> {
    let start = stream.passes();
    let k = centers.k();
    match spec {
        ConstraintSpec::RGather { .. } | ConstraintSpec::RCapacity { .. } => {
            let graph = build_representative_graph(stream, ctx, centers, epsilon)?;
            let flow = solve_graph_flow(&graph, spec)?;
            let mut real = Realizer::new(&graph, &flow);
            let mut labels = Vec::with_capacity(graph.total());
            let mut ids = Vec::with_capacity(graph.total());
            stream.pass(&mut |_, rec| {
                labels.push(real.assign(ctx, rec)?);
                ids.push(rec.id);
                Ok(())
            })?;
            Ok(StreamPartition {
                result: PartitionResult {
                    clustering: Clustering::from_labels(labels, k)?,
                    cost: real.cost,
                    demand_assignment: Some(flow.demand_assignment.clone()),
                },
                ids,
                approx_cost: Some(flow.cost),
                passes: stream.passes() - start,
                peak_records: graph.vertices.len(),
            })
        }
        ConstraintSpec::Outlier { .. } | ConstraintSpec::Unconstrained => {
            let m = spec.outliers();
            let mut far = FarthestM::new(m);
            let mut n = 0;
            stream.pass(&mut |i, rec| {
                n += 1;
                far.offer(ctx.nearest(rec, centers.as_slice())?.1, i);
                Ok(())
            })?;
            spec.validate(n, k)?;
            let (result, ids) = voronoi_pass(stream, ctx, centers, &far.into_set())?;
            Ok(StreamPartition { result, ids, approx_cost: None, passes: stream.passes() - start, peak_records: m })
        }
    }
}

/// Bounded heap of the `m` largest `(distance, position)` pairs.
struct FarthestM {
    m: usize,
    heap: BinaryHeap<std::cmp::Reverse<(OrdF64, usize)>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct OrdF64(f64);
impl Eq for OrdF64 {}
impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for OrdF64 {
    fn cmp(&self, o: &Self) -> Ordering {
        self.0.total_cmp(&o.0)
    }
}

impl FarthestM {
    fn new(m: usize) -> Self {
        Self { m, heap: BinaryHeap::with_capacity(m + 1) }
    }

    fn offer(&mut self, d: f64, ordinal: usize) {
        if self.m == 0 {
            return;
        }
        self.heap.push(std::cmp::Reverse((OrdF64(d), ordinal)));
        if self.heap.len() > self.m {
            self.heap.pop();
        }
    }

    fn dropped_cost(&self, ell: f64) -> f64 {
        self.heap.iter().map(|r| power((r.0).0 .0, ell)).sum()
    }

    fn into_set(self) -> std::collections::HashSet<usize> {
        self.heap.into_iter().map(|r| (r.0).1).collect()
    }
}

fn voronoi_pass<S: PointStream + ?Sized>(
    stream: &mut S,
    ctx: &StreamContext,
    centers: &CenterSet,
    excluded: &std::collections::HashSet<usize>,
) -> Result<(PartitionResult, Vec<usize>)> {
    let mut labels = Vec::new();
    let mut ids = Vec::new();
    let mut cost = 0.0;
    stream.pass(&mut |i, rec| {
        ids.push(rec.id);
        if excluded.contains(&i) {
            labels.push(None);
        } else {
            let (j, d) = ctx.nearest(rec, centers.as_slice())?;
            cost += power(d, ctx.ell);
            labels.push(Some(j));
        }
        Ok(())
    })?;
    let clustering = Clustering::new(labels, centers.k())?;
    Ok((PartitionResult { clustering, cost, demand_assignment: None }, ids))
}

/// Output of [`stream_solve`].
#[derive(Debug, Clone)]
pub struct StreamSolution {
    /// Clustering is by stream position.
    pub solution: Solution,
    pub ids: Vec<usize>,
    pub passes: usize,
    pub peak_records: usize,
}

/// List passes, then every candidate's partition batched through shared
/// passes: 3 + 3 for size constraints (graphs, true costs, winner), 3 + 2
/// for outliers (farthest sets and costs, winner).
#[allow(clippy::too_many_arguments)]
pub fn stream_solve<S: PointStream + ?Sized>(
    stream: &mut S,
    ctx: &StreamContext,
    k: usize,
    spec: &ConstraintSpec,
    params: &AlgorithmParams,
    epsilon: f64,
    seeding: Option<StreamSeeding>,
    seed: u64,
) -> Result<StreamSolution> {
    let start = stream.passes();
    let seeding = match seeding {
        Some(s) => s,
        None => StreamSeeding::Sample { centers: k + spec.outliers() },
    };
    let sl = stream_list(stream, ctx, k, params, &seeding, seed)?;
    spec.validate(sl.n_records, k)?;
    let mut meter = MemoryMeter::default();
    meter.observe(sl.peak_records);
    let candidates: Vec<_> = sl.list.iter().collect();
    if candidates.is_empty() {
        return Err(Error::Internal("candidate list is empty".into()));
    }
    let order = |a: (f64, usize, u64), b: (f64, usize, u64)| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2)));

    let (winner, result, ids) = match spec {
        ConstraintSpec::RGather { .. } | ConstraintSpec::RCapacity { .. } => {
            let mut graphs =
                candidates.iter().map(|c| RepresentativeGraph::new(&c.centers, epsilon)).collect::<Result<Vec<_>>>()?;
            stream.pass(&mut |_, rec| {
                for g in graphs.iter_mut() {
                    g.add(ctx, rec)?;
                }
                Ok(())
            })?;
            meter.observe(graphs.iter().map(|g| g.vertices.len()).sum());
            let flows = graphs.par_iter().map(|g| solve_graph_flow(g, spec)).collect::<Result<Vec<_>>>()?;
            let mut realizers: Vec<Realizer> = graphs.iter().zip(&flows).map(|(g, f)| Realizer::new(g, f)).collect();
            stream.pass(&mut |_, rec| {
                for r in realizers.iter_mut() {
                    r.assign(ctx, rec)?;
                }
                Ok(())
            })?;
            let best = (0..candidates.len())
                .min_by(|&a, &b| {
                    let ca = &candidates[a];
                    let cb = &candidates[b];
                    order((realizers[a].cost, ca.repetition, ca.index), (realizers[b].cost, cb.repetition, cb.index))
                })
                .expect("non-empty");
            let mut real = Realizer::new(&graphs[best], &flows[best]);
            let mut labels = Vec::with_capacity(sl.n_records);
            let mut ids = Vec::with_capacity(sl.n_records);
            stream.pass(&mut |_, rec| {
                labels.push(real.assign(ctx, rec)?);
                ids.push(rec.id);
                Ok(())
            })?;
            let result = PartitionResult {
                clustering: Clustering::from_labels(labels, k)?,
                cost: real.cost,
                demand_assignment: Some(flows[best].demand_assignment.clone()),
            };
            (best, result, ids)
        }
        ConstraintSpec::Outlier { .. } | ConstraintSpec::Unconstrained => {
            let m = spec.outliers();
            let mut state: Vec<(FarthestM, f64)> = candidates.iter().map(|_| (FarthestM::new(m), 0.0)).collect();
            stream.pass(&mut |i, rec| {
                for (c, (far, total)) in candidates.iter().zip(state.iter_mut()) {
                    let d = ctx.nearest(rec, c.centers.as_slice())?.1;
                    *total += power(d, ctx.ell);
                    far.offer(d, i);
                }
                Ok(())
            })?;
            meter.observe(candidates.len() * m);
            let costs: Vec<f64> = state.iter().map(|(far, total)| total - far.dropped_cost(ctx.ell)).collect();
            let best = (0..candidates.len())
                .min_by(|&a, &b| {
                    let ca = &candidates[a];
                    let cb = &candidates[b];
                    order((costs[a], ca.repetition, ca.index), (costs[b], cb.repetition, cb.index))
                })
                .expect("non-empty");
            let far = state.swap_remove(best).0;
            let (result, ids) = voronoi_pass(stream, ctx, &candidates[best].centers, &far.into_set())?;
            (best, result, ids)
        }
    };
    let cand = &candidates[winner];
    Ok(StreamSolution {
        solution: Solution {
            centers: cand.centers.clone(),
            clustering: result.clustering,
            cost: result.cost,
            provenance: Provenance { repetition: cand.repetition, candidate: cand.index, seed },
            candidates_evaluated: candidates.len() as u64,
            demand_assignment: result.demand_assignment,
            seeding_note: sl.seeding_note,
        },
        ids,
        passes: stream.passes() - start,
        peak_records: meter.peak(),
    })
}
