//! Build the candidate list, partition every candidate, keep the cheapest.

use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::list::{build_list_from_seeds, AlgorithmParams, Candidate, CandidateList};
use crate::metric::{CenterSet, Clustering, MetricInstance};
use crate::partition::{partition, ConstraintSpec};
use crate::sampling::{seed_kmeanspp, substream, tags, KMEANSPP_NOTE};

/// Candidates evaluated per parallel batch.
pub const CHUNK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SolveOptions {
    /// Worker threads; `None` uses the global pool.
    pub parallel: Option<usize>,
    /// Stop after the first batch that contains a zero-cost candidate.
    pub early_exit: bool,
}

/// Where the winning center set came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Provenance {
    pub repetition: usize,
    pub candidate: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub centers: CenterSet,
    pub clustering: Clustering,
    pub cost: f64,
    pub provenance: Provenance,
    pub candidates_evaluated: u64,
    pub demand_assignment: Option<Vec<usize>>,
    pub seeding_note: String,
}

/// Practical parameters for `spec`. Outlier instances get `eta` scaled by
/// `(k + m) / k`, rounded up.
pub fn practical_params(k: usize, spec: &ConstraintSpec, epsilon: f64) -> Result<AlgorithmParams> {
    let p = AlgorithmParams::practical(k, epsilon)?;
    let m = spec.outliers();
    if m == 0 {
        return Ok(p);
    }
    let eta = (p.eta * (k + m)).div_ceil(k);
    Ok(p.with_eta(eta))
}

/// Number of seeds: `k`, or `k + m` (capped at `|C|`) for outliers.
pub fn seed_count(n_clients: usize, k: usize, spec: &ConstraintSpec) -> usize {
    (k + spec.outliers()).min(n_clients.max(k))
}

/// Cost and clustering of one candidate under `spec`.
pub fn evaluate_candidate(instance: &MetricInstance, centers: &CenterSet, spec: &ConstraintSpec) -> Result<(f64, Clustering)> {
    let p = partition(instance, centers, spec)?;
    Ok((p.cost, p.clustering))
}

pub fn solve(
    instance: &MetricInstance,
    k: usize,
    spec: &ConstraintSpec,
    params: &AlgorithmParams,
    seed: u64,
    options: &SolveOptions,
) -> Result<Solution> {
    if k == 0 {
        return Err(domain!("k must be at least 1"));
    }
    spec.validate(instance.n_clients(), k)?;
    let seeding = seed_kmeanspp(
        instance,
        seed_count(instance.n_clients(), k, spec),
        &mut substream(seed, &[tags::SEEDING]),
    )?;
    let list = build_list_from_seeds(instance, k, &seeding.centers, params, seed)?;
    let mut sol = solve_with_list(instance, &list, spec, seed, options)?;
    sol.seeding_note = seeding.alpha_note;
    Ok(sol)
}

/// Evaluate every candidate of `list`; minimum by (cost, repetition, index).
pub fn solve_with_list(
    instance: &MetricInstance,
    list: &CandidateList,
    spec: &ConstraintSpec,
    seed: u64,
    options: &SolveOptions,
) -> Result<Solution> {
    spec.validate(instance.n_clients(), list.k())?;
    let run = || scan(instance, list, spec, options.early_exit);
    let (best, evaluated) = match options.parallel {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Internal(format!("thread pool: {e}")))?
            .install(run)?,
        None => run()?,
    };
    let Some((cand, cost, clustering)) = best else {
        return Err(Error::Internal("candidate list is empty".into()));
    };
    // the flow optimum over bound assignments is re-derived for the winner
    let demand_assignment = partition(instance, &cand.centers, spec)?.demand_assignment;
    Ok(Solution {
        centers: cand.centers,
        clustering,
        cost,
        provenance: Provenance { repetition: cand.repetition, candidate: cand.index, seed },
        candidates_evaluated: evaluated,
        demand_assignment,
        seeding_note: KMEANSPP_NOTE.to_string(),
    })
}

type Best = Option<(Candidate, f64, Clustering)>;

fn better(a: &(Candidate, f64, Clustering), b: &(Candidate, f64, Clustering)) -> bool {
    a.1.total_cmp(&b.1).then(a.0.repetition.cmp(&b.0.repetition)).then(a.0.index.cmp(&b.0.index)).is_lt()
}

fn scan(instance: &MetricInstance, list: &CandidateList, spec: &ConstraintSpec, early_exit: bool) -> Result<(Best, u64)> {
    let mut best: Best = None;
    let mut evaluated = 0u64;
    let mut it = list.iter();
    loop {
        let chunk: Vec<Candidate> = it.by_ref().take(CHUNK).collect();
        if chunk.is_empty() {
            break;
        }
        evaluated += chunk.len() as u64;
        let scored: Vec<(Candidate, f64, Clustering)> = chunk
            .into_par_iter()
            .map(|c| evaluate_candidate(instance, &c.centers, spec).map(|(cost, cl)| (c, cost, cl)))
            .collect::<Result<_>>()?;
        for s in scored {
            if best.as_ref().is_none_or(|b| better(&s, b)) {
                best = Some(s);
            }
        }
        if early_exit && best.as_ref().is_some_and(|b| b.1 == 0.0) {
            break;
        }
    }
    Ok((best, evaluated))
}
