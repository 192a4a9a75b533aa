//! Candidate center-set lists.
//!
//! One repetition D^ell-samples a multiset `M` of `eta * k` clients against
//! the seed set `F`, adds `F` itself, collects the pool `T` of every sampled
//! point's `k` nearest facilities, and emits every `k`-subset of `T`. The
//! list is the union over repetitions and is enumerated lazily.

use std::collections::{BTreeSet, HashMap, HashSet};

use itertools::Itertools;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, infeasible, Error, Result};
use crate::metric::{CenterSet, MetricInstance};
use crate::sampling::{seed_kmeanspp, substream, tags, DlDistribution, WeightedReservoir};

/// Largest `eta * k` that theory mode will execute.
pub const DEFAULT_THEORY_CAP: u64 = 1_000_000;
/// Practical-mode repetition count is `min(2^k, MAX_PRACTICAL_REPS)`.
pub const MAX_PRACTICAL_REPS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ListMode {
    Theory,
    #[default]
    Practical,
}

/// How a repetition draws its `eta * k` samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SampleScheme {
    /// Inverse-CDF draws from one generator per repetition.
    #[default]
    InverseCdf,
    /// One weighted reservoir per sample slot, each with its own generator;
    /// draws exactly what the streaming list builder draws.
    ReservoirSlots,
}

/// Exact list-algorithm constants for integral `ell`.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryConstants {
    pub beta: BigRational,
    pub gamma: BigRational,
    pub eta: BigRational,
}

fn exact(x: f64, what: &str) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| domain!("{what} = {x} is not finite"))
}

fn pow3(e: u32) -> BigRational {
    BigRational::from_integer(BigInt::from(3u32).pow(e))
}

impl TheoryConstants {
    /// `beta = 4^(ell-1) (ell^ell 3^(ell^2+4ell+3) / eps^(ell+1) + 1)`,
    /// `gamma = ell^ell 3^(ell^2+5ell+1) / eps^ell`,
    /// `eta = alpha beta gamma k 3^(ell+2) / eps^2`, all exact.
    pub fn compute(k: usize, ell: u32, epsilon: f64, alpha: f64) -> Result<Self> {
        if ell == 0 {
            return Err(domain!("theory constants need ell >= 1"));
        }
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(domain!("epsilon must be in (0, 1], got {epsilon}"));
        }
        let eps = exact(epsilon, "epsilon")?;
        let alpha = exact(alpha, "alpha")?;
        let l = BigRational::from_integer(BigInt::from(ell));
        let l_pow_l = l.pow(ell as i32);
        let e = ell;
        let beta = BigRational::from_integer(BigInt::from(4u32).pow(e - 1))
            * (l_pow_l.clone() * pow3(e * e + 4 * e + 3) / eps.pow(e as i32 + 1) + BigRational::one());
        let gamma = l_pow_l * pow3(e * e + 5 * e + 1) / eps.pow(e as i32);
        let eta = alpha * beta.clone() * gamma.clone() * BigRational::from_integer(BigInt::from(k)) * pow3(e + 2)
            / eps.pow(2);
        Ok(Self { beta, gamma, eta })
    }

    /// `ceil(eta)` as an integer sample count.
    pub fn eta_count(&self) -> BigInt {
        self.eta.ceil().to_integer()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmParams {
    pub epsilon: f64,
    /// Samples per cluster; a repetition draws `eta * k` points.
    pub eta: usize,
    pub repetitions: usize,
    pub mode: ListMode,
    /// Approximation factor credited to the seeding step (theory mode only).
    pub alpha: f64,
    /// Drop center sets already emitted by an earlier repetition.
    pub dedup: bool,
    pub scheme: SampleScheme,
}

impl AlgorithmParams {
    /// `eta = ceil(10 k / eps^2)`, `repetitions = min(2^k, 64)`.
    pub fn practical(k: usize, epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        let eta = (10.0 * k as f64 / (epsilon * epsilon)).ceil() as usize;
        let repetitions = if k >= 6 { MAX_PRACTICAL_REPS } else { (1usize << k).min(MAX_PRACTICAL_REPS) };
        Ok(Self {
            epsilon,
            eta: eta.max(1),
            repetitions,
            mode: ListMode::Practical,
            alpha: 1.0,
            dedup: false,
            scheme: SampleScheme::default(),
        })
    }

    /// Constants straight from the closed forms, `2^k` repetitions. Refused
    /// when `eta * k` exceeds `cap` (see [`DEFAULT_THEORY_CAP`]).
    pub fn theory(k: usize, ell: f64, epsilon: f64, alpha: f64, cap: u64) -> Result<Self> {
        check_epsilon(epsilon)?;
        if ell.fract() != 0.0 || !(1.0..=16.0).contains(&ell) {
            return Err(domain!("theory mode needs a small integral ell, got {ell}"));
        }
        let consts = TheoryConstants::compute(k, ell as u32, epsilon, alpha)?;
        let per_rep = consts.eta_count() * BigInt::from(k);
        let eta = match (per_rep <= BigInt::from(cap), consts.eta_count().to_usize()) {
            (true, Some(e)) => e,
            _ => {
                return Err(Error::Budget(format!(
                    "theory mode needs eta*k = {per_rep} samples per repetition, above the cap {cap}"
                )))
            }
        };
        if k >= 63 || (1u64 << k) > cap {
            return Err(Error::Budget(format!("theory mode needs 2^{k} repetitions")));
        }
        Ok(Self {
            epsilon,
            eta: eta.max(1),
            repetitions: 1 << k,
            mode: ListMode::Theory,
            alpha,
            dedup: false,
            scheme: SampleScheme::default(),
        })
    }

    pub fn with_eta(mut self, eta: usize) -> Self {
        self.eta = eta;
        self
    }

    pub fn with_repetitions(mut self, repetitions: usize) -> Self {
        self.repetitions = repetitions;
        self
    }

    pub fn with_dedup(mut self, dedup: bool) -> Self {
        self.dedup = dedup;
        self
    }

    pub fn with_scheme(mut self, scheme: SampleScheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_epsilon(self.epsilon)?;
        if self.eta == 0 || self.repetitions == 0 {
            return Err(domain!("eta and repetitions must be positive"));
        }
        Ok(())
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon <= 1.0 {
        Ok(())
    } else {
        Err(domain!("epsilon must be in (0, 1], got {epsilon}"))
    }
}

/// The `k` facilities closest to a point, nearest first, ties to the lower index.
pub fn k_nearest_facilities(instance: &MetricInstance, point: usize, k: usize) -> Vec<usize> {
    let mut order: Vec<(f64, usize)> =
        (0..instance.n_facilities()).map(|f| (instance.dist(point, instance.facility_point(f)), f)).collect();
    let by = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    let k = k.min(order.len());
    if k < order.len() {
        order.select_nth_unstable_by(k, by);
        order.truncate(k);
    }
    order.sort_unstable_by(by);
    order.into_iter().map(|(_, f)| f).collect()
}

/// Turn per-cluster nearest sets into a hard center set: cluster `i` takes its
/// anchor when the anchor is among its nearest set, otherwise the
/// nearest-ranked facility of the set not already taken.
pub fn find_facilities(nearest_sets: &[Vec<usize>], anchors: &[usize]) -> Result<CenterSet> {
    let k = anchors.len();
    if nearest_sets.len() != k {
        return Err(domain!("{} nearest sets for {k} anchors", nearest_sets.len()));
    }
    if let Some(i) = nearest_sets.iter().position(|t| t.len() != k) {
        return Err(domain!("nearest set {i} has {} facilities, expected {k}", nearest_sets[i].len()));
    }
    if anchors.iter().collect::<HashSet<_>>().len() != k {
        return Err(domain!("anchors must be distinct"));
    }
    let mut taken: Vec<usize> = Vec::with_capacity(k);
    for (t, &anchor) in nearest_sets.iter().zip(anchors) {
        let pick = if t.contains(&anchor) {
            anchor
        } else {
            *t.iter().find(|f| !taken.contains(f)).expect("k facilities cannot all be taken by k-1 earlier picks")
        };
        taken.push(pick);
    }
    Ok(CenterSet::new_unchecked(taken))
}

/// The sampled multiset and candidate pool of one repetition.
#[derive(Debug, Clone, PartialEq)]
pub struct Repetition {
    pub index: usize,
    /// `M`: sampled client indices followed by the seeds.
    pub samples: Vec<usize>,
    /// `T`: sorted facility indices.
    pub pool: Vec<usize>,
}

impl Repetition {
    /// Number of `k`-subsets of the pool.
    pub fn subset_count(&self, k: usize) -> u128 {
        binomial(self.pool.len() as u128, k as u128)
    }
}

/// A center set from the list with where it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub repetition: usize,
    /// Position among this repetition's subsets.
    pub index: u64,
    pub centers: CenterSet,
}

/// Lazily enumerable union of all repetitions' `k`-subsets.
#[derive(Debug, Clone)]
pub struct CandidateList {
    k: usize,
    seeds: Vec<usize>,
    repetitions: Vec<Repetition>,
    dedup: bool,
}

impl CandidateList {
    pub fn new(k: usize, seeds: Vec<usize>, repetitions: Vec<Repetition>, dedup: bool) -> Self {
        Self { k, seeds, repetitions, dedup }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Seed clients used by every repetition.
    pub fn seeds(&self) -> &[usize] {
        &self.seeds
    }

    pub fn repetitions(&self) -> &[Repetition] {
        &self.repetitions
    }

    /// Upper bound on the number of emitted center sets.
    pub fn len_bound(&self) -> u128 {
        self.repetitions.iter().map(|r| r.subset_count(self.k)).sum()
    }

    /// Union of all pools.
    pub fn facilities(&self) -> BTreeSet<usize> {
        self.repetitions.iter().flat_map(|r| r.pool.iter().copied()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = Candidate> + '_ {
        let k = self.k;
        let mut seen: Option<HashSet<Vec<usize>>> = self.dedup.then(HashSet::new);
        self.repetitions
            .iter()
            .flat_map(move |rep| {
                rep.pool.iter().copied().combinations(k).enumerate().map(move |(i, subset)| (rep.index, i as u64, subset))
            })
            .filter(move |(_, _, subset)| match seen.as_mut() {
                Some(s) => s.insert(subset.clone()),
                None => true,
            })
            .map(|(repetition, index, subset)| Candidate {
                repetition,
                index,
                centers: CenterSet::new_unchecked(subset),
            })
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

fn check_sizes(instance: &MetricInstance, k: usize) -> Result<()> {
    if k == 0 {
        return Err(domain!("k must be at least 1"));
    }
    if k > instance.n_facilities() {
        return Err(infeasible!("k = {k} exceeds the {} facilities", instance.n_facilities()));
    }
    if k > instance.n_clients() {
        return Err(infeasible!("k = {k} exceeds the {} clients", instance.n_clients()));
    }
    Ok(())
}

/// Candidate list with k-means++ seeding of `k` centers on the clients.
pub fn build_list(instance: &MetricInstance, k: usize, params: &AlgorithmParams, seed: u64) -> Result<CandidateList> {
    check_sizes(instance, k)?;
    let seeding = seed_kmeanspp(instance, k, &mut substream(seed, &[tags::SEEDING]))?;
    build_list_from_seeds(instance, k, &seeding.centers, params, seed)
}

/// Candidate list for a given seed set `F` (client indices).
pub fn build_list_from_seeds(
    instance: &MetricInstance,
    k: usize,
    seeds: &[usize],
    params: &AlgorithmParams,
    seed: u64,
) -> Result<CandidateList> {
    check_sizes(instance, k)?;
    params.validate()?;
    if let Some(&s) = seeds.iter().find(|&&s| s >= instance.n_clients()) {
        return Err(domain!("seed client {s} is out of range"));
    }
    let seed_points: Vec<usize> = seeds.iter().map(|&s| instance.client_point(s)).collect();
    let dist = DlDistribution::for_clients(instance, &seed_points);
    let draws = params.eta * k;

    let mut repetitions: Vec<Repetition> = (0..params.repetitions)
        .into_par_iter()
        .map(|r| {
            let mut samples = match params.scheme {
                SampleScheme::InverseCdf => {
                    let mut rng = substream(seed, &[tags::REPETITION, r as u64]);
                    (0..draws).map(|_| dist.sample(&mut rng)).collect::<Vec<_>>()
                }
                SampleScheme::ReservoirSlots => (0..draws)
                    .map(|s| {
                        let mut rng = substream(seed, &[tags::REPETITION, r as u64, tags::SLOT, s as u64]);
                        let mut slot = WeightedReservoir::new();
                        for (c, &w) in dist.weights().iter().enumerate() {
                            slot.offer(c, w, &mut rng);
                        }
                        slot.finish().expect("non-empty client set")
                    })
                    .collect(),
            };
            samples.extend_from_slice(seeds);
            Repetition { index: r, samples, pool: Vec::new() }
        })
        .collect();

    // pools; nearest sets are shared across repetitions
    let mut nearest: HashMap<usize, Vec<usize>> = HashMap::new();
    for rep in &mut repetitions {
        let mut pool = BTreeSet::new();
        for &x in &rep.samples {
            let t = nearest.entry(x).or_insert_with(|| k_nearest_facilities(instance, instance.client_point(x), k));
            pool.extend(t.iter().copied());
        }
        rep.pool = pool.into_iter().collect();
    }
    Ok(CandidateList::new(k, seeds.to_vec(), repetitions, params.dedup))
}

/// Lossy conversion for reporting.
pub fn rational_to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::INFINITY)
}

/// True when `x` is an integer.
pub fn is_integral(x: &BigRational) -> bool {
    x.denom().is_one() || x.is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn line(xs: &[f64], clients: Vec<usize>, facilities: Vec<usize>) -> MetricInstance {
        let coords: BTreeMap<usize, Vec<f64>> = xs.iter().enumerate().map(|(i, &x)| (i, vec![x])).collect();
        MetricInstance::from_coords(clients, facilities, &coords, 1.0).unwrap()
    }

    #[test]
    fn theory_constants_closed_forms() {
        let c = TheoryConstants::compute(1, 1, 1.0, 1.0).unwrap();
        assert_eq!(c.beta, BigRational::from_integer(6562.into()));
        assert_eq!(c.gamma, BigRational::from_integer(2187.into()));
        assert_eq!(c.eta, BigRational::from_integer(BigInt::from(6562u64 * 2187 * 27)));
        // ell = 2, eps = 1/2: beta = 4 (4 * 3^15 * 8 + 1), gamma = 4 * 3^15 * 4
        let c = TheoryConstants::compute(1, 2, 0.5, 1.0).unwrap();
        let p15 = BigInt::from(3u64.pow(15));
        assert_eq!(c.beta, BigRational::from_integer(BigInt::from(4) * (BigInt::from(32) * &p15 + 1)));
        assert_eq!(c.gamma, BigRational::from_integer(BigInt::from(16) * BigInt::from(3u64.pow(15))));
    }

    #[test]
    fn theory_mode_refuses_huge_eta() {
        assert!(matches!(AlgorithmParams::theory(1, 1.0, 1.0, 1.0, DEFAULT_THEORY_CAP), Err(Error::Budget(_))));
    }

    #[test]
    fn practical_defaults() {
        let p = AlgorithmParams::practical(2, 0.5).unwrap();
        assert_eq!(p.eta, 80);
        assert_eq!(p.repetitions, 4);
        assert_eq!(AlgorithmParams::practical(10, 1.0).unwrap().repetitions, 64);
        assert!(AlgorithmParams::practical(2, 0.0).is_err());
    }

    #[test]
    fn two_point_instance_lists_both_facilities() {
        let inst = line(&[0.0, 10.0], vec![0, 1], vec![0, 1]);
        let p = AlgorithmParams::practical(2, 1.0).unwrap();
        let list = build_list(&inst, 2, &p, 1).unwrap();
        assert!(list.iter().any(|c| c.centers.as_slice() == [0, 1]));
    }

    #[test]
    fn k1_single_repetition_counts() {
        let inst = line(&[0.0, 1.0, 2.0, 3.0], vec![0, 1, 2, 3], vec![0, 1, 2, 3]);
        let p = AlgorithmParams::practical(1, 1.0).unwrap().with_eta(1).with_repetitions(1);
        for seed in 0..10 {
            let list = build_list(&inst, 1, &p, seed).unwrap();
            let n = list.iter().count();
            assert!((1..=2).contains(&n));
            assert_eq!(n, list.repetitions()[0].pool.len());
        }
    }

    #[test]
    fn nearest_facilities_basics() {
        let inst = line(&[0.0, 1.0, 2.0, 3.0], vec![0], vec![3, 1, 2]);
        assert_eq!(k_nearest_facilities(&inst, 0, 3), vec![1, 2, 0]);
        assert_eq!(k_nearest_facilities(&inst, 2, 1), vec![2]);
        // point 2 is facility index 2 and comes first; ties (1 and 3 at distance 1) by index
        assert_eq!(k_nearest_facilities(&inst, 2, 3), vec![2, 0, 1]);
    }

    #[test]
    fn find_facilities_verbatim() {
        // f1* = 10, f2* = 20, g = 11, h = 12
        let t = vec![vec![10, 11], vec![10, 12]];
        assert_eq!(find_facilities(&t, &[10, 20]).unwrap().as_slice(), &[10, 12]);
        let t = vec![vec![10, 20], vec![20, 10]];
        assert_eq!(find_facilities(&t, &[10, 20]).unwrap().as_slice(), &[10, 20]);
    }

    #[test]
    fn find_facilities_shape_errors() {
        assert!(find_facilities(&[vec![1, 2]], &[1, 2]).is_err());
        assert!(find_facilities(&[vec![1], vec![2, 3]], &[1, 2]).is_err());
    }

    #[test]
    fn dedup_removes_repeats() {
        let inst = line(&[0.0, 1.0, 5.0, 6.0], vec![0, 1, 2, 3], vec![0, 1, 2, 3]);
        let p = AlgorithmParams::practical(2, 1.0).unwrap().with_repetitions(6);
        let raw = build_list(&inst, 2, &p, 4).unwrap();
        let dd = build_list(&inst, 2, &p.clone().with_dedup(true), 4).unwrap();
        let unique: HashSet<_> = raw.iter().map(|c| c.centers).collect();
        assert_eq!(dd.iter().count(), unique.len());
        assert!(raw.iter().count() as u128 <= raw.len_bound());
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(2, 3), 0);
        assert_eq!(binomial(20, 0), 1);
    }
}
