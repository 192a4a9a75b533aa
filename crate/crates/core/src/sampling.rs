//! D^ell sampling, k-means++ style seeding, one-pass weighted reservoirs and
//! the seeded generator hierarchy.
//!
//! Every randomized routine takes an explicit generator. Generators are
//! ChaCha8 streams derived from `(master seed, path)` by [`substream`], so a
//! repetition or reservoir slot draws the same numbers whether it runs alone,
//! in parallel, or inside a streaming pass.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{infeasible, Result};
use crate::metric::{nearest_of, power, MetricInstance};

/// The pinned, portable generator used throughout.
pub type SolverRng = ChaCha8Rng;

/// Path tags for [`substream`].
pub mod tags {
    pub const SEEDING: u64 = 1;
    pub const REPETITION: u64 = 2;
    pub const SLOT: u64 = 3;
    pub const STREAM_SEED_SAMPLE: u64 = 4;
    pub const GENERATOR: u64 = 5;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent generator for `(master, path)`.
pub fn substream(master: u64, path: &[u64]) -> SolverRng {
    let mut state = splitmix64(master);
    for &p in path {
        state = splitmix64(state ^ splitmix64(p.wrapping_add(0x632B_E59B_D9B4_E019)));
    }
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    SolverRng::from_seed(seed)
}

/// Exp(1) variate.
#[inline]
fn exp1<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    -(1.0 - rng.random::<f64>()).ln()
}

/// `min_{f in F} d(f, x)^ell` for every client, with their sum.
#[derive(Debug, Clone, PartialEq)]
pub struct DlDistribution {
    weights: Vec<f64>,
    cumulative: Vec<f64>,
    total: f64,
}

impl DlDistribution {
    pub fn from_weights(weights: Vec<f64>) -> Self {
        let mut acc = 0.0;
        let cumulative = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        Self { weights, cumulative, total: acc }
    }

    /// Distribution over all clients w.r.t. the center points (point ids).
    /// An empty center set gives the uniform distribution.
    pub fn for_clients(instance: &MetricInstance, centers: &[usize]) -> Self {
        let weights = if centers.is_empty() {
            vec![0.0; instance.n_clients()]
        } else {
            (0..instance.n_clients())
                .map(|c| power(nearest_of(instance, centers, instance.client_point(c)).1, instance.ell()))
                .collect()
        };
        Self::from_weights(weights)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Probability of drawing index `i`.
    pub fn probability(&self, i: usize) -> f64 {
        if self.total > 0.0 {
            self.weights[i] / self.total
        } else {
            1.0 / self.weights.len() as f64
        }
    }

    /// Draw an index. Zero total weight falls back to uniform.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let n = self.weights.len();
        if self.total <= 0.0 {
            return rng.random_range(0..n);
        }
        let u = rng.random::<f64>() * self.total;
        let i = self.cumulative.partition_point(|&c| c <= u);
        if i < n {
            i
        } else {
            // rounding pushed u to the very top; take the last positive weight
            self.weights.iter().rposition(|&w| w > 0.0).expect("positive total")
        }
    }
}

/// One D^ell sample from the clients w.r.t. `centers` (point ids).
pub fn dl_sample<R: Rng + ?Sized>(instance: &MetricInstance, centers: &[usize], rng: &mut R) -> usize {
    DlDistribution::for_clients(instance, centers).sample(rng)
}

/// Outcome of the seeding step.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedingResult {
    /// Chosen client indices (a multiset when the distribution degenerates).
    pub centers: Vec<usize>,
    /// `Phi(centers, pool)`.
    pub cost: f64,
    pub alpha_note: String,
}

pub const KMEANSPP_NOTE: &str = "k-means++ seeding: O(4^ell log k)-approximation in expectation";

/// k-means++ style seeding over all clients.
pub fn seed_kmeanspp<R: Rng + ?Sized>(instance: &MetricInstance, k: usize, rng: &mut R) -> Result<SeedingResult> {
    let pool: Vec<usize> = (0..instance.n_clients()).collect();
    seed_kmeanspp_pool(instance, &pool, k, rng)
}

/// k-means++ style seeding restricted to the clients in `pool`: the first
/// center is uniform, every next one is D^ell-sampled against those chosen.
pub fn seed_kmeanspp_pool<R: Rng + ?Sized>(
    instance: &MetricInstance,
    pool: &[usize],
    k: usize,
    rng: &mut R,
) -> Result<SeedingResult> {
    let ell = instance.ell();
    let (picks, cost) = kmeanspp_by(pool.len(), k, |a, b| power(instance.dist(instance.client_point(pool[a]), instance.client_point(pool[b])), ell), rng)?;
    Ok(SeedingResult { centers: picks.into_iter().map(|i| pool[i]).collect(), cost, alpha_note: KMEANSPP_NOTE.to_string() })
}

/// k-means++ over `n` abstract points with `cost(chosen, other)`; returns the
/// chosen positions and the final total cost.
pub fn kmeanspp_by<R, F>(n: usize, k: usize, cost: F, rng: &mut R) -> Result<(Vec<usize>, f64)>
where
    R: Rng + ?Sized,
    F: Fn(usize, usize) -> f64,
{
    if k == 0 {
        return Err(infeasible!("seeding needs k >= 1"));
    }
    if k > n {
        return Err(infeasible!("cannot seed {k} centers from {n} clients"));
    }
    let mut centers = Vec::with_capacity(k);
    let mut weights = vec![f64::INFINITY; n];
    let mut pick = rng.random_range(0..n);
    loop {
        centers.push(pick);
        for (x, w) in weights.iter_mut().enumerate() {
            let d = cost(pick, x);
            if d < *w {
                *w = d;
            }
        }
        if centers.len() == k {
            break;
        }
        pick = DlDistribution::from_weights(weights.clone()).sample(rng);
    }
    Ok((centers, weights.iter().sum()))
}

/// Single-slot weighted reservoir: after offering a stream of
/// `(item, weight)` pairs, holds each item with probability
/// `weight / total weight`.
///
/// Uses exponential keys (`E / w`, smallest wins) with exponential jumps, so
/// a slot only draws random numbers when its sample changes. If no positive
/// weight is ever offered the result is a uniform pick, tracked alongside
/// with a one-slot skip-based uniform reservoir.
#[derive(Debug, Clone)]
pub struct WeightedReservoir<T> {
    chosen: Option<T>,
    key: f64,
    jump: f64,
    uniform: Option<T>,
    seen: u64,
    next_uniform: u64,
    uniform_w: f64,
}

impl<T: Clone> Default for WeightedReservoir<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Clone> WeightedReservoir<T> {
    pub fn new() -> Self {
        Self { chosen: None, key: f64::INFINITY, jump: 0.0, uniform: None, seen: 0, next_uniform: 1, uniform_w: 1.0 }
    }

    fn skip_uniform<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let u = 1.0 - rng.random::<f64>();
        self.uniform_w *= 1.0 - rng.random::<f64>();
        let gap = (u.ln() / (1.0 - self.uniform_w).ln()).floor();
        self.next_uniform = self.seen.saturating_add(gap as u64).saturating_add(1);
    }

    pub fn offer<R: Rng + ?Sized>(&mut self, item: T, weight: f64, rng: &mut R) {
        self.seen += 1;
        if self.seen == self.next_uniform {
            self.uniform = Some(item.clone());
            self.skip_uniform(rng);
        }
        if weight <= 0.0 {
            return;
        }
        if self.chosen.is_none() {
            self.key = exp1(rng) / weight;
            self.chosen = Some(item);
            self.jump = exp1(rng) / self.key;
            return;
        }
        self.jump -= weight;
        if self.jump <= 0.0 {
            // new key is E / w conditioned on beating the current one
            let beat = -(-self.key * weight).exp_m1();
            let e = -(-rng.random::<f64>() * beat).ln_1p();
            self.key = e / weight;
            self.chosen = Some(item);
            self.jump = exp1(rng) / self.key;
        }
    }

    /// Items offered so far.
    pub fn seen(&self) -> u64 {
        self.seen
    }

    pub fn current(&self) -> Option<&T> {
        self.chosen.as_ref().or(self.uniform.as_ref())
    }

    pub fn finish(self) -> Option<T> {
        self.chosen.or(self.uniform)
    }
}

/// One weighted draw from a stream in a single pass.
pub fn weighted_reservoir<T: Clone, I, R>(stream: I, rng: &mut R) -> Option<T>
where
    I: IntoIterator<Item = (T, f64)>,
    R: Rng + ?Sized,
{
    let mut r = WeightedReservoir::new();
    for (item, w) in stream {
        r.offer(item, w, rng);
    }
    r.finish()
}
