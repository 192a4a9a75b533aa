//! Instance generators: uniform random instances and the decoy-gadget graph
//! on which sampling-based lists cannot beat a `3^ell` factor.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::metric::{euclidean, CenterSet, Clustering, MetricInstance};

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BadInstanceParams {
    pub k: usize,
    /// Clients per gadget.
    pub s: usize,
    pub delta: f64,
    /// Weight of the edges between optimal facilities; default `10 * k * s`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub big_delta: Option<f64>,
    #[serde(default = "one")]
    pub ell: f64,
}

impl BadInstanceParams {
    pub fn new(k: usize, s: usize, delta: f64, ell: f64) -> Self {
        Self { k, s, delta, big_delta: None, ell }
    }

    pub fn n_clients(&self) -> usize {
        self.k * self.s
    }

    pub fn big_delta(&self) -> f64 {
        self.big_delta.unwrap_or(10.0 * self.n_clients() as f64)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.s == 0 {
            return Err(domain!("bad instance needs k >= 1 and s >= 1"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(domain!("delta must lie in (0, 1), got {}", self.delta));
        }
        if self.big_delta().partial_cmp(&(self.n_clients() as f64)) != Some(std::cmp::Ordering::Greater) {
            return Err(domain!("big_delta = {} must exceed |C| = {}", self.big_delta(), self.n_clients()));
        }
        if !(self.ell.is_finite() && self.ell >= 1.0) {
            return Err(domain!("ell must be >= 1"));
        }
        Ok(())
    }

    /// `delta' = 3^(ell-1) * ell * delta + 3^ell * k / |C|`.
    pub fn delta_prime(&self) -> f64 {
        3f64.powf(self.ell - 1.0) * self.ell * self.delta + 3f64.powf(self.ell) * self.k as f64 / self.n_clients() as f64
    }

    /// `(3^ell - delta') * |C|`: no listed center set does better on the target.
    pub fn list_lower_bound(&self) -> f64 {
        (3f64.powf(self.ell) - self.delta_prime()) * self.n_clients() as f64
    }
}

/// The gadget graph together with its planted solution.
#[derive(Debug, Clone)]
pub struct BadInstanceBundle {
    pub params: BadInstanceParams,
    pub instance: MetricInstance,
    /// Gadget `i` is cluster `i`.
    pub target_clustering: Clustering,
    /// `f_i*` for every gadget (facility indices).
    pub optimal_centers: CenterSet,
    /// Client index -> its `k` private decoys (facility indices).
    pub decoy_map: Vec<Vec<usize>>,
}

/// Point ids: clients `0..k*s` gadget by gadget, then `f_0*..f_{k-1}*`, then
/// the decoys of client `x` at `k*s + k + x*k + b`. Facility indices follow
/// the same order with the clients removed.
pub fn gen_bad_instance(params: &BadInstanceParams) -> Result<BadInstanceBundle> {
    params.validate()?;
    let (k, s) = (params.k, params.s);
    let n = k * s;
    let star = |i: usize| n + i;
    let decoy = |x: usize, b: usize| n + k + x * k + b;
    let mut edges = Vec::with_capacity(n * (k + 1) + k * k);
    for x in 0..n {
        edges.push((x, star(x / s), 1.0));
        for b in 0..k {
            edges.push((x, decoy(x, b), 1.0 - params.delta));
        }
    }
    for i in 0..k {
        for j in (i + 1)..k {
            edges.push((star(i), star(j), params.big_delta()));
        }
    }
    let facilities: Vec<usize> = (n..n + k + n * k).collect();
    let instance = MetricInstance::from_graph((0..n).collect(), facilities, edges, params.ell)?;
    let target_clustering = Clustering::from_labels((0..n).map(|x| x / s).collect(), k)?;
    let optimal_centers = CenterSet::new((0..k).collect(), instance.n_facilities())?;
    let decoy_map = (0..n).map(|x| (0..k).map(|b| k + x * k + b).collect()).collect();
    Ok(BadInstanceBundle { params: *params, instance, target_clustering, optimal_centers, decoy_map })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum GenMode {
    #[default]
    Euclidean,
    Matrix,
}

fn default_spread() -> f64 {
    100.0
}

fn default_dim() -> usize {
    2
}

/// Parameters of [`gen_random`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomSpec {
    pub clients: usize,
    /// `|L|`. With `clients_are_facilities` this counts the clients too.
    pub facilities: usize,
    #[serde(default)]
    pub mode: GenMode,
    /// Side of the sampling box.
    #[serde(default = "default_spread")]
    pub spread: f64,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default)]
    pub clients_are_facilities: bool,
    #[serde(default = "one")]
    pub ell: f64,
    /// Number of blob centers; 0 samples uniformly in the box. Blob points
    /// jitter by `spread / 20` around their blob.
    #[serde(default)]
    pub blobs: usize,
}

impl RandomSpec {
    pub fn new(clients: usize, facilities: usize) -> Self {
        Self {
            clients,
            facilities,
            mode: GenMode::Euclidean,
            spread: default_spread(),
            dim: default_dim(),
            clients_are_facilities: false,
            ell: 1.0,
            blobs: 0,
        }
    }
}

/// Random instance. Matrix mode samples a Euclidean embedding and stores its
/// distance matrix, so the metric axioms hold by construction.
pub fn gen_random<R: Rng + ?Sized>(spec: &RandomSpec, rng: &mut R) -> Result<MetricInstance> {
    if spec.clients == 0 {
        return Err(domain!("instance has no clients"));
    }
    if spec.facilities == 0 {
        return Err(domain!("instance has no facilities"));
    }
    if spec.dim == 0 || !(spec.spread.is_finite() && spec.spread > 0.0) {
        return Err(domain!("dim must be >= 1 and spread > 0"));
    }
    let (universe, facilities): (usize, Vec<usize>) = if spec.clients_are_facilities {
        if spec.facilities < spec.clients {
            return Err(domain!("|L| = {} cannot contain |C| = {}", spec.facilities, spec.clients));
        }
        (spec.facilities, (0..spec.facilities).collect())
    } else {
        (spec.clients + spec.facilities, (spec.clients..spec.clients + spec.facilities).collect())
    };
    let blob_centers: Vec<Vec<f64>> =
        (0..spec.blobs).map(|_| (0..spec.dim).map(|_| rng.random_range(0.0..spec.spread)).collect()).collect();
    let jitter = spec.spread / 20.0;
    let points: Vec<Vec<f64>> = (0..universe)
        .map(|_| {
            if blob_centers.is_empty() {
                (0..spec.dim).map(|_| rng.random_range(0.0..spec.spread)).collect()
            } else {
                let b = &blob_centers[rng.random_range(0..blob_centers.len())];
                b.iter().map(|&c| c + rng.random_range(-jitter..jitter)).collect()
            }
        })
        .collect();
    let clients: Vec<usize> = (0..spec.clients).collect();
    match spec.mode {
        GenMode::Euclidean => {
            let coords: BTreeMap<usize, Vec<f64>> = points.into_iter().enumerate().collect();
            MetricInstance::from_coords(clients, facilities, &coords, spec.ell)
        }
        GenMode::Matrix => {
            let rows: Vec<Vec<f64>> = points.iter().map(|a| points.iter().map(|b| euclidean(a, b)).collect()).collect();
            MetricInstance::from_matrix(clients, facilities, &rows, spec.ell)
        }
    }
}
