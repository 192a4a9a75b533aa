//! Fixtures shared by the criterion benches.

use kservice_core::instances::{gen_random, GenMode, RandomSpec};
use kservice_core::sampling::substream;
use kservice_core::MetricInstance;
use rand::Rng;

/// Blob instance with `clients` points around `blobs` centers.
pub fn blobs(clients: usize, facilities: usize, blobs: usize, mode: GenMode, seed: u64) -> MetricInstance {
    let spec = RandomSpec { mode, blobs, ..RandomSpec::new(clients, facilities) };
    gen_random(&spec, &mut substream(seed, &[])).expect("valid fixture")
}

/// Dense `rows x cols` cost matrix with integer-valued entries.
pub fn cost_matrix(rows: usize, cols: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = substream(seed, &[]);
    (0..rows).map(|_| (0..cols).map(|_| rng.random_range(0..1000) as f64).collect()).collect()
}
