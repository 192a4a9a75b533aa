//! Goodness-of-fit checks for the samplers against their target distributions.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use kservice_core::sampling::{substream, weighted_reservoir, DlDistribution};

/// p-value of Pearson's statistic for observed counts against probabilities.
fn chi_square_p(counts: &[u64], probs: &[f64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let mut stat = 0.0;
    let mut cells = 0;
    for (&c, &p) in counts.iter().zip(probs) {
        if p == 0.0 {
            assert_eq!(c, 0, "zero-probability cell was sampled");
            continue;
        }
        let e = p * total as f64;
        stat += (c as f64 - e).powi(2) / e;
        cells += 1;
    }
    1.0 - ChiSquared::new((cells - 1) as f64).unwrap().cdf(stat)
}

#[test]
fn inverse_cdf_follows_weights() {
    let weights = vec![0.0, 1.0, 4.0, 0.5, 2.5, 0.0, 2.0];
    let total: f64 = weights.iter().sum();
    let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let d = DlDistribution::from_weights(weights);
    let mut rng = substream(1, &[]);
    let mut counts = vec![0u64; probs.len()];
    for _ in 0..50_000 {
        counts[d.sample(&mut rng)] += 1;
    }
    assert!(chi_square_p(&counts, &probs) > 1e-4);
}

#[test]
fn reservoir_follows_weights() {
    let weights = [3.0, 0.0, 1.0, 1.0, 7.0, 0.25];
    let total: f64 = weights.iter().sum();
    let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let mut counts = vec![0u64; weights.len()];
    for t in 0..30_000u64 {
        let mut rng = substream(2, &[t]);
        let pick = weighted_reservoir(weights.iter().enumerate().map(|(i, &w)| (i, w)), &mut rng).unwrap();
        counts[pick] += 1;
    }
    assert!(chi_square_p(&counts, &probs) > 1e-4);
}

#[test]
fn reservoir_with_zero_weights_is_uniform() {
    let mut counts = vec![0u64; 5];
    for t in 0..20_000u64 {
        let mut rng = substream(3, &[t]);
        counts[weighted_reservoir((0..5).map(|i| (i, 0.0)), &mut rng).unwrap()] += 1;
    }
    assert!(chi_square_p(&counts, &[0.2; 5]) > 1e-4);
}
