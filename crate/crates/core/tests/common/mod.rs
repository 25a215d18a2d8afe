//! Brute-force reference implementations, written straight from the score and
//! statistic definitions without any incremental bookkeeping.

#![allow(dead_code)]

use bhtest::scores::ScoreId;
use bhtest::{ActionDistribution, ActionId, RandomSource, WeightingScheme};
use rand::Rng;

/// z1, z2, z3 of the full vector `actions` under `dists`.
pub fn batch_scores(actions: &[usize], dists: &[Vec<f64>]) -> [f64; 3] {
    let t = actions.len();
    assert!(t > 0 && dists.len() == t);
    let a_count = dists[0].len();
    let mut z1 = 0.0;
    let mut z2 = 0.0;
    for (&a, d) in actions.iter().zip(dists) {
        let max = d.iter().cloned().fold(f64::MIN, f64::max);
        z1 += d[a] / max;
        let mut expected_gap = 0.0;
        for k in 0..a_count {
            expected_gap += d[k] * (d[a] - d[k]).abs();
        }
        z2 += 1.0 - expected_gap;
    }
    let mut z3 = 0.0;
    for k in 0..a_count {
        let freq = actions.iter().filter(|&&a| a == k).count() as f64 / t as f64;
        let avg = dists.iter().map(|d| d[k]).sum::<f64>() / t as f64;
        z3 += freq.min(avg);
    }
    [z1 / t as f64, z2 / t as f64, z3]
}

/// Weighted combination of per-score differences, by linear search.
pub fn combine(diffs: &[f64], scheme: WeightingScheme) -> f64 {
    let pick = |key: &dyn Fn(f64) -> f64, better: &dyn Fn(f64, f64) -> bool| {
        let mut best = 0;
        for k in 1..diffs.len() {
            if better(key(diffs[k]), key(diffs[best])) {
                best = k;
            }
        }
        diffs[best]
    };
    match scheme {
        WeightingScheme::Uniform => diffs.iter().sum::<f64>() / diffs.len() as f64,
        WeightingScheme::TrueMax => pick(&|x| x.abs(), &|a, b| a > b),
        WeightingScheme::TrueMin => pick(&|x| x.abs(), &|a, b| a < b),
        WeightingScheme::Max => pick(&|x| x, &|a, b| a > b),
        WeightingScheme::Min => pick(&|x| x, &|a, b| a < b),
    }
}

/// The statistic recomputed from scratch on every prefix.
pub fn batch_statistic(
    left: &[usize],
    right: &[usize],
    dists: &[Vec<f64>],
    ids: &[ScoreId],
    scheme: WeightingScheme,
) -> f64 {
    let t = left.len();
    let mut total = 0.0;
    for tau in 1..=t {
        let l = batch_scores(&left[..tau], &dists[..tau]);
        let r = batch_scores(&right[..tau], &dists[..tau]);
        let diffs: Vec<f64> = ids.iter().map(|id| l[id.index()] - r[id.index()]).collect();
        total += combine(&diffs, scheme);
    }
    total / t as f64
}

/// A random distribution over `actions` with strictly positive entries.
pub fn random_dist<R: Rng>(rng: &mut R, actions: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..actions).map(|_| rng.random::<f64>() + 1e-3).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

/// `len` random distributions together with actions sampled from each.
pub fn random_sequence(seed: u64, actions: usize, len: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = RandomSource::new(seed, 0).rng();
    let dists: Vec<Vec<f64>> = (0..len).map(|_| random_dist(&mut rng, actions)).collect();
    let picks = dists
        .iter()
        .map(|d| {
            let dist = ActionDistribution::new(d.clone()).unwrap();
            bhtest::domain::sample_action(&dist, &mut rng).0
        })
        .collect();
    (dists, picks)
}

pub fn action(k: usize) -> ActionId {
    ActionId(k)
}

/// Sample skewness (biased moment estimator).
pub fn skewness(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let m2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    let m3 = xs.iter().map(|x| (x - m).powi(3)).sum::<f64>() / n;
    if m2 <= 0.0 {
        0.0
    } else {
        m3 / m2.powf(1.5)
    }
}

/// Upper tail probability of a chi-square statistic.
pub fn chi_square_p(stat: f64, dof: f64) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    1.0 - ChiSquared::new(dof).unwrap().cdf(stat)
}
