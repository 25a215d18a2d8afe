mod common;

use bhtest::scores::{ScoreId, ScoreSet, ScoreTracker};
use bhtest::{ActionDistribution, ActionId, PairStatistic, RandomSource, WeightingScheme};
use common::{batch_scores, batch_statistic, random_sequence};
use rand::Rng;

fn tracker_over(actions: &[usize], dists: &[Vec<f64>]) -> Vec<[f64; 3]> {
    let mut tracker = ScoreTracker::new(dists[0].len());
    actions
        .iter()
        .zip(dists)
        .map(|(&a, d)| {
            tracker
                .update(ActionId(a), &ActionDistribution::new(d.clone()).unwrap())
                .unwrap();
            tracker.values(ScoreSet::ALL).unwrap()
        })
        .collect()
}

#[test]
fn incremental_scores_match_batch() {
    for (seed, actions) in [(1, 2), (2, 3), (3, 10), (4, 20)] {
        let (dists, picks) = random_sequence(seed, actions, 120);
        let incremental = tracker_over(&picks, &dists);
        for t in 1..=picks.len() {
            let batch = batch_scores(&picks[..t], &dists[..t]);
            for k in 0..3 {
                assert!(
                    (incremental[t - 1][k] - batch[k]).abs() <= 1e-12,
                    "A={actions} t={t} z{}: {} vs {}",
                    k + 1,
                    incremental[t - 1][k],
                    batch[k]
                );
            }
        }
    }
}

#[test]
fn incremental_statistic_matches_batch_for_every_scheme() {
    let (dists, left) = random_sequence(11, 5, 80);
    let (_, right) = random_sequence(12, 5, 80);
    let left_scores = tracker_over(&left, &dists);
    let right_scores = tracker_over(&right, &dists);
    for set in ScoreSet::all_subsets() {
        let ids: Vec<ScoreId> = set.iter().collect();
        for scheme in WeightingScheme::ALL {
            let mut pair = PairStatistic::new(set, scheme);
            for t in 0..left.len() {
                pair.push(&left_scores[t], &right_scores[t]);
            }
            let oracle = batch_statistic(&left, &right, &dists, &ids, scheme);
            assert!(
                (pair.value() - oracle).abs() <= 1e-9,
                "{set} {scheme}: {} vs {oracle}",
                pair.value()
            );
        }
    }
}

#[test]
fn identical_streams_give_zero() {
    let (dists, picks) = random_sequence(5, 4, 50);
    let scores = tracker_over(&picks, &dists);
    for scheme in WeightingScheme::ALL {
        let mut pair = PairStatistic::new(ScoreSet::ALL, scheme);
        for s in &scores {
            pair.push(s, s);
            assert_eq!(pair.value(), 0.0);
        }
    }
}

/// Two vectors sampled from the same distribution sequence give a statistic
/// centred near zero.
#[test]
fn null_pairs_are_centred() {
    let mut rng = RandomSource::new(77, 0).rng();
    let pairs = 1000;
    let t = 100;
    let actions = 5;
    let mut total = 0.0;
    for _ in 0..pairs {
        let mut left = ScoreTracker::new(actions);
        let mut right = ScoreTracker::new(actions);
        let mut pair = PairStatistic::new(ScoreSet::single(ScoreId::Z1), WeightingScheme::Uniform);
        for _ in 0..t {
            let d = ActionDistribution::new(common::random_dist(&mut rng, actions)).unwrap();
            left.update(d.sample(&mut rng), &d).unwrap();
            right.update(d.sample(&mut rng), &d).unwrap();
            pair.push(
                &left.values(ScoreSet::ALL).unwrap(),
                &right.values(ScoreSet::ALL).unwrap(),
            );
        }
        total += pair.value();
    }
    let mean = total / pairs as f64;
    assert!(mean.abs() <= 0.02, "mean statistic {mean}");
}

/// Under a fixed distribution sequence, actions drawn from the hypothesis
/// itself score at least as high on z1 and z3 as actions drawn from perturbed
/// alternatives.
#[test]
fn z1_and_z3_are_consistent_at_desk_scale() {
    let t = 50;
    let actions = 3;
    let runs = 400;
    let mut rng = RandomSource::new(31, 0).rng();
    let hypothesis: Vec<Vec<f64>> = (0..t)
        .map(|_| common::random_dist(&mut rng, actions))
        .collect();

    // Monte-Carlo mean and standard error of z1 and z3 when actions come from `source`.
    let estimate = |source: &[Vec<f64>], seed: u64| {
        let mut rng = RandomSource::new(seed, 1).rng();
        let mut samples = [Vec::new(), Vec::new()];
        for _ in 0..runs {
            let picks: Vec<usize> = source
                .iter()
                .map(|d| {
                    bhtest::domain::sample_action(
                        &ActionDistribution::new(d.clone()).unwrap(),
                        &mut rng,
                    )
                    .0
                })
                .collect();
            let z = batch_scores(&picks, &hypothesis);
            samples[0].push(z[0]);
            samples[1].push(z[2]);
        }
        samples.map(|xs| {
            let n = xs.len() as f64;
            let m = xs.iter().sum::<f64>() / n;
            let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
            (m, (var / n).sqrt())
        })
    };

    let own = estimate(&hypothesis, 0);
    for alt in 0..100 {
        let strength = rng.random_range(0.1..1.0);
        let perturbed: Vec<Vec<f64>> = hypothesis
            .iter()
            .map(|d| {
                let noise = common::random_dist(&mut rng, actions);
                d.iter()
                    .zip(&noise)
                    .map(|(p, n)| (1.0 - strength) * p + strength * n)
                    .collect()
            })
            .collect();
        let other = estimate(&perturbed, alt + 1);
        for k in 0..2 {
            let (m_own, se_own) = own[k];
            let (m_alt, se_alt) = other[k];
            let slack = 2.0 * (se_own * se_own + se_alt * se_alt).sqrt();
            assert!(
                m_own + slack >= m_alt,
                "score {k} alternative {alt}: {m_own} vs {m_alt} (slack {slack})"
            );
        }
    }
}

#[test]
fn sampling_passes_chi_square() {
    let draws = 100_000;
    for (seed, probs) in [
        (1, vec![0.5, 0.5]),
        (2, vec![0.3, 0.1, 0.6]),
        (3, vec![0.05, 0.15, 0.2, 0.25, 0.35]),
        (4, vec![0.001, 0.999]),
    ] {
        let d = ActionDistribution::new(probs.clone()).unwrap();
        let mut rng = RandomSource::new(seed, 0).rng();
        let mut counts = vec![0usize; probs.len()];
        for _ in 0..draws {
            counts[d.sample(&mut rng).0] += 1;
        }
        let stat: f64 = counts
            .iter()
            .zip(&probs)
            .map(|(&c, &p)| {
                let e = p * draws as f64;
                (c as f64 - e).powi(2) / e
            })
            .sum();
        let p = common::chi_square_p(stat, (probs.len() - 1) as f64);
        assert!(p > 1e-4, "{probs:?}: chi2 {stat}, p {p}");
    }
}

#[test]
fn sampling_a_point_mass_is_deterministic() {
    let mut rng = RandomSource::new(0, 0).rng();
    let first = ActionDistribution::new(vec![1.0, 0.0, 0.0]).unwrap();
    let last = ActionDistribution::new(vec![0.0, 0.0, 1.0]).unwrap();
    for _ in 0..1000 {
        assert_eq!(first.sample(&mut rng), ActionId(0));
        assert_eq!(last.sample(&mut rng), ActionId(2));
    }
}
