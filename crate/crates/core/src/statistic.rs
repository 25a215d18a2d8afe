//! The pairwise test statistic between two action vectors.
//!
//! At every step τ both vectors contribute their current prefix scores and
//! the weighted score differences are accumulated:
//!
//! ```text
//! T_τ = Σ_k w_k (z_k(left, τ) − z_k(right, τ))
//! T   = (1/t) Σ_τ T_τ
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scores::{ScoreSet, ScoreValues};

/// How the per-score differences are combined at each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightingScheme {
    /// `w_k = 1/K`.
    #[default]
    Uniform,
    /// All weight on the first score with the largest absolute difference.
    TrueMax,
    /// All weight on the first score with the smallest absolute difference.
    TrueMin,
    /// All weight on the first score with the largest signed difference.
    Max,
    /// All weight on the first score with the smallest signed difference.
    Min,
}

impl WeightingScheme {
    pub const ALL: [WeightingScheme; 5] = [
        WeightingScheme::Uniform,
        WeightingScheme::TrueMax,
        WeightingScheme::TrueMin,
        WeightingScheme::Max,
        WeightingScheme::Min,
    ];
}

impl fmt::Display for WeightingScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeightingScheme::Uniform => "uniform",
            WeightingScheme::TrueMax => "truemax",
            WeightingScheme::TrueMin => "truemin",
            WeightingScheme::Max => "max",
            WeightingScheme::Min => "min",
        })
    }
}

impl FromStr for WeightingScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uniform" => Ok(WeightingScheme::Uniform),
            "truemax" => Ok(WeightingScheme::TrueMax),
            "truemin" => Ok(WeightingScheme::TrueMin),
            "max" => Ok(WeightingScheme::Max),
            "min" => Ok(WeightingScheme::Min),
            other => Err(Error::InvalidConfig(format!(
                "unknown weighting scheme `{other}`"
            ))),
        }
    }
}

/// Combines per-score differences `left − right` into a single step value.
///
/// Selector schemes break ties toward the lower score id.
pub fn combine_differences(diffs: &[f64], scheme: WeightingScheme) -> f64 {
    debug_assert!(!diffs.is_empty());
    let pick = |better: fn(f64, f64) -> bool, key: fn(f64) -> f64| {
        let mut best = diffs[0];
        for &d in &diffs[1..] {
            if better(key(d), key(best)) {
                best = d;
            }
        }
        best
    };
    match scheme {
        WeightingScheme::Uniform => diffs.iter().sum::<f64>() / diffs.len() as f64,
        WeightingScheme::TrueMax => pick(|a, b| a > b, f64::abs),
        WeightingScheme::TrueMin => pick(|a, b| a < b, f64::abs),
        WeightingScheme::Max => pick(|a, b| a > b, |d| d),
        WeightingScheme::Min => pick(|a, b| a < b, |d| d),
    }
}

/// One step's contribution `T_τ` from two vectors' current score values.
pub fn t_tau(
    left: &ScoreValues,
    right: &ScoreValues,
    ids: ScoreSet,
    scheme: WeightingScheme,
) -> f64 {
    let mut diffs = [0.0; 3];
    let mut k = 0;
    for id in ids.iter() {
        diffs[k] = left[id.index()] - right[id.index()];
        k += 1;
    }
    combine_differences(&diffs[..k], scheme)
}

/// Running value of the statistic between two vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairStatistic {
    t: usize,
    cum: f64,
    scheme: WeightingScheme,
    ids: ScoreSet,
}

impl PairStatistic {
    pub fn new(ids: ScoreSet, scheme: WeightingScheme) -> Self {
        Self {
            t: 0,
            cum: 0.0,
            scheme,
            ids,
        }
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn scheme(&self) -> WeightingScheme {
        self.scheme
    }

    pub fn score_ids(&self) -> ScoreSet {
        self.ids
    }

    /// `cum / t`, or 0 before the first step.
    pub fn value(&self) -> f64 {
        if self.t == 0 {
            0.0
        } else {
            self.cum / self.t as f64
        }
    }

    /// Advances one step given both vectors' scores at the new prefix length.
    pub fn push(&mut self, left: &ScoreValues, right: &ScoreValues) {
        self.cum += t_tau(left, right, self.ids, self.scheme);
        self.t += 1;
    }

    /// Checked update: both prefixes must be exactly one step ahead.
    pub fn update(
        &mut self,
        left_t: usize,
        left: &ScoreValues,
        right_t: usize,
        right: &ScoreValues,
    ) -> Result<()> {
        if left_t != right_t || left_t != self.t + 1 {
            return Err(Error::LengthMismatch {
                left: left_t,
                right: right_t,
            });
        }
        self.push(left, right);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scores::ScoreId;
    use proptest::prelude::*;

    #[test]
    fn scheme_examples() {
        let diffs = [0.2, -0.5, 0.1];
        let uniform = combine_differences(&diffs, WeightingScheme::Uniform);
        assert!((uniform - (-0.2 / 3.0)).abs() < 1e-15);
        assert_eq!(combine_differences(&diffs, WeightingScheme::TrueMax), -0.5);
        assert_eq!(combine_differences(&diffs, WeightingScheme::TrueMin), 0.1);
        assert_eq!(combine_differences(&diffs, WeightingScheme::Max), 0.2);
        assert_eq!(combine_differences(&diffs, WeightingScheme::Min), -0.5);
    }

    #[test]
    fn selector_ties_pick_first() {
        assert_eq!(
            combine_differences(&[0.3, -0.3], WeightingScheme::TrueMax),
            0.3
        );
        assert_eq!(
            combine_differences(&[-0.3, 0.3], WeightingScheme::TrueMin),
            -0.3
        );
    }

    #[test]
    fn single_score_schemes_coincide() {
        for scheme in WeightingScheme::ALL {
            assert_eq!(combine_differences(&[-0.25], scheme), -0.25);
        }
    }

    #[test]
    fn identical_states_give_zero() {
        let v = [0.4, 0.7, 0.9];
        for scheme in WeightingScheme::ALL {
            assert_eq!(t_tau(&v, &v, ScoreSet::ALL, scheme), 0.0);
        }
    }

    #[test]
    fn t_tau_ignores_scores_outside_set() {
        let left = [0.5, 100.0, 0.0];
        let right = [0.25, -100.0, 7.0];
        let set = ScoreSet::single(ScoreId::Z1);
        assert_eq!(t_tau(&left, &right, set, WeightingScheme::Uniform), 0.25);
    }

    #[test]
    fn update_checks_lengths() {
        let mut p = PairStatistic::new(ScoreSet::ALL, WeightingScheme::Uniform);
        let v = [0.5; 3];
        assert!(p.update(2, &v, 2, &v).is_err());
        assert!(p.update(1, &v, 2, &v).is_err());
        p.update(1, &v, 1, &v).unwrap();
        assert_eq!(p.t(), 1);
        assert_eq!(p.value(), 0.0);
    }

    #[test]
    fn scheme_names_round_trip() {
        for scheme in WeightingScheme::ALL {
            assert_eq!(
                scheme.to_string().parse::<WeightingScheme>().unwrap(),
                scheme
            );
        }
        assert!("median".parse::<WeightingScheme>().is_err());
    }

    fn arb_values() -> impl Strategy<Value = ScoreValues> {
        [0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..=1.0]
    }

    fn arb_set() -> impl Strategy<Value = ScoreSet> {
        (0usize..7).prop_map(|k| ScoreSet::all_subsets()[k])
    }

    proptest! {
        #[test]
        fn swapping_arguments(left in arb_values(), right in arb_values(), set in arb_set()) {
            let forward = |s| t_tau(&left, &right, set, s);
            let backward = |s| t_tau(&right, &left, set, s);
            prop_assert!((forward(WeightingScheme::Uniform) + backward(WeightingScheme::Uniform)).abs() < 1e-15);
            prop_assert_eq!(forward(WeightingScheme::TrueMax), -backward(WeightingScheme::TrueMax));
            prop_assert_eq!(forward(WeightingScheme::TrueMin), -backward(WeightingScheme::TrueMin));
            prop_assert_eq!(forward(WeightingScheme::Max), -backward(WeightingScheme::Min));
        }

        #[test]
        fn step_value_is_bounded(left in arb_values(), right in arb_values(), set in arb_set(), k in 0usize..5) {
            let v = t_tau(&left, &right, set, WeightingScheme::ALL[k]);
            prop_assert!(v.abs() <= 1.0);
        }
    }
}
