//! Incremental score functions over growing action vectors.
//!
//! Every vector tested against the same hypothesis sees the same sequence of
//! hypothesised distributions, so the per-step work that depends only on the
//! distribution lives in [`StepDistribution`] and the running sum of
//! distributions lives in a single shared [`HypothesisTrace`]. A
//! [`ScoreState`] then only stores what differs per vector.
//!
//! The three scores, for actions `a_0..a_{t-1}` and hypothesised
//! distributions `d_0..d_{t-1}`:
//!
//! ```text
//! z1 = (1/t) Σ d_τ[a_τ] / max_k d_τ[k]
//! z2 = (1/t) Σ 1 − Σ_k d_τ[k] · |d_τ[a_τ] − d_τ[k]|
//! z3 = Σ_k min( (1/t) #{τ : a_τ = k}, (1/t) Σ_τ d_τ[k] )
//! ```
//!
//! All three lie in `[0, 1]`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::{ActionDistribution, ActionId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreId {
    Z1,
    Z2,
    Z3,
}

impl ScoreId {
    pub const ALL: [ScoreId; 3] = [ScoreId::Z1, ScoreId::Z2, ScoreId::Z3];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ScoreId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ScoreId::Z1 => "z1",
            ScoreId::Z2 => "z2",
            ScoreId::Z3 => "z3",
        };
        f.write_str(name)
    }
}

impl FromStr for ScoreId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "z1" | "1" => Ok(ScoreId::Z1),
            "z2" | "2" => Ok(ScoreId::Z2),
            "z3" | "3" => Ok(ScoreId::Z3),
            other => Err(Error::InvalidConfig(format!(
                "unknown score function `{other}`"
            ))),
        }
    }
}

/// A non-empty subset of the score functions, iterated in `Z1 < Z2 < Z3` order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<ScoreId>", into = "Vec<ScoreId>")]
pub struct ScoreSet {
    mask: u8,
}

impl ScoreSet {
    pub const ALL: ScoreSet = ScoreSet { mask: 0b111 };

    pub fn new(ids: &[ScoreId]) -> Result<Self> {
        let mask = ids.iter().fold(0u8, |m, id| m | (1 << id.index()));
        if mask == 0 {
            return Err(Error::InvalidConfig("score set must not be empty".into()));
        }
        Ok(Self { mask })
    }

    pub fn single(id: ScoreId) -> Self {
        Self {
            mask: 1 << id.index(),
        }
    }

    pub fn contains(&self, id: ScoreId) -> bool {
        self.mask & (1 << id.index()) != 0
    }

    pub fn len(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = ScoreId> + '_ {
        ScoreId::ALL.into_iter().filter(|id| self.contains(*id))
    }

    /// All seven non-empty subsets, ordered as `[1] [2] [3] [1 2] [1 3] [2 3] [1 2 3]`.
    pub fn all_subsets() -> Vec<ScoreSet> {
        [0b001, 0b010, 0b100, 0b011, 0b101, 0b110, 0b111]
            .into_iter()
            .map(|mask| ScoreSet { mask })
            .collect()
    }
}

impl TryFrom<Vec<ScoreId>> for ScoreSet {
    type Error = Error;

    fn try_from(ids: Vec<ScoreId>) -> Result<Self> {
        ScoreSet::new(&ids)
    }
}

impl From<ScoreSet> for Vec<ScoreId> {
    fn from(set: ScoreSet) -> Self {
        set.iter().collect()
    }
}

impl fmt::Display for ScoreSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.iter().map(|id| id.to_string()).collect();
        f.write_str(&names.join(","))
    }
}

impl FromStr for ScoreSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let ids = s
            .split(',')
            .filter(|part| !part.trim().is_empty())
            .map(ScoreId::from_str)
            .collect::<Result<Vec<_>>>()?;
        ScoreSet::new(&ids)
    }
}

/// One step's hypothesised distribution with everything the scores need
/// precomputed, so each vector's update is O(1).
#[derive(Debug, Clone)]
pub struct StepDistribution {
    probs: Vec<f64>,
    cumulative: Vec<f64>,
    z1_terms: Vec<f64>,
    z2_terms: Vec<f64>,
}

impl StepDistribution {
    pub fn new(d: &ActionDistribution) -> Self {
        let probs = d.probs().to_vec();
        let max = probs.iter().cloned().fold(f64::MIN, f64::max);
        let z1_terms = probs.iter().map(|p| p / max).collect();
        let z2_terms = probs
            .iter()
            .map(|&pa| {
                let spread: f64 = probs.iter().map(|&pk| pk * (pa - pk).abs()).sum();
                1.0 - spread
            })
            .collect();
        let cumulative = probs
            .iter()
            .scan(0.0, |acc, p| {
                *acc += p;
                Some(*acc)
            })
            .collect();
        Self {
            probs,
            cumulative,
            z1_terms,
            z2_terms,
        }
    }

    pub fn actions(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Per-step summand of z1 for action `a`.
    pub fn z1_term(&self, a: ActionId) -> f64 {
        self.z1_terms[a.0]
    }

    /// Per-step summand of z2 for action `a`.
    pub fn z2_term(&self, a: ActionId) -> f64 {
        self.z2_terms[a.0]
    }

    /// Inverse-CDF draw for the uniform variate `u`, identical to a linear
    /// cumulative scan.
    pub fn sample_with(&self, u: f64) -> ActionId {
        let last = self.probs.len() - 1;
        let k = self.cumulative[..last].partition_point(|&c| c <= u);
        if k < last {
            return ActionId(k);
        }
        let mut k = last;
        while k > 0 && self.probs[k] == 0.0 {
            k -= 1;
        }
        ActionId(k)
    }
}

/// Running sum of the hypothesised distributions, shared by every vector
/// scored against the same hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisTrace {
    t: usize,
    dist_sum: Vec<f64>,
}

impl HypothesisTrace {
    pub fn new(actions: usize) -> Self {
        Self {
            t: 0,
            dist_sum: vec![0.0; actions],
        }
    }

    pub fn absorb(&mut self, step: &StepDistribution) {
        for (s, p) in self.dist_sum.iter_mut().zip(&step.probs) {
            *s += p;
        }
        self.t += 1;
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn dist_sum(&self) -> &[f64] {
        &self.dist_sum
    }
}

/// Per-vector sufficient statistics for z1, z2 and z3.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreState {
    t: usize,
    sum_z1: f64,
    sum_z2: f64,
    counts: Vec<u64>,
}

/// Score values at one prefix length, indexed by [`ScoreId::index`]. Entries
/// outside the set they were computed for are left at zero.
pub type ScoreValues = [f64; 3];

impl ScoreState {
    pub fn new(actions: usize) -> Self {
        Self {
            t: 0,
            sum_z1: 0.0,
            sum_z2: 0.0,
            counts: vec![0; actions],
        }
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn sum_z1(&self) -> f64 {
        self.sum_z1
    }

    pub fn sum_z2(&self) -> f64 {
        self.sum_z2
    }

    /// Absorbs action `a` taken under the step's hypothesised distribution.
    pub fn update(&mut self, a: ActionId, step: &StepDistribution) {
        self.sum_z1 += step.z1_term(a);
        self.sum_z2 += step.z2_term(a);
        self.counts[a.0] += 1;
        self.t += 1;
    }

    /// Current value of one score; `trace` must have absorbed the same steps.
    pub fn value(&self, trace: &HypothesisTrace, id: ScoreId) -> Result<f64> {
        if self.t == 0 {
            return Err(Error::EmptyState);
        }
        if trace.t != self.t {
            return Err(Error::LengthMismatch {
                left: self.t,
                right: trace.t,
            });
        }
        Ok(self.value_unchecked(trace, id))
    }

    fn value_unchecked(&self, trace: &HypothesisTrace, id: ScoreId) -> f64 {
        let t = self.t as f64;
        match id {
            ScoreId::Z1 => self.sum_z1 / t,
            ScoreId::Z2 => self.sum_z2 / t,
            ScoreId::Z3 => {
                self.counts
                    .iter()
                    .zip(&trace.dist_sum)
                    .map(|(&c, &s)| (c as f64).min(s))
                    .sum::<f64>()
                    / t
            }
        }
    }

    /// Values of every score in `set`.
    pub fn values(&self, trace: &HypothesisTrace, set: ScoreSet) -> Result<ScoreValues> {
        if self.t == 0 {
            return Err(Error::EmptyState);
        }
        if trace.t != self.t {
            return Err(Error::LengthMismatch {
                left: self.t,
                right: trace.t,
            });
        }
        let mut out = [0.0; 3];
        for id in set.iter() {
            out[id.index()] = self.value_unchecked(trace, id);
        }
        Ok(out)
    }
}

/// A single action vector scored against its own hypothesis trace.
#[derive(Debug, Clone)]
pub struct ScoreTracker {
    trace: HypothesisTrace,
    state: ScoreState,
}

impl ScoreTracker {
    pub fn new(actions: usize) -> Self {
        Self {
            trace: HypothesisTrace::new(actions),
            state: ScoreState::new(actions),
        }
    }

    pub fn update(&mut self, a: ActionId, d: &ActionDistribution) -> Result<()> {
        let actions = self.state.counts.len();
        if d.len() != actions {
            return Err(Error::ActionCountMismatch {
                expected: actions,
                got: d.len(),
            });
        }
        if a.0 >= actions {
            return Err(Error::InvalidAction {
                action: a.0,
                actions,
            });
        }
        let step = StepDistribution::new(d);
        self.trace.absorb(&step);
        self.state.update(a, &step);
        Ok(())
    }

    pub fn value(&self, id: ScoreId) -> Result<f64> {
        self.state.value(&self.trace, id)
    }

    pub fn values(&self, set: ScoreSet) -> Result<ScoreValues> {
        self.state.values(&self.trace, set)
    }

    pub fn state(&self) -> &ScoreState {
        &self.state
    }

    pub fn trace(&self) -> &HypothesisTrace {
        &self.trace
    }
}
