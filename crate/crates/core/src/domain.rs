//! Actions, histories, behaviours and the seeded randomness shared by every
//! other module.
//!
//! The interaction is between two agents: `I` (the tester) and `J` (the agent
//! whose behaviour is being hypothesised). A behaviour maps the joint-action
//! history to a distribution over its own actions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total mass of an [`ActionDistribution`].
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Index of an action in a finite action set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionId(pub usize);

impl ActionId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Which side of the two-agent interaction a behaviour is playing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Agent {
    I,
    J,
}

impl Agent {
    pub fn other(self) -> Agent {
        match self {
            Agent::I => Agent::J,
            Agent::J => Agent::I,
        }
    }
}

/// A probability vector over an agent's action set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ActionDistribution {
    probs: Vec<f64>,
}

impl ActionDistribution {
    /// Builds a distribution after checking the probability-vector invariants.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        validate_distribution(&probs)?;
        Ok(Self { probs })
    }

    /// Normalizes non-negative weights into a distribution.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.len() < 2 {
            return Err(Error::TooFewActions(weights.len()));
        }
        if let Some((index, &value)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !w.is_finite() || **w < 0.0)
        {
            return Err(Error::NegativeProbability { index, value });
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::NotNormalized { sum: total });
        }
        Ok(Self {
            probs: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    pub fn uniform(actions: usize) -> Result<Self> {
        Self::from_weights(vec![1.0; actions])
    }

    /// Point mass on `action`.
    pub fn point_mass(actions: usize, action: ActionId) -> Result<Self> {
        if actions < 2 {
            return Err(Error::TooFewActions(actions));
        }
        if action.0 >= actions {
            return Err(Error::InvalidAction {
                action: action.0,
                actions,
            });
        }
        let mut probs = vec![0.0; actions];
        probs[action.0] = 1.0;
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob(&self, action: ActionId) -> f64 {
        self.probs[action.0]
    }

    /// Index of the most likely action, lowest index on ties.
    pub fn argmax(&self) -> ActionId {
        let mut best = 0;
        for (k, &p) in self.probs.iter().enumerate().skip(1) {
            if p > self.probs[best] {
                best = k;
            }
        }
        ActionId(best)
    }

    /// Draws an action by inverse CDF with a single uniform draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ActionId {
        sample_from_probs(&self.probs, rng.random::<f64>())
    }
}

impl TryFrom<Vec<f64>> for ActionDistribution {
    type Error = Error;

    fn try_from(probs: Vec<f64>) -> Result<Self> {
        Self::new(probs)
    }
}

impl From<ActionDistribution> for Vec<f64> {
    fn from(d: ActionDistribution) -> Self {
        d.probs
    }
}

/// Checks that `probs` is a probability vector over at least two actions.
pub fn validate_distribution(probs: &[f64]) -> Result<()> {
    if probs.len() < 2 {
        return Err(Error::TooFewActions(probs.len()));
    }
    if let Some((index, &value)) = probs
        .iter()
        .enumerate()
        .find(|(_, p)| !p.is_finite() || **p < 0.0)
    {
        return Err(Error::NegativeProbability { index, value });
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::NotNormalized { sum });
    }
    Ok(())
}

/// Inverse-CDF lookup: the first index whose cumulative mass exceeds `u`.
///
/// The final index absorbs any rounding shortfall in the cumulative sum.
pub(crate) fn sample_from_probs(probs: &[f64], u: f64) -> ActionId {
    let mut acc = 0.0;
    let last = probs.len() - 1;
    for (k, &p) in probs.iter().enumerate().take(last) {
        acc += p;
        if u < acc {
            return ActionId(k);
        }
    }
    // skip trailing zero-mass actions so they can never be drawn
    let mut k = last;
    while k > 0 && probs[k] == 0.0 {
        k -= 1;
    }
    ActionId(k)
}

/// One step of play: an action for each agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointAction {
    pub i: ActionId,
    pub j: ActionId,
}

impl JointAction {
    pub fn new(i: ActionId, j: ActionId) -> Self {
        Self { i, j }
    }

    pub fn of(&self, agent: Agent) -> ActionId {
        match agent {
            Agent::I => self.i,
            Agent::J => self.j,
        }
    }
}

/// Append-only record of joint actions; entry `k` happened at time `k`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionHistory {
    joint_actions: Vec<JointAction>,
}

impl InteractionHistory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Current time, i.e. the number of recorded steps.
    pub fn t(&self) -> usize {
        self.joint_actions.len()
    }

    pub fn push(&mut self, joint: JointAction) {
        self.joint_actions.push(joint);
    }

    pub fn joint_actions(&self) -> &[JointAction] {
        &self.joint_actions
    }

    pub fn last(&self) -> Option<&JointAction> {
        self.joint_actions.last()
    }

    /// The `back`-th most recent joint action (`back = 0` is the latest).
    pub fn recent(&self, back: usize) -> Option<&JointAction> {
        let t = self.t();
        if back < t {
            Some(&self.joint_actions[t - 1 - back])
        } else {
            None
        }
    }
}

impl From<Vec<JointAction>> for InteractionHistory {
    fn from(joint_actions: Vec<JointAction>) -> Self {
        Self { joint_actions }
    }
}

/// A (possibly adaptive) behaviour: history in, action distribution out.
///
/// Implementations must be deterministic in `(self, history, perspective)`;
/// two behaviours with equal descriptors are the same behaviour.
pub trait Behaviour {
    fn distribution(&self, history: &InteractionHistory, perspective: Agent) -> ActionDistribution;

    /// Size of the action set this behaviour chooses from.
    fn actions(&self) -> usize;
}

/// Identifies an independent random stream: `(seed, stream)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RandomSource {
    pub seed: u64,
    pub stream: u64,
}

impl RandomSource {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// A ChaCha generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    /// Deterministically derives a fresh seed from this source and a label.
    pub fn derive(&self, label: u64) -> u64 {
        splitmix64(
            splitmix64(self.seed ^ splitmix64(self.stream))
                ^ splitmix64(label.wrapping_add(0x51_7c_c1_b7)),
        )
    }
}

/// The splitmix64 finalizer, used to decorrelate derived seeds.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Draws an action from `d` using one uniform draw from `rng`.
pub fn sample_action<R: Rng + ?Sized>(d: &ActionDistribution, rng: &mut R) -> ActionId {
    d.sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_table_row() {
        assert!(validate_distribution(&[0.3, 0.1, 0.6]).is_ok());
    }

    #[test]
    fn single_action_is_rejected() {
        assert!(matches!(
            validate_distribution(&[1.0]),
            Err(Error::TooFewActions(1))
        ));
    }

    #[test]
    fn unnormalized_is_rejected() {
        assert!(matches!(
            validate_distribution(&[0.5, 0.6]),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn negative_is_rejected() {
        assert!(matches!(
            validate_distribution(&[1.2, -0.2]),
            Err(Error::NegativeProbability { index: 1, .. })
        ));
        assert!(validate_distribution(&[f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn point_masses_sample_deterministically() {
        let mut rng = RandomSource::new(3, 0).rng();
        let first = ActionDistribution::new(vec![1.0, 0.0, 0.0]).unwrap();
        let last = ActionDistribution::new(vec![0.0, 0.0, 1.0]).unwrap();
        for _ in 0..1000 {
            assert_eq!(sample_action(&first, &mut rng), ActionId(0));
            assert_eq!(sample_action(&last, &mut rng), ActionId(2));
        }
    }

    #[test]
    fn fair_coin_frequency() {
        let d = ActionDistribution::new(vec![0.5, 0.5]).unwrap();
        let mut rng = RandomSource::new(11, 4).rng();
        let zeros = (0..100_000)
            .filter(|_| sample_action(&d, &mut rng) == ActionId(0))
            .count();
        let freq = zeros as f64 / 100_000.0;
        assert!((freq - 0.5).abs() <= 0.01, "freq {freq}");
    }

    #[test]
    fn inverse_cdf_breaks_ties_low() {
        // u exactly on a cumulative boundary goes to the next action
        assert_eq!(sample_from_probs(&[0.5, 0.5], 0.0), ActionId(0));
        assert_eq!(sample_from_probs(&[0.5, 0.5], 0.5), ActionId(1));
        assert_eq!(
            sample_from_probs(&[0.5, 0.5, 0.0], 0.999_999_999_999),
            ActionId(1)
        );
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let draws = |src: RandomSource| {
            let mut rng = src.rng();
            (0..8).map(|_| rng.random::<u64>()).collect::<Vec<_>>()
        };
        assert_eq!(
            draws(RandomSource::new(5, 1)),
            draws(RandomSource::new(5, 1))
        );
        assert_ne!(
            draws(RandomSource::new(5, 1)),
            draws(RandomSource::new(5, 2))
        );
    }

    #[test]
    fn history_recent_indexing() {
        let mut h = InteractionHistory::new();
        assert_eq!(h.t(), 0);
        assert!(h.recent(0).is_none());
        h.push(JointAction::new(ActionId(0), ActionId(1)));
        h.push(JointAction::new(ActionId(1), ActionId(0)));
        assert_eq!(h.t(), 2);
        assert_eq!(h.recent(0).unwrap().i, ActionId(1));
        assert_eq!(h.recent(1).unwrap().j, ActionId(1));
        assert!(h.recent(2).is_none());
    }

    #[test]
    fn serde_rejects_invalid_distribution() {
        let ok: ActionDistribution = serde_json::from_str("[0.25, 0.75]").unwrap();
        assert_eq!(ok.probs(), &[0.25, 0.75]);
        assert!(serde_json::from_str::<ActionDistribution>("[0.25, 0.5]").is_err());
    }
}
