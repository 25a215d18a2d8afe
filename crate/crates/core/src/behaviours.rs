//! Seeded behaviour generators.
//!
//! * [`RandomBehaviour`]: a fresh random distribution every step, ignoring
//!   the history.
//! * [`LftBehaviour`]: leader-follower-trigger. Plays a target cycle while the
//!   opponent complies and punishes deviations with its maximin action.
//! * [`CdtBehaviour`]: a deterministic decision tree over the opponent's
//!   recent actions.
//! * [`CnnBehaviour`]: a small tanh network over recent joint actions with a
//!   softmax output, so every action keeps positive probability.
//!
//! All generators are pure functions of their seed. Descriptors compare equal
//! field by field (seed included); [`BehaviourDescriptor::same_behaviour`]
//! ignores the seed and compares structure only.

use std::fmt;
use std::str::FromStr;

use rand::distr::Open01;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::domain::{
    ActionDistribution, ActionId, Agent, Behaviour, InteractionHistory, JointAction, RandomSource,
};
use crate::error::{Error, Result};

pub const MAX_TREE_DEPTH: usize = 4;
pub const MAX_NET_WINDOW: usize = 4;
pub const NET_HIDDEN: usize = 8;
pub const MAX_LFT_NOISE: f64 = 0.1;
/// Per-leaf probability that a population member differs from its ancestor.
pub const CDT_MUTATION_RATE: f64 = 0.125;

// stream ids used when expanding a seed into structure
const STREAM_GAME: u64 = 11;
const STREAM_LFT: u64 = 12;
const STREAM_CDT: u64 = 13;
const STREAM_CNN: u64 = 14;
const STREAM_MUTATE: u64 = 15;

/// A fresh uniform-then-normalized distribution at every time step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomBehaviour {
    pub seed: u64,
    pub actions: usize,
}

impl RandomBehaviour {
    pub fn new(seed: u64, actions: usize) -> Result<Self> {
        if actions < 2 {
            return Err(Error::TooFewActions(actions));
        }
        Ok(Self { seed, actions })
    }

    /// Distribution at time `t`, drawn from stream `(seed, t)`.
    pub fn distribution_at(&self, t: usize) -> ActionDistribution {
        let mut rng = RandomSource::new(self.seed, t as u64).rng();
        let weights = (0..self.actions).map(|_| rng.sample(Open01)).collect();
        ActionDistribution::from_weights(weights).expect("positive weights")
    }
}

impl Behaviour for RandomBehaviour {
    fn distribution(
        &self,
        history: &InteractionHistory,
        _perspective: Agent,
    ) -> ActionDistribution {
        self.distribution_at(history.t())
    }

    fn actions(&self) -> usize {
        self.actions
    }
}

/// A 2×2 game; `payoffs[player][row][column]` with player 0 choosing rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatrixGame {
    pub payoffs: [[[f64; 2]; 2]; 2],
}

impl MatrixGame {
    /// Payoff to `agent` when it plays `own` against `other`. Agent `I` is the
    /// row player.
    pub fn payoff(&self, agent: Agent, own: ActionId, other: ActionId) -> f64 {
        match agent {
            Agent::I => self.payoffs[0][own.0][other.0],
            Agent::J => self.payoffs[1][other.0][own.0],
        }
    }

    /// The action maximizing `agent`'s worst-case payoff, lowest index on ties.
    pub fn maximin(&self, agent: Agent) -> ActionId {
        let worst = |own: usize| {
            (0..2)
                .map(|other| self.payoff(agent, ActionId(own), ActionId(other)))
                .fold(f64::INFINITY, f64::min)
        };
        if worst(1) > worst(0) {
            ActionId(1)
        } else {
            ActionId(0)
        }
    }
}

/// A random game with payoffs uniform in `[0, 1]`.
pub fn generate_game(seed: u64) -> MatrixGame {
    let mut rng = RandomSource::new(seed, STREAM_GAME).rng();
    let mut payoffs = [[[0.0; 2]; 2]; 2];
    for player in payoffs.iter_mut() {
        for row in player.iter_mut() {
            for cell in row.iter_mut() {
                *cell = rng.random::<f64>();
            }
        }
    }
    MatrixGame { payoffs }
}

/// Leader-follower-trigger behaviour for one side of a 2×2 game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LftBehaviour {
    pub seed: u64,
    pub game: MatrixGame,
    pub role: Agent,
    pub target_cycle: Vec<JointAction>,
    pub punish_action: ActionId,
    pub punish_len: usize,
    pub noise: f64,
}

impl LftBehaviour {
    /// The action the state machine prescribes after `history`.
    ///
    /// The opponent deviates at step `s` when its action differs from its part
    /// of `target_cycle[s mod len]`; any deviation in the last `punish_len`
    /// steps selects the punishment action.
    pub fn intended_action(&self, history: &InteractionHistory) -> ActionId {
        let t = history.t();
        let len = self.target_cycle.len();
        let opponent = self.role.other();
        let start = t.saturating_sub(self.punish_len);
        let deviated = history.joint_actions()[start..]
            .iter()
            .enumerate()
            .any(|(k, joint)| {
                joint.of(opponent) != self.target_cycle[(start + k) % len].of(opponent)
            });
        if deviated {
            self.punish_action
        } else {
            self.target_cycle[t % len].of(self.role)
        }
    }
}

impl Behaviour for LftBehaviour {
    fn distribution(
        &self,
        history: &InteractionHistory,
        _perspective: Agent,
    ) -> ActionDistribution {
        let intended = self.intended_action(history);
        let probs = (0..2)
            .map(|a| {
                let mass = if a == intended.0 {
                    1.0 - self.noise
                } else {
                    0.0
                };
                mass + self.noise / 2.0
            })
            .collect();
        ActionDistribution::new(probs).expect("valid mixture")
    }

    fn actions(&self) -> usize {
        2
    }
}

pub fn generate_lft(seed: u64, game: &MatrixGame, role: Agent) -> LftBehaviour {
    let mut rng = RandomSource::new(seed, STREAM_LFT).rng();
    let cycle_len = rng.random_range(1..=3);
    let target_cycle = (0..cycle_len)
        .map(|_| {
            JointAction::new(
                ActionId(rng.random_range(0..2)),
                ActionId(rng.random_range(0..2)),
            )
        })
        .collect();
    LftBehaviour {
        seed,
        game: *game,
        role,
        target_cycle,
        punish_action: game.maximin(role),
        punish_len: rng.random_range(1..=5),
        noise: rng.random_range(0.0..=MAX_LFT_NOISE),
    }
}

/// Complete decision tree over the opponent's last `depth` actions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CdtBehaviour {
    pub seed: u64,
    pub actions: usize,
    pub depth: usize,
    /// `actions^depth` leaves; the most recent opponent action is the least
    /// significant digit of the leaf index.
    pub leaves: Vec<ActionId>,
    pub default_leaf: ActionId,
}

impl CdtBehaviour {
    pub fn leaf_index(&self, history: &InteractionHistory, perspective: Agent) -> Option<usize> {
        if history.t() < self.depth {
            return None;
        }
        let opponent = perspective.other();
        let mut index = 0;
        let mut radix = 1;
        for back in 0..self.depth {
            let joint = history.recent(back).expect("history long enough");
            index += joint.of(opponent).0 * radix;
            radix *= self.actions;
        }
        Some(index)
    }

    pub fn action(&self, history: &InteractionHistory, perspective: Agent) -> ActionId {
        match self.leaf_index(history, perspective) {
            Some(k) => self.leaves[k],
            None => self.default_leaf,
        }
    }
}

impl CdtBehaviour {
    /// Copy of this tree in which every leaf (the default leaf included) is
    /// replaced, with probability `rate`, by a different action.
    pub fn mutant(&self, seed: u64, rate: f64) -> CdtBehaviour {
        let mut rng = RandomSource::new(seed, STREAM_MUTATE).rng();
        let actions = self.actions;
        let mut flip = |leaf: ActionId| {
            if rng.random::<f64>() < rate {
                ActionId((leaf.0 + rng.random_range(1..actions)) % actions)
            } else {
                leaf
            }
        };
        let leaves = self.leaves.iter().map(|&l| flip(l)).collect();
        let default_leaf = flip(self.default_leaf);
        CdtBehaviour {
            seed,
            actions,
            depth: self.depth,
            leaves,
            default_leaf,
        }
    }
}

impl Behaviour for CdtBehaviour {
    fn distribution(&self, history: &InteractionHistory, perspective: Agent) -> ActionDistribution {
        ActionDistribution::point_mass(self.actions, self.action(history, perspective))
            .expect("leaf in range")
    }

    fn actions(&self) -> usize {
        self.actions
    }
}

/// A member of a co-evolved population: the ancestor drawn from
/// `population_seed`, mutated with [`CDT_MUTATION_RATE`] using `seed`.
pub fn generate_cdt_member(population_seed: u64, seed: u64, actions: usize) -> CdtBehaviour {
    generate_cdt(population_seed, actions).mutant(seed, CDT_MUTATION_RATE)
}

pub fn generate_cdt(seed: u64, actions: usize) -> CdtBehaviour {
    let mut rng = RandomSource::new(seed, STREAM_CDT).rng();
    let depth = rng.random_range(1..=MAX_TREE_DEPTH);
    let leaves = (0..actions.pow(depth as u32))
        .map(|_| ActionId(rng.random_range(0..actions)))
        .collect();
    CdtBehaviour {
        seed,
        actions,
        depth,
        leaves,
        default_leaf: ActionId(rng.random_range(0..actions)),
    }
}

/// One-hidden-layer network over one-hot encodings of recent joint actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnnBehaviour {
    pub seed: u64,
    pub actions: usize,
    pub window: usize,
    /// `NET_HIDDEN × input_len`, row-major.
    pub hidden_weights: Vec<f64>,
    pub hidden_bias: Vec<f64>,
    /// `actions × NET_HIDDEN`, row-major.
    pub output_weights: Vec<f64>,
    pub output_bias: Vec<f64>,
}

impl CnnBehaviour {
    /// Per lag: one-hot of own action then one-hot of the opponent's action.
    pub fn input_len(&self) -> usize {
        self.window * 2 * self.actions
    }

    pub fn zeroed(actions: usize, window: usize) -> Self {
        let input = window * 2 * actions;
        Self {
            seed: 0,
            actions,
            window,
            hidden_weights: vec![0.0; NET_HIDDEN * input],
            hidden_bias: vec![0.0; NET_HIDDEN],
            output_weights: vec![0.0; actions * NET_HIDDEN],
            output_bias: vec![0.0; actions],
        }
    }

    fn active_inputs(&self, history: &InteractionHistory, perspective: Agent) -> Vec<usize> {
        let mut active = Vec::with_capacity(2 * self.window);
        for back in 0..self.window {
            if let Some(joint) = history.recent(back) {
                let base = back * 2 * self.actions;
                active.push(base + joint.of(perspective).0);
                active.push(base + self.actions + joint.of(perspective.other()).0);
            }
        }
        active
    }
}

impl Behaviour for CnnBehaviour {
    fn distribution(&self, history: &InteractionHistory, perspective: Agent) -> ActionDistribution {
        let active = self.active_inputs(history, perspective);
        let input_len = self.input_len();
        let hidden: Vec<f64> = (0..NET_HIDDEN)
            .map(|h| {
                let row = &self.hidden_weights[h * input_len..(h + 1) * input_len];
                (self.hidden_bias[h] + active.iter().map(|&i| row[i]).sum::<f64>()).tanh()
            })
            .collect();
        let logits: Vec<f64> = (0..self.actions)
            .map(|a| {
                let row = &self.output_weights[a * NET_HIDDEN..(a + 1) * NET_HIDDEN];
                self.output_bias[a] + row.iter().zip(&hidden).map(|(w, x)| w * x).sum::<f64>()
            })
            .collect();
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let weights = logits.iter().map(|l| (l - max).exp()).collect();
        ActionDistribution::from_weights(weights).expect("softmax weights are positive")
    }

    fn actions(&self) -> usize {
        self.actions
    }
}

pub fn generate_cnn(seed: u64, actions: usize) -> CnnBehaviour {
    let mut rng = RandomSource::new(seed, STREAM_CNN).rng();
    let window = rng.random_range(1..=MAX_NET_WINDOW);
    let mut net = CnnBehaviour::zeroed(actions, window);
    net.seed = seed;
    let mut normal = || rng.sample::<f64, _>(StandardNormal);
    for w in net
        .hidden_weights
        .iter_mut()
        .chain(net.hidden_bias.iter_mut())
        .chain(net.output_weights.iter_mut())
        .chain(net.output_bias.iter_mut())
    {
        *w = normal();
    }
    net
}

/// The behaviour families used in experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BehaviourClass {
    Random,
    Lft,
    Cdt,
    Cnn,
}

impl BehaviourClass {
    pub const ALL: [BehaviourClass; 4] = [
        BehaviourClass::Random,
        BehaviourClass::Lft,
        BehaviourClass::Cdt,
        BehaviourClass::Cnn,
    ];
}

impl fmt::Display for BehaviourClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BehaviourClass::Random => "random",
            BehaviourClass::Lft => "lft",
            BehaviourClass::Cdt => "cdt",
            BehaviourClass::Cnn => "cnn",
        })
    }
}

impl FromStr for BehaviourClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "random" => Ok(BehaviourClass::Random),
            "lft" => Ok(BehaviourClass::Lft),
            "cdt" => Ok(BehaviourClass::Cdt),
            "cnn" => Ok(BehaviourClass::Cnn),
            other => Err(Error::InvalidConfig(format!(
                "unknown behaviour class `{other}`"
            ))),
        }
    }
}

/// Any generated behaviour, serializable as class name plus parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "lowercase")]
pub enum BehaviourDescriptor {
    Random(RandomBehaviour),
    Lft(LftBehaviour),
    Cdt(CdtBehaviour),
    Cnn(CnnBehaviour),
}

impl BehaviourDescriptor {
    /// Generates a behaviour of `class` for the side `role`. `game` is only
    /// used by the leader-follower class, which requires two actions.
    pub fn generate(
        class: BehaviourClass,
        seed: u64,
        actions: usize,
        game: &MatrixGame,
        role: Agent,
    ) -> Result<Self> {
        if actions < 2 {
            return Err(Error::TooFewActions(actions));
        }
        Ok(match class {
            BehaviourClass::Random => {
                BehaviourDescriptor::Random(RandomBehaviour::new(seed, actions)?)
            }
            BehaviourClass::Lft => {
                if actions != 2 {
                    return Err(Error::InvalidConfig(format!(
                        "the lft class plays 2x2 games and needs 2 actions, got {actions}"
                    )));
                }
                BehaviourDescriptor::Lft(generate_lft(seed, game, role))
            }
            BehaviourClass::Cdt => BehaviourDescriptor::Cdt(generate_cdt(seed, actions)),
            BehaviourClass::Cnn => BehaviourDescriptor::Cnn(generate_cnn(seed, actions)),
        })
    }

    /// Like [`generate`](Self::generate), but draws decision trees as
    /// members of the population identified by `population_seed`, so trees
    /// from one population share most of their leaves. Other classes ignore
    /// the population.
    pub fn generate_member(
        class: BehaviourClass,
        population_seed: u64,
        seed: u64,
        actions: usize,
        game: &MatrixGame,
        role: Agent,
    ) -> Result<Self> {
        match class {
            BehaviourClass::Cdt if actions >= 2 => Ok(BehaviourDescriptor::Cdt(
                generate_cdt_member(population_seed, seed, actions),
            )),
            _ => Self::generate(class, seed, actions, game, role),
        }
    }

    pub fn class(&self) -> BehaviourClass {
        match self {
            BehaviourDescriptor::Random(_) => BehaviourClass::Random,
            BehaviourDescriptor::Lft(_) => BehaviourClass::Lft,
            BehaviourDescriptor::Cdt(_) => BehaviourClass::Cdt,
            BehaviourDescriptor::Cnn(_) => BehaviourClass::Cnn,
        }
    }

    /// Structural equality: equal up to the seed that generated them.
    ///
    /// Random behaviours are defined entirely by their seed, so for them this
    /// is plain equality.
    pub fn same_behaviour(&self, other: &BehaviourDescriptor) -> bool {
        use BehaviourDescriptor::*;
        match (self, other) {
            (Random(a), Random(b)) => a == b,
            (Lft(a), Lft(b)) => {
                a.game == b.game
                    && a.role == b.role
                    && a.target_cycle == b.target_cycle
                    && a.punish_action == b.punish_action
                    && a.punish_len == b.punish_len
                    && a.noise == b.noise
            }
            (Cdt(a), Cdt(b)) => {
                a.actions == b.actions
                    && a.depth == b.depth
                    && a.leaves == b.leaves
                    && a.default_leaf == b.default_leaf
            }
            (Cnn(a), Cnn(b)) => {
                a.actions == b.actions
                    && a.window == b.window
                    && a.hidden_weights == b.hidden_weights
                    && a.hidden_bias == b.hidden_bias
                    && a.output_weights == b.output_weights
                    && a.output_bias == b.output_bias
            }
            _ => false,
        }
    }
}

impl Behaviour for BehaviourDescriptor {
    fn distribution(&self, history: &InteractionHistory, perspective: Agent) -> ActionDistribution {
        match self {
            BehaviourDescriptor::Random(b) => b.distribution(history, perspective),
            BehaviourDescriptor::Lft(b) => b.distribution(history, perspective),
            BehaviourDescriptor::Cdt(b) => b.distribution(history, perspective),
            BehaviourDescriptor::Cnn(b) => b.distribution(history, perspective),
        }
    }

    fn actions(&self) -> usize {
        match self {
            BehaviourDescriptor::Random(b) => b.actions,
            BehaviourDescriptor::Lft(_) => 2,
            BehaviourDescriptor::Cdt(b) => b.actions,
            BehaviourDescriptor::Cnn(b) => b.actions,
        }
    }
}
