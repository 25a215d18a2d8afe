//! The online test: per-step vector expansion, replicate population, scheduled
//! skew-normal refits and the p-value / reject decision.
//!
//! Three kinds of action vectors grow in lockstep, all scored against the same
//! hypothesised distributions:
//!
//! * the observed vector (actions the other agent actually took),
//! * the reference ("hat") vector, sampled from the hypothesis,
//! * `N` replicate vectors, also sampled from the hypothesis.
//!
//! The observed statistic is `q = T(observed, hat)`; the replicate statistics
//! `T(replicate_n, hat)` form the sample the test distribution is fitted to.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{
    ActionDistribution, ActionId, Agent, Behaviour, InteractionHistory, JointAction, RandomSource,
};
use crate::error::{Error, Result};
use crate::scores::{HypothesisTrace, ScoreSet, ScoreState, StepDistribution};
use crate::skewnormal::{fit_mle_with, FitResult, MleOptions, BETA_CAP};
use crate::statistic::{PairStatistic, WeightingScheme};

pub const DEFAULT_REPLICATES: usize = 50;
pub const DEFAULT_ALPHA: f64 = 0.01;

/// When the test distribution is re-fitted. The first fit is always at `t = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "every")]
pub enum RefitSchedule {
    /// After a fit at `t`, the next fit is at `t + ⌊√t⌋`.
    #[default]
    SqrtSpacing,
    /// A fit every `k` steps.
    Interval(usize),
}

impl RefitSchedule {
    pub fn next_after(&self, t: usize) -> usize {
        match *self {
            RefitSchedule::SqrtSpacing => t + (t as f64).sqrt().floor() as usize,
            RefitSchedule::Interval(k) => t + k.max(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    /// Size of the tested agent's action set.
    pub actions: usize,
    pub score_ids: ScoreSet,
    pub scheme: WeightingScheme,
    pub n_replicates: usize,
    pub alpha: f64,
    pub seed: u64,
    #[serde(default)]
    pub refit: RefitSchedule,
    #[serde(default = "default_beta_cap")]
    pub beta_cap: f64,
}

fn default_beta_cap() -> f64 {
    BETA_CAP
}

impl EngineConfig {
    pub fn new(actions: usize) -> Self {
        Self {
            actions,
            score_ids: ScoreSet::ALL,
            scheme: WeightingScheme::Uniform,
            n_replicates: DEFAULT_REPLICATES,
            alpha: DEFAULT_ALPHA,
            seed: 0,
            refit: RefitSchedule::SqrtSpacing,
            beta_cap: BETA_CAP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.actions < 2 {
            return Err(Error::InvalidConfig(format!(
                "actions must be at least 2, got {}",
                self.actions
            )));
        }
        // the skew-normal fit needs three points
        if self.n_replicates < 3 {
            return Err(Error::InvalidConfig(format!(
                "n_replicates must be at least 3, got {}",
                self.n_replicates
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.beta_cap.is_nan() || self.beta_cap <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "beta_cap must be positive, got {}",
                self.beta_cap
            )));
        }
        if let RefitSchedule::Interval(0) = self.refit {
            return Err(Error::InvalidConfig(
                "refit interval must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// A vector sampled from the hypothesis, with its own random stream.
#[derive(Debug, Clone)]
struct SampledVector {
    state: ScoreState,
    rng: ChaCha8Rng,
}

impl SampledVector {
    fn new(actions: usize, source: RandomSource) -> Self {
        Self {
            state: ScoreState::new(actions),
            rng: source.rng(),
        }
    }

    fn extend(&mut self, step: &StepDistribution) {
        let a = step.sample_with(self.rng.random::<f64>());
        self.state.update(a, step);
    }
}

/// Result of one engine step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub t: usize,
    pub q: f64,
    pub p: f64,
    pub reject: bool,
    /// Whether the test distribution was re-fitted at this step.
    pub refit: bool,
    pub fit: FitResult,
}

/// Full state of one running test.
#[derive(Debug, Clone)]
pub struct Engine {
    cfg: EngineConfig,
    mle: MleOptions,
    t: usize,
    trace: HypothesisTrace,
    observed: ScoreState,
    hat: SampledVector,
    replicates: Vec<SampledVector>,
    q_pair: PairStatistic,
    d_pairs: Vec<PairStatistic>,
    fitted: Option<FitResult>,
    next_fit_at: usize,
    last_p: f64,
}

impl Engine {
    /// Hat vector uses stream 0 of `cfg.seed`; replicate `n` uses stream `n + 1`.
    pub fn new(cfg: EngineConfig) -> Result<Self> {
        cfg.validate()?;
        let a = cfg.actions;
        let hat = SampledVector::new(a, RandomSource::new(cfg.seed, 0));
        let replicates = (0..cfg.n_replicates)
            .map(|n| SampledVector::new(a, RandomSource::new(cfg.seed, n as u64 + 1)))
            .collect();
        let pair = PairStatistic::new(cfg.score_ids, cfg.scheme);
        let mle = MleOptions {
            beta_cap: cfg.beta_cap,
            ..MleOptions::default()
        };
        Ok(Self {
            mle,
            t: 0,
            trace: HypothesisTrace::new(a),
            observed: ScoreState::new(a),
            hat,
            replicates,
            q_pair: pair,
            d_pairs: vec![pair; cfg.n_replicates],
            fitted: None,
            next_fit_at: 1,
            last_p: 1.0,
            cfg,
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// Current observed statistic `q`.
    pub fn q(&self) -> f64 {
        self.q_pair.value()
    }

    /// Current replicate statistics.
    pub fn replicate_statistics(&self) -> Vec<f64> {
        self.d_pairs.iter().map(PairStatistic::value).collect()
    }

    pub fn fitted(&self) -> Option<&FitResult> {
        self.fitted.as_ref()
    }

    pub fn next_fit_at(&self) -> usize {
        self.next_fit_at
    }

    pub fn last_p(&self) -> f64 {
        self.last_p
    }

    /// Absorbs one observed action.
    ///
    /// `hypothesised` must be the hypothesis evaluated on the history before
    /// this step's joint action is appended.
    pub fn step(
        &mut self,
        observed: ActionId,
        hypothesised: &ActionDistribution,
    ) -> Result<StepOutcome> {
        let a = self.cfg.actions;
        if hypothesised.len() != a {
            return Err(Error::ActionCountMismatch {
                expected: a,
                got: hypothesised.len(),
            });
        }
        if observed.0 >= a {
            return Err(Error::InvalidAction {
                action: observed.0,
                actions: a,
            });
        }

        let step = StepDistribution::new(hypothesised);
        self.trace.absorb(&step);
        self.observed.update(observed, &step);
        self.hat.extend(&step);
        for rep in &mut self.replicates {
            rep.extend(&step);
        }
        self.t += 1;

        let ids = self.cfg.score_ids;
        let hat_scores = self.hat.state.values(&self.trace, ids)?;
        let obs_scores = self.observed.values(&self.trace, ids)?;
        self.q_pair.push(&obs_scores, &hat_scores);
        for (rep, pair) in self.replicates.iter().zip(&mut self.d_pairs) {
            let scores = rep.state.values(&self.trace, ids)?;
            pair.push(&scores, &hat_scores);
        }

        let refit = self.t == self.next_fit_at;
        if refit {
            let sample = self.replicate_statistics();
            self.fitted = Some(fit_mle_with(&sample, &self.mle)?);
            self.next_fit_at = self.cfg.refit.next_after(self.t);
        }
        let fit = self.fitted.expect("first fit happens at t = 1");

        let q = self.q_pair.value();
        let p = fit.p_value(q);
        self.last_p = p;
        Ok(StepOutcome {
            t: self.t,
            q,
            p,
            reject: p < self.cfg.alpha,
            refit,
            fit,
        })
    }
}

/// One row of a simulated process trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: usize,
    pub q: f64,
    pub xi: f64,
    pub omega: f64,
    pub beta: f64,
    pub p: f64,
    pub reject: bool,
    pub refit_flag: bool,
}

impl From<&StepOutcome> for TraceRow {
    fn from(o: &StepOutcome) -> Self {
        Self {
            t: o.t,
            q: o.q,
            xi: o.fit.params.xi,
            omega: o.fit.params.omega,
            beta: o.fit.params.beta,
            p: o.p,
            reject: o.reject,
            refit_flag: o.refit,
        }
    }
}

/// Simulates the two-agent loop for `steps` steps and tests `hypothesis`
/// against the actions of agent `J`.
///
/// Agent `I` follows `opponent`, agent `J` follows `truth`. Their actions are
/// drawn from streams 0 and 1 of `agents_seed`.
pub fn run_process<H, B, O>(
    cfg: &EngineConfig,
    hypothesis: &H,
    truth: &B,
    opponent: &O,
    steps: usize,
    agents_seed: u64,
) -> Result<Vec<TraceRow>>
where
    H: Behaviour + ?Sized,
    B: Behaviour + ?Sized,
    O: Behaviour + ?Sized,
{
    if steps == 0 {
        return Err(Error::InvalidConfig("steps must be at least 1".into()));
    }
    if truth.actions() != cfg.actions || hypothesis.actions() != cfg.actions {
        return Err(Error::ActionCountMismatch {
            expected: cfg.actions,
            got: truth.actions(),
        });
    }
    let mut engine = Engine::new(cfg.clone())?;
    let mut rng_i = RandomSource::new(agents_seed, 0).rng();
    let mut rng_j = RandomSource::new(agents_seed, 1).rng();
    let mut history = InteractionHistory::new();
    let mut rows = Vec::with_capacity(steps);
    for _ in 0..steps {
        let a_i = opponent.distribution(&history, Agent::I).sample(&mut rng_i);
        let a_j = truth.distribution(&history, Agent::J).sample(&mut rng_j);
        let hypothesised = hypothesis.distribution(&history, Agent::J);
        let outcome = engine.step(a_j, &hypothesised)?;
        rows.push(TraceRow::from(&outcome));
        history.push(JointAction::new(a_i, a_j));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(actions: usize, a: usize) -> ActionDistribution {
        ActionDistribution::point_mass(actions, ActionId(a)).unwrap()
    }

    #[test]
    fn init_defaults() {
        let engine = Engine::new(EngineConfig::new(3)).unwrap();
        assert_eq!(engine.t(), 0);
        assert_eq!(engine.replicate_statistics().len(), 50);
        assert_eq!(engine.next_fit_at(), 1);
        assert_eq!(engine.last_p(), 1.0);
        assert!(engine.fitted().is_none());
    }

    #[test]
    fn replicate_count_follows_config() {
        let cfg = EngineConfig {
            n_replicates: 10,
            ..EngineConfig::new(2)
        };
        assert_eq!(Engine::new(cfg).unwrap().replicate_statistics().len(), 10);
    }

    #[test]
    fn invalid_configs() {
        for alpha in [0.0, 1.0, -0.1, f64::NAN] {
            let cfg = EngineConfig {
                alpha,
                ..EngineConfig::new(2)
            };
            assert!(matches!(Engine::new(cfg), Err(Error::InvalidConfig(_))));
        }
        let cfg = EngineConfig {
            n_replicates: 0,
            ..EngineConfig::new(2)
        };
        assert!(Engine::new(cfg).is_err());
        assert!(Engine::new(EngineConfig::new(1)).is_err());
    }

    #[test]
    fn sqrt_schedule() {
        let schedule = RefitSchedule::SqrtSpacing;
        let mut t = 1;
        let mut times = vec![t];
        while times.len() < 12 {
            t = schedule.next_after(t);
            times.push(t);
        }
        assert_eq!(times, vec![1, 2, 3, 4, 6, 8, 10, 13, 16, 20, 24, 28]);
    }

    #[test]
    fn engine_refits_on_schedule() {
        let mut engine = Engine::new(EngineConfig::new(2)).unwrap();
        let d = ActionDistribution::new(vec![0.3, 0.7]).unwrap();
        let mut refits = vec![];
        for _ in 0..30 {
            let o = engine.step(ActionId(1), &d).unwrap();
            if o.refit {
                refits.push(o.t);
            }
        }
        assert_eq!(refits, vec![1, 2, 3, 4, 6, 8, 10, 13, 16, 20, 24, 28]);
    }

    #[test]
    fn matched_deterministic_hypothesis_never_rejects() {
        let mut engine = Engine::new(EngineConfig::new(3)).unwrap();
        for t in 0..200 {
            let a = (t * 7 + 1) % 3;
            let o = engine.step(ActionId(a), &point(3, a)).unwrap();
            assert_eq!(o.q, 0.0);
            assert!(o.fit.degenerate);
            assert_eq!(o.p, 1.0);
            assert!(!o.reject);
        }
        assert!(engine.replicate_statistics().iter().all(|&d| d == 0.0));
    }

    #[test]
    fn contradicting_deterministic_hypothesis_rejects() {
        let mut engine = Engine::new(EngineConfig::new(2)).unwrap();
        for _ in 0..5 {
            assert!(!engine.step(ActionId(0), &point(2, 0)).unwrap().reject);
        }
        let o = engine.step(ActionId(1), &point(2, 0)).unwrap();
        assert!(o.q != 0.0);
        assert_eq!(o.p, 0.0);
        assert!(o.reject);
        // the mismatch stays in every later prefix
        for _ in 0..50 {
            assert!(engine.step(ActionId(0), &point(2, 0)).unwrap().reject);
        }
    }

    #[test]
    fn step_validates_inputs() {
        let mut engine = Engine::new(EngineConfig::new(2)).unwrap();
        assert!(engine.step(ActionId(2), &point(2, 0)).is_err());
        assert!(engine.step(ActionId(0), &point(3, 0)).is_err());
    }

    #[test]
    fn same_seed_same_outcomes() {
        let cfg = EngineConfig {
            seed: 99,
            ..EngineConfig::new(4)
        };
        let d = ActionDistribution::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let run = || {
            let mut e = Engine::new(cfg.clone()).unwrap();
            (0..40)
                .map(|t| e.step(ActionId(t % 4), &d).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }
}
