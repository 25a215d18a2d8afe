//! Batch experiments: many independent processes, each testing either the
//! true behaviour or a different one, aggregated into per-step accuracy.

pub mod cli;
pub mod report;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::behaviours::{generate_game, BehaviourClass, BehaviourDescriptor, MatrixGame};
use crate::domain::{Agent, Behaviour, InteractionHistory, JointAction, RandomSource};
use crate::engine::{
    run_process, Engine, EngineConfig, RefitSchedule, TraceRow, DEFAULT_ALPHA, DEFAULT_REPLICATES,
};
use crate::error::{Error, Result};
use crate::scores::ScoreSet;
use crate::skewnormal::{ks_distance, FitResult, BETA_CAP};
use crate::statistic::WeightingScheme;

pub use report::{accuracy_from_traces, read_trace_csv, write_report_csv, write_trace_csv};

/// Attempts at drawing a hypothesis that differs from the true behaviour.
const MAX_REDRAWS: u64 = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub behaviour_class: BehaviourClass,
    /// Class of agent `I`; `None` means the same as `behaviour_class`.
    pub opponent_class: Option<BehaviourClass>,
    pub actions: usize,
    pub n_replicates: usize,
    pub alpha: f64,
    pub score_ids: ScoreSet,
    pub scheme: WeightingScheme,
    pub processes: usize,
    pub steps: usize,
    pub null_fraction: f64,
    pub master_seed: u64,
    pub refit: RefitSchedule,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            behaviour_class: BehaviourClass::Random,
            opponent_class: None,
            actions: 2,
            n_replicates: DEFAULT_REPLICATES,
            alpha: DEFAULT_ALPHA,
            score_ids: ScoreSet::ALL,
            scheme: WeightingScheme::Uniform,
            processes: 100,
            steps: 2000,
            null_fraction: 0.5,
            master_seed: 0,
            refit: RefitSchedule::SqrtSpacing,
        }
    }
}

impl ExperimentSpec {
    pub fn opponent(&self) -> BehaviourClass {
        self.opponent_class.unwrap_or(self.behaviour_class)
    }

    pub fn validate(&self) -> Result<()> {
        if self.processes < 2 {
            return Err(Error::InvalidConfig(format!(
                "processes must be at least 2, got {}",
                self.processes
            )));
        }
        if self.steps < 1 {
            return Err(Error::InvalidConfig("steps must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.null_fraction) {
            return Err(Error::InvalidConfig(format!(
                "null_fraction must lie in [0, 1], got {}",
                self.null_fraction
            )));
        }
        for class in [self.behaviour_class, self.opponent()] {
            if class == BehaviourClass::Lft && self.actions != 2 {
                return Err(Error::InvalidConfig(format!(
                    "the lft class needs actions = 2, got {}",
                    self.actions
                )));
            }
        }
        self.engine_config(0).validate()
    }

    pub fn engine_config(&self, seed: u64) -> EngineConfig {
        EngineConfig {
            actions: self.actions,
            score_ids: self.score_ids,
            scheme: self.scheme,
            n_replicates: self.n_replicates,
            alpha: self.alpha,
            seed,
            refit: self.refit,
            beta_cap: BETA_CAP,
        }
    }

    /// Processes `0..round(null_fraction * processes)` test the true behaviour.
    pub fn is_null_process(&self, index: usize) -> bool {
        ((index as f64 + 0.5) / self.processes as f64) < self.null_fraction
    }
}

/// The behaviours and seeds of one process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessSetup {
    pub index: usize,
    pub is_null: bool,
    pub game: MatrixGame,
    pub opponent: BehaviourDescriptor,
    pub truth: BehaviourDescriptor,
    pub hypothesis: BehaviourDescriptor,
    pub engine_seed: u64,
    pub agents_seed: u64,
}

/// Draws the behaviours for process `index`; a pure function of
/// `(spec, index)`.
pub fn setup_process(spec: &ExperimentSpec, index: usize) -> Result<ProcessSetup> {
    let base = RandomSource::new(spec.master_seed, index as u64);
    let game = generate_game(base.derive(1));
    let population = base.derive(6);
    let member = |class, seed, role| {
        BehaviourDescriptor::generate_member(class, population, seed, spec.actions, &game, role)
    };
    let opponent = member(spec.opponent(), base.derive(2), Agent::I)?;
    let truth = member(spec.behaviour_class, base.derive(3), Agent::J)?;
    let is_null = spec.is_null_process(index);
    let hypothesis = if is_null {
        truth.clone()
    } else {
        let mut attempt = 0;
        loop {
            let candidate = member(spec.behaviour_class, base.derive(100 + attempt), Agent::J)?;
            if !candidate.same_behaviour(&truth) {
                break candidate;
            }
            attempt += 1;
            if attempt >= MAX_REDRAWS {
                return Err(Error::InvalidConfig(format!(
                    "could not draw a hypothesis different from the true behaviour in {MAX_REDRAWS} attempts"
                )));
            }
        }
    };
    Ok(ProcessSetup {
        index,
        is_null,
        game,
        opponent,
        truth,
        hypothesis,
        engine_seed: base.derive(4),
        agents_seed: base.derive(5),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessRun {
    pub index: usize,
    pub is_null: bool,
    pub trace: Vec<TraceRow>,
}

impl ProcessRun {
    /// Fraction of steps with the correct decision.
    pub fn accuracy(&self) -> f64 {
        step_accuracy(self.is_null, &self.trace)
    }
}

pub(crate) fn step_accuracy(is_null: bool, trace: &[TraceRow]) -> f64 {
    let correct = trace.iter().filter(|row| row.reject != is_null).count();
    correct as f64 / trace.len() as f64
}

pub fn run_single(spec: &ExperimentSpec, index: usize) -> Result<ProcessRun> {
    let setup = setup_process(spec, index)?;
    let trace = run_process(
        &spec.engine_config(setup.engine_seed),
        &setup.hypothesis,
        &setup.truth,
        &setup.opponent,
        spec.steps,
        setup.agents_seed,
    )?;
    Ok(ProcessRun {
        index,
        is_null: setup.is_null,
        trace,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessSummary {
    pub index: usize,
    pub is_null: bool,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub spec: ExperimentSpec,
    /// Mean per-process accuracy over processes with a correct hypothesis.
    pub acc_null: Option<f64>,
    /// Mean per-process accuracy over processes with a wrong hypothesis.
    pub acc_alt: Option<f64>,
    pub processes: Vec<ProcessSummary>,
    /// Per-process traces, when requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub traces: Option<Vec<ProcessRun>>,
    /// Mean p-value at each step over the wrong-hypothesis processes.
    pub mean_p_alt: Vec<f64>,
    /// Mean p-value at each step over the correct-hypothesis processes.
    pub mean_p_null: Vec<f64>,
}

impl AccuracyReport {
    /// Average of `acc_null` and `acc_alt` over the groups that exist.
    pub fn overall(&self) -> f64 {
        let parts: Vec<f64> = [self.acc_null, self.acc_alt]
            .into_iter()
            .flatten()
            .collect();
        parts.iter().sum::<f64>() / parts.len() as f64
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ExperimentOptions {
    pub keep_traces: bool,
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<AccuracyReport> {
    run_experiment_with(spec, ExperimentOptions::default())
}

/// Runs every process (in parallel) and aggregates. The result does not depend
/// on scheduling.
pub fn run_experiment_with(
    spec: &ExperimentSpec,
    options: ExperimentOptions,
) -> Result<AccuracyReport> {
    spec.validate()?;
    let runs = (0..spec.processes)
        .into_par_iter()
        .map(|index| run_single(spec, index))
        .collect::<Result<Vec<_>>>()?;

    let processes: Vec<ProcessSummary> = runs
        .iter()
        .map(|run| ProcessSummary {
            index: run.index,
            is_null: run.is_null,
            accuracy: run.accuracy(),
        })
        .collect();
    let mean_of = |null: bool| {
        let accs: Vec<f64> = processes
            .iter()
            .filter(|p| p.is_null == null)
            .map(|p| p.accuracy)
            .collect();
        (!accs.is_empty()).then(|| accs.iter().sum::<f64>() / accs.len() as f64)
    };
    let mean_p = |null: bool| {
        let group: Vec<&ProcessRun> = runs.iter().filter(|r| r.is_null == null).collect();
        if group.is_empty() {
            return Vec::new();
        }
        (0..spec.steps)
            .map(|t| group.iter().map(|r| r.trace[t].p).sum::<f64>() / group.len() as f64)
            .collect()
    };
    Ok(AccuracyReport {
        spec: spec.clone(),
        acc_null: mean_of(true),
        acc_alt: mean_of(false),
        mean_p_alt: mean_p(false),
        mean_p_null: mean_p(true),
        processes,
        traces: options.keep_traces.then_some(runs),
    })
}

/// A snapshot of the replicate statistics and their fit at one time step,
/// next to a large reference population sharing the same reference vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitCheck {
    pub t: usize,
    pub sample: Vec<f64>,
    pub reference: Vec<f64>,
    pub fit: FitResult,
    /// KS distance between the fitted density and the reference population.
    pub ks_reference: f64,
}

/// Runs process `index` of `spec` up to `at` steps and compares the fitted
/// test distribution against `reference` replicates.
///
/// The reference engine shares the seed of the tested engine, so it has the
/// same reference vector and its first `n_replicates` replicates coincide.
pub fn fit_check(
    spec: &ExperimentSpec,
    index: usize,
    at: usize,
    reference: usize,
) -> Result<FitCheck> {
    spec.validate()?;
    if at < 1 {
        return Err(Error::InvalidConfig(
            "fit-check time must be at least 1".into(),
        ));
    }
    if reference < 3 {
        return Err(Error::InvalidConfig(
            "reference population needs at least 3 replicates".into(),
        ));
    }
    let setup = setup_process(spec, index)?;
    let cfg = spec.engine_config(setup.engine_seed);
    let mut engine = Engine::new(cfg.clone())?;
    let mut reference_engine = Engine::new(EngineConfig {
        n_replicates: reference,
        // only the replicate statistics are used
        refit: RefitSchedule::Interval(usize::MAX / 2),
        ..cfg
    })?;
    let mut rng_i = RandomSource::new(setup.agents_seed, 0).rng();
    let mut rng_j = RandomSource::new(setup.agents_seed, 1).rng();
    let mut history = InteractionHistory::new();
    for _ in 0..at {
        let a_i = setup
            .opponent
            .distribution(&history, Agent::I)
            .sample(&mut rng_i);
        let a_j = setup
            .truth
            .distribution(&history, Agent::J)
            .sample(&mut rng_j);
        let hypothesised = setup.hypothesis.distribution(&history, Agent::J);
        engine.step(a_j, &hypothesised)?;
        reference_engine.step(a_j, &hypothesised)?;
        history.push(JointAction::new(a_i, a_j));
    }
    let sample = engine.replicate_statistics();
    let fit = crate::skewnormal::fit_mle(&sample)?;
    let reference = reference_engine.replicate_statistics();
    let ks_reference = if fit.degenerate {
        let misses = reference
            .iter()
            .filter(|&&x| (x - fit.params.xi).abs() > crate::skewnormal::DEGENERATE_MATCH_TOL)
            .count();
        misses as f64 / reference.len() as f64
    } else {
        ks_distance(&reference, &fit.params)
    };
    Ok(FitCheck {
        t: at,
        sample,
        reference,
        fit,
        ks_reference,
    })
}
