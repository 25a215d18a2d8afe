//! Online frequentist testing of behavioural hypotheses.
//!
//! An agent observes another agent's actions and asks whether they are
//! consistent with a hypothesised behaviour. At every step the observed action
//! vector is scored against the hypothesis and compared, through a pairwise
//! test statistic, with vectors sampled from the hypothesis itself. The
//! statistic's distribution is learned online as a skew-normal, and the
//! hypothesis is rejected when the resulting p-value drops below a
//! significance level.
//!
//! * [`domain`]: actions, histories, behaviours, seeded random streams
//! * [`scores`]: incremental score functions
//! * [`statistic`]: the pairwise test statistic and weighting schemes
//! * [`skewnormal`]: density, fitting, mode and p-value
//! * [`engine`]: the online test
//! * [`behaviours`]: seeded behaviour generators used in experiments
//! * [`harness`]: batch experiments, CSV output and the CLI

pub mod behaviours;
pub mod domain;
pub mod engine;
pub mod error;
pub mod harness;
pub mod scores;
pub mod simplex;
pub mod skewnormal;
pub mod statistic;

pub use domain::{
    ActionDistribution, ActionId, Agent, Behaviour, InteractionHistory, JointAction, RandomSource,
};
pub use engine::{Engine, EngineConfig, RefitSchedule, StepOutcome, TraceRow};
pub use error::{Error, Result};
pub use scores::{ScoreId, ScoreSet};
pub use skewnormal::{FitResult, SkewNormalParams};
pub use statistic::{PairStatistic, WeightingScheme};
