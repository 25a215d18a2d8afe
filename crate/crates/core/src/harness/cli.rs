//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 for invalid flags or configuration, 1 for
//! runtime failures.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::behaviours::BehaviourClass;
use crate::error::{Error, Result};
use crate::harness::{
    fit_check, run_experiment_with, run_single, setup_process, write_report_csv, write_trace_csv,
    ExperimentOptions, ExperimentSpec,
};
use crate::scores::ScoreSet;
use crate::statistic::WeightingScheme;

#[derive(Debug, Parser)]
#[command(
    name = "bhtest",
    version,
    about = "Online testing of behavioural hypotheses"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one process and write its per-step trace.
    Simulate {
        #[command(flatten)]
        spec: SpecArgs,
        /// Index of the process to simulate.
        #[arg(long, default_value_t = 0)]
        process: usize,
        /// Test a hypothesis different from the true behaviour.
        #[arg(long)]
        wrong_hypothesis: bool,
        #[arg(long, default_value = "trace.csv")]
        out: PathBuf,
    },
    /// Run a batch of processes and write the accuracy report.
    Experiment {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, default_value = "report.csv")]
        out: PathBuf,
        /// Also write one trace CSV per process into this directory.
        #[arg(long)]
        trace_dir: Option<PathBuf>,
    },
    /// Dump the replicate statistics, a large reference population and the
    /// fitted test distribution at one time step.
    FitCheck {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, default_value_t = 0)]
        process: usize,
        /// Time step at which to snapshot.
        #[arg(long, default_value_t = 10)]
        at: usize,
        /// Size of the reference population.
        #[arg(long, default_value_t = 10_000)]
        reference: usize,
        #[arg(long, default_value = "fit_check.csv")]
        out: PathBuf,
    },
}

/// Experiment settings; each flag overrides the `--config` file.
#[derive(Debug, Clone, Default, Args)]
pub struct SpecArgs {
    /// JSON file with experiment settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Behaviour class of the tested agent: random, lft, cdt or cnn.
    #[arg(long = "class")]
    pub class: Option<BehaviourClass>,
    /// Behaviour class of the other agent (defaults to --class).
    #[arg(long)]
    pub opponent_class: Option<BehaviourClass>,
    #[arg(long)]
    pub actions: Option<usize>,
    /// Number of replicate vectors.
    #[arg(long = "n")]
    pub n: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Comma-separated score functions, e.g. z1,z3.
    #[arg(long)]
    pub scores: Option<ScoreSet>,
    /// uniform, truemax, truemin, max or min.
    #[arg(long)]
    pub scheme: Option<WeightingScheme>,
    #[arg(long)]
    pub processes: Option<usize>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub null_fraction: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl SpecArgs {
    pub fn resolve(&self) -> Result<ExperimentSpec> {
        let mut spec = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    Error::InvalidConfig(format!("--config {}: {e}", path.display()))
                })?;
                serde_json::from_str(&text).map_err(|e| {
                    Error::InvalidConfig(format!("--config {}: {e}", path.display()))
                })?
            }
            None => ExperimentSpec::default(),
        };
        if let Some(v) = self.class {
            spec.behaviour_class = v;
        }
        if let Some(v) = self.opponent_class {
            spec.opponent_class = Some(v);
        }
        if let Some(v) = self.actions {
            spec.actions = v;
        }
        if let Some(v) = self.n {
            spec.n_replicates = v;
        }
        if let Some(v) = self.alpha {
            spec.alpha = v;
        }
        if let Some(v) = self.scores {
            spec.score_ids = v;
        }
        if let Some(v) = self.scheme {
            spec.scheme = v;
        }
        if let Some(v) = self.processes {
            spec.processes = v;
        }
        if let Some(v) = self.steps {
            spec.steps = v;
        }
        if let Some(v) = self.null_fraction {
            spec.null_fraction = v;
        }
        if let Some(v) = self.seed {
            spec.master_seed = v;
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            spec,
            process,
            wrong_hypothesis,
            out,
        } => {
            let mut spec = spec.resolve()?;
            spec.null_fraction = if wrong_hypothesis { 0.0 } else { 1.0 };
            spec.processes = spec.processes.max(process + 1);
            let run = run_single(&spec, process)?;
            write_trace_csv(&out, &run.trace)?;
            eprintln!(
                "wrote {} steps to {} (accuracy {:.4})",
                run.trace.len(),
                out.display(),
                run.accuracy()
            );
        }
        Command::Experiment {
            spec,
            out,
            trace_dir,
        } => {
            let spec = spec.resolve()?;
            let report = run_experiment_with(
                &spec,
                ExperimentOptions {
                    keep_traces: trace_dir.is_some(),
                },
            )?;
            write_report_csv(&out, std::slice::from_ref(&report))?;
            if let (Some(dir), Some(traces)) = (trace_dir, &report.traces) {
                std::fs::create_dir_all(&dir)?;
                for run in traces {
                    let label = if run.is_null { "null" } else { "alt" };
                    write_trace_csv(
                        &dir.join(format!("process_{:04}_{label}.csv", run.index)),
                        &run.trace,
                    )?;
                }
            }
            let show = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
            eprintln!(
                "acc_null {} acc_alt {} -> {}",
                show(report.acc_null),
                show(report.acc_alt),
                out.display()
            );
        }
        Command::FitCheck {
            spec,
            process,
            at,
            reference,
            out,
        } => {
            let mut spec = spec.resolve()?;
            spec.processes = spec.processes.max(process + 1);
            let check = fit_check(&spec, process, at, reference)?;
            let mut w = csv::Writer::from_path(&out)?;
            w.write_record(["source", "value"])?;
            for x in &check.sample {
                w.write_record(["sample", &x.to_string()])?;
            }
            for x in &check.reference {
                w.write_record(["reference", &x.to_string()])?;
            }
            w.flush()?;
            let setup = setup_process(&spec, process)?;
            let summary = serde_json::json!({
                "t": check.t,
                "correct_hypothesis": setup.is_null,
                "xi": check.fit.params.xi,
                "omega": check.fit.params.omega,
                "beta": check.fit.params.beta,
                "mode": check.fit.mode,
                "degenerate": check.fit.degenerate,
                "ks_reference": check.ks_reference,
            });
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{summary}")?;
        }
    }
    Ok(())
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::InvalidConfig(msg)) => {
            eprintln!("error: invalid configuration: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

pub fn main() -> ExitCode {
    main_with_args(std::env::args_os())
}
