//! CSV output for traces and experiment reports.
//!
//! Trace columns: `t,q,xi,omega,beta,p,reject,refit_flag` with the two flags
//! written as `0`/`1`. Floats use the shortest representation that parses
//! back to the same value, so re-reading a trace is lossless.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::engine::TraceRow;
use crate::error::{Error, Result};
use crate::harness::{step_accuracy, AccuracyReport, ExperimentSpec};

pub const TRACE_HEADER: [&str; 8] = ["t", "q", "xi", "omega", "beta", "p", "reject", "refit_flag"];

pub const REPORT_HEADER: [&str; 14] = [
    "behaviour_class",
    "opponent_class",
    "actions",
    "n",
    "alpha",
    "scores",
    "scheme",
    "processes",
    "steps",
    "null_fraction",
    "seed",
    "refit",
    "acc_null",
    "acc_alt",
];

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

pub fn write_trace<W: Write>(out: W, rows: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for row in rows {
        w.write_record([
            row.t.to_string(),
            row.q.to_string(),
            row.xi.to_string(),
            row.omega.to_string(),
            row.beta.to_string(),
            row.p.to_string(),
            flag(row.reject).to_string(),
            flag(row.refit_flag).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_csv(path: &Path, rows: &[TraceRow]) -> Result<()> {
    write_trace(File::create(path)?, rows)
}

fn parse_flag(s: &str) -> Result<bool> {
    match s {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(Error::InvalidConfig(format!(
            "expected 0 or 1, got `{other}`"
        ))),
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::InvalidConfig(format!("not a number: `{s}`")))
}

pub fn read_trace_csv(path: &Path) -> Result<Vec<TraceRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != TRACE_HEADER {
        return Err(Error::InvalidConfig(format!(
            "unexpected trace header {header:?}"
        )));
    }
    r.records()
        .map(|rec| {
            let rec = rec?;
            Ok(TraceRow {
                t: rec[0]
                    .parse()
                    .map_err(|_| Error::InvalidConfig(format!("bad time `{}`", &rec[0])))?,
                q: parse_f64(&rec[1])?,
                xi: parse_f64(&rec[2])?,
                omega: parse_f64(&rec[3])?,
                beta: parse_f64(&rec[4])?,
                p: parse_f64(&rec[5])?,
                reject: parse_flag(&rec[6])?,
                refit_flag: parse_flag(&rec[7])?,
            })
        })
        .collect()
}

/// Recomputes `(acc_null, acc_alt)` from per-process traces.
pub fn accuracy_from_traces(runs: &[(bool, Vec<TraceRow>)]) -> (Option<f64>, Option<f64>) {
    let mean = |null: bool| {
        let accs: Vec<f64> = runs
            .iter()
            .filter(|(is_null, _)| *is_null == null)
            .map(|(is_null, trace)| step_accuracy(*is_null, trace))
            .collect();
        (!accs.is_empty()).then(|| accs.iter().sum::<f64>() / accs.len() as f64)
    };
    (mean(true), mean(false))
}

fn spec_fields(spec: &ExperimentSpec) -> Vec<String> {
    let refit = match spec.refit {
        crate::engine::RefitSchedule::SqrtSpacing => "sqrt".to_string(),
        crate::engine::RefitSchedule::Interval(k) => format!("every{k}"),
    };
    vec![
        spec.behaviour_class.to_string(),
        spec.opponent().to_string(),
        spec.actions.to_string(),
        spec.n_replicates.to_string(),
        spec.alpha.to_string(),
        spec.score_ids.to_string(),
        spec.scheme.to_string(),
        spec.processes.to_string(),
        spec.steps.to_string(),
        spec.null_fraction.to_string(),
        spec.master_seed.to_string(),
        refit,
    ]
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes one row per report, in the given order.
pub fn write_report<W: Write>(out: W, reports: &[AccuracyReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_HEADER)?;
    for report in reports {
        let mut fields = spec_fields(&report.spec);
        fields.push(opt(report.acc_null));
        fields.push(opt(report.acc_alt));
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_report_csv(path: &Path, reports: &[AccuracyReport]) -> Result<()> {
    write_report(File::create(path)?, reports)
}
