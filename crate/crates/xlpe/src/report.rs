//! Report files: one CSV row per trained cell and a JSON summary with
//! per-cell means and standard deviations over seeds.
//!
//! Wall-clock time is deliberately absent so that repeated runs produce
//! byte-identical files.

use std::fmt::Write as _;

use serde::Serialize;
use xlpe_core::lab::{summarize, AerScore, CellSummary, MeanStd, SweepCell};

use crate::config::RunConfig;
use crate::Result;

/// Header of the per-cell CSV.
pub const CSV_HEADER: &str = "config_hash,tau,ratio,seed,loss,accuracy,aer,precision,recall";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// CSV with one row per cell. `loss` is the last training-epoch loss; the
/// other metrics are held-out.
pub fn cells_csv(hash: &str, cells: &[SweepCell]) -> String {
    let mut s = format!("{CSV_HEADER}\n");
    for c in cells {
        let e = c.report.eval;
        let _ = writeln!(
            s,
            "{hash},{},{},{},{},{},{},{},{}",
            c.tau,
            c.noise_ratio,
            c.seed,
            opt(c.report.loss_curve.last().copied()),
            opt(e.map(|e| e.accuracy)),
            opt(e.map(|e| e.alignment.aer)),
            opt(e.map(|e| e.alignment.precision)),
            opt(e.map(|e| e.alignment.recall)),
        );
    }
    s
}

/// CSV row for a scored alignment file (no training involved).
pub fn alignment_csv(hash: &str, seed: u64, score: &AerScore) -> String {
    format!(
        "{CSV_HEADER}\n{hash},,,{seed},,,{},{},{}\n",
        score.aer, score.precision, score.recall
    )
}

#[derive(Serialize)]
struct Stat {
    mean: f64,
    std: f64,
}

impl From<MeanStd> for Stat {
    fn from(m: MeanStd) -> Self {
        Self { mean: m.mean, std: m.std }
    }
}

#[derive(Serialize)]
struct Group {
    tau: usize,
    noise_ratio: f64,
    runs: usize,
    loss: Stat,
    accuracy: Stat,
    aer: Stat,
    precision: Stat,
    recall: Stat,
}

impl From<&CellSummary> for Group {
    fn from(c: &CellSummary) -> Self {
        Self {
            tau: c.tau,
            noise_ratio: c.noise_ratio,
            runs: c.runs,
            loss: c.loss.into(),
            accuracy: c.accuracy.into(),
            aer: c.aer.into(),
            precision: c.precision.into(),
            recall: c.recall.into(),
        }
    }
}

#[derive(Serialize)]
struct Run<'a> {
    tau: usize,
    noise_ratio: f64,
    seed: u64,
    steps: usize,
    loss_curve: &'a [f64],
    eval_loss: Option<f64>,
    accuracy: Option<f64>,
    aer: Option<f64>,
    precision: Option<f64>,
    recall: Option<f64>,
    model: &'a str,
}

#[derive(Serialize)]
struct Summary<'a> {
    command: &'a str,
    config_hash: String,
    config: serde_json::Map<String, serde_json::Value>,
    summary: Vec<Group>,
    runs: Vec<Run<'a>>,
}

fn config_map(cfg: &RunConfig) -> serde_json::Map<String, serde_json::Value> {
    cfg.to_text()
        .lines()
        .filter_map(|l| l.split_once(" = "))
        .filter(|(k, _)| *k != "out")
        .map(|(k, v)| (k.to_owned(), serde_json::Value::String(v.to_owned())))
        .collect()
}

/// Pretty-printed JSON summary of a set of cells, echoing the effective
/// configuration (minus the output directory, so results can be compared
/// across directories).
pub fn summary_json(command: &str, cfg: &RunConfig, cells: &[SweepCell]) -> Result<String> {
    let groups = summarize(cells)?;
    let doc = Summary {
        command,
        config_hash: cfg.hash(),
        config: config_map(cfg),
        summary: groups.iter().map(Group::from).collect(),
        runs: cells
            .iter()
            .map(|c| {
                let e = c.report.eval;
                Run {
                    tau: c.tau,
                    noise_ratio: c.noise_ratio,
                    seed: c.seed,
                    steps: c.report.steps,
                    loss_curve: &c.report.loss_curve,
                    eval_loss: e.map(|e| e.loss),
                    accuracy: e.map(|e| e.accuracy),
                    aer: e.map(|e| e.alignment.aer),
                    precision: e.map(|e| e.alignment.precision),
                    recall: e.map(|e| e.alignment.recall),
                    model: &c.report.config,
                }
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc).map_err(|e| crate::Error::Input(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Fixed-width table of seed-averaged metrics for standard output.
pub fn summary_table(cells: &[SweepCell]) -> Result<String> {
    let mut s = format!(
        "{:>4} {:>6} {:>4} {:>17} {:>17} {:>17}\n",
        "tau", "ratio", "runs", "loss", "accuracy", "aer"
    );
    for g in summarize(cells)? {
        let _ = writeln!(
            s,
            "{:>4} {:>6} {:>4} {:>8.4} ± {:<6.4} {:>8.4} ± {:<6.4} {:>8.4} ± {:<6.4}",
            g.tau,
            g.noise_ratio,
            g.runs,
            g.loss.mean,
            g.loss.std,
            g.accuracy.mean,
            g.accuracy.std,
            g.aer.mean,
            g.aer.std
        );
    }
    Ok(s)
}
