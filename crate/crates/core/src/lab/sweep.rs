use alloc::format;
use alloc::vec::Vec;

use super::train::{train, ExperimentReport, TrainConfig};
use super::SyntheticPair;
use crate::xlsan::ModelConfig;
use crate::{Error, Result};

/// One trained cell of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    /// XL head count used.
    pub tau: usize,
    /// Training noise ratio used.
    pub noise_ratio: f64,
    /// Root seed.
    pub seed: u64,
    /// Report of the run.
    pub report: ExperimentReport,
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanStd {
    /// Arithmetic mean.
    pub mean: f64,
    /// Sample standard deviation (0 for a single value).
    pub std: f64,
}

impl MeanStd {
    /// Summary of `values`; `None` when empty.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            libm::sqrt(values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0))
        } else {
            0.0
        };
        Some(Self { mean, std })
    }
}

/// Seed-aggregated metrics of the cells sharing one `(τ, ratio)` key.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellSummary {
    /// XL head count.
    pub tau: usize,
    /// Noise ratio.
    pub noise_ratio: f64,
    /// Number of seeds.
    pub runs: usize,
    /// Final training loss.
    pub loss: MeanStd,
    /// Held-out token accuracy.
    pub accuracy: MeanStd,
    /// Held-out AER.
    pub aer: MeanStd,
    /// Held-out alignment precision.
    pub precision: MeanStd,
    /// Held-out alignment recall.
    pub recall: MeanStd,
}

/// Groups cells by `(τ, ratio)` in first-appearance order and averages
/// over seeds. Cells without evaluation metrics are an error.
pub fn summarize(cells: &[SweepCell]) -> Result<Vec<CellSummary>> {
    let mut keys: Vec<(usize, f64)> = Vec::new();
    for c in cells {
        if !keys.iter().any(|&(t, r)| t == c.tau && r.to_bits() == c.noise_ratio.to_bits()) {
            keys.push((c.tau, c.noise_ratio));
        }
    }
    keys.into_iter()
        .map(|(tau, ratio)| {
            let group: Vec<&SweepCell> = cells
                .iter()
                .filter(|c| c.tau == tau && c.noise_ratio.to_bits() == ratio.to_bits())
                .collect();
            let pick = |f: &dyn Fn(&SweepCell) -> Option<f64>| -> Result<MeanStd> {
                let v: Vec<f64> = group
                    .iter()
                    .map(|c| f(c).ok_or_else(|| Error::Validation(format!("seed {} has no evaluation", c.seed))))
                    .collect::<Result<_>>()?;
                Ok(MeanStd::of(&v).expect("group is non-empty"))
            };
            Ok(CellSummary {
                tau,
                noise_ratio: ratio,
                runs: group.len(),
                loss: pick(&|c| c.report.loss_curve.last().copied())?,
                accuracy: pick(&|c| c.report.eval.map(|e| e.accuracy))?,
                aer: pick(&|c| c.report.eval.map(|e| e.alignment.aer))?,
                precision: pick(&|c| c.report.eval.map(|e| e.alignment.precision))?,
                recall: pick(&|c| c.report.eval.map(|e| e.alignment.recall))?,
            })
        })
        .collect()
}

fn run(
    cfg: &ModelConfig,
    data: &[SyntheticPair],
    eval: &[SyntheticPair],
    tc: &TrainConfig,
    seeds: &[u64],
    cells: impl IntoIterator<Item = (usize, f64)>,
    mut on_cell: impl FnMut(&SweepCell),
) -> Result<Vec<SweepCell>> {
    let mut out = Vec::new();
    for (tau, noise_ratio) in cells {
        for &seed in seeds {
            let c = ModelConfig { tau, seed, ..cfg.clone() };
            let t = TrainConfig { noise_ratio, ..tc.clone() };
            let report = train(&c, data, eval, &t)?.report;
            let cell = SweepCell {
                tau,
                noise_ratio,
                seed,
                report,
            };
            on_cell(&cell);
            out.push(cell);
        }
    }
    Ok(out)
}

/// Trains one model per `(τ, seed)`; every τ sees the same seeds.
/// `on_cell` is called after each run (for progress output).
pub fn sweep_tau(
    cfg: &ModelConfig,
    data: &[SyntheticPair],
    eval: &[SyntheticPair],
    tc: &TrainConfig,
    taus: &[usize],
    seeds: &[u64],
    on_cell: impl FnMut(&SweepCell),
) -> Result<Vec<SweepCell>> {
    for &tau in taus {
        if tau > cfg.heads {
            return Err(Error::Config(format!("tau {tau} outside 0..={}", cfg.heads)));
        }
    }
    run(cfg, data, eval, tc, seeds, taus.iter().map(|&t| (t, tc.noise_ratio)), on_cell)
}

/// Trains one model per `(noise ratio, seed)` at the configured τ, with a
/// fixed evaluation set.
pub fn sweep_noise(
    cfg: &ModelConfig,
    data: &[SyntheticPair],
    eval: &[SyntheticPair],
    tc: &TrainConfig,
    ratios: &[f64],
    seeds: &[u64],
    on_cell: impl FnMut(&SweepCell),
) -> Result<Vec<SweepCell>> {
    for &r in ratios {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::Config(format!("noise ratio must lie in [0, 1], got {r}")));
        }
    }
    run(cfg, data, eval, tc, seeds, ratios.iter().map(|&r| (cfg.tau, r)), on_cell)
}
