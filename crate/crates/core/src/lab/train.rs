use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::metrics::{alignment_from_weights, AerScore, AlignmentCounts};
use super::SyntheticPair;
use crate::btg::Permutation;
use crate::numkit::Matrix;
use crate::posenc::inject_noise;
use crate::rng::{derive_indexed, derive_seed, rng_from_seed};
use crate::xlsan::{Model, ModelConfig};
use crate::{Error, Result};

/// Adam first-moment decay.
pub const ADAM_BETA1: f64 = 0.9;
/// Adam second-moment decay.
pub const ADAM_BETA2: f64 = 0.98;
/// Adam denominator offset.
pub const ADAM_EPS: f64 = 1e-9;

/// Optimization settings. Model initialization, shuffling and noise all
/// derive from the model configuration's seed.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Passes over the training data.
    pub epochs: usize,
    /// Peak learning rate.
    pub lr: f64,
    /// Sentence pairs per update.
    pub batch: usize,
    /// Linear warm-up length in updates (0 for none).
    pub warmup: usize,
    /// Fraction of reordering indices swapped in each training pair.
    pub noise_ratio: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 2,
            lr: 2e-3,
            batch: 32,
            warmup: 200,
            noise_ratio: 0.0,
        }
    }
}

impl TrainConfig {
    /// Checks ranges.
    pub fn validate(&self) -> Result<()> {
        if self.batch == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        if !(self.lr >= 0.0) || !self.lr.is_finite() {
            return Err(Error::Config(format!("learning rate must be finite and >= 0, got {}", self.lr)));
        }
        if !(0.0..=1.0).contains(&self.noise_ratio) {
            return Err(Error::Config(format!("noise ratio must lie in [0, 1], got {}", self.noise_ratio)));
        }
        Ok(())
    }

    /// One-line `key=value` rendering.
    pub fn describe(&self) -> String {
        format!(
            "epochs={} lr={} batch={} warmup={} noise_ratio={}",
            self.epochs, self.lr, self.batch, self.warmup, self.noise_ratio
        )
    }
}

/// Held-out metrics with gold reorderings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalMetrics {
    /// Mean token cross-entropy (teacher forced).
    pub loss: f64,
    /// Fraction of target tokens whose argmax prediction is correct.
    pub accuracy: f64,
    /// Corpus-level alignment scores of the extracted attention alignments.
    pub alignment: AerScore,
}

/// Outcome of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    /// Model and optimizer settings.
    pub config: String,
    /// Root seed.
    pub seed: u64,
    /// Mean training token loss per completed epoch.
    pub loss_curve: Vec<f64>,
    /// Updates performed.
    pub steps: usize,
    /// Held-out metrics; absent when training aborted.
    pub eval: Option<EvalMetrics>,
    /// Elapsed seconds, filled in by callers that have a clock.
    pub wall_clock_secs: Option<f64>,
}

/// A trained model and its report.
#[derive(Debug, Clone)]
pub struct Trained {
    /// Final weights.
    pub model: Model,
    /// Training report.
    pub report: ExperimentReport,
}

/// Training stopped early; `report` covers the epochs that completed.
#[derive(Debug, Clone, PartialEq)]
pub struct Aborted {
    /// Cause.
    pub error: Error,
    /// Partial report, when the run got far enough to have one.
    pub report: Option<ExperimentReport>,
}

impl From<Error> for Aborted {
    fn from(error: Error) -> Self {
        Self { error, report: None }
    }
}

impl From<Aborted> for Error {
    fn from(a: Aborted) -> Self {
        a.error
    }
}

struct Adam {
    m: Vec<Matrix>,
    v: Vec<Matrix>,
    t: i32,
}

impl Adam {
    fn new(model: &Model) -> Self {
        Self {
            m: model.zero_grads(),
            v: model.zero_grads(),
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [Matrix], grads: &[Matrix], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - libm::pow(ADAM_BETA1, f64::from(self.t));
        let c2 = 1.0 - libm::pow(ADAM_BETA2, f64::from(self.t));
        let rate = lr * libm::sqrt(c2) / c1;
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            let it = p
                .data_mut()
                .iter_mut()
                .zip(g.data())
                .zip(m.data_mut().iter_mut().zip(v.data_mut().iter_mut()));
            for ((p, &g), (m, v)) in it {
                *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
                *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
                *p -= rate * *m / (libm::sqrt(*v) + ADAM_EPS);
            }
        }
    }
}

/// Trains with Adam on summed token cross-entropy, normalized per batch by
/// its token count. Each training pair's reordering is corrupted once by
/// [`inject_noise`] at `tc.noise_ratio`; evaluation uses gold reorderings.
pub fn train(
    cfg: &ModelConfig,
    data: &[SyntheticPair],
    eval: &[SyntheticPair],
    tc: &TrainConfig,
) -> core::result::Result<Trained, Aborted> {
    tc.validate()?;
    if data.is_empty() {
        return Err(Error::Config("training set is empty".into()).into());
    }
    let mut model = Model::new(cfg.clone())?;
    let seed = cfg.seed;
    let perms: Vec<Permutation> = data
        .iter()
        .enumerate()
        .map(|(i, p)| inject_noise(&p.perm, tc.noise_ratio, derive_indexed(seed, "noise", i as u64)))
        .collect::<Result<_>>()?;
    let mut report = ExperimentReport {
        config: format!("{} {}", cfg.describe(), tc.describe()),
        seed,
        loss_curve: Vec::with_capacity(tc.epochs),
        steps: 0,
        eval: None,
        wall_clock_secs: None,
    };
    let mut adam = Adam::new(&model);
    let mut grads = model.zero_grads();
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut shuffle = rng_from_seed(derive_seed(seed, "shuffle"));
    for epoch in 0..tc.epochs {
        order.shuffle(&mut shuffle);
        let (mut epoch_loss, mut epoch_tokens) = (0.0, 0usize);
        for batch in order.chunks(tc.batch) {
            let tokens: usize = batch.iter().map(|&i| data[i].tgt.len()).sum();
            let scale = 1.0 / tokens as f64;
            for g in grads.iter_mut() {
                g.data_mut().fill(0.0);
            }
            for &i in batch {
                let p = &data[i];
                let step_error = |error| Aborted {
                    error,
                    report: Some(report.clone()),
                };
                let (stats, cache) = model
                    .forward_pair(&p.src, &p.tgt, Some(&perms[i]))
                    .map_err(|e| match e {
                        Error::NonFinite(_) => step_error(Error::Diverged {
                            epoch,
                            step: report.steps,
                        }),
                        e => step_error(e),
                    })?;
                epoch_loss += stats.loss;
                model.backward_pair(cache, scale, &mut grads)?;
            }
            epoch_tokens += tokens;
            if !grads.iter().all(Matrix::is_finite) {
                return Err(Aborted {
                    error: Error::Diverged {
                        epoch,
                        step: report.steps,
                    },
                    report: Some(report),
                });
            }
            report.steps += 1;
            let lr = if tc.warmup > 0 {
                tc.lr * (report.steps as f64 / tc.warmup as f64).min(1.0)
            } else {
                tc.lr
            };
            adam.step(model.params_mut(), &grads, lr);
        }
        report.loss_curve.push(epoch_loss / epoch_tokens as f64);
    }
    if !eval.is_empty() {
        report.eval = Some(evaluate(&model, eval)?);
    }
    Ok(Trained { model, report })
}

/// Teacher-forced loss and accuracy, plus corpus AER of the extracted
/// alignments, using each pair's gold reordering.
pub fn evaluate(model: &Model, pairs: &[SyntheticPair]) -> Result<EvalMetrics> {
    if pairs.is_empty() {
        return Err(Error::Validation("evaluation set is empty".into()));
    }
    let (mut loss, mut tokens, mut correct) = (0.0, 0usize, 0usize);
    let mut counts = AlignmentCounts::default();
    for p in pairs {
        let (stats, cache) = model.forward_pair(&p.src, &p.tgt, Some(&p.perm))?;
        loss += stats.loss;
        tokens += stats.tokens;
        correct += stats.correct;
        let layer = cache.cross_weights.len().saturating_sub(2);
        let hyp = alignment_from_weights(&cache.cross_weights[layer])?;
        counts += AlignmentCounts::of(&hyp, &p.alignment);
    }
    Ok(EvalMetrics {
        loss: loss / tokens as f64,
        accuracy: correct as f64 / tokens as f64,
        alignment: counts.score()?,
    })
}
