//! Desk-scale experiment harness: synthetic copy-translation data with BTG
//! reorderings, training, alignment extraction and AER, and sweeps over
//! the XL head count and reordering noise.

mod data;
mod metrics;
mod sweep;
mod train;

pub use data::{gen_dataset, SyntheticPair};
pub use metrics::{
    aer, alignment_from_weights, extract_alignment, position_free_ceiling, AerScore,
    AlignmentCounts,
};
pub use sweep::{summarize, sweep_noise, sweep_tau, CellSummary, MeanStd, SweepCell};
pub use train::{
    evaluate, train, Aborted, EvalMetrics, ExperimentReport, TrainConfig, Trained, ADAM_BETA1,
    ADAM_BETA2, ADAM_EPS,
};
