//! Plain-text run configuration.
//!
//! One `key = value` pair per line; `#` starts a comment. Unknown keys are
//! rejected. Command-line flags are applied afterwards through the same
//! [`RunConfig::set`] so that they always win.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use xlpe_core::btg::Aggregation;
use xlpe_core::lab::TrainConfig;
use xlpe_core::posenc::FusionShape;
use xlpe_core::rng::derive_seed;
use xlpe_core::xlsan::{ModelConfig, Variant};

use crate::{Error, Result};

/// Synthetic corpus settings.
#[derive(Debug, Clone, PartialEq)]
pub struct DataConfig {
    /// Training pairs.
    pub train_pairs: usize,
    /// Held-out pairs.
    pub eval_pairs: usize,
    /// Shortest sentence.
    pub min_len: usize,
    /// Longest sentence.
    pub max_len: usize,
    /// Inversion probability of the generating BTG trees.
    pub p_invert: f64,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            train_pairs: 20_000,
            eval_pairs: 500,
            min_len: 8,
            max_len: 16,
            p_invert: 0.5,
        }
    }
}

/// Everything a command needs, from a config file plus flag overrides.
///
/// `seed` is the root of all randomness: datasets derive their seeds from
/// it, and it is the model seed unless `seeds` lists several runs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Root seed.
    pub seed: u64,
    /// Model seeds for repeated runs; empty means `[seed]`.
    pub seeds: Vec<u64>,
    /// Architecture (its `seed` field is overwritten per run).
    pub model: ModelConfig,
    /// Optimizer settings.
    pub train: TrainConfig,
    /// Synthetic data.
    pub data: DataConfig,
    /// τ values for `sweep-tau`.
    pub taus: Vec<usize>,
    /// Noise ratios for `sweep-noise`.
    pub ratios: Vec<f64>,
    /// Representative-position rule for `reorder`.
    pub aggregation: Aggregation,
    /// Output directory for reports.
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            seeds: Vec::new(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            data: DataConfig::default(),
            taus: vec![0, 2, 4, 8],
            ratios: vec![0.0, 0.05, 0.1, 0.2],
            aggregation: Aggregation::Mean,
            out: PathBuf::from("out"),
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Input(format!("invalid value `{value}` for `{key}`")))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

/// Keys accepted by [`RunConfig::set`], in echo order.
pub const KEYS: &[&str] = &[
    "seed",
    "seeds",
    "variant",
    "d_model",
    "heads",
    "tau",
    "d_ff",
    "enc_layers",
    "dec_layers",
    "vocab",
    "fusion",
    "xl_injection",
    "epochs",
    "lr",
    "batch",
    "warmup",
    "noise_ratio",
    "train_pairs",
    "eval_pairs",
    "min_len",
    "max_len",
    "p_invert",
    "taus",
    "ratios",
    "aggregation",
    "out",
];

impl RunConfig {
    /// Reads a config file over the defaults.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(Error::read(path))?;
        let mut cfg = Self::default();
        cfg.apply_text(&text)
            .map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
        Ok(cfg)
    }

    /// Applies every `key = value` line of `text`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Input(format!("line {}: expected `key = value`", no + 1)))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::Input(format!("line {}: {e}", no + 1)))?;
        }
        Ok(())
    }

    /// Sets one key. Unknown keys and unparsable values are errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let m = &mut self.model;
        let t = &mut self.train;
        let d = &mut self.data;
        match key {
            "seed" => self.seed = parse(key, value)?,
            "seeds" => self.seeds = parse_list(key, value)?,
            "variant" => m.variant = value.parse::<Variant>()?,
            "d_model" => m.d_model = parse(key, value)?,
            "heads" => m.heads = parse(key, value)?,
            "tau" => m.tau = parse(key, value)?,
            "d_ff" => m.d_ff = parse(key, value)?,
            "enc_layers" => m.enc_layers = parse(key, value)?,
            "dec_layers" => m.dec_layers = parse(key, value)?,
            "vocab" => m.vocab = parse(key, value)?,
            "fusion" => {
                m.fusion = match value {
                    "full" => FusionShape::Full,
                    "diagonal" => FusionShape::Diagonal,
                    _ => return Err(Error::Input(format!("fusion must be `full` or `diagonal`, got `{value}`"))),
                }
            }
            "xl_injection" => m.xl_injection = value.parse()?,
            "epochs" => t.epochs = parse(key, value)?,
            "lr" => t.lr = parse(key, value)?,
            "batch" => t.batch = parse(key, value)?,
            "warmup" => t.warmup = parse(key, value)?,
            "noise_ratio" => t.noise_ratio = parse(key, value)?,
            "train_pairs" => d.train_pairs = parse(key, value)?,
            "eval_pairs" => d.eval_pairs = parse(key, value)?,
            "min_len" => d.min_len = parse(key, value)?,
            "max_len" => d.max_len = parse(key, value)?,
            "p_invert" => d.p_invert = parse(key, value)?,
            "taus" => self.taus = parse_list(key, value)?,
            "ratios" => self.ratios = parse_list(key, value)?,
            "aggregation" => {
                self.aggregation = match value {
                    "mean" => Aggregation::Mean,
                    "min" => Aggregation::Min,
                    "max" => Aggregation::Max,
                    _ => return Err(Error::Input(format!("aggregation must be mean, min or max, got `{value}`"))),
                }
            }
            "out" => self.out = PathBuf::from(value),
            _ => return Err(Error::Input(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// Rejects inconsistent settings before any work starts.
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.train.validate()?;
        let d = &self.data;
        if d.min_len < 2 || d.min_len > d.max_len {
            return Err(Error::Input(format!(
                "need 2 <= min_len <= max_len, got {}..{}",
                d.min_len, d.max_len
            )));
        }
        if d.train_pairs == 0 || d.eval_pairs == 0 {
            return Err(Error::Input("train_pairs and eval_pairs must be positive".into()));
        }
        if self.train.epochs == 0 {
            return Err(Error::Input("epochs must be positive".into()));
        }
        if !(0.0..=1.0).contains(&d.p_invert) {
            return Err(Error::Input(format!("p_invert must lie in [0, 1], got {}", d.p_invert)));
        }
        Ok(())
    }

    /// Model seeds of the runs.
    pub fn run_seeds(&self) -> Vec<u64> {
        if self.seeds.is_empty() {
            vec![self.seed]
        } else {
            self.seeds.clone()
        }
    }

    /// Seed of the training corpus.
    pub fn train_data_seed(&self) -> u64 {
        derive_seed(self.seed, "train-data")
    }

    /// Seed of the held-out corpus.
    pub fn eval_data_seed(&self) -> u64 {
        derive_seed(self.seed, "eval-data")
    }

    /// Model configuration for one run seed.
    pub fn model_for(&self, seed: u64) -> ModelConfig {
        ModelConfig {
            seed,
            ..self.model.clone()
        }
    }

    /// Canonical `key = value` text covering every key. Loading it
    /// reproduces this configuration.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for key in KEYS {
            let _ = writeln!(s, "{key} = {}", self.value_of(key));
        }
        s
    }

    fn value_of(&self, key: &str) -> String {
        let (m, t, d) = (&self.model, &self.train, &self.data);
        match key {
            "seed" => self.seed.to_string(),
            "seeds" => join(&self.seeds),
            "variant" => m.variant.to_string(),
            "d_model" => m.d_model.to_string(),
            "heads" => m.heads.to_string(),
            "tau" => m.tau.to_string(),
            "d_ff" => m.d_ff.to_string(),
            "enc_layers" => m.enc_layers.to_string(),
            "dec_layers" => m.dec_layers.to_string(),
            "vocab" => m.vocab.to_string(),
            "fusion" => match m.fusion {
                FusionShape::Full => "full".into(),
                FusionShape::Diagonal => "diagonal".into(),
            },
            "xl_injection" => m.xl_injection.name().into(),
            "epochs" => t.epochs.to_string(),
            "lr" => t.lr.to_string(),
            "batch" => t.batch.to_string(),
            "warmup" => t.warmup.to_string(),
            "noise_ratio" => t.noise_ratio.to_string(),
            "train_pairs" => d.train_pairs.to_string(),
            "eval_pairs" => d.eval_pairs.to_string(),
            "min_len" => d.min_len.to_string(),
            "max_len" => d.max_len.to_string(),
            "p_invert" => d.p_invert.to_string(),
            "taus" => join(&self.taus),
            "ratios" => join(&self.ratios),
            "aggregation" => match self.aggregation {
                Aggregation::Mean => "mean".into(),
                Aggregation::Min => "min".into(),
                Aggregation::Max => "max".into(),
            },
            "out" => self.out.display().to_string(),
            _ => unreachable!("every key in KEYS has a value"),
        }
    }

    /// Short stable hash of the canonical text, excluding the output
    /// directory so that moving results does not change it.
    pub fn hash(&self) -> String {
        let text: String = self
            .to_text()
            .lines()
            .filter(|l| !l.starts_with("out ="))
            .map(|l| format!("{l}\n"))
            .collect();
        let digest = Sha256::digest(text.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}
