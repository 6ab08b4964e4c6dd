use alloc::format;
use alloc::string::String;
use core::fmt;
use core::str::FromStr;

use crate::posenc::FusionShape;
use crate::{Error, Result};

/// Position handling of the context-free (encoder-less) model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ContextFreePos {
    /// Embeddings plus absolute encoding.
    Ape,
    /// Embeddings plus the InXL fused encoding.
    InXl,
    /// Bare embeddings.
    NoPos,
}

/// Position-encoding strategy of the encoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Absolute sinusoidal encoding added to the input.
    Ape,
    /// `X + tanh(PE_abs·U + PE_xl·V)` as the encoder input.
    InXl,
    /// `τ` heads read `X + PE_xl`, the rest read `X + PE_abs`.
    HeadXl,
    /// HeadXL whose XL heads read `X + PE_InXL`.
    Combination,
    /// No position signal in the encoder.
    NoPos,
    /// No encoder layers: source embeddings feed the decoder directly.
    ContextFree(ContextFreePos),
}

impl Variant {
    /// All variants, in a stable order.
    pub const ALL: [Variant; 8] = [
        Variant::Ape,
        Variant::InXl,
        Variant::HeadXl,
        Variant::Combination,
        Variant::NoPos,
        Variant::ContextFree(ContextFreePos::Ape),
        Variant::ContextFree(ContextFreePos::InXl),
        Variant::ContextFree(ContextFreePos::NoPos),
    ];

    /// Short lowercase name used in configs and reports.
    pub fn name(self) -> &'static str {
        match self {
            Variant::Ape => "ape",
            Variant::InXl => "inxl",
            Variant::HeadXl => "headxl",
            Variant::Combination => "combination",
            Variant::NoPos => "nopos",
            Variant::ContextFree(ContextFreePos::Ape) => "cf-ape",
            Variant::ContextFree(ContextFreePos::InXl) => "cf-inxl",
            Variant::ContextFree(ContextFreePos::NoPos) => "cf-nopos",
        }
    }

    /// True when the variant owns InXL fusion parameters.
    pub fn uses_fusion(self) -> bool {
        matches!(
            self,
            Variant::InXl | Variant::Combination | Variant::ContextFree(ContextFreePos::InXl)
        )
    }

    /// True when some heads read a cross-lingual stream.
    pub fn uses_xl_heads(self) -> bool {
        matches!(self, Variant::HeadXl | Variant::Combination)
    }

    /// True when the variant needs reordering indices at all.
    pub fn needs_permutation(self) -> bool {
        self.uses_fusion() || self.uses_xl_heads()
    }

    /// True for the encoder-less variants.
    pub fn is_context_free(self) -> bool {
        matches!(self, Variant::ContextFree(_))
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == key)
            .ok_or_else(|| Error::Config(format!("unknown variant `{s}`")))
    }
}

/// Which encoder layers give XL heads a cross-lingual stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum XlInjection {
    /// Only the first layer; later layers are standard.
    FirstLayer,
    /// Every layer: XL heads of layer `l > 0` read
    /// `H_{l-1} + (PE_xl − PE_abs)`.
    #[default]
    EveryLayer,
}

impl XlInjection {
    /// Config-file spelling.
    pub fn name(self) -> &'static str {
        match self {
            XlInjection::FirstLayer => "first",
            XlInjection::EveryLayer => "every",
        }
    }
}

impl FromStr for XlInjection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "first" => Ok(XlInjection::FirstLayer),
            "every" => Ok(XlInjection::EveryLayer),
            other => Err(Error::Config(format!("unknown xl_injection `{other}`"))),
        }
    }
}

/// Architecture and initialization settings of a model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    /// Embedding width.
    pub d_model: usize,
    /// Attention head count `H`.
    pub heads: usize,
    /// Number of XL-equipped heads `τ`, `0 ≤ τ ≤ H`.
    pub tau: usize,
    /// Hidden width of the position-wise feed-forward sublayers.
    pub d_ff: usize,
    /// Encoder layer count (ignored by context-free variants).
    pub enc_layers: usize,
    /// Decoder layer count.
    pub dec_layers: usize,
    /// Number of content tokens; the decoder adds one start symbol.
    pub vocab: usize,
    /// Position-encoding strategy.
    pub variant: Variant,
    /// Shape of the InXL projections.
    pub fusion: FusionShape,
    /// Layers receiving the XL stream under HeadXL/Combination.
    pub xl_injection: XlInjection,
    /// Seed for parameter initialization.
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            d_model: 64,
            heads: 8,
            tau: 2,
            d_ff: 128,
            enc_layers: 2,
            dec_layers: 2,
            vocab: 50,
            variant: Variant::Ape,
            fusion: FusionShape::Full,
            xl_injection: XlInjection::EveryLayer,
            seed: 1,
        }
    }
}

impl ModelConfig {
    /// Checks divisibility and ranges.
    pub fn validate(&self) -> Result<()> {
        if self.d_model < 2 || self.d_model % 2 != 0 {
            return Err(Error::Config(format!("d_model must be even and >= 2, got {}", self.d_model)));
        }
        if self.heads == 0 || self.d_model % self.heads != 0 {
            return Err(Error::Config(format!(
                "head count {} must divide d_model {}",
                self.heads, self.d_model
            )));
        }
        if self.tau > self.heads {
            return Err(Error::Config(format!(
                "tau {} outside 0..={}",
                self.tau, self.heads
            )));
        }
        if self.dec_layers == 0 {
            return Err(Error::Config("need at least one decoder layer".into()));
        }
        if self.vocab < 2 {
            return Err(Error::Config(format!("vocab must be >= 2, got {}", self.vocab)));
        }
        if self.d_ff == 0 {
            return Err(Error::Config("d_ff must be >= 1".into()));
        }
        Ok(())
    }

    /// Per-head key/value width `d_model / H`.
    pub fn d_head(&self) -> usize {
        self.d_model / self.heads
    }

    /// Index of the start-of-sequence symbol in the decoder vocabulary.
    pub fn bos(&self) -> usize {
        self.vocab
    }

    /// Encoder layers actually built for this variant.
    pub fn encoder_layers(&self) -> usize {
        if self.variant.is_context_free() {
            0
        } else {
            self.enc_layers
        }
    }

    /// One-line `key=value` rendering, stable across runs.
    pub fn describe(&self) -> String {
        format!(
            "d_model={} heads={} tau={} d_ff={} enc_layers={} dec_layers={} vocab={} variant={} fusion={} xl_injection={} seed={}",
            self.d_model,
            self.heads,
            self.tau,
            self.d_ff,
            self.enc_layers,
            self.dec_layers,
            self.vocab,
            self.variant,
            match self.fusion {
                FusionShape::Full => "full",
                FusionShape::Diagonal => "diagonal",
            },
            self.xl_injection.name(),
            self.seed
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert!("relative".parse::<Variant>().is_err());
    }

    #[test]
    fn validation() {
        let ok = ModelConfig::default();
        ok.validate().unwrap();
        assert_eq!(ok.d_head(), 8);
        let bad_heads = ModelConfig { heads: 6, ..ok.clone() };
        assert!(bad_heads.validate().is_err());
        let bad_tau = ModelConfig { tau: 9, ..ok.clone() };
        assert!(bad_tau.validate().is_err());
        let edge_tau = ModelConfig { tau: 8, ..ok };
        edge_tau.validate().unwrap();
    }
}
