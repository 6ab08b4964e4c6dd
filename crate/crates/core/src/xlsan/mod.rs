//! Multi-head self-attention with cross-lingual position integration.
//!
//! Three strategies are supported on top of the absolute-encoding
//! baseline:
//!
//! * **InXL**: the encoder input is `X + tanh(PE_abs·U + PE_xl·V)`.
//! * **HeadXL**: the projection weights are split column-wise; the first
//!   `τ` heads attend over `X + PE_xl`, the remaining `H − τ` over
//!   `X + PE_abs`, and one shared `W_O` mixes the concatenation. `τ = 0` is
//!   the plain Transformer.
//! * **Combination**: HeadXL whose XL heads read the InXL encoding.
//!
//! Layers are post-norm Transformer layers (attention, residual, layer
//! norm, ReLU feed-forward, residual, layer norm).

mod attention;
mod config;
mod layers;
mod model;
mod ops;

pub use attention::{
    AttentionCache, AttentionGrads, AttentionInputGrads, AttentionLayer, AttentionWeights, Streams,
};
pub use config::{ContextFreePos, ModelConfig, Variant, XlInjection};
pub use model::{count_parameters, DecoderOutput, Model, PairCache, PairStats};
pub use ops::{combination_forward, headxl_forward, multi_head_forward, project_qkv, scaled_attention};
