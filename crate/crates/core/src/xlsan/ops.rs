//! Stand-alone forms of the attention equations, for use outside a full
//! model (tests, inspection, small experiments).

use super::attention::{attend, AttentionLayer, Streams};
use super::ModelConfig;
use crate::btg::Permutation;
use crate::numkit::{matmul, Matrix};
use crate::posenc::{absolute_pe, add_pe, fuse_inxl, xl_pe, FusionParams};
use crate::{Error, Result};

/// `(Z·W_Q, Z·W_K, Z·W_V)`.
pub fn project_qkv(z: &Matrix, layer: &AttentionLayer) -> Result<(Matrix, Matrix, Matrix)> {
    Ok((matmul(z, &layer.wq)?, matmul(z, &layer.wk)?, matmul(z, &layer.wv)?))
}

/// Single-head `softmax(Q·Kᵀ/√d_k)·V`; also returns the weights.
pub fn scaled_attention(q: &Matrix, k: &Matrix, v: &Matrix) -> Result<(Matrix, Matrix)> {
    if q.cols() != k.cols() || k.rows() != v.rows() {
        return Err(Error::Shape {
            op: "scaled_attention",
            left: q.shape(),
            right: k.shape(),
        });
    }
    if v.cols() == q.cols() {
        let (out, mut w) = attend(q, k, v, 1, false)?;
        return Ok((out, w.remove(0)));
    }
    // Value width differs from key width: compute weights, then mix values.
    let (_, mut w) = attend(q, k, k, 1, false)?;
    let w = w.remove(0);
    Ok((matmul(&w, v)?, w))
}

/// Multi-head self-attention over one stream followed by `W_O`.
pub fn multi_head_forward(z: &Matrix, layer: &AttentionLayer, heads: usize) -> Result<Matrix> {
    Ok(layer
        .forward(Streams::single(z), Streams::single(z), heads, 0, false)?
        .0)
}

/// Head-level XL attention: heads `0..τ` attend over `X + PE_xl`, the rest
/// over `X + PE_abs`; outputs are concatenated under one `W_O`.
pub fn headxl_forward(
    x: &Matrix,
    perm: &Permutation,
    layer: &AttentionLayer,
    cfg: &ModelConfig,
) -> Result<Matrix> {
    let pe_abs = absolute_pe(x.rows(), cfg.d_model)?;
    let z_abs = add_pe(x, &pe_abs)?;
    let z_xl = add_pe(x, &xl_pe(perm, cfg.d_model)?)?;
    xl_heads(&z_abs, &z_xl, layer, cfg)
}

/// HeadXL whose XL heads read `X + tanh(PE_abs·U + PE_xl·V)`.
pub fn combination_forward(
    x: &Matrix,
    perm: &Permutation,
    layer: &AttentionLayer,
    params: &FusionParams,
    cfg: &ModelConfig,
) -> Result<Matrix> {
    let pe_abs = absolute_pe(x.rows(), cfg.d_model)?;
    let fused = fuse_inxl(&pe_abs, &xl_pe(perm, cfg.d_model)?, params)?;
    let z_abs = add_pe(x, &pe_abs)?;
    let z_xl = add_pe(x, &fused)?;
    xl_heads(&z_abs, &z_xl, layer, cfg)
}

fn xl_heads(z_abs: &Matrix, z_xl: &Matrix, layer: &AttentionLayer, cfg: &ModelConfig) -> Result<Matrix> {
    cfg.validate()?;
    let s = Streams {
        abs: z_abs,
        xl: Some(z_xl),
    };
    Ok(layer.forward(s, s, cfg.heads, cfg.tau, false)?.0)
}
