use crate::numkit::{matmul, matmul_nt, matmul_tn, relu, relu_backward, Matrix};
use crate::Result;

/// Saved state of [`ffn_forward`].
#[derive(Debug, Clone)]
pub(crate) struct FfnCache {
    x: Matrix,
    pre: Matrix,
    hidden: Matrix,
}

/// Position-wise `relu(x·W1 + b1)·W2 + b2`.
pub(crate) fn ffn_forward(
    x: &Matrix,
    w1: &Matrix,
    b1: &Matrix,
    w2: &Matrix,
    b2: &Matrix,
) -> Result<(Matrix, FfnCache)> {
    let pre = matmul(x, w1)?.add_row_broadcast(b1)?;
    let hidden = relu(&pre);
    let out = matmul(&hidden, w2)?.add_row_broadcast(b2)?;
    Ok((
        out,
        FfnCache {
            x: x.clone(),
            pre,
            hidden,
        },
    ))
}

/// Gradients of the feed-forward sublayer.
pub(crate) struct FfnGrads {
    pub dx: Matrix,
    pub w1: Matrix,
    pub b1: Matrix,
    pub w2: Matrix,
    pub b2: Matrix,
}

pub(crate) fn ffn_backward(
    cache: &FfnCache,
    w1: &Matrix,
    w2: &Matrix,
    dy: &Matrix,
) -> Result<FfnGrads> {
    let gw2 = matmul_tn(&cache.hidden, dy)?;
    let gb2 = dy.col_sums();
    let d_hidden = matmul_nt(dy, w2)?;
    let d_pre = relu_backward(&cache.pre, &d_hidden)?;
    let gw1 = matmul_tn(&cache.x, &d_pre)?;
    let gb1 = d_pre.col_sums();
    let dx = matmul_nt(&d_pre, w1)?;
    Ok(FfnGrads {
        dx,
        w1: gw1,
        b1: gb1,
        w2: gw2,
        b2: gb2,
    })
}
