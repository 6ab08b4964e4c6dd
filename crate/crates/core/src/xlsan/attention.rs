use alloc::vec;
use alloc::vec::Vec;

use crate::numkit::{matmul, matmul_nt, matmul_tn, softmax_in_place, softmax_row_backward, Matrix};
use crate::{Error, Result};

/// Query or memory input of an attention layer.
///
/// `xl` is the cross-lingual stream read by the first `τ` heads; heads
/// `τ..H` read `abs`. Without an XL stream every head reads `abs`.
#[derive(Debug, Clone, Copy)]
pub struct Streams<'a> {
    /// Absolute-position stream `Z_abs`.
    pub abs: &'a Matrix,
    /// Cross-lingual stream `Z_xl`, if any.
    pub xl: Option<&'a Matrix>,
}

impl<'a> Streams<'a> {
    /// Single stream read by every head.
    pub fn single(z: &'a Matrix) -> Self {
        Self { abs: z, xl: None }
    }
}

/// Projection weights of one multi-head attention block.
///
/// Columns of `wq`, `wk`, `wv` are grouped by head: head `h` owns
/// `h·d_k .. (h+1)·d_k`. Under HeadXL the first `τ·d_k` columns are the
/// XL block and the rest the APE block; `wo` is shared.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionLayer {
    /// Query projection, `d_model × d_model`.
    pub wq: Matrix,
    /// Key projection, `d_model × d_model`.
    pub wk: Matrix,
    /// Value projection, `d_model × d_model`.
    pub wv: Matrix,
    /// Output projection, `H·d_v × d_model`.
    pub wo: Matrix,
}

/// Gradients with respect to an [`AttentionLayer`]'s weights.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionGrads {
    /// dL/dW_Q.
    pub wq: Matrix,
    /// dL/dW_K.
    pub wk: Matrix,
    /// dL/dW_V.
    pub wv: Matrix,
    /// dL/dW_O.
    pub wo: Matrix,
}

/// Gradients with respect to the attention inputs.
#[derive(Debug, Clone)]
pub struct AttentionInputGrads {
    /// dL/d(query abs stream).
    pub query_abs: Matrix,
    /// dL/d(query XL stream), when one was supplied.
    pub query_xl: Option<Matrix>,
    /// dL/d(memory abs stream).
    pub memory_abs: Matrix,
    /// dL/d(memory XL stream), when one was supplied.
    pub memory_xl: Option<Matrix>,
}

/// Saved forward state of one attention call.
#[derive(Debug, Clone)]
pub struct AttentionCache {
    query_abs: Matrix,
    query_xl: Option<Matrix>,
    memory_abs: Matrix,
    memory_xl: Option<Matrix>,
    q: Matrix,
    k: Matrix,
    v: Matrix,
    weights: Vec<Matrix>,
    concat: Matrix,
    xl_cols: usize,
}

impl AttentionCache {
    /// Per-head attention weights, each `T_query × T_memory`.
    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }
}

/// Projects with the first `xl_cols` columns of `w` applied to `xl` and the
/// rest to `abs`. With `xl_cols == 0` this is exactly `abs · w`.
fn split_project(abs: &Matrix, xl: Option<&Matrix>, w: &Matrix, xl_cols: usize) -> Result<Matrix> {
    match xl {
        Some(xl) if xl_cols > 0 => {
            if xl_cols == w.cols() {
                return matmul(xl, w);
            }
            let left = matmul(xl, &w.col_slice(0..xl_cols))?;
            let right = matmul(abs, &w.col_slice(xl_cols..w.cols()))?;
            Matrix::hcat(&[&left, &right])
        }
        _ => matmul(abs, w),
    }
}

/// Backward of [`split_project`]; accumulates into `dw`, returns
/// `(d_abs, d_xl)`.
fn split_project_backward(
    abs: &Matrix,
    xl: Option<&Matrix>,
    w: &Matrix,
    xl_cols: usize,
    dy: &Matrix,
    dw: &mut Matrix,
) -> Result<(Matrix, Option<Matrix>)> {
    match xl {
        Some(xl) if xl_cols > 0 => {
            let d = w.cols();
            let dy_xl = dy.col_slice(0..xl_cols);
            let w_xl = w.col_slice(0..xl_cols);
            dw.add_col_block(0, &matmul_tn(xl, &dy_xl)?)?;
            let d_xl = matmul_nt(&dy_xl, &w_xl)?;
            let d_abs = if xl_cols < d {
                let dy_abs = dy.col_slice(xl_cols..d);
                let w_abs = w.col_slice(xl_cols..d);
                dw.add_col_block(xl_cols, &matmul_tn(abs, &dy_abs)?)?;
                matmul_nt(&dy_abs, &w_abs)?
            } else {
                Matrix::zeros(abs.rows(), abs.cols())
            };
            Ok((d_abs, Some(d_xl)))
        }
        _ => {
            dw.add_assign(&matmul_tn(abs, dy)?)?;
            let d_abs = matmul_nt(dy, w)?;
            Ok((d_abs, xl.map(|x| Matrix::zeros(x.rows(), x.cols()))))
        }
    }
}

/// Per-head scaled dot-product attention over column groups of `q`, `k`,
/// `v`; returns the concatenated head outputs and the per-head weights.
pub(crate) fn attend(
    q: &Matrix,
    k: &Matrix,
    v: &Matrix,
    heads: usize,
    causal: bool,
) -> Result<(Matrix, Vec<Matrix>)> {
    if q.cols() != k.cols() || k.rows() != v.rows() || q.cols() != v.cols() {
        return Err(Error::Shape {
            op: "attention",
            left: q.shape(),
            right: k.shape(),
        });
    }
    if heads == 0 || q.cols() % heads != 0 {
        return Err(Error::Config(alloc::format!(
            "head count {heads} must divide width {}",
            q.cols()
        )));
    }
    let (tq, tk, dk) = (q.rows(), k.rows(), q.cols() / heads);
    let scale = 1.0 / libm::sqrt(dk as f64);
    let mut out = Matrix::zeros(tq, q.cols());
    let mut weights = Vec::with_capacity(heads);
    let mut scores = vec![0.0; tk];
    for h in 0..heads {
        let off = h * dk;
        let mut w = Matrix::zeros(tq, tk);
        for i in 0..tq {
            let limit = if causal { (i + 1).min(tk) } else { tk };
            let qi = &q.row(i)[off..off + dk];
            for (j, s) in scores[..limit].iter_mut().enumerate() {
                let kj = &k.row(j)[off..off + dk];
                *s = qi.iter().zip(kj).map(|(a, b)| a * b).sum::<f64>() * scale;
            }
            softmax_in_place(&mut scores[..limit]);
            w.row_mut(i)[..limit].copy_from_slice(&scores[..limit]);
            let oi = &mut out.row_mut(i)[off..off + dk];
            for (j, &a) in scores[..limit].iter().enumerate() {
                let vj = &v.row(j)[off..off + dk];
                for (o, x) in oi.iter_mut().zip(vj) {
                    *o += a * x;
                }
            }
        }
        weights.push(w);
    }
    Ok((out, weights))
}

/// Backward of [`attend`]: returns `(dq, dk, dv)`.
pub(crate) fn attend_backward(
    q: &Matrix,
    k: &Matrix,
    v: &Matrix,
    weights: &[Matrix],
    d_out: &Matrix,
) -> (Matrix, Matrix, Matrix) {
    let heads = weights.len();
    let (tq, tk, dk) = (q.rows(), k.rows(), q.cols() / heads);
    let scale = 1.0 / libm::sqrt(dk as f64);
    let mut dq = Matrix::zeros(tq, q.cols());
    let mut dkm = Matrix::zeros(tk, k.cols());
    let mut dv = Matrix::zeros(tk, v.cols());
    let mut da = vec![0.0; tk];
    let mut ds = vec![0.0; tk];
    for (h, w) in weights.iter().enumerate() {
        let off = h * dk;
        for i in 0..tq {
            let wi = w.row(i);
            let doi = &d_out.row(i)[off..off + dk];
            for j in 0..tk {
                let vj = &v.row(j)[off..off + dk];
                da[j] = doi.iter().zip(vj).map(|(a, b)| a * b).sum();
                let dvj = &mut dv.row_mut(j)[off..off + dk];
                for (d, g) in dvj.iter_mut().zip(doi) {
                    *d += wi[j] * g;
                }
            }
            softmax_row_backward(wi, &da, &mut ds);
            for j in 0..tk {
                let g = ds[j] * scale;
                if g == 0.0 {
                    continue;
                }
                let kj = &k.row(j)[off..off + dk];
                let dqi = &mut dq.row_mut(i)[off..off + dk];
                for (d, x) in dqi.iter_mut().zip(kj) {
                    *d += g * x;
                }
                let qi = &q.row(i)[off..off + dk];
                let dkj = &mut dkm.row_mut(j)[off..off + dk];
                for (d, x) in dkj.iter_mut().zip(qi) {
                    *d += g * x;
                }
            }
        }
    }
    (dq, dkm, dv)
}

/// Borrowed view of attention weights.
#[derive(Debug, Clone, Copy)]
pub struct AttentionWeights<'a> {
    /// Query projection.
    pub wq: &'a Matrix,
    /// Key projection.
    pub wk: &'a Matrix,
    /// Value projection.
    pub wv: &'a Matrix,
    /// Output projection.
    pub wo: &'a Matrix,
}

impl AttentionLayer {
    /// Borrowed view used by the forward/backward kernels.
    pub fn weights(&self) -> AttentionWeights<'_> {
        AttentionWeights {
            wq: &self.wq,
            wk: &self.wk,
            wv: &self.wv,
            wo: &self.wo,
        }
    }

    /// See [`AttentionWeights::forward`].
    pub fn forward(
        &self,
        query: Streams<'_>,
        memory: Streams<'_>,
        heads: usize,
        tau: usize,
        causal: bool,
    ) -> Result<(Matrix, AttentionCache)> {
        self.weights().forward(query, memory, heads, tau, causal)
    }

    /// See [`AttentionWeights::backward`].
    pub fn backward(
        &self,
        cache: &AttentionCache,
        d_out: &Matrix,
    ) -> Result<(AttentionGrads, AttentionInputGrads)> {
        self.weights().backward(cache, d_out)
    }

    /// Zero weights for width `d_model`.
    pub fn zeros(d_model: usize) -> Self {
        Self {
            wq: Matrix::zeros(d_model, d_model),
            wk: Matrix::zeros(d_model, d_model),
            wv: Matrix::zeros(d_model, d_model),
            wo: Matrix::zeros(d_model, d_model),
        }
    }

}

impl AttentionWeights<'_> {
    /// Multi-head attention of `query` over `memory`.
    ///
    /// Heads `0..tau` take queries from `query.xl` and keys/values from
    /// `memory.xl`; the remaining heads use the abs streams. The head
    /// outputs are concatenated and multiplied by `W_O`.
    pub fn forward(
        &self,
        query: Streams<'_>,
        memory: Streams<'_>,
        heads: usize,
        tau: usize,
        causal: bool,
    ) -> Result<(Matrix, AttentionCache)> {
        let d = self.wq.cols();
        if heads == 0 || d % heads != 0 {
            return Err(Error::Config(alloc::format!(
                "head count {heads} must divide d_model {d}"
            )));
        }
        if tau > heads {
            return Err(Error::Config(alloc::format!("tau {tau} outside 0..={heads}")));
        }
        for z in [Some(query.abs), query.xl, Some(memory.abs), memory.xl].into_iter().flatten() {
            if z.cols() != self.wq.rows() {
                return Err(Error::Shape {
                    op: "attention input",
                    left: z.shape(),
                    right: self.wq.shape(),
                });
            }
        }
        let xl_cols = tau * (d / heads);
        let q = split_project(query.abs, query.xl, self.wq, xl_cols)?;
        let k = split_project(memory.abs, memory.xl, self.wk, xl_cols)?;
        let v = split_project(memory.abs, memory.xl, self.wv, xl_cols)?;
        let (concat, weights) = attend(&q, &k, &v, heads, causal)?;
        let out = matmul(&concat, self.wo)?;
        let cache = AttentionCache {
            query_abs: query.abs.clone(),
            query_xl: query.xl.cloned(),
            memory_abs: memory.abs.clone(),
            memory_xl: memory.xl.cloned(),
            q,
            k,
            v,
            weights,
            concat,
            xl_cols,
        };
        Ok((out, cache))
    }

    /// Backward of [`Self::forward`]: weight gradients and input gradients.
    pub fn backward(
        &self,
        cache: &AttentionCache,
        d_out: &Matrix,
    ) -> Result<(AttentionGrads, AttentionInputGrads)> {
        let zeros = |m: &Matrix| Matrix::zeros(m.rows(), m.cols());
        let mut grads = AttentionGrads {
            wq: zeros(self.wq),
            wk: zeros(self.wk),
            wv: zeros(self.wv),
            wo: matmul_tn(&cache.concat, d_out)?,
        };
        let d_concat = matmul_nt(d_out, self.wo)?;
        let (dq, dk, dv) = attend_backward(&cache.q, &cache.k, &cache.v, &cache.weights, &d_concat);
        let c = cache.xl_cols;
        let (query_abs, query_xl) = split_project_backward(
            &cache.query_abs,
            cache.query_xl.as_ref(),
            self.wq,
            c,
            &dq,
            &mut grads.wq,
        )?;
        let (mut memory_abs, mut memory_xl) = split_project_backward(
            &cache.memory_abs,
            cache.memory_xl.as_ref(),
            self.wk,
            c,
            &dk,
            &mut grads.wk,
        )?;
        let (dm_abs, dm_xl) = split_project_backward(
            &cache.memory_abs,
            cache.memory_xl.as_ref(),
            self.wv,
            c,
            &dv,
            &mut grads.wv,
        )?;
        memory_abs.add_assign(&dm_abs)?;
        if let (Some(acc), Some(extra)) = (memory_xl.as_mut(), dm_xl) {
            acc.add_assign(&extra)?;
        }
        Ok((
            grads,
            AttentionInputGrads {
                query_abs,
                query_xl,
                memory_abs,
                memory_xl,
            },
        ))
    }
}
