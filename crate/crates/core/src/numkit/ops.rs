use alloc::vec;
use alloc::vec::Vec;

use super::Matrix;
use crate::{Error, Result};

/// Matrix product `a · b`.
///
/// Each output entry accumulates `k = 0, 1, …` in order, so a product over
/// a column slice of `b` is bit-identical to the same columns of the full
/// product.
pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols() != b.rows() {
        return Err(Error::Shape {
            op: "matmul",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let (m, k, n) = (a.rows(), a.cols(), b.cols());
    let mut out = vec![0.0; m * n];
    let (ad, bd) = (a.data(), b.data());
    for i in 0..m {
        let out_row = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let aip = ad[i * k + p];
            let b_row = &bd[p * n..(p + 1) * n];
            for (o, &bv) in out_row.iter_mut().zip(b_row) {
                *o += aip * bv;
            }
        }
    }
    Matrix::new(m, n, out)
}

/// `a · bᵀ`.
pub fn matmul_nt(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols() != b.cols() {
        return Err(Error::Shape {
            op: "matmul_nt",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let (m, k, n) = (a.rows(), a.cols(), b.rows());
    let mut out = vec![0.0; m * n];
    let (ad, bd) = (a.data(), b.data());
    for i in 0..m {
        let a_row = &ad[i * k..(i + 1) * k];
        for j in 0..n {
            out[i * n + j] = dot(a_row, &bd[j * k..(j + 1) * k]);
        }
    }
    Matrix::new(m, n, out)
}

/// Dot product with eight interleaved partial sums (vectorizes; the
/// summation order is fixed, so results are deterministic).
fn dot(x: &[f64], y: &[f64]) -> f64 {
    const LANES: usize = 8;
    let mut acc = [0.0; LANES];
    let xs = x.chunks_exact(LANES);
    let ys = y.chunks_exact(LANES);
    let (xr, yr) = (xs.remainder(), ys.remainder());
    for (cx, cy) in xs.zip(ys) {
        for l in 0..LANES {
            acc[l] += cx[l] * cy[l];
        }
    }
    let mut tail = 0.0;
    for (a, b) in xr.iter().zip(yr) {
        tail += a * b;
    }
    let pairs = [acc[0] + acc[4], acc[1] + acc[5], acc[2] + acc[6], acc[3] + acc[7]];
    (pairs[0] + pairs[2]) + (pairs[1] + pairs[3]) + tail
}

/// `aᵀ · b`, accumulated over rows of `a` in ascending order.
pub fn matmul_tn(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.rows() != b.rows() {
        return Err(Error::Shape {
            op: "matmul_tn",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let (m, k, n) = (a.rows(), a.cols(), b.cols());
    let mut out = vec![0.0; k * n];
    let (ad, bd) = (a.data(), b.data());
    for i in 0..m {
        let b_row = &bd[i * n..(i + 1) * n];
        for p in 0..k {
            let aip = ad[i * k + p];
            let out_row = &mut out[p * n..(p + 1) * n];
            for (o, &bv) in out_row.iter_mut().zip(b_row) {
                *o += aip * bv;
            }
        }
    }
    Matrix::new(k, n, out)
}

/// Row-wise softmax with per-row max subtraction.
pub fn softmax_rows(a: &Matrix) -> Matrix {
    let mut out = a.clone();
    for r in 0..out.rows() {
        softmax_in_place(out.row_mut(r));
    }
    out
}

pub(crate) fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for x in row.iter_mut() {
        *x = libm::exp(*x - max);
        total += *x;
    }
    for x in row.iter_mut() {
        *x /= total;
    }
}

/// Backward of [`softmax_rows`] given its output `y` and upstream `dy`.
pub fn softmax_rows_backward(y: &Matrix, dy: &Matrix) -> Result<Matrix> {
    if y.shape() != dy.shape() {
        return Err(Error::Shape {
            op: "softmax_rows_backward",
            left: y.shape(),
            right: dy.shape(),
        });
    }
    let mut dx = Matrix::zeros(y.rows(), y.cols());
    for r in 0..y.rows() {
        softmax_row_backward(y.row(r), dy.row(r), dx.row_mut(r));
    }
    Ok(dx)
}

pub(crate) fn softmax_row_backward(y: &[f64], dy: &[f64], dx: &mut [f64]) {
    let dot: f64 = y.iter().zip(dy).map(|(a, b)| a * b).sum();
    for ((d, &yv), &g) in dx.iter_mut().zip(y).zip(dy) {
        *d = yv * (g - dot);
    }
}

/// Elementwise hyperbolic tangent.
pub fn tanh_elem(a: &Matrix) -> Matrix {
    a.map(libm::tanh)
}

/// Backward of [`tanh_elem`] given its output `y`: `dy ⊙ (1 − y²)`.
pub fn tanh_backward(y: &Matrix, dy: &Matrix) -> Result<Matrix> {
    if y.shape() != dy.shape() {
        return Err(Error::Shape {
            op: "tanh_backward",
            left: y.shape(),
            right: dy.shape(),
        });
    }
    let data = y
        .data()
        .iter()
        .zip(dy.data())
        .map(|(&t, &g)| g * (1.0 - t * t))
        .collect();
    Matrix::new(y.rows(), y.cols(), data)
}

/// Elementwise `max(x, 0)`.
pub fn relu(a: &Matrix) -> Matrix {
    a.map(|x| if x > 0.0 { x } else { 0.0 })
}

/// Backward of [`relu`] given its input `x`.
pub fn relu_backward(x: &Matrix, dy: &Matrix) -> Result<Matrix> {
    if x.shape() != dy.shape() {
        return Err(Error::Shape {
            op: "relu_backward",
            left: x.shape(),
            right: dy.shape(),
        });
    }
    let data = x
        .data()
        .iter()
        .zip(dy.data())
        .map(|(&v, &g)| if v > 0.0 { g } else { 0.0 })
        .collect();
    Matrix::new(x.rows(), x.cols(), data)
}

const LN_EPS: f64 = 1e-6;

/// Saved statistics of a [`layer_norm`] forward pass.
#[derive(Debug, Clone)]
pub struct LayerNormCache {
    normalized: Matrix,
    inv_std: Vec<f64>,
}

/// Row-wise layer normalization `gain ⊙ (x − μ)/σ + bias`.
///
/// `gain` and `bias` are `1 × cols`.
pub fn layer_norm(x: &Matrix, gain: &Matrix, bias: &Matrix) -> Result<(Matrix, LayerNormCache)> {
    let d = x.cols();
    if gain.shape() != (1, d) || bias.shape() != (1, d) {
        return Err(Error::Shape {
            op: "layer_norm",
            left: x.shape(),
            right: gain.shape(),
        });
    }
    let mut normalized = x.clone();
    let mut out = Matrix::zeros(x.rows(), d);
    let mut inv_std = Vec::with_capacity(x.rows());
    for r in 0..x.rows() {
        let row = normalized.row_mut(r);
        let mean = row.iter().sum::<f64>() / d as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
        let is = 1.0 / libm::sqrt(var + LN_EPS);
        for v in row.iter_mut() {
            *v = (*v - mean) * is;
        }
        inv_std.push(is);
        let (g, b) = (gain.data(), bias.data());
        for (c, o) in out.row_mut(r).iter_mut().enumerate() {
            *o = g[c] * normalized.get(r, c) + b[c];
        }
    }
    Ok((out, LayerNormCache { normalized, inv_std }))
}

/// Backward of [`layer_norm`]: returns `(dx, dgain, dbias)`.
pub fn layer_norm_backward(
    cache: &LayerNormCache,
    gain: &Matrix,
    dy: &Matrix,
) -> Result<(Matrix, Matrix, Matrix)> {
    let xh = &cache.normalized;
    if xh.shape() != dy.shape() {
        return Err(Error::Shape {
            op: "layer_norm_backward",
            left: xh.shape(),
            right: dy.shape(),
        });
    }
    let d = xh.cols();
    let mut dgain = Matrix::zeros(1, d);
    let mut dbias = Matrix::zeros(1, d);
    let mut dx = Matrix::zeros(xh.rows(), d);
    let g = gain.data();
    let mut dxh = vec![0.0; d];
    for r in 0..xh.rows() {
        let (xr, dyr) = (xh.row(r), dy.row(r));
        for c in 0..d {
            dgain.data_mut()[c] += dyr[c] * xr[c];
            dbias.data_mut()[c] += dyr[c];
            dxh[c] = dyr[c] * g[c];
        }
        let mean_dxh = dxh.iter().sum::<f64>() / d as f64;
        let mean_dxh_xh = dxh.iter().zip(xr).map(|(a, b)| a * b).sum::<f64>() / d as f64;
        let is = cache.inv_std[r];
        for (c, o) in dx.row_mut(r).iter_mut().enumerate() {
            *o = is * (dxh[c] - mean_dxh - xr[c] * mean_dxh_xh);
        }
    }
    Ok((dx, dgain, dbias))
}
