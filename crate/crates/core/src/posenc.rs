//! Sinusoidal position encodings over absolute and cross-lingual indices,
//! the InXL fusion `tanh(PE_abs·U + PE_xl·V)`, and reordering noise.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::btg::Permutation;
use crate::numkit::{matmul, matmul_nt, matmul_tn, tanh_backward, tanh_elem, Matrix};
use crate::rng::{rng_from_seed, Rng};
use crate::{Error, Result};

const BASE: f64 = 10000.0;

/// `T × d_model` matrix of position encodings.
#[derive(Debug, Clone, PartialEq)]
pub struct PeMatrix {
    values: Matrix,
}

impl PeMatrix {
    /// Wraps a matrix; `d_model` (column count) must be even.
    pub fn new(values: Matrix) -> Result<Self> {
        check_width(values.cols())?;
        Ok(Self { values })
    }

    /// Sequence length.
    pub fn len(&self) -> usize {
        self.values.rows()
    }

    /// True for a zero-length sequence.
    pub fn is_empty(&self) -> bool {
        self.values.rows() == 0
    }

    /// Embedding width.
    pub fn d_model(&self) -> usize {
        self.values.cols()
    }

    /// Underlying matrix.
    pub fn values(&self) -> &Matrix {
        &self.values
    }

    /// Consumes into the underlying matrix.
    pub fn into_matrix(self) -> Matrix {
        self.values
    }
}

fn check_width(d_model: usize) -> Result<()> {
    if d_model < 2 || d_model % 2 != 0 {
        return Err(Error::Config(format!(
            "d_model must be even and >= 2, got {d_model}"
        )));
    }
    Ok(())
}

/// Row `t` holds `sin(pos_t / 10000^(2i/d))` at column `2i` and the cosine
/// at `2i + 1`.
pub fn sinusoidal(pos: &[f64], d_model: usize) -> Result<PeMatrix> {
    check_width(d_model)?;
    let inv_freq: Vec<f64> = (0..d_model / 2)
        .map(|i| 1.0 / libm::pow(BASE, (2 * i) as f64 / d_model as f64))
        .collect();
    let mut m = Matrix::zeros(pos.len(), d_model);
    for (t, &p) in pos.iter().enumerate() {
        let row = m.row_mut(t);
        for (i, &f) in inv_freq.iter().enumerate() {
            let angle = p * f;
            row[2 * i] = libm::sin(angle);
            row[2 * i + 1] = libm::cos(angle);
        }
    }
    Ok(PeMatrix { values: m })
}

/// Encodings of positions `0, 1, …, len − 1`.
pub fn absolute_pe(len: usize, d_model: usize) -> Result<PeMatrix> {
    if len == 0 {
        return Err(Error::Config("sequence length must be >= 1".into()));
    }
    let pos: Vec<f64> = (0..len).map(|p| p as f64).collect();
    sinusoidal(&pos, d_model)
}

/// Cross-lingual encoding: token `i` gets the encoding of its reordered
/// slot `pos_XL(i)`, i.e. a row permutation of [`absolute_pe`].
pub fn xl_pe(perm: &Permutation, d_model: usize) -> Result<PeMatrix> {
    let abs = absolute_pe(perm.len(), d_model)?;
    Ok(PeMatrix {
        values: abs.values.gather_rows(perm.positions())?,
    })
}

/// Shape of the InXL projections `U` and `V`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FusionShape {
    /// `d_model × d_model` matrices.
    #[default]
    Full,
    /// Per-dimension scales stored as `1 × d_model` rows.
    Diagonal,
}

/// Trainable projections of the InXL fusion.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionParams {
    /// Projection applied to the absolute encoding.
    pub u: Matrix,
    /// Projection applied to the cross-lingual encoding.
    pub v: Matrix,
}

impl FusionParams {
    /// Shape mode implied by the stored matrices.
    pub fn shape(&self) -> FusionShape {
        if self.u.rows() == 1 && self.u.cols() > 1 {
            FusionShape::Diagonal
        } else {
            FusionShape::Full
        }
    }

    /// Zero projections of the given shape.
    pub fn zeros(shape: FusionShape, d_model: usize) -> Self {
        let (r, c) = match shape {
            FusionShape::Full => (d_model, d_model),
            FusionShape::Diagonal => (1, d_model),
        };
        Self {
            u: Matrix::zeros(r, c),
            v: Matrix::zeros(r, c),
        }
    }

    /// Trainable parameter count `|U| + |V|`.
    pub fn parameter_count(&self) -> usize {
        self.u.len() + self.v.len()
    }
}

fn project(pe: &Matrix, w: &Matrix) -> Result<Matrix> {
    if w.rows() == 1 && w.cols() == pe.cols() && pe.cols() > 1 {
        let mut out = pe.clone();
        for r in 0..out.rows() {
            for (o, s) in out.row_mut(r).iter_mut().zip(w.data()) {
                *o *= s;
            }
        }
        Ok(out)
    } else {
        matmul(pe, w)
    }
}

fn project_backward(pe: &Matrix, w: &Matrix, dy: &Matrix) -> Result<(Matrix, Matrix)> {
    if w.rows() == 1 && w.cols() == pe.cols() && pe.cols() > 1 {
        let dw = pe.hadamard(dy)?.col_sums();
        let mut dpe = dy.clone();
        for r in 0..dpe.rows() {
            for (o, s) in dpe.row_mut(r).iter_mut().zip(w.data()) {
                *o *= s;
            }
        }
        Ok((dw, dpe))
    } else {
        let dw = matmul_tn(pe, dy)?;
        let dpe = matmul_nt(dy, w)?;
        Ok((dw, dpe))
    }
}

/// Everything [`fuse_inxl_backward`] needs from the forward pass.
#[derive(Debug, Clone)]
pub struct FusionCache {
    pe_abs: Matrix,
    pe_xl: Matrix,
    out: Matrix,
}

/// `tanh(PE_abs·U + PE_xl·V)`.
pub fn fuse_inxl(pe_abs: &PeMatrix, pe_xl: &PeMatrix, params: &FusionParams) -> Result<PeMatrix> {
    Ok(fuse_inxl_cached(pe_abs, pe_xl, params)?.0)
}

/// [`fuse_inxl`] that also returns the cache for the backward pass.
pub fn fuse_inxl_cached(
    pe_abs: &PeMatrix,
    pe_xl: &PeMatrix,
    params: &FusionParams,
) -> Result<(PeMatrix, FusionCache)> {
    if pe_abs.values.shape() != pe_xl.values.shape() {
        return Err(Error::Shape {
            op: "fuse_inxl",
            left: pe_abs.values.shape(),
            right: pe_xl.values.shape(),
        });
    }
    let a = project(&pe_abs.values, &params.u)?;
    let b = project(&pe_xl.values, &params.v)?;
    let out = tanh_elem(&a.add(&b)?);
    let cache = FusionCache {
        pe_abs: pe_abs.values.clone(),
        pe_xl: pe_xl.values.clone(),
        out: out.clone(),
    };
    Ok((PeMatrix { values: out }, cache))
}

/// Gradients of the fusion.
#[derive(Debug, Clone)]
pub struct FusionGrads {
    /// dL/dU.
    pub u: Matrix,
    /// dL/dV.
    pub v: Matrix,
    /// dL/dPE_abs.
    pub pe_abs: Matrix,
    /// dL/dPE_xl.
    pub pe_xl: Matrix,
}

/// Backward of [`fuse_inxl`] for upstream gradient `d_out`.
pub fn fuse_inxl_backward(
    cache: &FusionCache,
    params: &FusionParams,
    d_out: &Matrix,
) -> Result<FusionGrads> {
    let d_pre = tanh_backward(&cache.out, d_out)?;
    let (u, pe_abs) = project_backward(&cache.pe_abs, &params.u, &d_pre)?;
    let (v, pe_xl) = project_backward(&cache.pe_xl, &params.v, &d_pre)?;
    Ok(FusionGrads { u, v, pe_abs, pe_xl })
}

/// `Z = X + PE`.
pub fn add_pe(x: &Matrix, pe: &PeMatrix) -> Result<Matrix> {
    x.add(&pe.values)
}

/// Number of swaps [`inject_noise`] performs: `round(ratio · T / 2)`,
/// capped at `⌊T/2⌋` so the swapped pairs stay disjoint.
pub fn noise_swap_count(len: usize, ratio: f64) -> usize {
    let s = libm::round(ratio * len as f64 / 2.0) as usize;
    s.min(len / 2)
}

/// Swaps the cross-lingual slots of disjoint random token pairs; `ratio`
/// is the fraction of positions touched. Deterministic in `seed`.
pub fn inject_noise(perm: &Permutation, ratio: f64, seed: u64) -> Result<Permutation> {
    if !(0.0..=1.0).contains(&ratio) {
        return Err(Error::Config(format!("noise ratio must lie in [0, 1], got {ratio}")));
    }
    let swaps = noise_swap_count(perm.len(), ratio);
    let mut out = perm.clone();
    if swaps == 0 {
        return Ok(out);
    }
    let mut rng: Rng = rng_from_seed(seed);
    // Partial Fisher-Yates: the first 2·swaps entries are distinct tokens.
    let mut tokens: Vec<usize> = (0..perm.len()).collect();
    for k in 0..2 * swaps {
        let j = rng.gen_range(k..tokens.len());
        tokens.swap(k, j);
    }
    for pair in tokens[..2 * swaps].chunks_exact(2) {
        out.swap_tokens(pair[0], pair[1]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::{finite_diff_check, Param};
    use alloc::vec;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn position_zero_row() {
        let pe = sinusoidal(&[0.0], 4).unwrap();
        assert_eq!(pe.values().data(), &[0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn position_one_row() {
        // Frequencies 1 and 1/10000^(2/4) = 0.01.
        let pe = sinusoidal(&[1.0], 4).unwrap();
        let want = [1f64.sin(), 1f64.cos(), 0.01f64.sin(), 0.01f64.cos()];
        for (g, w) in pe.values().data().iter().zip(want) {
            assert!(close(*g, w, 1e-12), "{g} vs {w}");
        }
        let rounded = [0.841471, 0.540302, 0.010000, 0.999950];
        for (g, w) in pe.values().data().iter().zip(rounded) {
            assert!(close(*g, w, 5e-7));
        }
    }

    #[test]
    fn position_five_width_two() {
        let pe = sinusoidal(&[5.0], 2).unwrap();
        assert!(close(pe.values().get(0, 0), 5f64.sin(), 1e-12));
        assert!(close(pe.values().get(0, 1), 5f64.cos(), 1e-12));
    }

    #[test]
    fn odd_width_is_config_error() {
        assert!(matches!(sinusoidal(&[0.0], 3), Err(Error::Config(_))));
        assert!(absolute_pe(0, 4).is_err());
    }

    #[test]
    fn absolute_rows_match_sinusoidal() {
        let abs = absolute_pe(3, 4).unwrap();
        let direct = sinusoidal(&[0.0, 1.0, 2.0], 4).unwrap();
        assert!(abs.values().bit_eq(direct.values()));
        assert_eq!(absolute_pe(1, 6).unwrap().values().data(), &[0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn swapped_pair_swaps_rows() {
        let abs = absolute_pe(2, 4).unwrap();
        let xl = xl_pe(&Permutation::from_order(vec![1, 0]).unwrap(), 4).unwrap();
        assert_eq!(xl.values().row(0), abs.values().row(1));
        assert_eq!(xl.values().row(1), abs.values().row(0));
    }

    #[test]
    fn zero_fusion_is_zero() {
        let abs = absolute_pe(3, 4).unwrap();
        let xl = xl_pe(&Permutation::from_order(vec![2, 0, 1]).unwrap(), 4).unwrap();
        let z = fuse_inxl(&abs, &xl, &FusionParams::zeros(FusionShape::Full, 4)).unwrap();
        assert_eq!(z.values(), &Matrix::zeros(3, 4));
    }

    #[test]
    fn identity_fusion_shares_absolute_encoding() {
        let abs = absolute_pe(4, 4).unwrap();
        let xl = xl_pe(&Permutation::identity(4), 4).unwrap();
        let u = Matrix::from_rows(&[
            [0.5, 0.1, 0.0, -0.2],
            [0.0, 0.3, 0.25, 0.0],
            [-0.5, 0.0, 1.0, 0.125],
            [0.0, 0.75, 0.0, 0.5],
        ])
        .unwrap();
        let v = u.transpose();
        let fused = fuse_inxl(&abs, &xl, &FusionParams { u: u.clone(), v: v.clone() }).unwrap();
        let want = tanh_elem(&matmul(abs.values(), &u.add(&v).unwrap()).unwrap());
        assert!(fused.values().max_abs_diff(&want).unwrap() < 1e-15);
    }

    #[test]
    fn fusion_gradients_match_finite_differences() {
        for shape in [FusionShape::Full, FusionShape::Diagonal] {
            let abs = absolute_pe(5, 6).unwrap();
            let xl = xl_pe(&Permutation::from_order(vec![3, 0, 4, 1, 2]).unwrap(), 6).unwrap();
            let mut rng = rng_from_seed(11);
            let mut rand_like = |m: &Matrix| {
                let data = (0..m.len()).map(|_| rng.gen_range(-0.8..0.8)).collect();
                Matrix::new(m.rows(), m.cols(), data).unwrap()
            };
            let base = FusionParams::zeros(shape, 6);
            let params = FusionParams {
                u: rand_like(&base.u),
                v: rand_like(&base.v),
            };
            let w = rand_like(&Matrix::zeros(5, 6));
            let (_, cache) = fuse_inxl_cached(&abs, &xl, &params).unwrap();
            let g = fuse_inxl_backward(&cache, &params, &w).unwrap();
            let loss = |p: &[Matrix]| -> Result<f64> {
                let fp = FusionParams {
                    u: p[0].clone(),
                    v: p[1].clone(),
                };
                let out = fuse_inxl(&PeMatrix::new(p[2].clone())?, &PeMatrix::new(p[3].clone())?, &fp)?;
                Ok(out.values().hadamard(&w)?.sum())
            };
            let ps = [
                Param::new("U", params.u.clone()),
                Param::new("V", params.v.clone()),
                Param::new("pe_abs", abs.values().clone()),
                Param::new("pe_xl", xl.values().clone()),
            ];
            let rep = finite_diff_check(&ps, &[g.u, g.v, g.pe_abs, g.pe_xl], 1e-5, loss).unwrap();
            assert!(rep.max_relative_error < 1e-4, "{shape:?}: {rep:?}");
        }
    }

    #[test]
    fn add_pe_cases() {
        let pe = absolute_pe(2, 4).unwrap();
        assert_eq!(&add_pe(&Matrix::zeros(2, 4), &pe).unwrap(), pe.values());
        let x = Matrix::from_rows(&[[0.5, -1.0, 2.0, 0.25], [1.0, 0.0, -0.5, 3.0]]).unwrap();
        let zero = PeMatrix::new(Matrix::zeros(2, 4)).unwrap();
        assert_eq!(add_pe(&x, &zero).unwrap(), x);
        assert!(add_pe(&Matrix::zeros(3, 4), &pe).is_err());
    }

    #[test]
    fn noise_examples() {
        let p = Permutation::from_order(vec![4, 2, 0, 1, 3, 9, 8, 5, 7, 6]).unwrap();
        assert_eq!(inject_noise(&p, 0.0, 1).unwrap(), p);
        let noisy = inject_noise(&p, 0.2, 1).unwrap();
        let changed = p.order().iter().zip(noisy.order()).filter(|(a, b)| a != b).count();
        assert_eq!(changed, 2);
        assert_eq!(inject_noise(&p, 0.2, 1).unwrap(), noisy);
        assert!(inject_noise(&p, 1.5, 1).is_err());
    }

    #[test]
    fn swap_count_formula() {
        assert_eq!(noise_swap_count(10, 0.2), 1);
        assert_eq!(noise_swap_count(16, 0.2), 2);
        assert_eq!(noise_swap_count(12, 0.05), 0);
        assert_eq!(noise_swap_count(7, 1.0), 3);
    }
}
