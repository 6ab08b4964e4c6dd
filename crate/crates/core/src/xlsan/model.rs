use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng as _;

use super::attention::{AttentionCache, AttentionWeights, Streams};
use super::layers::{ffn_backward, ffn_forward, FfnCache};
use super::{ContextFreePos, ModelConfig, Variant, XlInjection};
use crate::btg::Permutation;
use crate::numkit::{layer_norm, layer_norm_backward, matmul, matmul_nt, matmul_tn, LayerNormCache, Matrix};
use crate::posenc::{
    absolute_pe, fuse_inxl_backward, fuse_inxl_cached, xl_pe, FusionCache, FusionParams,
    FusionShape,
};
use crate::rng::{derive_seed, rng_from_seed};
use crate::{Error, Result};

/// Index of a parameter in a [`Model`]'s flat parameter list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Id(usize);

#[derive(Debug, Clone, Copy)]
struct AttnIds {
    wq: Id,
    wk: Id,
    wv: Id,
    wo: Id,
}

#[derive(Debug, Clone, Copy)]
struct NormIds {
    gain: Id,
    bias: Id,
}

#[derive(Debug, Clone, Copy)]
struct FfnIds {
    w1: Id,
    b1: Id,
    w2: Id,
    b2: Id,
}

#[derive(Debug, Clone, Copy)]
struct EncIds {
    attn: AttnIds,
    ln1: NormIds,
    ffn: FfnIds,
    ln2: NormIds,
}

#[derive(Debug, Clone, Copy)]
struct DecIds {
    self_attn: AttnIds,
    ln1: NormIds,
    cross: AttnIds,
    ln2: NormIds,
    ffn: FfnIds,
    ln3: NormIds,
}

#[derive(Debug, Clone)]
struct Layout {
    src_emb: Id,
    tgt_emb: Id,
    enc: Vec<EncIds>,
    dec: Vec<DecIds>,
    out_w: Id,
    out_b: Id,
    fusion: Option<(Id, Id)>,
}

#[derive(Debug, Clone, Copy)]
enum Init {
    Uniform(f64),
    Const(f64),
}

/// Name, shape and initializer of one parameter.
#[derive(Debug, Clone)]
struct Spec {
    name: String,
    rows: usize,
    cols: usize,
    init: Init,
}

struct Builder {
    specs: Vec<Spec>,
}

impl Builder {
    fn add(&mut self, name: String, rows: usize, cols: usize, init: Init) -> Id {
        self.specs.push(Spec {
            name,
            rows,
            cols,
            init,
        });
        Id(self.specs.len() - 1)
    }

    fn fan_in(&mut self, name: String, rows: usize, cols: usize) -> Id {
        let bound = libm::sqrt(3.0 / rows as f64);
        self.add(name, rows, cols, Init::Uniform(bound))
    }

    fn attn(&mut self, prefix: &str, d: usize) -> AttnIds {
        AttnIds {
            wq: self.fan_in(format!("{prefix}.wq"), d, d),
            wk: self.fan_in(format!("{prefix}.wk"), d, d),
            wv: self.fan_in(format!("{prefix}.wv"), d, d),
            wo: self.fan_in(format!("{prefix}.wo"), d, d),
        }
    }

    fn norm(&mut self, prefix: &str, d: usize) -> NormIds {
        NormIds {
            gain: self.add(format!("{prefix}.gain"), 1, d, Init::Const(1.0)),
            bias: self.add(format!("{prefix}.bias"), 1, d, Init::Const(0.0)),
        }
    }

    fn ffn(&mut self, prefix: &str, d: usize, d_ff: usize) -> FfnIds {
        FfnIds {
            w1: self.fan_in(format!("{prefix}.w1"), d, d_ff),
            b1: self.add(format!("{prefix}.b1"), 1, d_ff, Init::Const(0.0)),
            w2: self.fan_in(format!("{prefix}.w2"), d_ff, d),
            b2: self.add(format!("{prefix}.b2"), 1, d, Init::Const(0.0)),
        }
    }
}

/// Parameter list of a configuration. Fusion parameters come last so that
/// every other parameter is initialized identically across variants.
fn layout(cfg: &ModelConfig) -> (Layout, Vec<Spec>) {
    let d = cfg.d_model;
    let mut b = Builder { specs: Vec::new() };
    let emb = Init::Uniform(0.1);
    let src_emb = b.add("src_emb".into(), cfg.vocab, d, emb);
    let tgt_emb = b.add("tgt_emb".into(), cfg.vocab + 1, d, emb);
    let enc = (0..cfg.encoder_layers())
        .map(|l| EncIds {
            attn: b.attn(&format!("enc.{l}.attn"), d),
            ln1: b.norm(&format!("enc.{l}.ln1"), d),
            ffn: b.ffn(&format!("enc.{l}.ffn"), d, cfg.d_ff),
            ln2: b.norm(&format!("enc.{l}.ln2"), d),
        })
        .collect();
    let dec = (0..cfg.dec_layers)
        .map(|l| DecIds {
            self_attn: b.attn(&format!("dec.{l}.self"), d),
            ln1: b.norm(&format!("dec.{l}.ln1"), d),
            cross: b.attn(&format!("dec.{l}.cross"), d),
            ln2: b.norm(&format!("dec.{l}.ln2"), d),
            ffn: b.ffn(&format!("dec.{l}.ffn"), d, cfg.d_ff),
            ln3: b.norm(&format!("dec.{l}.ln3"), d),
        })
        .collect();
    let out_w = b.fan_in("out.w".into(), d, cfg.vocab);
    let out_b = b.add("out.b".into(), 1, cfg.vocab, Init::Const(0.0));
    let fusion = cfg.variant.uses_fusion().then(|| match cfg.fusion {
        FusionShape::Full => (
            b.fan_in("fusion.u".into(), d, d),
            b.fan_in("fusion.v".into(), d, d),
        ),
        FusionShape::Diagonal => (
            b.add("fusion.u".into(), 1, d, Init::Const(1.0)),
            b.add("fusion.v".into(), 1, d, Init::Const(1.0)),
        ),
    });
    let lay = Layout {
        src_emb,
        tgt_emb,
        enc,
        dec,
        out_w,
        out_b,
        fusion,
    };
    (lay, b.specs)
}

/// Exact trainable-parameter count of a configuration.
pub fn count_parameters(cfg: &ModelConfig) -> Result<usize> {
    cfg.validate()?;
    Ok(layout(cfg).1.iter().map(|s| s.rows * s.cols).sum())
}

/// Encoder/decoder model with XL position handling in the encoder.
///
/// Parameters live in one flat list (see [`Model::param_names`]); gradient
/// buffers use the same layout.
#[derive(Debug, Clone)]
pub struct Model {
    cfg: ModelConfig,
    layout: Layout,
    names: Vec<String>,
    values: Vec<Matrix>,
}

/// Teacher-forced statistics of one sentence pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairStats {
    /// Summed token cross-entropy (nats).
    pub loss: f64,
    /// Number of target tokens.
    pub tokens: usize,
    /// Tokens whose argmax prediction is correct.
    pub correct: usize,
}

/// Decoder outputs.
#[derive(Debug, Clone)]
pub struct DecoderOutput {
    /// `T_tgt × vocab` logits.
    pub logits: Matrix,
    /// Cross-attention weights: `[layer][head]`, each `T_tgt × T_src`.
    pub cross_weights: Vec<Vec<Matrix>>,
    /// Decoder self-attention weights: `[layer][head]`, each `T_tgt × T_tgt`.
    pub self_weights: Vec<Vec<Matrix>>,
}

struct EncLayerCache {
    attn: AttentionCache,
    ln1: LayerNormCache,
    ffn: FfnCache,
    ln2: LayerNormCache,
    has_xl: bool,
}

struct EncoderCache {
    src: Vec<usize>,
    fusion: Option<FusionCache>,
    has_delta: bool,
    layers: Vec<EncLayerCache>,
}

struct DecLayerCache {
    self_attn: AttentionCache,
    ln1: LayerNormCache,
    cross: AttentionCache,
    ln2: LayerNormCache,
    ffn: FfnCache,
    ln3: LayerNormCache,
}

struct DecoderCache {
    input: Vec<usize>,
    layers: Vec<DecLayerCache>,
    last: Matrix,
}

/// Forward state of one pair, consumed by [`Model::backward_pair`].
pub struct PairCache {
    enc: EncoderCache,
    dec: DecoderCache,
    probs: Matrix,
    targets: Vec<usize>,
    /// Decoder cross-attention weights, `[layer][head]`.
    pub cross_weights: Vec<Vec<Matrix>>,
}

fn check_tokens(tokens: &[usize], vocab: usize, what: &str) -> Result<()> {
    if tokens.is_empty() {
        return Err(Error::Validation(format!("empty {what} sequence")));
    }
    if let Some(&t) = tokens.iter().find(|&&t| t >= vocab) {
        return Err(Error::Validation(format!(
            "{what} token {t} outside vocabulary of {vocab}"
        )));
    }
    Ok(())
}

fn scatter_rows(grad: &mut Matrix, index: &[usize], d: &Matrix) {
    for (i, &row) in index.iter().enumerate() {
        for (g, x) in grad.row_mut(row).iter_mut().zip(d.row(i)) {
            *g += x;
        }
    }
}

impl Model {
    /// Randomly initialized model (seeded by `cfg.seed`).
    pub fn new(cfg: ModelConfig) -> Result<Self> {
        cfg.validate()?;
        let (layout, specs) = layout(&cfg);
        let mut rng = rng_from_seed(derive_seed(cfg.seed, "init"));
        let values = specs
            .iter()
            .map(|s| match s.init {
                Init::Const(c) => Matrix::filled(s.rows, s.cols, c),
                Init::Uniform(b) => {
                    let data = (0..s.rows * s.cols).map(|_| rng.gen_range(-b..b)).collect();
                    Matrix::new(s.rows, s.cols, data).expect("length matches shape")
                }
            })
            .collect();
        Ok(Self {
            cfg,
            layout,
            names: specs.into_iter().map(|s| s.name).collect(),
            values,
        })
    }

    /// Model with the given parameter values (checked against the layout).
    pub fn from_params(cfg: ModelConfig, values: Vec<Matrix>) -> Result<Self> {
        let mut m = Self::new(cfg)?;
        m.set_params(values)?;
        Ok(m)
    }

    /// Configuration.
    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    /// Parameter names, in layout order.
    pub fn param_names(&self) -> &[String] {
        &self.names
    }

    /// Parameter values, in layout order.
    pub fn params(&self) -> &[Matrix] {
        &self.values
    }

    /// Mutable parameter values, in layout order.
    pub fn params_mut(&mut self) -> &mut [Matrix] {
        &mut self.values
    }

    /// Replaces all parameters; shapes must match.
    pub fn set_params(&mut self, values: Vec<Matrix>) -> Result<()> {
        if values.len() != self.values.len() {
            return Err(Error::Validation(format!(
                "expected {} parameter blocks, got {}",
                self.values.len(),
                values.len()
            )));
        }
        for (old, new) in self.values.iter().zip(&values) {
            if old.shape() != new.shape() {
                return Err(Error::Shape {
                    op: "set_params",
                    left: old.shape(),
                    right: new.shape(),
                });
            }
        }
        self.values = values;
        Ok(())
    }

    /// Value of the named parameter.
    pub fn param(&self, name: &str) -> Option<&Matrix> {
        self.names.iter().position(|n| n == name).map(|i| &self.values[i])
    }

    /// Mutable value of the named parameter.
    pub fn param_mut(&mut self, name: &str) -> Option<&mut Matrix> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| &mut self.values[i])
    }

    /// Total trainable parameters.
    pub fn parameter_count(&self) -> usize {
        self.values.iter().map(Matrix::len).sum()
    }

    /// Zeroed gradient buffers in layout order.
    pub fn zero_grads(&self) -> Vec<Matrix> {
        self.values
            .iter()
            .map(|m| Matrix::zeros(m.rows(), m.cols()))
            .collect()
    }

    /// Current InXL projections, if the variant has them.
    pub fn fusion_params(&self) -> Option<FusionParams> {
        self.layout.fusion.map(|(u, v)| FusionParams {
            u: self.values[u.0].clone(),
            v: self.values[v.0].clone(),
        })
    }

    fn p(&self, id: Id) -> &Matrix {
        &self.values[id.0]
    }

    fn attn(&self, ids: AttnIds) -> AttentionWeights<'_> {
        AttentionWeights {
            wq: self.p(ids.wq),
            wk: self.p(ids.wk),
            wv: self.p(ids.wv),
            wo: self.p(ids.wo),
        }
    }

    /// Encoder output for `src` (`T × d_model`). `perm` supplies `pos_XL`
    /// and is required by every variant that uses it.
    pub fn encoder_forward(&self, src: &[usize], perm: Option<&Permutation>) -> Result<Matrix> {
        Ok(self.encode(src, perm)?.0)
    }

    /// Logits and attention weights for gold target `tgt` (teacher
    /// forcing: position `k` reads the start symbol followed by
    /// `tgt[..k]`).
    pub fn decoder_forward(&self, tgt: &[usize], enc_out: &Matrix) -> Result<DecoderOutput> {
        let (last, cache) = self.decode(tgt, enc_out)?;
        let logits = matmul(&last, self.p(self.layout.out_w))?
            .add_row_broadcast(self.p(self.layout.out_b))?;
        Ok(DecoderOutput {
            logits,
            cross_weights: cache
                .layers
                .iter()
                .map(|l| l.cross.weights().to_vec())
                .collect(),
            self_weights: cache
                .layers
                .iter()
                .map(|l| l.self_attn.weights().to_vec())
                .collect(),
        })
    }

    fn encode(&self, src: &[usize], perm: Option<&Permutation>) -> Result<(Matrix, EncoderCache)> {
        let cfg = &self.cfg;
        check_tokens(src, cfg.vocab, "source")?;
        let t = src.len();
        let d = cfg.d_model;
        let emb = self.p(self.layout.src_emb).gather_rows(src)?;
        let pe_abs = absolute_pe(t, d)?;
        let pe_xl = if cfg.variant.needs_permutation() {
            let perm = perm.ok_or_else(|| {
                Error::Config(format!("variant {} needs reordering indices", cfg.variant))
            })?;
            if perm.len() != t {
                return Err(Error::Validation(format!(
                    "permutation of length {} for sentence of length {t}",
                    perm.len()
                )));
            }
            Some(xl_pe(perm, d)?)
        } else {
            None
        };
        let (fused, fusion) = match (self.fusion_params(), &pe_xl) {
            (Some(fp), Some(xl)) => {
                let (f, c) = fuse_inxl_cached(&pe_abs, xl, &fp)?;
                (Some(f.into_matrix()), Some(c))
            }
            _ => (None, None),
        };
        let pe_abs = pe_abs.into_matrix();
        let pe_xl = pe_xl.map(|p| p.into_matrix());
        let mut cache = EncoderCache {
            src: src.to_vec(),
            fusion,
            has_delta: false,
            layers: Vec::new(),
        };

        let (z0, xl0, xl_pe_used) = match cfg.variant {
            Variant::ContextFree(pos) => {
                let out = match pos {
                    ContextFreePos::Ape => emb.add(&pe_abs)?,
                    ContextFreePos::InXl => emb.add(fused.as_ref().expect("fusion present"))?,
                    ContextFreePos::NoPos => emb,
                };
                return Ok((out, cache));
            }
            Variant::Ape => (emb.add(&pe_abs)?, None, None),
            Variant::NoPos => (emb, None, None),
            Variant::InXl => (emb.add(fused.as_ref().expect("fusion present"))?, None, None),
            Variant::HeadXl => {
                let xl = pe_xl.expect("permutation present");
                (emb.add(&pe_abs)?, Some(emb.add(&xl)?), Some(xl))
            }
            Variant::Combination => {
                let f = fused.expect("fusion present");
                (emb.add(&pe_abs)?, Some(emb.add(&f)?), Some(f))
            }
        };
        // With no XL heads the XL stream is never read; dropping it keeps the
        // computation identical to the absolute-only model.
        let (xl0, xl_pe_used) = if cfg.tau == 0 {
            (None, None)
        } else {
            (xl0, xl_pe_used)
        };
        let delta = match (&xl_pe_used, cfg.xl_injection) {
            (Some(xl), XlInjection::EveryLayer) => Some(xl.sub(&pe_abs)?),
            _ => None,
        };
        cache.has_delta = delta.is_some();

        let mut h = z0;
        for (l, ids) in self.layout.enc.iter().enumerate() {
            let xl = if l == 0 {
                xl0.clone()
            } else {
                match &delta {
                    Some(dl) => Some(h.add(dl)?),
                    None => None,
                }
            };
            let tau = if xl.is_some() { cfg.tau } else { 0 };
            let streams = Streams {
                abs: &h,
                xl: xl.as_ref(),
            };
            let (a, attn) = self.attn(ids.attn).forward(streams, streams, cfg.heads, tau, false)?;
            let (h1, ln1) = layer_norm(&h.add(&a)?, self.p(ids.ln1.gain), self.p(ids.ln1.bias))?;
            let (f, ffn) = ffn_forward(
                &h1,
                self.p(ids.ffn.w1),
                self.p(ids.ffn.b1),
                self.p(ids.ffn.w2),
                self.p(ids.ffn.b2),
            )?;
            let (h2, ln2) = layer_norm(&h1.add(&f)?, self.p(ids.ln2.gain), self.p(ids.ln2.bias))?;
            cache.layers.push(EncLayerCache {
                attn,
                ln1,
                ffn,
                ln2,
                has_xl: xl.is_some(),
            });
            h = h2;
        }
        Ok((h, cache))
    }

    fn encode_backward(&self, cache: &EncoderCache, d_out: Matrix, grads: &mut [Matrix]) -> Result<()> {
        let cfg = &self.cfg;
        let rows = d_out.rows();
        let d = cfg.d_model;
        let mut d_h = d_out;
        let mut d_delta = cache.has_delta.then(|| Matrix::zeros(rows, d));
        let mut d_xl0: Option<Matrix> = None;
        for (l, (ids, lc)) in self.layout.enc.iter().zip(&cache.layers).enumerate().rev() {
            let (d_r2, g2, b2) = layer_norm_backward(&lc.ln2, self.p(ids.ln2.gain), &d_h)?;
            grads[ids.ln2.gain.0].add_assign(&g2)?;
            grads[ids.ln2.bias.0].add_assign(&b2)?;
            let fg = ffn_backward(&lc.ffn, self.p(ids.ffn.w1), self.p(ids.ffn.w2), &d_r2)?;
            grads[ids.ffn.w1.0].add_assign(&fg.w1)?;
            grads[ids.ffn.b1.0].add_assign(&fg.b1)?;
            grads[ids.ffn.w2.0].add_assign(&fg.w2)?;
            grads[ids.ffn.b2.0].add_assign(&fg.b2)?;
            let d_h1 = d_r2.add(&fg.dx)?;
            let (d_r1, g1, b1) = layer_norm_backward(&lc.ln1, self.p(ids.ln1.gain), &d_h1)?;
            grads[ids.ln1.gain.0].add_assign(&g1)?;
            grads[ids.ln1.bias.0].add_assign(&b1)?;
            let (ag, ig) = self.attn(ids.attn).backward(&lc.attn, &d_r1)?;
            grads[ids.attn.wq.0].add_assign(&ag.wq)?;
            grads[ids.attn.wk.0].add_assign(&ag.wk)?;
            grads[ids.attn.wv.0].add_assign(&ag.wv)?;
            grads[ids.attn.wo.0].add_assign(&ag.wo)?;
            let mut d_abs = d_r1;
            d_abs.add_assign(&ig.query_abs)?;
            d_abs.add_assign(&ig.memory_abs)?;
            let d_xl = match (ig.query_xl, ig.memory_xl) {
                (Some(mut q), Some(m)) if lc.has_xl => {
                    q.add_assign(&m)?;
                    Some(q)
                }
                _ => None,
            };
            if l == 0 {
                d_xl0 = d_xl;
            } else if let Some(dx) = d_xl {
                d_abs.add_assign(&dx)?;
                if let Some(dd) = d_delta.as_mut() {
                    dd.add_assign(&dx)?;
                }
            }
            d_h = d_abs;
        }

        // d_h is now the gradient at the encoder input (or at the output for
        // context-free variants, which have no layers).
        let mut d_emb = d_h.clone();
        if let Some(dx) = &d_xl0 {
            d_emb.add_assign(dx)?;
        }
        let d_fused = match cfg.variant {
            Variant::InXl | Variant::ContextFree(ContextFreePos::InXl) => Some(d_h),
            Variant::Combination => {
                let mut df = d_xl0.unwrap_or_else(|| Matrix::zeros(rows, d));
                if let Some(dd) = &d_delta {
                    df.add_assign(dd)?;
                }
                Some(df)
            }
            _ => None,
        };
        if let (Some(df), Some(fc), Some((u, v)), Some(fp)) =
            (d_fused, &cache.fusion, self.layout.fusion, self.fusion_params())
        {
            let fg = fuse_inxl_backward(fc, &fp, &df)?;
            grads[u.0].add_assign(&fg.u)?;
            grads[v.0].add_assign(&fg.v)?;
        }
        scatter_rows(&mut grads[self.layout.src_emb.0], &cache.src, &d_emb);
        Ok(())
    }

    fn decode(&self, tgt: &[usize], mem: &Matrix) -> Result<(Matrix, DecoderCache)> {
        let cfg = &self.cfg;
        check_tokens(tgt, cfg.vocab, "target")?;
        if mem.cols() != cfg.d_model {
            return Err(Error::Shape {
                op: "decoder memory",
                left: mem.shape(),
                right: (mem.rows(), cfg.d_model),
            });
        }
        let t = tgt.len();
        let mut input = Vec::with_capacity(t);
        input.push(cfg.bos());
        input.extend_from_slice(&tgt[..t - 1]);
        let mut x = self
            .p(self.layout.tgt_emb)
            .gather_rows(&input)?
            .add(absolute_pe(t, cfg.d_model)?.values())?;
        let mut layers = Vec::with_capacity(self.layout.dec.len());
        for ids in &self.layout.dec {
            let (a, self_attn) =
                self.attn(ids.self_attn)
                    .forward(Streams::single(&x), Streams::single(&x), cfg.heads, 0, true)?;
            let (h1, ln1) = layer_norm(&x.add(&a)?, self.p(ids.ln1.gain), self.p(ids.ln1.bias))?;
            let (c, cross) =
                self.attn(ids.cross)
                    .forward(Streams::single(&h1), Streams::single(mem), cfg.heads, 0, false)?;
            let (h2, ln2) = layer_norm(&h1.add(&c)?, self.p(ids.ln2.gain), self.p(ids.ln2.bias))?;
            let (f, ffn) = ffn_forward(
                &h2,
                self.p(ids.ffn.w1),
                self.p(ids.ffn.b1),
                self.p(ids.ffn.w2),
                self.p(ids.ffn.b2),
            )?;
            let (h3, ln3) = layer_norm(&h2.add(&f)?, self.p(ids.ln3.gain), self.p(ids.ln3.bias))?;
            layers.push(DecLayerCache {
                self_attn,
                ln1,
                cross,
                ln2,
                ffn,
                ln3,
            });
            x = h3;
        }
        Ok((
            x.clone(),
            DecoderCache {
                input,
                layers,
                last: x,
            },
        ))
    }

    /// Returns dL/d(memory).
    fn decode_backward(
        &self,
        cache: &DecoderCache,
        d_last: Matrix,
        mem_shape: (usize, usize),
        grads: &mut [Matrix],
    ) -> Result<Matrix> {
        let mut d_mem = Matrix::zeros(mem_shape.0, mem_shape.1);
        let mut d_x = d_last;
        for (ids, lc) in self.layout.dec.iter().zip(&cache.layers).rev() {
            let (d_r3, g3, b3) = layer_norm_backward(&lc.ln3, self.p(ids.ln3.gain), &d_x)?;
            grads[ids.ln3.gain.0].add_assign(&g3)?;
            grads[ids.ln3.bias.0].add_assign(&b3)?;
            let fg = ffn_backward(&lc.ffn, self.p(ids.ffn.w1), self.p(ids.ffn.w2), &d_r3)?;
            grads[ids.ffn.w1.0].add_assign(&fg.w1)?;
            grads[ids.ffn.b1.0].add_assign(&fg.b1)?;
            grads[ids.ffn.w2.0].add_assign(&fg.w2)?;
            grads[ids.ffn.b2.0].add_assign(&fg.b2)?;
            let d_h2 = d_r3.add(&fg.dx)?;
            let (d_r2, g2, b2) = layer_norm_backward(&lc.ln2, self.p(ids.ln2.gain), &d_h2)?;
            grads[ids.ln2.gain.0].add_assign(&g2)?;
            grads[ids.ln2.bias.0].add_assign(&b2)?;
            let (cg, ci) = self.attn(ids.cross).backward(&lc.cross, &d_r2)?;
            grads[ids.cross.wq.0].add_assign(&cg.wq)?;
            grads[ids.cross.wk.0].add_assign(&cg.wk)?;
            grads[ids.cross.wv.0].add_assign(&cg.wv)?;
            grads[ids.cross.wo.0].add_assign(&cg.wo)?;
            d_mem.add_assign(&ci.memory_abs)?;
            let d_h1 = d_r2.add(&ci.query_abs)?;
            let (d_r1, g1, b1) = layer_norm_backward(&lc.ln1, self.p(ids.ln1.gain), &d_h1)?;
            grads[ids.ln1.gain.0].add_assign(&g1)?;
            grads[ids.ln1.bias.0].add_assign(&b1)?;
            let (sg, si) = self.attn(ids.self_attn).backward(&lc.self_attn, &d_r1)?;
            grads[ids.self_attn.wq.0].add_assign(&sg.wq)?;
            grads[ids.self_attn.wk.0].add_assign(&sg.wk)?;
            grads[ids.self_attn.wv.0].add_assign(&sg.wv)?;
            grads[ids.self_attn.wo.0].add_assign(&sg.wo)?;
            let mut dx = d_r1;
            dx.add_assign(&si.query_abs)?;
            dx.add_assign(&si.memory_abs)?;
            d_x = dx;
        }
        scatter_rows(&mut grads[self.layout.tgt_emb.0], &cache.input, &d_x);
        Ok(d_mem)
    }

    /// Teacher-forced forward pass over one pair, returning loss and
    /// accuracy plus the cache for [`Self::backward_pair`].
    pub fn forward_pair(
        &self,
        src: &[usize],
        tgt: &[usize],
        perm: Option<&Permutation>,
    ) -> Result<(PairStats, PairCache)> {
        let (mem, enc) = self.encode(src, perm)?;
        let (last, dec) = self.decode(tgt, &mem)?;
        let logits = matmul(&last, self.p(self.layout.out_w))?
            .add_row_broadcast(self.p(self.layout.out_b))?;
        let mut probs = logits.clone();
        let mut loss = 0.0;
        let mut correct = 0;
        for (r, &y) in tgt.iter().enumerate() {
            let row = probs.row_mut(r);
            let (mut best, mut best_at) = (f64::NEG_INFINITY, 0);
            for (c, &v) in row.iter().enumerate() {
                if v > best {
                    best = v;
                    best_at = c;
                }
            }
            correct += usize::from(best_at == y);
            let mut total = 0.0;
            for v in row.iter_mut() {
                *v = libm::exp(*v - best);
                total += *v;
            }
            loss += libm::log(total) - (logits.get(r, y) - best);
            for v in row.iter_mut() {
                *v /= total;
            }
        }
        if !loss.is_finite() {
            return Err(Error::NonFinite("pair loss"));
        }
        let cross_weights = dec.layers.iter().map(|l| l.cross.weights().to_vec()).collect();
        Ok((
            PairStats {
                loss,
                tokens: tgt.len(),
                correct,
            },
            PairCache {
                enc,
                dec,
                probs,
                targets: tgt.to_vec(),
                cross_weights,
            },
        ))
    }

    /// Accumulates `scale · d(summed pair loss)/dθ` into `grads`.
    pub fn backward_pair(&self, cache: PairCache, scale: f64, grads: &mut [Matrix]) -> Result<()> {
        if grads.len() != self.values.len() {
            return Err(Error::Validation(format!(
                "expected {} gradient buffers, got {}",
                self.values.len(),
                grads.len()
            )));
        }
        let mut d_logits = cache.probs;
        for (r, &y) in cache.targets.iter().enumerate() {
            let row = d_logits.row_mut(r);
            row[y] -= 1.0;
            for v in row.iter_mut() {
                *v *= scale;
            }
        }
        grads[self.layout.out_w.0].add_assign(&matmul_tn(&cache.dec.last, &d_logits)?)?;
        grads[self.layout.out_b.0].add_assign(&d_logits.col_sums())?;
        let d_last = matmul_nt(&d_logits, self.p(self.layout.out_w))?;
        let mem_shape = (cache.enc.src.len(), self.cfg.d_model);
        let d_mem = self.decode_backward(&cache.dec, d_last, mem_shape, grads)?;
        self.encode_backward(&cache.enc, d_mem, grads)
    }
}
