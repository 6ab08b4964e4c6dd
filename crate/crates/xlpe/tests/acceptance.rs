//! Acceptance suite. Each test checks one criterion at its pinned tolerance
//! and writes a single `PASS` or `FAIL` line straight to stderr, so the
//! verdicts show up even though the harness captures test output.
//!
//! Trained runs are cached and shared between criteria. Two kinds of run
//! are known to be bit-identical to another and are reused instead of
//! retrained: HeadXL at τ = 0 (identical to APE, checked bitwise below)
//! and noise ratios that swap nothing at any training length (identical to
//! the clean run). Every reuse is announced on stderr.

use std::collections::HashMap;
use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::process::Command;
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng as _;
use tempfile::TempDir;
use xlpe_core::btg::{
    btg_oracle_reorder, enumerate_btg_permutations, sample_btg_permutation, AlignmentSet, PairPreference, Permutation,
};
use xlpe_core::lab::{aer, gen_dataset, position_free_ceiling, train, SyntheticPair};
use xlpe_core::numkit::{finite_diff_check_adaptive, Matrix, Param};
use xlpe_core::posenc::{absolute_pe, noise_swap_count, xl_pe, FusionShape};
use xlpe_core::rng::rng_from_seed;
use xlpe_core::xlsan::{count_parameters, ContextFreePos, Model, ModelConfig, Variant, XlInjection};
use xlpe::config::RunConfig;

const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

fn verdict(name: &str, pass: bool, detail: &str) -> bool {
    let line = format!("{} {name}: {detail}\n", if pass { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().lock().write_all(line.as_bytes());
    pass
}

fn note(msg: &str) {
    let _ = std::io::stderr().lock().write_all(format!("  .. {msg}\n").as_bytes());
}

// ---------------------------------------------------------------- BTG

/// Every order a binary bracketing with free orientations can produce,
/// built by direct recursion over split points.
fn all_orders(lo: usize, hi: usize) -> Vec<Vec<usize>> {
    if hi - lo == 1 {
        return vec![vec![lo]];
    }
    let mut out = Vec::new();
    for k in lo + 1..hi {
        for l in all_orders(lo, k) {
            for r in all_orders(k, hi) {
                out.push([l.clone(), r.clone()].concat());
                out.push([r.clone(), l.clone()].concat());
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

fn crossings(order: &[usize], t: &[f64]) -> u64 {
    let mut c = 0;
    for x in 0..order.len() {
        for y in x + 1..order.len() {
            c += u64::from(t[order[x]] > t[order[y]]);
        }
    }
    c
}

#[test]
fn c01_oracle_matches_brute_force() {
    let start = Instant::now();
    let mut rng = rng_from_seed(2024);
    let mut mismatches = 0;
    let mut checked = 0;
    for n in 1..=6 {
        let orders = all_orders(0, n);
        for trial in 0..200 {
            // Half integer keys with ties, half continuous keys.
            let t: Vec<f64> = if trial % 2 == 0 {
                (0..n).map(|_| f64::from(rng.gen_range(0..n as u32))).collect()
            } else {
                (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
            };
            let best = orders.iter().map(|o| crossings(o, &t)).min().unwrap();
            let r = btg_oracle_reorder(&PairPreference::from_positions(t.clone()).unwrap()).unwrap();
            let realized = crossings(r.permutation.order(), &t);
            let in_space = orders.iter().any(|o| o.as_slice() == r.permutation.order());
            if r.cost != best || realized != best || !in_space {
                mismatches += 1;
            }
            checked += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = mismatches == 0 && secs < 60.0;
    assert!(verdict(
        "btg-oracle",
        ok,
        &format!("{checked} vectors, {mismatches} mismatches, {secs:.2}s (limit 60s)")
    ));
}

#[test]
fn c02_separable_counts() {
    let got: Vec<usize> = (1..=4).map(|n| enumerate_btg_permutations(n).unwrap().len()).collect();
    let no_2413_3142 = enumerate_btg_permutations(4)
        .unwrap()
        .iter()
        .all(|p| p.order() != [1, 3, 0, 2] && p.order() != [2, 0, 3, 1]);
    let ok = got == [1, 2, 6, 22] && no_2413_3142;
    assert!(verdict("separable-count", ok, &format!("counts {got:?}, excluded patterns absent: {no_2413_3142}")));
}

// ---------------------------------------------------------------- PE

#[test]
fn c03_pe_identities() {
    let mut worst_norm = 0.0f64;
    let mut worst_spot = 0.0f64;
    let mut identity_ok = true;
    for d in [2usize, 4, 8, 16, 64, 128, 512] {
        for n in [1usize, 5, 17, 64] {
            let abs = absolute_pe(n, d).unwrap();
            identity_ok &= xl_pe(&Permutation::identity(n), d).unwrap().values().bit_eq(abs.values());
            for pos in 0..n {
                let row = abs.values().row(pos);
                let norm2: f64 = row.iter().map(|v| v * v).sum();
                worst_norm = worst_norm.max((norm2 - d as f64 / 2.0).abs());
                for (dim, &v) in row.iter().enumerate() {
                    let angle = pos as f64 / 10000f64.powf((2 * (dim / 2)) as f64 / d as f64);
                    let want = if dim % 2 == 0 { angle.sin() } else { angle.cos() };
                    worst_spot = worst_spot.max((v - want).abs());
                }
            }
        }
    }
    let ok = identity_ok && worst_norm <= 1e-9 && worst_spot <= 1e-12;
    assert!(verdict(
        "pe-identities",
        ok,
        &format!("identity bit-exact {identity_ok}, max |norm²−d/2| {worst_norm:.2e}, max spot error {worst_spot:.2e}")
    ));
}

// ---------------------------------------------------------------- model

fn grads(m: &Model, src: &[usize], tgt: &[usize], perm: &Permutation) -> (f64, Vec<Matrix>) {
    let (stats, cache) = m.forward_pair(src, tgt, Some(perm)).unwrap();
    let mut g = m.zero_grads();
    m.backward_pair(cache, 1.0, &mut g).unwrap();
    (stats.loss, g)
}

#[test]
fn c04_boundary_equivalences() {
    let mut rng = rng_from_seed(77);
    let (mut zero_ok, mut full_ok) = (0, 0);
    for _ in 0..100 {
        let heads = [2usize, 4][rng.gen_range(0..2)];
        let base = ModelConfig {
            d_model: heads * [2usize, 4][rng.gen_range(0..2)],
            heads,
            d_ff: rng.gen_range(4..20),
            enc_layers: rng.gen_range(1..3),
            dec_layers: rng.gen_range(1..3),
            vocab: rng.gen_range(3..12),
            xl_injection: [XlInjection::FirstLayer, XlInjection::EveryLayer][rng.gen_range(0..2)],
            seed: rng.gen(),
            ..ModelConfig::default()
        };
        let t = rng.gen_range(1..10);
        let src: Vec<usize> = (0..t).map(|_| rng.gen_range(0..base.vocab)).collect();
        let tgt: Vec<usize> = (0..rng.gen_range(1..10)).map(|_| rng.gen_range(0..base.vocab)).collect();
        let perm = sample_btg_permutation(t, 0.5, rng.gen()).unwrap().1;

        let ape = Model::new(ModelConfig { variant: Variant::Ape, tau: 0, ..base.clone() }).unwrap();
        let zero = Model::new(ModelConfig { variant: Variant::HeadXl, tau: 0, ..base.clone() }).unwrap();
        let enc_a = ape.encoder_forward(&src, Some(&perm)).unwrap();
        let enc_z = zero.encoder_forward(&src, Some(&perm)).unwrap();
        let log_a = ape.decoder_forward(&tgt, &enc_a).unwrap().logits;
        let log_z = zero.decoder_forward(&tgt, &enc_z).unwrap().logits;
        let (la, ga) = grads(&ape, &src, &tgt, &perm);
        let (lz, gz) = grads(&zero, &src, &tgt, &perm);
        if enc_a.bit_eq(&enc_z)
            && log_a.bit_eq(&log_z)
            && la.to_bits() == lz.to_bits()
            && ga.len() == gz.len()
            && ga.iter().zip(&gz).all(|(a, b)| a.bit_eq(b))
        {
            zero_ok += 1;
        }

        let id = Permutation::identity(t);
        let full = Model::new(ModelConfig { variant: Variant::HeadXl, tau: heads, ..base.clone() }).unwrap();
        let enc_f = full.encoder_forward(&src, Some(&id)).unwrap();
        let enc_z = zero.encoder_forward(&src, Some(&id)).unwrap();
        let log_f = full.decoder_forward(&tgt, &enc_f).unwrap().logits;
        let log_z = zero.decoder_forward(&tgt, &enc_z).unwrap().logits;
        let lf = full.forward_pair(&src, &tgt, Some(&id)).unwrap().0.loss;
        let lz = zero.forward_pair(&src, &tgt, Some(&id)).unwrap().0.loss;
        if enc_f.bit_eq(&enc_z) && log_f.bit_eq(&log_z) && lf.to_bits() == lz.to_bits() {
            full_ok += 1;
        }
    }
    let ok = zero_ok == 100 && full_ok == 100;
    assert!(verdict(
        "boundary-equivalence",
        ok,
        &format!("τ=0 vs APE bit-equal {zero_ok}/100 (encoder, logits, loss, gradients); τ=H identity vs τ=0 bit-equal {full_ok}/100 (encoder, logits, loss)")
    ));
}

fn gradcheck(cfg: &ModelConfig) -> (f64, usize) {
    let mut rng = rng_from_seed(cfg.seed ^ 0x9e37);
    let model = Model::new(cfg.clone()).unwrap();
    // Distinct source tokens keep attention away from the uniform regime
    // where gradients sink into roundoff.
    let mut src: Vec<usize> = (0..cfg.vocab).collect();
    src.shuffle(&mut rng);
    src.truncate(4);
    let tgt: Vec<usize> = (0..3).map(|_| rng.gen_range(0..cfg.vocab)).collect();
    let perm = Permutation::from_order(vec![2, 0, 3, 1]).unwrap();
    let (_, analytic) = grads(&model, &src, &tgt, &perm);
    let params: Vec<Param> = model
        .param_names()
        .iter()
        .zip(model.params())
        .map(|(n, v)| Param::new(n.clone(), v.clone()))
        .collect();
    let report = finite_diff_check_adaptive(&params, &analytic, 1e-2, |vals| {
        let m = Model::from_params(cfg.clone(), vals.to_vec())?;
        Ok(m.forward_pair(&src, &tgt, Some(&perm))?.0.loss)
    })
    .unwrap();
    (report.max_relative_error, report.per_parameter.len())
}

#[test]
fn c05_gradient_fidelity() {
    let tiny = ModelConfig {
        d_model: 8,
        heads: 2,
        tau: 1,
        d_ff: 6,
        enc_layers: 2,
        dec_layers: 2,
        vocab: 6,
        seed: 5,
        ..ModelConfig::default()
    };
    let mut configs = Vec::new();
    for variant in Variant::ALL {
        for fusion in [FusionShape::Full, FusionShape::Diagonal] {
            if fusion == FusionShape::Diagonal && !variant.uses_fusion() {
                continue;
            }
            for inj in [XlInjection::FirstLayer, XlInjection::EveryLayer] {
                if inj == XlInjection::FirstLayer && !variant.uses_xl_heads() {
                    continue;
                }
                for tau in [1, 2] {
                    if tau == 2 && !variant.uses_xl_heads() {
                        continue;
                    }
                    configs.push(ModelConfig { variant, fusion, xl_injection: inj, tau, ..tiny.clone() });
                }
            }
        }
    }
    let mut worst = 0.0f64;
    let mut worst_at = String::new();
    let mut tensors = 0;
    for cfg in &configs {
        let (err, n) = gradcheck(cfg);
        tensors += n;
        if err > worst {
            worst = err;
            worst_at = cfg.describe();
        }
    }
    let ok = worst < 1e-4;
    assert!(verdict(
        "gradient-fidelity",
        ok,
        &format!("{} configurations, {tensors} parameter tensors, max relative error {worst:.2e} (limit 1e-4) at {worst_at}", configs.len())
    ));
}

#[test]
fn c06_parameter_accounting() {
    let mut ok = true;
    let mut detail = Vec::new();
    for base in [ModelConfig::default(), ModelConfig { d_model: 32, heads: 4, tau: 1, ..ModelConfig::default() }] {
        let d = base.d_model;
        let count = |variant, fusion| count_parameters(&ModelConfig { variant, fusion, ..base.clone() }).unwrap();
        let ape = count(Variant::Ape, FusionShape::Full);
        ok &= count(Variant::HeadXl, FusionShape::Full) == ape;
        ok &= count(Variant::HeadXl, FusionShape::Diagonal) == ape;
        for v in [Variant::InXl, Variant::Combination] {
            ok &= count(v, FusionShape::Full) == ape + 2 * d * d;
            ok &= count(v, FusionShape::Diagonal) == ape + 2 * d;
        }
        // The live models must agree with the formula.
        for v in Variant::ALL {
            let cfg = ModelConfig { variant: v, ..base.clone() };
            let live: usize = Model::new(cfg.clone()).unwrap().params().iter().map(Matrix::len).sum();
            ok &= live == count_parameters(&cfg).unwrap();
        }
        detail.push(format!(
            "d={d}: APE {ape}, HeadXL +{}, InXL full +{}, InXL diagonal +{}",
            count(Variant::HeadXl, FusionShape::Full) - ape,
            count(Variant::InXl, FusionShape::Full) - ape,
            count(Variant::InXl, FusionShape::Diagonal) - ape
        ));
    }
    assert!(verdict("parameter-accounting", ok, &detail.join("; ")));
}

#[test]
fn c07_aer_worked_example() {
    let mut hyp = AlignmentSet::new(3, 3);
    hyp.insert_sure(0, 0).unwrap();
    hyp.insert_sure(2, 2).unwrap();
    let mut gold = AlignmentSet::new(3, 3);
    gold.insert_sure(0, 0).unwrap();
    gold.insert_sure(1, 1).unwrap();
    gold.insert_possible(2, 2).unwrap();
    let s = aer(&hyp, &gold).unwrap();
    let ok = s.aer == 0.25 && s.precision == 1.0 && s.recall == 0.5;
    assert!(verdict(
        "aer-example",
        ok,
        &format!("AER {} P {} R {} (want 0.25, 1, 0.5)", s.aer, s.precision, s.recall)
    ));
}

// ---------------------------------------------------------------- training

#[derive(Clone, Copy)]
struct Outcome {
    accuracy: f64,
    aer: f64,
    secs: f64,
}

type Slot = Arc<OnceLock<Option<Outcome>>>;

fn run_config() -> RunConfig {
    let cfg = RunConfig::default();
    assert_eq!((cfg.data.train_pairs, cfg.data.min_len, cfg.data.max_len), (20000, 8, 16));
    assert_eq!((cfg.model.vocab, cfg.model.d_model, cfg.model.heads), (50, 64, 8));
    assert_eq!((cfg.model.enc_layers, cfg.model.dec_layers), (2, 2));
    assert_eq!(cfg.data.p_invert, 0.5);
    cfg
}

fn data() -> &'static (Vec<SyntheticPair>, Vec<SyntheticPair>) {
    static DATA: OnceLock<(Vec<SyntheticPair>, Vec<SyntheticPair>)> = OnceLock::new();
    DATA.get_or_init(|| {
        let cfg = run_config();
        let d = &cfg.data;
        let lens = d.min_len..=d.max_len;
        (
            gen_dataset(d.train_pairs, lens.clone(), cfg.model.vocab, d.p_invert, cfg.train_data_seed()).unwrap(),
            gen_dataset(d.eval_pairs, lens, cfg.model.vocab, d.p_invert, cfg.eval_data_seed()).unwrap(),
        )
    })
}

/// Trained-run lookup keyed by the effective configuration. Runs are
/// trained one at a time so each one's wall clock is its own.
fn outcome(variant: Variant, tau: usize, ratio: f64, seed: u64) -> Option<Outcome> {
    static CELLS: OnceLock<Mutex<HashMap<String, Slot>>> = OnceLock::new();
    static TRAINING: Mutex<()> = Mutex::new(());
    let cfg = run_config();
    let (mut variant, mut tau, mut ratio) = (variant, if variant.uses_xl_heads() { tau } else { 0 }, ratio);
    if variant == Variant::HeadXl && tau == 0 {
        note(&format!("headxl τ=0 seed {seed}: reusing the bit-identical APE run"));
        variant = Variant::Ape;
    }
    if ratio > 0.0 && (cfg.data.min_len..=cfg.data.max_len).all(|t| noise_swap_count(t, ratio) == 0) {
        note(&format!("noise {ratio} swaps nothing at lengths {}..={}: reusing the clean run", cfg.data.min_len, cfg.data.max_len));
        ratio = 0.0;
    }
    if !variant.uses_xl_heads() {
        tau = 0;
    }
    let key = format!("{variant} {tau} {ratio} {seed}");
    let slot = {
        let mut map = CELLS.get_or_init(Default::default).lock().unwrap();
        map.entry(key.clone()).or_default().clone()
    };
    *slot.get_or_init(|| {
        let _one_at_a_time = TRAINING.lock().unwrap_or_else(|e| e.into_inner());
        let (train_set, eval_set) = data();
        let model = ModelConfig { variant, tau, seed, ..cfg.model.clone() };
        let tc = xlpe_core::lab::TrainConfig { noise_ratio: ratio, ..cfg.train.clone() };
        let start = Instant::now();
        let result = train(&model, train_set, eval_set, &tc);
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(t) => {
                let e = t.report.eval.expect("completed runs are evaluated");
                note(&format!("trained {key}: accuracy {:.4} AER {:.4} in {secs:.1}s", e.accuracy, e.alignment.aer));
                Some(Outcome { accuracy: e.accuracy, aer: e.alignment.aer, secs })
            }
            Err(a) => {
                note(&format!("run {key} aborted: {}", a.error));
                None
            }
        }
    })
}

struct Group {
    accuracy: f64,
    aer: f64,
    secs: f64,
    failed: usize,
}

fn group(variant: Variant, tau: usize, ratio: f64) -> Group {
    let runs: Vec<Option<Outcome>> = SEEDS.iter().map(|&s| outcome(variant, tau, ratio, s)).collect();
    let ok: Vec<Outcome> = runs.iter().flatten().copied().collect();
    let n = ok.len().max(1) as f64;
    Group {
        accuracy: ok.iter().map(|o| o.accuracy).sum::<f64>() / n,
        aer: ok.iter().map(|o| o.aer).sum::<f64>() / n,
        secs: ok.iter().map(|o| o.secs).sum(),
        failed: runs.len() - ok.len(),
    }
}

#[test]
fn c08_xl_variants_align_better_than_ape() {
    let tau = run_config().model.tau;
    let ape = group(Variant::Ape, 0, 0.0);
    let inxl = group(Variant::InXl, 0, 0.0);
    let head = group(Variant::HeadXl, tau, 0.0);
    let comb = group(Variant::Combination, tau, 0.0);
    let secs = ape.secs + inxl.secs + head.secs + comb.secs;
    let failed = ape.failed + inxl.failed + head.failed + comb.failed;
    let ordering = comb.aer <= inxl.aer.min(head.aer) && inxl.aer.min(head.aer) <= ape.aer;
    let margin = [&inxl, &head, &comb].iter().all(|g| g.accuracy >= ape.accuracy - 0.005);
    let ok = failed == 0 && ordering && margin && secs < 1800.0;
    assert!(verdict(
        "xl-benefit",
        ok,
        &format!(
            "mean AER combination {:.4} inxl {:.4} headxl {:.4} ape {:.4} (ordering {ordering}); \
             accuracy ape {:.4} inxl {:.4} headxl {:.4} combination {:.4} (margin {margin}); \
             {failed} aborted; 20 runs in {:.0}s (limit 1800s)",
            comb.aer, inxl.aer, head.aer, ape.aer, ape.accuracy, inxl.accuracy, head.accuracy, comb.accuracy, secs
        )
    ));
}

#[test]
fn c09_context_free_gap() {
    let ceiling = position_free_ceiling(&data().1);
    let nopos = group(Variant::ContextFree(ContextFreePos::NoPos), 0, 0.0);
    let ape = group(Variant::ContextFree(ContextFreePos::Ape), 0, 0.0);
    let inxl = group(Variant::ContextFree(ContextFreePos::InXl), 0, 0.0);
    let near = (nopos.accuracy - ceiling).abs() <= 0.05;
    let above = ape.accuracy >= ceiling + 0.30;
    let inxl_ge = inxl.accuracy >= ape.accuracy;
    let failed = nopos.failed + ape.failed + inxl.failed;
    let ok = failed == 0 && near && above && inxl_ge;
    assert!(verdict(
        "context-free-gap",
        ok,
        &format!(
            "ceiling {ceiling:.4}; cf-nopos {:.4} (within 0.05: {near}); cf-ape {:.4} (≥ ceiling+0.30: {above}); \
             cf-inxl {:.4} (≥ cf-ape: {inxl_ge}); {failed} aborted",
            nopos.accuracy, ape.accuracy, inxl.accuracy
        )
    ));
}

#[test]
fn c10_noise_degrades_accuracy() {
    let tau = run_config().model.tau;
    let g: Vec<Group> = [0.0, 0.05, 0.1, 0.2].iter().map(|&r| group(Variant::Combination, tau, r)).collect();
    let drop5 = g[0].accuracy - g[1].accuracy;
    let drop20 = g[0].accuracy - g[3].accuracy;
    let failed: usize = g.iter().map(|x| x.failed).sum();
    let ok = failed == 0 && g[3].accuracy < g[0].accuracy && drop5 < drop20;
    assert!(verdict(
        "noise-trend",
        ok,
        &format!(
            "combination accuracy at 0/5/10/20%: {:.4} {:.4} {:.4} {:.4}; drop 0→5% {drop5:.4}, 0→20% {drop20:.4}; {failed} aborted",
            g[0].accuracy, g[1].accuracy, g[2].accuracy, g[3].accuracy
        )
    ));
}

#[test]
fn c11_tau_sweep_has_interior_optimum() {
    let taus = [0usize, 2, 4, 8];
    let g: Vec<Group> = taus.iter().map(|&t| group(Variant::HeadXl, t, 0.0)).collect();
    let aers: Vec<f64> = g.iter().map(|x| x.aer).collect();
    let best_interior = aers[1].min(aers[2]);
    let interior_best = best_interior <= aers[0] && best_interior <= aers[3];
    let full_not_better = aers[3] >= best_interior;
    let failed: usize = g.iter().map(|x| x.failed).sum();
    let ok = failed == 0 && interior_best && full_not_better;
    assert!(verdict(
        "tau-sweep",
        ok,
        &format!(
            "headxl mean AER at τ=0/2/4/8: {:.4} {:.4} {:.4} {:.4}; interior best {interior_best}; τ=8 not better {full_not_better}; {failed} aborted",
            aers[0], aers[1], aers[2], aers[3]
        )
    ));
}

// ---------------------------------------------------------------- CLI

fn xlpe(dir: &Path, args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_xlpe"))
        .current_dir(dir)
        .args(args)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(p) = stack.pop() {
        for e in fs::read_dir(&p).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn c12_repeated_commands_are_byte_identical() {
    let inputs = TempDir::new().unwrap();
    let i = inputs.path();
    fs::write(i.join("corpus.txt"), "a b c d\ne f g\nh i\n").unwrap();
    fs::write(i.join("align.txt"), "0-1 1-3 2-0 3-2\n0-2 1-1 2-0\n0-0 1-1\n").unwrap();
    fs::write(i.join("idx.txt"), "1 3 0 2\n2 1 0\n").unwrap();
    fs::write(
        i.join("tiny.cfg"),
        "d_model = 16\nheads = 4\nd_ff = 16\nvocab = 10\ntrain_pairs = 60\neval_pairs = 12\n\
         min_len = 4\nmax_len = 8\nepochs = 2\nbatch = 8\nwarmup = 2\nseeds = 3,4\ntaus = 0,2,4\n",
    )
    .unwrap();
    let cfg = i.join("tiny.cfg");
    let cfg = cfg.to_str().unwrap();
    let commands: Vec<Vec<String>> = vec![
        "reorder --corpus {i}/corpus.txt --align {i}/align.txt --out r/idx.txt --trees r/trees.txt",
        "pe-dump --indices {i}/idx.txt --d-model 8 --out p/xl.csv",
        "pe-dump --absolute 6 --d-model 8 --out p/abs.csv",
        "train --config {c} --variant combination --out t",
        "sweep-tau --config {c} --variant headxl --out st",
        "sweep-noise --config {c} --variant inxl --out sn",
        "eval-align --checkpoint {i}/model.ckpt --config {c} --out e",
        "eval-align --hyp e/hyp.align --ref e/gold.align --out h",
    ]
    .into_iter()
    .map(|c| c.replace("{i}", i.to_str().unwrap()).replace("{c}", cfg).split(' ').map(String::from).collect())
    .collect();

    // A shared checkpoint input for the checkpoint scoring command.
    let seed_dir = TempDir::new().unwrap();
    assert!(xlpe(seed_dir.path(), &["train", "--config", cfg, "--variant", "headxl", "--out", "."]));
    fs::copy(seed_dir.path().join("model-3.ckpt"), i.join("model.ckpt")).unwrap();

    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let mut failed = Vec::new();
    for cmd in &commands {
        let args: Vec<&str> = cmd.iter().map(String::as_str).collect();
        if !(xlpe(a.path(), &args) && xlpe(b.path(), &args)) {
            failed.push(format!("`{}` did not succeed", cmd[0]));
        }
    }
    let (fa, fb) = (files(a.path()), files(b.path()));
    let differing: Vec<&str> = fa
        .iter()
        .zip(&fb)
        .filter(|(x, y)| x != y)
        .map(|(x, _)| x.0.as_str())
        .collect();
    let ok = failed.is_empty() && fa.len() == fb.len() && differing.is_empty() && fa.len() >= 15;
    assert!(verdict(
        "determinism",
        ok,
        &format!(
            "{} commands run twice, {} output files compared, {} differ{}",
            commands.len(),
            fa.len(),
            differing.len() + fa.len().abs_diff(fb.len()),
            if failed.is_empty() { String::new() } else { format!("; {}", failed.join(", ")) }
        )
    ));
}

