//! The `xlpe` command line.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use xlpe_core::lab::{
    evaluate, extract_alignment, gen_dataset, sweep_noise, sweep_tau, train, AerScore, AlignmentCounts, SweepCell,
    SyntheticPair,
};
use xlpe_core::posenc::{absolute_pe, xl_pe};
use xlpe_core::xlsan::Variant;

use crate::config::RunConfig;
use crate::formats::{
    format_indices, parse_alignment_file, parse_indices, read_text, reorder_corpus, write_pe_rows, write_text,
    PE_CSV_HEADER,
};
use crate::report::{alignment_csv, cells_csv, summary_json, summary_table};
use crate::{checkpoint, Error, Result};

#[derive(Parser, Debug)]
#[command(name = "xlpe", version, about = "Cross-lingual position encoding toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Reorder source sentences with the BTG oracle on their alignments.
    Reorder {
        /// Tokenized corpus, one sentence per line.
        #[arg(long)]
        corpus: PathBuf,
        /// Pharaoh alignments, one line per sentence.
        #[arg(long)]
        align: PathBuf,
        /// Output file of reordering indices.
        #[arg(long)]
        out: PathBuf,
        /// Also write bracketed trees to this file.
        #[arg(long)]
        trees: Option<PathBuf>,
        /// Representative position of multiply aligned tokens.
        #[arg(long, default_value = "mean", value_parser = ["mean", "min", "max"])]
        aggregation: String,
    },
    /// Dump sinusoidal encodings as CSV.
    PeDump {
        /// File of reordering-index lines.
        #[arg(long, conflicts_with = "absolute", required_unless_present = "absolute")]
        indices: Option<PathBuf>,
        /// Dump the absolute encoding of positions 0..T instead.
        #[arg(long, value_name = "T")]
        absolute: Option<usize>,
        /// Encoding width.
        #[arg(long)]
        d_model: usize,
        /// Output CSV file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one model per seed and evaluate it.
    Train(Overrides),
    /// Train one model per (τ, seed).
    SweepTau(Overrides),
    /// Train one model per (noise ratio, seed).
    SweepNoise(Overrides),
    /// Score alignments: a hypothesis file against a reference, or a
    /// checkpoint's attention alignments on the held-out set.
    EvalAlign {
        /// Hypothesis Pharaoh file.
        #[arg(long, requires = "reference", conflicts_with = "checkpoint")]
        hyp: Option<PathBuf>,
        /// Reference Pharaoh file (`i-j` sure, `i?j` possible).
        #[arg(long = "ref", id = "reference")]
        reference: Option<PathBuf>,
        /// Model checkpoint written by `train`.
        #[arg(long, required_unless_present = "hyp")]
        checkpoint: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
}

/// Config file plus flag overrides; flags win.
#[derive(Args, Debug, Default)]
struct Overrides {
    /// `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Root seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Encoder variant (ape, inxl, headxl, combination, nopos, cf-ape, cf-inxl, cf-nopos).
    #[arg(long)]
    variant: Option<String>,
    /// Number of XL heads.
    #[arg(long)]
    tau: Option<usize>,
    /// Fraction of reordering indices corrupted during training.
    #[arg(long)]
    noise_ratio: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Any other config key.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Overrides {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Input(format!("--set expects KEY=VALUE, got `{kv}`")))?;
            cfg.set(k.trim(), v.trim())?;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(v) = &self.variant {
            cfg.set("variant", v)?;
        }
        if let Some(t) = self.tau {
            cfg.model.tau = t;
        }
        if let Some(r) = self.noise_ratio {
            cfg.train.noise_ratio = r;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit status.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Reorder {
            corpus,
            align,
            out,
            trees,
            aggregation,
        } => {
            let mut cfg = RunConfig::default();
            cfg.set("aggregation", &aggregation)?;
            cmd_reorder(&corpus, &align, &out, trees.as_deref(), &cfg)
        }
        Command::PeDump {
            indices,
            absolute,
            d_model,
            out,
        } => cmd_pe_dump(indices.as_deref(), absolute, d_model, &out),
        Command::Train(o) => cmd_train(&o.resolve()?),
        Command::SweepTau(o) => cmd_sweep("sweep-tau", &o.resolve()?),
        Command::SweepNoise(o) => cmd_sweep("sweep-noise", &o.resolve()?),
        Command::EvalAlign {
            hyp,
            reference,
            checkpoint,
            overrides,
        } => {
            let cfg = overrides.resolve()?;
            match (hyp, reference, checkpoint) {
                (Some(h), Some(r), None) => cmd_eval_files(&h, &r, &cfg),
                (None, _, Some(c)) => cmd_eval_checkpoint(&c, &cfg),
                _ => Err(Error::Input("give --hyp with --ref, or --checkpoint".into())),
            }
        }
    }
}

fn cmd_reorder(corpus: &Path, align: &Path, out: &Path, trees: Option<&Path>, cfg: &RunConfig) -> Result<()> {
    let results = reorder_corpus(&read_text(corpus)?, &read_text(align)?, cfg.aggregation)?;
    let mut idx = String::new();
    let mut brackets = String::new();
    for r in &results {
        idx.push_str(&format_indices(&r.permutation));
        idx.push('\n');
        brackets.push_str(&r.tree.to_bracketed());
        brackets.push('\n');
    }
    write_text(out, &idx)?;
    if let Some(t) = trees {
        write_text(t, &brackets)?;
    }
    let cost: u64 = results.iter().map(|r| r.cost).sum();
    println!("reordered {} sentences, total discordance {cost}", results.len());
    Ok(())
}

fn cmd_pe_dump(indices: Option<&Path>, absolute: Option<usize>, d_model: usize, out: &Path) -> Result<()> {
    let mut csv = format!("{PE_CSV_HEADER}\n");
    let mut rows = 0;
    match (indices, absolute) {
        (Some(path), None) => {
            for (i, line) in read_text(path)?.lines().enumerate() {
                let perm = parse_indices(line, i + 1)?;
                write_pe_rows(&mut csv, &xl_pe(&perm, d_model)?, perm.positions());
                rows += perm.len();
            }
        }
        (None, Some(t)) => {
            if t == 0 {
                return Err(Error::Input("--absolute needs T >= 1".into()));
            }
            let slots: Vec<usize> = (0..t).collect();
            write_pe_rows(&mut csv, &absolute_pe(t, d_model)?, &slots);
            rows = t;
        }
        _ => return Err(Error::Input("give exactly one of --indices and --absolute".into())),
    }
    write_text(out, &csv)?;
    println!("wrote {rows} encodings of width {d_model}");
    Ok(())
}

fn datasets(cfg: &RunConfig) -> Result<(Vec<SyntheticPair>, Vec<SyntheticPair>)> {
    let d = &cfg.data;
    let lens = d.min_len..=d.max_len;
    let train = gen_dataset(d.train_pairs, lens.clone(), cfg.model.vocab, d.p_invert, cfg.train_data_seed())?;
    let eval = gen_dataset(d.eval_pairs, lens, cfg.model.vocab, d.p_invert, cfg.eval_data_seed())?;
    Ok((train, eval))
}

/// τ actually in effect: only HeadXL-style variants have XL heads.
fn effective_tau(cfg: &RunConfig, tau: usize) -> usize {
    if cfg.model.variant.uses_xl_heads() {
        tau
    } else {
        0
    }
}

fn progress(variant: Variant, start: Instant) -> impl FnMut(&SweepCell) {
    let mut last = start;
    move |c| {
        let now = Instant::now();
        let (acc, aer) = c.report.eval.map_or((f64::NAN, f64::NAN), |e| (e.accuracy, e.alignment.aer));
        eprintln!(
            "{variant} tau={} ratio={} seed={}: accuracy {acc:.4}, aer {aer:.4} ({:.1}s)",
            c.tau,
            c.noise_ratio,
            c.seed,
            (now - last).as_secs_f64()
        );
        last = now;
    }
}

fn write_reports(command: &str, cfg: &RunConfig, cells: &[SweepCell]) -> Result<()> {
    write_text(&cfg.out.join("report.csv"), &cells_csv(&cfg.hash(), cells))?;
    write_text(&cfg.out.join("summary.json"), &summary_json(command, cfg, cells)?)?;
    print!("{}", summary_table(cells)?);
    println!("reports written to {}", cfg.out.display());
    Ok(())
}

fn cmd_train(cfg: &RunConfig) -> Result<()> {
    let (data, eval) = datasets(cfg)?;
    let mut report = progress(cfg.model.variant, Instant::now());
    let mut cells = Vec::new();
    for seed in cfg.run_seeds() {
        let trained = train(&cfg.model_for(seed), &data, &eval, &cfg.train).map_err(|a| Error::Core(a.error))?;
        std::fs::create_dir_all(&cfg.out).map_err(Error::write(&cfg.out))?;
        checkpoint::save(&trained.model, &cfg.out.join(format!("model-{seed}.ckpt")))?;
        let cell = SweepCell {
            tau: effective_tau(cfg, cfg.model.tau),
            noise_ratio: cfg.train.noise_ratio,
            seed,
            report: trained.report,
        };
        report(&cell);
        cells.push(cell);
    }
    write_reports("train", cfg, &cells)
}

fn cmd_sweep(command: &str, cfg: &RunConfig) -> Result<()> {
    let (data, eval) = datasets(cfg)?;
    let seeds = cfg.run_seeds();
    let on_cell = progress(cfg.model.variant, Instant::now());
    let mut cells = if command == "sweep-tau" {
        if !cfg.model.variant.uses_xl_heads() {
            return Err(Error::Input(format!(
                "sweep-tau needs a variant with XL heads (headxl or combination), got {}",
                cfg.model.variant
            )));
        }
        sweep_tau(&cfg.model, &data, &eval, &cfg.train, &cfg.taus, &seeds, on_cell)?
    } else {
        sweep_noise(&cfg.model, &data, &eval, &cfg.train, &cfg.ratios, &seeds, on_cell)?
    };
    for c in &mut cells {
        c.tau = effective_tau(cfg, c.tau);
    }
    write_reports(command, cfg, &cells)
}

fn cmd_eval_files(hyp: &Path, reference: &Path, cfg: &RunConfig) -> Result<()> {
    let h = parse_alignment_file(&read_text(hyp)?)?;
    let r = parse_alignment_file(&read_text(reference)?)?;
    if h.len() != r.len() {
        return Err(Error::Input(format!(
            "line {}: hypothesis has {} lines but reference has {}",
            h.len().min(r.len()) + 1,
            h.len(),
            r.len()
        )));
    }
    let mut counts = AlignmentCounts::default();
    for (a, b) in h.iter().zip(&r) {
        counts += AlignmentCounts::of(a, b);
    }
    let score = counts.score()?;
    write_text(&cfg.out.join("report.csv"), &alignment_csv(&cfg.hash(), cfg.seed, &score))?;
    print_score(&score);
    Ok(())
}

fn print_score(s: &AerScore) {
    println!("aer {:.6}  precision {:.6}  recall {:.6}", s.aer, s.precision, s.recall);
}

fn cmd_eval_checkpoint(path: &Path, cfg: &RunConfig) -> Result<()> {
    let model = checkpoint::load(path)?;
    let mut cfg = cfg.clone();
    cfg.model = model.config().clone();
    let (_, eval) = datasets(&cfg)?;
    let metrics = evaluate(&model, &eval)?;
    let mut hyp = String::new();
    let mut gold = String::new();
    let mut indices = String::new();
    for p in &eval {
        hyp.push_str(&extract_alignment(&model, &p.src, &p.tgt, Some(&p.perm))?.to_pharaoh());
        hyp.push('\n');
        gold.push_str(&p.alignment.to_pharaoh());
        gold.push('\n');
        indices.push_str(&format_indices(&p.perm));
        indices.push('\n');
    }
    write_text(&cfg.out.join("hyp.align"), &hyp)?;
    write_text(&cfg.out.join("gold.align"), &gold)?;
    write_text(&cfg.out.join("gold.indices"), &indices)?;
    let cell = SweepCell {
        tau: effective_tau(&cfg, cfg.model.tau),
        noise_ratio: 0.0,
        seed: cfg.model.seed,
        report: xlpe_core::lab::ExperimentReport {
            config: cfg.model.describe(),
            seed: cfg.model.seed,
            loss_curve: vec![metrics.loss],
            steps: 0,
            eval: Some(metrics),
            wall_clock_secs: None,
        },
    };
    write_text(&cfg.out.join("report.csv"), &cells_csv(&cfg.hash(), std::slice::from_ref(&cell)))?;
    print_score(&metrics.alignment);
    println!("accuracy {:.6}", metrics.accuracy);
    Ok(())
}
