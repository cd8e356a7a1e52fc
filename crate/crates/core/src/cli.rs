//! The `mixaug` command-line front end.
//!
//! Exit codes: 0 on success, 1 on a runtime failure, 2 on a usage error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use log::warn;
use serde::Deserialize;

use crate::augment::{make_mixup_batch, mix_with, Batch};
use crate::dataio::{
    encode_pnm, generate_synthetic, load_dataset, quantize, PnmImage, SynthConfig, RAF_SUPPORTS,
};
use crate::error::Error;
use crate::network::{load_checkpoint, save_checkpoint};
use crate::numerics::{Rng, Tensor};
use crate::train::{evaluate_items, run_training, Monitor, TrainConfig, TrainMode, TrainOutcome};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "MIXAUG_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "mixaug",
    version,
    about = "Mixup / MixAugment training toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic expression dataset (images plus train/eval manifests).
    Synth(SynthArgs),
    /// Train one experiment cell over one or more seeds.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a manifest.
    Eval(EvalArgs),
    /// Write mixed images with their lambda and soft label for inspection.
    AugmentPreview(PreviewArgs),
    /// Render CSV outputs as aligned text tables.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 7)]
    pub classes: usize,
    #[arg(long, default_value_t = 200)]
    pub per_class: usize,
    #[arg(long, default_value_t = 32)]
    pub size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// `raf` or comma-separated relative class proportions.
    #[arg(long)]
    pub imbalance: Option<String>,
    #[arg(long)]
    pub noise: Option<f64>,
    /// Standard deviation of the per-sample expression jitter.
    #[arg(long)]
    pub jitter: Option<f64>,
    /// Store landmarks in the manifests so loading aligns every face.
    #[arg(long)]
    pub with_landmarks: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Directory holding `train.csv` and `eval.csv`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Output root; results go to `<out>/<cell>/seed-<n>/`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON experiment file; flags given on the command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// vanilla, mixup or mixaugment.
    #[arg(long)]
    pub mode: Option<TrainMode>,
    /// Beta(α, α) parameter for the mixing modes.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Dropout rate before the classifier; `--dropout` alone means 0.5.
    #[arg(long, num_args = 0..=1, default_missing_value = "0.5")]
    pub dropout: Option<f64>,
    /// Horizontal flip probability; `--flip-prob` alone means 0.5.
    #[arg(long, num_args = 0..=1, default_missing_value = "0.5")]
    pub flip_prob: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Epochs without improvement before stopping; 0 disables early stopping.
    #[arg(long)]
    pub patience: Option<usize>,
    /// Eval metric for model selection: accuracy, macro_f1 or average_accuracy.
    #[arg(long)]
    pub monitor: Option<Monitor>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated seeds; overrides `--seed`.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Manifest to evaluate on.
    #[arg(long)]
    pub data: PathBuf,
    /// Directory for `report.csv` and `report.txt`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PreviewArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Use this mixing weight instead of drawing one.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, default_value_t = 8)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// CSV files to render.
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
}

/// Experiment file accepted by `train --config`.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentFile {
    pub mode: Option<TrainMode>,
    pub alpha: Option<f64>,
    pub dropout_rate: Option<f64>,
    pub flip_prob: Option<f64>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub max_epochs: Option<usize>,
    pub patience: Option<usize>,
    pub monitor: Option<Monitor>,
    pub seed: Option<u64>,
    pub seeds: Option<Vec<u64>>,
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

/// A fully resolved training experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub config: TrainConfig,
    pub data: PathBuf,
    pub out: PathBuf,
    pub seeds: Vec<u64>,
}

enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e.into())
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn usage(e: impl ToString) -> Failure {
    Failure::Usage(e.to_string())
}

/// Parse `args` (including the program name), run the command and return
/// the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Synth(a) => cmd_synth(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::AugmentPreview(a) => cmd_augment_preview(&a),
        Command::Report(a) => cmd_report(&a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            EXIT_USAGE
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            EXIT_FAILURE
        }
    }
}

/// Thread cap from [`THREADS_ENV`], if set.
pub fn threads_from_env() -> std::result::Result<Option<usize>, String> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(format!(
                "{THREADS_ENV} must be a positive integer, got {v:?}"
            )),
        },
    }
}

fn parse_imbalance(s: &str, k: usize) -> std::result::Result<Vec<f64>, Failure> {
    if s.eq_ignore_ascii_case("raf") {
        if k != RAF_SUPPORTS.len() {
            return Err(usage(format!("the raf profile needs 7 classes, got {k}")));
        }
        return Ok(RAF_SUPPORTS.to_vec());
    }
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| usage(format!("bad class proportion {t:?}")))
        })
        .collect()
}

pub fn synth_config(a: &SynthArgs) -> crate::Result<SynthConfig> {
    let mut cfg = SynthConfig::new(a.classes, a.per_class, a.size, a.seed);
    if let Some(n) = a.noise {
        cfg.noise_sigma = n;
    }
    if let Some(j) = a.jitter {
        cfg.expression_jitter = j;
    }
    Ok(cfg)
}

fn cmd_synth(a: &SynthArgs) -> CmdResult {
    let mut cfg = synth_config(a)?;
    if let Some(s) = &a.imbalance {
        cfg.imbalance = Some(parse_imbalance(s, a.classes)?);
    }
    cfg.validate().map_err(usage)?;
    let data = generate_synthetic(&cfg)?;
    let (train, eval) = data.write(&a.out, a.with_landmarks)?;
    println!(
        "wrote {} train and {} eval images: {}, {}",
        data.train.len(),
        data.eval.len(),
        train.display(),
        eval.display()
    );
    Ok(())
}

impl ExperimentSpec {
    /// Merge defaults, the optional experiment file and the flags, in that
    /// order of increasing precedence.
    pub fn resolve(a: &TrainArgs) -> std::result::Result<Self, String> {
        let file = match &a.config {
            None => ExperimentFile::default(),
            Some(p) => {
                let text = fs::read_to_string(p)
                    .map_err(|e| format!("cannot read {}: {e}", p.display()))?;
                serde_json::from_str(&text).map_err(|e| format!("{}: {e}", p.display()))?
            }
        };
        let d = TrainConfig::default();
        let patience = a.patience.or(file.patience);
        let config = TrainConfig {
            mode: a.mode.or(file.mode).unwrap_or(d.mode),
            alpha: a.alpha.or(file.alpha),
            dropout_rate: a.dropout.or(file.dropout_rate).unwrap_or(d.dropout_rate),
            flip_prob: a.flip_prob.or(file.flip_prob).unwrap_or(d.flip_prob),
            batch_size: a.batch_size.or(file.batch_size).unwrap_or(d.batch_size),
            learning_rate: a.lr.or(file.learning_rate).unwrap_or(d.learning_rate),
            max_epochs: a.epochs.or(file.max_epochs).unwrap_or(d.max_epochs),
            patience: match patience {
                None => d.patience,
                Some(0) => None,
                Some(p) => Some(p),
            },
            monitor: a.monitor.or(file.monitor).unwrap_or(d.monitor),
            seed: a.seed.or(file.seed).unwrap_or(d.seed),
        };
        config.validate().map_err(|e| e.to_string())?;
        let seeds = a
            .seeds
            .clone()
            .or(file.seeds)
            .unwrap_or_else(|| vec![config.seed]);
        if seeds.is_empty() {
            return Err("the seed list is empty".into());
        }
        let data = a
            .data
            .clone()
            .or(file.data)
            .ok_or("no dataset given (--data)")?;
        let out = a
            .out
            .clone()
            .or(file.out)
            .ok_or("no output directory given (--out)")?;
        Ok(ExperimentSpec {
            config,
            data,
            out,
            seeds,
        })
    }

    /// Directory name of this experiment cell, e.g. `mixaugment-a0.1-d0-f0.5`.
    pub fn cell_name(&self) -> String {
        let c = &self.config;
        let mut s = c.mode.to_string();
        if let Some(a) = c.alpha {
            let _ = write!(s, "-a{a}");
        }
        let _ = write!(s, "-d{}-f{}", c.dropout_rate, c.flip_prob);
        s
    }
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Median and interquartile range.
pub fn median_iqr(values: &[f64]) -> (f64, f64) {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    (quantile(&v, 0.5), quantile(&v, 0.75) - quantile(&v, 0.25))
}

const SUMMARY_HEADER: &str = "mode,alpha,dropout,flip,seeds,accuracy_median,accuracy_iqr,\
macro_f1_median,macro_f1_iqr,average_accuracy_median,average_accuracy_iqr,\
conf_correct_median,conf_wrong_median,underfitting_risk";

fn summary_row(spec: &ExperimentSpec, outcomes: &[TrainOutcome]) -> String {
    let c = &spec.config;
    let col = |f: &dyn Fn(&TrainOutcome) -> f64| -> Vec<f64> { outcomes.iter().map(f).collect() };
    let (acc, acc_iqr) = median_iqr(&col(&|o| o.report.accuracy));
    let (f1, f1_iqr) = median_iqr(&col(&|o| o.report.macro_f1));
    let (avg, avg_iqr) = median_iqr(&col(&|o| o.report.average_accuracy));
    let conf = |pick: &dyn Fn(&TrainOutcome) -> Option<f64>| -> String {
        let v: Vec<f64> = outcomes.iter().filter_map(pick).collect();
        if v.is_empty() {
            String::new()
        } else {
            median_iqr(&v).0.to_string()
        }
    };
    format!(
        "{},{},{},{},{},{acc},{acc_iqr},{f1},{f1_iqr},{avg},{avg_iqr},{},{},{}",
        c.mode,
        c.alpha.map(|a| a.to_string()).unwrap_or_default(),
        c.dropout_rate,
        c.flip_prob,
        spec.seeds
            .iter()
            .map(u64::to_string)
            .collect::<Vec<_>>()
            .join(";"),
        conf(&|o| o.report.confidence.mean_correct),
        conf(&|o| o.report.confidence.mean_wrong),
        u8::from(c.underfitting_risk()),
    )
}

/// Rebuild `aggregate.csv` in `out` from every cell's `summary.csv`, sorted
/// by cell directory name.
fn rebuild_aggregate(out: &Path) -> anyhow::Result<PathBuf> {
    let mut cells: Vec<PathBuf> = fs::read_dir(out)
        .with_context(|| format!("reading {}", out.display()))?
        .filter_map(|e| e.ok().map(|e| e.path().join("summary.csv")))
        .filter(|p| p.is_file())
        .collect();
    cells.sort();
    let mut text = format!("{SUMMARY_HEADER}\n");
    for p in cells {
        let body = fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
        for line in body.lines().skip(1) {
            text.push_str(line);
            text.push('\n');
        }
    }
    let path = out.join("aggregate.csv");
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> anyhow::Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// Run every seed of `spec` and write the per-seed artefacts and the cell
/// summary. Returns the outcomes in seed order.
pub fn run_experiment(spec: &ExperimentSpec) -> anyhow::Result<Vec<TrainOutcome>> {
    let train = load_dataset(&spec.data.join("train.csv"))?;
    let eval = load_dataset(&spec.data.join("eval.csv"))?;
    if train.class_names != eval.class_names {
        bail!("train and eval manifests disagree on the class list");
    }
    if spec.config.underfitting_risk() {
        warn!(
            "alpha {} is large; expect underfitting",
            spec.config.alpha.unwrap_or_default()
        );
    }
    let cell = spec.out.join(spec.cell_name());
    let mut outcomes = Vec::with_capacity(spec.seeds.len());
    for &seed in &spec.seeds {
        let config = TrainConfig {
            seed,
            ..spec.config.clone()
        };
        let outcome = run_training(&config, &train.items, &eval.items)?;
        let dir = cell.join(format!("seed-{seed}"));
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        write_file(&dir.join("record.csv"), outcome.record.to_csv())?;
        write_file(
            &dir.join("report.csv"),
            outcome.report.to_csv(&eval.class_names),
        )?;
        write_file(
            &dir.join("report.txt"),
            outcome.report.to_table(&eval.class_names),
        )?;
        save_checkpoint(&dir.join("model.ckpt"), &outcome.params)?;
        outcomes.push(outcome);
    }
    write_file(
        &cell.join("summary.csv"),
        format!("{SUMMARY_HEADER}\n{}\n", summary_row(spec, &outcomes)),
    )?;
    rebuild_aggregate(&spec.out)?;
    Ok(outcomes)
}

fn cmd_train(a: &TrainArgs) -> CmdResult {
    let spec = ExperimentSpec::resolve(a).map_err(usage)?;
    let outcomes = run_experiment(&spec)?;
    for (seed, o) in spec.seeds.iter().zip(&outcomes) {
        println!(
            "seed {seed}: best epoch {} of {}, accuracy {:.4}, macro F1 {:.4}, average accuracy {:.4}",
            o.record.best_epoch,
            o.record.stopped_epoch,
            o.report.accuracy,
            o.report.macro_f1,
            o.report.average_accuracy
        );
    }
    if spec.config.underfitting_risk() {
        println!("warning: alpha >= 4 risks underfitting");
    }
    println!(
        "{}",
        render_csv(&fs::read_to_string(spec.out.join("aggregate.csv")).unwrap_or_default())
    );
    Ok(())
}

fn cmd_eval(a: &EvalArgs) -> CmdResult {
    let params = load_checkpoint(&a.checkpoint)?;
    let data = load_dataset(&a.data)?;
    let first = data
        .items
        .first()
        .ok_or_else(|| anyhow::anyhow!("{} has no records", a.data.display()))?;
    let arch = params.arch();
    let (h, w, c) = first.dims();
    if (arch.height, arch.width, arch.channels, arch.classes) != (h, w, c, data.num_classes()) {
        return Err(anyhow::anyhow!(
            "checkpoint expects {}x{}x{} images and {} classes, dataset has {h}x{w}x{c} and {}",
            arch.height,
            arch.width,
            arch.channels,
            arch.classes,
            data.num_classes()
        )
        .into());
    }
    let report = evaluate_items(&params, &data.items)?;
    let table = report.to_table(&data.class_names);
    print!("{table}");
    if let Some(out) = &a.out {
        fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        write_file(&out.join("report.csv"), report.to_csv(&data.class_names))?;
        write_file(&out.join("report.txt"), table)?;
    }
    Ok(())
}

fn to_pnm(t: &Tensor) -> crate::Result<Vec<u8>> {
    let s = t.shape();
    let img = PnmImage::new(s[1], s[0], s[2], quantize(t))?;
    Ok(encode_pnm(&img))
}

fn cmd_augment_preview(a: &PreviewArgs) -> CmdResult {
    match (a.alpha, a.lambda) {
        (None, None) => return Err(usage("give --alpha or --lambda")),
        (_, Some(l)) if !(0.0..=1.0).contains(&l) => {
            return Err(usage(format!("lambda must lie in [0, 1], got {l}")))
        }
        (Some(al), None) if !(al.is_finite() && al > 0.0) => {
            return Err(usage(format!("alpha must be positive, got {al}")))
        }
        _ => {}
    }
    if a.count < 2 {
        return Err(usage("--count must be at least 2"));
    }
    let data = load_dataset(&a.data)?;
    if data.items.len() < 2 {
        return Err(anyhow::anyhow!("{} has fewer than 2 records", a.data.display()).into());
    }
    let mut rng = Rng::new(a.seed);
    let picked: Vec<usize> = rng
        .permutation(data.items.len())
        .into_iter()
        .take(a.count)
        .collect();
    let batch = Batch::gather(&data.items, picked.iter().copied())?;
    let mix = match a.lambda {
        Some(l) => {
            let perm = rng.permutation(batch.len());
            mix_with(&batch, perm, l)?
        }
        None => make_mixup_batch(&batch, a.alpha.expect("checked above"), &mut rng)?,
    };
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let ext = if batch.image_shape()[2] == 1 {
        "pgm"
    } else {
        "ppm"
    };
    for n in 0..mix.virtual_.len() {
        let v = mix.virtual_.item(n);
        write_file(
            &a.out.join(format!("mix-{n:03}.{ext}")),
            to_pnm(v.pixels())?,
        )?;
        let mut side = format!(
            "lambda={}\nsource_i={}\nsource_j={}\n",
            mix.lambda, picked[n], picked[mix.permutation[n]]
        );
        for (name, p) in data.class_names.iter().zip(v.label().data()) {
            let _ = writeln!(side, "{name}={p}");
        }
        write_file(&a.out.join(format!("mix-{n:03}.txt")), side)?;
    }
    println!(
        "wrote {} mixed images (lambda {})",
        mix.virtual_.len(),
        mix.lambda
    );
    Ok(())
}

/// Align CSV columns for reading; numbers are right-aligned.
pub fn render_csv(text: &str) -> String {
    let rows: Vec<Vec<String>> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    let ncol = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..ncol)
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.get(c))
                .map(|s| s.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for r in &rows {
        let cells: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(c, s)| {
                if s.parse::<f64>().is_ok() {
                    format!("{s:>w$}", w = widths[c])
                } else {
                    format!("{s:<w$}", w = widths[c])
                }
            })
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

fn cmd_report(a: &ReportArgs) -> CmdResult {
    for (i, f) in a.files.iter().enumerate() {
        let text = fs::read_to_string(f).with_context(|| format!("reading {}", f.display()))?;
        if a.files.len() > 1 {
            if i > 0 {
                println!();
            }
            println!("== {}", f.display());
        }
        print!("{}", render_csv(&text));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_and_iqr() {
        assert_eq!(median_iqr(&[3.0, 1.0, 2.0]), (2.0, 1.0));
        assert_eq!(median_iqr(&[1.0, 2.0, 3.0, 4.0]), (2.5, 1.5));
        assert_eq!(median_iqr(&[5.0]), (5.0, 0.0));
    }

    #[test]
    fn csv_renders_aligned() {
        let t = render_csv("a,bb\n1,2.5\nlonger,3\n");
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines[0], "a       bb");
        assert_eq!(lines[1], "     1  2.5");
    }

    fn train_args(extra: &[&str]) -> TrainArgs {
        let mut argv = vec!["mixaug", "train", "--data", "d", "--out", "o"];
        argv.extend_from_slice(extra);
        match Cli::try_parse_from(argv).unwrap().command {
            Command::Train(a) => a,
            _ => unreachable!(),
        }
    }

    #[test]
    fn bare_flags_take_their_enabled_values() {
        let s = ExperimentSpec::resolve(&train_args(&["--dropout", "--flip-prob"])).unwrap();
        assert_eq!(s.config.dropout_rate, 0.5);
        assert_eq!(s.config.flip_prob, 0.5);
        let s = ExperimentSpec::resolve(&train_args(&[])).unwrap();
        assert_eq!(s.config.dropout_rate, 0.0);
        assert_eq!(s.config.flip_prob, 0.0);
        assert_eq!(s.seeds, vec![0]);
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("exp.json");
        fs::write(
            &p,
            r#"{"mode": "mixup", "alpha": 0.2, "seeds": [4, 5], "learning_rate": 0.0001}"#,
        )
        .unwrap();
        let s = ExperimentSpec::resolve(&train_args(&[
            "--config",
            p.to_str().unwrap(),
            "--alpha",
            "0.6",
        ]))
        .unwrap();
        assert_eq!(s.config.mode, TrainMode::Mixup);
        assert_eq!(s.config.alpha, Some(0.6));
        assert_eq!(s.config.learning_rate, 1e-4);
        assert_eq!(s.seeds, vec![4, 5]);
        assert_eq!(s.cell_name(), "mixup-a0.6-d0-f0");
    }

    #[test]
    fn resolve_rejects_inconsistent_cells() {
        assert!(ExperimentSpec::resolve(&train_args(&["--mode", "mixaugment"])).is_err());
        assert!(ExperimentSpec::resolve(&train_args(&["--alpha", "0.1"])).is_err());
        let s = ExperimentSpec::resolve(&train_args(&["--patience", "0"])).unwrap();
        assert_eq!(s.config.patience, None);
    }
}
