//! Adam training loop over vanilla, Mixup and MixAugment modes with early stopping.

mod adam;

use std::fmt;
use std::str::FromStr;

use log::info;
use serde::{Deserialize, Serialize};

pub use adam::{adam_step, AdamState, BETA1, BETA2, EPSILON};

use crate::augment::{make_mixup_batch, random_hflip_batch, Batch, LabeledImage};
use crate::error::{Error, Result};
use crate::metrics::{build_confusion, compute_report, MetricsReport};
use crate::network::{
    forward, mixaugment_loss_and_grad, mixup_only_loss_and_grad, vanilla_loss_and_grad,
    Architecture, Mode, NetworkParams,
};
use crate::numerics::{Rng, Tensor};

pub const DEFAULT_BATCH_SIZE: usize = 32;
pub const DEFAULT_LEARNING_RATE: f64 = 1e-3;
/// The smaller of the two learning rates used for fine-tuning.
pub const ALTERNATE_LEARNING_RATE: f64 = 1e-4;
pub const DEFAULT_MAX_EPOCHS: usize = 100;
pub const DEFAULT_PATIENCE: usize = 15;
pub const DEFAULT_FLIP_PROB: f64 = 0.5;
/// Mixup alphas at or above this value tend to underfit.
pub const UNDERFIT_ALPHA: f64 = 4.0;
/// The alpha grid of the reference experiments.
pub const ALPHA_GRID: [f64; 4] = [0.1, 0.2, 0.6, 1.0];

const EVAL_CHUNK: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainMode {
    Vanilla,
    Mixup,
    #[serde(alias = "mix_augment")]
    Mixaugment,
}

impl fmt::Display for TrainMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrainMode::Vanilla => "vanilla",
            TrainMode::Mixup => "mixup",
            TrainMode::Mixaugment => "mixaugment",
        })
    }
}

impl FromStr for TrainMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "vanilla" => Ok(TrainMode::Vanilla),
            "mixup" => Ok(TrainMode::Mixup),
            "mixaugment" | "mix_augment" => Ok(TrainMode::Mixaugment),
            _ => Err(Error::Argument(format!("unknown training mode {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monitor {
    Accuracy,
    MacroF1,
    AverageAccuracy,
}

impl Monitor {
    pub fn pick(&self, r: &MetricsReport) -> f64 {
        match self {
            Monitor::Accuracy => r.accuracy,
            Monitor::MacroF1 => r.macro_f1,
            Monitor::AverageAccuracy => r.average_accuracy,
        }
    }
}

impl fmt::Display for Monitor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Monitor::Accuracy => "accuracy",
            Monitor::MacroF1 => "macro_f1",
            Monitor::AverageAccuracy => "average_accuracy",
        })
    }
}

impl FromStr for Monitor {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "accuracy" => Ok(Monitor::Accuracy),
            "macro_f1" | "f1" => Ok(Monitor::MacroF1),
            "average_accuracy" | "avg_acc" => Ok(Monitor::AverageAccuracy),
            _ => Err(Error::Argument(format!("unknown monitor metric {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub mode: TrainMode,
    /// Beta(α, α) parameter; required for the mixing modes, absent otherwise.
    pub alpha: Option<f64>,
    pub dropout_rate: f64,
    pub flip_prob: f64,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// `None` disables early stopping.
    pub patience: Option<usize>,
    pub monitor: Monitor,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            mode: TrainMode::Vanilla,
            alpha: None,
            dropout_rate: 0.0,
            flip_prob: 0.0,
            batch_size: DEFAULT_BATCH_SIZE,
            learning_rate: DEFAULT_LEARNING_RATE,
            max_epochs: DEFAULT_MAX_EPOCHS,
            patience: Some(DEFAULT_PATIENCE),
            monitor: Monitor::Accuracy,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        match (self.mode, self.alpha) {
            (TrainMode::Vanilla, Some(_)) => {
                return Err(Error::Argument(
                    "alpha is only meaningful with mixup modes".into(),
                ))
            }
            (TrainMode::Mixup | TrainMode::Mixaugment, None) => {
                return Err(Error::Argument(format!(
                    "mode {} requires alpha",
                    self.mode
                )))
            }
            (_, Some(a)) if !(a.is_finite() && a > 0.0) => {
                return Err(Error::Domain(format!("alpha must be positive, got {a}")))
            }
            _ => {}
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Domain(format!(
                "dropout rate must lie in [0, 1), got {}",
                self.dropout_rate
            )));
        }
        if !(0.0..=1.0).contains(&self.flip_prob) {
            return Err(Error::Domain(format!(
                "flip probability must lie in [0, 1], got {}",
                self.flip_prob
            )));
        }
        if self.batch_size == 0 || self.max_epochs == 0 || self.patience == Some(0) {
            return Err(Error::Argument(
                "batch size, epochs and patience must be positive".into(),
            ));
        }
        if self.mode != TrainMode::Vanilla && self.batch_size < 2 {
            return Err(Error::Argument(
                "mixup modes need a batch size of at least 2".into(),
            ));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Domain(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }

    /// Large alphas push λ towards 0.5 and tend to underfit.
    pub fn underfitting_risk(&self) -> bool {
        self.mode != TrainMode::Vanilla && self.alpha.is_some_and(|a| a >= UNDERFIT_ALPHA)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub average_accuracy: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainRecord {
    pub monitor: Monitor,
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
    /// Last epoch that ran.
    pub stopped_epoch: usize,
}

impl TrainRecord {
    pub fn best(&self) -> &EpochRecord {
        &self.epochs[self.best_epoch - 1]
    }

    pub fn monitored(&self, e: &EpochRecord) -> f64 {
        match self.monitor {
            Monitor::Accuracy => e.accuracy,
            Monitor::MacroF1 => e.macro_f1,
            Monitor::AverageAccuracy => e.average_accuracy,
        }
    }

    pub const CSV_HEADER: &'static str = "epoch,train_loss,accuracy,macro_f1,average_accuracy,best";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for e in &self.epochs {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                e.epoch,
                e.train_loss,
                e.accuracy,
                e.macro_f1,
                e.average_accuracy,
                u8::from(e.epoch == self.best_epoch)
            ));
        }
        s
    }
}

/// Result of [`run_training`].
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Parameters from the best epoch.
    pub params: NetworkParams,
    pub record: TrainRecord,
    /// Eval-set report of the best epoch.
    pub report: MetricsReport,
}

fn dataset_arch(items: &[LabeledImage], what: &str) -> Result<Architecture> {
    let first = items
        .first()
        .ok_or_else(|| Error::Argument(format!("{what} set is empty")))?;
    let (h, w, c) = first.dims();
    Architecture::new(h, w, c, first.num_classes())
}

/// Softmax outputs for every item, in order, `N×K`.
pub fn predict(params: &NetworkParams, items: &[LabeledImage]) -> Result<Tensor> {
    if items.is_empty() {
        return Err(Error::Argument("nothing to predict".into()));
    }
    let mut rng = Rng::new(0);
    let mut probs = Vec::with_capacity(items.len() * params.arch().classes);
    for start in (0..items.len()).step_by(EVAL_CHUNK) {
        let end = (start + EVAL_CHUNK).min(items.len());
        let batch = Batch::gather(items, start..end)?;
        let trace = forward(params, batch.images(), Mode::Eval, 0.0, &mut rng)?;
        probs.extend_from_slice(trace.probs().data());
    }
    Tensor::new(vec![items.len(), params.arch().classes], probs)
}

/// Evaluate `params` on labelled items.
pub fn evaluate_items(params: &NetworkParams, items: &[LabeledImage]) -> Result<MetricsReport> {
    let probs = predict(params, items)?;
    let labels = Batch::from_images(items)?;
    let cm = build_confusion(&probs, labels.labels())?;
    compute_report(&cm, &probs, labels.labels())
}

/// Train from scratch and keep the parameters of the best epoch on `eval_set`.
pub fn run_training(
    config: &TrainConfig,
    train_set: &[LabeledImage],
    eval_set: &[LabeledImage],
) -> Result<TrainOutcome> {
    config.validate()?;
    let arch = dataset_arch(train_set, "train")?;
    let eval_arch = dataset_arch(eval_set, "eval")?;
    if arch != eval_arch {
        return Err(Error::Argument(format!(
            "train set is {arch:?} but eval set is {eval_arch:?}"
        )));
    }

    // independent streams so that modes sharing a seed also share the
    // initialisation and the batch order
    let mut root = Rng::new(config.seed);
    let mut params = NetworkParams::init(arch, &mut root.split())?;
    let mut order_rng = root.split();
    let mut aug_rng = root.split();
    let mut dropout_rng = root.split();
    let mut adam = AdamState::new(&params);
    let mut epochs = Vec::new();
    let mut best: Option<(f64, usize, NetworkParams, MetricsReport)> = None;
    let mut since_best = 0;

    for epoch in 1..=config.max_epochs {
        let order = order_rng.permutation(train_set.len());
        let mut loss_sum = 0.0;
        let mut seen = 0usize;
        for chunk in order.chunks(config.batch_size) {
            if config.mode != TrainMode::Vanilla && chunk.len() < 2 {
                continue;
            }
            let mut batch = Batch::gather(train_set, chunk.iter().copied())?;
            if config.flip_prob > 0.0 {
                batch = random_hflip_batch(&batch, config.flip_prob, &mut aug_rng)?;
            }
            let step = match config.mode {
                TrainMode::Vanilla => {
                    vanilla_loss_and_grad(&params, &batch, config.dropout_rate, &mut dropout_rng)
                }
                TrainMode::Mixup | TrainMode::Mixaugment => {
                    let alpha = config.alpha.expect("validated");
                    let mix = make_mixup_batch(&batch, alpha, &mut aug_rng)?;
                    if config.mode == TrainMode::Mixup {
                        mixup_only_loss_and_grad(
                            &params,
                            &mix,
                            config.dropout_rate,
                            &mut dropout_rng,
                        )
                    } else {
                        mixaugment_loss_and_grad(
                            &params,
                            &mix,
                            config.dropout_rate,
                            &mut dropout_rng,
                        )
                    }
                }
            };
            let (loss, grads) = step.map_err(|e| match e {
                Error::Numeric(m) => Error::Numeric(format!("epoch {epoch}: {m}")),
                other => other,
            })?;
            if !loss.is_finite() {
                return Err(Error::Numeric(format!("epoch {epoch}: loss is {loss}")));
            }
            adam_step(&mut params, &grads, &mut adam, config.learning_rate)?;
            loss_sum += loss * chunk.len() as f64;
            seen += chunk.len();
        }
        if seen == 0 {
            return Err(Error::Argument(
                "train set too small to form a single batch".into(),
            ));
        }

        let report = evaluate_items(&params, eval_set)?;
        let metric = config.monitor.pick(&report);
        let rec = EpochRecord {
            epoch,
            train_loss: loss_sum / seen as f64,
            accuracy: report.accuracy,
            macro_f1: report.macro_f1,
            average_accuracy: report.average_accuracy,
        };
        info!(
            "epoch {epoch:>3} loss {:.4} acc {:.4} f1 {:.4} avg {:.4}",
            rec.train_loss, rec.accuracy, rec.macro_f1, rec.average_accuracy
        );
        epochs.push(rec);

        if best.as_ref().is_none_or(|b| metric > b.0) {
            best = Some((metric, epoch, params.clone(), report));
            since_best = 0;
        } else {
            since_best += 1;
            if config.patience.is_some_and(|p| since_best >= p) {
                info!("no improvement for {since_best} epochs, stopping");
                break;
            }
        }
    }

    let (_, best_epoch, best_params, report) = best.expect("at least one epoch ran");
    let stopped_epoch = epochs.len();
    Ok(TrainOutcome {
        params: best_params,
        record: TrainRecord {
            monitor: config.monitor,
            epochs,
            best_epoch,
            stopped_epoch,
        },
        report,
    })
}
