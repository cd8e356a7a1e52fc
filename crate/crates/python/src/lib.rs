//! Python bindings for `mixaug`.
//!
//! Tensors cross the boundary as flat lists plus a shape, or as nested lists
//! for `N×K` score matrices.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use mixaug::augment;
use mixaug::dataio::{self, AlignmentTemplate, Landmarks5};
use mixaug::metrics::{self, MetricsReport};
use mixaug::network::{self, NetworkParams};
use mixaug::numerics::{self, Rng, Tensor};
use mixaug::train::{self, Monitor, TrainMode};
use mixaug::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } | Error::Load { .. } => PyIOError::new_err(e.to_string()),
        Error::Numeric(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for mixaug::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn matrix(rows: &[Vec<f64>]) -> PyResult<Tensor> {
    let k = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != k) {
        return Err(PyValueError::new_err("rows must all have the same length"));
    }
    Tensor::matrix(rows.len(), k, rows.concat()).py()
}

fn rows(t: &Tensor) -> Vec<Vec<f64>> {
    t.rows().map(<[f64]>::to_vec).collect()
}

/// An image (`H×W×C`, values in [0, 1]) with a label on the probability simplex.
#[pyclass(name = "LabeledImage", module = "mixaug_py", from_py_object)]
#[derive(Clone)]
struct PyLabeledImage {
    inner: augment::LabeledImage,
}

#[pymethods]
impl PyLabeledImage {
    #[new]
    fn new(shape: Vec<usize>, pixels: Vec<f64>, label: Vec<f64>) -> PyResult<Self> {
        let pixels = Tensor::new(shape, pixels).py()?;
        let label = Tensor::vector(label).py()?;
        Ok(PyLabeledImage {
            inner: augment::LabeledImage::new(pixels, label).py()?,
        })
    }

    /// Image with a one-hot label for `class` out of `k`.
    #[staticmethod]
    fn with_class(shape: Vec<usize>, pixels: Vec<f64>, class: usize, k: usize) -> PyResult<Self> {
        let pixels = Tensor::new(shape, pixels).py()?;
        Ok(PyLabeledImage {
            inner: augment::LabeledImage::with_class(pixels, class, k).py()?,
        })
    }

    #[getter]
    fn shape(&self) -> Vec<usize> {
        self.inner.pixels().shape().to_vec()
    }

    #[getter]
    fn pixels(&self) -> Vec<f64> {
        self.inner.pixels().data().to_vec()
    }

    #[getter]
    fn label(&self) -> Vec<f64> {
        self.inner.label().data().to_vec()
    }

    /// Index of the largest label entry.
    #[getter]
    fn class_index(&self) -> usize {
        self.inner.class()
    }

    fn __repr__(&self) -> String {
        format!(
            "LabeledImage(shape={:?}, class={})",
            self.shape(),
            self.class_index()
        )
    }
}

fn unwrap_items(items: &[PyLabeledImage]) -> Vec<augment::LabeledImage> {
    items.iter().map(|i| i.inner.clone()).collect()
}

fn wrap_items(items: Vec<augment::LabeledImage>) -> Vec<PyLabeledImage> {
    items
        .into_iter()
        .map(|inner| PyLabeledImage { inner })
        .collect()
}

/// `lam·a + (1−lam)·b` for both pixels and labels.
#[pyfunction]
fn mixup(a: &PyLabeledImage, b: &PyLabeledImage, lam: f64) -> PyResult<PyLabeledImage> {
    Ok(PyLabeledImage {
        inner: augment::mixup_pair(&a.inner, &b.inner, lam).py()?,
    })
}

#[pyfunction]
fn hflip(img: &PyLabeledImage) -> PyLabeledImage {
    PyLabeledImage {
        inner: augment::hflip(&img.inner),
    }
}

/// Mix a batch with a drawn λ ~ Beta(alpha, alpha) and a random pairing.
/// Returns `(virtual_items, lam, permutation)`.
#[pyfunction]
fn mixup_batch(
    items: Vec<PyLabeledImage>,
    alpha: f64,
    seed: u64,
) -> PyResult<(Vec<PyLabeledImage>, f64, Vec<usize>)> {
    let batch = augment::Batch::from_images(&unwrap_items(&items)).py()?;
    let mix = augment::make_mixup_batch(&batch, alpha, &mut Rng::new(seed)).py()?;
    Ok((
        wrap_items(mix.virtual_.items()),
        mix.lambda,
        mix.permutation,
    ))
}

/// `n` seeded draws from Beta(alpha, alpha).
#[pyfunction]
#[pyo3(signature = (alpha, n, seed=0))]
fn sample_beta(alpha: f64, n: usize, seed: u64) -> PyResult<Vec<f64>> {
    let mut rng = Rng::new(seed);
    (0..n)
        .map(|_| numerics::sample_beta(alpha, &mut rng))
        .collect::<mixaug::Result<_>>()
        .py()
}

/// The MixAugment loss in both its sum and factored forms.
#[pyfunction]
fn mixaugment_loss(
    probs_v: Vec<Vec<f64>>,
    probs_i: Vec<Vec<f64>>,
    probs_j: Vec<Vec<f64>>,
    labels_i: Vec<Vec<f64>>,
    labels_j: Vec<Vec<f64>>,
    lam: f64,
) -> PyResult<(f64, f64)> {
    let t = [&probs_v, &probs_i, &probs_j, &labels_i, &labels_j].map(|r| matrix(r));
    let [pv, pi, pj, li, lj] = t;
    let (pv, pi, pj, li, lj) = (pv?, pi?, pj?, li?, lj?);
    Ok((
        network::mixaugment_loss_sum(&pv, &pi, &pj, &li, &lj, lam).py()?,
        network::mixaugment_loss_factored(&pv, &pi, &pj, &li, &lj, lam).py()?,
    ))
}

/// Mean cross entropy of `probs` against (soft) `labels`.
#[pyfunction]
fn cross_entropy(probs: Vec<Vec<f64>>, labels: Vec<Vec<f64>>) -> PyResult<f64> {
    network::cce_loss(&matrix(&probs)?, &matrix(&labels)?).py()
}

fn report_dict<'py>(py: Python<'py>, r: &MetricsReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("accuracy", r.accuracy)?;
    d.set_item("average_accuracy", r.average_accuracy)?;
    d.set_item("macro_f1", r.macro_f1)?;
    d.set_item("confusion", r.confusion.rows())?;
    d.set_item(
        "precision",
        r.per_class.iter().map(|c| c.precision).collect::<Vec<_>>(),
    )?;
    d.set_item(
        "recall",
        r.per_class.iter().map(|c| c.recall).collect::<Vec<_>>(),
    )?;
    d.set_item("f1", r.per_class.iter().map(|c| c.f1).collect::<Vec<_>>())?;
    d.set_item(
        "support",
        r.per_class.iter().map(|c| c.support).collect::<Vec<_>>(),
    )?;
    let c = &r.confidence;
    d.set_item("confidence_mean_correct", c.mean_correct)?;
    d.set_item("confidence_median_correct", c.median_correct)?;
    d.set_item("confidence_mean_wrong", c.mean_wrong)?;
    d.set_item("confidence_median_wrong", c.median_wrong)?;
    d.set_item("absent_classes", r.absent_classes.clone())?;
    Ok(d)
}

/// Scores for `N×K` class probabilities against one-hot (or soft) labels.
#[pyfunction]
fn evaluate<'py>(
    py: Python<'py>,
    probs: Vec<Vec<f64>>,
    labels: Vec<Vec<f64>>,
) -> PyResult<Bound<'py, PyDict>> {
    let r = metrics::evaluate(&matrix(&probs)?, &matrix(&labels)?).py()?;
    report_dict(py, &r)
}

/// Affine map `[a, b, tx, c, d, ty]` taking five landmarks onto the frontal
/// template of side `size`.
#[pyfunction]
fn solve_affine(landmarks: Vec<(f64, f64)>, size: usize) -> PyResult<Vec<f64>> {
    let pts: Vec<f64> = landmarks.iter().flat_map(|&(x, y)| [x, y]).collect();
    let src = Landmarks5::from_flat(&pts).py()?;
    let t = AlignmentTemplate::frontal(size).py()?;
    Ok(dataio::solve_affine(&src, &t).py()?.0.to_vec())
}

/// Synthetic expression glyphs: `(train, eval, class_names)`.
#[pyfunction]
#[pyo3(signature = (classes=7, per_class=200, size=32, seed=0))]
fn generate_synthetic(
    classes: usize,
    per_class: usize,
    size: usize,
    seed: u64,
) -> PyResult<(Vec<PyLabeledImage>, Vec<PyLabeledImage>, Vec<String>)> {
    let d = dataio::generate_synthetic(&dataio::SynthConfig::new(classes, per_class, size, seed))
        .py()?;
    Ok((
        wrap_items(d.train_items().py()?),
        wrap_items(d.eval_items().py()?),
        d.class_names,
    ))
}

/// Load a dataset manifest: `(items, class_names)`.
#[pyfunction]
fn load_dataset(path: PathBuf) -> PyResult<(Vec<PyLabeledImage>, Vec<String>)> {
    let d = dataio::load_dataset(&path).py()?;
    Ok((wrap_items(d.items), d.class_names))
}

/// Training hyperparameters.
#[pyclass(name = "TrainConfig", module = "mixaug_py", from_py_object)]
#[derive(Clone)]
struct PyTrainConfig {
    inner: train::TrainConfig,
}

#[pymethods]
impl PyTrainConfig {
    #[new]
    #[pyo3(signature = (mode="vanilla", alpha=None, dropout_rate=0.0, flip_prob=0.0, batch_size=32,
                        learning_rate=1e-3, max_epochs=100, patience=Some(15), monitor="accuracy", seed=0))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        mode: &str,
        alpha: Option<f64>,
        dropout_rate: f64,
        flip_prob: f64,
        batch_size: usize,
        learning_rate: f64,
        max_epochs: usize,
        patience: Option<usize>,
        monitor: &str,
        seed: u64,
    ) -> PyResult<Self> {
        let inner = train::TrainConfig {
            mode: mode.parse::<TrainMode>().py()?,
            alpha,
            dropout_rate,
            flip_prob,
            batch_size,
            learning_rate,
            max_epochs,
            patience,
            monitor: monitor.parse::<Monitor>().py()?,
            seed,
        };
        inner.validate().py()?;
        Ok(PyTrainConfig { inner })
    }

    /// True when alpha is large enough to risk underfitting.
    #[getter]
    fn underfitting_risk(&self) -> bool {
        self.inner.underfitting_risk()
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

/// Trained reference network.
#[pyclass(name = "Model", module = "mixaug_py")]
struct PyModel {
    params: NetworkParams,
    history: Vec<(usize, f64, f64, f64, f64)>,
    best_epoch: usize,
}

#[pymethods]
impl PyModel {
    /// Softmax outputs, one row per item.
    fn predict(&self, py: Python<'_>, items: Vec<PyLabeledImage>) -> PyResult<Vec<Vec<f64>>> {
        let items = unwrap_items(&items);
        let probs = py.detach(|| train::predict(&self.params, &items)).py()?;
        Ok(rows(&probs))
    }

    fn evaluate<'py>(
        &self,
        py: Python<'py>,
        items: Vec<PyLabeledImage>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let items = unwrap_items(&items);
        let r = py
            .detach(|| train::evaluate_items(&self.params, &items))
            .py()?;
        report_dict(py, &r)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        network::save_checkpoint(&path, &self.params).py()
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyModel {
            params: network::load_checkpoint(&path).py()?,
            history: Vec::new(),
            best_epoch: 0,
        })
    }

    /// Per-epoch `(epoch, train_loss, accuracy, macro_f1, average_accuracy)`.
    #[getter]
    fn history(&self) -> Vec<(usize, f64, f64, f64, f64)> {
        self.history.clone()
    }

    /// 1-based epoch whose parameters were kept (0 for a loaded model).
    #[getter]
    fn best_epoch(&self) -> usize {
        self.best_epoch
    }

    #[getter]
    fn num_parameters(&self) -> usize {
        self.params.num_scalars()
    }
}

/// Train from scratch, keeping the best epoch on `eval_items`.
#[pyfunction]
fn fit(
    py: Python<'_>,
    config: &PyTrainConfig,
    train_items: Vec<PyLabeledImage>,
    eval_items: Vec<PyLabeledImage>,
) -> PyResult<PyModel> {
    let (tr, ev) = (unwrap_items(&train_items), unwrap_items(&eval_items));
    let out = py
        .detach(|| train::run_training(&config.inner, &tr, &ev))
        .py()?;
    Ok(PyModel {
        history: out
            .record
            .epochs
            .iter()
            .map(|e| {
                (
                    e.epoch,
                    e.train_loss,
                    e.accuracy,
                    e.macro_f1,
                    e.average_accuracy,
                )
            })
            .collect(),
        best_epoch: out.record.best_epoch,
        params: out.params,
    })
}

/// Run the command-line interface with `args` (without the program name);
/// returns the exit code.
#[pyfunction]
fn cli_main(py: Python<'_>, args: Vec<String>) -> i32 {
    let argv: Vec<String> = std::iter::once("mixaug".to_string()).chain(args).collect();
    py.detach(|| mixaug::cli::run(argv))
}

#[pymodule]
fn mixaug_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyLabeledImage>()?;
    m.add_class::<PyTrainConfig>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(mixup, m)?)?;
    m.add_function(wrap_pyfunction!(hflip, m)?)?;
    m.add_function(wrap_pyfunction!(mixup_batch, m)?)?;
    m.add_function(wrap_pyfunction!(sample_beta, m)?)?;
    m.add_function(wrap_pyfunction!(mixaugment_loss, m)?)?;
    m.add_function(wrap_pyfunction!(cross_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(solve_affine, m)?)?;
    m.add_function(wrap_pyfunction!(generate_synthetic, m)?)?;
    m.add_function(wrap_pyfunction!(load_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(cli_main, m)?)?;
    Ok(())
}
