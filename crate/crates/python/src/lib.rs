//! Python bindings for the core types and operations.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use xfclone::contrastive::{
    contrastive_loss, contrastive_loss_grad, cosine_decision, load_checkpoint, save_checkpoint, Checkpoint,
    ContrastiveConfig, LossTerm, PairClassifier, ProjectionKind, TrainedModel,
};
use xfclone::corpus::{load_corpus, sample_balanced, save_corpus, synthesize, PairCorpus, SamplerConfig, SynthConfig};
use xfclone::encoder::{EncoderSettings, EncoderSource};
use xfclone::llmclient::{parse_verdict, Decision};
use xfclone::protocols::{
    render_csv, run_plan, split_one_vs_rest, split_random, wilcoxon_signed_rank, Alternative, ModelVariant, TrainSpec,
};
use xfclone::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        Error::Validation(_) | Error::DimensionMismatch { .. } => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(py_err)
}

/// Labeled snippet pairs tagged by functionality.
#[pyclass(name = "Corpus", frozen)]
struct PyCorpus(PairCorpus);

#[pymethods]
impl PyCorpus {
    #[staticmethod]
    fn load(dir: PathBuf) -> PyResult<Self> {
        load_corpus(&dir).map(Self).map_err(py_err)
    }

    #[staticmethod]
    #[pyo3(signature = (functionalities, pairs, overlap = 0.8, seed = 1))]
    fn synthesize(functionalities: usize, pairs: usize, overlap: f64, seed: u64) -> PyResult<Self> {
        synthesize(&SynthConfig::new(functionalities, pairs, overlap, seed))
            .map(Self)
            .map_err(py_err)
    }

    fn save(&self, dir: PathBuf) -> PyResult<()> {
        save_corpus(&self.0, &dir).map_err(py_err)
    }

    /// Keep exactly `cap` pairs of each class for every functionality that
    /// has that many.
    #[pyo3(signature = (cap = 100, seed = 1))]
    fn balanced(&self, cap: usize, seed: u64) -> PyResult<Self> {
        sample_balanced(&self.0, &SamplerConfig { per_class_cap: cap, seed })
            .map(Self)
            .map_err(py_err)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn functionalities(&self) -> Vec<String> {
        self.0.functionalities()
    }

    /// `{functionality: (clone, non_clone)}`
    fn histogram(&self) -> std::collections::BTreeMap<String, (usize, usize)> {
        self.0
            .histogram()
            .into_iter()
            .map(|(f, c)| (f, (c.clone, c.nonclone)))
            .collect()
    }

    /// `(left_id, right_id, is_clone, functionality)` for every pair.
    fn pairs(&self) -> Vec<(String, String, bool, String)> {
        self.0
            .pairs()
            .iter()
            .map(|p| (p.left.clone(), p.right.clone(), p.label.is_clone(), p.functionality.clone()))
            .collect()
    }
}

#[allow(clippy::too_many_arguments)]
fn spec(
    variant: &str,
    head: &str,
    margin: f64,
    learning_rate: f64,
    epochs: usize,
    batch_size: usize,
    dim: usize,
    seed: u64,
) -> PyResult<TrainSpec> {
    let config = ContrastiveConfig {
        margin,
        learning_rate,
        epochs,
        batch_size,
        seed,
        ..Default::default()
    };
    config.validate().map_err(py_err)?;
    Ok(TrainSpec {
        variant: parse::<ModelVariant>(variant)?,
        head: parse::<ProjectionKind>(head)?,
        config,
        source: EncoderSource::Trainable(EncoderSettings { dim, ..Default::default() }),
    })
}

/// A trained contrastive or baseline classifier.
#[pyclass(name = "Model", frozen)]
struct PyModel {
    model: TrainedModel,
    epoch_losses: Vec<f64>,
}

#[pymethods]
impl PyModel {
    /// Train on every pair of `corpus`.
    #[staticmethod]
    #[pyo3(signature = (corpus, variant = "cl", head = "batchnorm", margin = 0.5, learning_rate = 0.01,
                        epochs = 30, batch_size = 32, dim = 128, seed = 1))]
    #[allow(clippy::too_many_arguments)]
    fn train(
        py: Python<'_>,
        corpus: &PyCorpus,
        variant: &str,
        head: &str,
        margin: f64,
        learning_rate: f64,
        epochs: usize,
        batch_size: usize,
        dim: usize,
        seed: u64,
    ) -> PyResult<Self> {
        let spec = spec(variant, head, margin, learning_rate, epochs, batch_size, dim, seed)?;
        let all: Vec<usize> = (0..corpus.0.len()).collect();
        let (model, epoch_losses) = py.detach(|| spec.fit(&corpus.0, &all)).map_err(py_err)?;
        Ok(Self { model, epoch_losses })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let ck = load_checkpoint(&path).map_err(py_err)?;
        Ok(Self {
            model: ck.model,
            epoch_losses: ck.epoch_losses,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        save_checkpoint(&Checkpoint::new(self.model.clone(), self.epoch_losses.clone()), &path).map_err(py_err)
    }

    #[getter]
    fn variant(&self) -> &'static str {
        self.model.variant()
    }

    #[getter]
    fn epoch_losses(&self) -> Vec<f64> {
        self.epoch_losses.clone()
    }

    /// `(is_clone, score)` for pair `index` of `corpus`.
    fn predict(&self, corpus: &PyCorpus, index: usize) -> PyResult<(bool, f64)> {
        if index >= corpus.0.len() {
            return Err(PyValueError::new_err(format!("pair index {index} out of range")));
        }
        let (l, r) = corpus.0.resolve(index);
        let p = self.model.classify(l, r).map_err(py_err)?;
        Ok((p.clone, p.score))
    }
}

/// Run an evaluation protocol and return the report as JSON.
#[pyfunction]
#[pyo3(signature = (corpus, protocol = "random", variant = "cl", head = "batchnorm", margin = 0.5,
                    learning_rate = 0.01, epochs = 30, batch_size = 32, dim = 128, seed = 1, train_fraction = 0.8))]
#[allow(clippy::too_many_arguments)]
fn evaluate(
    py: Python<'_>,
    corpus: &PyCorpus,
    protocol: &str,
    variant: &str,
    head: &str,
    margin: f64,
    learning_rate: f64,
    epochs: usize,
    batch_size: usize,
    dim: usize,
    seed: u64,
    train_fraction: f64,
) -> PyResult<String> {
    let spec = spec(variant, head, margin, learning_rate, epochs, batch_size, dim, seed)?;
    let c = &corpus.0;
    let plan = match protocol {
        "random" => split_random(c, train_fraction, seed),
        "one-vs-rest" => split_one_vs_rest(c),
        other => return Err(PyValueError::new_err(format!("unsupported protocol `{other}` for a single corpus"))),
    }
    .map_err(py_err)?;
    let report = py.detach(|| run_plan(&plan, c, c, &spec)).map_err(py_err)?;
    serde_json::to_string(&report).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Evaluation report JSON rendered as CSV.
#[pyfunction]
fn report_csv(report_json: &str) -> PyResult<String> {
    let report = serde_json::from_str(report_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    render_csv(&report).map_err(py_err)
}

/// Contrastive loss of a batch of `(r, r')` rows.
#[pyfunction]
fn loss(r: Vec<Vec<f64>>, r_prime: Vec<Vec<f64>>, clone: Vec<bool>, margin: f64) -> PyResult<f64> {
    if r.len() != r_prime.len() || r.len() != clone.len() {
        return Err(PyValueError::new_err("r, r_prime and clone must have equal length"));
    }
    let terms: Vec<LossTerm> = (0..r.len()).map(|i| LossTerm::new(&r[i], &r_prime[i], clone[i])).collect();
    contrastive_loss(&terms, margin).map_err(py_err)
}

/// `(loss, d_r, d_r_prime)`
#[pyfunction]
#[allow(clippy::type_complexity)]
fn loss_grad(
    r: Vec<Vec<f64>>,
    r_prime: Vec<Vec<f64>>,
    clone: Vec<bool>,
    margin: f64,
) -> PyResult<(f64, Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    if r.len() != r_prime.len() || r.len() != clone.len() {
        return Err(PyValueError::new_err("r, r_prime and clone must have equal length"));
    }
    let terms: Vec<LossTerm> = (0..r.len()).map(|i| LossTerm::new(&r[i], &r_prime[i], clone[i])).collect();
    let g = contrastive_loss_grad(&terms, margin).map_err(py_err)?;
    Ok((g.loss, g.d_r, g.d_r_prime))
}

/// `(is_clone, score, degenerate)` by cosine similarity.
#[pyfunction]
#[pyo3(signature = (r, r_prime, threshold = 0.5))]
fn cosine_predict(r: Vec<f64>, r_prime: Vec<f64>, threshold: f64) -> PyResult<(bool, f64, bool)> {
    if r.len() != r_prime.len() {
        return Err(PyValueError::new_err("vectors differ in length"));
    }
    let p = cosine_decision(&r, &r_prime, threshold);
    Ok((p.clone, p.score, p.degenerate))
}

/// One-sample signed-rank test: `(statistic, p_value, method)`.
#[pyfunction]
#[pyo3(signature = (values, mu0 = 0.0, alternative = "two-sided"))]
fn wilcoxon(values: Vec<f64>, mu0: f64, alternative: &str) -> PyResult<(f64, f64, String)> {
    let r = wilcoxon_signed_rank(&values, mu0, parse::<Alternative>(alternative)?).map_err(py_err)?;
    Ok((r.statistic, r.p_value, format!("{:?}", r.method).to_lowercase()))
}

/// `(decision, explanation)` with decision one of "clone", "not_clone",
/// "unparseable".
#[pyfunction]
fn verdict(response: &str) -> (String, String) {
    let v = parse_verdict(response);
    let d = match v.decision {
        Decision::Clone => "clone",
        Decision::NotClone => "not_clone",
        Decision::Unparseable => "unparseable",
    };
    (d.to_string(), v.explanation)
}

#[pymodule]
fn pyxfclone(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCorpus>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(report_csv, m)?)?;
    m.add_function(wrap_pyfunction!(loss, m)?)?;
    m.add_function(wrap_pyfunction!(loss_grad, m)?)?;
    m.add_function(wrap_pyfunction!(cosine_predict, m)?)?;
    m.add_function(wrap_pyfunction!(wilcoxon, m)?)?;
    m.add_function(wrap_pyfunction!(verdict, m)?)?;
    Ok(())
}
