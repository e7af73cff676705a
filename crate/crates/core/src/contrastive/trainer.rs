//! Deterministic mini-batch SGD for both heads.
//!
//! Each epoch shuffles the training pairs with a ChaCha8 stream derived from
//! the config seed, walks them in batches of `batch_size` and applies one
//! plain SGD step per batch to every trainable parameter: the embedding
//! table (when the encoder is trainable) and the head parameters.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::baseline::{sigmoid, softplus, BaselineModel};
use super::loss::{contrastive_loss_grad, euclidean_distance, LossTerm};
use super::model::{ContrastiveConfig, ContrastiveModel};
use super::projection::{Mode, ProjectionKind};
use crate::corpus::PairCorpus;
use crate::encoder::{Encoder, EncoderSource};
use crate::error::{Error, Result};
use crate::rng;

const SHUFFLE_STREAM: u64 = 1;

/// Mean training loss of every epoch, in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epoch_losses: Vec<f64>,
}

/// Per-snippet encoder inputs, computed once per training run.
enum Inputs {
    Tokens(Vec<Vec<usize>>),
    Fixed(Vec<Vec<f64>>),
}

struct Prepared {
    inputs: Inputs,
    /// (left slot, right slot, is clone) per training pair
    pairs: Vec<(usize, usize, bool)>,
}

fn prepare(encoder: &Encoder, corpus: &PairCorpus, pairs: &[usize]) -> Result<Prepared> {
    if pairs.is_empty() {
        return Err(Error::Empty("training split has no pairs".into()));
    }
    let mut slot: HashMap<&str, usize> = HashMap::new();
    let mut tokens = Vec::new();
    let mut fixed = Vec::new();
    let mut out = Vec::with_capacity(pairs.len());
    for &i in pairs {
        let (l, r) = corpus.resolve(i);
        let mut ends = [0usize; 2];
        for (end, s) in ends.iter_mut().zip([l, r]) {
            *end = match slot.get(s.id.as_str()) {
                Some(&k) => k,
                None => {
                    let k = slot.len();
                    match encoder {
                        Encoder::Embedding(e) => tokens.push(e.token_rows(&s.code)),
                        Encoder::Imported(e) => fixed.push(e.get(&s.id)?.to_vec()),
                    }
                    slot.insert(s.id.as_str(), k);
                    k
                }
            };
        }
        out.push((ends[0], ends[1], corpus.pairs()[i].label.is_clone()));
    }
    let inputs = match encoder {
        Encoder::Embedding(_) => Inputs::Tokens(tokens),
        Encoder::Imported(_) => Inputs::Fixed(fixed),
    };
    Ok(Prepared { inputs, pairs: out })
}

impl Prepared {
    fn encode(&self, encoder: &Encoder, slot: usize) -> Vec<f64> {
        match (&self.inputs, encoder) {
            (Inputs::Tokens(t), Encoder::Embedding(e)) => e.pool(&t[slot]),
            (Inputs::Fixed(v), _) => v[slot].clone(),
            (Inputs::Tokens(_), Encoder::Imported(_)) => unreachable!("inputs prepared for this encoder"),
        }
    }
}

/// Dense gradient buffer for the embedding table that only touches the rows
/// a batch used.
struct TableGrad {
    grad: Vec<f64>,
    touched: Vec<usize>,
    dim: usize,
}

impl TableGrad {
    fn new(encoder: &Encoder) -> Option<Self> {
        match encoder {
            Encoder::Embedding(e) => Some(Self {
                grad: vec![0.0; e.table().len()],
                touched: Vec::new(),
                dim: e.dim(),
            }),
            Encoder::Imported(_) => None,
        }
    }

    fn accumulate(&mut self, encoder: &Encoder, rows: &[usize], d_q: &[f64]) {
        if let Encoder::Embedding(e) = encoder {
            e.backprop_pool(rows, d_q, &mut self.grad);
            self.touched.extend_from_slice(rows);
        }
    }

    fn apply(&mut self, encoder: &mut Encoder, lr: f64) {
        let Encoder::Embedding(e) = encoder else { return };
        self.touched.sort_unstable();
        self.touched.dedup();
        let table = e.table_mut();
        for &r in &self.touched {
            let span = r * self.dim..(r + 1) * self.dim;
            for (w, g) in table[span.clone()].iter_mut().zip(&mut self.grad[span]) {
                *w -= lr * *g;
                *g = 0.0;
            }
        }
        self.touched.clear();
    }
}

fn check_finite(epoch: usize, loss: f64) -> Result<()> {
    if loss.is_finite() {
        Ok(())
    } else {
        Err(Error::Divergence { epoch, loss })
    }
}

/// Train a contrastive model on the pairs `train` of `corpus`. Leaves the
/// model in infer mode.
pub fn train_contrastive(
    model: &mut ContrastiveModel,
    corpus: &PairCorpus,
    train: &[usize],
) -> Result<TrainReport> {
    let cfg = model.config;
    cfg.validate()?;
    let prepared = prepare(&model.encoder, corpus, train)?;
    let mut table_grad = TableGrad::new(&model.encoder);
    let mut rng = rng::stream(cfg.seed, SHUFFLE_STREAM);
    let mut order: Vec<usize> = (0..prepared.pairs.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);

    model.head.set_mode(Mode::Train);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let n = batch.len();
            let mut rows = Vec::with_capacity(2 * n);
            for side in 0..2 {
                for &k in batch {
                    let (a, b, _) = prepared.pairs[k];
                    rows.push(prepared.encode(&model.encoder, if side == 0 { a } else { b }));
                }
            }
            let (out, cache) = model.head.forward_train(&rows)?;
            let terms: Vec<LossTerm> = batch
                .iter()
                .enumerate()
                .map(|(i, &k)| LossTerm::new(&out[i], &out[n + i], prepared.pairs[k].2))
                .collect();
            let grad = contrastive_loss_grad(&terms, cfg.margin)?;
            check_finite(epoch, grad.loss)?;
            total += grad.loss * n as f64;

            let d_out: Vec<Vec<f64>> = grad.d_r.into_iter().chain(grad.d_r_prime).collect();
            let head_grad = model.head.backward(&cache, &d_out);
            if let (Some(tg), Inputs::Tokens(tokens)) = (table_grad.as_mut(), &prepared.inputs) {
                for (i, &k) in batch.iter().enumerate() {
                    let (a, b, _) = prepared.pairs[k];
                    tg.accumulate(&model.encoder, &tokens[a], &head_grad.d_input[i]);
                    tg.accumulate(&model.encoder, &tokens[b], &head_grad.d_input[n + i]);
                }
                tg.apply(&mut model.encoder, cfg.learning_rate);
            }
            model.head.apply_gradient(&head_grad, cfg.learning_rate);
            model.head.update_running_stats(&cache);
        }
        let mean = total / prepared.pairs.len() as f64;
        check_finite(epoch, mean)?;
        epoch_losses.push(mean);
    }
    model.head.set_mode(Mode::Infer);
    Ok(TrainReport { epoch_losses })
}

/// Train the logistic baseline with binary cross-entropy.
pub fn train_baseline(model: &mut BaselineModel, corpus: &PairCorpus, train: &[usize]) -> Result<TrainReport> {
    let cfg = model.config;
    cfg.validate()?;
    let prepared = prepare(&model.encoder, corpus, train)?;
    let mut table_grad = TableGrad::new(&model.encoder);
    let mut rng = rng::stream(cfg.seed, SHUFFLE_STREAM);
    let mut order: Vec<usize> = (0..prepared.pairs.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let dim = model.weights.len();

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let n = batch.len() as f64;
            let mut d_w = vec![0.0; dim];
            let mut d_b = 0.0;
            let mut batch_loss = 0.0;
            for &k in batch {
                let (a, b, clone) = prepared.pairs[k];
                let q = prepared.encode(&model.encoder, a);
                let q_prime = prepared.encode(&model.encoder, b);
                let z = model.logit(&q, &q_prime);
                let y = if clone { 1.0 } else { 0.0 };
                batch_loss += softplus(z) - y * z;
                let dz = (sigmoid(z) - y) / n;
                d_b += dz;
                let mut d_q = vec![0.0; dim];
                for j in 0..dim {
                    let diff = q[j] - q_prime[j];
                    d_w[j] += dz * diff.abs();
                    // subgradient 0 at diff == 0
                    d_q[j] = dz * model.weights[j] * diff.signum() * f64::from(diff != 0.0);
                }
                if let (Some(tg), Inputs::Tokens(tokens)) = (table_grad.as_mut(), &prepared.inputs) {
                    tg.accumulate(&model.encoder, &tokens[a], &d_q);
                    let neg: Vec<f64> = d_q.iter().map(|v| -v).collect();
                    tg.accumulate(&model.encoder, &tokens[b], &neg);
                }
            }
            check_finite(epoch, batch_loss)?;
            total += batch_loss;
            if let Some(tg) = table_grad.as_mut() {
                tg.apply(&mut model.encoder, cfg.learning_rate);
            }
            for (w, g) in model.weights.iter_mut().zip(&d_w) {
                *w -= cfg.learning_rate * g;
            }
            model.bias -= cfg.learning_rate * d_b;
        }
        let mean = total / prepared.pairs.len() as f64;
        check_finite(epoch, mean)?;
        epoch_losses.push(mean);
    }
    Ok(TrainReport { epoch_losses })
}

/// Build a fresh encoder from the training split and train a contrastive
/// model on it.
pub fn fit_contrastive(
    source: &EncoderSource,
    kind: ProjectionKind,
    cfg: ContrastiveConfig,
    corpus: &PairCorpus,
    train: &[usize],
) -> Result<(ContrastiveModel, TrainReport)> {
    let encoder = source.instantiate(train_snippets(corpus, train), cfg.seed)?;
    let mut model = ContrastiveModel::new(encoder, kind, cfg)?;
    let report = train_contrastive(&mut model, corpus, train)?;
    Ok((model, report))
}

pub fn fit_baseline(
    source: &EncoderSource,
    cfg: ContrastiveConfig,
    corpus: &PairCorpus,
    train: &[usize],
) -> Result<(BaselineModel, TrainReport)> {
    let encoder = source.instantiate(train_snippets(corpus, train), cfg.seed)?;
    let mut model = BaselineModel::new(encoder, cfg)?;
    let report = train_baseline(&mut model, corpus, train)?;
    Ok((model, report))
}

/// Distinct snippets referenced by the given pairs, in first-use order.
pub fn train_snippets<'a>(corpus: &'a PairCorpus, pairs: &[usize]) -> Vec<&'a crate::corpus::CodeSnippet> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for &i in pairs {
        let (l, r) = corpus.resolve(i);
        for s in [l, r] {
            if seen.insert(s.id.as_str()) {
                out.push(s);
            }
        }
    }
    out
}

/// Mean training-phase distances over a set of pairs.
///
/// Representations are computed as the loss sees them: the `q` and `q'` rows
/// of all pairs form one batch through the head in train mode, so a
/// batchnorm head normalises with the statistics of that batch rather than
/// its running averages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceSummary {
    /// Mean `||r - r'||` over clone pairs.
    pub clone_distance: f64,
    /// Mean `min(||r - r'||, margin)` over non-clone pairs.
    pub clipped_nonclone_distance: f64,
}

pub fn distance_summary(model: &ContrastiveModel, corpus: &PairCorpus, pairs: &[usize]) -> Result<DistanceSummary> {
    let mut rows = Vec::with_capacity(2 * pairs.len());
    for &i in pairs {
        rows.push(model.encoder.encode(corpus.resolve(i).0)?);
    }
    for &i in pairs {
        rows.push(model.encoder.encode(corpus.resolve(i).1)?);
    }
    let (out, _) = model.head.forward_train(&rows)?;
    let n = pairs.len();
    let (mut clone_sum, mut clone_n, mut non_sum, mut non_n) = (0.0, 0usize, 0.0, 0usize);
    for (k, &i) in pairs.iter().enumerate() {
        let d = euclidean_distance(&out[k], &out[n + k]);
        if corpus.pairs()[i].label.is_clone() {
            clone_sum += d;
            clone_n += 1;
        } else {
            non_sum += d.min(model.config.margin);
            non_n += 1;
        }
    }
    let mean = |s: f64, n: usize| if n == 0 { 0.0 } else { s / n as f64 };
    Ok(DistanceSummary {
        clone_distance: mean(clone_sum, clone_n),
        clipped_nonclone_distance: mean(non_sum, non_n),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{synthesize_corpus, CodeSnippet, Label, LabeledPair};
    use crate::encoder::{EncoderSettings, ImportedEncoder, VectorRecord};

    fn small_source() -> EncoderSource {
        EncoderSource::Trainable(EncoderSettings {
            dim: 16,
            ..Default::default()
        })
    }

    #[test]
    fn contrastive_training_reduces_loss_and_is_deterministic() {
        let corpus = synthesize_corpus(3, 10, 0.8, 4).unwrap();
        let all: Vec<usize> = (0..corpus.len()).collect();
        let cfg = ContrastiveConfig {
            epochs: 30,
            learning_rate: 0.05,
            batch_size: 8,
            ..Default::default()
        };
        for kind in [ProjectionKind::Identity, ProjectionKind::Batchnorm] {
            let (m1, r1) = fit_contrastive(&small_source(), kind, cfg, &corpus, &all).unwrap();
            let (_, r2) = fit_contrastive(&small_source(), kind, cfg, &corpus, &all).unwrap();
            assert_eq!(r1, r2);
            assert!(r1.epoch_losses.last() < r1.epoch_losses.first(), "{kind}: {:?}", r1.epoch_losses);
            assert_eq!(m1.head().mode(), Mode::Infer);
        }
    }

    #[test]
    fn empty_split_is_rejected() {
        let corpus = synthesize_corpus(2, 2, 0.8, 4).unwrap();
        assert!(matches!(
            fit_contrastive(&small_source(), ProjectionKind::Identity, ContrastiveConfig::default(), &corpus, &[]),
            Err(Error::Empty(_))
        ));
    }

    #[test]
    fn divergence_is_reported() {
        let corpus = synthesize_corpus(2, 4, 0.8, 4).unwrap();
        let all: Vec<usize> = (0..corpus.len()).collect();
        let cfg = ContrastiveConfig {
            learning_rate: 1e200,
            margin: 1e150,
            epochs: 5,
            ..Default::default()
        };
        let err = fit_contrastive(&small_source(), ProjectionKind::Identity, cfg, &corpus, &all).unwrap_err();
        assert!(matches!(err, Error::Divergence { .. }), "{err:?}");
    }

    /// Fixed 2-d features: clones differ by 0.1 in dim 0, non-clones by 2.0.
    fn separable_fixture(pairs: usize) -> (PairCorpus, EncoderSource) {
        let mut snippets = Vec::new();
        let mut labeled = Vec::new();
        let mut vectors = Vec::new();
        for k in 0..pairs {
            let clone = k % 2 == 0;
            let base = k as f64 * 0.37;
            let gap = if clone { 0.1 } else { 2.0 };
            for (side, v) in [("a", vec![base, 1.0]), ("b", vec![base + gap, 1.0 - gap / 4.0])] {
                let id = format!("p{k}{side}");
                snippets.push(CodeSnippet {
                    id: id.clone(),
                    code: "x".into(),
                    functionality: "f".into(),
                    language: "java".into(),
                });
                vectors.push(VectorRecord { id, vector: v });
            }
            labeled.push(LabeledPair {
                left: format!("p{k}a"),
                right: format!("p{k}b"),
                label: Label::from_bool(clone),
                functionality: "f".into(),
            });
        }
        let enc = ImportedEncoder::from_records(vectors).unwrap();
        (
            PairCorpus::new("sep", snippets, labeled).unwrap(),
            EncoderSource::Imported(std::sync::Arc::new(enc)),
        )
    }

    #[test]
    fn baseline_separates_linearly_separable_features() {
        let (corpus, source) = separable_fixture(20);
        let all: Vec<usize> = (0..corpus.len()).collect();
        let cfg = ContrastiveConfig {
            epochs: 50,
            learning_rate: 0.5,
            batch_size: 4,
            ..Default::default()
        };
        let (model, _) = fit_baseline(&source, cfg, &corpus, &all).unwrap();
        let correct = all
            .iter()
            .filter(|&&i| {
                let (l, r) = corpus.resolve(i);
                model.predict(l, r).unwrap().clone == corpus.pairs()[i].label.is_clone()
            })
            .count();
        assert_eq!(correct, all.len());
    }

    #[test]
    fn baseline_loss_decreases_monotonically_with_small_steps() {
        let (corpus, source) = separable_fixture(4);
        let all: Vec<usize> = (0..4).collect();
        let cfg = ContrastiveConfig {
            epochs: 40,
            learning_rate: 0.05,
            batch_size: 4,
            ..Default::default()
        };
        let (_, report) = fit_baseline(&source, cfg, &corpus, &all).unwrap();
        assert!(report.epoch_losses.windows(2).all(|w| w[1] < w[0]), "{:?}", report.epoch_losses);
    }

    #[test]
    fn baseline_trains_embeddings_too() {
        let corpus = synthesize_corpus(3, 10, 0.8, 4).unwrap();
        let all: Vec<usize> = (0..corpus.len()).collect();
        let cfg = ContrastiveConfig {
            epochs: 20,
            learning_rate: 0.5,
            batch_size: 8,
            ..Default::default()
        };
        let (m, r) = fit_baseline(&small_source(), cfg, &corpus, &all).unwrap();
        assert!(r.epoch_losses.last() < r.epoch_losses.first());
        assert!(m.weights().iter().any(|w| *w != 0.0));
    }
}
