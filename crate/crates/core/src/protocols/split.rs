use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::PairCorpus;
use crate::error::{Error, Result};
use crate::rng;

const SPLIT_STREAM: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    RandomSeen,
    OneVsRest,
    CrossDataset,
}

impl std::str::FromStr for ProtocolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "random" | "random_seen" => Ok(ProtocolKind::RandomSeen),
            "one_vs_rest" | "ovr" => Ok(ProtocolKind::OneVsRest),
            "cross" | "cross_dataset" => Ok(ProtocolKind::CrossDataset),
            other => Err(Error::Validation(format!("unknown protocol `{other}`"))),
        }
    }
}

impl std::fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ProtocolKind::RandomSeen => "random",
            ProtocolKind::OneVsRest => "one-vs-rest",
            ProtocolKind::CrossDataset => "cross",
        })
    }
}

/// Train and test pair indices of one experiment. For cross-dataset plans
/// `train` indexes the training corpus and `test` the test corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Experiment {
    pub id: String,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    /// Held-out functionality of a one-vs-rest experiment.
    pub held_out: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub kind: ProtocolKind,
    pub seed: u64,
    pub stratified: bool,
    pub experiments: Vec<Experiment>,
}

/// Stratified random split: each label class is shuffled and its first
/// `round(fraction * n_class)` pairs go to training.
pub fn split_random(corpus: &PairCorpus, train_fraction: f64, seed: u64) -> Result<SplitPlan> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Validation(format!("train fraction must lie in (0, 1), got {train_fraction}")));
    }
    let mut rng = rng::stream(seed, SPLIT_STREAM);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..corpus.len())
            .filter(|&i| corpus.pairs()[i].label.is_clone() == class)
            .collect();
        idx.shuffle(&mut rng);
        let cut = (train_fraction * idx.len() as f64).round() as usize;
        train.extend_from_slice(&idx[..cut]);
        test.extend_from_slice(&idx[cut..]);
    }
    if train.is_empty() || test.is_empty() {
        return Err(Error::Validation(format!(
            "corpus of {} pairs is too small for a {train_fraction} split",
            corpus.len()
        )));
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitPlan {
        kind: ProtocolKind::RandomSeen,
        seed,
        stratified: true,
        experiments: vec![Experiment {
            id: "random".into(),
            train,
            test,
            held_out: None,
        }],
    })
}

/// One experiment per functionality, holding that functionality out.
///
/// Training also drops pairs that contain a snippet of the held-out
/// functionality under another tag, so no held-out code is ever trained on.
pub fn split_one_vs_rest(corpus: &PairCorpus) -> Result<SplitPlan> {
    let tags = corpus.functionalities();
    if tags.len() < 2 {
        return Err(Error::Validation(format!(
            "one-vs-rest needs at least 2 functionalities, corpus has {}",
            tags.len()
        )));
    }
    let experiments = tags
        .iter()
        .map(|f| {
            let mut train = Vec::new();
            let mut test = Vec::new();
            for (i, p) in corpus.pairs().iter().enumerate() {
                if &p.functionality == f {
                    test.push(i);
                } else {
                    let (l, r) = corpus.resolve(i);
                    if &l.functionality != f && &r.functionality != f {
                        train.push(i);
                    }
                }
            }
            Experiment {
                id: f.clone(),
                train,
                test,
                held_out: Some(f.clone()),
            }
        })
        .collect();
    Ok(SplitPlan {
        kind: ProtocolKind::OneVsRest,
        seed: 0,
        stratified: false,
        experiments,
    })
}

/// Train on every pair of `train`, test on every pair of `test`.
pub fn split_cross_dataset(train: &PairCorpus, test: &PairCorpus) -> Result<SplitPlan> {
    if train.is_empty() {
        return Err(Error::Empty(format!("training corpus `{}` has no pairs", train.name())));
    }
    if test.is_empty() {
        return Err(Error::Empty(format!("test corpus `{}` has no pairs", test.name())));
    }
    Ok(SplitPlan {
        kind: ProtocolKind::CrossDataset,
        seed: 0,
        stratified: false,
        experiments: vec![Experiment {
            id: format!("train-{}-test-{}", train.name(), test.name()),
            train: (0..train.len()).collect(),
            test: (0..test.len()).collect(),
            held_out: None,
        }],
    })
}

/// Functionality tags of the given pairs.
pub fn tags_of(corpus: &PairCorpus, pairs: &[usize]) -> BTreeSet<String> {
    pairs.iter().map(|&i| corpus.pairs()[i].functionality.clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::synthesize_corpus;

    #[test]
    fn random_split_is_stratified_and_deterministic() {
        let corpus = synthesize_corpus(4, 25, 0.8, 1).unwrap();
        assert_eq!(corpus.len(), 200);
        let plan = split_random(&corpus, 0.8, 5).unwrap();
        let e = &plan.experiments[0];
        assert_eq!((e.train.len(), e.test.len()), (160, 40));
        let clones = |v: &[usize]| v.iter().filter(|&&i| corpus.pairs()[i].label.is_clone()).count();
        assert_eq!(clones(&e.train), 80);
        assert_eq!(clones(&e.test), 20);
        assert!(e.train.iter().all(|i| !e.test.contains(i)));
        assert_eq!(plan, split_random(&corpus, 0.8, 5).unwrap());
        assert_ne!(plan, split_random(&corpus, 0.8, 6).unwrap());
    }

    #[test]
    fn random_split_guards() {
        let corpus = synthesize_corpus(2, 1, 0.8, 1).unwrap();
        assert_eq!(corpus.len(), 4);
        assert!(split_random(&corpus, 0.999, 1).is_err());
        assert!(split_random(&corpus, 1.0, 1).is_err());
        assert!(split_random(&corpus, 0.0, 1).is_err());
    }

    #[test]
    fn one_vs_rest_holds_out_each_functionality() {
        let corpus = synthesize_corpus(2, 4, 0.8, 7).unwrap();
        let plan = split_one_vs_rest(&corpus).unwrap();
        assert_eq!(plan.experiments.len(), 2);
        for e in &plan.experiments {
            let held = e.held_out.as_ref().unwrap();
            assert!(!tags_of(&corpus, &e.train).contains(held));
            assert_eq!(tags_of(&corpus, &e.test), BTreeSet::from([held.clone()]));
            for &i in &e.train {
                let (l, r) = corpus.resolve(i);
                assert!(&l.functionality != held && &r.functionality != held);
            }
        }
    }

    #[test]
    fn one_vs_rest_needs_two_functionalities() {
        let corpus = synthesize_corpus(2, 4, 0.8, 7).unwrap();
        let first: Vec<usize> = (0..corpus.len())
            .filter(|&i| corpus.pairs()[i].functionality == corpus.functionalities()[0])
            .collect();
        let single = corpus.subset("single", &first);
        assert!(matches!(split_one_vs_rest(&single), Err(Error::Validation(_))));
    }

    #[test]
    fn cross_dataset_both_directions() {
        let a = synthesize_corpus(2, 4, 0.8, 1).unwrap();
        let b = synthesize_corpus(3, 2, 0.8, 2).unwrap();
        let ab = split_cross_dataset(&a, &b).unwrap();
        let ba = split_cross_dataset(&b, &a).unwrap();
        let e = &ab.experiments[0];
        assert_eq!(e.train.len() + e.test.len(), a.len() + b.len());
        assert_eq!(ba.experiments[0].train.len(), b.len());
        assert!(split_cross_dataset(&PairCorpus::empty("none"), &b).is_err());
    }
}
