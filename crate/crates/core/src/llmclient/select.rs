//! In-context example selection.
//!
//! Clone examples come from a labeled clone pair whose functionality equals
//! (seen) or differs from (unseen) the target pair's functionality. Neither
//! target snippet ever appears in an example. In unseen mode no example
//! snippet belongs to the target functionality at all.

use rand::seq::IndexedRandom;
use serde::{Deserialize, Serialize};

use super::prompt::{PromptKind, PromptSpec};
use crate::corpus::{CodeSnippet, PairCorpus};
use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    Seen,
    Unseen,
}

impl std::str::FromStr for SelectionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "seen" => Ok(SelectionMode::Seen),
            "unseen" => Ok(SelectionMode::Unseen),
            other => Err(Error::Validation(format!("unknown selection mode `{other}`"))),
        }
    }
}

impl std::fmt::Display for SelectionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SelectionMode::Seen => "seen",
            SelectionMode::Unseen => "unseen",
        })
    }
}

/// Chosen examples, by corpus pair index or snippet id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExampleAssignment {
    Baseline { clone_pair: usize, nonclone_pair: usize },
    Contrastive { clone_pair: usize, w: String },
}

impl ExampleAssignment {
    pub fn clone_pair(&self) -> usize {
        match self {
            ExampleAssignment::Baseline { clone_pair, .. } | ExampleAssignment::Contrastive { clone_pair, .. } => {
                *clone_pair
            }
        }
    }
}

fn owned(pair: (&CodeSnippet, &CodeSnippet)) -> [CodeSnippet; 2] {
    [pair.0.clone(), pair.1.clone()]
}

/// Draw examples for target pair `target` of `corpus`.
pub fn select_examples(
    corpus: &PairCorpus,
    target: usize,
    mode: SelectionMode,
    kind: PromptKind,
    rng: &mut Rng,
) -> Result<ExampleAssignment> {
    let tpair = &corpus.pairs()[target];
    let (t1, t2) = corpus.resolve(target);
    let tf = tpair.functionality.as_str();
    let clean = |s: &CodeSnippet| {
        s.id != t1.id && s.id != t2.id && (mode == SelectionMode::Seen || s.functionality != tf)
    };

    let clone_candidates: Vec<usize> = (0..corpus.len())
        .filter(|&i| {
            let p = &corpus.pairs()[i];
            if i == target || !p.label.is_clone() {
                return false;
            }
            let same = p.functionality == tf;
            let (a, b) = corpus.resolve(i);
            (same == (mode == SelectionMode::Seen)) && clean(a) && clean(b)
        })
        .collect();
    let &clone_pair = clone_candidates
        .choose(rng)
        .ok_or_else(|| Error::NoEligibleExample(format!("no {mode} clone example for functionality `{tf}`")))?;

    match kind {
        PromptKind::Baseline => {
            let candidates: Vec<usize> = (0..corpus.len())
                .filter(|&i| {
                    let p = &corpus.pairs()[i];
                    if i == target || p.label.is_clone() {
                        return false;
                    }
                    let (a, b) = corpus.resolve(i);
                    clean(a) && clean(b) && (mode == SelectionMode::Seen || p.functionality != tf)
                })
                .collect();
            let &nonclone_pair = candidates
                .choose(rng)
                .ok_or_else(|| Error::NoEligibleExample(format!("no {mode} non-clone example for `{tf}`")))?;
            Ok(ExampleAssignment::Baseline {
                clone_pair,
                nonclone_pair,
            })
        }
        PromptKind::Contrastive => {
            let (x, _) = corpus.resolve(clone_pair);
            let candidates: Vec<&CodeSnippet> = corpus
                .snippets()
                .iter()
                .filter(|s| s.functionality != x.functionality && clean(s))
                .collect();
            let w = candidates
                .choose(rng)
                .ok_or_else(|| Error::NoEligibleExample(format!("no snippet outside `{}`", x.functionality)))?;
            Ok(ExampleAssignment::Contrastive {
                clone_pair,
                w: w.id.clone(),
            })
        }
    }
}

/// Turn an assignment into a prompt spec.
pub fn spec_for(corpus: &PairCorpus, target: usize, assignment: &ExampleAssignment) -> Result<PromptSpec> {
    let t = owned(corpus.resolve(target));
    Ok(match assignment {
        ExampleAssignment::Baseline {
            clone_pair,
            nonclone_pair,
        } => PromptSpec::baseline(t, owned(corpus.resolve(*clone_pair)), owned(corpus.resolve(*nonclone_pair))),
        ExampleAssignment::Contrastive { clone_pair, w } => {
            let w = corpus.snippet(w).ok_or_else(|| Error::UnknownSnippet(w.clone()))?;
            PromptSpec::contrastive(t, owned(corpus.resolve(*clone_pair)), w.clone())
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::synthesize_corpus;
    use crate::rng;

    #[test]
    fn mode_constraints_and_no_leakage() {
        let corpus = synthesize_corpus(4, 10, 0.8, 2).unwrap();
        for target in 0..corpus.len() {
            let tf = &corpus.pairs()[target].functionality;
            let (t1, t2) = corpus.resolve(target);
            for mode in [SelectionMode::Seen, SelectionMode::Unseen] {
                for kind in [PromptKind::Baseline, PromptKind::Contrastive] {
                    let mut r = rng::stream(5, target as u64);
                    let a = select_examples(&corpus, target, mode, kind, &mut r).unwrap();
                    let spec = spec_for(&corpus, target, &a).unwrap();
                    spec.validate().unwrap();
                    let cf = &corpus.pairs()[a.clone_pair()].functionality;
                    assert_eq!(cf == tf, mode == SelectionMode::Seen);
                    for s in spec.example_snippets() {
                        assert!(s.id != t1.id && s.id != t2.id);
                        if mode == SelectionMode::Unseen {
                            assert_ne!(&s.functionality, tf);
                        }
                    }
                    if kind == PromptKind::Contrastive {
                        assert_eq!(spec.clone_example[0].code, spec.nonclone_example[0].code);
                        assert_ne!(spec.nonclone_example[1].functionality, spec.clone_example[0].functionality);
                    }
                }
            }
        }
    }

    #[test]
    fn seen_mode_without_other_clones_fails() {
        // one clone pair per functionality: the target's own pair is the only seen candidate
        let corpus = synthesize_corpus(2, 1, 0.8, 2).unwrap();
        let target = (0..corpus.len()).find(|&i| corpus.pairs()[i].label.is_clone()).unwrap();
        let mut r = rng::seeded(1);
        assert!(matches!(
            select_examples(&corpus, target, SelectionMode::Seen, PromptKind::Baseline, &mut r),
            Err(Error::NoEligibleExample(_))
        ));
    }
}
