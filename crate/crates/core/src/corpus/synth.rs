//! Synthetic clone corpora.
//!
//! Every synthetic functionality owns a private vocabulary of identifier
//! words. A snippet is a small Java-like method built on one of a few
//! statement skeletons shared by all functionalities; its identifier slots
//! are filled either from the functionality's private vocabulary or from a
//! pool of generic identifiers.
//!
//! A clone pair `(a, b)` is built by copying `a`, shuffling its body
//! statements and redrawing a bounded number of identifier slots, so the
//! token multisets of `a` and `b` overlap by at least `token_overlap`.
//! Non-clone pairs combine snippets from clone pairs of two different
//! functionalities, preferring a partner on the same skeleton, so the
//! syntax alone does not separate the classes.

use std::collections::HashSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::model::{CodeSnippet, Label, LabeledPair, PairCorpus};
use crate::encoder::Tokenizer;
use crate::error::{Error, Result};
use crate::rng::{self, Rng};

const SHARED_IDENTIFIERS: &[&str] = &[
    "result", "value", "tmp", "count", "index", "data", "buffer", "left", "right", "item",
    "total", "size", "node", "list", "key", "input", "output", "current", "next", "flag",
];

const BODY_TEMPLATES: &[&str] = &[
    "int $ = $ + $;",
    "$ = $ * #;",
    "if ($ > $) { $ = $ - $; }",
    "for (int i = 0; i < $; i++) { $ += $[i]; }",
    "while ($ != #) { $ = $ % $; }",
    "$.$($, $);",
    "$[#] = $;",
    "boolean $ = $ == $;",
];

const SYLLABLE_HEADS: &[&str] = &["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"];
const SYLLABLE_VOWELS: &[&str] = &["a", "e", "i", "o", "u"];

/// Knobs of the synthetic generator. [`synthesize_corpus`] uses the defaults
/// for everything but the four headline parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub functionalities: usize,
    pub pairs_per_functionality: usize,
    /// Minimum fraction of token occurrences a clone pair shares.
    pub token_overlap: f64,
    pub seed: u64,
    /// Size of each functionality's private identifier vocabulary.
    pub private_vocab: usize,
    /// Body statements per snippet.
    pub statements: usize,
    /// Probability that an identifier slot draws from the private vocabulary.
    pub private_rate: f64,
    /// Number of statement skeletons shared across functionalities.
    pub skeletons: usize,
}

impl SynthConfig {
    pub fn new(functionalities: usize, pairs: usize, token_overlap: f64, seed: u64) -> Self {
        Self {
            functionalities,
            pairs_per_functionality: pairs,
            token_overlap,
            seed,
            private_vocab: 12,
            statements: 6,
            private_rate: 0.35,
            skeletons: 4,
        }
    }
}

/// Generate `n_functionalities` synthetic functionalities with
/// `pairs_per_functionality` clone and as many non-clone pairs each.
pub fn synthesize_corpus(
    n_functionalities: usize,
    pairs_per_functionality: usize,
    token_overlap: f64,
    seed: u64,
) -> Result<PairCorpus> {
    synthesize(&SynthConfig::new(
        n_functionalities,
        pairs_per_functionality,
        token_overlap,
        seed,
    ))
}

#[derive(Clone)]
struct Statement {
    template: &'static str,
    slots: Vec<String>,
    numbers: Vec<u32>,
}

impl Statement {
    fn render(&self) -> String {
        let mut out = String::new();
        let (mut s, mut n) = (self.slots.iter(), self.numbers.iter());
        for ch in self.template.chars() {
            match ch {
                '$' => out.push_str(s.next().expect("slot count matches template")),
                '#' => out.push_str(&n.next().expect("number count matches template").to_string()),
                c => out.push(c),
            }
        }
        out
    }
}

#[derive(Clone)]
struct SynthSnippet {
    name: String,
    params: [String; 2],
    body: Vec<Statement>,
    ret: String,
}

impl SynthSnippet {
    fn render(&self) -> String {
        let mut out = format!(
            "public static int {}(int {}, int {}) {{\n",
            self.name, self.params[0], self.params[1]
        );
        for st in &self.body {
            out.push_str("    ");
            out.push_str(&st.render());
            out.push('\n');
        }
        out.push_str(&format!("    return {};\n}}\n", self.ret));
        out
    }

    fn slot_count(&self) -> usize {
        3 + self.body.iter().map(|s| s.slots.len()).sum::<usize>()
    }

    fn slot_mut(&mut self, mut k: usize) -> &mut String {
        if k == 0 {
            return &mut self.name;
        }
        if k <= 2 {
            return &mut self.params[k - 1];
        }
        k -= 3;
        for st in &mut self.body {
            if k < st.slots.len() {
                return &mut st.slots[k];
            }
            k -= st.slots.len();
        }
        &mut self.ret
    }
}

struct Family<'a> {
    private: &'a [String],
    private_rate: f64,
}

impl Family<'_> {
    fn identifier(&self, rng: &mut Rng) -> String {
        if rng.random_bool(self.private_rate) {
            self.private.choose(rng).expect("nonempty vocabulary").clone()
        } else {
            (*SHARED_IDENTIFIERS.choose(rng).expect("nonempty pool")).to_string()
        }
    }

    fn snippet(&self, skeleton: &[Statement], rng: &mut Rng) -> SynthSnippet {
        let body = skeleton
            .iter()
            .map(|st| Statement {
                template: st.template,
                slots: st.slots.iter().map(|_| self.identifier(rng)).collect(),
                numbers: st.numbers.clone(),
            })
            .collect();
        SynthSnippet {
            name: self.private.choose(rng).expect("nonempty vocabulary").clone(),
            params: [self.identifier(rng), self.identifier(rng)],
            body,
            ret: self.identifier(rng),
        }
    }

    /// A clone of `a`: body order shuffled and at most
    /// `floor((1 - overlap) * tokens)` identifier slots redrawn.
    fn clone_of(&self, a: &SynthSnippet, overlap: f64, tokens: usize, rng: &mut Rng) -> SynthSnippet {
        let mut b = a.clone();
        b.body.shuffle(rng);
        let budget = ((1.0 - overlap) * tokens as f64).floor() as usize;
        let slots = b.slot_count();
        let mut order: Vec<usize> = (1..slots).collect();
        order.shuffle(rng);
        for &k in order.iter().take(budget.min(slots - 1)) {
            *b.slot_mut(k) = self.identifier(rng);
        }
        b
    }
}

/// Statement sequence with empty identifier slots.
fn skeleton(statements: usize, rng: &mut Rng) -> Vec<Statement> {
    (0..statements)
        .map(|_| {
            let template = *BODY_TEMPLATES.choose(rng).expect("nonempty templates");
            Statement {
                template,
                slots: vec![String::new(); template.matches('$').count()],
                numbers: (0..template.matches('#').count()).map(|_| rng.random_range(0..100)).collect(),
            }
        })
        .collect()
}

fn private_vocabulary(count: usize, taken: &mut HashSet<String>, rng: &mut Rng) -> Vec<String> {
    let mut words = Vec::with_capacity(count);
    while words.len() < count {
        let syllables = rng.random_range(2..=3);
        let word: String = (0..syllables)
            .map(|_| {
                format!(
                    "{}{}",
                    SYLLABLE_HEADS.choose(rng).expect("nonempty"),
                    SYLLABLE_VOWELS.choose(rng).expect("nonempty")
                )
            })
            .collect();
        if SHARED_IDENTIFIERS.contains(&word.as_str()) || !taken.insert(word.clone()) {
            continue;
        }
        words.push(word);
    }
    words
}

/// Functionality tag of synthetic family `f`.
pub fn synthetic_functionality(f: usize) -> String {
    format!("synth_f{f:02}")
}

pub fn synthesize(cfg: &SynthConfig) -> Result<PairCorpus> {
    if cfg.functionalities < 2 {
        return Err(Error::Validation(
            "synthetic corpora need at least 2 functionalities to form non-clone pairs".into(),
        ));
    }
    if cfg.pairs_per_functionality == 0 || cfg.private_vocab == 0 || cfg.statements == 0 || cfg.skeletons == 0 {
        return Err(Error::Validation("synthetic counts must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&cfg.token_overlap) {
        return Err(Error::Validation(format!(
            "token overlap must lie in [0, 1], got {}",
            cfg.token_overlap
        )));
    }
    if !(0.0..=1.0).contains(&cfg.private_rate) {
        return Err(Error::Validation("private rate must lie in [0, 1]".into()));
    }

    let tokenizer = Tokenizer::default();
    let mut rng = rng::seeded(cfg.seed);
    let mut taken = HashSet::new();
    let vocabularies: Vec<Vec<String>> = (0..cfg.functionalities)
        .map(|_| private_vocabulary(cfg.private_vocab, &mut taken, &mut rng))
        .collect();
    let skeletons: Vec<Vec<Statement>> = (0..cfg.skeletons).map(|_| skeleton(cfg.statements, &mut rng)).collect();

    let mut snippets = Vec::new();
    let mut pairs = Vec::new();
    // (functionality, pair k) -> ids of its two clone snippets and skeleton
    let mut clone_ids: Vec<Vec<([String; 2], usize)>> = Vec::with_capacity(cfg.functionalities);
    for (f, vocab) in vocabularies.iter().enumerate() {
        let tag = synthetic_functionality(f);
        let family = Family {
            private: vocab,
            private_rate: cfg.private_rate,
        };
        let mut ids = Vec::with_capacity(cfg.pairs_per_functionality);
        for k in 0..cfg.pairs_per_functionality {
            let sk = rng.random_range(0..skeletons.len());
            let a = family.snippet(&skeletons[sk], &mut rng);
            let a_code = a.render();
            let tokens = tokenizer.tokenize(&a_code).len();
            let b = family.clone_of(&a, cfg.token_overlap, tokens, &mut rng);
            let pair_ids = [format!("{tag}-{k:04}-a"), format!("{tag}-{k:04}-b")];
            for (id, code) in pair_ids.iter().zip([a_code, b.render()]) {
                snippets.push(CodeSnippet {
                    id: id.clone(),
                    code,
                    functionality: tag.clone(),
                    language: "java".into(),
                });
            }
            pairs.push(LabeledPair {
                left: pair_ids[0].clone(),
                right: pair_ids[1].clone(),
                label: Label::Clone,
                functionality: tag.clone(),
            });
            ids.push((pair_ids, sk));
        }
        clone_ids.push(ids);
    }

    for f in 0..cfg.functionalities {
        let tag = synthetic_functionality(f);
        for k in 0..cfg.pairs_per_functionality {
            let (left_ids, sk) = &clone_ids[f][k];
            let same_skeleton: Vec<&String> = clone_ids
                .iter()
                .enumerate()
                .filter(|(g, _)| *g != f)
                .flat_map(|(_, pairs)| pairs.iter())
                .filter(|(_, s)| s == sk)
                .flat_map(|(ids, _)| ids.iter())
                .collect();
            let right = match same_skeleton.choose(&mut rng) {
                Some(id) => (*id).clone(),
                None => {
                    let other = (f + rng.random_range(1..cfg.functionalities)) % cfg.functionalities;
                    clone_ids[other].choose(&mut rng).expect("nonempty family").0[rng.random_range(0..2)].clone()
                }
            };
            pairs.push(LabeledPair {
                left: left_ids[k % 2].clone(),
                right,
                label: Label::NonClone,
                functionality: tag.clone(),
            });
        }
    }

    PairCorpus::new(
        format!(
            "synth-{}x{}-{}-{}",
            cfg.functionalities, cfg.pairs_per_functionality, cfg.token_overlap, cfg.seed
        ),
        snippets,
        pairs,
    )
}
