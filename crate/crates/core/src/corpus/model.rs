use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A unit of source code tagged with the functionality it implements.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeSnippet {
    pub id: String,
    pub code: String,
    pub functionality: String,
    pub language: String,
}

/// Clone (1) or non-clone (0).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Label {
    NonClone,
    Clone,
}

impl Label {
    pub fn is_clone(self) -> bool {
        self == Label::Clone
    }

    pub fn from_bool(clone: bool) -> Self {
        if clone {
            Label::Clone
        } else {
            Label::NonClone
        }
    }
}

impl TryFrom<u8> for Label {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, Self::Error> {
        match v {
            0 => Ok(Label::NonClone),
            1 => Ok(Label::Clone),
            other => Err(format!("label must be 0 or 1, got {other}")),
        }
    }
}

impl From<Label> for u8 {
    fn from(l: Label) -> u8 {
        match l {
            Label::NonClone => 0,
            Label::Clone => 1,
        }
    }
}

/// Two snippet ids with a label and the functionality the pair was mined
/// under. For non-clones this is the target functionality (one side
/// implements it).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledPair {
    pub left: String,
    pub right: String,
    pub label: Label,
    pub functionality: String,
}

/// Clone and non-clone counts for one functionality.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub clone: usize,
    pub nonclone: usize,
}

/// An immutable, fully resolved set of snippets and labeled pairs.
///
/// Pairs are addressed by their position in [`PairCorpus::pairs`]; split
/// plans and transcripts refer to pairs by that index.
#[derive(Debug, Clone, PartialEq)]
pub struct PairCorpus {
    name: String,
    snippets: Vec<CodeSnippet>,
    pairs: Vec<LabeledPair>,
    index: HashMap<String, usize>,
}

impl PairCorpus {
    pub fn new(
        name: impl Into<String>,
        snippets: Vec<CodeSnippet>,
        pairs: Vec<LabeledPair>,
    ) -> Result<Self> {
        let mut index = HashMap::with_capacity(snippets.len());
        for (i, s) in snippets.iter().enumerate() {
            if s.id.is_empty() {
                return Err(Error::Validation(format!("snippet #{i} has an empty id")));
            }
            if s.code.is_empty() {
                return Err(Error::Validation(format!("snippet `{}` has empty code", s.id)));
            }
            if index.insert(s.id.clone(), i).is_some() {
                return Err(Error::DuplicateId(s.id.clone()));
            }
        }
        for (i, p) in pairs.iter().enumerate() {
            for id in [&p.left, &p.right] {
                if !index.contains_key(id) {
                    return Err(Error::DanglingReference {
                        pair: i,
                        id: id.clone(),
                    });
                }
            }
            if p.left == p.right {
                return Err(Error::Validation(format!(
                    "pair {i} pairs snippet `{}` with itself",
                    p.left
                )));
            }
        }
        Ok(Self {
            name: name.into(),
            snippets,
            pairs,
            index,
        })
    }

    pub fn empty(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            snippets: Vec::new(),
            pairs: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn snippets(&self) -> &[CodeSnippet] {
        &self.snippets
    }

    pub fn pairs(&self) -> &[LabeledPair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn snippet(&self, id: &str) -> Option<&CodeSnippet> {
        self.index.get(id).map(|&i| &self.snippets[i])
    }

    /// Both snippets of pair `i`. Panics if `i` is out of range.
    pub fn resolve(&self, i: usize) -> (&CodeSnippet, &CodeSnippet) {
        let p = &self.pairs[i];
        (
            &self.snippets[self.index[&p.left]],
            &self.snippets[self.index[&p.right]],
        )
    }

    /// Distinct functionality tags of the pairs, sorted.
    pub fn functionalities(&self) -> Vec<String> {
        self.histogram().into_keys().collect()
    }

    /// Per-functionality clone / non-clone pair counts.
    pub fn histogram(&self) -> BTreeMap<String, ClassCounts> {
        let mut map: BTreeMap<String, ClassCounts> = BTreeMap::new();
        for p in &self.pairs {
            let entry = map.entry(p.functionality.clone()).or_default();
            match p.label {
                Label::Clone => entry.clone += 1,
                Label::NonClone => entry.nonclone += 1,
            }
        }
        map
    }

    /// A new corpus holding the selected pairs and only the snippets they
    /// reference, in original order.
    pub fn subset(&self, name: impl Into<String>, pair_indices: &[usize]) -> PairCorpus {
        let pairs: Vec<LabeledPair> = pair_indices.iter().map(|&i| self.pairs[i].clone()).collect();
        let mut keep = vec![false; self.snippets.len()];
        for p in &pairs {
            keep[self.index[&p.left]] = true;
            keep[self.index[&p.right]] = true;
        }
        let snippets: Vec<CodeSnippet> = self
            .snippets
            .iter()
            .zip(keep)
            .filter(|&(_, k)| k)
            .map(|(s, _)| s.clone())
            .collect();
        let index = snippets
            .iter()
            .enumerate()
            .map(|(i, s)| (s.id.clone(), i))
            .collect();
        PairCorpus {
            name: name.into(),
            snippets,
            pairs,
            index,
        }
    }
}

/// Per-functionality (clone, non-clone) counts; the counts sum to the number
/// of pairs.
pub fn functionality_histogram(corpus: &PairCorpus) -> BTreeMap<String, ClassCounts> {
    corpus.histogram()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn snip(id: &str, f: &str) -> CodeSnippet {
        CodeSnippet {
            id: id.into(),
            code: format!("int {id}() {{ return 0; }}"),
            functionality: f.into(),
            language: "java".into(),
        }
    }

    fn pair(l: &str, r: &str, clone: bool, f: &str) -> LabeledPair {
        LabeledPair {
            left: l.into(),
            right: r.into(),
            label: Label::from_bool(clone),
            functionality: f.into(),
        }
    }

    #[test]
    fn rejects_self_pair_and_empty_code() {
        let err = PairCorpus::new("c", vec![snip("a", "f")], vec![pair("a", "a", true, "f")]);
        assert!(matches!(err, Err(Error::Validation(_))));

        let mut s = snip("a", "f");
        s.code.clear();
        assert!(matches!(PairCorpus::new("c", vec![s], vec![]), Err(Error::Validation(_))));
    }

    #[test]
    fn histogram_of_empty_corpus_is_empty() {
        assert!(functionality_histogram(&PairCorpus::empty("e")).is_empty());
    }

    #[test]
    fn histogram_counts_sum_to_pairs() {
        let c = PairCorpus::new(
            "c",
            vec![snip("a", "f"), snip("b", "f"), snip("c", "g")],
            vec![
                pair("a", "b", true, "f"),
                pair("a", "c", false, "f"),
                pair("c", "b", false, "g"),
            ],
        )
        .unwrap();
        let h = functionality_histogram(&c);
        assert_eq!(h["f"], ClassCounts { clone: 1, nonclone: 1 });
        assert_eq!(h["g"], ClassCounts { clone: 0, nonclone: 1 });
        let total: usize = h.values().map(|c| c.clone + c.nonclone).sum();
        assert_eq!(total, c.len());
    }

    #[test]
    fn subset_keeps_only_referenced_snippets() {
        let c = PairCorpus::new(
            "c",
            vec![snip("a", "f"), snip("b", "f"), snip("c", "g")],
            vec![pair("a", "b", true, "f"), pair("a", "c", false, "f")],
        )
        .unwrap();
        let s = c.subset("s", &[0]);
        assert_eq!(s.snippets().len(), 2);
        assert!(s.snippet("c").is_none());
        assert_eq!(s.resolve(0).1.id, "b");
    }

    #[test]
    fn label_serializes_as_integer() {
        assert_eq!(serde_json::to_string(&Label::Clone).unwrap(), "1");
        assert_eq!(serde_json::from_str::<Label>("0").unwrap(), Label::NonClone);
        assert!(serde_json::from_str::<Label>("2").is_err());
    }
}
