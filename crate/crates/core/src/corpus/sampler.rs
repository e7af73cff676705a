use std::collections::BTreeMap;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::model::{Label, PairCorpus};
use crate::error::{Error, Result};
use crate::rng;

/// Functionality-aware balanced sampling parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    /// Pairs kept per class and functionality (M).
    pub per_class_cap: usize,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            per_class_cap: 100,
            seed: 1,
        }
    }
}

/// Keep exactly `M` clone and `M` non-clone pairs for every functionality
/// that has at least `M` of each; drop the others.
///
/// Each functionality draws from its own ChaCha8 stream keyed by its tag, so
/// the pairs chosen for one functionality do not depend on which other
/// functionalities are present. Output pairs keep their corpus order.
pub fn sample_balanced(corpus: &PairCorpus, cfg: &SamplerConfig) -> Result<PairCorpus> {
    let cap = cfg.per_class_cap;
    if cap == 0 {
        return Err(Error::Validation("per-class cap must be at least 1".into()));
    }
    let mut groups: BTreeMap<&str, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for (i, p) in corpus.pairs().iter().enumerate() {
        let g = groups.entry(p.functionality.as_str()).or_default();
        match p.label {
            Label::Clone => g.0.push(i),
            Label::NonClone => g.1.push(i),
        }
    }

    let mut selected = Vec::new();
    for (functionality, (clones, nonclones)) in &groups {
        if clones.len() < cap || nonclones.len() < cap {
            continue;
        }
        let mut rng = rng::keyed(cfg.seed, functionality);
        for class in [clones, nonclones] {
            selected.extend(index::sample(&mut rng, class.len(), cap).into_iter().map(|j| class[j]));
        }
    }
    if selected.is_empty() {
        return Err(Error::NothingRetained { cap });
    }
    selected.sort_unstable();
    Ok(corpus.subset(format!("{}-balanced-{cap}", corpus.name()), &selected))
}
