use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::metrics::Confusion;
use super::wilcoxon::{wilcoxon_paired, Alternative, TestResult};
use crate::error::{Error, Result};
use crate::rng;

const FOLD_STREAM: u64 = 7;

/// One item's prediction and ground truth, keyed by a stable id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemOutcome {
    pub id: usize,
    pub predicted: bool,
    pub label: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldScore {
    pub fold: usize,
    pub size: usize,
    pub f1_a: f64,
    pub f1_b: f64,
    /// F1 had a zero denominator on that side and was set to 0.
    pub undefined_a: bool,
    pub undefined_b: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KFoldComparison {
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<FoldScore>,
    pub test: TestResult,
}

/// Fold index of every id: ids are sorted, shuffled under `seed`, and the
/// item at position `p` goes to fold `p % k`.
pub fn assign_folds(ids: &[usize], k: usize, seed: u64) -> BTreeMap<usize, usize> {
    let mut order = ids.to_vec();
    order.sort_unstable();
    order.shuffle(&mut rng::stream(seed, FOLD_STREAM));
    order.into_iter().enumerate().map(|(p, id)| (id, p % k)).collect()
}

fn index(items: &[ItemOutcome], side: &str) -> Result<BTreeMap<usize, ItemOutcome>> {
    let mut map = BTreeMap::new();
    for it in items {
        if map.insert(it.id, *it).is_some() {
            return Err(Error::DuplicateId(format!("{side}: item {}", it.id)));
        }
    }
    Ok(map)
}

/// Per-fold F1 of two result sets over the same items, compared with a
/// paired signed-rank test (A minus B).
pub fn kfold_f1_compare(
    a: &[ItemOutcome],
    b: &[ItemOutcome],
    k: usize,
    seed: u64,
    alternative: Alternative,
) -> Result<KFoldComparison> {
    let a = index(a, "A")?;
    let b = index(b, "B")?;
    if !a.keys().eq(b.keys()) {
        return Err(Error::Validation("result sets cover different items".into()));
    }
    if k < 2 || k > a.len() {
        return Err(Error::Validation(format!("need 2 <= k <= n, got k={k}, n={}", a.len())));
    }
    let ids: Vec<usize> = a.keys().copied().collect();
    let folds = assign_folds(&ids, k, seed);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (&id, &f) in &folds {
        members[f].push(id);
    }
    let score = |side: &BTreeMap<usize, ItemOutcome>, ids: &[usize]| -> Result<(f64, bool)> {
        let p: Vec<bool> = ids.iter().map(|i| side[i].predicted).collect();
        let y: Vec<bool> = ids.iter().map(|i| side[i].label).collect();
        let c = Confusion::from_pairs(&p, &y)?;
        Ok((c.metrics().f1, c.f1_undefined()))
    };
    let mut scores = Vec::with_capacity(k);
    for (fold, ids) in members.iter().enumerate() {
        let (f1_a, undefined_a) = score(&a, ids)?;
        let (f1_b, undefined_b) = score(&b, ids)?;
        scores.push(FoldScore {
            fold,
            size: ids.len(),
            f1_a,
            f1_b,
            undefined_a,
            undefined_b,
        });
    }
    let xa: Vec<f64> = scores.iter().map(|s| s.f1_a).collect();
    let xb: Vec<f64> = scores.iter().map(|s| s.f1_b).collect();
    let test = wilcoxon_paired(&xa, &xb, alternative)?;
    Ok(KFoldComparison {
        k,
        seed,
        folds: scores,
        test,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn items(n: usize, flip_every: usize) -> Vec<ItemOutcome> {
        (0..n)
            .map(|id| {
                let label = id % 2 == 0;
                ItemOutcome {
                    id,
                    label,
                    predicted: if flip_every > 0 && id % flip_every == 0 { !label } else { label },
                }
            })
            .collect()
    }

    #[test]
    fn fold_sizes_for_404_items() {
        let ids: Vec<usize> = (0..404).collect();
        let folds = assign_folds(&ids, 10, 3);
        let mut sizes = [0usize; 10];
        folds.values().for_each(|&f| sizes[f] += 1);
        assert!(sizes.iter().all(|&s| s == 40 || s == 41), "{sizes:?}");
        assert_eq!(sizes.iter().sum::<usize>(), 404);
        assert_eq!(folds, assign_folds(&ids, 10, 3));
    }

    #[test]
    fn identical_sets_have_zero_differences() {
        let a = items(50, 3);
        assert!(matches!(
            kfold_f1_compare(&a, &a, 10, 1, Alternative::TwoSided),
            Err(Error::AllZeroDifferences)
        ));
    }

    #[test]
    fn better_side_wins() {
        let a = items(404, 0);
        let b = items(404, 5);
        let r = kfold_f1_compare(&a, &b, 10, 1, Alternative::Greater).unwrap();
        assert_eq!(r.folds.len(), 10);
        assert!(r.test.p_value < 0.01);
    }

    #[test]
    fn mismatched_items_and_bad_k() {
        let a = items(20, 0);
        assert!(kfold_f1_compare(&a, &items(21, 0), 5, 1, Alternative::Less).is_err());
        assert!(kfold_f1_compare(&a, &items(20, 3), 21, 1, Alternative::Less).is_err());
        assert!(kfold_f1_compare(&a, &items(20, 3), 1, 1, Alternative::Less).is_err());
    }

    #[test]
    fn undefined_folds_are_flagged() {
        let a: Vec<ItemOutcome> = (0..10).map(|id| ItemOutcome { id, predicted: false, label: false }).collect();
        let mut b = a.clone();
        b[0].predicted = true;
        let r = kfold_f1_compare(&a, &b, 2, 1, Alternative::TwoSided);
        // every fold has F1 = 0 on both sides
        assert!(matches!(r, Err(Error::AllZeroDifferences)));
        let ids: Vec<usize> = (0..10).collect();
        let folds = assign_folds(&ids, 2, 1);
        let mut a2 = a.clone();
        a2[0].label = true;
        a2[0].predicted = true;
        let mut b2 = a2.clone();
        b2[0].predicted = false;
        let r = kfold_f1_compare(&a2, &b2, 2, 1, Alternative::TwoSided).unwrap();
        let f0 = folds[&0];
        assert!(!r.folds[f0].undefined_a && r.folds[f0].undefined_b);
        assert!(r.folds[1 - f0].undefined_a && r.folds[1 - f0].undefined_b);
    }
}
