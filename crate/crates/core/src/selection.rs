//! Information-gain feature ranking and fold-averaged rank reports.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::TextClass;
use crate::features::{DocFeatures, FeatureKey, FeatureSpace};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SelectionError {
    #[error("information gain needs documents of both classes")]
    SingleClass,
    #[error("information gain needs at least 2 documents, got {0}")]
    TooFewDocuments(usize),
    #[error("{docs} presence rows but {labels} labels")]
    LengthMismatch { docs: usize, labels: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IgScore {
    pub feature: usize,
    /// Bits.
    pub ig: f64,
    /// 1-based position after sorting by descending gain, ties by feature id.
    pub rank: usize,
}

/// Entropy in bits of a two-way split with the given counts. Symmetric in its
/// arguments bit for bit.
pub fn binary_entropy(a: u64, b: u64) -> f64 {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let n = (lo + hi) as f64;
    if lo == 0 {
        return 0.0;
    }
    let p = lo as f64 / n;
    let q = hi as f64 / n;
    -(p * p.log2() + q * q.log2())
}

/// Gain of one feature from its 2x2 contingency counts.
fn gain(
    prior_entropy: f64,
    n: u64,
    n_translated: u64,
    present_translated: u64,
    present_original: u64,
) -> f64 {
    let n_original = n - n_translated;
    let present = present_translated + present_original;
    let absent = n - present;
    let nf = n as f64;
    let with = (present as f64 / nf) * binary_entropy(present_translated, present_original);
    let without = (absent as f64 / nf)
        * binary_entropy(n_translated - present_translated, n_original - present_original);
    (prior_entropy - with - without).max(0.0)
}

/// Scores features given, per document, the sorted ids of the features it
/// contains.
pub fn information_gain_sparse(
    n_features: usize,
    present: &[Vec<usize>],
    labels: &[TextClass],
) -> Result<Vec<IgScore>, SelectionError> {
    if present.len() != labels.len() {
        return Err(SelectionError::LengthMismatch {
            docs: present.len(),
            labels: labels.len(),
        });
    }
    let n = labels.len() as u64;
    if n < 2 {
        return Err(SelectionError::TooFewDocuments(labels.len()));
    }
    let n_translated = labels.iter().filter(|&&c| c == TextClass::Translated).count() as u64;
    if n_translated == 0 || n_translated == n {
        return Err(SelectionError::SingleClass);
    }

    let mut with_t = vec![0u64; n_features];
    let mut with_o = vec![0u64; n_features];
    for (ids, &label) in present.iter().zip(labels) {
        let counts = match label {
            TextClass::Translated => &mut with_t,
            TextClass::Original => &mut with_o,
        };
        for &id in ids {
            counts[id] += 1;
        }
    }

    let prior = binary_entropy(n_translated, n - n_translated);
    let mut scores: Vec<IgScore> = (0..n_features)
        .map(|f| IgScore {
            feature: f,
            ig: gain(prior, n, n_translated, with_t[f], with_o[f]),
            rank: 0,
        })
        .collect();
    scores.sort_by(|a, b| {
        b.ig.partial_cmp(&a.ig)
            .unwrap_or(Ordering::Equal)
            .then(a.feature.cmp(&b.feature))
    });
    for (i, s) in scores.iter_mut().enumerate() {
        s.rank = i + 1;
    }
    Ok(scores)
}

/// Scores features from a document-by-feature presence matrix.
pub fn information_gain(
    presence: &[Vec<bool>],
    labels: &[TextClass],
) -> Result<Vec<IgScore>, SelectionError> {
    let n_features = presence.first().map_or(0, Vec::len);
    let sparse: Vec<Vec<usize>> = presence
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .filter(|(_, &p)| p)
                .map(|(i, _)| i)
                .collect()
        })
        .collect();
    information_gain_sparse(n_features, &sparse, labels)
}

/// Scores every feature of `space` over the given documents.
pub fn score_space(
    space: &FeatureSpace,
    docs: &[&DocFeatures],
    labels: &[TextClass],
) -> Result<Vec<IgScore>, SelectionError> {
    let present: Vec<Vec<usize>> = docs
        .iter()
        .map(|d| {
            d.counts
                .iter()
                .filter(|(_, &n)| n > 0)
                .filter_map(|(k, _)| space.id(k))
                .collect()
        })
        .collect();
    information_gain_sparse(space.len(), &present, labels)
}

/// Ids of the `k` best-ranked features.
pub fn select_top_k(scores: &[IgScore], k: usize) -> BTreeSet<usize> {
    let mut sorted: Vec<&IgScore> = scores.iter().collect();
    sorted.sort_by_key(|s| s.rank);
    sorted.into_iter().take(k).map(|s| s.feature).collect()
}

/// Which class a feature's presence points to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predicts {
    Original,
    Translated,
    None,
}

impl Predicts {
    pub fn as_str(self) -> &'static str {
        match self {
            Predicts::Original => "original",
            Predicts::Translated => "translated",
            Predicts::None => "none",
        }
    }
}

impl fmt::Display for Predicts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Class whose documents contain the feature at the higher rate.
pub fn predicts_by_presence(
    key: &FeatureKey,
    docs: &[DocFeatures],
    labels: &[TextClass],
) -> Predicts {
    let (mut hits_t, mut hits_o, mut n_t, mut n_o) = (0u64, 0u64, 0u64, 0u64);
    for (d, &label) in docs.iter().zip(labels) {
        let has = d.contains(key) as u64;
        match label {
            TextClass::Translated => {
                n_t += 1;
                hits_t += has;
            }
            TextClass::Original => {
                n_o += 1;
                hits_o += has;
            }
        }
    }
    // compare hits_t / n_t with hits_o / n_o without division
    match (hits_t * n_o).cmp(&(hits_o * n_t)) {
        Ordering::Greater => Predicts::Translated,
        Ordering::Less => Predicts::Original,
        Ordering::Equal => Predicts::None,
    }
}

/// Features of one fold in rank order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FoldRanking {
    pub ranked: Vec<FeatureKey>,
}

impl FoldRanking {
    pub fn from_scores(space: &FeatureSpace, scores: &[IgScore]) -> Self {
        let mut sorted: Vec<&IgScore> = scores.iter().collect();
        sorted.sort_by_key(|s| s.rank);
        FoldRanking {
            ranked: sorted.into_iter().map(|s| space.key(s.feature).clone()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragedRank {
    pub key: FeatureKey,
    pub mean_rank: f64,
    pub fold_ranks: Vec<usize>,
    pub predicts: Predicts,
}

/// Averages per-fold ranks. A feature missing from a fold's ranking gets rank
/// `N_fold + 1` there. Output is sorted by mean rank, ties by key.
pub fn average_ranks(
    per_fold: &[FoldRanking],
    mut predicts: impl FnMut(&FeatureKey) -> Predicts,
) -> Vec<AveragedRank> {
    let lookups: Vec<BTreeMap<&FeatureKey, usize>> = per_fold
        .iter()
        .map(|f| f.ranked.iter().enumerate().map(|(i, k)| (k, i + 1)).collect())
        .collect();
    let all: BTreeSet<&FeatureKey> = per_fold.iter().flat_map(|f| f.ranked.iter()).collect();
    let mut out: Vec<AveragedRank> = all
        .into_iter()
        .map(|key| {
            let fold_ranks: Vec<usize> = lookups
                .iter()
                .zip(per_fold)
                .map(|(lk, f)| lk.get(key).copied().unwrap_or(f.ranked.len() + 1))
                .collect();
            let mean_rank = fold_ranks.iter().sum::<usize>() as f64 / fold_ranks.len() as f64;
            AveragedRank {
                key: key.clone(),
                mean_rank,
                fold_ranks,
                predicts: predicts(key),
            }
        })
        .collect();
    out.sort_by(|a, b| {
        a.mean_rank
            .partial_cmp(&b.mean_rank)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.key.cmp(&b.key))
    });
    out
}

/// Ranking report TSV: mean rank, kind, key, per-fold ranks, predicts.
pub fn ranking_tsv(ranks: &[AveragedRank]) -> String {
    let mut out = String::from("mean_rank\tkind\tkey\tfold_ranks\tpredicts\n");
    for r in ranks {
        let folds: Vec<String> = r.fold_ranks.iter().map(|x| x.to_string()).collect();
        let _ = writeln!(
            out,
            "{:.2}\t{}\t{}\t{}\t{}",
            r.mean_rank,
            r.key.kind,
            r.key.key,
            folds.join(","),
            r.predicts
        );
    }
    out
}
