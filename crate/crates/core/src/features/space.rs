use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{extract_corpus, DocFeatures, FeatureConfig, FeatureError, FeatureKey, FeatureKind};
use crate::corpus::Corpus;

const SPACE_HEADER: &str = "# transtree feature-space v1";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueMode {
    /// Raw feature counts.
    #[default]
    RawCount,
    /// Count per 1000 document tokens.
    RelFreq,
}

impl ValueMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ValueMode::RawCount => "raw_count",
            ValueMode::RelFreq => "rel_freq",
        }
    }
}

/// Bidirectional map between feature keys and contiguous ids, ordered by key,
/// with the document frequency of each feature.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FeatureSpace {
    keys: Vec<FeatureKey>,
    df: Vec<u64>,
    index: HashMap<FeatureKey, usize>,
}

impl FeatureSpace {
    fn from_sorted(entries: Vec<(FeatureKey, u64)>) -> Self {
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, (k, _))| (k.clone(), i))
            .collect();
        let (keys, df) = entries.into_iter().unzip();
        FeatureSpace { keys, df, index }
    }

    /// Builds a space from per-document features, keeping features that
    /// occur in at least `min_df` documents.
    pub fn build<'a, I>(docs: I, min_df: u64) -> Result<Self, FeatureError>
    where
        I: IntoIterator<Item = &'a DocFeatures>,
    {
        let mut df: BTreeMap<&FeatureKey, u64> = BTreeMap::new();
        for doc in docs {
            for (k, &n) in &doc.counts {
                if n > 0 {
                    *df.entry(k).or_insert(0) += 1;
                }
            }
        }
        let entries: Vec<_> = df
            .into_iter()
            .filter(|&(_, n)| n >= min_df)
            .map(|(k, n)| (k.clone(), n))
            .collect();
        if entries.is_empty() {
            return Err(FeatureError::EmptySpace(min_df));
        }
        Ok(Self::from_sorted(entries))
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn id(&self, key: &FeatureKey) -> Option<usize> {
        self.index.get(key).copied()
    }

    pub fn key(&self, id: usize) -> &FeatureKey {
        &self.keys[id]
    }

    pub fn keys(&self) -> &[FeatureKey] {
        &self.keys
    }

    pub fn df(&self, id: usize) -> u64 {
        self.df[id]
    }

    /// Sub-space over the given ids, renumbered in key order.
    pub fn restrict(&self, ids: &[usize]) -> FeatureSpace {
        let mut ids = ids.to_vec();
        ids.sort_unstable();
        ids.dedup();
        Self::from_sorted(
            ids.into_iter()
                .map(|i| (self.keys[i].clone(), self.df[i]))
                .collect(),
        )
    }

    pub fn serialize(&self) -> String {
        let mut out = String::from(SPACE_HEADER);
        out.push('\n');
        for (i, (k, df)) in self.keys.iter().zip(&self.df).enumerate() {
            let _ = writeln!(out, "{}\t{}\t{}\t{}", i, k.kind, k.key, df);
        }
        out
    }

    pub fn parse(text: &str) -> Result<FeatureSpace, FeatureError> {
        let bad = |line: usize, message: &str| FeatureError::BadSpaceFile {
            line,
            message: message.to_string(),
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, SPACE_HEADER)) => {}
            _ => return Err(bad(1, "missing or unsupported header")),
        }
        let mut entries: Vec<(FeatureKey, u64)> = Vec::new();
        for (i, line) in lines {
            let line_no = i + 1;
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 4 {
                return Err(bad(line_no, "expected 4 columns"));
            }
            if cols[0].parse::<usize>().ok() != Some(entries.len()) {
                return Err(bad(line_no, "ids must be contiguous from 0"));
            }
            let kind: FeatureKind = cols[1].parse().map_err(|e: String| bad(line_no, &e))?;
            let df = cols[3].parse().map_err(|_| bad(line_no, "bad document frequency"))?;
            let key = FeatureKey::new(kind, cols[2]);
            if entries.last().is_some_and(|(prev, _)| *prev >= key) {
                return Err(bad(line_no, "keys must be strictly increasing"));
            }
            entries.push((key, df));
        }
        Ok(Self::from_sorted(entries))
    }

    /// Short digest of the serialized space; models record it so they are
    /// only applied to vectors from the same space.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.serialize().as_bytes());
        hex::encode(&digest[..8])
    }
}

/// Sorted `(feature id, value)` pairs with strictly positive values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    /// Builds a vector from arbitrary pairs: sorts by id, sums duplicates and
    /// drops non-positive values.
    pub fn from_pairs(mut pairs: Vec<(usize, f64)>) -> Self {
        pairs.sort_by_key(|&(i, _)| i);
        let mut entries: Vec<(usize, f64)> = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            match entries.last_mut() {
                Some((j, acc)) if *j == i => *acc += v,
                _ => entries.push((i, v)),
            }
        }
        entries.retain(|&(_, v)| v > 0.0);
        SparseVector { entries }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: usize) -> Option<f64> {
        self.entries
            .binary_search_by_key(&id, |&(i, _)| i)
            .ok()
            .map(|p| self.entries[p].1)
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| dense[i] * v).sum()
    }

    pub fn squared_norm(&self) -> f64 {
        self.entries.iter().map(|&(_, v)| v * v).sum()
    }
}

pub fn vectorize(doc: &DocFeatures, space: &FeatureSpace, mode: ValueMode) -> SparseVector {
    let scale = match mode {
        ValueMode::RawCount => 1.0,
        ValueMode::RelFreq if doc.tokens > 0 => 1000.0 / doc.tokens as f64,
        ValueMode::RelFreq => 0.0,
    };
    let entries = doc
        .counts
        .iter()
        .filter_map(|(k, &n)| space.id(k).map(|id| (id, n as f64 * scale)))
        .filter(|&(_, v)| v > 0.0)
        .collect::<Vec<_>>();
    // counts iterate in key order and ids follow key order
    debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
    SparseVector { entries }
}

/// Extracts features for the whole corpus and builds a space from them.
pub fn build_feature_space(corpus: &Corpus, config: &FeatureConfig) -> Result<FeatureSpace, FeatureError> {
    if corpus.is_empty() {
        return Err(FeatureError::EmptyCorpus);
    }
    let docs = extract_corpus(corpus, config)?;
    FeatureSpace::build(&docs, config.min_df)
}

/// TSV of kind, key, document frequency and total count for the features of
/// `space`.
pub fn feature_dump(space: &FeatureSpace, docs: &[DocFeatures]) -> String {
    let mut totals = vec![0u64; space.len()];
    for d in docs {
        for (k, &n) in &d.counts {
            if let Some(id) = space.id(k) {
                totals[id] += n;
            }
        }
    }
    let mut out = String::from("kind\tkey\tdf\ttotal\n");
    for (id, key) in space.keys().iter().enumerate() {
        let _ = writeln!(out, "{}\t{}\t{}\t{}", key.kind, key.key, space.df(id), totals[id]);
    }
    out
}
