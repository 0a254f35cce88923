//! Feature extraction: character/word/POS n-grams, CFG rules, tree
//! fragments and dependency features, all as string-keyed counts, plus the
//! feature space that maps keys to dense ids.

mod deps;
mod fragments;
mod ngrams;
mod space;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, Document};

pub use self::deps::{default_function_tags, dep_features, DepMode, DEFAULT_FUNCTION_TAGS};
pub use self::fragments::{
    enumerate_subtree_derivations, enumerate_subtrees, extract_cfgr, filter_by_root, FragNode,
    Fragment, FragmentCounts, FragmentError,
};
pub use self::ngrams::{char_ngrams, pos_ngrams, word_ngrams, Counts, GRAM_JOINER};
pub use self::space::{
    build_feature_space, feature_dump, vectorize, FeatureSpace, SparseVector, ValueMode,
};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("sentence has no dependency arcs")]
    MissingArcs,
    #[error("document {0:?} has no constituency trees")]
    MissingTrees(String),
    #[error("document {id:?}: {source}")]
    InDocument {
        id: String,
        #[source]
        source: Box<FeatureError>,
    },
    #[error("invalid feature parameter: {0}")]
    BadParam(String),
    #[error("no feature reaches min_df = {0}")]
    EmptySpace(u64),
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("bad feature space file, line {line}: {message}")]
    BadSpaceFile { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    CharNgram,
    WordNgram,
    PosNgram,
    Cfgr,
    Subtree,
    DepTriple,
    DepPos,
    DepLabel,
    DepTripleFunclex,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 9] = [
        FeatureKind::CharNgram,
        FeatureKind::WordNgram,
        FeatureKind::PosNgram,
        FeatureKind::Cfgr,
        FeatureKind::Subtree,
        FeatureKind::DepTriple,
        FeatureKind::DepPos,
        FeatureKind::DepLabel,
        FeatureKind::DepTripleFunclex,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::CharNgram => "char_ngram",
            FeatureKind::WordNgram => "word_ngram",
            FeatureKind::PosNgram => "pos_ngram",
            FeatureKind::Cfgr => "cfgr",
            FeatureKind::Subtree => "subtree",
            FeatureKind::DepTriple => "dep_triple",
            FeatureKind::DepPos => "dep_pos",
            FeatureKind::DepLabel => "dep_label",
            FeatureKind::DepTripleFunclex => "dep_triple_funclex",
        }
    }

    /// Whether keys of this kind are fragment encodings.
    pub fn is_fragment(self) -> bool {
        matches!(self, FeatureKind::Cfgr | FeatureKind::Subtree)
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FeatureKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown feature kind {s:?}"))
    }
}

/// A feature: its family plus a canonical key string.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FeatureKey {
    pub kind: FeatureKind,
    pub key: String,
}

impl FeatureKey {
    pub fn new(kind: FeatureKind, key: impl Into<String>) -> Self {
        FeatureKey {
            kind,
            key: key.into(),
        }
    }
}

impl fmt::Display for FeatureKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind, self.key)
    }
}

fn one() -> usize {
    1
}

/// One feature family with its parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FeatureSpec {
    CharNgram {
        n_max: usize,
    },
    WordNgram {
        n_max: usize,
    },
    PosNgram {
        n_max: usize,
    },
    Cfgr {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        root: Option<String>,
    },
    Subtree {
        #[serde(default = "one")]
        d_min: usize,
        d_max: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        root: Option<String>,
    },
    DepTriple,
    DepPos,
    DepLabel,
    DepTripleFunclex,
}

impl FeatureSpec {
    pub fn kind(&self) -> FeatureKind {
        match self {
            FeatureSpec::CharNgram { .. } => FeatureKind::CharNgram,
            FeatureSpec::WordNgram { .. } => FeatureKind::WordNgram,
            FeatureSpec::PosNgram { .. } => FeatureKind::PosNgram,
            FeatureSpec::Cfgr { .. } => FeatureKind::Cfgr,
            FeatureSpec::Subtree { .. } => FeatureKind::Subtree,
            FeatureSpec::DepTriple => FeatureKind::DepTriple,
            FeatureSpec::DepPos => FeatureKind::DepPos,
            FeatureSpec::DepLabel => FeatureKind::DepLabel,
            FeatureSpec::DepTripleFunclex => FeatureKind::DepTripleFunclex,
        }
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        let bad = |m: String| Err(FeatureError::BadParam(m));
        match self {
            FeatureSpec::CharNgram { n_max }
            | FeatureSpec::WordNgram { n_max }
            | FeatureSpec::PosNgram { n_max } => {
                if !(1..=5).contains(n_max) {
                    return bad(format!("n_max must be in 1..=5, got {n_max}"));
                }
            }
            FeatureSpec::Subtree { d_min, d_max, root } => {
                if *d_min < 1 || d_min > d_max {
                    return bad(format!("need 1 <= d_min <= d_max, got {d_min}..{d_max}"));
                }
                if root.as_deref() == Some("") {
                    return bad("empty root label".into());
                }
            }
            FeatureSpec::Cfgr { root } if root.as_deref() == Some("") => {
                return bad("empty root label".into());
            }
            _ => {}
        }
        Ok(())
    }

    /// Short human-readable name, e.g. `subtree_d2[IP]`.
    pub fn name(&self) -> String {
        let root = |r: &Option<String>| r.as_ref().map(|r| format!("[{r}]")).unwrap_or_default();
        match self {
            FeatureSpec::CharNgram { n_max } => format!("char_ngram(1-{n_max})"),
            FeatureSpec::WordNgram { n_max } => format!("word_ngram(1-{n_max})"),
            FeatureSpec::PosNgram { n_max } => format!("pos_ngram(1-{n_max})"),
            FeatureSpec::Cfgr { root: r } => format!("cfgr{}", root(r)),
            FeatureSpec::Subtree { d_min, d_max, root: r } => {
                format!("subtree_d{d_min}-{d_max}{}", root(r))
            }
            other => other.kind().to_string(),
        }
    }
}

fn default_min_df() -> u64 {
    2
}

/// Which feature families to extract and how to turn them into vectors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub features: Vec<FeatureSpec>,
    #[serde(default = "default_min_df")]
    pub min_df: u64,
    #[serde(default)]
    pub value_mode: ValueMode,
    #[serde(default = "default_function_tags")]
    pub function_tags: BTreeSet<String>,
}

impl FeatureConfig {
    pub fn new(features: Vec<FeatureSpec>) -> Self {
        FeatureConfig {
            features,
            min_df: default_min_df(),
            value_mode: ValueMode::default(),
            function_tags: default_function_tags(),
        }
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        if self.features.is_empty() {
            return Err(FeatureError::BadParam("no feature families given".into()));
        }
        if self.min_df < 1 {
            return Err(FeatureError::BadParam("min_df must be >= 1".into()));
        }
        self.features.iter().try_for_each(FeatureSpec::validate)
    }

    pub fn name(&self) -> String {
        self.features
            .iter()
            .map(FeatureSpec::name)
            .collect::<Vec<_>>()
            .join("+")
    }
}

/// Feature counts of one document.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DocFeatures {
    pub counts: BTreeMap<FeatureKey, u64>,
    /// Number of tokens in the document, the base for relative frequencies.
    pub tokens: usize,
}

impl DocFeatures {
    pub fn contains(&self, key: &FeatureKey) -> bool {
        self.counts.get(key).is_some_and(|&n| n > 0)
    }
}

fn add_counts(out: &mut BTreeMap<FeatureKey, u64>, kind: FeatureKind, counts: Counts) {
    for (k, n) in counts {
        *out.entry(FeatureKey::new(kind, k)).or_insert(0) += n;
    }
}

fn add_fragments(out: &mut BTreeMap<FeatureKey, u64>, kind: FeatureKind, frags: FragmentCounts) {
    for (f, n) in frags {
        *out.entry(FeatureKey::new(kind, f.encoding())).or_insert(0) += n;
    }
}

/// Extracts every configured feature family from one document.
pub fn extract_document(doc: &Document, config: &FeatureConfig) -> Result<DocFeatures, FeatureError> {
    let mut counts = BTreeMap::new();
    let in_doc = |e: FeatureError| FeatureError::InDocument {
        id: doc.id.clone(),
        source: Box::new(e),
    };
    for spec in &config.features {
        let kind = spec.kind();
        match spec {
            FeatureSpec::CharNgram { n_max } => add_counts(&mut counts, kind, char_ngrams(doc, *n_max)),
            FeatureSpec::WordNgram { n_max } => add_counts(&mut counts, kind, word_ngrams(doc, *n_max)),
            FeatureSpec::PosNgram { n_max } => add_counts(&mut counts, kind, pos_ngrams(doc, *n_max)),
            FeatureSpec::Cfgr { root } | FeatureSpec::Subtree { root, .. } => {
                for s in &doc.sentences {
                    let tree = s
                        .tree
                        .as_ref()
                        .ok_or_else(|| FeatureError::MissingTrees(doc.id.clone()))?;
                    let frags = match spec {
                        FeatureSpec::Subtree { d_min, d_max, .. } => {
                            enumerate_subtrees(tree, *d_min, *d_max)
                        }
                        _ => extract_cfgr(tree),
                    };
                    let frags = match root {
                        Some(label) => filter_by_root(&frags, label),
                        None => frags,
                    };
                    add_fragments(&mut counts, kind, frags);
                }
            }
            FeatureSpec::DepTriple
            | FeatureSpec::DepPos
            | FeatureSpec::DepLabel
            | FeatureSpec::DepTripleFunclex => {
                let mode = match spec {
                    FeatureSpec::DepTriple => DepMode::Triple,
                    FeatureSpec::DepPos => DepMode::Pos,
                    FeatureSpec::DepLabel => DepMode::Label,
                    _ => DepMode::Funclex,
                };
                for s in &doc.sentences {
                    let c = dep_features(s, mode, &config.function_tags).map_err(in_doc)?;
                    add_counts(&mut counts, kind, c);
                }
            }
        }
    }
    Ok(DocFeatures {
        counts,
        tokens: doc.token_count(),
    })
}

/// Extracts features for every document, in corpus order.
pub fn extract_corpus(corpus: &Corpus, config: &FeatureConfig) -> Result<Vec<DocFeatures>, FeatureError> {
    config.validate()?;
    corpus
        .documents
        .par_iter()
        .map(|d| extract_document(d, config))
        .collect()
}
