//! Parsed corpora: documents with genre and class labels, each a list of
//! sentences carrying a constituency tree, dependency arcs, or both.

mod deps;
mod manifest;
mod normalize;
mod tree;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use self::deps::{read_dependency_table, render_dependency_table, DepSentence, DepTableError};
pub use self::manifest::{load_corpus, write_corpus, CorpusError, ManifestEntry};
pub use self::normalize::{
    normalize_text, normalize_text_counted, remove_marked_lines, NormalizeStats,
    WIDTH_TABLE_VERSION,
};
pub use self::tree::{
    parse_bracketed_tree, parse_tree_file, render_tree_file, ConstituentTree, TreeParseError,
};
pub(crate) use self::tree::{check_balance, tokenize, SexpToken};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    /// 1-based position in the sentence.
    pub index: usize,
    pub surface: String,
    pub pos: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DependencyArc {
    /// Head token index, 0 for the root.
    pub head: usize,
    pub dependent: usize,
    pub relation: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub tokens: Vec<Token>,
    pub tree: Option<ConstituentTree>,
    pub arcs: Option<Vec<DependencyArc>>,
}

impl Sentence {
    /// Builds a sentence from a tree alone, reading tokens off its preterminals.
    pub fn from_tree(tree: ConstituentTree) -> Self {
        let tokens = tree
            .pos_tags()
            .into_iter()
            .zip(tree.yield_words())
            .enumerate()
            .map(|(i, (pos, surface))| Token {
                index: i + 1,
                surface: surface.to_string(),
                pos: pos.to_string(),
            })
            .collect();
        Sentence {
            tokens,
            tree: Some(tree),
            arcs: None,
        }
    }

    pub fn from_deps(dep: DepSentence) -> Self {
        Sentence {
            tokens: dep.tokens,
            tree: None,
            arcs: Some(dep.arcs),
        }
    }

    /// Whether the tree's yield and preterminals agree with the tokens.
    pub fn yield_consistent(&self) -> bool {
        match &self.tree {
            None => true,
            Some(tree) => {
                let words = tree.yield_words();
                let tags = tree.pos_tags();
                words.len() == self.tokens.len()
                    && self
                        .tokens
                        .iter()
                        .zip(words.iter().zip(&tags))
                        .all(|(t, (w, p))| t.surface == *w && t.pos == *p)
            }
        }
    }

    pub fn text(&self) -> String {
        self.tokens
            .iter()
            .map(|t| t.surface.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Genre {
    News,
    GeneralProse,
    Science,
    Fiction,
}

impl Genre {
    pub const ALL: [Genre; 4] = [
        Genre::News,
        Genre::GeneralProse,
        Genre::Science,
        Genre::Fiction,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Genre::News => "news",
            Genre::GeneralProse => "general_prose",
            Genre::Science => "science",
            Genre::Fiction => "fiction",
        }
    }
}

impl fmt::Display for Genre {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Genre {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Genre::ALL
            .into_iter()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| s.to_string())
    }
}

/// Whether a text was originally written in the language or translated into it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TextClass {
    Original,
    Translated,
}

impl TextClass {
    pub const ALL: [TextClass; 2] = [TextClass::Original, TextClass::Translated];

    pub fn as_str(self) -> &'static str {
        match self {
            TextClass::Original => "original",
            TextClass::Translated => "translated",
        }
    }

    pub fn other(self) -> TextClass {
        match self {
            TextClass::Original => TextClass::Translated,
            TextClass::Translated => TextClass::Original,
        }
    }
}

impl fmt::Display for TextClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TextClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TextClass::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub genre: Genre,
    pub class: TextClass,
    pub sentences: Vec<Sentence>,
}

impl Document {
    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(|s| s.tokens.len()).sum()
    }

    pub fn has_trees(&self) -> bool {
        self.sentences.iter().all(|s| s.tree.is_some())
    }

    pub fn has_deps(&self) -> bool {
        self.sentences.iter().all(|s| s.arcs.is_some())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub documents: Vec<Document>,
}

impl Corpus {
    /// Wraps documents, rejecting duplicate ids.
    pub fn new(documents: Vec<Document>) -> Result<Self, CorpusError> {
        let mut seen = HashSet::new();
        for doc in &documents {
            if !seen.insert(doc.id.as_str()) {
                return Err(CorpusError::DuplicateId(doc.id.clone()));
            }
        }
        Ok(Corpus { documents })
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn labels(&self) -> Vec<TextClass> {
        self.documents.iter().map(|d| d.class).collect()
    }

    pub fn count_class(&self, class: TextClass) -> usize {
        self.documents.iter().filter(|d| d.class == class).count()
    }

    /// Ids of documents that lack either trees or dependencies.
    pub fn partial_documents(&self) -> Vec<&str> {
        self.documents
            .iter()
            .filter(|d| !(d.has_trees() && d.has_deps()))
            .map(|d| d.id.as_str())
            .collect()
    }

    /// A copy without the given document.
    pub fn without(&self, id: &str) -> Corpus {
        Corpus {
            documents: self
                .documents
                .iter()
                .filter(|d| d.id != id)
                .cloned()
                .collect(),
        }
    }
}
