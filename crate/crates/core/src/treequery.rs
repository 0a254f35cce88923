//! Fragment-containment search over parsed corpora.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::corpus::{ConstituentTree, Corpus, TextClass};
use crate::features::{FragNode, Fragment, FragmentError};

#[derive(Debug, Error)]
pub enum QueryError {
    #[error("bad fragment: {0}")]
    BadFragment(#[from] FragmentError),
}

pub fn parse_query(text: &str) -> Result<Fragment, QueryError> {
    Ok(Fragment::parse(text)?)
}

fn matches(tree: &ConstituentTree, frag: &FragNode) -> bool {
    if tree.is_leaf() || tree.label() != frag.label {
        return false;
    }
    if frag.children.is_empty() {
        return true;
    }
    if tree.is_preterminal() || tree.children().len() != frag.children.len() {
        return false;
    }
    tree.children()
        .iter()
        .zip(&frag.children)
        .all(|(t, f)| matches(t, f))
}

/// Paths (child indices from the root) of every node where `fragment` is
/// anchored, in preorder. An expanded fragment node must match the full
/// ordered child sequence of the tree node; frontier nodes match any subtree
/// with the same label.
pub fn contains_fragment(tree: &ConstituentTree, fragment: &Fragment) -> Vec<Vec<usize>> {
    let frag = fragment.node();
    let mut out = Vec::new();
    let mut path = Vec::new();
    fn walk(node: &ConstituentTree, frag: &FragNode, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if node.is_leaf() || node.is_preterminal() {
            return;
        }
        if matches(node, frag) {
            out.push(path.clone());
        }
        for (i, child) in node.children().iter().enumerate() {
            path.push(i);
            walk(child, frag, path, out);
            path.pop();
        }
    }
    walk(tree, &frag, &mut path, &mut out);
    out
}

/// Renders an anchor path as `/0/1`; the root is `/`.
pub fn render_path(path: &[usize]) -> String {
    if path.is_empty() {
        return "/".to_string();
    }
    path.iter().map(|i| format!("/{i}")).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MatchHit {
    pub doc_id: String,
    pub class: TextClass,
    pub sentence: usize,
    pub path: Vec<usize>,
    pub text: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ClassTotals {
    /// Anchors over all searched sentences.
    pub hits: usize,
    /// Documents with at least one anchor.
    pub matching_documents: usize,
    /// Documents searched.
    pub documents: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SearchResult {
    pub fragment: String,
    pub hits: Vec<MatchHit>,
    pub totals: BTreeMap<TextClass, ClassTotals>,
}

impl SearchResult {
    pub fn total_hits(&self) -> usize {
        self.totals.values().map(|t| t.hits).sum()
    }
}

/// Searches every tree of the corpus (optionally one class only). Hits come
/// in (document id, sentence index, anchor preorder) order and are cut at
/// `limit`; totals always cover the full search.
pub fn search_corpus(
    corpus: &Corpus,
    fragment: &Fragment,
    class: Option<TextClass>,
    limit: usize,
) -> SearchResult {
    let mut docs: Vec<_> = corpus
        .documents
        .iter()
        .filter(|d| class.is_none_or(|c| d.class == c))
        .collect();
    docs.sort_by(|a, b| a.id.cmp(&b.id));
    let per_doc: Vec<Vec<MatchHit>> = docs
        .par_iter()
        .map(|doc| {
            let mut hits = Vec::new();
            for (s, sentence) in doc.sentences.iter().enumerate() {
                let Some(tree) = &sentence.tree else { continue };
                for path in contains_fragment(tree, fragment) {
                    hits.push(MatchHit {
                        doc_id: doc.id.clone(),
                        class: doc.class,
                        sentence: s,
                        path,
                        text: sentence.text(),
                    });
                }
            }
            hits
        })
        .collect();

    let mut totals: BTreeMap<TextClass, ClassTotals> = TextClass::ALL
        .into_iter()
        .filter(|c| class.is_none_or(|k| k == *c))
        .map(|c| (c, ClassTotals::default()))
        .collect();
    for (doc, hits) in docs.iter().zip(&per_doc) {
        let t = totals.entry(doc.class).or_default();
        t.documents += 1;
        t.hits += hits.len();
        t.matching_documents += usize::from(!hits.is_empty());
    }
    SearchResult {
        fragment: fragment.encoding().to_string(),
        hits: per_doc.into_iter().flatten().take(limit).collect(),
        totals,
    }
}

/// TSV of hits followed by one `#total` line per class.
pub fn search_tsv(result: &SearchResult) -> String {
    let mut out = String::from("doc_id\tsentence\tpath\ttext\n");
    for h in &result.hits {
        let _ = writeln!(out, "{}\t{}\t{}\t{}", h.doc_id, h.sentence, render_path(&h.path), h.text);
    }
    for (class, t) in &result.totals {
        let _ = writeln!(
            out,
            "#total\t{class}\thits={}\tmatching_documents={}\tdocuments={}",
            t.hits, t.matching_documents, t.documents
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_bracketed_tree, Document, Genre, Sentence};
    use crate::features::{enumerate_subtree_derivations, extract_cfgr};

    const FIG1: &str = "(ROOT (IP (NP (PN 我们)) (VP (ADVP (AD 一起)) (VP (VV 照) (NP (QP (CLP (M 幅))) (NP (NN 像))))) (PU 。)))";

    fn fig1() -> ConstituentTree {
        parse_bracketed_tree(FIG1).unwrap()
    }

    #[test]
    fn figure_two_fragments_anchor_at_ip() {
        let t = fig1();
        for f in [
            "(IP (NP (PN)) (VP) (PU))",
            "(IP (NP) (VP (ADVP) (VP)) (PU))",
            "(IP (NP (PN)) (VP (ADVP) (VP)) (PU))",
        ] {
            let anchors = contains_fragment(&t, &Fragment::parse(f).unwrap());
            assert_eq!(anchors, vec![vec![0]], "{f}");
        }
    }

    #[test]
    fn order_sensitive() {
        let f = Fragment::parse("(IP (VP) (NP) (PU))").unwrap();
        assert!(contains_fragment(&fig1(), &f).is_empty());
        let partial = Fragment::parse("(IP (NP) (VP))").unwrap();
        assert!(contains_fragment(&fig1(), &partial).is_empty());
    }

    #[test]
    fn bare_atom_frontier() {
        let t = parse_bracketed_tree("(IP (PP (P 在) (NP (PN 这))) (VP (VV 走)))").unwrap();
        let f = parse_query("(PP P (NP PN))").unwrap();
        assert_eq!(contains_fragment(&t, &f), vec![vec![0]]);
    }

    #[test]
    fn cfgr_counts_match_anchor_counts() {
        let t = fig1();
        for (f, n) in extract_cfgr(&t) {
            assert_eq!(contains_fragment(&t, &f).len() as u64, n, "{}", f.encoding());
        }
    }

    #[test]
    fn derivation_anchors_are_found() {
        let t = fig1();
        for (path, f) in enumerate_subtree_derivations(&t, 1, 3) {
            assert!(contains_fragment(&t, &f).contains(&path));
        }
    }

    #[test]
    fn bad_fragment() {
        assert!(matches!(parse_query("(NP (PN)"), Err(QueryError::BadFragment(_))));
        assert!(parse_query("NP").is_err());
    }

    fn corpus() -> Corpus {
        let trees = [
            ("a", TextClass::Translated, "(IP (NP (PN 他)) (VP (VV 来)))"),
            ("b", TextClass::Original, "(IP (NP (NN 人)) (VP (VV 来)))"),
            ("c", TextClass::Translated, "(IP (NP (PN 他)) (VP (VV 说) (NP (PN 她))))"),
        ];
        Corpus::new(
            trees
                .iter()
                .map(|&(id, class, t)| Document {
                    id: id.into(),
                    genre: Genre::News,
                    class,
                    sentences: vec![Sentence::from_tree(parse_bracketed_tree(t).unwrap())],
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn search_totals_and_limit() {
        let c = corpus();
        let f = parse_query("(NP (PN))").unwrap();
        let r = search_corpus(&c, &f, None, 10);
        assert_eq!(r.hits.len(), 3);
        let t = r.totals[&TextClass::Translated];
        assert_eq!((t.hits, t.matching_documents, t.documents), (3, 2, 2));
        assert_eq!(r.totals[&TextClass::Original].hits, 0);
        assert_eq!(render_path(&r.hits[2].path), "/1/1");

        let none = search_corpus(&c, &f, None, 0);
        assert!(none.hits.is_empty());
        assert_eq!(none.totals, r.totals);

        let orig = search_corpus(&c, &f, Some(TextClass::Original), 10);
        assert!(orig.hits.is_empty());
        assert_eq!(orig.totals.len(), 1);

        let tsv = search_tsv(&r);
        assert!(tsv.contains("#total\ttranslated\thits=3"));
    }
}
