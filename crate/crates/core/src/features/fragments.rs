//! Unlexicalized tree fragments.
//!
//! A fragment is a connected piece of a constituency tree in which every
//! included node contributes either all of its children or none. Lexical
//! leaves are dropped, so POS tags are the deepest possible leaves. Fragments
//! are identified by a canonical bracketed encoding such as
//! `(IP (NP (PN)) (VP) (PU))`.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::corpus::{check_balance, tokenize, ConstituentTree, SexpToken, TreeParseError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FragmentError {
    #[error(transparent)]
    Syntax(#[from] TreeParseError),
    #[error("fragment root must have children")]
    Unexpanded,
}

/// A node of an unlexicalized fragment; nodes without children are frontier
/// nodes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FragNode {
    pub label: String,
    pub children: Vec<FragNode>,
}

impl FragNode {
    pub fn depth(&self) -> usize {
        self.children
            .iter()
            .map(|c| c.depth() + 1)
            .max()
            .unwrap_or(0)
    }

    fn write_encoding(&self, out: &mut String) {
        out.push('(');
        out.push_str(&self.label);
        for c in &self.children {
            out.push(' ');
            c.write_encoding(out);
        }
        out.push(')');
    }

    pub fn encoding(&self) -> String {
        let mut s = String::new();
        self.write_encoding(&mut s);
        s
    }

    /// Parses a fragment. Bare labels are accepted as frontier nodes, so
    /// `(PP P (NP PN))` and `(PP (P) (NP (PN)))` are the same fragment.
    pub fn parse(text: &str) -> Result<FragNode, TreeParseError> {
        let tokens = tokenize(text);
        check_balance(&tokens, text.len())
            .map_err(|offset| TreeParseError::UnbalancedBrackets { offset })?;
        let mut pos = 0;
        let node = match tokens.first() {
            Some(SexpToken::Open(_)) => parse_frag(&tokens, &mut pos)?,
            Some(&SexpToken::Atom(a, _)) => {
                pos = 1;
                FragNode {
                    label: a.to_string(),
                    children: Vec::new(),
                }
            }
            Some(&SexpToken::Close(o)) => return Err(TreeParseError::UnbalancedBrackets { offset: o }),
            None => return Err(TreeParseError::EmptyNode { offset: 0 }),
        };
        if let Some(tok) = tokens.get(pos) {
            let offset = match *tok {
                SexpToken::Open(o) | SexpToken::Close(o) | SexpToken::Atom(_, o) => o,
            };
            return Err(TreeParseError::TrailingContent { offset });
        }
        Ok(node)
    }
}

fn parse_frag(tokens: &[SexpToken<'_>], pos: &mut usize) -> Result<FragNode, TreeParseError> {
    let open = match tokens[*pos] {
        SexpToken::Open(o) => o,
        _ => unreachable!("caller checks for an opening bracket"),
    };
    *pos += 1;
    let label = match tokens.get(*pos) {
        Some(SexpToken::Atom(a, _)) => {
            *pos += 1;
            a.to_string()
        }
        _ => return Err(TreeParseError::EmptyNode { offset: open }),
    };
    let mut children = Vec::new();
    loop {
        match tokens.get(*pos) {
            Some(SexpToken::Close(_)) => {
                *pos += 1;
                break;
            }
            Some(SexpToken::Open(_)) => children.push(parse_frag(tokens, pos)?),
            Some(SexpToken::Atom(a, _)) => {
                children.push(FragNode {
                    label: a.to_string(),
                    children: Vec::new(),
                });
                *pos += 1;
            }
            None => return Err(TreeParseError::UnbalancedBrackets { offset: open }),
        }
    }
    Ok(FragNode { label, children })
}

impl fmt::Display for FragNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.encoding())
    }
}

/// A fragment with its canonical encoding and depth (edges from the root to
/// its deepest node).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fragment {
    encoding: String,
    depth: usize,
}

impl Fragment {
    pub fn parse(text: &str) -> Result<Fragment, FragmentError> {
        let node = FragNode::parse(text)?;
        Fragment::from_node(&node)
    }

    pub fn from_node(node: &FragNode) -> Result<Fragment, FragmentError> {
        if node.children.is_empty() {
            return Err(FragmentError::Unexpanded);
        }
        Ok(Fragment {
            encoding: node.encoding(),
            depth: node.depth(),
        })
    }

    pub fn encoding(&self) -> &str {
        &self.encoding
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn root_label(&self) -> &str {
        let rest = &self.encoding[1..];
        let end = rest.find([' ', ')']).unwrap_or(rest.len());
        &rest[..end]
    }

    pub fn node(&self) -> FragNode {
        FragNode::parse(&self.encoding).expect("canonical encoding reparses")
    }

    /// Depth-1 fragments rendered as rewrite rules, e.g. `NP → DNP NP`.
    pub fn as_rule(&self) -> Option<String> {
        if self.depth != 1 {
            return None;
        }
        let node = self.node();
        let rhs: Vec<&str> = node.children.iter().map(|c| c.label.as_str()).collect();
        Some(format!("{} → {}", node.label, rhs.join(" ")))
    }
}

impl fmt::Display for Fragment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.encoding)
    }
}

/// Multiset of fragments.
pub type FragmentCounts = BTreeMap<Fragment, u64>;

fn is_phrasal(node: &ConstituentTree) -> bool {
    !node.is_leaf() && !node.is_preterminal()
}

/// One depth-1 fragment per phrasal node: the node's label and the ordered
/// labels of its children. Preterminal-to-word rules are not included.
pub fn extract_cfgr(tree: &ConstituentTree) -> FragmentCounts {
    let mut counts = FragmentCounts::new();
    fn walk(node: &ConstituentTree, counts: &mut FragmentCounts) {
        if !is_phrasal(node) {
            return;
        }
        let mut enc = format!("({}", node.label());
        for child in node.children() {
            enc.push_str(" (");
            enc.push_str(child.label());
            enc.push(')');
            walk(child, counts);
        }
        enc.push(')');
        *counts
            .entry(Fragment {
                encoding: enc,
                depth: 1,
            })
            .or_insert(0) += 1;
    }
    walk(tree, &mut counts);
    counts
}

/// All fragments rooted at `node` with depth at most `budget`, including the
/// bare frontier node itself (depth 0).
fn expansions(node: &ConstituentTree, budget: usize) -> Vec<(String, usize)> {
    let mut out = vec![(format!("({})", node.label()), 0)];
    if budget == 0 || !is_phrasal(node) {
        return out;
    }
    let mut partial: Vec<(String, usize)> = vec![(format!("({}", node.label()), 0)];
    for child in node.children() {
        let child_exp = expansions(child, budget - 1);
        let mut next = Vec::with_capacity(partial.len() * child_exp.len());
        for (prefix, d) in &partial {
            for (enc, cd) in &child_exp {
                let mut s = String::with_capacity(prefix.len() + enc.len() + 1);
                s.push_str(prefix);
                s.push(' ');
                s.push_str(enc);
                next.push((s, (*d).max(cd + 1)));
            }
        }
        partial = next;
    }
    out.extend(partial.into_iter().map(|(mut s, d)| {
        s.push(')');
        (s, d)
    }));
    out
}

/// Every (anchor path, fragment) derivation with depth in `[d_min, d_max]`,
/// anchors in preorder.
pub fn enumerate_subtree_derivations(
    tree: &ConstituentTree,
    d_min: usize,
    d_max: usize,
) -> Vec<(Vec<usize>, Fragment)> {
    if d_max > 3 {
        log::warn!("subtree depth {d_max} > 3: feature counts grow exponentially with depth");
    }
    let lo = d_min.max(1);
    let mut out = Vec::new();
    let mut path = Vec::new();
    fn walk(
        node: &ConstituentTree,
        path: &mut Vec<usize>,
        lo: usize,
        hi: usize,
        out: &mut Vec<(Vec<usize>, Fragment)>,
    ) {
        if !is_phrasal(node) {
            return;
        }
        for (encoding, depth) in expansions(node, hi) {
            if depth >= lo && depth <= hi {
                out.push((path.clone(), Fragment { encoding, depth }));
            }
        }
        for (i, child) in node.children().iter().enumerate() {
            path.push(i);
            walk(child, path, lo, hi, out);
            path.pop();
        }
    }
    walk(tree, &mut path, lo, d_max, &mut out);
    out
}

/// Multiset of fragments with depth in `[d_min, d_max]`, counting one per
/// (anchor, cut) derivation.
pub fn enumerate_subtrees(tree: &ConstituentTree, d_min: usize, d_max: usize) -> FragmentCounts {
    let mut counts = FragmentCounts::new();
    for (_, frag) in enumerate_subtree_derivations(tree, d_min, d_max) {
        *counts.entry(frag).or_insert(0) += 1;
    }
    counts
}

/// Keeps the fragments whose root carries `label`.
pub fn filter_by_root(fragments: &FragmentCounts, label: &str) -> FragmentCounts {
    fragments
        .iter()
        .filter(|(f, _)| f.root_label() == label)
        .map(|(f, &n)| (f.clone(), n))
        .collect()
}
