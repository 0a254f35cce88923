//! Bracketed constituency trees.
//!
//! Trees are read from and written to the usual treebank notation, e.g.
//! `(ROOT (IP (NP (PN 我们)) (VP (VV 照)) (PU 。)))`. Preterminals carry exactly
//! one lexical leaf; every other node has at least one phrasal child.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeParseError {
    #[error("unbalanced brackets at byte {offset}")]
    UnbalancedBrackets { offset: usize },
    #[error("empty node at byte {offset}")]
    EmptyNode { offset: usize },
    #[error("trailing content at byte {offset}")]
    TrailingContent { offset: usize },
    #[error("lexical leaf must be the only child of its preterminal (byte {offset})")]
    MisplacedLeaf { offset: usize },
}

impl TreeParseError {
    pub fn offset(&self) -> usize {
        match *self {
            TreeParseError::UnbalancedBrackets { offset }
            | TreeParseError::EmptyNode { offset }
            | TreeParseError::TrailingContent { offset }
            | TreeParseError::MisplacedLeaf { offset } => offset,
        }
    }
}

/// A node of a constituency tree, or a lexical leaf.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ConstituentTree {
    Node {
        label: String,
        children: Vec<ConstituentTree>,
    },
    Leaf(String),
}

impl ConstituentTree {
    pub fn node(label: impl Into<String>, children: Vec<ConstituentTree>) -> Self {
        ConstituentTree::Node {
            label: label.into(),
            children,
        }
    }

    pub fn preterminal(tag: impl Into<String>, word: impl Into<String>) -> Self {
        ConstituentTree::Node {
            label: tag.into(),
            children: vec![ConstituentTree::Leaf(word.into())],
        }
    }

    /// The category label; for a lexical leaf this is its surface form.
    pub fn label(&self) -> &str {
        match self {
            ConstituentTree::Node { label, .. } => label,
            ConstituentTree::Leaf(surface) => surface,
        }
    }

    pub fn children(&self) -> &[ConstituentTree] {
        match self {
            ConstituentTree::Node { children, .. } => children,
            ConstituentTree::Leaf(_) => &[],
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, ConstituentTree::Leaf(_))
    }

    pub fn is_preterminal(&self) -> bool {
        matches!(self.children(), [ConstituentTree::Leaf(_)])
    }

    /// Phrasal children, i.e. children with lexical leaves dropped. Empty for
    /// preterminals.
    pub fn phrasal_children(&self) -> impl Iterator<Item = &ConstituentTree> {
        self.children().iter().filter(|c| !c.is_leaf())
    }

    /// Left-to-right lexical yield.
    pub fn yield_words(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_preterminals(&mut |_, w| out.push(w));
        out
    }

    /// Preterminal labels in order.
    pub fn pos_tags(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_preterminals(&mut |t, _| out.push(t));
        out
    }

    fn collect_preterminals<'a>(&'a self, f: &mut impl FnMut(&'a str, &'a str)) {
        if let ConstituentTree::Node { label, children } = self {
            if let [ConstituentTree::Leaf(word)] = children.as_slice() {
                f(label, word);
            } else {
                for child in children {
                    child.collect_preterminals(f);
                }
            }
        }
    }

    /// Maximum number of edges from this node down to any preterminal,
    /// ignoring lexical leaves.
    pub fn depth(&self) -> usize {
        self.phrasal_children()
            .map(|c| c.depth() + 1)
            .max()
            .unwrap_or(0)
    }

    /// Number of non-leaf nodes.
    pub fn node_count(&self) -> usize {
        match self {
            ConstituentTree::Leaf(_) => 0,
            ConstituentTree::Node { children, .. } => {
                1 + children.iter().map(|c| c.node_count()).sum::<usize>()
            }
        }
    }

    /// Follows a path of child indices from this node.
    pub fn at_path(&self, path: &[usize]) -> Option<&ConstituentTree> {
        path.iter()
            .try_fold(self, |node, &idx| node.children().get(idx))
    }

    pub fn render(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for ConstituentTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstituentTree::Leaf(w) => f.write_str(w),
            ConstituentTree::Node { label, children } => {
                write!(f, "({}", label)?;
                for child in children {
                    write!(f, " {}", child)?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum SexpToken<'a> {
    Open(usize),
    Close(usize),
    Atom(&'a str, usize),
}

pub(crate) fn tokenize(text: &str) -> Vec<SexpToken<'_>> {
    let mut tokens = Vec::new();
    let mut atom_start: Option<usize> = None;
    for (i, ch) in text.char_indices() {
        if ch == '(' || ch == ')' || ch.is_whitespace() {
            if let Some(start) = atom_start.take() {
                tokens.push(SexpToken::Atom(&text[start..i], start));
            }
            match ch {
                '(' => tokens.push(SexpToken::Open(i)),
                ')' => tokens.push(SexpToken::Close(i)),
                _ => {}
            }
        } else if atom_start.is_none() {
            atom_start = Some(i);
        }
    }
    if let Some(start) = atom_start {
        tokens.push(SexpToken::Atom(&text[start..], start));
    }
    tokens
}

/// Checks bracket balance over `tokens`, returning the offset of the first
/// offending bracket (or the end of input for unclosed ones).
pub(crate) fn check_balance(tokens: &[SexpToken<'_>], end: usize) -> Result<(), usize> {
    let mut open = Vec::new();
    for tok in tokens {
        match *tok {
            SexpToken::Open(o) => open.push(o),
            SexpToken::Close(o) => {
                if open.pop().is_none() {
                    return Err(o);
                }
            }
            SexpToken::Atom(..) => {}
        }
    }
    match open.first() {
        Some(_) => Err(end),
        None => Ok(()),
    }
}

/// Parses a single bracketed tree.
pub fn parse_bracketed_tree(text: &str) -> Result<ConstituentTree, TreeParseError> {
    let tokens = tokenize(text);
    check_balance(&tokens, text.len())
        .map_err(|offset| TreeParseError::UnbalancedBrackets { offset })?;
    let mut pos = 0;
    let tree = parse_node(&tokens, &mut pos, text.len())?;
    if let Some(tok) = tokens.get(pos) {
        return Err(TreeParseError::TrailingContent {
            offset: token_offset(tok),
        });
    }
    Ok(tree)
}

/// Parses a sequence of bracketed trees, e.g. the contents of a tree file.
/// Trees may span several lines; blank lines between trees are optional.
pub fn parse_tree_file(text: &str) -> Result<Vec<ConstituentTree>, TreeParseError> {
    let tokens = tokenize(text);
    check_balance(&tokens, text.len())
        .map_err(|offset| TreeParseError::UnbalancedBrackets { offset })?;
    let mut pos = 0;
    let mut trees = Vec::new();
    while pos < tokens.len() {
        if let SexpToken::Atom(_, o) = tokens[pos] {
            return Err(TreeParseError::TrailingContent { offset: o });
        }
        trees.push(parse_node(&tokens, &mut pos, text.len())?);
    }
    Ok(trees)
}

/// Renders trees in the tree file layout: one tree per line, blank line
/// between trees.
pub fn render_tree_file(trees: &[ConstituentTree]) -> String {
    let mut out = String::new();
    for (i, tree) in trees.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&tree.render());
        out.push('\n');
    }
    out
}

fn token_offset(tok: &SexpToken<'_>) -> usize {
    match *tok {
        SexpToken::Open(o) | SexpToken::Close(o) | SexpToken::Atom(_, o) => o,
    }
}

fn parse_node(
    tokens: &[SexpToken<'_>],
    pos: &mut usize,
    end: usize,
) -> Result<ConstituentTree, TreeParseError> {
    let open = match tokens.get(*pos) {
        Some(SexpToken::Open(o)) => *o,
        Some(tok) => {
            return Err(TreeParseError::TrailingContent {
                offset: token_offset(tok),
            })
        }
        None => return Err(TreeParseError::EmptyNode { offset: end }),
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
    let mut word_at: Option<usize> = None;
    loop {
        match tokens.get(*pos) {
            Some(SexpToken::Close(_)) => {
                *pos += 1;
                break;
            }
            Some(SexpToken::Open(_)) => children.push(parse_node(tokens, pos, end)?),
            Some(SexpToken::Atom(a, o)) => {
                if word_at.is_none() {
                    word_at = Some(*o);
                }
                children.push(ConstituentTree::Leaf(a.to_string()));
                *pos += 1;
            }
            None => return Err(TreeParseError::UnbalancedBrackets { offset: end }),
        }
    }

    if children.is_empty() {
        return Err(TreeParseError::EmptyNode { offset: open });
    }
    if let Some(offset) = word_at {
        if children.len() != 1 {
            return Err(TreeParseError::MisplacedLeaf { offset });
        }
    }
    Ok(ConstituentTree::Node { label, children })
}
