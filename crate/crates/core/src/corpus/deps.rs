//! Tab-separated dependency tables.
//!
//! One row per token with the columns `index surface pos head relation`;
//! sentences are separated by blank lines. A head of `0` marks the root.

use thiserror::Error;

use super::{DependencyArc, Token};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DepTableError {
    #[error("line {line}: expected 5 tab-separated columns, found {found}")]
    BadColumnCount { line: usize, found: usize },
    #[error("line {line}: bad token index {value:?}")]
    BadIndex { line: usize, value: String },
    #[error("line {line}: empty surface or pos")]
    EmptyField { line: usize },
    #[error("line {line}: head {head} outside sentence of {len} tokens")]
    DanglingHead { line: usize, head: usize, len: usize },
    #[error("line {line}: sentence has more than one root")]
    MultipleRoots { line: usize },
    #[error("line {line}: sentence has no root")]
    NoRoot { line: usize },
}

/// Tokens and arcs of one sentence, as read from a dependency table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepSentence {
    pub tokens: Vec<Token>,
    pub arcs: Vec<DependencyArc>,
}

pub fn read_dependency_table(text: &str) -> Result<Vec<DepSentence>, DepTableError> {
    let mut sentences = Vec::new();
    // (first line number, rows)
    let mut block: Vec<(usize, &str)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            if !block.is_empty() {
                sentences.push(read_block(&block)?);
                block.clear();
            }
        } else {
            block.push((line_no, line));
        }
    }
    if !block.is_empty() {
        sentences.push(read_block(&block)?);
    }
    Ok(sentences)
}

fn read_block(rows: &[(usize, &str)]) -> Result<DepSentence, DepTableError> {
    let mut tokens = Vec::with_capacity(rows.len());
    let mut heads = Vec::with_capacity(rows.len());
    for (expected, &(line, row)) in rows.iter().enumerate() {
        let cols: Vec<&str> = row.trim_end_matches('\r').split('\t').collect();
        if cols.len() != 5 {
            return Err(DepTableError::BadColumnCount {
                line,
                found: cols.len(),
            });
        }
        let index: usize = cols[0]
            .trim()
            .parse()
            .ok()
            .filter(|&ix| ix == expected + 1)
            .ok_or_else(|| DepTableError::BadIndex {
                line,
                value: cols[0].to_string(),
            })?;
        let head: usize = cols[3].trim().parse().map_err(|_| DepTableError::BadIndex {
            line,
            value: cols[3].to_string(),
        })?;
        let (surface, pos) = (cols[1].trim(), cols[2].trim());
        if surface.is_empty() || pos.is_empty() {
            return Err(DepTableError::EmptyField { line });
        }
        tokens.push(Token {
            index,
            surface: surface.to_string(),
            pos: pos.to_string(),
        });
        heads.push((line, head, cols[4].trim().to_string()));
    }

    let len = tokens.len();
    let mut root_seen = false;
    let mut arcs = Vec::with_capacity(len);
    for (i, (line, head, relation)) in heads.into_iter().enumerate() {
        if head > len {
            return Err(DepTableError::DanglingHead { line, head, len });
        }
        if head == 0 {
            if root_seen {
                return Err(DepTableError::MultipleRoots { line });
            }
            root_seen = true;
        }
        arcs.push(DependencyArc {
            head,
            dependent: i + 1,
            relation,
        });
    }
    if !root_seen {
        return Err(DepTableError::NoRoot { line: rows[0].0 });
    }
    Ok(DepSentence { tokens, arcs })
}

pub fn render_dependency_table(sentences: &[DepSentence]) -> String {
    let mut out = String::new();
    for (i, s) in sentences.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        for (tok, arc) in s.tokens.iter().zip(&s.arcs) {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                tok.index, tok.surface, tok.pos, arc.head, arc.relation
            ));
        }
    }
    out
}
