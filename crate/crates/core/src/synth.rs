//! Two-class synthetic parsed corpora drawn from a pair of PCFGs.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::{ConstituentTree, Corpus, DependencyArc, Document, Genre, Sentence, TextClass};

/// Trees never grow deeper than this unless the grammar's shortest
/// derivation is itself deeper.
pub const MAX_DEPTH: usize = 12;

const PROB_SLACK: f64 = 1e-9;

const DEFAULT_ORIGINAL: &str = include_str!("../resources/grammar_original.pcfg");
const DEFAULT_TRANSLATED: &str = include_str!("../resources/grammar_translated.pcfg");

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("grammar line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("improper grammar: {0}")]
    ImproperGrammar(String),
    #[error("nothing to generate: documents and sentences per document must be positive")]
    EmptyCorpus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub lhs: String,
    pub rhs: Vec<String>,
    pub prob: f64,
    /// Index into `rhs` of the head child.
    pub head: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pcfg {
    pub start: String,
    pub rules: BTreeMap<String, Vec<Rule>>,
    /// Preterminal tag to (word, probability).
    pub lexicon: BTreeMap<String, Vec<(String, f64)>>,
}

impl Pcfg {
    /// Reads the grammar text format: `P lhs -> rhs... @head` rule lines,
    /// `P tag => word` lexicon lines, an optional `start LABEL` line
    /// (default: lhs of the first rule) and `#` comments. `@head` may be
    /// omitted for single-child rules.
    pub fn parse(text: &str) -> Result<Pcfg, SynthError> {
        let mut start = None;
        let mut first_lhs = None;
        let mut rules: BTreeMap<String, Vec<Rule>> = BTreeMap::new();
        let mut lexicon: BTreeMap<String, Vec<(String, f64)>> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let bad = |message: &str| SynthError::Parse {
                line,
                message: message.to_string(),
            };
            let l = raw.trim();
            if l.is_empty() || l.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = l.split_whitespace().collect();
            if fields[0] == "start" {
                if fields.len() != 2 {
                    return Err(bad("expected `start LABEL`"));
                }
                start = Some(fields[1].to_string());
                continue;
            }
            let prob: f64 = fields[0].parse().map_err(|_| bad("expected a probability"))?;
            if !(0.0..=1.0).contains(&prob) {
                return Err(bad("probability outside [0, 1]"));
            }
            match fields.get(2).copied() {
                Some("=>") => {
                    if fields.len() != 4 {
                        return Err(bad("expected `P tag => word`"));
                    }
                    lexicon
                        .entry(fields[1].to_string())
                        .or_default()
                        .push((fields[3].to_string(), prob));
                }
                Some("->") => {
                    let mut rhs: Vec<String> = Vec::new();
                    let mut head = None;
                    for f in &fields[3..] {
                        if let Some(h) = f.strip_prefix('@') {
                            if head.is_some() {
                                return Err(bad("more than one head marker"));
                            }
                            head = Some(h.parse::<usize>().map_err(|_| bad("bad head index"))?);
                        } else if head.is_some() {
                            return Err(bad("head marker must come last"));
                        } else {
                            rhs.push(f.to_string());
                        }
                    }
                    if rhs.is_empty() {
                        return Err(bad("empty right-hand side"));
                    }
                    let head = match head {
                        Some(h) if h < rhs.len() => h,
                        Some(_) => return Err(bad("head index out of range")),
                        None if rhs.len() == 1 => 0,
                        None => return Err(bad("rule with several children needs @head")),
                    };
                    let lhs = fields[1].to_string();
                    first_lhs.get_or_insert_with(|| lhs.clone());
                    rules.entry(lhs.clone()).or_default().push(Rule { lhs, rhs, prob, head });
                }
                _ => return Err(bad("expected `->` or `=>` after the label")),
            }
        }
        let start = start
            .or(first_lhs)
            .ok_or_else(|| SynthError::ImproperGrammar("no rules".into()))?;
        let g = Pcfg {
            start,
            rules,
            lexicon,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("start {}\n", self.start);
        for rule in self.rules.values().flatten() {
            let _ = writeln!(out, "{:?} {} -> {} @{}", rule.prob, rule.lhs, rule.rhs.join(" "), rule.head);
        }
        for (tag, words) in &self.lexicon {
            for (w, p) in words {
                let _ = writeln!(out, "{p:?} {tag} => {w}");
            }
        }
        out
    }

    /// Checks probabilities, symbol coverage and termination.
    pub fn validate(&self) -> Result<(), SynthError> {
        let improper = |m: String| Err(SynthError::ImproperGrammar(m));
        if !self.rules.contains_key(&self.start) {
            return improper(format!("start symbol {} has no rules", self.start));
        }
        for (lhs, rules) in &self.rules {
            if self.lexicon.contains_key(lhs) {
                return improper(format!("{lhs} has both rules and words"));
            }
            let sum: f64 = rules.iter().map(|r| r.prob).sum();
            if (sum - 1.0).abs() > PROB_SLACK {
                return improper(format!("rules of {lhs} sum to {sum}"));
            }
            for r in rules {
                for sym in &r.rhs {
                    if !self.rules.contains_key(sym) && !self.lexicon.contains_key(sym) {
                        return improper(format!("{sym} has neither rules nor words"));
                    }
                }
            }
        }
        for (tag, words) in &self.lexicon {
            let sum: f64 = words.iter().map(|(_, p)| p).sum();
            if (sum - 1.0).abs() > PROB_SLACK {
                return improper(format!("words of {tag} sum to {sum}"));
            }
        }
        let heights = self.min_heights();
        if let Some(sym) = self.rules.keys().find(|s| !heights.contains_key(s.as_str())) {
            return improper(format!("{sym} has no finite derivation"));
        }
        Ok(())
    }

    /// Height (edges down to preterminals) of the shortest derivation of
    /// every symbol that has one.
    fn min_heights(&self) -> BTreeMap<&str, usize> {
        let mut h: BTreeMap<&str, usize> = self.lexicon.keys().map(|t| (t.as_str(), 0)).collect();
        loop {
            let mut changed = false;
            for (lhs, rules) in &self.rules {
                let best = rules.iter().filter_map(|r| self.rule_height(r, &h)).min();
                if let Some(b) = best {
                    if h.get(lhs.as_str()).is_none_or(|&old| b < old) {
                        h.insert(lhs.as_str(), b);
                        changed = true;
                    }
                }
            }
            if !changed {
                return h;
            }
        }
    }

    fn rule_height(&self, rule: &Rule, heights: &BTreeMap<&str, usize>) -> Option<usize> {
        rule.rhs
            .iter()
            .map(|s| heights.get(s.as_str()).copied())
            .try_fold(0, |acc, h| h.map(|h| acc.max(h + 1)))
    }

    pub fn rule(&self, lhs: &str, rhs: &[&str]) -> Option<&Rule> {
        self.rules.get(lhs)?.iter().find(|r| r.rhs == rhs)
    }

    /// Sets the probability of one rule and rescales its siblings so they
    /// keep their relative weights.
    pub fn reweight(&mut self, lhs: &str, rhs: &[&str], prob: f64) -> Result<(), SynthError> {
        let rules = self
            .rules
            .get_mut(lhs)
            .ok_or_else(|| SynthError::ImproperGrammar(format!("{lhs} has no rules")))?;
        let idx = rules
            .iter()
            .position(|r| r.rhs == rhs)
            .ok_or_else(|| SynthError::ImproperGrammar(format!("no rule {lhs} -> {}", rhs.join(" "))))?;
        let rest: f64 = rules.iter().enumerate().filter(|&(i, _)| i != idx).map(|(_, r)| r.prob).sum();
        for (i, r) in rules.iter_mut().enumerate() {
            r.prob = if i == idx {
                prob
            } else if rest > 0.0 {
                r.prob / rest * (1.0 - prob)
            } else {
                0.0
            };
        }
        self.validate()
    }
}

/// Grammars for the "original" and "translated" classes. They share rules
/// and lexicon and differ in the weights of a few contrast rules, e.g.
/// NP → PN and NP → NP CC NP are likelier in the translated grammar, VP → VP
/// PU VP and NP → NN PU NN in the original one.
pub fn default_grammar_pair() -> (Pcfg, Pcfg) {
    let a = Pcfg::parse(DEFAULT_ORIGINAL).expect("built-in grammar is valid");
    let b = Pcfg::parse(DEFAULT_TRANSLATED).expect("built-in grammar is valid");
    (a, b)
}

fn sample<'a, T>(items: &'a [T], prob: impl Fn(&T) -> f64, rng: &mut ChaCha8Rng) -> &'a T {
    let x: f64 = rng.gen();
    let mut acc = 0.0;
    for item in items {
        acc += prob(item);
        if x < acc {
            return item;
        }
    }
    items
        .iter()
        .rev()
        .find(|i| prob(i) > 0.0)
        .unwrap_or(&items[items.len() - 1])
}

struct Generator<'g> {
    grammar: &'g Pcfg,
    heights: BTreeMap<&'g str, usize>,
}

impl<'g> Generator<'g> {
    fn new(grammar: &'g Pcfg) -> Self {
        Generator {
            grammar,
            heights: grammar.min_heights(),
        }
    }

    fn height(&self, rule: &Rule) -> usize {
        self.grammar
            .rule_height(rule, &self.heights)
            .expect("validated grammar")
    }

    /// Expands `symbol` at `depth`; appends arcs and returns the subtree and
    /// the index of its lexical head.
    fn expand(
        &self,
        symbol: &str,
        depth: usize,
        rng: &mut ChaCha8Rng,
        words: &mut usize,
        arcs: &mut Vec<DependencyArc>,
    ) -> (ConstituentTree, usize) {
        if let Some(lex) = self.grammar.lexicon.get(symbol) {
            let (word, _) = sample(lex, |(_, p)| *p, rng);
            *words += 1;
            return (ConstituentTree::preterminal(symbol, word.clone()), *words);
        }
        let rules = &self.grammar.rules[symbol];
        let mut rule = sample(rules, |r| r.prob, rng);
        if depth + self.height(rule) > MAX_DEPTH {
            rule = rules
                .iter()
                .min_by_key(|r| self.height(r))
                .expect("symbol has rules");
        }
        let mut children = Vec::with_capacity(rule.rhs.len());
        let mut heads = Vec::with_capacity(rule.rhs.len());
        for sym in &rule.rhs {
            let (child, head) = self.expand(sym, depth + 1, rng, words, arcs);
            children.push(child);
            heads.push(head);
        }
        let head = heads[rule.head];
        for (i, (&h, sym)) in heads.iter().zip(&rule.rhs).enumerate() {
            if i != rule.head {
                arcs.push(DependencyArc {
                    head,
                    dependent: h,
                    relation: sym.to_lowercase(),
                });
            }
        }
        (ConstituentTree::node(symbol, children), head)
    }

    fn sentence(&self, rng: &mut ChaCha8Rng) -> Sentence {
        let mut words = 0;
        let mut arcs = Vec::new();
        let (tree, root) = self.expand(&self.grammar.start, 0, rng, &mut words, &mut arcs);
        arcs.push(DependencyArc {
            head: 0,
            dependent: root,
            relation: "root".to_string(),
        });
        arcs.sort_by_key(|a| a.dependent);
        let mut s = Sentence::from_tree(tree);
        s.arcs = Some(arcs);
        s
    }
}

/// Generates `docs_per_class` documents per class: "original" from
/// `grammar_a`, "translated" from `grammar_b`. Genres rotate over the four
/// genres. Document `i` of the corpus draws from its own ChaCha stream, so
/// output does not depend on thread scheduling.
pub fn generate_corpus(
    grammar_a: &Pcfg,
    grammar_b: &Pcfg,
    docs_per_class: usize,
    sentences_per_doc: usize,
    seed: u64,
) -> Result<Corpus, SynthError> {
    grammar_a.validate()?;
    grammar_b.validate()?;
    if docs_per_class == 0 || sentences_per_doc == 0 {
        return Err(SynthError::EmptyCorpus);
    }
    let gens = [Generator::new(grammar_a), Generator::new(grammar_b)];
    let docs: Vec<Document> = (0..2 * docs_per_class)
        .into_par_iter()
        .map(|n| {
            let (ci, i) = (n / docs_per_class, n % docs_per_class);
            let class = TextClass::ALL[ci];
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(n as u64);
            let sentences = (0..sentences_per_doc).map(|_| gens[ci].sentence(&mut rng)).collect();
            Document {
                id: format!("{class}-{i:04}"),
                genre: Genre::ALL[i % Genre::ALL.len()],
                class,
                sentences,
            }
        })
        .collect();
    Ok(Corpus::new(docs).expect("generated ids are unique"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn default_pair_is_valid() {
        let (a, b) = default_grammar_pair();
        a.validate().unwrap();
        b.validate().unwrap();
        assert_eq!(a.start, "IP");
        let labels: BTreeSet<&str> = a
            .rules
            .keys()
            .chain(a.lexicon.keys())
            .map(String::as_str)
            .collect();
        for l in ["IP", "NP", "VP", "PP", "DNP", "DP", "PN", "NN", "NR", "DT", "VV", "AD", "CC", "PU", "DEG"] {
            assert!(labels.contains(l), "{l}");
        }
        assert!(a.rule("NP", &["PN"]).unwrap().prob < b.rule("NP", &["PN"]).unwrap().prob);
        assert!(a.rule("VP", &["VP", "PU", "VP"]).unwrap().prob > b.rule("VP", &["VP", "PU", "VP"]).unwrap().prob);
    }

    #[test]
    fn text_roundtrip() {
        let (a, _) = default_grammar_pair();
        assert_eq!(Pcfg::parse(&a.to_text()).unwrap(), a);
    }

    #[test]
    fn rejects_bad_grammars() {
        let unnormalized = "0.5 S -> A @0\n0.4 S -> A A @1\n1.0 A => a\n";
        assert!(matches!(Pcfg::parse(unnormalized), Err(SynthError::ImproperGrammar(_))));
        let nonterminating = "1.0 S -> S A @0\n1.0 A => a\n";
        assert!(matches!(Pcfg::parse(nonterminating), Err(SynthError::ImproperGrammar(_))));
        let undefined = "1.0 S -> B @0\n";
        assert!(matches!(Pcfg::parse(undefined), Err(SynthError::ImproperGrammar(_))));
        assert!(matches!(
            Pcfg::parse("1.0 S -> A A\n1.0 A => a\n"),
            Err(SynthError::Parse { line: 1, .. })
        ));
        assert!(matches!(Pcfg::parse("x S -> A\n"), Err(SynthError::Parse { line: 1, .. })));
    }

    #[test]
    fn depth_is_capped() {
        // expected branching above 1: unbounded without the cap
        let g = Pcfg::parse("start S\n0.9 S -> S S @0\n0.1 S -> A @0\n1.0 A => a\n").unwrap();
        let gen = Generator::new(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let s = gen.sentence(&mut rng);
            assert!(s.tree.as_ref().unwrap().depth() <= MAX_DEPTH);
        }
    }

    #[test]
    fn sentences_are_well_formed() {
        let (a, b) = default_grammar_pair();
        let c = generate_corpus(&a, &b, 6, 10, 3).unwrap();
        assert_eq!(c.len(), 12);
        for d in &c.documents {
            for s in &d.sentences {
                assert!(s.yield_consistent());
                let arcs = s.arcs.as_ref().unwrap();
                assert_eq!(arcs.len(), s.tokens.len());
                assert_eq!(arcs.iter().filter(|a| a.head == 0).count(), 1);
                for (i, a) in arcs.iter().enumerate() {
                    assert_eq!(a.dependent, i + 1);
                }
            }
        }
        assert_eq!(c.documents[5].genre, Genre::ALL[1]);
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let (a, b) = default_grammar_pair();
        let x = generate_corpus(&a, &b, 3, 4, 9).unwrap();
        assert_eq!(x, generate_corpus(&a, &b, 3, 4, 9).unwrap());
        assert_ne!(x, generate_corpus(&a, &b, 3, 4, 10).unwrap());
    }

    #[test]
    fn empty_request() {
        let (a, b) = default_grammar_pair();
        assert!(matches!(generate_corpus(&a, &b, 0, 5, 1), Err(SynthError::EmptyCorpus)));
    }

    #[test]
    fn reweight_keeps_normalization() {
        let (mut a, _) = default_grammar_pair();
        a.reweight("NP", &["PN"], 0.6).unwrap();
        assert_eq!(a.rule("NP", &["PN"]).unwrap().prob, 0.6);
        let sum: f64 = a.rules["NP"].iter().map(|r| r.prob).sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }
}
