use std::collections::BTreeMap;

use crate::corpus::Document;

/// Joiner for word and POS n-grams.
pub const GRAM_JOINER: &str = "␣";

pub type Counts = BTreeMap<String, u64>;

fn count_windows<T: AsRef<str>>(items: &[T], n_max: usize, prefix: &str, joiner: &str, out: &mut Counts) {
    for n in 1..=n_max.min(items.len()) {
        for window in items.windows(n) {
            let mut key = String::from(prefix);
            for (i, item) in window.iter().enumerate() {
                if i > 0 {
                    key.push_str(joiner);
                }
                key.push_str(item.as_ref());
            }
            *out.entry(key).or_insert(0) += 1;
        }
    }
}

/// Character n-grams (1..=n_max) over each sentence's concatenated token
/// surfaces. N-grams never cross sentence boundaries.
pub fn char_ngrams(doc: &Document, n_max: usize) -> Counts {
    let mut out = Counts::new();
    for s in &doc.sentences {
        let chars: Vec<String> = s
            .tokens
            .iter()
            .flat_map(|t| t.surface.chars())
            .map(String::from)
            .collect();
        count_windows(&chars, n_max, "c:", "", &mut out);
    }
    out
}

pub fn word_ngrams(doc: &Document, n_max: usize) -> Counts {
    let mut out = Counts::new();
    for s in &doc.sentences {
        let words: Vec<&str> = s.tokens.iter().map(|t| t.surface.as_str()).collect();
        count_windows(&words, n_max, "w:", GRAM_JOINER, &mut out);
    }
    out
}

pub fn pos_ngrams(doc: &Document, n_max: usize) -> Counts {
    let mut out = Counts::new();
    for s in &doc.sentences {
        let tags: Vec<&str> = s.tokens.iter().map(|t| t.pos.as_str()).collect();
        count_windows(&tags, n_max, "p:", GRAM_JOINER, &mut out);
    }
    out
}
