//! Raw-text clean-up applied before parsing: URL removal, ellipsis
//! normalization and half-width to full-width punctuation.

use std::collections::{BTreeSet, HashMap};
use std::sync::LazyLock;

use regex::Regex;

pub const WIDTH_TABLE_VERSION: u32 = 1;
const WIDTH_TABLE: &str = include_str!("../../resources/fullwidth_v1.tsv");

static URL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"[A-Za-z][A-Za-z0-9+.\-]*://[!-~]+").unwrap());
static ELLIPSIS: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"。{3,}|\.{3,}").unwrap());
static WIDTH_MAP: LazyLock<HashMap<char, char>> = LazyLock::new(|| parse_width_table(WIDTH_TABLE));

fn parse_width_table(text: &str) -> HashMap<char, char> {
    text.lines()
        .filter(|l| !l.starts_with("# ") && !l.is_empty())
        .map(|l| {
            let mut chars = l.chars();
            let half = chars.next().expect("width table row");
            assert_eq!(chars.next(), Some('\t'), "width table row {:?}", l);
            let full = chars.next().expect("width table row");
            (half, full)
        })
        .collect()
}

/// Counts of the edits made by [`normalize_text_counted`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NormalizeStats {
    pub urls: usize,
    pub ellipses: usize,
    pub widened: usize,
}

impl NormalizeStats {
    pub fn total(&self) -> usize {
        self.urls + self.ellipses + self.widened
    }
}

impl std::ops::AddAssign for NormalizeStats {
    fn add_assign(&mut self, rhs: Self) {
        self.urls += rhs.urls;
        self.ellipses += rhs.ellipses;
        self.widened += rhs.widened;
    }
}

pub fn normalize_text(raw: &str) -> String {
    normalize_text_counted(raw).0
}

pub fn normalize_text_counted(raw: &str) -> (String, NormalizeStats) {
    let mut stats = NormalizeStats {
        urls: URL.find_iter(raw).count(),
        ..NormalizeStats::default()
    };
    let text = URL.replace_all(raw, "");

    stats.ellipses = ELLIPSIS.find_iter(&text).count();
    let text = ELLIPSIS.replace_all(&text, "……");

    let out = text
        .chars()
        .map(|c| match WIDTH_MAP.get(&c) {
            Some(&full) => {
                stats.widened += 1;
                full
            }
            None => c,
        })
        .collect();
    (out, stats)
}

/// Drops the given 1-based lines (e.g. headlines marked by the corpus
/// provider), keeping the remaining line structure.
pub fn remove_marked_lines(text: &str, marked: &BTreeSet<usize>) -> String {
    let mut out = String::with_capacity(text.len());
    for (i, line) in text.split_inclusive('\n').enumerate() {
        if !marked.contains(&(i + 1)) {
            out.push_str(line);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ellipsis() {
        assert_eq!(normalize_text("结束。。。"), "结束……");
        assert_eq!(normalize_text("等等...."), "等等……");
        // two stops are left alone
        assert_eq!(normalize_text("好。。"), "好。。");
        assert_eq!(normalize_text("a.."), "a．．");
    }

    #[test]
    fn widens_punctuation_only() {
        assert_eq!(normalize_text("好!"), "好\u{FF01}");
        assert_eq!(normalize_text("A1(x)"), "A1（x）");
        assert_eq!(normalize_text("~"), "\u{FF5E}");
    }

    #[test]
    fn removes_urls() {
        let (out, stats) = normalize_text_counted("见http://example.com/a?b=1。后");
        assert_eq!(out, "见。后");
        assert_eq!(stats.urls, 1);
        assert_eq!(normalize_text("see https://x.org/p now"), "see  now");
    }

    #[test]
    fn table_covers_ascii_punctuation() {
        assert_eq!(WIDTH_MAP.len(), 32);
        for (&h, &f) in WIDTH_MAP.iter() {
            assert!(h.is_ascii_punctuation());
            assert_eq!(f as u32, h as u32 + 0xFEE0);
        }
    }

    #[test]
    fn counts_changes() {
        let (_, s) = normalize_text_counted("结束。。。");
        assert_eq!(s, NormalizeStats { urls: 0, ellipses: 1, widened: 0 });
        let (_, s) = normalize_text_counted("已经规范。");
        assert_eq!(s.total(), 0);
    }

    #[test]
    fn marked_lines() {
        let marked = [1usize, 3].into_iter().collect();
        assert_eq!(remove_marked_lines("标题\n正文\n小标题\n更多\n", &marked), "正文\n更多\n");
    }

    proptest! {
        #[test]
        fn idempotent(s in "[a-z.。:/!?,() 中文htp]{0,40}") {
            let once = normalize_text(&s);
            prop_assert_eq!(normalize_text(&once), once);
        }

        #[test]
        fn never_lengthens(s in "[a-z.。!?,() 中文]{0,40}") {
            prop_assert!(normalize_text(&s).chars().count() <= s.chars().count());
        }
    }
}
