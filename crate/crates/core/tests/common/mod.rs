#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use transtree::corpus::{parse_bracketed_tree, ConstituentTree};

pub const FIGURE1: &str = "(ROOT (IP (NP (PN 我们)) (VP (ADVP (AD 一起)) (VP (VV 照) (NP (QP (CLP (M 幅))) (NP (NN 像))))) (PU 。)))";

pub const FIGURE3: &str = "1\t我们\tPN\t3\tnsubj\n2\t一起\tAD\t3\tadvmod\n3\t照\tVV\t0\troot\n4\t幅\tM\t5\tnummod\n5\t像\tNN\t3\tdobj\n6\t。\tPU\t3\tpunct\n";

pub fn figure1() -> ConstituentTree {
    parse_bracketed_tree(FIGURE1).unwrap()
}

const PHRASAL: [&str; 3] = ["A", "B", "C"];
const TAGS: [&str; 3] = ["x", "y", "z"];

fn random_node(rng: &mut ChaCha8Rng, depth: usize, left: &mut usize, force_phrasal: bool) -> ConstituentTree {
    *left -= 1;
    let phrasal = force_phrasal || (*left > 0 && depth < 5 && rng.gen_bool(0.6));
    if !phrasal {
        let tag = TAGS[rng.gen_range(0..TAGS.len())];
        return ConstituentTree::preterminal(tag, "w");
    }
    let label = PHRASAL[rng.gen_range(0..PHRASAL.len())];
    let n = rng.gen_range(1..=3).min((*left).max(1));
    let mut children = Vec::with_capacity(n);
    for _ in 0..n {
        if *left == 0 {
            break;
        }
        children.push(random_node(rng, depth + 1, left, false));
    }
    if children.is_empty() {
        // the forced root ran out of budget
        children.push(ConstituentTree::preterminal(TAGS[0], "w"));
    }
    ConstituentTree::node(label, children)
}

/// A random tree with a phrasal root and at most `max_nodes` non-leaf nodes.
pub fn random_tree(rng: &mut ChaCha8Rng, max_nodes: usize) -> ConstituentTree {
    let mut left = max_nodes.max(2);
    random_node(rng, 0, &mut left, true)
}

fn is_phrasal(t: &ConstituentTree) -> bool {
    !t.is_leaf() && !t.is_preterminal()
}

/// Node in the flattened view used by the brute-force oracle.
struct Flat<'a> {
    node: &'a ConstituentTree,
    parent: Option<usize>,
    depth: usize,
}

fn flatten<'a>(t: &'a ConstituentTree, parent: Option<usize>, depth: usize, out: &mut Vec<Flat<'a>>) {
    let me = out.len();
    out.push(Flat { node: t, parent, depth });
    for c in t.children() {
        if !c.is_leaf() {
            flatten(c, Some(me), depth + 1, out);
        }
    }
}

fn render_cut(node: &ConstituentTree, expanded: &dyn Fn(*const ConstituentTree) -> bool) -> String {
    if !expanded(node as *const _) {
        return format!("({})", node.label());
    }
    let mut s = format!("({}", node.label());
    for c in node.children() {
        s.push(' ');
        s.push_str(&render_cut(c, expanded));
    }
    s.push(')');
    s
}

/// Every fragment of depth `d_min..=d_max` obtained by choosing, for every
/// anchor, every subset of phrasal descendants to expand and keeping the
/// connected ones. Exponential; meant for small trees.
pub fn brute_force_fragments(tree: &ConstituentTree, d_min: usize, d_max: usize) -> BTreeMap<String, u64> {
    let mut flat = Vec::new();
    flatten(tree, None, 0, &mut flat);
    let mut out = BTreeMap::new();
    for (a, anchor) in flat.iter().enumerate() {
        if !is_phrasal(anchor.node) {
            continue;
        }
        // phrasal proper descendants of the anchor
        let desc: Vec<usize> = (0..flat.len())
            .filter(|&i| i != a && is_phrasal(flat[i].node))
            .filter(|&i| {
                let mut p = flat[i].parent;
                while let Some(j) = p {
                    if j == a {
                        return true;
                    }
                    p = flat[j].parent;
                }
                false
            })
            .collect();
        assert!(desc.len() < 20, "tree too large for brute force");
        for mask in 0u32..(1 << desc.len()) {
            let chosen: Vec<usize> = desc
                .iter()
                .enumerate()
                .filter(|&(bit, _)| mask & (1 << bit) != 0)
                .map(|(_, &i)| i)
                .collect();
            let connected = chosen.iter().all(|&i| {
                let p = flat[i].parent.unwrap();
                p == a || chosen.contains(&p)
            });
            if !connected {
                continue;
            }
            let depth = 1 + chosen
                .iter()
                .map(|&i| flat[i].depth - anchor.depth)
                .max()
                .unwrap_or(0);
            if depth < d_min || depth > d_max {
                continue;
            }
            let ptrs: Vec<*const ConstituentTree> = chosen
                .iter()
                .map(|&i| flat[i].node as *const _)
                .chain(std::iter::once(anchor.node as *const _))
                .collect();
            let enc = render_cut(anchor.node, &|p| ptrs.contains(&p));
            *out.entry(enc).or_insert(0) += 1;
        }
    }
    out
}

/// Information gain in bits from a 2x2 contingency table, computed from
/// probabilities with the textbook formula.
pub fn ig_oracle(present: &[bool], translated: &[bool]) -> f64 {
    let n = present.len() as f64;
    let h = |counts: &[f64]| -> f64 {
        let total: f64 = counts.iter().sum();
        if total == 0.0 {
            return 0.0;
        }
        counts
            .iter()
            .filter(|&&c| c > 0.0)
            .map(|&c| {
                let p = c / total;
                -p * p.ln() / std::f64::consts::LN_2
            })
            .sum()
    };
    let mut table = [[0.0f64; 2]; 2];
    for (&f, &t) in present.iter().zip(translated) {
        table[f as usize][t as usize] += 1.0;
    }
    let prior = h(&[table[0][0] + table[1][0], table[0][1] + table[1][1]]);
    let cond: f64 = table
        .iter()
        .map(|row| (row[0] + row[1]) / n * h(row))
        .sum();
    prior - cond
}

/// Two-sided exact binomial(n, 1/2) p-value for `k` successes.
pub fn binomial_two_sided(k: u64, n: u64) -> f64 {
    let choose = |n: u64, r: u64| -> f64 { (0..r).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64) };
    let lo = k.min(n - k);
    let tail: f64 = (0..=lo).map(|i| choose(n, i)).sum::<f64>() / 2f64.powi(n as i32);
    (2.0 * tail).min(1.0)
}

/// Chi-square(1) survival function by Simpson integration of the normal
/// density: P(X > x) = 1 - 2 * integral of phi over [0, sqrt(x)].
pub fn chi2_1_sf_numeric(x: f64) -> f64 {
    let b = x.sqrt();
    let steps = 20_000;
    let h = b / steps as f64;
    let phi = |z: f64| (-z * z / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = phi(0.0) + phi(b);
    for i in 1..steps {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * phi(i as f64 * h);
    }
    1.0 - 2.0 * s * h / 3.0
}
