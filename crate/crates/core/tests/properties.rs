mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use transtree::classify::{mcnemar, primal_objective, train_svm, SolverConfig};
use transtree::corpus::{parse_bracketed_tree, parse_tree_file, render_tree_file, TextClass};
use transtree::features::{enumerate_subtree_derivations, enumerate_subtrees, extract_cfgr, SparseVector};
use transtree::selection::information_gain;
use transtree::synth::{default_grammar_pair, generate_corpus};
use transtree::treequery::contains_fragment;

use common::{brute_force_fragments, random_tree};

fn class(b: bool) -> TextClass {
    if b {
        TextClass::Translated
    } else {
        TextClass::Original
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cfgr_is_depth_one(seed in any::<u64>(), size in 2usize..60) {
        let tree = random_tree(&mut ChaCha8Rng::seed_from_u64(seed), size);
        prop_assert_eq!(extract_cfgr(&tree), enumerate_subtrees(&tree, 1, 1));
    }

    #[test]
    fn subtrees_match_brute_force(seed in any::<u64>(), size in 2usize..12, d in 1usize..=3) {
        let tree = random_tree(&mut ChaCha8Rng::seed_from_u64(seed), size);
        let got: std::collections::BTreeMap<String, u64> = enumerate_subtrees(&tree, 1, d)
            .into_iter()
            .map(|(f, n)| (f.encoding().to_string(), n))
            .collect();
        prop_assert_eq!(got, brute_force_fragments(&tree, 1, d));
    }

    #[test]
    fn depth_window_is_monotone(seed in any::<u64>(), size in 2usize..30) {
        let tree = random_tree(&mut ChaCha8Rng::seed_from_u64(seed), size);
        let small = enumerate_subtrees(&tree, 1, 2);
        let large = enumerate_subtrees(&tree, 1, 3);
        for (f, n) in &small {
            prop_assert_eq!(large.get(f), Some(n));
            prop_assert!(f.depth() >= 1 && f.depth() <= 2);
        }
        let exact3 = enumerate_subtrees(&tree, 3, 3);
        prop_assert_eq!(small.values().sum::<u64>() + exact3.values().sum::<u64>(), large.values().sum::<u64>());
    }

    #[test]
    fn query_anchors_agree_with_derivations(seed in any::<u64>(), size in 2usize..25) {
        let tree = random_tree(&mut ChaCha8Rng::seed_from_u64(seed), size);
        let derivations = enumerate_subtree_derivations(&tree, 1, 3);
        let fragments: BTreeSet<_> = derivations.iter().map(|(_, f)| f.clone()).collect();
        for f in fragments {
            let anchors: BTreeSet<Vec<usize>> = derivations
                .iter()
                .filter(|(_, g)| *g == f)
                .map(|(p, _)| p.clone())
                .collect();
            let found: BTreeSet<Vec<usize>> = contains_fragment(&tree, &f).into_iter().collect();
            prop_assert!(!found.is_empty());
            prop_assert_eq!(found, anchors);
        }
    }

    #[test]
    fn tree_render_roundtrip(seed in any::<u64>(), size in 2usize..40) {
        let tree = random_tree(&mut ChaCha8Rng::seed_from_u64(seed), size);
        prop_assert_eq!(parse_bracketed_tree(&tree.render()).unwrap(), tree.clone());
        let file = render_tree_file(&[tree.clone(), tree.clone()]);
        prop_assert_eq!(parse_tree_file(&file).unwrap(), vec![tree.clone(), tree]);
    }

    #[test]
    fn ig_is_label_swap_invariant(rows in prop::collection::vec(prop::collection::vec(any::<bool>(), 4), 2..12), labels in prop::collection::vec(any::<bool>(), 12)) {
        let n = rows.len();
        let mut labels: Vec<TextClass> = labels[..n].iter().map(|&b| class(b)).collect();
        labels[0] = TextClass::Translated;
        labels[1] = TextClass::Original;
        let swapped: Vec<TextClass> = labels.iter().map(|l| l.other()).collect();
        let a = information_gain(&rows, &labels).unwrap();
        let b = information_gain(&rows, &swapped).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn mcnemar_is_symmetric(triples in prop::collection::vec((any::<bool>(), any::<bool>(), any::<bool>()), 1..60)) {
        let a: Vec<TextClass> = triples.iter().map(|t| class(t.0)).collect();
        let b: Vec<TextClass> = triples.iter().map(|t| class(t.1)).collect();
        let g: Vec<TextClass> = triples.iter().map(|t| class(t.2)).collect();
        let ab = mcnemar(&a, &b, &g).unwrap();
        let ba = mcnemar(&b, &a, &g).unwrap();
        prop_assert_eq!((ab.b, ab.c), (ba.c, ba.b));
        prop_assert_eq!(ab.statistic, ba.statistic);
        prop_assert_eq!(ab.p, ba.p);
        prop_assert!((0.0..=1.0).contains(&ab.p));
        if ab.b.abs_diff(ab.c) <= 1 {
            prop_assert_eq!(ab.statistic, 0.0);
        }
    }

    #[test]
    fn svm_objective_never_increases(
        points in prop::collection::vec((prop::collection::vec((0usize..6, 0.0f64..5.0), 1..4), any::<bool>()), 2..20),
        c in 0.05f64..5.0,
        seed in any::<u64>(),
    ) {
        let mut labels: Vec<TextClass> = points.iter().map(|p| class(p.1)).collect();
        labels[0] = TextClass::Translated;
        labels[1] = TextClass::Original;
        let vectors: Vec<SparseVector> = points.iter().map(|p| {
            let mut pairs = p.0.clone();
            pairs.sort_by_key(|x| x.0);
            pairs.dedup_by_key(|x| x.0);
            SparseVector::from_pairs(pairs)
        }).collect();
        let solver = SolverConfig { max_epochs: 200, tolerance: 1e-6 };
        let fit = train_svm(&vectors, &labels, 6, c, &solver, seed).unwrap();
        for w in fit.objective_trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9);
        }
        let obj = primal_objective(&fit.weights, fit.bias, &vectors, &labels, c);
        prop_assert!((obj - fit.objective()).abs() <= 1e-9 * obj.max(1.0));
        // never worse than the zero model
        prop_assert!(fit.objective() <= primal_objective(&[0.0; 6], 0.0, &vectors, &labels, c) + 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn generated_sentences_are_well_formed(seed in any::<u64>()) {
        let (a, b) = default_grammar_pair();
        let corpus = generate_corpus(&a, &b, 4, 10, seed).unwrap();
        for doc in &corpus.documents {
            for s in &doc.sentences {
                prop_assert!(s.yield_consistent());
                let arcs = s.arcs.as_ref().unwrap();
                prop_assert_eq!(arcs.len(), s.tokens.len());
                let roots: Vec<usize> = arcs.iter().filter(|a| a.head == 0).map(|a| a.dependent).collect();
                prop_assert_eq!(roots.len(), 1);
                // every token reaches the root without revisiting a token
                for start in 1..=s.tokens.len() {
                    let mut seen = BTreeSet::new();
                    let mut cur = start;
                    while cur != 0 {
                        prop_assert!(seen.insert(cur), "cycle through token {}", cur);
                        cur = arcs[cur - 1].head;
                    }
                }
            }
        }
    }
}
