//! Property tests for the normalization, tree, and strategy invariants.

use dirsim::analysis::{coverage_ratio, stem_reduction};
use dirsim::dataset::{Corpus, Wordlist};
use dirsim::fstree::{build_weighted_training_tree, WeightedTree};
use dirsim::lm::{build_vocabulary, HyperParams, LanguageModel};
use dirsim::strategies::{
    run_breadth, run_depth, run_lm, run_probabilistic, AttackTrace, SimOracle, Termination,
};
use dirsim::url_model::{normalize_path, PathSeq};
use proptest::prelude::*;
use std::collections::HashSet;

fn arb_raw_path() -> impl Strategy<Value = String> {
    proptest::collection::vec("[a-zA-Z0-9._~%-]{0,6}", 0..6).prop_map(|segments| {
        let mut s = String::from("/");
        s.push_str(&segments.join("/"));
        s
    })
}

fn arb_segment() -> impl Strategy<Value = String> {
    "[a-e][a-z0-9]{0,3}"
}

fn arb_path_set() -> impl Strategy<Value = Vec<Vec<String>>> {
    proptest::collection::vec(proptest::collection::vec(arb_segment(), 1..4), 1..14)
}

proptest! {
    #[test]
    fn normalize_is_idempotent(raw in arb_raw_path()) {
        if let Ok(once) = normalize_path(&raw) {
            let again = normalize_path(&once.render()).expect("normalized output re-normalizes");
            prop_assert_eq!(once, again);
        }
    }

    #[test]
    fn normalized_segments_are_clean(raw in arb_raw_path()) {
        if let Ok(path) = normalize_path(&raw) {
            for seg in path.segments() {
                prop_assert!(!seg.as_str().contains(['/', '?', '#']));
                prop_assert!(!seg.as_str().is_empty());
            }
            prop_assert!(path.depth() <= raw.matches('/').count());
        }
    }

    #[test]
    fn insertion_order_does_not_matter(paths in arb_path_set(), rot in 0usize..14) {
        let seqs: Vec<PathSeq> = paths
            .iter()
            .map(|names| PathSeq::from_names(names.iter().cloned()).unwrap())
            .collect();
        let mut rotated = seqs.clone();
        let pivot = rot % rotated.len().max(1);
        rotated.rotate_left(pivot);
        let a = build_weighted_training_tree(&seqs);
        let b = build_weighted_training_tree(&rotated);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn child_weight_bounded_by_parent(paths in arb_path_set()) {
        let seqs: Vec<PathSeq> = paths
            .iter()
            .map(|names| PathSeq::from_names(names.iter().cloned()).unwrap())
            .collect();
        let tree = build_weighted_training_tree(&seqs);
        tree.visit(|path, weight| {
            for (seg, child_weight) in tree.children_with_weights(path) {
                let _ = seg;
                assert!(child_weight <= weight, "child heavier than parent at {path}");
            }
        });
        // no inserted path was empty, so root children sum to root weight
        let root_sum: u64 = tree
            .children_with_weights(&PathSeq::root())
            .iter()
            .map(|(_, w)| w)
            .sum();
        prop_assert_eq!(root_sum, tree.root().weight);
    }

    #[test]
    fn tree_json_round_trips(paths in arb_path_set()) {
        let seqs: Vec<PathSeq> = paths
            .iter()
            .map(|names| PathSeq::from_names(names.iter().cloned()).unwrap())
            .collect();
        let tree = build_weighted_training_tree(&seqs);
        let json = serde_json::to_string(&tree).unwrap();
        let back: WeightedTree = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(tree, back);
    }

    #[test]
    fn coverage_monotone_under_wordlist_growth(
        paths in arb_path_set(),
        extra in proptest::collection::vec(arb_segment(), 0..6),
    ) {
        let mut corpus = Corpus::new();
        for names in &paths {
            corpus.insert("site.test", PathSeq::from_names(names.iter().cloned()).unwrap());
        }
        let small_words: Vec<String> = paths.iter().flatten().step_by(2).cloned().collect();
        let small = Wordlist::from_words("small", &small_words);
        let big_words: Vec<String> = small_words.iter().cloned().chain(extra).collect();
        let big = Wordlist::from_words("big", &big_words);
        let rs = coverage_ratio(&corpus, &small);
        let rb = coverage_ratio(&corpus, &big);
        for (a, b) in rs.per_depth.iter().zip(rb.per_depth.iter()) {
            prop_assert!(a.ratio <= b.ratio + 1e-12);
        }
        prop_assert!(rs.overall_ratio <= rb.overall_ratio + 1e-12);
    }

    #[test]
    fn stem_roots_never_exceed_dirs(paths in arb_path_set()) {
        let mut corpus = Corpus::new();
        for names in &paths {
            corpus.insert("site.test", PathSeq::from_names(names.iter().cloned()).unwrap());
        }
        let report = stem_reduction(&corpus);
        prop_assert!(report.n_unique_roots <= report.n_unique_dirs);
        prop_assert_eq!(report.reduction, report.n_unique_dirs - report.n_unique_roots);
    }
}

fn check_trace_invariants(trace: &AttackTrace, budget: u64) {
    let mut seen = HashSet::new();
    for (i, event) in trace.events.iter().enumerate() {
        assert_eq!(event.index, i as u64 + 1, "indices contiguous");
        assert!(seen.insert(event.path.clone()), "duplicate request {}", event.path);
    }
    assert_eq!(
        trace.successes,
        trace.events.iter().filter(|e| e.hit).count() as u64
    );
    assert!(trace.request_count() <= budget);
    let at_budget = trace.request_count() == budget;
    assert_eq!(trace.terminated_by == Termination::Budget, at_budget);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn strategy_traces_respect_invariants(
        site_paths in arb_path_set(),
        wl in proptest::collection::vec(arb_segment(), 1..10),
        budget in 0u64..60,
    ) {
        let seqs: Vec<PathSeq> = site_paths
            .iter()
            .map(|names| PathSeq::from_names(names.iter().cloned()).unwrap())
            .collect();
        let site = build_weighted_training_tree(&seqs);
        let wordlist = Wordlist::from_words("w", &wl);
        let tree = build_weighted_training_tree(&seqs[..seqs.len() / 2]);

        let mut corpus = Corpus::new();
        for p in &seqs {
            corpus.insert("site.test", p.clone());
        }
        let vocab = build_vocabulary(&corpus, 1);
        let model = LanguageModel::init(vocab, HyperParams {
            min_freq: 1,
            embedding_size: 8,
            n_layers: 1,
            dropout_rate: 0.0,
            ..HyperParams::default()
        });

        for trace in [
            run_breadth(&mut SimOracle::new(&site, budget), &wordlist),
            run_depth(&mut SimOracle::new(&site, budget), &wordlist),
            run_probabilistic(&mut SimOracle::new(&site, budget), &tree, &wordlist),
            run_lm(&mut SimOracle::new(&site, budget), &model, 5),
        ] {
            check_trace_invariants(&trace, budget);
        }
    }

    #[test]
    fn topk_is_a_prefix_of_the_full_ranking(
        site_paths in arb_path_set(),
        k in 1usize..8,
    ) {
        let mut corpus = Corpus::new();
        for names in &site_paths {
            corpus.insert("site.test", PathSeq::from_names(names.iter().cloned()).unwrap());
        }
        let vocab = build_vocabulary(&corpus, 1);
        let full_len = vocab.size() - 4;
        let model = LanguageModel::init(vocab, HyperParams {
            min_freq: 1,
            embedding_size: 8,
            n_layers: 1,
            dropout_rate: 0.0,
            ..HyperParams::default()
        });
        let full = model.predict_topk(&PathSeq::root(), full_len + 10);
        let topk = model.predict_topk(&PathSeq::root(), k);
        prop_assert_eq!(full.len(), full_len);
        let k = k.min(full.len());
        prop_assert_eq!(&topk[..], &full[..k]);
    }
}
