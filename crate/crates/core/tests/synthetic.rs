//! Derived checks on the synthetic corpus generator and the bundled
//! wordlist fixture.

use dirsim::analysis::{corpus_stats, coverage_ratio, pairwise_site_similarity};
use dirsim::dataset::{generate_synthetic_corpus, load_wordlist, Wordlist};
use dirsim::fstree::build_weighted_training_tree;
use std::collections::{HashMap, HashSet};
use std::path::PathBuf;

fn repo_file(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

#[test]
fn bundled_big_wordlist_has_3024_words() {
    let wordlist = load_wordlist(&repo_file("wordlists/big.txt")).unwrap();
    assert_eq!(wordlist.len(), 3024);
}

#[test]
fn synthetic_sites_have_moderate_similarity() {
    let (corpus, _) = generate_synthetic_corpus(7, 50, 200);
    let (avg, _) = pairwise_site_similarity(&corpus).unwrap();
    assert!(avg > 0.0 && avg < 0.5, "mean pairwise Jaccard {avg:.4} outside (0, 0.5)");
}

#[test]
fn merged_tree_weights_match_prefix_counter() {
    // three synthetic sites merged into one training tree
    let (corpus, _) = generate_synthetic_corpus(5, 3, 4);
    let paths: Vec<_> = corpus.all_paths().cloned().collect();
    let tree = build_weighted_training_tree(&paths);

    let mut counts: HashMap<Vec<String>, u64> = HashMap::new();
    for p in &paths {
        for len in 0..=p.depth() {
            let prefix: Vec<String> = p.segments()[..len]
                .iter()
                .map(|s| s.as_str().to_string())
                .collect();
            *counts.entry(prefix).or_default() += 1;
        }
    }
    let mut visited = 0;
    tree.visit(|path, weight| {
        let key: Vec<String> = path.iter().map(|s| s.as_str().to_string()).collect();
        assert_eq!(counts[&key], weight, "weight mismatch at {path}");
        visited += 1;
    });
    assert_eq!(visited, counts.len());
}

#[test]
fn synthetic_stats_match_flat_recount() {
    let (corpus, _) = generate_synthetic_corpus(7, 10, 50);
    let stats = corpus_stats(&corpus);

    // independent flat recount over the rendered corpus
    let mut rendered: Vec<String> = Vec::new();
    let mut per_site: Vec<usize> = Vec::new();
    for (_, paths) in corpus.sites() {
        per_site.push(paths.len());
        rendered.extend(paths.iter().map(|p| p.render()));
    }
    assert_eq!(stats.n_domains, per_site.len());
    assert_eq!(stats.n_paths, rendered.len());
    let dirs: Vec<&str> = rendered
        .iter()
        .flat_map(|p| p.split('/').filter(|s| !s.is_empty()))
        .collect();
    assert_eq!(stats.n_dirs, dirs.len());
    assert_eq!(
        stats.n_unique_dirs,
        dirs.iter().collect::<HashSet<_>>().len()
    );
    let mean = per_site.iter().sum::<usize>() as f64 / per_site.len() as f64;
    assert!((stats.paths_avg - mean).abs() < 1e-12);
}

#[test]
fn coverage_of_own_top_segments_matches_set_oracle() {
    let (corpus, _) = generate_synthetic_corpus(9, 8, 40);
    // wordlist = the corpus's most frequent segments
    let mut freq: HashMap<&str, usize> = HashMap::new();
    for p in corpus.all_paths() {
        for s in p.segments() {
            *freq.entry(s.as_str()).or_default() += 1;
        }
    }
    let mut ranked: Vec<(&str, usize)> = freq.iter().map(|(s, c)| (*s, *c)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let top: Vec<&str> = ranked.iter().take(30).map(|(s, _)| *s).collect();
    let wordlist = Wordlist::from_words("top30", &top);

    let report = coverage_ratio(&corpus, &wordlist);
    let word_set: HashSet<&str> = top.iter().copied().collect();
    let all: HashSet<&str> = freq.keys().copied().collect();
    let covered = all.iter().filter(|s| word_set.contains(*s)).count();
    assert_eq!(report.overall_covered, covered);
    assert_eq!(report.overall_total, all.len());
    assert!((report.overall_ratio - covered as f64 / all.len() as f64).abs() < 1e-12);
}
