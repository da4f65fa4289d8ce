//! Dataset analyses: summary statistics, pairwise site similarity, wordlist
//! coverage by depth, and stemming reduction.
//!
//! All statistics are pure functions over immutable corpora. Standard
//! deviations are population standard deviations throughout, and that
//! convention is recorded in the emitted reports.

mod porter;

pub use porter::porter_stem;

use crate::dataset::{Corpus, Wordlist};
use crate::url_model::Segment;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::hash::Hash;

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("need at least {needed} domains, corpus has {found}")]
    TooFewDomains { needed: usize, found: usize },
}

/// Summary statistics over one corpus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    pub n_domains: usize,
    pub n_paths: usize,
    pub paths_avg: f64,
    pub paths_std: f64,
    pub n_unique_paths: usize,
    pub n_dirs: usize,
    pub n_unique_dirs: usize,
    pub depth_avg: f64,
    pub depth_std: f64,
    pub sim_avg: f64,
    pub sim_std: f64,
}

fn mean_and_pop_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// |a ∩ b| / |a ∪ b|; 1.0 when both sets are empty.
pub fn jaccard<T: Eq + Hash>(a: &HashSet<T>, b: &HashSet<T>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let intersection = a.iter().filter(|x| b.contains(*x)).count();
    let union = a.len() + b.len() - intersection;
    intersection as f64 / union as f64
}

/// The set of distinct directory names of one site.
fn site_dir_set(paths: &[crate::url_model::PathSeq]) -> HashSet<&Segment> {
    paths.iter().flat_map(|p| p.segments()).collect()
}

/// Mean and population std of the Jaccard similarity over every unordered
/// pair of sites, each site viewed as its set of directory names.
pub fn pairwise_site_similarity(corpus: &Corpus) -> Result<(f64, f64), AnalysisError> {
    let sites: Vec<_> = corpus.sites().collect();
    if sites.len() < 2 {
        return Err(AnalysisError::TooFewDomains { needed: 2, found: sites.len() });
    }
    let sets: Vec<HashSet<&Segment>> = sites.iter().map(|(_, p)| site_dir_set(p)).collect();
    let mut sims = Vec::new();
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            sims.push(jaccard(&sets[i], &sets[j]));
        }
    }
    Ok(mean_and_pop_std(&sims))
}

/// Computes every [`StatsReport`] field. Directory counts follow the
/// "every occurrence across unique paths per domain" convention, so
/// domain1/account/info plus domain2/account/settings contribute four
/// directories and three unique ones.
pub fn corpus_stats(corpus: &Corpus) -> StatsReport {
    let per_site_counts: Vec<f64> = corpus.sites().map(|(_, p)| p.len() as f64).collect();
    let (paths_avg, paths_std) = mean_and_pop_std(&per_site_counts);

    let depths: Vec<f64> = corpus.all_paths().map(|p| p.depth() as f64).collect();
    let (depth_avg, depth_std) = mean_and_pop_std(&depths);

    let unique_paths: HashSet<_> = corpus.all_paths().collect();
    let n_dirs: usize = corpus.all_paths().map(|p| p.depth()).sum();
    let unique_dirs: HashSet<&Segment> = corpus.all_paths().flat_map(|p| p.segments()).collect();

    let (sim_avg, sim_std) = pairwise_site_similarity(corpus).unwrap_or((0.0, 0.0));

    StatsReport {
        n_domains: corpus.n_domains(),
        n_paths: corpus.total_paths(),
        paths_avg,
        paths_std,
        n_unique_paths: unique_paths.len(),
        n_dirs,
        n_unique_dirs: unique_dirs.len(),
        depth_avg,
        depth_std,
        sim_avg,
        sim_std,
    }
}

/// Coverage of one depth level: how many of the distinct corpus directory
/// names at this depth appear in the wordlist.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DepthCoverage {
    pub depth: usize,
    pub covered: usize,
    pub total: usize,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub per_depth: Vec<DepthCoverage>,
    pub overall_covered: usize,
    pub overall_total: usize,
    pub overall_ratio: f64,
}

/// Wordlist coverage of the corpus directory names, per depth and pooled.
/// A depth with no directory names never appears; an empty corpus reports
/// an overall ratio of 1.0 (nothing was missed).
pub fn coverage_ratio(corpus: &Corpus, wordlist: &Wordlist) -> CoverageReport {
    let words: HashSet<&Segment> = wordlist.words().iter().collect();
    let mut by_depth: BTreeMap<usize, BTreeSet<&Segment>> = BTreeMap::new();
    for path in corpus.all_paths() {
        for (idx, seg) in path.segments().iter().enumerate() {
            by_depth.entry(idx + 1).or_default().insert(seg);
        }
    }
    let per_depth: Vec<DepthCoverage> = by_depth
        .iter()
        .map(|(&depth, segs)| {
            let covered = segs.iter().filter(|s| words.contains(*s)).count();
            DepthCoverage {
                depth,
                covered,
                total: segs.len(),
                ratio: covered as f64 / segs.len() as f64,
            }
        })
        .collect();

    let pooled: BTreeSet<&Segment> = by_depth.values().flatten().copied().collect();
    let overall_covered = pooled.iter().filter(|s| words.contains(*s)).count();
    let overall_total = pooled.len();
    let overall_ratio = if overall_total == 0 {
        1.0
    } else {
        overall_covered as f64 / overall_total as f64
    };
    CoverageReport { per_depth, overall_covered, overall_total, overall_ratio }
}

/// One surface form under a stem root, with its occurrence share.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StemForm {
    pub form: String,
    pub occurrences: usize,
    pub share_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StemGroup {
    pub root: String,
    pub forms: Vec<StemForm>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StemReport {
    pub n_unique_dirs: usize,
    pub n_unique_roots: usize,
    pub reduction: usize,
    pub reduction_pct: f64,
    /// Roots grouping more than one surface form, largest groups first.
    pub groups: Vec<StemGroup>,
}

/// Applies the Porter stemmer to every distinct directory name and reports
/// the reduction in unique names. Stemming runs on lowercase-folded copies;
/// surface forms keep their case, so "Article" and "article" stay distinct
/// directories that share one root.
pub fn stem_reduction(corpus: &Corpus) -> StemReport {
    let mut occurrences: BTreeMap<&Segment, usize> = BTreeMap::new();
    for path in corpus.all_paths() {
        for seg in path.segments() {
            *occurrences.entry(seg).or_default() += 1;
        }
    }
    let n_unique_dirs = occurrences.len();

    let mut by_root: BTreeMap<String, Vec<(&Segment, usize)>> = BTreeMap::new();
    for (seg, count) in &occurrences {
        by_root
            .entry(porter_stem(seg.as_str()))
            .or_default()
            .push((seg, *count));
    }
    let n_unique_roots = by_root.len();
    let reduction = n_unique_dirs - n_unique_roots;
    let reduction_pct = if n_unique_dirs == 0 {
        0.0
    } else {
        100.0 * reduction as f64 / n_unique_dirs as f64
    };

    let mut groups: Vec<StemGroup> = by_root
        .into_iter()
        .filter(|(_, forms)| forms.len() > 1)
        .map(|(root, mut forms)| {
            let total: usize = forms.iter().map(|(_, c)| c).sum();
            forms.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
            StemGroup {
                root,
                forms: forms
                    .into_iter()
                    .map(|(seg, count)| StemForm {
                        form: seg.as_str().to_string(),
                        occurrences: count,
                        share_pct: 100.0 * count as f64 / total as f64,
                    })
                    .collect(),
            }
        })
        .collect();
    groups.sort_by(|a, b| {
        let ta: usize = a.forms.iter().map(|f| f.occurrences).sum();
        let tb: usize = b.forms.iter().map(|f| f.occurrences).sum();
        tb.cmp(&ta).then_with(|| a.root.cmp(&b.root))
    });

    StemReport { n_unique_dirs, n_unique_roots, reduction, reduction_pct, groups }
}

/// Similarity between two corpora: Jaccard over their directory-name sets
/// and the count of common unique paths.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossSimilarity {
    pub dir_jaccard: f64,
    pub common_dirs: usize,
    pub path_jaccard: f64,
    pub common_paths: usize,
}

pub fn cross_corpus_similarity(a: &Corpus, b: &Corpus) -> CrossSimilarity {
    let dirs_a: HashSet<&Segment> = a.all_paths().flat_map(|p| p.segments()).collect();
    let dirs_b: HashSet<&Segment> = b.all_paths().flat_map(|p| p.segments()).collect();
    let paths_a: HashSet<_> = a.all_paths().collect();
    let paths_b: HashSet<_> = b.all_paths().collect();
    CrossSimilarity {
        dir_jaccard: jaccard(&dirs_a, &dirs_b),
        common_dirs: dirs_a.intersection(&dirs_b).count(),
        path_jaccard: jaccard(&paths_a, &paths_b),
        common_paths: paths_a.intersection(&paths_b).count(),
    }
}
