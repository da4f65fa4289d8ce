//! Python bindings: path normalization, weighted trees, the language
//! model, and the four attack simulations.
//!
//! Paths cross the boundary as plain strings ("/news/2024"); corpora as
//! dicts mapping domain to a list of path strings.

use dirsim::analysis;
use dirsim::dataset::{generate_synthetic_corpus, Corpus, Wordlist};
use dirsim::fstree;
use dirsim::lm;
use dirsim::strategies::{self, AttackTrace, SimOracle};
use dirsim::url_model;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use std::collections::{BTreeMap, HashSet};
use std::path::PathBuf;

fn parse_path(path: &str) -> PyResult<url_model::PathSeq> {
    url_model::normalize_path(path).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn parse_corpus(sites: BTreeMap<String, Vec<String>>) -> PyResult<Corpus> {
    let mut corpus = Corpus::new();
    for (domain, paths) in sites {
        corpus.ensure_site(&domain);
        for p in paths {
            let seq = parse_path(&p)?;
            if !seq.is_root() {
                corpus.insert(&domain, seq);
            }
        }
    }
    Ok(corpus)
}

/// (request index, rendered path, hit) rows of one simulation trace.
type TraceRows = Vec<(u64, String, bool)>;

fn trace_rows(trace: &AttackTrace) -> TraceRows {
    trace
        .events
        .iter()
        .map(|e| (e.index, e.path.render(), e.hit))
        .collect()
}

/// Normalize a raw URL path into directory segments.
#[pyfunction]
fn normalize_path(path: &str) -> PyResult<Vec<String>> {
    let seq = parse_path(path)?;
    Ok(seq.iter().map(|s| s.as_str().to_string()).collect())
}

/// Depth of a raw URL path after normalization.
#[pyfunction]
fn path_depth(path: &str) -> PyResult<usize> {
    Ok(parse_path(path)?.depth())
}

/// Porter stem of one word (lowercase-folded).
#[pyfunction]
fn porter_stem(word: &str) -> String {
    analysis::porter_stem(word)
}

/// Jaccard similarity of two collections treated as sets.
#[pyfunction]
fn jaccard(a: Vec<String>, b: Vec<String>) -> f64 {
    let sa: HashSet<String> = a.into_iter().collect();
    let sb: HashSet<String> = b.into_iter().collect();
    analysis::jaccard(&sa, &sb)
}

/// Deterministic synthetic corpus: {domain: [path, ...]}.
#[pyfunction]
fn synth_corpus(seed: u64, sites: usize, paths_per_site: usize) -> BTreeMap<String, Vec<String>> {
    let (corpus, _) = generate_synthetic_corpus(seed, sites, paths_per_site);
    corpus
        .sites()
        .map(|(domain, paths)| {
            (
                domain.to_string(),
                paths.iter().map(|p| p.render()).collect(),
            )
        })
        .collect()
}

/// Rooted tree of directory segments with per-node repetition counters.
#[pyclass]
struct WeightedTree {
    inner: fstree::WeightedTree,
}

#[pymethods]
impl WeightedTree {
    #[new]
    fn new() -> Self {
        WeightedTree { inner: fstree::WeightedTree::new() }
    }

    /// Build a tree from an iterable of path strings.
    #[staticmethod]
    fn from_paths(paths: Vec<String>) -> PyResult<Self> {
        let mut inner = fstree::WeightedTree::new();
        for p in paths {
            inner.insert_path(&parse_path(&p)?);
        }
        Ok(WeightedTree { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner =
            serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(WeightedTree { inner })
    }

    fn insert_path(&mut self, path: &str) -> PyResult<()> {
        self.inner.insert_path(&parse_path(path)?);
        Ok(())
    }

    fn contains(&self, path: &str) -> PyResult<bool> {
        Ok(self.inner.contains(&parse_path(path)?))
    }

    /// Child (segment, weight) pairs, heaviest first.
    fn children_with_weights(&self, path: &str) -> PyResult<Vec<(String, u64)>> {
        Ok(self
            .inner
            .children_with_weights(&parse_path(path)?)
            .into_iter()
            .map(|(seg, w)| (seg.as_str().to_string(), w))
            .collect())
    }

    /// Subtree keeping only wordlist segments whose parents survive.
    fn prune_to_wordlist(&self, words: Vec<String>) -> PyResult<Self> {
        let segments: Vec<url_model::Segment> = words
            .iter()
            .map(|w| url_model::Segment::new(w.clone()))
            .collect::<Result<_, _>>()
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(WeightedTree { inner: fstree::build_wordlist_tree(&self.inner, &segments) })
    }

    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    fn total_paths(&self) -> u64 {
        self.inner.total_paths()
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }
}

/// Per-epoch (epoch, train loss, validation loss) rows.
type TrainingCurve = Vec<(usize, f64, f64)>;

/// Trained next-directory language model.
#[pyclass]
struct LanguageModel {
    inner: lm::LanguageModel,
}

#[pymethods]
impl LanguageModel {
    /// Train on {domain: [path, ...]} corpora. `val` defaults to training
    /// on itself.
    #[staticmethod]
    #[pyo3(signature = (
        corpus, val=None, max_epochs=100, embedding_size=32, n_layers=2, min_freq=1,
        dropout=0.0, learning_rate=0.01, batch_size=32, max_depth=10, patience=10, seed=0
    ))]
    #[allow(clippy::too_many_arguments)]
    fn train(
        corpus: BTreeMap<String, Vec<String>>,
        val: Option<BTreeMap<String, Vec<String>>>,
        max_epochs: usize,
        embedding_size: usize,
        n_layers: usize,
        min_freq: u32,
        dropout: f64,
        learning_rate: f64,
        batch_size: usize,
        max_depth: usize,
        patience: usize,
        seed: u64,
    ) -> PyResult<(Self, TrainingCurve)> {
        let train_c = parse_corpus(corpus)?;
        let val_c = match val {
            Some(v) => parse_corpus(v)?,
            None => train_c.clone(),
        };
        let hparams = lm::HyperParams {
            max_depth,
            min_freq,
            embedding_size,
            n_layers,
            dropout_rate: dropout,
            learning_rate,
            batch_size,
            patience,
            max_epochs,
            seed,
        };
        let (model, report) = lm::train(&train_c, &val_c, &hparams)
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        let curve = report
            .epochs
            .iter()
            .map(|e| (e.epoch, e.train_loss, e.val_loss))
            .collect();
        Ok((LanguageModel { inner: model }, curve))
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let inner =
            lm::load_checkpoint(&path).map_err(|e| PyIOError::new_err(e.to_string()))?;
        Ok(LanguageModel { inner })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        lm::save_checkpoint(&self.inner, &path).map_err(|e| PyIOError::new_err(e.to_string()))
    }

    fn vocab_size(&self) -> usize {
        self.inner.vocab.size()
    }

    /// Top-k (directory, probability) continuations of a path.
    fn predict_topk(&self, path: &str, k: usize) -> PyResult<Vec<(String, f64)>> {
        Ok(self
            .inner
            .predict_topk(&parse_path(path)?, k)
            .into_iter()
            .map(|(seg, p)| (seg.as_str().to_string(), p))
            .collect())
    }

    /// Nearest vocabulary words by embedding cosine similarity.
    fn embedding_similarity(&self, word: &str, n: usize) -> PyResult<Vec<(String, f64)>> {
        self.inner
            .embedding_similarity(word, n)
            .map(|pairs| {
                pairs
                    .into_iter()
                    .map(|(seg, s)| (seg.as_str().to_string(), s))
                    .collect()
            })
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }
}

fn site_tree_of(paths: Vec<String>) -> PyResult<fstree::WeightedTree> {
    let mut tree = fstree::WeightedTree::new();
    for p in paths {
        tree.insert_path(&parse_path(&p)?);
    }
    Ok(tree)
}

/// Breadth-first attack simulation. Returns (successes, [(index, path, hit)]).
#[pyfunction]
fn run_breadth(
    site_paths: Vec<String>,
    wordlist: Vec<String>,
    budget: u64,
) -> PyResult<(u64, TraceRows)> {
    let site = site_tree_of(site_paths)?;
    let words = Wordlist::from_words("wordlist", &wordlist);
    let trace = strategies::run_breadth(&mut SimOracle::new(&site, budget), &words);
    Ok((trace.successes, trace_rows(&trace)))
}

/// Depth-first attack simulation.
#[pyfunction]
fn run_depth(
    site_paths: Vec<String>,
    wordlist: Vec<String>,
    budget: u64,
) -> PyResult<(u64, TraceRows)> {
    let site = site_tree_of(site_paths)?;
    let words = Wordlist::from_words("wordlist", &wordlist);
    let trace = strategies::run_depth(&mut SimOracle::new(&site, budget), &words);
    Ok((trace.successes, trace_rows(&trace)))
}

/// Probabilistic attack simulation over a weighted tree, with a
/// breadth-first fallback wordlist.
#[pyfunction]
#[pyo3(signature = (site_paths, tree, budget, fallback=None))]
fn run_probabilistic(
    site_paths: Vec<String>,
    tree: &WeightedTree,
    budget: u64,
    fallback: Option<Vec<String>>,
) -> PyResult<(u64, TraceRows)> {
    let site = site_tree_of(site_paths)?;
    let words = Wordlist::from_words("fallback", fallback.unwrap_or_default());
    let trace =
        strategies::run_probabilistic(&mut SimOracle::new(&site, budget), &tree.inner, &words);
    Ok((trace.successes, trace_rows(&trace)))
}

/// Language-model attack simulation.
#[pyfunction]
fn run_lm(
    site_paths: Vec<String>,
    model: &LanguageModel,
    top_predicts: usize,
    budget: u64,
) -> PyResult<(u64, TraceRows)> {
    let site = site_tree_of(site_paths)?;
    let trace = strategies::run_lm(&mut SimOracle::new(&site, budget), &model.inner, top_predicts);
    Ok((trace.successes, trace_rows(&trace)))
}

#[pymodule]
fn dirsim_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(normalize_path, m)?)?;
    m.add_function(wrap_pyfunction!(path_depth, m)?)?;
    m.add_function(wrap_pyfunction!(porter_stem, m)?)?;
    m.add_function(wrap_pyfunction!(jaccard, m)?)?;
    m.add_function(wrap_pyfunction!(synth_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(run_breadth, m)?)?;
    m.add_function(wrap_pyfunction!(run_depth, m)?)?;
    m.add_function(wrap_pyfunction!(run_probabilistic, m)?)?;
    m.add_function(wrap_pyfunction!(run_lm, m)?)?;
    m.add_class::<WeightedTree>()?;
    m.add_class::<LanguageModel>()?;
    Ok(())
}
