//! Corpus ingestion, filtering, wordlists, and domain-level splits.
//!
//! A corpus maps each domain to its set of unique normalized paths. Crawl
//! records are filtered to status 200, normalized, and deduplicated per
//! domain. Splits are domain-level so that all paths of one site land in
//! exactly one partition.

mod cdx;
mod synth;

pub use cdx::{CdxClient, CdxConfig};
pub use synth::{generate_synthetic_corpus, SyntheticGrammar};

use crate::url_model::{normalize_path, CrawlRecord, PathSeq, Segment};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};

/// Errors from corpus and wordlist handling.
#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("need at least {needed} domains, corpus has {found}")]
    TooFewDomains { needed: usize, found: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("network error after {attempts} attempts: {message}")]
    Network { attempts: u32, message: String },
    #[error("unknown crawl index {0:?}")]
    UnknownCrawl(String),
    #[error("invalid split fractions: {0}")]
    InvalidSplit(String),
}

/// Map of domain to its unique normalized paths, in first-seen order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    sites: BTreeMap<String, Vec<PathSeq>>,
}

impl Corpus {
    pub fn new() -> Self {
        Corpus::default()
    }

    /// Adds a path to a domain unless that domain already holds it.
    pub fn insert(&mut self, domain: &str, path: PathSeq) {
        let paths = self.sites.entry(domain.to_string()).or_default();
        if !paths.contains(&path) {
            paths.push(path);
        }
    }

    /// Registers a domain even if it has no paths.
    pub fn ensure_site(&mut self, domain: &str) {
        self.sites.entry(domain.to_string()).or_default();
    }

    pub fn n_domains(&self) -> usize {
        self.sites.len()
    }

    pub fn domains(&self) -> impl Iterator<Item = &str> {
        self.sites.keys().map(|s| s.as_str())
    }

    pub fn paths(&self, domain: &str) -> &[PathSeq] {
        self.sites.get(domain).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn sites(&self) -> impl Iterator<Item = (&str, &[PathSeq])> {
        self.sites.iter().map(|(d, p)| (d.as_str(), p.as_slice()))
    }

    /// All paths across all domains, domain order.
    pub fn all_paths(&self) -> impl Iterator<Item = &PathSeq> {
        self.sites.values().flatten()
    }

    pub fn total_paths(&self) -> usize {
        self.sites.values().map(Vec::len).sum()
    }

    /// Keeps only the listed domains.
    pub fn restrict_to(&self, allow: &HashSet<String>) -> Corpus {
        Corpus {
            sites: self
                .sites
                .iter()
                .filter(|(d, _)| allow.contains(*d))
                .map(|(d, p)| (d.clone(), p.clone()))
                .collect(),
        }
    }

    /// Writes newline-delimited JSON rows `{"domain":..,"path":..}`.
    pub fn write_ndjson<W: Write>(&self, mut w: W) -> Result<(), DatasetError> {
        for (domain, paths) in &self.sites {
            for path in paths {
                let row = serde_json::json!({ "domain": domain, "path": path.render() });
                writeln!(w, "{row}")?;
            }
        }
        Ok(())
    }

    /// Reads the NDJSON corpus format written by [`Corpus::write_ndjson`].
    /// Paths are re-normalized on the way in.
    pub fn read_ndjson<R: BufRead>(r: R) -> Result<Corpus, DatasetError> {
        #[derive(Deserialize)]
        struct Row {
            domain: String,
            path: String,
        }
        let mut corpus = Corpus::new();
        for line in r.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row: Row = serde_json::from_str(&line).map_err(|e| {
                std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{e}: {line:?}"))
            })?;
            if let Ok(path) = normalize_path(&row.path) {
                if !path.is_root() {
                    corpus.insert(&row.domain, path);
                }
            }
        }
        Ok(corpus)
    }
}

/// Counters reported by [`ingest`] for records that were skipped.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct IngestStats {
    pub records_seen: usize,
    pub malformed: usize,
    pub non_200: usize,
    pub rejected_paths: usize,
    pub root_paths: usize,
    pub duplicates: usize,
    pub kept: usize,
}

/// Filters a stream of crawl records into a corpus: status 200 only, paths
/// normalized, traversal artifacts and bare roots dropped, duplicates
/// removed per domain.
pub fn ingest<I: IntoIterator<Item = CrawlRecord>>(records: I) -> (Corpus, IngestStats) {
    let mut corpus = Corpus::new();
    let mut stats = IngestStats::default();
    let mut seen: HashSet<(String, PathSeq)> = HashSet::new();
    for record in records {
        stats.records_seen += 1;
        if record.status != 200 {
            stats.non_200 += 1;
            continue;
        }
        let path = match normalize_path(&record.raw_path) {
            Ok(p) => p,
            Err(_) => {
                stats.rejected_paths += 1;
                continue;
            }
        };
        if path.is_root() {
            stats.root_paths += 1;
            continue;
        }
        if !seen.insert((record.domain.clone(), path.clone())) {
            stats.duplicates += 1;
            continue;
        }
        corpus.insert(&record.domain, path);
        stats.kept += 1;
    }
    (corpus, stats)
}

/// Parses newline-delimited crawl-record JSON, counting malformed lines
/// instead of failing on them.
pub fn ingest_lines<I: IntoIterator<Item = String>>(lines: I) -> (Corpus, IngestStats) {
    let mut malformed = 0usize;
    let records: Vec<CrawlRecord> = lines
        .into_iter()
        .filter(|l| !l.trim().is_empty())
        .filter_map(|l| match crate::url_model::parse_crawl_line(&l) {
            Ok(r) => Some(r),
            Err(_) => {
                malformed += 1;
                None
            }
        })
        .collect();
    let (corpus, mut stats) = ingest(records);
    stats.malformed = malformed;
    stats.records_seen += malformed;
    (corpus, stats)
}

/// Domain-level split fractions plus the shuffle seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub val_frac: f64,
    pub test_frac: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train_frac: f64, val_frac: f64, test_frac: f64, seed: u64) -> Result<Self, DatasetError> {
        let spec = SplitSpec { train_frac, val_frac, test_frac, seed };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<(), DatasetError> {
        let fracs = [self.train_frac, self.val_frac, self.test_frac];
        if fracs.iter().any(|f| !(*f > 0.0 && *f < 1.0)) {
            return Err(DatasetError::InvalidSplit(
                "every fraction must lie in (0,1)".into(),
            ));
        }
        let sum: f64 = fracs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(DatasetError::InvalidSplit(format!(
                "fractions sum to {sum}, expected 1"
            )));
        }
        Ok(())
    }
}

/// Splits a corpus into (train, val, test) by domain. Domains are shuffled
/// with a seeded RNG; validation and test counts are rounded and the
/// remainder goes to training.
pub fn split_by_domain(
    corpus: &Corpus,
    spec: &SplitSpec,
) -> Result<(Corpus, Corpus, Corpus), DatasetError> {
    spec.validate()?;
    let n = corpus.n_domains();
    if n < 3 {
        return Err(DatasetError::TooFewDomains { needed: 3, found: n });
    }
    let mut domains: Vec<String> = corpus.domains().map(String::from).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    domains.shuffle(&mut rng);

    let n_val = (n as f64 * spec.val_frac).round() as usize;
    let n_test = (n as f64 * spec.test_frac).round() as usize;
    let n_train = n.saturating_sub(n_val + n_test);

    let pick = |slice: &[String]| -> Corpus {
        let allow: HashSet<String> = slice.iter().cloned().collect();
        corpus.restrict_to(&allow)
    };
    let train = pick(&domains[..n_train]);
    let val = pick(&domains[n_train..n_train + n_val]);
    let test = pick(&domains[n_train + n_val..]);
    Ok((train, val, test))
}

/// A named, ordered list of unique candidate directory names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Wordlist {
    pub name: String,
    words: Vec<Segment>,
}

impl Wordlist {
    /// Builds a wordlist from candidate names, dropping empties/invalid
    /// entries and duplicates while keeping first occurrences in order.
    pub fn from_words<I, S>(name: &str, words: I) -> Wordlist
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for w in words {
            if let Ok(seg) = Segment::new(w.as_ref()) {
                if seen.insert(seg.clone()) {
                    out.push(seg);
                }
            }
        }
        Wordlist { name: name.to_string(), words: out }
    }

    pub fn words(&self) -> &[Segment] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, seg: &Segment) -> bool {
        self.words.contains(seg)
    }
}

/// Loads a newline-delimited wordlist file. Blank lines and lines starting
/// with '#' are skipped; duplicates keep the first occurrence.
pub fn load_wordlist(path: &std::path::Path) -> Result<Wordlist, DatasetError> {
    let text = std::fs::read_to_string(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "wordlist".to_string());
    let words = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    Ok(Wordlist::from_words(&name, words))
}
