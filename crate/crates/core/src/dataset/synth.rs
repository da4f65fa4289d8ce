//! Deterministic synthetic corpus generation.
//!
//! Sites are sampled from a fixed probabilistic directory grammar: a pool of
//! high-frequency roots shared across sites (news, about, login, ...), each
//! with a category-specific child pool (years under containers, months under
//! years, topics under documentation roots, ...), plus per-site noise
//! segments that no other site shares. Every site observes only a subset of
//! the grammar, so merged trees built from one group of sites never cover
//! another group completely. Generation is fully determined by the seed.

use super::Corpus;
use crate::url_model::PathSeq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

const CONTAINER_ROOTS: &[&str] = &["news", "blog", "events", "press", "archive", "updates"];
const DOC_ROOTS: &[&str] = &["docs", "help", "support", "guides"];
const ACCOUNT_ROOTS: &[&str] = &["account", "profile", "settings", "admin"];
const MEDIA_ROOTS: &[&str] = &["media", "images", "gallery", "downloads"];
const ORG_ROOTS: &[&str] = &["about", "team", "careers", "research"];
const SHOP_ROOTS: &[&str] = &["shop", "products", "store"];
const EDU_ROOTS: &[&str] = &["courses", "students", "library"];
const LEAF_ROOTS: &[&str] = &[
    "login", "register", "contact", "search", "sitemap", "privacy", "terms", "rss",
];

const YEARS: &[&str] = &[
    "2015", "2016", "2017", "2018", "2019", "2020", "2021", "2022", "2023", "2024",
];
const MONTHS: &[&str] = &[
    "01", "02", "03", "04", "05", "06", "07", "08", "09", "10", "11", "12",
];
const DOC_ITEMS: &[&str] = &[
    "install", "setup", "faq", "api", "reference", "troubleshooting", "changelog", "examples",
];
const ACCOUNT_ITEMS: &[&str] = &[
    "info", "security", "password", "email", "notifications", "billing", "preferences", "sessions",
];
const MEDIA_ITEMS: &[&str] = &["photos", "videos", "logos", "banners", "icons", "audio"];
const ORG_ITEMS: &[&str] = &["history", "mission", "staff", "jobs", "publications", "partners"];
const SHOP_ITEMS: &[&str] = &["new", "sale", "featured", "men", "women", "kids"];
const EDU_ITEMS: &[&str] = &["undergraduate", "graduate", "admissions", "programs", "catalog"];

/// Fraction of paths that carry a site-private noise segment.
const NOISE_RATE: f64 = 0.22;
/// Chance that a non-leaf root descends into its child pool at all.
const DESCEND_RATE: f64 = 0.85;
/// Chance that a container/year path descends further into a month.
const MONTH_RATE: f64 = 0.6;

/// The ground-truth grammar a synthetic corpus was drawn from.
#[derive(Debug, Clone, Serialize)]
pub struct SyntheticGrammar {
    pub seed: u64,
    pub n_sites: usize,
    pub paths_per_site: usize,
    pub shared_roots: Vec<String>,
    pub child_pools: Vec<(String, Vec<String>)>,
    pub noise_rate: f64,
    pub descend_rate: f64,
    pub month_rate: f64,
}

fn root_pool() -> Vec<&'static str> {
    CONTAINER_ROOTS
        .iter()
        .chain(DOC_ROOTS)
        .chain(ACCOUNT_ROOTS)
        .chain(MEDIA_ROOTS)
        .chain(ORG_ROOTS)
        .chain(SHOP_ROOTS)
        .chain(EDU_ROOTS)
        .chain(LEAF_ROOTS)
        .copied()
        .collect()
}

fn child_pool(root: &str) -> Option<&'static [&'static str]> {
    if CONTAINER_ROOTS.contains(&root) {
        Some(YEARS)
    } else if DOC_ROOTS.contains(&root) {
        Some(DOC_ITEMS)
    } else if ACCOUNT_ROOTS.contains(&root) {
        Some(ACCOUNT_ITEMS)
    } else if MEDIA_ROOTS.contains(&root) {
        Some(MEDIA_ITEMS)
    } else if ORG_ROOTS.contains(&root) {
        Some(ORG_ITEMS)
    } else if SHOP_ROOTS.contains(&root) {
        Some(SHOP_ITEMS)
    } else if EDU_ROOTS.contains(&root) {
        Some(EDU_ITEMS)
    } else {
        None
    }
}

/// Picks an index with probability proportional to `weights`.
fn weighted_index(rng: &mut ChaCha20Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut x = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        x -= w;
        if x <= 0.0 {
            return i;
        }
    }
    weights.len() - 1
}

/// Samples `k` distinct items, weighted, preserving pool order.
fn weighted_subset<'a>(
    rng: &mut ChaCha20Rng,
    pool: &[&'a str],
    weights: &[f64],
    k: usize,
) -> Vec<&'a str> {
    let mut remaining: Vec<usize> = (0..pool.len()).collect();
    let mut picked = Vec::with_capacity(k);
    for _ in 0..k.min(pool.len()) {
        let w: Vec<f64> = remaining.iter().map(|&i| weights[i]).collect();
        let j = weighted_index(rng, &w);
        picked.push(remaining.remove(j));
    }
    picked.sort_unstable();
    picked.into_iter().map(|i| pool[i]).collect()
}

struct SiteModel {
    roots: Vec<&'static str>,
    root_weights: Vec<f64>,
    years: Vec<&'static str>,
    months: Vec<&'static str>,
    noise: Vec<String>,
}

impl SiteModel {
    fn sample(rng: &mut ChaCha20Rng) -> SiteModel {
        let pool = root_pool();
        // Zipf-flavored popularity so early pool entries dominate across
        // sites while the long tail varies.
        let weights: Vec<f64> = (0..pool.len()).map(|i| 1.0 / (1.0 + i as f64 * 0.12)).collect();
        let k = rng.random_range(10..=18);
        let roots = weighted_subset(rng, &pool, &weights, k);
        let root_weights: Vec<f64> = (0..roots.len())
            .map(|i| 1.0 / (1.0 + i as f64 * 0.25))
            .collect();
        let n_years = rng.random_range(4..=7);
        let n_months = rng.random_range(6..=9);
        let uniform_y = vec![1.0; YEARS.len()];
        let uniform_m = vec![1.0; MONTHS.len()];
        let years = weighted_subset(rng, YEARS, &uniform_y, n_years);
        let months = weighted_subset(rng, MONTHS, &uniform_m, n_months);
        let n_noise = rng.random_range(6..=10);
        let noise = (0..n_noise)
            .map(|_| format!("x{:05x}", rng.random_range(0u32..0xfffff)))
            .collect();
        SiteModel { roots, root_weights, years, months, noise }
    }

    fn sample_path(&self, rng: &mut ChaCha20Rng) -> Vec<String> {
        if rng.random_bool(NOISE_RATE) {
            let tok = self.noise[rng.random_range(0..self.noise.len())].clone();
            if rng.random_bool(0.5) {
                return vec![tok];
            }
            let root = self.roots[weighted_index(rng, &self.root_weights)];
            return vec![root.to_string(), tok];
        }
        let root = self.roots[weighted_index(rng, &self.root_weights)];
        let mut path = vec![root.to_string()];
        let Some(pool) = child_pool(root) else {
            return path;
        };
        if !rng.random_bool(DESCEND_RATE) {
            return path;
        }
        if CONTAINER_ROOTS.contains(&root) {
            let year = self.years[rng.random_range(0..self.years.len())];
            path.push(year.to_string());
            if rng.random_bool(MONTH_RATE) {
                let month = self.months[rng.random_range(0..self.months.len())];
                path.push(month.to_string());
            }
        } else {
            let item = pool[rng.random_range(0..pool.len())];
            path.push(item.to_string());
        }
        path
    }
}

/// Generates a deterministic synthetic corpus of `n_sites` sites with up to
/// `paths_per_site` unique paths each, together with the grammar it was
/// drawn from.
pub fn generate_synthetic_corpus(
    grammar_seed: u64,
    n_sites: usize,
    paths_per_site: usize,
) -> (Corpus, SyntheticGrammar) {
    let mut master = ChaCha20Rng::seed_from_u64(grammar_seed);
    let mut corpus = Corpus::new();
    for site_idx in 0..n_sites {
        let mut rng = ChaCha20Rng::seed_from_u64(master.random::<u64>());
        let model = SiteModel::sample(&mut rng);
        let domain = format!("site-{site_idx:03}.synth.test");
        corpus.ensure_site(&domain);
        let mut produced = 0usize;
        let mut attempts = 0usize;
        let max_attempts = paths_per_site.saturating_mul(30).max(30);
        while produced < paths_per_site && attempts < max_attempts {
            attempts += 1;
            let names = model.sample_path(&mut rng);
            let path = PathSeq::from_names(names).expect("grammar emits valid segments");
            let before = corpus.paths(&domain).len();
            corpus.insert(&domain, path);
            if corpus.paths(&domain).len() > before {
                produced += 1;
            }
        }
    }

    let grammar = SyntheticGrammar {
        seed: grammar_seed,
        n_sites,
        paths_per_site,
        shared_roots: root_pool().iter().map(|s| s.to_string()).collect(),
        child_pools: [
            ("containers->years", YEARS),
            ("years->months", MONTHS),
            ("docs", DOC_ITEMS),
            ("account", ACCOUNT_ITEMS),
            ("media", MEDIA_ITEMS),
            ("org", ORG_ITEMS),
            ("shop", SHOP_ITEMS),
            ("edu", EDU_ITEMS),
        ]
        .iter()
        .map(|(name, pool)| {
            (
                name.to_string(),
                pool.iter().map(|s| s.to_string()).collect(),
            )
        })
        .collect(),
        noise_rate: NOISE_RATE,
        descend_rate: DESCEND_RATE,
        month_rate: MONTH_RATE,
    };
    (corpus, grammar)
}
