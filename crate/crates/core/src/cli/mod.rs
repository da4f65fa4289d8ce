//! Command-line pipelines: fetch, ingest, analyze, build trees, train,
//! simulate, sweep, and report.
//!
//! Every run writes a `manifest.json` next to its outputs carrying the
//! resolved configuration, the seed, and FNV-1a digests of the input files,
//! so a pipeline can be re-run byte-identically. Flags win over the
//! optional JSON config file; the crawl-index base URL may additionally be
//! set through the DIRSIM_INDEX_URL environment variable.

use crate::analysis;
use crate::dataset::{
    self, generate_synthetic_corpus, load_wordlist, CdxClient, CdxConfig, Corpus, SplitSpec,
    Wordlist,
};
use crate::eval::{self, BinSpec, EvalResult};
use crate::fstree::{build_weighted_training_tree, build_wordlist_tree, WeightedTree};
use crate::lm::{self, HyperParams};
use crate::strategies::{
    run_breadth, run_depth, run_lm, run_probabilistic, AttackTrace, SimOracle, DEFAULT_BUDGET,
};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "dirsim",
    version,
    about = "Offline directory brute-forcing simulator and evaluation harness"
)]
struct Cli {
    /// JSON config file with defaults; explicit flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

/// Defaults loadable from --config; every field is optional.
#[derive(Debug, Default, Deserialize)]
struct FileConfig {
    seed: Option<u64>,
    budget: Option<u64>,
    index_url: Option<String>,
    crawl_id: Option<String>,
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Fetch crawl records for domains from a public crawl index.
    Fetch(FetchArgs),
    /// Filter raw crawl records into a normalized corpus.
    Ingest(IngestArgs),
    /// Split a corpus into train/val/test by domain.
    Split(SplitArgs),
    /// Summary statistics of a corpus.
    Stats(StatsArgs),
    /// Wordlist coverage ratios by depth.
    Coverage(CoverageArgs),
    /// Pairwise site similarity, or similarity between two corpora.
    Similarity(SimilarityArgs),
    /// Stemming reduction analysis.
    Stem(StemArgs),
    /// Build a weighted training tree from a corpus.
    BuildTree(BuildTreeArgs),
    /// Prune a weighted tree to a wordlist.
    BuildWordlistTree(BuildWordlistTreeArgs),
    /// Train the language model.
    Train(TrainArgs),
    /// Grid-search hyperparameters and keep the best model.
    Gridsearch(GridSearchArgs),
    /// Finite-difference gradient check on a small model.
    Gradcheck(GradcheckArgs),
    /// Simulate one attack strategy against every target site.
    Simulate(SimulateArgs),
    /// Sweep the LM strategy over several top-predictions values.
    Sweep(SweepArgs),
    /// Merge simulation results into comparison tables and charts.
    Report(ReportArgs),
    /// Generate a synthetic corpus from the built-in grammar.
    Synth(SynthArgs),
}

#[derive(Args)]
struct FetchArgs {
    /// Domain(s) to query, repeatable.
    #[arg(long, required = true)]
    domain: Vec<String>,
    #[arg(long)]
    index_url: Option<String>,
    #[arg(long)]
    crawl_id: Option<String>,
    /// Concurrent page fetches.
    #[arg(long)]
    jobs: Option<usize>,
    /// First retry delay in milliseconds (doubles per retry, 5 attempts).
    #[arg(long, default_value_t = 500)]
    backoff_ms: u64,
    /// Output crawl-record NDJSON file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct IngestArgs {
    /// Crawl-record NDJSON input.
    #[arg(long)]
    input: PathBuf,
    /// Corpus NDJSON output.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 0.7)]
    train_frac: f64,
    #[arg(long, default_value_t = 0.1)]
    val_frac: f64,
    #[arg(long, default_value_t = 0.2)]
    test_frac: f64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct CoverageArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    wordlist: PathBuf,
    /// Emit one row per depth in addition to the pooled ratio.
    #[arg(long)]
    by_depth: bool,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SimilarityArgs {
    #[arg(long)]
    input: PathBuf,
    /// Second corpus: report cross-corpus similarity instead.
    #[arg(long)]
    other: Option<PathBuf>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct StemArgs {
    #[arg(long)]
    input: PathBuf,
    /// Cap on reported multi-form root groups.
    #[arg(long, default_value_t = 20)]
    max_groups: usize,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct BuildTreeArgs {
    /// Corpus NDJSON input (training paths, all domains merged).
    #[arg(long)]
    input: PathBuf,
    /// Weighted-tree JSON output.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BuildWordlistTreeArgs {
    /// Weighted training tree JSON.
    #[arg(long)]
    tree: PathBuf,
    #[arg(long)]
    wordlist: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct HyperArgs {
    #[arg(long, default_value_t = 10)]
    max_depth: usize,
    #[arg(long, default_value_t = 3)]
    min_freq: u32,
    #[arg(long, default_value_t = 128)]
    embedding_size: usize,
    #[arg(long, default_value_t = 2)]
    n_layers: usize,
    #[arg(long, default_value_t = 0.2)]
    dropout: f64,
    #[arg(long, default_value_t = 1e-3)]
    learning_rate: f64,
    #[arg(long, default_value_t = 64)]
    batch_size: usize,
    #[arg(long, default_value_t = 10)]
    patience: usize,
    #[arg(long, default_value_t = 200)]
    max_epochs: usize,
}

impl HyperArgs {
    fn to_hparams(&self, seed: u64) -> HyperParams {
        HyperParams {
            max_depth: self.max_depth,
            min_freq: self.min_freq,
            embedding_size: self.embedding_size,
            n_layers: self.n_layers,
            dropout_rate: self.dropout,
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            patience: self.patience,
            max_epochs: self.max_epochs,
            seed,
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    val: PathBuf,
    #[command(flatten)]
    hyper: HyperArgs,
    #[arg(long)]
    seed: Option<u64>,
    /// Model checkpoint output.
    #[arg(long)]
    out: PathBuf,
    /// Per-epoch loss curve CSV (default: loss.csv next to the checkpoint).
    #[arg(long)]
    loss_csv: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum GridKind {
    Desk,
    Full,
}

#[derive(Args)]
struct GridSearchArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    val: PathBuf,
    #[arg(long, value_enum, default_value = "desk")]
    grid: GridKind,
    /// Epoch cap applied to every configuration.
    #[arg(long, default_value_t = 30)]
    max_epochs: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    report_csv: Option<PathBuf>,
}

#[derive(Args)]
struct GradcheckArgs {
    #[arg(long)]
    seed: Option<u64>,
    /// Vocabulary size of the fixture model (specials included).
    #[arg(long, default_value_t = 50)]
    vocab: usize,
    #[arg(long, default_value_t = 16)]
    embedding_size: usize,
    #[arg(long, default_value_t = 2)]
    n_layers: usize,
    #[arg(long, default_value_t = 1e-3)]
    threshold: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyKind {
    Breadth,
    Depth,
    Prob,
    Lm,
}

impl StrategyKind {
    fn name(self) -> &'static str {
        match self {
            StrategyKind::Breadth => "breadth",
            StrategyKind::Depth => "depth",
            StrategyKind::Prob => "prob",
            StrategyKind::Lm => "lm",
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    strategy: StrategyKind,
    /// Target corpus NDJSON; one simulation per domain.
    #[arg(long)]
    targets: PathBuf,
    #[arg(long)]
    budget: Option<u64>,
    /// Wordlist for breadth/depth and the probabilistic fallback.
    #[arg(long)]
    wordlist: Option<PathBuf>,
    /// Weighted tree JSON for the probabilistic strategy.
    #[arg(long)]
    tree: Option<PathBuf>,
    /// Model checkpoint for the LM strategy.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value_t = 500)]
    top_predicts: usize,
    /// Parallel target simulations.
    #[arg(long)]
    jobs: Option<usize>,
    /// Label recorded in the result (defaults to the wordlist/tree name).
    #[arg(long)]
    label: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    targets: PathBuf,
    #[arg(long)]
    model: PathBuf,
    /// Comma-separated top-predictions values.
    #[arg(long, value_delimiter = ',')]
    ks: Option<Vec<usize>>,
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// eval.json files produced by `simulate`, in presentation order.
    #[arg(long, required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 50)]
    sites: usize,
    #[arg(long, default_value_t = 200)]
    paths_per_site: usize,
    /// Corpus NDJSON output.
    #[arg(long)]
    out: PathBuf,
    /// Ground-truth grammar JSON output.
    #[arg(long)]
    grammar_out: Option<PathBuf>,
}

/// Entry point; returns the process exit code.
pub fn run<I: IntoIterator<Item = String>>(argv: I) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap exits 2 for usage errors, 0 for --help/--version
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let config = match load_file_config(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return 1;
        }
    };
    match dispatch(cli.command, &config) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn load_file_config(path: Option<&Path>) -> Result<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading config {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", p.display()))
        }
    }
}

fn dispatch(command: Command, config: &FileConfig) -> Result<()> {
    match command {
        Command::Fetch(args) => cmd_fetch(args, config),
        Command::Ingest(args) => cmd_ingest(args),
        Command::Split(args) => cmd_split(args, config),
        Command::Stats(args) => cmd_stats(args),
        Command::Coverage(args) => cmd_coverage(args),
        Command::Similarity(args) => cmd_similarity(args),
        Command::Stem(args) => cmd_stem(args),
        Command::BuildTree(args) => cmd_build_tree(args),
        Command::BuildWordlistTree(args) => cmd_build_wordlist_tree(args),
        Command::Train(args) => cmd_train(args, config),
        Command::Gridsearch(args) => cmd_gridsearch(args, config),
        Command::Gradcheck(args) => cmd_gradcheck(args, config),
        Command::Simulate(args) => cmd_simulate(args, config),
        Command::Sweep(args) => cmd_sweep(args, config),
        Command::Report(args) => cmd_report(args),
        Command::Synth(args) => cmd_synth(args, config),
    }
}

// ---- manifest -------------------------------------------------------------

/// FNV-1a 64-bit digest, hex-encoded.
fn digest_file(path: &Path) -> Result<String> {
    let bytes =
        std::fs::read(path).with_context(|| format!("digesting input {}", path.display()))?;
    let mut hash: u64 = 0xcbf29ce484222325;
    for b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    Ok(format!("{hash:016x}"))
}

fn write_manifest(
    command: &str,
    dir: &Path,
    config: serde_json::Value,
    inputs: &[&Path],
    outputs: &[&Path],
) -> Result<()> {
    let mut digests = BTreeMap::new();
    for input in inputs {
        digests.insert(input.display().to_string(), digest_file(input)?);
    }
    let manifest = serde_json::json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
        "inputs": digests,
        "outputs": outputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
    });
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

fn out_dir_of(file: &Path) -> &Path {
    file.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."))
}

// ---- IO helpers -----------------------------------------------------------

fn read_corpus(path: &Path) -> Result<Corpus> {
    let file =
        std::fs::File::open(path).with_context(|| format!("opening corpus {}", path.display()))?;
    Corpus::read_ndjson(std::io::BufReader::new(file))
        .with_context(|| format!("parsing corpus {}", path.display()))
}

fn write_corpus(corpus: &Corpus, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    let mut file = std::fs::File::create(path)
        .with_context(|| format!("creating corpus {}", path.display()))?;
    corpus.write_ndjson(&mut file)?;
    Ok(())
}

fn read_tree(path: &Path) -> Result<WeightedTree> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading tree {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing tree {}", path.display()))
}

fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, serde_json::to_string(value)?)?;
    Ok(())
}

fn resolve_seed(flag: Option<u64>, config: &FileConfig) -> u64 {
    flag.or(config.seed).unwrap_or(0)
}

fn resolve_budget(flag: Option<u64>, config: &FileConfig) -> u64 {
    flag.or(config.budget).unwrap_or(DEFAULT_BUDGET)
}

// ---- subcommands ----------------------------------------------------------

fn cmd_fetch(args: FetchArgs, config: &FileConfig) -> Result<()> {
    let index_url = args
        .index_url
        .clone()
        .or_else(|| std::env::var("DIRSIM_INDEX_URL").ok())
        .or_else(|| config.index_url.clone())
        .unwrap_or_else(|| CdxConfig::default().index_url);
    let crawl_id = args
        .crawl_id
        .clone()
        .or_else(|| config.crawl_id.clone())
        .unwrap_or_else(|| CdxConfig::default().crawl_id);
    let jobs = args.jobs.or(config.jobs).unwrap_or(1);
    let client = CdxClient::new(CdxConfig {
        index_url: index_url.clone(),
        crawl_id: crawl_id.clone(),
        max_attempts: 5,
        backoff_base: std::time::Duration::from_millis(args.backoff_ms),
        jobs,
    });
    let mut out = std::fs::File::create(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let mut total = 0usize;
    for domain in &args.domain {
        let records = client.fetch_domain(domain)?;
        total += records.len();
        for record in &records {
            use std::io::Write;
            writeln!(
                out,
                "{}",
                serde_json::json!({
                    "domain": record.domain,
                    "path": record.raw_path,
                    "status": record.status,
                })
            )?;
        }
        eprintln!("{domain}: {} records", records.len());
    }
    println!("fetched {total} records into {}", args.out.display());
    write_manifest(
        "fetch",
        out_dir_of(&args.out),
        serde_json::json!({
            "domains": args.domain,
            "index_url": index_url,
            "crawl_id": crawl_id,
            "jobs": jobs,
        }),
        &[],
        &[&args.out],
    )
}

fn cmd_ingest(args: IngestArgs) -> Result<()> {
    let file = std::fs::File::open(&args.input)
        .with_context(|| format!("opening {}", args.input.display()))?;
    let lines: Vec<String> = std::io::BufReader::new(file)
        .lines()
        .collect::<std::io::Result<_>>()?;
    let (corpus, stats) = dataset::ingest_lines(lines);
    write_corpus(&corpus, &args.out)?;
    println!(
        "kept {} paths over {} domains ({} malformed, {} non-200, {} rejected, {} duplicates)",
        stats.kept, corpus.n_domains(), stats.malformed, stats.non_200,
        stats.rejected_paths, stats.duplicates
    );
    write_manifest(
        "ingest",
        out_dir_of(&args.out),
        serde_json::json!({ "stats": stats }),
        &[&args.input],
        &[&args.out],
    )
}

fn cmd_split(args: SplitArgs, config: &FileConfig) -> Result<()> {
    let corpus = read_corpus(&args.input)?;
    let seed = resolve_seed(args.seed, config);
    let spec = SplitSpec::new(args.train_frac, args.val_frac, args.test_frac, seed)?;
    let (train, val, test) = dataset::split_by_domain(&corpus, &spec)?;
    std::fs::create_dir_all(&args.out_dir)?;
    let train_path = args.out_dir.join("train.ndjson");
    let val_path = args.out_dir.join("val.ndjson");
    let test_path = args.out_dir.join("test.ndjson");
    write_corpus(&train, &train_path)?;
    write_corpus(&val, &val_path)?;
    write_corpus(&test, &test_path)?;
    println!(
        "split {} domains into {}/{}/{}",
        corpus.n_domains(), train.n_domains(), val.n_domains(), test.n_domains()
    );
    write_manifest(
        "split",
        &args.out_dir,
        serde_json::json!({ "spec": spec }),
        &[&args.input],
        &[&train_path, &val_path, &test_path],
    )
}

fn cmd_stats(args: StatsArgs) -> Result<()> {
    let corpus = read_corpus(&args.input)?;
    let stats = analysis::corpus_stats(&corpus);
    std::fs::create_dir_all(&args.out_dir)?;
    let csv_path = args.out_dir.join("stats.csv");
    let mut w = csv::Writer::from_path(&csv_path)?;
    w.write_record([
        "n_domains", "n_paths", "paths_avg", "paths_std", "n_unique_paths",
        "n_dirs", "n_unique_dirs", "depth_avg", "depth_std", "sim_avg", "sim_std",
    ])?;
    w.write_record([
        stats.n_domains.to_string(),
        stats.n_paths.to_string(),
        format!("{:.4}", stats.paths_avg),
        format!("{:.4}", stats.paths_std),
        stats.n_unique_paths.to_string(),
        stats.n_dirs.to_string(),
        stats.n_unique_dirs.to_string(),
        format!("{:.4}", stats.depth_avg),
        format!("{:.4}", stats.depth_std),
        format!("{:.4}", stats.sim_avg),
        format!("{:.4}", stats.sim_std),
    ])?;
    w.flush()?;
    let summary = format!(
        "domains: {}\npaths: {} ({} unique)\npaths per site: {:.2} avg, {:.2} std\n\
         directories: {} ({} unique)\ndepth: {:.2} avg, {:.2} std\n\
         site similarity (Jaccard): {:.4} avg, {:.4} std\n\
         (standard deviations are population standard deviations)\n",
        stats.n_domains, stats.n_paths, stats.n_unique_paths, stats.paths_avg, stats.paths_std,
        stats.n_dirs, stats.n_unique_dirs, stats.depth_avg, stats.depth_std,
        stats.sim_avg, stats.sim_std,
    );
    std::fs::write(args.out_dir.join("summary.txt"), &summary)?;
    print!("{summary}");
    write_manifest(
        "stats",
        &args.out_dir,
        serde_json::json!({ "report": stats }),
        &[&args.input],
        &[&csv_path],
    )
}

fn cmd_coverage(args: CoverageArgs) -> Result<()> {
    let corpus = read_corpus(&args.input)?;
    let wordlist = load_wordlist(&args.wordlist)?;
    let report = analysis::coverage_ratio(&corpus, &wordlist);
    std::fs::create_dir_all(&args.out_dir)?;
    let csv_path = args.out_dir.join("coverage.csv");
    let mut w = csv::Writer::from_path(&csv_path)?;
    w.write_record(["depth", "covered", "total", "ratio"])?;
    if args.by_depth {
        for d in &report.per_depth {
            w.write_record([
                d.depth.to_string(),
                d.covered.to_string(),
                d.total.to_string(),
                format!("{:.6}", d.ratio),
            ])?;
        }
    }
    w.write_record([
        "all".to_string(),
        report.overall_covered.to_string(),
        report.overall_total.to_string(),
        format!("{:.6}", report.overall_ratio),
    ])?;
    w.flush()?;
    println!(
        "coverage of {}: {:.2}% ({} of {} unique directories)",
        wordlist.name,
        report.overall_ratio * 100.0,
        report.overall_covered,
        report.overall_total
    );
    write_manifest(
        "coverage",
        &args.out_dir,
        serde_json::json!({ "by_depth": args.by_depth, "wordlist": wordlist.name }),
        &[&args.input, &args.wordlist],
        &[&csv_path],
    )
}

fn cmd_similarity(args: SimilarityArgs) -> Result<()> {
    let corpus = read_corpus(&args.input)?;
    std::fs::create_dir_all(&args.out_dir)?;
    let out_path = args.out_dir.join("similarity.txt");
    let text = match &args.other {
        None => {
            let (avg, std) = analysis::pairwise_site_similarity(&corpus)?;
            format!("pairwise site Jaccard: {avg:.4} avg, {std:.4} std (population)\n")
        }
        Some(other_path) => {
            let other = read_corpus(other_path)?;
            let sim = analysis::cross_corpus_similarity(&corpus, &other);
            format!(
                "directory Jaccard: {:.4} ({} common)\npath Jaccard: {:.4} ({} common)\n",
                sim.dir_jaccard, sim.common_dirs, sim.path_jaccard, sim.common_paths
            )
        }
    };
    std::fs::write(&out_path, &text)?;
    print!("{text}");
    let mut inputs: Vec<&Path> = vec![&args.input];
    if let Some(other) = &args.other {
        inputs.push(other);
    }
    write_manifest("similarity", &args.out_dir, serde_json::json!({}), &inputs, &[&out_path])
}

fn cmd_stem(args: StemArgs) -> Result<()> {
    let corpus = read_corpus(&args.input)?;
    let report = analysis::stem_reduction(&corpus);
    std::fs::create_dir_all(&args.out_dir)?;
    let csv_path = args.out_dir.join("stem.csv");
    let mut w = csv::Writer::from_path(&csv_path)?;
    w.write_record(["n_unique_dirs", "n_unique_roots", "reduction", "reduction_pct"])?;
    w.write_record([
        report.n_unique_dirs.to_string(),
        report.n_unique_roots.to_string(),
        report.reduction.to_string(),
        format!("{:.2}", report.reduction_pct),
    ])?;
    w.flush()?;
    let groups_path = args.out_dir.join("stem_groups.csv");
    let mut w = csv::Writer::from_path(&groups_path)?;
    w.write_record(["root", "form", "occurrences", "share_pct"])?;
    for group in report.groups.iter().take(args.max_groups) {
        for form in &group.forms {
            w.write_record([
                group.root.clone(),
                form.form.clone(),
                form.occurrences.to_string(),
                format!("{:.2}", form.share_pct),
            ])?;
        }
    }
    w.flush()?;
    println!(
        "{} unique dirs -> {} roots (reduction {} = {:.2}%)",
        report.n_unique_dirs, report.n_unique_roots, report.reduction, report.reduction_pct
    );
    write_manifest(
        "stem",
        &args.out_dir,
        serde_json::json!({ "max_groups": args.max_groups }),
        &[&args.input],
        &[&csv_path, &groups_path],
    )
}

fn cmd_build_tree(args: BuildTreeArgs) -> Result<()> {
    let corpus = read_corpus(&args.input)?;
    let tree = build_weighted_training_tree(corpus.all_paths());
    write_json(&tree, &args.out)?;
    println!(
        "tree: {} nodes from {} paths",
        tree.node_count(),
        tree.total_paths()
    );
    write_manifest(
        "build-tree",
        out_dir_of(&args.out),
        serde_json::json!({ "nodes": tree.node_count() }),
        &[&args.input],
        &[&args.out],
    )
}

fn cmd_build_wordlist_tree(args: BuildWordlistTreeArgs) -> Result<()> {
    let tree = read_tree(&args.tree)?;
    let wordlist = load_wordlist(&args.wordlist)?;
    if wordlist.is_empty() {
        bail!("wordlist {} is empty", args.wordlist.display());
    }
    let pruned = build_wordlist_tree(&tree, wordlist.words());
    write_json(&pruned, &args.out)?;
    println!(
        "pruned {} nodes to {}",
        tree.node_count(),
        pruned.node_count()
    );
    write_manifest(
        "build-wordlist-tree",
        out_dir_of(&args.out),
        serde_json::json!({ "wordlist": wordlist.name }),
        &[&args.tree, &args.wordlist],
        &[&args.out],
    )
}

fn cmd_train(args: TrainArgs, config: &FileConfig) -> Result<()> {
    let train_corpus = read_corpus(&args.train)?;
    let val_corpus = read_corpus(&args.val)?;
    let seed = resolve_seed(args.seed, config);
    let hparams = args.hyper.to_hparams(seed);
    let (model, report) = lm::train(&train_corpus, &val_corpus, &hparams)?;
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    lm::save_checkpoint(&model, &args.out)?;
    let loss_csv = args
        .loss_csv
        .clone()
        .unwrap_or_else(|| out_dir_of(&args.out).join("loss.csv"));
    let mut w = csv::Writer::from_path(&loss_csv)?;
    w.write_record(["epoch", "train_loss", "val_loss"])?;
    for e in &report.epochs {
        w.write_record([
            e.epoch.to_string(),
            format!("{:.6}", e.train_loss),
            format!("{:.6}", e.val_loss),
        ])?;
    }
    w.flush()?;
    println!(
        "trained {} epochs, best epoch {} (val loss {:.4}), vocabulary {} tokens",
        report.epochs.len(),
        report.best_epoch,
        report.best_val_loss,
        model.vocab.size()
    );
    write_manifest(
        "train",
        out_dir_of(&args.out),
        serde_json::json!({ "hparams": hparams, "stop": report.stop_reason, "best_epoch": report.best_epoch }),
        &[&args.train, &args.val],
        &[&args.out],
    )
}

fn cmd_gridsearch(args: GridSearchArgs, config: &FileConfig) -> Result<()> {
    let train_corpus = read_corpus(&args.train)?;
    let val_corpus = read_corpus(&args.val)?;
    let seed = resolve_seed(args.seed, config);
    let mut grid = match args.grid {
        GridKind::Desk => HyperParams::desk_grid(),
        GridKind::Full => HyperParams::full_grid(),
    };
    for h in &mut grid {
        h.seed = seed;
        h.max_epochs = args.max_epochs;
    }
    let (model, result) = lm::grid_search(&train_corpus, &val_corpus, &grid)?;
    lm::save_checkpoint(&model, &args.out)?;
    if let Some(report_csv) = &args.report_csv {
        let mut w = csv::Writer::from_path(report_csv)?;
        w.write_record([
            "index", "max_depth", "min_freq", "embedding_size", "n_layers",
            "dropout", "best_val_loss", "best_epoch", "epochs_run", "param_count", "selected",
        ])?;
        for (i, run) in result.runs.iter().enumerate() {
            w.write_record([
                i.to_string(),
                run.hparams.max_depth.to_string(),
                run.hparams.min_freq.to_string(),
                run.hparams.embedding_size.to_string(),
                run.hparams.n_layers.to_string(),
                format!("{}", run.hparams.dropout_rate),
                format!("{:.6}", run.best_val_loss),
                run.best_epoch.to_string(),
                run.epochs_run.to_string(),
                run.param_count.to_string(),
                (i == result.best_index).to_string(),
            ])?;
        }
        w.flush()?;
    }
    println!(
        "grid of {}: best config #{} (val loss {:.4})",
        result.runs.len(),
        result.best_index,
        result.runs[result.best_index].best_val_loss
    );
    write_manifest(
        "gridsearch",
        out_dir_of(&args.out),
        serde_json::json!({ "seed": seed, "configs": result.runs.len(), "best_index": result.best_index }),
        &[&args.train, &args.val],
        &[&args.out],
    )
}

fn cmd_gradcheck(args: GradcheckArgs, config: &FileConfig) -> Result<()> {
    let seed = resolve_seed(args.seed, config);
    let (model, batch) =
        lm::gradcheck_fixture(seed, args.vocab, args.embedding_size, args.n_layers);
    let report = lm::gradient_check(&model, &batch);
    for (name, err) in &report.per_group {
        println!("{name}: {err:.3e}");
    }
    println!("max relative error over {} parameters: {:.3e}", report.n_params, report.max_rel_error);
    if report.max_rel_error >= args.threshold {
        bail!(
            "gradient check failed: {:.3e} >= {:.3e}",
            report.max_rel_error,
            args.threshold
        );
    }
    Ok(())
}

/// Target sites as (domain, site tree) pairs, in corpus order.
fn site_trees(corpus: &Corpus) -> Vec<(String, WeightedTree)> {
    corpus
        .sites()
        .map(|(domain, paths)| {
            let mut tree = WeightedTree::new();
            for p in paths {
                tree.insert_path(p);
            }
            (domain.to_string(), tree)
        })
        .collect()
}

fn run_strategy_over_sites<F>(
    sites: &[(String, WeightedTree)],
    budget: u64,
    jobs: usize,
    run_one: F,
) -> Vec<AttackTrace>
where
    F: Fn(&mut SimOracle) -> AttackTrace + Sync,
{
    if jobs <= 1 {
        return sites
            .iter()
            .map(|(_, site)| run_one(&mut SimOracle::new(site, budget)))
            .collect();
    }
    let slots: Vec<std::sync::Mutex<Option<AttackTrace>>> =
        sites.iter().map(|_| std::sync::Mutex::new(None)).collect();
    let next = std::sync::atomic::AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(sites.len()) {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if idx >= sites.len() {
                    return;
                }
                let trace = run_one(&mut SimOracle::new(&sites[idx].1, budget));
                *slots[idx].lock().unwrap() = Some(trace);
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.into_inner().unwrap().expect("every site simulated"))
        .collect()
}

fn cmd_simulate(args: SimulateArgs, config: &FileConfig) -> Result<()> {
    let targets = read_corpus(&args.targets)?;
    if targets.n_domains() == 0 {
        bail!("target corpus {} has no domains", args.targets.display());
    }
    let budget = resolve_budget(args.budget, config);
    let jobs = args.jobs.or(config.jobs).unwrap_or(1);
    let sites = site_trees(&targets);
    let mut inputs: Vec<&Path> = vec![&args.targets];

    let wordlist = match &args.wordlist {
        Some(path) => {
            inputs.push(path);
            Some(load_wordlist(path)?)
        }
        None => None,
    };
    let tree = match &args.tree {
        Some(path) => {
            inputs.push(path);
            Some(read_tree(path)?)
        }
        None => None,
    };
    let model = match &args.model {
        Some(path) => {
            inputs.push(path);
            Some(lm::load_checkpoint(path)?)
        }
        None => None,
    };

    let (traces, label): (Vec<AttackTrace>, String) = match args.strategy {
        StrategyKind::Breadth => {
            let w = wordlist.as_ref().context("--wordlist is required for breadth")?;
            (
                run_strategy_over_sites(&sites, budget, jobs, |o| run_breadth(o, w)),
                w.name.clone(),
            )
        }
        StrategyKind::Depth => {
            let w = wordlist.as_ref().context("--wordlist is required for depth")?;
            (
                run_strategy_over_sites(&sites, budget, jobs, |o| run_depth(o, w)),
                w.name.clone(),
            )
        }
        StrategyKind::Prob => {
            let t = tree.as_ref().context("--tree is required for prob")?;
            let empty = Wordlist::from_words("empty", std::iter::empty::<&str>());
            let fallback = wordlist.as_ref().unwrap_or(&empty);
            (
                run_strategy_over_sites(&sites, budget, jobs, |o| run_probabilistic(o, t, fallback)),
                format!("tree+{}", fallback.name),
            )
        }
        StrategyKind::Lm => {
            let m = model.as_ref().context("--model is required for lm")?;
            (
                run_strategy_over_sites(&sites, budget, jobs, |o| run_lm(o, m, args.top_predicts)),
                format!("top{}", args.top_predicts),
            )
        }
    };

    std::fs::create_dir_all(&args.out)?;
    let traces_dir = args.out.join("traces");
    std::fs::create_dir_all(&traces_dir)?;
    let names: Vec<String> = sites.iter().map(|(d, _)| d.clone()).collect();
    for (domain, trace) in names.iter().zip(&traces) {
        let file = std::fs::File::create(traces_dir.join(format!("{domain}.csv")))?;
        eval::write_trace_csv(trace, file)?;
    }
    let bins = BinSpec::default();
    let label = args.label.clone().unwrap_or(label);
    let result = EvalResult::from_traces(args.strategy.name(), &label, &names, &traces, &bins)?;
    write_json(&result, &args.out.join("eval.json"))?;
    println!(
        "{} on {} sites: mean {:.2} successes, {} requests total",
        args.strategy.name(),
        names.len(),
        result.mean,
        result.total_requests
    );
    write_manifest(
        "simulate",
        &args.out,
        serde_json::json!({
            "strategy": args.strategy.name(),
            "label": label,
            "budget": budget,
            "top_predicts": args.top_predicts,
            "jobs": jobs,
        }),
        &inputs,
        &[&args.out.join("eval.json")],
    )
}

fn cmd_sweep(args: SweepArgs, config: &FileConfig) -> Result<()> {
    let targets = read_corpus(&args.targets)?;
    let model = lm::load_checkpoint(&args.model)?;
    let budget = resolve_budget(args.budget, config);
    let ks = args.ks.clone().unwrap_or_else(|| eval::DEFAULT_SWEEP_KS.to_vec());
    let sites = site_trees(&targets);
    let bins = BinSpec::default();
    let sweep = eval::toppredicts_sweep(&sites, &model, &ks, budget, &bins)?;

    std::fs::create_dir_all(&args.out)?;
    let csv_path = args.out.join("sweep.csv");
    let mut w = csv::Writer::from_path(&csv_path)?;
    w.write_record(["top_predicts", "mean_successes", "total_requests"])?;
    for (k, result) in &sweep {
        w.write_record([
            k.to_string(),
            format!("{:.4}", result.mean),
            result.total_requests.to_string(),
        ])?;
    }
    w.flush()?;
    let labels: Vec<String> = sweep.iter().map(|(k, _)| k.to_string()).collect();
    let series = vec![(
        "mean successes".to_string(),
        sweep.iter().map(|(_, r)| r.mean).collect::<Vec<f64>>(),
    )];
    std::fs::write(
        args.out.join("sweep.svg"),
        eval::line_chart("Mean successes by topPredicts", &series, &labels),
    )?;
    for (k, result) in &sweep {
        println!("top{k}: mean {:.2}, requests {}", result.mean, result.total_requests);
    }
    write_manifest(
        "sweep",
        &args.out,
        serde_json::json!({ "ks": ks, "budget": budget }),
        &[&args.targets, &args.model],
        &[&csv_path],
    )
}

fn cmd_report(args: ReportArgs) -> Result<()> {
    let mut results = Vec::new();
    for input in &args.inputs {
        let text = std::fs::read_to_string(input)
            .with_context(|| format!("reading {}", input.display()))?;
        let result: EvalResult = serde_json::from_str(&text)
            .with_context(|| format!("parsing {}", input.display()))?;
        results.push(result);
    }
    eval::report(&results, &BinSpec::default(), &args.out)?;
    println!("report written to {}", args.out.display());
    let inputs: Vec<&Path> = args.inputs.iter().map(|p| p.as_path()).collect();
    write_manifest("report", &args.out, serde_json::json!({}), &inputs, &[])
}

fn cmd_synth(args: SynthArgs, config: &FileConfig) -> Result<()> {
    let seed = resolve_seed(args.seed, config);
    let (corpus, grammar) = generate_synthetic_corpus(seed, args.sites, args.paths_per_site);
    write_corpus(&corpus, &args.out)?;
    let mut outputs: Vec<PathBuf> = vec![args.out.clone()];
    if let Some(grammar_out) = &args.grammar_out {
        write_json(&grammar, grammar_out)?;
        outputs.push(grammar_out.clone());
    }
    println!(
        "synthesized {} sites, {} paths",
        corpus.n_domains(),
        corpus.total_paths()
    );
    let output_refs: Vec<&Path> = outputs.iter().map(|p| p.as_path()).collect();
    write_manifest(
        "synth",
        out_dir_of(&args.out),
        serde_json::json!({ "seed": seed, "sites": args.sites, "paths_per_site": args.paths_per_site }),
        &[],
        &output_refs,
    )
}
