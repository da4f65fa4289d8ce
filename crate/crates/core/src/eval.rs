//! Evaluation harness: average successful responses, per-bin efficiency,
//! the top-predictions sweep, and comparison report files.
//!
//! Request indices are 1-based, so the first bin starts at index 1. Per-bin
//! hit counts partition a trace's successes; the report also carries a
//! hits-per-request view of the same bins, labeled separately. Execution
//! times are deliberately not measured or reported.

use crate::fstree::SiteTree;
use crate::lm::LanguageModel;
use crate::strategies::{run_lm, AttackTrace, SimOracle};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("no traces to aggregate")]
    EmptyInput,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Contiguous, ascending, inclusive request-index ranges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BinSpec {
    edges: Vec<(u64, u64)>,
}

impl Default for BinSpec {
    fn default() -> Self {
        BinSpec {
            edges: vec![
                (1, 100),
                (101, 1_000),
                (1_001, 10_000),
                (10_001, 50_000),
                (50_001, 100_000),
            ],
        }
    }
}

impl BinSpec {
    pub fn new(edges: Vec<(u64, u64)>) -> Result<Self, String> {
        if edges.is_empty() {
            return Err("bin spec needs at least one range".into());
        }
        for window in edges.windows(2) {
            if window[0].1 + 1 != window[1].0 {
                return Err(format!(
                    "ranges {:?} and {:?} are not contiguous",
                    window[0], window[1]
                ));
            }
        }
        if edges.iter().any(|(lo, hi)| lo > hi) {
            return Err("descending range".into());
        }
        Ok(BinSpec { edges })
    }

    pub fn edges(&self) -> &[(u64, u64)] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn bin_of(&self, index: u64) -> Option<usize> {
        self.edges.iter().position(|&(lo, hi)| index >= lo && index <= hi)
    }
}

/// Mean of per-trace success counts.
pub fn avg_success(traces: &[AttackTrace]) -> Result<f64, EvalError> {
    if traces.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    Ok(traces.iter().map(|t| t.successes as f64).sum::<f64>() / traces.len() as f64)
}

/// Hit counts of one trace per bin; sums to the trace's total successes
/// whenever the bins cover the whole index range.
pub fn bins_for_trace(trace: &AttackTrace, bins: &BinSpec) -> Vec<u64> {
    let mut counts = vec![0u64; bins.len()];
    for index in trace.hit_indices() {
        if let Some(b) = bins.bin_of(index) {
            counts[b] += 1;
        }
    }
    counts
}

/// Mean hits per bin over a set of traces.
pub fn bins_efficiency(traces: &[AttackTrace], bins: &BinSpec) -> Vec<f64> {
    let mut sums = vec![0.0f64; bins.len()];
    for trace in traces {
        for (s, c) in sums.iter_mut().zip(bins_for_trace(trace, bins)) {
            *s += c as f64;
        }
    }
    let n = traces.len().max(1) as f64;
    sums.iter_mut().for_each(|s| *s /= n);
    sums
}

/// Requests issued by one trace inside each bin.
fn requests_per_bin(trace: &AttackTrace, bins: &BinSpec) -> Vec<u64> {
    let total = trace.request_count();
    bins.edges
        .iter()
        .map(|&(lo, hi)| {
            if total < lo {
                0
            } else {
                total.min(hi) - lo + 1
            }
        })
        .collect()
}

/// Aggregated outcome of one (strategy, wordlist) configuration across test
/// sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub strategy: String,
    pub wordlist: String,
    pub per_site: Vec<(String, u64)>,
    pub mean: f64,
    pub per_bin_means: Vec<f64>,
    /// Mean hits/requests ratio per bin (0 where no requests landed).
    pub per_bin_hit_rate: Vec<f64>,
    pub total_requests: u64,
}

impl EvalResult {
    /// Builds the aggregate from per-site traces (site order preserved).
    pub fn from_traces(
        strategy: &str,
        wordlist: &str,
        sites: &[String],
        traces: &[AttackTrace],
        bins: &BinSpec,
    ) -> Result<EvalResult, EvalError> {
        if traces.is_empty() || sites.len() != traces.len() {
            return Err(EvalError::EmptyInput);
        }
        let per_site: Vec<(String, u64)> = sites
            .iter()
            .cloned()
            .zip(traces.iter().map(|t| t.successes))
            .collect();
        let mut per_bin_hit_rate = vec![0.0f64; bins.len()];
        for trace in traces {
            let hits = bins_for_trace(trace, bins);
            let requests = requests_per_bin(trace, bins);
            for (slot, (h, r)) in per_bin_hit_rate.iter_mut().zip(hits.iter().zip(requests)) {
                if r > 0 {
                    *slot += *h as f64 / r as f64;
                }
            }
        }
        per_bin_hit_rate
            .iter_mut()
            .for_each(|v| *v /= traces.len() as f64);
        Ok(EvalResult {
            strategy: strategy.to_string(),
            wordlist: wordlist.to_string(),
            per_site,
            mean: avg_success(traces)?,
            per_bin_means: bins_efficiency(traces, bins),
            per_bin_hit_rate,
            total_requests: traces.iter().map(|t| t.request_count()).sum(),
        })
    }
}

/// Runs the LM strategy once per site per `top_predicts` value and
/// aggregates each value into an [`EvalResult`]. The per-k total request
/// counts expose early heap exhaustion.
pub fn toppredicts_sweep(
    sites: &[(String, SiteTree)],
    model: &LanguageModel,
    ks: &[usize],
    budget: u64,
    bins: &BinSpec,
) -> Result<Vec<(usize, EvalResult)>, EvalError> {
    let names: Vec<String> = sites.iter().map(|(d, _)| d.clone()).collect();
    let mut out = Vec::with_capacity(ks.len());
    for &k in ks {
        let traces: Vec<AttackTrace> = sites
            .iter()
            .map(|(_, site)| {
                let mut oracle = SimOracle::new(site, budget);
                run_lm(&mut oracle, model, k)
            })
            .collect();
        let result = EvalResult::from_traces("lm", &format!("top{k}"), &names, &traces, bins)?;
        out.push((k, result));
    }
    Ok(out)
}

pub const DEFAULT_SWEEP_KS: [usize; 8] = [100, 250, 500, 750, 1000, 2000, 5000, 10000];

/// Percentage improvement of `mean` over `baseline`.
pub fn improvement_pct(mean: f64, baseline: f64) -> f64 {
    100.0 * (mean - baseline) / baseline
}

/// Writes the comparison table, per-bin CSV, and SVG charts into `out_dir`.
/// The first result whose strategy is "breadth" is the improvement
/// baseline; with a single result no improvement column is emitted.
pub fn report(results: &[EvalResult], bins: &BinSpec, out_dir: &Path) -> Result<(), EvalError> {
    if results.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    std::fs::create_dir_all(out_dir)?;
    let baseline = if results.len() > 1 {
        results.iter().find(|r| r.strategy == "breadth").map(|r| r.mean)
    } else {
        None
    };

    let mut table = csv::Writer::from_path(out_dir.join("results_table.csv"))?;
    if baseline.is_some() {
        table.write_record(["strategy", "wordlist", "mean_successes", "improvement_pct_vs_breadth"])?;
    } else {
        table.write_record(["strategy", "wordlist", "mean_successes"])?;
    }
    for r in results {
        let mean = format!("{:.4}", r.mean);
        match baseline {
            Some(base) => {
                let imp = if base > 0.0 && r.strategy != "breadth" {
                    format!("{:+.1}", improvement_pct(r.mean, base))
                } else {
                    String::new()
                };
                table.write_record([&r.strategy, &r.wordlist, &mean, &imp])?;
            }
            None => table.write_record([&r.strategy, &r.wordlist, &mean])?,
        }
    }
    table.flush()?;

    let mut bincsv = csv::Writer::from_path(out_dir.join("bins.csv"))?;
    bincsv.write_record(["strategy", "wordlist", "bin_lo", "bin_hi", "mean_hits", "mean_hits_per_request"])?;
    for r in results {
        for (i, &(lo, hi)) in bins.edges().iter().enumerate() {
            bincsv.write_record([
                r.strategy.as_str(),
                r.wordlist.as_str(),
                &lo.to_string(),
                &hi.to_string(),
                &format!("{:.4}", r.per_bin_means[i]),
                &format!("{:.6}", r.per_bin_hit_rate[i]),
            ])?;
        }
    }
    bincsv.flush()?;

    let labels: Vec<String> = results
        .iter()
        .map(|r| format!("{}/{}", r.strategy, r.wordlist))
        .collect();
    let means: Vec<f64> = results.iter().map(|r| r.mean).collect();
    std::fs::write(
        out_dir.join("mean_successes.svg"),
        bar_chart("Mean successful responses", &labels, &means),
    )?;
    let series: Vec<(String, Vec<f64>)> = results
        .iter()
        .map(|r| (format!("{}/{}", r.strategy, r.wordlist), r.per_bin_means.clone()))
        .collect();
    let x_labels: Vec<String> = bins
        .edges()
        .iter()
        .map(|(lo, hi)| format!("{lo}-{hi}"))
        .collect();
    std::fs::write(
        out_dir.join("bins_efficiency.svg"),
        line_chart("Mean hits per request bin", &series, &x_labels),
    )?;
    Ok(())
}

/// Writes one trace as `index,path,hit` CSV.
pub fn write_trace_csv<W: Write>(trace: &AttackTrace, mut w: W) -> Result<(), EvalError> {
    let mut csv = csv::Writer::from_writer(&mut w);
    csv.write_record(["index", "path", "hit"])?;
    for event in &trace.events {
        csv.write_record([
            event.index.to_string(),
            event.path.render(),
            event.hit.to_string(),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

const SVG_W: f64 = 720.0;
const SVG_H: f64 = 420.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#9c755f",
];

fn svg_header(title: &str) -> String {
    format!(
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" ",
            "viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"11\">\n",
            "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n",
            "<text x=\"{tx}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{title}</text>\n"
        ),
        w = SVG_W,
        h = SVG_H,
        tx = SVG_W / 2.0,
        title = title
    )
}

/// Self-contained bar chart.
pub fn bar_chart(title: &str, labels: &[String], values: &[f64]) -> String {
    let mut svg = svg_header(title);
    let max = values.iter().cloned().fold(1e-9, f64::max);
    let plot_w = SVG_W - 2.0 * MARGIN;
    let plot_h = SVG_H - 2.0 * MARGIN;
    let slot = plot_w / values.len().max(1) as f64;
    for (i, (&v, label)) in values.iter().zip(labels).enumerate() {
        let h = plot_h * v / max;
        let x = MARGIN + i as f64 * slot + slot * 0.1;
        let y = SVG_H - MARGIN - h;
        let color = PALETTE[i % PALETTE.len()];
        svg.push_str(&format!(
            "<rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{w:.1}\" height=\"{h:.1}\" fill=\"{color}\"/>\n",
            w = slot * 0.8
        ));
        svg.push_str(&format!(
            "<text x=\"{cx:.1}\" y=\"{ty:.1}\" text-anchor=\"middle\">{v:.1}</text>\n",
            cx = x + slot * 0.4,
            ty = y - 4.0
        ));
        svg.push_str(&format!(
            "<text x=\"{cx:.1}\" y=\"{ly:.1}\" text-anchor=\"middle\">{label}</text>\n",
            cx = x + slot * 0.4,
            ly = SVG_H - MARGIN + 16.0
        ));
    }
    svg.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{y}\" x2=\"{x2}\" y2=\"{y}\" stroke=\"black\"/>\n",
        m = MARGIN,
        y = SVG_H - MARGIN,
        x2 = SVG_W - MARGIN
    ));
    svg.push_str("</svg>\n");
    svg
}

/// Self-contained multi-series line chart over categorical x labels.
pub fn line_chart(title: &str, series: &[(String, Vec<f64>)], x_labels: &[String]) -> String {
    let mut svg = svg_header(title);
    let max = series
        .iter()
        .flat_map(|(_, v)| v.iter().cloned())
        .fold(1e-9, f64::max);
    let plot_w = SVG_W - 2.0 * MARGIN;
    let plot_h = SVG_H - 2.0 * MARGIN;
    let n = x_labels.len().max(2);
    let step = plot_w / (n - 1) as f64;
    for (s_idx, (label, values)) in series.iter().enumerate() {
        let color = PALETTE[s_idx % PALETTE.len()];
        let points: Vec<String> = values
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let x = MARGIN + i as f64 * step;
                let y = SVG_H - MARGIN - plot_h * v / max;
                format!("{x:.1},{y:.1}")
            })
            .collect();
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            points.join(" ")
        ));
        svg.push_str(&format!(
            "<text x=\"{x}\" y=\"{y}\" fill=\"{color}\">{label}</text>\n",
            x = SVG_W - MARGIN + 4.0 - 180.0,
            y = 36.0 + 14.0 * s_idx as f64
        ));
    }
    for (i, label) in x_labels.iter().enumerate() {
        let x = MARGIN + i as f64 * step;
        svg.push_str(&format!(
            "<text x=\"{x:.1}\" y=\"{y:.1}\" text-anchor=\"middle\">{label}</text>\n",
            y = SVG_H - MARGIN + 16.0
        ));
    }
    svg.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{y}\" x2=\"{x2}\" y2=\"{y}\" stroke=\"black\"/>\n",
        m = MARGIN,
        y = SVG_H - MARGIN,
        x2 = SVG_W - MARGIN
    ));
    svg.push_str("</svg>\n");
    svg
}
