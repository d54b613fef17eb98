//! End-to-end embedding: corpus generation followed by training, with timing.

use std::time::Instant;

use serde::Serialize;

use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::sampler::{baseline_random_walk_corpus, default_num, generate_corpus, Corpus};
use crate::seed::with_threads;
use crate::sgns::{train_with_report, TrainConfig, TrainReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SamplerKind {
    NoWalk,
    RandomWalk { walk_len: usize },
}

#[derive(Debug, Clone, Serialize)]
pub struct EmbedConfig {
    pub sampler: SamplerKind,
    /// Neighbor limit; `None` picks [`default_num`].
    pub num: Option<usize>,
    /// Sampling rounds (walks per node for the random-walk sampler).
    pub n_sample: usize,
    pub train: TrainConfig,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        EmbedConfig {
            sampler: SamplerKind::NoWalk,
            num: None,
            n_sample: 10,
            train: TrainConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EmbedStats {
    pub num_nodes: usize,
    pub num_edges: usize,
    pub average_degree: f64,
    pub num: usize,
    pub sentences: usize,
    pub tokens: usize,
    pub corpus_seconds: f64,
    pub train_seconds: f64,
    pub train: TrainReport,
}

pub fn build_corpus(g: &Graph, cfg: &EmbedConfig) -> Result<(Corpus, usize)> {
    let threads = cfg.train.effective_threads();
    let seed = cfg.train.seed;
    match cfg.sampler {
        SamplerKind::NoWalk => {
            let num = cfg.num.unwrap_or_else(|| default_num(g));
            let corpus = with_threads(threads, || generate_corpus(g, num, cfg.n_sample, seed))?;
            Ok((corpus, num))
        }
        SamplerKind::RandomWalk { walk_len } => {
            let corpus = with_threads(threads, || baseline_random_walk_corpus(g, walk_len, cfg.n_sample, seed))?;
            Ok((corpus, walk_len))
        }
    }
}

pub fn embed(g: &Graph, cfg: &EmbedConfig) -> Result<(EmbeddingMatrix, EmbedStats)> {
    let start = Instant::now();
    let (corpus, num) = build_corpus(g, cfg)?;
    let corpus_seconds = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let (matrix, report) = train_with_report(&corpus, g.num_nodes(), &cfg.train)?;
    let train_seconds = start.elapsed().as_secs_f64();
    let stats = EmbedStats {
        num_nodes: g.num_nodes(),
        num_edges: g.num_edges(),
        average_degree: g.average_degree(),
        num,
        sentences: corpus.len(),
        tokens: corpus.num_tokens(),
        corpus_seconds,
        train_seconds,
        train: report,
    };
    Ok((matrix, stats))
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub threads: usize,
    pub corpus_seconds: f64,
    pub train_seconds: f64,
    pub total_seconds: f64,
    /// Total time of the first row divided by this row's total time.
    pub speedup: f64,
}

/// Runs the full embedding once per thread count on the same input and seed.
pub fn bench_threads(g: &Graph, cfg: &EmbedConfig, threads: &[usize]) -> Result<Vec<BenchRow>> {
    if threads.is_empty() {
        return Err(Error::InvalidArgument("no thread counts given".into()));
    }
    let mut rows: Vec<BenchRow> = Vec::with_capacity(threads.len());
    for &t in threads {
        let mut cfg = cfg.clone();
        cfg.train.threads = t;
        let (_, stats) = embed(g, &cfg)?;
        let total = stats.corpus_seconds + stats.train_seconds;
        let base = rows.first().map_or(total, |r| r.total_seconds);
        rows.push(BenchRow {
            threads: t,
            corpus_seconds: stats.corpus_seconds,
            train_seconds: stats.train_seconds,
            total_seconds: total,
            speedup: base / total,
        });
    }
    Ok(rows)
}

/// Least-squares line `y = a + b x` and its coefficient of determination.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (intercept, slope, r2)
}
