//! Skip-gram with negative sampling over neighborhood sentences.
//!
//! Every ordered pair of distinct in-window positions of a sentence is a
//! `(center, context)` training pair; position within the window plays no
//! role. For each pair we take one SGD step on
//!
//! ```text
//! loss = -ln σ(ctx'·in) - Σ_i ln σ(-neg_i'·in)
//! ```
//!
//! where `in` is the center's input vector and primes mark output vectors.
//! The input matrix is the published embedding.
//!
//! With more than one thread, workers own disjoint sentence ranges and write
//! the shared matrices without locks. Entries are stored as `AtomicU32` bit
//! patterns with relaxed ordering, so concurrent updates may be lost but never
//! constitute a data race.

use std::sync::atomic::{AtomicBool, AtomicU32, AtomicU64, Ordering};

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::Serialize;

use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::graph::{Direction, Graph, NodeId};
use crate::sampler::Corpus;
use crate::seed::{rng_for, Rng};

const INIT_DOMAIN: u64 = 0x1217_0000_0000_0001;
const TRAIN_DOMAIN: u64 = 0x1217_0000_0000_0002;

/// Final learning rate as a fraction of the initial one under linear decay.
pub const MIN_LR_FRACTION: f64 = 0.004;

/// Pairs processed between refreshes of the shared progress counter.
const PROGRESS_BATCH: u64 = 1024;

/// Attempts to draw a negative different from the positive context.
const MAX_RESAMPLE: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Window {
    /// Every pair of positions in the sentence.
    Full,
    /// Positions at most this far apart.
    Size(usize),
}

impl Window {
    fn span(self, len: usize, i: usize) -> (usize, usize) {
        match self {
            Window::Full => (0, len),
            Window::Size(w) => (i.saturating_sub(w), (i + w + 1).min(len)),
        }
    }

    /// Number of ordered training pairs a sentence of `len` nodes yields.
    pub fn pair_count(self, len: usize) -> u64 {
        (0..len)
            .map(|i| {
                let (lo, hi) = self.span(len, i);
                (hi - lo - 1) as u64
            })
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LrSchedule {
    /// Linear decay from `alpha` to `alpha * MIN_LR_FRACTION` over all pairs.
    Linear,
    Constant,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainConfig {
    pub dim: usize,
    pub window: Window,
    pub negatives: usize,
    pub alpha: f64,
    pub epochs: usize,
    pub noise_exponent: f64,
    pub schedule: LrSchedule,
    pub seed: u64,
    /// Worker threads; 0 uses all available cores.
    pub threads: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 128,
            window: Window::Full,
            negatives: 5,
            alpha: 0.025,
            epochs: 5,
            noise_exponent: 0.75,
            schedule: LrSchedule::Linear,
            seed: 1,
            threads: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.dim == 0 {
            return bad("dim must be at least 1");
        }
        if self.negatives == 0 {
            return bad("negatives must be at least 1");
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be positive");
        }
        if let Window::Size(0) = self.window {
            return bad("window must be at least 1");
        }
        if !self.noise_exponent.is_finite() {
            return bad("noise exponent must be finite");
        }
        Ok(())
    }

    pub fn effective_threads(&self) -> usize {
        match self.threads {
            0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
            t => t,
        }
    }
}

/// Noise distribution over node ids, sampled in O(1) with Vose's alias method.
#[derive(Debug, Clone)]
pub struct NoiseTable {
    probs: Vec<f64>,
    accept: Vec<f64>,
    alias: Vec<u32>,
}

impl NoiseTable {
    /// `P(v) ∝ freq[v]^exponent`, with zero-frequency nodes excluded.
    pub fn from_frequencies(freq: &[u64], exponent: f64) -> Result<Self> {
        let weights: Vec<f64> = freq
            .iter()
            .map(|&f| if f == 0 { 0.0 } else { (f as f64).powf(exponent) })
            .collect();
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::EmptyCorpus);
        }
        let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();

        let n = probs.len();
        let mut scaled: Vec<f64> = probs.iter().map(|p| p * n as f64).collect();
        let mut accept = vec![1.0; n];
        let mut alias: Vec<u32> = (0..n as u32).collect();
        let (mut small, mut large): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| scaled[i] < 1.0);
        while let (Some(s), Some(&l)) = (small.pop(), large.last()) {
            accept[s] = scaled[s];
            alias[s] = l as u32;
            scaled[l] -= 1.0 - scaled[s];
            if scaled[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        // Leftovers are 1 up to rounding; keep them self-aliased, except
        // zero-probability slots, which must never be accepted.
        for i in small.into_iter().chain(large) {
            accept[i] = 1.0;
            alias[i] = i as u32;
        }
        for i in 0..n {
            if probs[i] == 0.0 && alias[i] as usize == i {
                // Only possible through rounding; route to any positive slot.
                let target = probs.iter().position(|&p| p > 0.0).unwrap();
                accept[i] = 0.0;
                alias[i] = target as u32;
            }
        }
        Ok(NoiseTable { probs, accept, alias })
    }

    pub fn from_corpus(corpus: &Corpus, num_nodes: usize, exponent: f64) -> Result<Self> {
        if let Some(max) = corpus.max_node() {
            if max as usize >= num_nodes {
                return Err(Error::NodeOutOfRange {
                    node: max as usize,
                    num_nodes,
                });
            }
        }
        Self::from_frequencies(&corpus.frequencies(num_nodes), exponent)
    }

    pub fn probability(&self, v: usize) -> f64 {
        self.probs[v]
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    #[inline]
    pub fn sample(&self, rng: &mut Rng) -> NodeId {
        let i = rng.random_range(0..self.probs.len());
        if rng.random::<f64>() < self.accept[i] {
            i as NodeId
        } else {
            self.alias[i]
        }
    }
}

/// Noise table over `0..=max node id` of the corpus.
pub fn build_noise_table(corpus: &Corpus, exponent: f64) -> Result<NoiseTable> {
    let n = corpus.max_node().ok_or(Error::EmptyCorpus)? as usize + 1;
    NoiseTable::from_corpus(corpus, n, exponent)
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `-ln σ(x)`, stable for large `|x|`.
#[inline]
fn neg_log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgnsGradients {
    pub loss: f64,
    pub center: Vec<f64>,
    pub context: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

/// Loss of one positive pair with its negatives and the exact partial
/// derivatives with respect to every participating vector.
pub fn sgns_loss_and_grads(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> Result<SgnsGradients> {
    let d = center.len();
    for v in std::iter::once(context).chain(negatives.iter().copied()) {
        if v.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: v.len(),
            });
        }
    }
    if !std::iter::once(center)
        .chain(std::iter::once(context))
        .chain(negatives.iter().copied())
        .flatten()
        .all(|x| x.is_finite())
    {
        return Err(Error::NonFinite("sgns input vector".into()));
    }
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();

    let mut grad_center = vec![0.0; d];
    let s = dot(context, center);
    let mut loss = neg_log_sigmoid(s);
    // d/ds of -ln σ(s) is σ(s) - 1
    let g = sigmoid(s) - 1.0;
    let grad_context: Vec<f64> = center.iter().map(|c| g * c).collect();
    for (gc, x) in grad_center.iter_mut().zip(context) {
        *gc += g * x;
    }
    let mut grad_negs = Vec::with_capacity(negatives.len());
    for &neg in negatives {
        let s = dot(neg, center);
        loss += neg_log_sigmoid(-s);
        // d/ds of -ln σ(-s) is σ(s)
        let g = sigmoid(s);
        grad_negs.push(center.iter().map(|c| g * c).collect());
        for (gc, x) in grad_center.iter_mut().zip(neg) {
            *gc += g * x;
        }
    }
    Ok(SgnsGradients {
        loss,
        center: grad_center,
        context: grad_context,
        negatives: grad_negs,
    })
}

/// Row-major `f32` matrix shared between training threads.
pub(crate) struct SharedMatrix {
    dim: usize,
    cells: Vec<AtomicU32>,
}

impl SharedMatrix {
    pub(crate) fn from_matrix(m: &EmbeddingMatrix) -> Self {
        SharedMatrix {
            dim: m.dim(),
            cells: m.as_slice().iter().map(|x| AtomicU32::new(x.to_bits())).collect(),
        }
    }

    #[inline]
    fn load_row(&self, row: usize, buf: &mut [f32]) {
        let cells = &self.cells[row * self.dim..(row + 1) * self.dim];
        for (b, c) in buf.iter_mut().zip(cells) {
            *b = f32::from_bits(c.load(Ordering::Relaxed));
        }
    }

    #[inline]
    fn store_row(&self, row: usize, buf: &[f32]) {
        let cells = &self.cells[row * self.dim..(row + 1) * self.dim];
        for (b, c) in buf.iter().zip(cells) {
            c.store(b.to_bits(), Ordering::Relaxed);
        }
    }

    pub(crate) fn into_matrix(self, rows: usize) -> EmbeddingMatrix {
        let data = self.cells.into_iter().map(|c| f32::from_bits(c.into_inner())).collect();
        EmbeddingMatrix::from_vec(rows, self.dim, data).expect("shape preserved")
    }
}

/// Per-thread buffers for one SGD step.
pub(crate) struct StepBuffers {
    input: Vec<f32>,
    output: Vec<f32>,
    grad: Vec<f32>,
}

impl StepBuffers {
    pub(crate) fn new(dim: usize) -> Self {
        StepBuffers {
            input: vec![0.0; dim],
            output: vec![0.0; dim],
            grad: vec![0.0; dim],
        }
    }
}

/// One SGD step for the pair `(center, context)` against `negatives`;
/// returns the pair's loss evaluated before the step.
#[inline]
pub(crate) fn sgd_step(
    input: &SharedMatrix,
    output: &SharedMatrix,
    center: usize,
    context: usize,
    negatives: &[NodeId],
    lr: f32,
    buf: &mut StepBuffers,
) -> f64 {
    input.load_row(center, &mut buf.input);
    buf.grad.fill(0.0);
    let mut loss = 0.0;
    let targets = std::iter::once((context, true)).chain(negatives.iter().map(|&n| (n as usize, false)));
    for (target, positive) in targets {
        output.load_row(target, &mut buf.output);
        let s: f32 = buf.input.iter().zip(&buf.output).map(|(a, b)| a * b).sum();
        let s = s as f64;
        let (l, g) = if positive {
            (neg_log_sigmoid(s), sigmoid(s) - 1.0)
        } else {
            (neg_log_sigmoid(-s), sigmoid(s))
        };
        loss += l;
        let step = -(lr * g as f32);
        for ((acc, o), i) in buf.grad.iter_mut().zip(buf.output.iter_mut()).zip(&buf.input) {
            *acc += step * *o;
            *o += step * i;
        }
        output.store_row(target, &buf.output);
    }
    for (i, acc) in buf.input.iter_mut().zip(&buf.grad) {
        *i += acc;
    }
    input.store_row(center, &buf.input);
    loss
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainReport {
    /// Mean pair loss per epoch, measured while training.
    pub epoch_losses: Vec<f64>,
    pub pairs: u64,
    pub threads: usize,
}

/// Initial input matrix: entries uniform in `(-0.5/d, 0.5/d)`.
pub fn initial_embeddings(num_nodes: usize, cfg: &TrainConfig) -> EmbeddingMatrix {
    let mut rng = rng_for(cfg.seed, INIT_DOMAIN, 0);
    EmbeddingMatrix::random_uniform(num_nodes, cfg.dim, 0.5 / cfg.dim as f32, &mut rng)
}

/// Trains node vectors and returns the input matrix.
pub fn train(corpus: &Corpus, g: &Graph, cfg: &TrainConfig) -> Result<EmbeddingMatrix> {
    train_with_report(corpus, g.num_nodes(), cfg).map(|(m, _)| m)
}

pub fn train_with_report(corpus: &Corpus, num_nodes: usize, cfg: &TrainConfig) -> Result<(EmbeddingMatrix, TrainReport)> {
    cfg.validate()?;
    if corpus.is_empty() || corpus.num_tokens() == 0 {
        return Err(Error::EmptyCorpus);
    }
    let noise = NoiseTable::from_corpus(corpus, num_nodes, cfg.noise_exponent)?;
    let init = initial_embeddings(num_nodes, cfg);
    let input = SharedMatrix::from_matrix(&init);
    let output = SharedMatrix::from_matrix(&EmbeddingMatrix::zeros(num_nodes, cfg.dim));

    let per_epoch: u64 = corpus.sentences().map(|s| cfg.window.pair_count(s.len())).sum();
    let total = per_epoch * cfg.epochs as u64;
    let threads = cfg.effective_threads().min(corpus.len()).max(1);
    let progress = AtomicU64::new(0);
    let abort = AtomicBool::new(false);

    let chunk = corpus.len().div_ceil(threads);
    let ranges: Vec<(usize, usize)> = (0..threads)
        .map(|t| (t * chunk, ((t + 1) * chunk).min(corpus.len())))
        .collect();

    let ctx = Worker {
        corpus,
        cfg,
        noise: &noise,
        input: &input,
        output: &output,
        progress: &progress,
        abort: &abort,
        total,
    };
    let results: Vec<Result<Vec<(f64, u64)>>> = if threads == 1 {
        vec![ctx.run(0, ranges[0])]
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = ranges
                .iter()
                .enumerate()
                .map(|(t, &range)| {
                    let ctx = &ctx;
                    scope.spawn(move || ctx.run(t, range))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("training worker panicked")).collect()
        })
    };

    let mut epoch_sums = vec![(0.0f64, 0u64); cfg.epochs];
    for r in results {
        for (e, (loss, pairs)) in r?.into_iter().enumerate() {
            epoch_sums[e].0 += loss;
            epoch_sums[e].1 += pairs;
        }
    }
    let matrix = input.into_matrix(num_nodes);
    if !matrix.is_finite() {
        return Err(Error::NonFinite("embedding matrix after training".into()));
    }
    let report = TrainReport {
        epoch_losses: epoch_sums
            .iter()
            .map(|&(l, p)| if p == 0 { 0.0 } else { l / p as f64 })
            .collect(),
        pairs: epoch_sums.iter().map(|&(_, p)| p).sum(),
        threads,
    };
    Ok((matrix, report))
}

struct Worker<'a> {
    corpus: &'a Corpus,
    cfg: &'a TrainConfig,
    noise: &'a NoiseTable,
    input: &'a SharedMatrix,
    output: &'a SharedMatrix,
    progress: &'a AtomicU64,
    abort: &'a AtomicBool,
    total: u64,
}

impl Worker<'_> {
    fn learning_rate(&self, done: u64) -> f32 {
        let alpha = self.cfg.alpha;
        let lr = match self.cfg.schedule {
            LrSchedule::Constant => alpha,
            LrSchedule::Linear => {
                let frac = if self.total == 0 {
                    0.0
                } else {
                    (done as f64 / self.total as f64).min(1.0)
                };
                alpha * (1.0 - (1.0 - MIN_LR_FRACTION) * frac)
            }
        };
        lr as f32
    }

    /// Returns `(loss sum, pair count)` per epoch for this worker's sentences.
    fn run(&self, thread: usize, (lo, hi): (usize, usize)) -> Result<Vec<(f64, u64)>> {
        let cfg = self.cfg;
        let mut buf = StepBuffers::new(cfg.dim);
        let mut negs: Vec<NodeId> = Vec::with_capacity(cfg.negatives);
        let mut order: Vec<usize> = (lo..hi).collect();
        let mut pending = 0u64;
        let mut lr = self.learning_rate(0);
        let mut per_epoch = Vec::with_capacity(cfg.epochs);

        for epoch in 0..cfg.epochs {
            let mut rng = rng_for(cfg.seed, TRAIN_DOMAIN | thread as u64, epoch as u64);
            order.shuffle(&mut rng);
            let (mut loss_sum, mut pairs) = (0.0f64, 0u64);
            for &si in &order {
                if self.abort.load(Ordering::Relaxed) {
                    return Err(Error::NonFinite("training aborted by another worker".into()));
                }
                let s = self.corpus.sentence(si);
                for i in 0..s.len() {
                    let (wlo, whi) = cfg.window.span(s.len(), i);
                    for j in wlo..whi {
                        if j == i {
                            continue;
                        }
                        let context = s[j];
                        negs.clear();
                        for _ in 0..cfg.negatives {
                            let mut tries = 0;
                            let neg = loop {
                                let cand = self.noise.sample(&mut rng);
                                tries += 1;
                                if cand != context || tries >= MAX_RESAMPLE {
                                    break cand;
                                }
                            };
                            if neg != context {
                                negs.push(neg);
                            }
                        }
                        loss_sum += sgd_step(
                            self.input,
                            self.output,
                            s[i] as usize,
                            context as usize,
                            &negs,
                            lr,
                            &mut buf,
                        );
                        pairs += 1;
                        pending += 1;
                        if pending == PROGRESS_BATCH {
                            let done = self.progress.fetch_add(pending, Ordering::Relaxed) + pending;
                            pending = 0;
                            lr = self.learning_rate(done);
                        }
                    }
                }
                if !loss_sum.is_finite() {
                    self.abort.store(true, Ordering::Relaxed);
                    return Err(Error::NonFinite(format!(
                        "training loss diverged in epoch {epoch} (alpha {})",
                        cfg.alpha
                    )));
                }
            }
            per_epoch.push((loss_sum, pairs));
        }
        Ok(per_epoch)
    }
}

/// `p(c | v) = exp(x_c·x_v) / Σ_{u ∈ N(v)} exp(x_u·x_v)` over the out-neighbors of `v`.
pub fn neighborhood_softmax(g: &Graph, m: &EmbeddingMatrix, v: usize, c: usize) -> Result<f64> {
    let nbrs = g.neighbors(v, Direction::Out)?;
    if m.rows() != g.num_nodes() {
        return Err(Error::DimensionMismatch {
            expected: g.num_nodes(),
            actual: m.rows(),
        });
    }
    if nbrs.is_empty() {
        return Err(Error::InvalidArgument(format!("node {v} has no neighbors")));
    }
    if !nbrs.targets().contains(&(c as NodeId)) {
        return Err(Error::InvalidArgument(format!("node {c} is not a neighbor of {v}")));
    }
    let xv = m.row(v);
    let logit = |u: usize| -> f64 { m.row(u).iter().zip(xv).map(|(&a, &b)| a as f64 * b as f64).sum() };
    let logits: Vec<f64> = nbrs.targets().iter().map(|&u| logit(u as usize)).collect();
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = logits.iter().map(|l| (l - max).exp()).sum();
    Ok((logit(c) - max).exp() / z)
}
