//! Downstream evaluation: node classification and link prediction with a
//! three-layer MLP, each repeated over independent seeds.

pub mod metrics;
pub mod mlp;

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;

use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::graph::{resolve_node, Graph, NodeId, NodeIdMap};
use crate::seed::{mix, rng_for};

pub use metrics::{accuracy, hits_at_k, mean_std, mrr, roc_auc};
pub use mlp::{train_mlp, Mlp, MlpConfig, TrainedMlp};

#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub metric: String,
    pub mean: f64,
    pub std: f64,
    pub runs: usize,
    pub values: Vec<f64>,
}

impl EvalReport {
    fn from_values(metric: String, values: Vec<f64>) -> Self {
        let (mean, std) = mean_std(&values);
        EvalReport {
            metric,
            mean,
            std,
            runs: values.len(),
            values,
        }
    }
}

/// Seed of run `run` under the base seed.
pub fn run_seed(seed: u64, run: usize) -> u64 {
    mix(seed, 0x5255_4e00, run as u64)
}

pub fn embedding_features(m: &EmbeddingMatrix) -> Array2<f64> {
    Array2::from_shape_fn((m.rows(), m.dim()), |(i, j)| m.row(i)[j] as f64)
}

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        out.push((idx + 1, t.to_string()));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Node classification

#[derive(Debug, Clone)]
pub struct NodeLabelTask {
    pub labels: Vec<Option<usize>>,
    pub num_classes: usize,
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
    pub test: Vec<usize>,
}

impl NodeLabelTask {
    pub fn new(labels: Vec<Option<usize>>, train: Vec<usize>, valid: Vec<usize>, test: Vec<usize>) -> Result<Self> {
        let num_classes = labels.iter().flatten().max().map_or(0, |m| m + 1);
        let task = NodeLabelTask {
            labels,
            num_classes,
            train,
            valid,
            test,
        };
        task.validate()?;
        Ok(task)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.labels.len();
        let mut seen = HashSet::new();
        for (name, split) in [("train", &self.train), ("valid", &self.valid), ("test", &self.test)] {
            for &v in split {
                if v >= n {
                    return Err(Error::InvalidTask(format!("{name} node {v} outside 0..{n}")));
                }
                match self.labels[v] {
                    None => return Err(Error::InvalidTask(format!("{name} node {v} has no label"))),
                    Some(c) if c >= self.num_classes => {
                        return Err(Error::InvalidTask(format!("node {v} class {c} >= {}", self.num_classes)))
                    }
                    Some(_) => {}
                }
                if !seen.insert(v) {
                    return Err(Error::InvalidTask(format!("node {v} appears twice across splits")));
                }
            }
        }
        if self.train.is_empty() || self.test.is_empty() {
            return Err(Error::InvalidTask("train and test splits must be non-empty".into()));
        }
        Ok(())
    }

    /// Per-class shuffle, then the first `train_frac` of each class goes to
    /// train, the next `valid_frac` to valid and the rest to test.
    pub fn stratified(labels: Vec<Option<usize>>, train_frac: f64, valid_frac: f64, seed: u64) -> Result<Self> {
        let num_classes = labels.iter().flatten().max().map_or(0, |m| m + 1);
        let mut rng = rng_for(seed, 0x5350_4c54, 0);
        let (mut train, mut valid, mut test) = (Vec::new(), Vec::new(), Vec::new());
        for c in 0..num_classes {
            let mut members: Vec<usize> = (0..labels.len()).filter(|&v| labels[v] == Some(c)).collect();
            members.shuffle(&mut rng);
            let n_train = (members.len() as f64 * train_frac).round() as usize;
            let n_valid = ((members.len() as f64 * valid_frac).round() as usize).min(members.len() - n_train);
            train.extend_from_slice(&members[..n_train]);
            valid.extend_from_slice(&members[n_train..n_train + n_valid]);
            test.extend_from_slice(&members[n_train + n_valid..]);
        }
        for s in [&mut train, &mut valid, &mut test] {
            s.sort_unstable();
        }
        NodeLabelTask::new(labels, train, valid, test)
    }

    /// Reads `node_id<TAB>class_id` labels and one-node-per-line split files.
    pub fn load(
        labels_path: &Path,
        train_path: &Path,
        valid_path: Option<&Path>,
        test_path: &Path,
        num_nodes: usize,
        map: Option<&NodeIdMap>,
    ) -> Result<Self> {
        let labels = load_labels(labels_path, num_nodes, map)?;
        let split = |path: &Path| -> Result<Vec<usize>> {
            read_lines(path)?
                .into_iter()
                .map(|(line, text)| {
                    resolve_node(&text, map)
                        .map(|v| v as usize)
                        .map_err(|m| Error::parse(path, line, m))
                })
                .collect()
        };
        let train = split(train_path)?;
        let valid = valid_path.map(split).transpose()?.unwrap_or_default();
        let test = split(test_path)?;
        NodeLabelTask::new(labels, train, valid, test)
    }

    fn rows_and_labels(&self, split: &[usize]) -> Vec<usize> {
        split.iter().map(|&v| self.labels[v].expect("validated")).collect()
    }
}

/// Reads `node_id<TAB>class_id` lines; negative class ids mark unlabeled nodes.
pub fn load_labels(path: &Path, num_nodes: usize, map: Option<&NodeIdMap>) -> Result<Vec<Option<usize>>> {
    let mut labels = vec![None; num_nodes];
    for (line, text) in read_lines(path)? {
        let mut cols = text.split_whitespace();
        let (Some(node), Some(class), None) = (cols.next(), cols.next(), cols.next()) else {
            return Err(Error::parse(path, line, "expected node_id<TAB>class_id"));
        };
        let v = resolve_node(node, map).map_err(|m| Error::parse(path, line, m))? as usize;
        if v >= num_nodes {
            return Err(Error::parse(path, line, format!("node {v} outside graph of {num_nodes} nodes")));
        }
        let c: i64 = class
            .parse()
            .map_err(|_| Error::parse(path, line, format!("invalid class id {class:?}")))?;
        labels[v] = usize::try_from(c).ok();
    }
    Ok(labels)
}

/// Test accuracy of one MLP trained on the train split, selected by valid
/// accuracy when a valid split exists.
pub fn node_classification_once(features: ArrayView2<f64>, task: &NodeLabelTask, cfg: &MlpConfig) -> Result<f64> {
    let x_train = mlp::gather_rows(features, &task.train);
    let y_train = task.rows_and_labels(&task.train);
    let x_valid = mlp::gather_rows(features, &task.valid);
    let y_valid = task.rows_and_labels(&task.valid);
    let mut score = |m: &Mlp| accuracy(&m.predict(x_valid.view()), &y_valid).unwrap_or(0.0);
    let selector: Option<&mut dyn FnMut(&Mlp) -> f64> = if task.valid.is_empty() { None } else { Some(&mut score) };
    let trained = train_mlp(x_train.view(), &y_train, task.num_classes.max(2), cfg, selector)?;
    let x_test = mlp::gather_rows(features, &task.test);
    accuracy(&trained.model.predict(x_test.view()), &task.rows_and_labels(&task.test))
}

/// Repeats [`node_classification_once`] `runs` times with seeds derived from
/// `cfg.seed` and reports mean and standard deviation of test accuracy.
pub fn run_node_classification(
    g: &Graph,
    m: &EmbeddingMatrix,
    task: &NodeLabelTask,
    cfg: &MlpConfig,
    runs: usize,
) -> Result<EvalReport> {
    if m.rows() != g.num_nodes() || task.labels.len() != g.num_nodes() {
        return Err(Error::DimensionMismatch {
            expected: g.num_nodes(),
            actual: if m.rows() != g.num_nodes() { m.rows() } else { task.labels.len() },
        });
    }
    if runs == 0 {
        return Err(Error::InvalidArgument("runs must be at least 1".into()));
    }
    task.validate()?;
    let features = embedding_features(m);
    let values = (0..runs)
        .into_par_iter()
        .map(|r| {
            let cfg = MlpConfig {
                seed: run_seed(cfg.seed, r),
                ..cfg.clone()
            };
            node_classification_once(features.view(), task, &cfg)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(EvalReport::from_values("accuracy".into(), values))
}

// ---------------------------------------------------------------------------
// Link prediction

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EdgeCombiner {
    Hadamard,
    Average,
    AbsDiff,
    SquaredDiff,
}

impl std::str::FromStr for EdgeCombiner {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hadamard" => Ok(EdgeCombiner::Hadamard),
            "average" => Ok(EdgeCombiner::Average),
            "abs-diff" | "l1" => Ok(EdgeCombiner::AbsDiff),
            "squared-diff" | "l2" => Ok(EdgeCombiner::SquaredDiff),
            other => Err(Error::InvalidArgument(format!("unknown combiner {other:?}"))),
        }
    }
}

pub fn edge_feature(u: &[f64], v: &[f64], combiner: EdgeCombiner) -> Result<Vec<f64>> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            actual: v.len(),
        });
    }
    let f: fn(f64, f64) -> f64 = match combiner {
        EdgeCombiner::Hadamard => |a, b| a * b,
        EdgeCombiner::Average => |a, b| (a + b) / 2.0,
        EdgeCombiner::AbsDiff => |a, b| (a - b).abs(),
        EdgeCombiner::SquaredDiff => |a, b| (a - b) * (a - b),
    };
    Ok(u.iter().zip(v).map(|(&a, &b)| f(a, b)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LinkMetric {
    RocAuc,
    HitsAtK(usize),
    Mrr,
}

impl LinkMetric {
    pub fn name(&self) -> String {
        match self {
            LinkMetric::RocAuc => "roc_auc".into(),
            LinkMetric::HitsAtK(k) => format!("hits@{k}"),
            LinkMetric::Mrr => "mrr".into(),
        }
    }
}

impl std::str::FromStr for LinkMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        match lower.as_str() {
            "auc" | "roc_auc" | "roc-auc" => Ok(LinkMetric::RocAuc),
            "mrr" => Ok(LinkMetric::Mrr),
            _ => lower
                .strip_prefix("hits@")
                .and_then(|k| k.parse().ok())
                .filter(|&k| k > 0)
                .map(LinkMetric::HitsAtK)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown link metric {s:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub enum NegativeSet {
    /// Negative node pairs shared by all positives.
    Pairs(Vec<(NodeId, NodeId)>),
    /// For positive `i = (u, v)`, candidate tails `c` forming negatives `(u, c)`.
    Candidates(Vec<Vec<NodeId>>),
}

#[derive(Debug, Clone)]
pub struct LinkEvalSet {
    pub positives: Vec<(NodeId, NodeId)>,
    pub negatives: NegativeSet,
}

#[derive(Debug, Clone)]
pub struct LinkTask {
    pub train_edges: Vec<(NodeId, NodeId)>,
    pub valid: Option<LinkEvalSet>,
    pub test: LinkEvalSet,
    pub metric: LinkMetric,
}

fn canon(directed: bool, (u, v): (NodeId, NodeId)) -> (NodeId, NodeId) {
    if directed || u <= v {
        (u, v)
    } else {
        (v, u)
    }
}

impl LinkTask {
    /// Checks the task against the training graph: ids in range, no evaluation
    /// positive among the training edges, negatives absent from the graph.
    pub fn validate(&self, g: &Graph) -> Result<()> {
        let n = g.num_nodes();
        let in_range = |&(u, v): &(NodeId, NodeId)| (u as usize) < n && (v as usize) < n;
        if let Some(bad) = self.train_edges.iter().find(|e| !in_range(e)) {
            return Err(Error::InvalidTask(format!("train edge {bad:?} outside graph")));
        }
        if self.train_edges.is_empty() {
            return Err(Error::InvalidTask("no training edges".into()));
        }
        let train: HashSet<_> = self.train_edges.iter().map(|&e| canon(g.is_directed(), e)).collect();
        for (name, set) in [("valid", self.valid.as_ref()), ("test", Some(&self.test))] {
            let Some(set) = set else { continue };
            if set.positives.is_empty() {
                return Err(Error::InvalidTask(format!("{name} set has no positives")));
            }
            for p in &set.positives {
                if !in_range(p) {
                    return Err(Error::InvalidTask(format!("{name} positive {p:?} outside graph")));
                }
                if train.contains(&canon(g.is_directed(), *p)) {
                    return Err(Error::InvalidTask(format!("{name} positive {p:?} is a training edge")));
                }
            }
            match &set.negatives {
                NegativeSet::Pairs(pairs) => {
                    if pairs.is_empty() {
                        return Err(Error::InvalidTask(format!("{name} set has no negatives")));
                    }
                    for p in pairs {
                        if !in_range(p) || g.has_edge(p.0 as usize, p.1 as usize) {
                            return Err(Error::InvalidTask(format!("{name} negative {p:?} is not a non-edge")));
                        }
                    }
                }
                NegativeSet::Candidates(lists) => {
                    if lists.len() != set.positives.len() {
                        return Err(Error::InvalidTask(format!(
                            "{name}: {} candidate lists for {} positives",
                            lists.len(),
                            set.positives.len()
                        )));
                    }
                    for (&(u, _), list) in set.positives.iter().zip(lists) {
                        for &c in list {
                            if c as usize >= n || g.has_edge(u as usize, c as usize) {
                                return Err(Error::InvalidTask(format!("{name} negative ({u}, {c}) is not a non-edge")));
                            }
                        }
                    }
                }
            }
        }
        if matches!(self.metric, LinkMetric::HitsAtK(k) if self.test.num_negatives() < k) {
            return Err(Error::InvalidTask(format!("{} needs more test negatives", self.metric.name())));
        }
        Ok(())
    }
}

impl LinkEvalSet {
    fn num_negatives(&self) -> usize {
        match &self.negatives {
            NegativeSet::Pairs(p) => p.len(),
            NegativeSet::Candidates(c) => c.iter().map(Vec::len).sum(),
        }
    }

    fn negative_pairs(&self) -> Vec<(NodeId, NodeId)> {
        match &self.negatives {
            NegativeSet::Pairs(p) => p.clone(),
            NegativeSet::Candidates(lists) => self
                .positives
                .iter()
                .zip(lists)
                .flat_map(|(&(u, _), l)| l.iter().map(move |&c| (u, c)))
                .collect(),
        }
    }
}

/// Reads one `u v` pair per line.
pub fn load_pairs(path: &Path, map: Option<&NodeIdMap>) -> Result<Vec<(NodeId, NodeId)>> {
    read_lines(path)?
        .into_iter()
        .map(|(line, text)| {
            let mut cols = text.split_whitespace();
            let (Some(a), Some(b)) = (cols.next(), cols.next()) else {
                return Err(Error::parse(path, line, "expected \"u v\""));
            };
            let u = resolve_node(a, map).map_err(|m| Error::parse(path, line, m))?;
            let v = resolve_node(b, map).map_err(|m| Error::parse(path, line, m))?;
            Ok((u, v))
        })
        .collect()
}

/// Reads one whitespace-separated candidate list per line.
pub fn load_candidates(path: &Path, map: Option<&NodeIdMap>) -> Result<Vec<Vec<NodeId>>> {
    read_lines(path)?
        .into_iter()
        .map(|(line, text)| {
            text.split_whitespace()
                .map(|t| resolve_node(t, map).map_err(|m| Error::parse(path, line, m)))
                .collect()
        })
        .collect()
}

/// Samples `count` distinct node pairs that are not edges of `g` and not in
/// `exclude`, giving up after `100 * count` draws.
pub fn sample_non_edges(
    g: &Graph,
    count: usize,
    exclude: &HashSet<(NodeId, NodeId)>,
    seed: u64,
) -> Result<Vec<(NodeId, NodeId)>> {
    let n = g.num_nodes();
    let mut rng = rng_for(seed, 0x4e45_4700, 0);
    let mut chosen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    let attempts = 100 * count;
    if n >= 2 {
        for _ in 0..attempts {
            if out.len() == count {
                break;
            }
            let u = rng.random_range(0..n);
            let v = rng.random_range(0..n);
            if u == v || g.has_edge(u, v) {
                continue;
            }
            let pair = canon(g.is_directed(), (u as NodeId, v as NodeId));
            if exclude.contains(&pair) || !chosen.insert(pair) {
                continue;
            }
            out.push((u as NodeId, v as NodeId));
        }
    }
    if out.len() < count {
        return Err(Error::TooDense { wanted: count, attempts });
    }
    Ok(out)
}

/// Removes `fraction` of the edges accepted by `eligible` as test positives
/// and pairs them with as many sampled non-edges of `g`. Returns the training
/// graph (without the held-out edges) and the task.
pub fn holdout_link_task(
    g: &Graph,
    fraction: f64,
    eligible: impl Fn(NodeId, NodeId) -> bool,
    metric: LinkMetric,
    seed: u64,
) -> Result<(Graph, LinkTask)> {
    let mut candidates: Vec<(NodeId, NodeId, f64)> = g.edges().filter(|&(u, v, _)| eligible(u, v)).collect();
    let mut rng = rng_for(seed, 0x484f_4c44, 0);
    candidates.shuffle(&mut rng);
    let n_test = ((candidates.len() as f64) * fraction).round() as usize;
    let held: HashSet<(NodeId, NodeId)> = candidates[..n_test].iter().map(|&(u, v, _)| (u, v)).collect();
    let kept: Vec<(NodeId, NodeId, f64)> = g.edges().filter(|&(u, v, _)| !held.contains(&(u, v))).collect();
    let train_graph = Graph::from_edges(g.num_nodes(), kept.iter().copied(), g.is_directed(), g.is_weighted(), true)?;
    let negatives = sample_non_edges(g, n_test, &HashSet::new(), mix(seed, 1, 1))?;
    let mut positives: Vec<(NodeId, NodeId)> = held.into_iter().collect();
    positives.sort_unstable();
    let task = LinkTask {
        train_edges: kept.iter().map(|&(u, v, _)| (u, v)).collect(),
        valid: None,
        test: LinkEvalSet {
            positives,
            negatives: NegativeSet::Pairs(negatives),
        },
        metric,
    };
    Ok((train_graph, task))
}

fn pair_features(features: ArrayView2<f64>, pairs: &[(NodeId, NodeId)], combiner: EdgeCombiner) -> Array2<f64> {
    let d = features.ncols();
    let mut out = Array2::zeros((pairs.len(), d));
    for (i, &(u, v)) in pairs.iter().enumerate() {
        let (ru, rv) = (features.row(u as usize), features.row(v as usize));
        let f = edge_feature(ru.as_slice().unwrap(), rv.as_slice().unwrap(), combiner).expect("same dimension");
        out.row_mut(i).assign(&ndarray::ArrayView1::from(&f));
    }
    out
}

fn link_scores(model: &Mlp, features: ArrayView2<f64>, pairs: &[(NodeId, NodeId)], combiner: EdgeCombiner) -> Vec<f64> {
    if pairs.is_empty() {
        return Vec::new();
    }
    model
        .predict_proba(pair_features(features, pairs, combiner).view())
        .column(1)
        .to_vec()
}

/// Scores an evaluation set under `metric` given a pair scorer.
pub fn score_link_set(set: &LinkEvalSet, metric: LinkMetric, score: impl Fn(&[(NodeId, NodeId)]) -> Vec<f64>) -> Result<f64> {
    let pos = score(&set.positives);
    match metric {
        LinkMetric::RocAuc | LinkMetric::HitsAtK(_) => {
            let neg = score(&set.negative_pairs());
            if let LinkMetric::HitsAtK(k) = metric {
                return hits_at_k(&pos, &neg, k);
            }
            let labels: Vec<bool> = pos.iter().map(|_| true).chain(neg.iter().map(|_| false)).collect();
            let scores: Vec<f64> = pos.into_iter().chain(neg).collect();
            roc_auc(&scores, &labels)
        }
        LinkMetric::Mrr => {
            let instances: Vec<(f64, Vec<f64>)> = match &set.negatives {
                NegativeSet::Pairs(pairs) => {
                    let shared = score(pairs);
                    pos.into_iter().map(|p| (p, shared.clone())).collect()
                }
                NegativeSet::Candidates(lists) => set
                    .positives
                    .iter()
                    .zip(lists)
                    .zip(pos)
                    .map(|((&(u, _), l), p)| {
                        let pairs: Vec<_> = l.iter().map(|&c| (u, c)).collect();
                        (p, score(&pairs))
                    })
                    .collect(),
            };
            mrr(&instances)
        }
    }
}

/// One link-prediction run: sample 1:1 training negatives with `cfg.seed`,
/// fit the MLP on combined pair features, return the test metric.
pub fn link_prediction_once(
    g: &Graph,
    features: ArrayView2<f64>,
    task: &LinkTask,
    cfg: &MlpConfig,
    combiner: EdgeCombiner,
) -> Result<f64> {
    let exclude: HashSet<_> = task.train_edges.iter().map(|&e| canon(g.is_directed(), e)).collect();
    let negatives = sample_non_edges(g, task.train_edges.len(), &exclude, mix(cfg.seed, 2, 2))?;
    let pairs: Vec<(NodeId, NodeId)> = task.train_edges.iter().copied().chain(negatives).collect();
    let labels: Vec<usize> = (0..pairs.len()).map(|i| usize::from(i < task.train_edges.len())).collect();
    let x = pair_features(features, &pairs, combiner);

    let mut valid_score = |m: &Mlp| {
        let set = task.valid.as_ref().expect("selector only built with a valid set");
        score_link_set(set, task.metric, |p| link_scores(m, features, p, combiner)).unwrap_or(0.0)
    };
    let selector: Option<&mut dyn FnMut(&Mlp) -> f64> = task.valid.as_ref().map(|_| &mut valid_score as _);
    let trained = train_mlp(x.view(), &labels, 2, cfg, selector)?;
    score_link_set(&task.test, task.metric, |p| link_scores(&trained.model, features, p, combiner))
}

/// Repeats [`link_prediction_once`] `runs` times with derived seeds.
pub fn run_link_prediction(
    g: &Graph,
    m: &EmbeddingMatrix,
    task: &LinkTask,
    cfg: &MlpConfig,
    combiner: EdgeCombiner,
    runs: usize,
) -> Result<EvalReport> {
    if m.rows() != g.num_nodes() {
        return Err(Error::DimensionMismatch {
            expected: g.num_nodes(),
            actual: m.rows(),
        });
    }
    if runs == 0 {
        return Err(Error::InvalidArgument("runs must be at least 1".into()));
    }
    task.validate(g)?;
    let features = embedding_features(m);
    let values = (0..runs)
        .into_par_iter()
        .map(|r| {
            let cfg = MlpConfig {
                seed: run_seed(cfg.seed, r),
                ..cfg.clone()
            };
            link_prediction_once(g, features.view(), task, &cfg, combiner)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(EvalReport::from_values(task.metric.name(), values))
}
