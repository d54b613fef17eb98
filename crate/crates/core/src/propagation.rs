//! Neighbor feature aggregation and propagation.
//!
//! Each iteration replaces every row with `(1 - r) * M[v] + r * agg(v, M)`,
//! reading only the previous iteration's matrix. Aggregation runs over
//! in-neighbors on directed graphs and uses edge weights when present. Nodes
//! with nothing to aggregate keep their row.

use ndarray::Array2;
use rayon::prelude::*;
use serde::Serialize;

use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::graph::{Direction, Graph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AggregationMethod {
    Average,
    /// Softmax over center·neighbor dot products (experimental).
    Attention,
}

impl std::str::FromStr for AggregationMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "average" | "mean" => Ok(AggregationMethod::Average),
            "attention" => Ok(AggregationMethod::Attention),
            other => Err(Error::InvalidArgument(format!(
                "unknown aggregation method {other:?} (expected average or attention)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PropagationConfig {
    pub rate: f64,
    pub iterations: usize,
    pub method: AggregationMethod,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        PropagationConfig {
            rate: 0.1,
            iterations: 1,
            method: AggregationMethod::Average,
        }
    }
}

impl PropagationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rate) {
            return Err(Error::InvalidArgument(format!(
                "propagation rate {} outside [0, 1]",
                self.rate
            )));
        }
        Ok(())
    }
}

fn check_node(g: &Graph, m: &EmbeddingMatrix, v: usize) -> Result<()> {
    if m.rows() != g.num_nodes() {
        return Err(Error::DimensionMismatch {
            expected: g.num_nodes(),
            actual: m.rows(),
        });
    }
    if v >= g.num_nodes() {
        return Err(Error::NodeOutOfRange {
            node: v,
            num_nodes: g.num_nodes(),
        });
    }
    Ok(())
}

fn to_f64(row: &[f32]) -> Vec<f64> {
    row.iter().map(|&x| x as f64).collect()
}

fn average_into(g: &Graph, v: usize, m: &EmbeddingMatrix, out: &mut [f64]) -> bool {
    let nbrs = g.neighbors_unchecked(v, Direction::In);
    let total: f64 = (0..nbrs.len()).map(|i| nbrs.weight(i)).sum();
    if nbrs.is_empty() || total <= 0.0 {
        return false;
    }
    out.fill(0.0);
    for (u, w) in nbrs.iter() {
        let w = w / total;
        for (o, &x) in out.iter_mut().zip(m.row(u as usize)) {
            *o += w * x as f64;
        }
    }
    true
}

fn attention_into(g: &Graph, v: usize, m: &EmbeddingMatrix, out: &mut [f64]) -> bool {
    let nbrs = g.neighbors_unchecked(v, Direction::In);
    if nbrs.is_empty() {
        return false;
    }
    let center = m.row(v);
    let logits: Vec<f64> = nbrs
        .targets()
        .iter()
        .map(|&u| {
            m.row(u as usize)
                .iter()
                .zip(center)
                .map(|(&a, &b)| a as f64 * b as f64)
                .sum()
        })
        .collect();
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scores: Vec<f64> = logits
        .iter()
        .enumerate()
        .map(|(i, l)| nbrs.weight(i) * (l - max).exp())
        .collect();
    let z: f64 = scores.iter().sum();
    if z.is_nan() || z <= 0.0 {
        return false;
    }
    out.fill(0.0);
    for (&u, s) in nbrs.targets().iter().zip(&scores) {
        let w = s / z;
        for (o, &x) in out.iter_mut().zip(m.row(u as usize)) {
            *o += w * x as f64;
        }
    }
    true
}

/// Weighted mean of the (in-)neighbor rows of `v`, or `M[v]` when it has none.
pub fn aggregate_average(g: &Graph, v: usize, m: &EmbeddingMatrix) -> Result<Vec<f64>> {
    check_node(g, m, v)?;
    let mut out = vec![0.0; m.dim()];
    if average_into(g, v, m, &mut out) {
        Ok(out)
    } else {
        Ok(to_f64(m.row(v)))
    }
}

/// Convex combination of the (in-)neighbor rows of `v` with weights
/// `∝ edge_weight * exp(M[v]·M[u])`, or `M[v]` when it has none.
pub fn aggregate_attention(g: &Graph, v: usize, m: &EmbeddingMatrix) -> Result<Vec<f64>> {
    check_node(g, m, v)?;
    let mut out = vec![0.0; m.dim()];
    if attention_into(g, v, m, &mut out) {
        Ok(out)
    } else {
        Ok(to_f64(m.row(v)))
    }
}

fn step(g: &Graph, prev: &EmbeddingMatrix, rate: f64, method: AggregationMethod) -> EmbeddingMatrix {
    let dim = prev.dim();
    let mut next = prev.clone();
    next.as_mut_slice()
        .par_chunks_mut(dim.max(1))
        .enumerate()
        .for_each_init(
            || vec![0.0f64; dim],
            |agg, (v, row)| {
                let found = match method {
                    AggregationMethod::Average => average_into(g, v, prev, agg),
                    AggregationMethod::Attention => attention_into(g, v, prev, agg),
                };
                if found {
                    for (x, a) in row.iter_mut().zip(agg.iter()) {
                        *x = ((1.0 - rate) * *x as f64 + rate * a) as f32;
                    }
                }
            },
        );
    next
}

/// Applies `cfg.iterations` synchronous propagation steps. The input is left
/// untouched; `rate == 0` or zero iterations return an exact copy.
pub fn propagate(g: &Graph, m: &EmbeddingMatrix, cfg: &PropagationConfig) -> Result<EmbeddingMatrix> {
    cfg.validate()?;
    if m.rows() != g.num_nodes() {
        return Err(Error::DimensionMismatch {
            expected: g.num_nodes(),
            actual: m.rows(),
        });
    }
    if cfg.rate == 0.0 || cfg.iterations == 0 || m.dim() == 0 {
        return Ok(m.clone());
    }
    let mut cur = step(g, m, cfg.rate, cfg.method);
    for _ in 1..cfg.iterations {
        cur = step(g, &cur, cfg.rate, cfg.method);
    }
    Ok(cur)
}

/// Row-normalized (in-)adjacency as a dense matrix; rows of nodes without
/// neighbors are zero. Used to cross-check [`propagate`] algebraically.
pub fn dense_transition(g: &Graph) -> Array2<f64> {
    let n = g.num_nodes();
    let mut p = Array2::zeros((n, n));
    for v in 0..n {
        let nbrs = g.neighbors_unchecked(v, Direction::In);
        let total: f64 = (0..nbrs.len()).map(|i| nbrs.weight(i)).sum();
        if total > 0.0 {
            for (u, w) in nbrs.iter() {
                p[[v, u as usize]] += w / total;
            }
        }
    }
    p
}
