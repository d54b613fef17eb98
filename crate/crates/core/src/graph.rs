//! Immutable compressed-sparse-row graph and edge-list ingestion.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub type NodeId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Out,
    In,
}

#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub directed: bool,
    pub weighted: bool,
    pub comment_prefix: char,
    /// Merge repeated `(u, v)` pairs, summing their weights. With this off the
    /// graph keeps parallel edges.
    pub dedupe: bool,
    /// Lower bound on the node count, for datasets whose highest ids are isolated.
    pub min_nodes: usize,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            directed: false,
            weighted: false,
            comment_prefix: '#',
            dedupe: true,
            min_nodes: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Adjacency {
    offsets: Vec<usize>,
    targets: Vec<NodeId>,
    weights: Option<Vec<f64>>,
}

impl Adjacency {
    /// Counting-sort construction; within each row targets end up sorted.
    fn build(num_nodes: usize, arcs: &[(NodeId, NodeId, f64)], weighted: bool) -> Self {
        let mut offsets = vec![0usize; num_nodes + 1];
        for &(u, _, _) in arcs {
            offsets[u as usize + 1] += 1;
        }
        for i in 0..num_nodes {
            offsets[i + 1] += offsets[i];
        }
        let mut cursor = offsets.clone();
        let mut targets = vec![0; arcs.len()];
        let mut weights = if weighted { vec![0.0; arcs.len()] } else { Vec::new() };
        for &(u, v, w) in arcs {
            let slot = cursor[u as usize];
            cursor[u as usize] += 1;
            targets[slot] = v;
            if weighted {
                weights[slot] = w;
            }
        }
        for v in 0..num_nodes {
            let (lo, hi) = (offsets[v], offsets[v + 1]);
            if weighted {
                let mut row: Vec<(NodeId, f64)> = targets[lo..hi]
                    .iter()
                    .copied()
                    .zip(weights[lo..hi].iter().copied())
                    .collect();
                row.sort_by_key(|&(t, _)| t);
                for (k, (t, w)) in row.into_iter().enumerate() {
                    targets[lo + k] = t;
                    weights[lo + k] = w;
                }
            } else {
                targets[lo..hi].sort_unstable();
            }
        }
        Adjacency {
            offsets,
            targets,
            weights: weighted.then_some(weights),
        }
    }

    #[inline]
    fn slice(&self, v: usize) -> Neighbors<'_> {
        let (lo, hi) = (self.offsets[v], self.offsets[v + 1]);
        Neighbors {
            targets: &self.targets[lo..hi],
            weights: self.weights.as_ref().map(|w| &w[lo..hi]),
        }
    }
}

/// The adjacency slice of one node in one direction.
#[derive(Debug, Clone, Copy)]
pub struct Neighbors<'a> {
    targets: &'a [NodeId],
    weights: Option<&'a [f64]>,
}

impl<'a> Neighbors<'a> {
    pub fn targets(&self) -> &'a [NodeId] {
        self.targets
    }

    /// Edge weights aligned with [`Neighbors::targets`], `None` for unweighted graphs.
    pub fn weights(&self) -> Option<&'a [f64]> {
        self.weights
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        self.weights.map_or(1.0, |w| w[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, f64)> + 'a {
        let weights = self.weights;
        self.targets
            .iter()
            .enumerate()
            .map(move |(i, &t)| (t, weights.map_or(1.0, |w| w[i])))
    }
}

/// Immutable CSR graph. Undirected graphs store every edge in both endpoint
/// rows; directed graphs additionally carry the transposed (in-direction) rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    num_nodes: usize,
    directed: bool,
    num_edges: usize,
    out: Adjacency,
    inc: Option<Adjacency>,
}

impl Graph {
    /// Builds a graph from raw edges. Self-loops are dropped and, when `dedupe`
    /// is set, repeated pairs are merged with their weights summed. For
    /// undirected graphs `(u, v)` and `(v, u)` name the same edge.
    pub fn from_edges<I>(num_nodes: usize, edges: I, directed: bool, weighted: bool, dedupe: bool) -> Result<Self>
    where
        I: IntoIterator<Item = (NodeId, NodeId, f64)>,
    {
        let mut list: Vec<(NodeId, NodeId, f64)> = Vec::new();
        for (u, v, w) in edges {
            for node in [u, v] {
                if node as usize >= num_nodes {
                    return Err(Error::NodeOutOfRange {
                        node: node as usize,
                        num_nodes,
                    });
                }
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::InvalidArgument(format!("edge ({u}, {v}) has invalid weight {w}")));
            }
            if u == v {
                continue;
            }
            let (a, b) = if directed || u < v { (u, v) } else { (v, u) };
            list.push((a, b, if weighted { w } else { 1.0 }));
        }
        if dedupe {
            list.sort_by_key(|&(a, b, _)| (a, b));
            let mut merged: Vec<(NodeId, NodeId, f64)> = Vec::with_capacity(list.len());
            for e in list {
                match merged.last_mut() {
                    Some(last) if last.0 == e.0 && last.1 == e.1 => last.2 += e.2,
                    _ => merged.push(e),
                }
            }
            list = merged;
        }
        let num_edges = list.len();

        let (out, inc) = if directed {
            let transposed: Vec<_> = list.iter().map(|&(a, b, w)| (b, a, w)).collect();
            (
                Adjacency::build(num_nodes, &list, weighted),
                Some(Adjacency::build(num_nodes, &transposed, weighted)),
            )
        } else {
            let mut both = Vec::with_capacity(2 * list.len());
            for &(a, b, w) in &list {
                both.push((a, b, w));
                both.push((b, a, w));
            }
            (Adjacency::build(num_nodes, &both, weighted), None)
        };
        Ok(Graph {
            num_nodes,
            directed,
            num_edges,
            out,
            inc,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn is_weighted(&self) -> bool {
        self.out.weights.is_some()
    }

    /// Number of distinct edges (arcs for directed graphs).
    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    /// Number of stored out-direction adjacency entries.
    pub fn num_edge_slots(&self) -> usize {
        self.out.targets.len()
    }

    pub fn average_degree(&self) -> f64 {
        if self.num_nodes == 0 {
            0.0
        } else {
            self.num_edge_slots() as f64 / self.num_nodes as f64
        }
    }

    pub fn out_offsets(&self) -> &[usize] {
        &self.out.offsets
    }

    pub fn out_targets_all(&self) -> &[NodeId] {
        &self.out.targets
    }

    fn check(&self, v: usize) -> Result<()> {
        if v < self.num_nodes {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange {
                node: v,
                num_nodes: self.num_nodes,
            })
        }
    }

    /// Adjacency of `v`. For undirected graphs both directions are the same slice.
    pub fn neighbors(&self, v: usize, dir: Direction) -> Result<Neighbors<'_>> {
        self.check(v)?;
        Ok(self.neighbors_unchecked(v, dir))
    }

    /// Like [`Graph::neighbors`] but panics when `v` is out of range.
    #[inline]
    pub fn neighbors_unchecked(&self, v: usize, dir: Direction) -> Neighbors<'_> {
        match (dir, &self.inc) {
            (Direction::In, Some(inc)) => inc.slice(v),
            _ => self.out.slice(v),
        }
    }

    #[inline]
    pub fn out_targets(&self, v: usize) -> &[NodeId] {
        let (lo, hi) = (self.out.offsets[v], self.out.offsets[v + 1]);
        &self.out.targets[lo..hi]
    }

    pub fn degree(&self, v: usize, dir: Direction) -> Result<usize> {
        self.neighbors(v, dir).map(|n| n.len())
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.num_nodes && v < self.num_nodes && self.out_targets(u).binary_search(&(v as NodeId)).is_ok()
    }

    /// Each distinct edge once: `u < v` for undirected graphs, every arc for directed.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId, f64)> + '_ {
        (0..self.num_nodes).flat_map(move |u| {
            self.out
                .slice(u)
                .iter()
                .filter(move |&(v, _)| self.directed || (u as NodeId) < v)
                .map(move |(v, w)| (u as NodeId, v, w))
        })
    }

    pub fn write_edge_list(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        let weighted = self.is_weighted();
        let write = |out: &mut BufWriter<File>| -> std::io::Result<()> {
            for (u, v, w) in self.edges() {
                if weighted {
                    writeln!(out, "{u} {v} {w}")?;
                } else {
                    writeln!(out, "{u} {v}")?;
                }
            }
            out.flush()
        };
        write(&mut out).map_err(|e| Error::io(path, e))
    }
}

/// Mapping from external string ids to dense integer ids, read from
/// `string_id<TAB>int_id` lines.
#[derive(Debug, Clone, Default)]
pub struct NodeIdMap {
    ids: HashMap<String, NodeId>,
}

impl NodeIdMap {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut ids = HashMap::new();
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let line = line.trim_end_matches(['\r', '\n']);
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (name, id) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(path, idx + 1, "expected string_id<TAB>int_id"))?;
            let id: NodeId = id
                .trim()
                .parse()
                .map_err(|_| Error::parse(path, idx + 1, format!("invalid integer id {id:?}")))?;
            if ids.insert(name.to_string(), id).is_some() {
                return Err(Error::parse(path, idx + 1, format!("duplicate string id {name:?}")));
            }
        }
        Ok(NodeIdMap { ids })
    }

    pub fn get(&self, name: &str) -> Option<NodeId> {
        self.ids.get(name).copied()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Resolves a node token to an id: integer parse, or lookup through a map.
pub(crate) fn resolve_node(token: &str, map: Option<&NodeIdMap>) -> std::result::Result<NodeId, String> {
    match map {
        Some(m) => m.get(token).ok_or_else(|| format!("unknown node id {token:?}")),
        None => token
            .parse::<NodeId>()
            .map_err(|_| format!("invalid node id {token:?}")),
    }
}

/// Loads a whitespace-separated edge list.
pub fn load_edge_list(path: impl AsRef<Path>, opts: &IngestOptions) -> Result<Graph> {
    load_edge_list_mapped(path, opts, None)
}

/// Loads an edge list whose node tokens are resolved through `map` when given.
pub fn load_edge_list_mapped(path: impl AsRef<Path>, opts: &IngestOptions, map: Option<&NodeIdMap>) -> Result<Graph> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(BufReader::new(file), path, opts, map)
}

pub fn parse_edge_list<R: BufRead>(
    reader: R,
    source: impl Into<PathBuf>,
    opts: &IngestOptions,
    map: Option<&NodeIdMap>,
) -> Result<Graph> {
    let source = source.into();
    let mut edges = Vec::new();
    let mut max_id: Option<NodeId> = None;
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(&source, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with(opts.comment_prefix) {
            continue;
        }
        let mut cols = trimmed.split_whitespace();
        let (Some(a), Some(b)) = (cols.next(), cols.next()) else {
            return Err(Error::parse(&source, lineno, "expected at least two columns"));
        };
        let u = resolve_node(a, map).map_err(|m| Error::parse(&source, lineno, m))?;
        let v = resolve_node(b, map).map_err(|m| Error::parse(&source, lineno, m))?;
        let w = match (opts.weighted, cols.next()) {
            (true, None) => return Err(Error::parse(&source, lineno, "missing weight column")),
            (true, Some(tok)) => {
                let w: f64 = tok
                    .parse()
                    .map_err(|_| Error::parse(&source, lineno, format!("invalid weight {tok:?}")))?;
                if w < 0.0 {
                    return Err(Error::parse(&source, lineno, format!("negative weight {w}")));
                }
                if !w.is_finite() {
                    return Err(Error::parse(&source, lineno, format!("non-finite weight {w}")));
                }
                w
            }
            (false, _) => 1.0,
        };
        max_id = Some(max_id.map_or(u.max(v), |m| m.max(u).max(v)));
        edges.push((u, v, w));
    }
    let num_nodes = max_id.map_or(0, |m| m as usize + 1).max(opts.min_nodes);
    Graph::from_edges(num_nodes, edges, opts.directed, opts.weighted, opts.dedupe)
}
