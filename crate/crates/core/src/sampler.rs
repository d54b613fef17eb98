//! No-walk corpus generation: each sentence is a center node followed by a
//! hop-prioritized sample of its neighborhood. One-hop neighbors always come
//! first; two-hop neighbors only fill the remaining slots.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::seed::{rng_for, Rng};

/// Sub-seed domain tag for random-walk streams, keeping them disjoint from
/// the neighborhood sampler's `(node, round)` streams.
const WALK_DOMAIN: u64 = 1 << 63;

/// A center node followed by sampled context nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence(pub Vec<NodeId>);

impl Sentence {
    pub fn center(&self) -> NodeId {
        self.0[0]
    }

    pub fn context(&self) -> &[NodeId] {
        &self.0[1..]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusKind {
    NoWalk,
    RandomWalk,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusMeta {
    pub kind: CorpusKind,
    /// Neighbor limit for no-walk corpora, walk length for random walks.
    pub num: usize,
    /// Sampling rounds (walks per node for random walks).
    pub n_sample: usize,
    pub seed: u64,
    /// Whether sentences are guaranteed to hold distinct nodes.
    pub distinct: bool,
}

/// Sentences stored back to back, CSR style.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    nodes: Vec<NodeId>,
    offsets: Vec<usize>,
    pub meta: CorpusMeta,
}

impl Corpus {
    pub fn from_sentences<I, S>(sentences: I, meta: CorpusMeta) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[NodeId]>,
    {
        let mut nodes = Vec::new();
        let mut offsets = vec![0];
        for s in sentences {
            nodes.extend_from_slice(s.as_ref());
            offsets.push(nodes.len());
        }
        Corpus { nodes, offsets, meta }
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sentence(&self, i: usize) -> &[NodeId] {
        &self.nodes[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn sentences(&self) -> impl ExactSizeIterator<Item = &[NodeId]> + '_ {
        self.offsets.windows(2).map(move |w| &self.nodes[w[0]..w[1]])
    }

    /// Total number of node occurrences across all sentences.
    pub fn num_tokens(&self) -> usize {
        self.nodes.len()
    }

    pub fn max_node(&self) -> Option<NodeId> {
        self.nodes.iter().copied().max()
    }

    /// Occurrence count of every node id below `num_nodes`.
    pub fn frequencies(&self, num_nodes: usize) -> Vec<u64> {
        let mut freq = vec![0u64; num_nodes];
        for &v in &self.nodes {
            freq[v as usize] += 1;
        }
        freq
    }

    /// One sentence per line, space-separated node ids.
    pub fn write_text(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        let write = |out: &mut BufWriter<File>| -> std::io::Result<()> {
            for s in self.sentences() {
                let mut first = true;
                for v in s {
                    if !first {
                        out.write_all(b" ")?;
                    }
                    write!(out, "{v}")?;
                    first = false;
                }
                out.write_all(b"\n")?;
            }
            out.flush()
        };
        write(&mut out).map_err(|e| Error::io(path, e))
    }

    pub fn read_text(path: impl AsRef<Path>, meta: CorpusMeta) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut nodes = Vec::new();
        let mut offsets = vec![0];
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            for tok in line.split_whitespace() {
                let v = tok
                    .parse::<NodeId>()
                    .map_err(|_| Error::parse(path, idx + 1, format!("invalid node id {tok:?}")))?;
                nodes.push(v);
            }
            offsets.push(nodes.len());
        }
        Ok(Corpus { nodes, offsets, meta })
    }
}

/// `max(8, ceil(average degree))`.
pub fn default_num(g: &Graph) -> usize {
    (g.average_degree().ceil() as usize).max(8)
}

/// Reusable per-worker buffers. `stamp` marks visited nodes without clearing.
struct Scratch {
    stamp: Vec<u32>,
    epoch: u32,
    frontier: Vec<NodeId>,
}

impl Scratch {
    fn new(num_nodes: usize) -> Self {
        Scratch {
            stamp: vec![0; num_nodes],
            epoch: 0,
            frontier: Vec::new(),
        }
    }

    fn next_epoch(&mut self) -> u32 {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.fill(0);
            self.epoch = 1;
        }
        self.epoch
    }
}

fn sample_into(g: &Graph, v: usize, num: usize, rng: &mut Rng, scratch: &mut Scratch, out: &mut Vec<NodeId>) {
    out.clear();
    out.push(v as NodeId);
    let one_hop = g.out_targets(v);
    if one_hop.len() > num {
        scratch.frontier.clear();
        scratch.frontier.extend_from_slice(one_hop);
        let (picked, _) = scratch.frontier.partial_shuffle(rng, num);
        out.extend_from_slice(picked);
        return;
    }
    out.extend_from_slice(one_hop);
    out[1..].shuffle(rng);
    if one_hop.len() == num {
        return;
    }

    let epoch = scratch.next_epoch();
    scratch.stamp[v] = epoch;
    for &u in one_hop {
        scratch.stamp[u as usize] = epoch;
    }
    scratch.frontier.clear();
    for &u in one_hop {
        for &w in g.out_targets(u as usize) {
            let slot = &mut scratch.stamp[w as usize];
            if *slot != epoch {
                *slot = epoch;
                scratch.frontier.push(w);
            }
        }
    }
    let need = num - one_hop.len();
    if scratch.frontier.len() <= need {
        scratch.frontier.shuffle(rng);
        out.extend_from_slice(&scratch.frontier);
    } else {
        let (picked, _) = scratch.frontier.partial_shuffle(rng, need);
        out.extend_from_slice(picked);
    }
}

/// Samples one sentence for center `v`: a shuffle of all one-hop neighbors,
/// topped up from the deduplicated two-hop frontier (excluding `v`) when there
/// are fewer than `num`, then truncated to `num` context nodes.
pub fn sample_neighborhood(g: &Graph, v: usize, num: usize, rng: &mut Rng) -> Result<Sentence> {
    if v >= g.num_nodes() {
        return Err(Error::NodeOutOfRange {
            node: v,
            num_nodes: g.num_nodes(),
        });
    }
    if num == 0 {
        return Err(Error::InvalidArgument("num must be at least 1".into()));
    }
    let mut scratch = Scratch::new(g.num_nodes());
    let mut out = Vec::with_capacity(num + 1);
    sample_into(g, v, num, rng, &mut scratch, &mut out);
    Ok(Sentence(out))
}

/// Runs `n_sample` sampling rounds over every node. Sentence order is
/// round-major then node id; node `v` in round `r` draws from
/// `rng_for(seed, v, r)`, so the output does not depend on the thread count.
pub fn generate_corpus(g: &Graph, num: usize, n_sample: usize, seed: u64) -> Result<Corpus> {
    if g.num_nodes() == 0 {
        return Err(Error::EmptyGraph);
    }
    if num == 0 || n_sample == 0 {
        return Err(Error::InvalidArgument("num and n_sample must be at least 1".into()));
    }
    let n = g.num_nodes();
    let sentences: Vec<Vec<NodeId>> = (0..n * n_sample)
        .into_par_iter()
        .map_init(
            || Scratch::new(n),
            |scratch, job| {
                let (round, v) = (job / n, job % n);
                if g.out_targets(v).is_empty() {
                    return Vec::new();
                }
                let mut rng = rng_for(seed, v as u64, round as u64);
                let mut out = Vec::with_capacity(num + 1);
                sample_into(g, v, num, &mut rng, scratch, &mut out);
                out
            },
        )
        .collect();
    let meta = CorpusMeta {
        kind: CorpusKind::NoWalk,
        num,
        n_sample,
        seed,
        distinct: true,
    };
    Ok(Corpus::from_sentences(sentences.into_iter().filter(|s| s.len() >= 2), meta))
}

/// Uniform random walks of up to `walk_len` nodes, `walks_per_node` from each
/// start node. A walk stops early at a node without out-neighbors. Walks may
/// revisit nodes, so the corpus is marked non-distinct.
pub fn baseline_random_walk_corpus(g: &Graph, walk_len: usize, walks_per_node: usize, seed: u64) -> Result<Corpus> {
    if g.num_nodes() == 0 {
        return Err(Error::EmptyGraph);
    }
    if walk_len < 2 {
        return Err(Error::InvalidArgument("walk length must be at least 2".into()));
    }
    let n = g.num_nodes();
    let walks: Vec<Vec<NodeId>> = (0..n * walks_per_node)
        .into_par_iter()
        .map(|job| {
            let (round, start) = (job / n, job % n);
            let mut rng = rng_for(seed, start as u64, WALK_DOMAIN | round as u64);
            let mut walk = Vec::with_capacity(walk_len);
            walk.push(start as NodeId);
            let mut cur = start;
            while walk.len() < walk_len {
                let Some(&next) = g.out_targets(cur).choose(&mut rng) else {
                    break;
                };
                walk.push(next);
                cur = next as usize;
            }
            walk
        })
        .collect();
    let meta = CorpusMeta {
        kind: CorpusKind::RandomWalk,
        num: walk_len,
        n_sample: walks_per_node,
        seed,
        distinct: false,
    };
    Ok(Corpus::from_sentences(walks, meta))
}
