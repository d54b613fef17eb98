//! Synthetic graphs for tests, examples and benchmarks.

use rand::Rng as _;

use crate::error::Result;
use crate::graph::{Graph, NodeId};
use crate::seed::rng_for;

fn undirected(n: usize, edges: Vec<(NodeId, NodeId)>) -> Result<Graph> {
    Graph::from_edges(n, edges.into_iter().map(|(a, b)| (a, b, 1.0)), false, false, true)
}

/// G(n, p): every unordered pair independently with probability `p`.
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Graph> {
    Graph::from_edges(n, erdos_renyi_edges(n, p, seed), false, false, true)
}

/// The raw edge list behind [`erdos_renyi`].
pub fn erdos_renyi_edges(n: usize, p: f64, seed: u64) -> Vec<(NodeId, NodeId, f64)> {
    let mut rng = rng_for(seed, 0xE5, 0);
    let mut edges = Vec::new();
    for a in 0..n as NodeId {
        for b in a + 1..n as NodeId {
            if rng.random::<f64>() < p {
                edges.push((a, b, 1.0));
            }
        }
    }
    edges
}

/// Barabási–Albert graph: each new node links to `m` distinct existing nodes
/// chosen proportionally to degree. Average degree approaches `2m`.
pub fn preferential_attachment(n: usize, m: usize, seed: u64) -> Result<Graph> {
    let mut rng = rng_for(seed, 0xBA, 0);
    let m = m.max(1);
    let mut edges = Vec::with_capacity(n * m);
    // Endpoint multiset: sampling from it is sampling by degree.
    let mut endpoints: Vec<NodeId> = Vec::with_capacity(2 * n * m);
    let seed_nodes = (m + 1).min(n);
    for a in 0..seed_nodes as NodeId {
        for b in a + 1..seed_nodes as NodeId {
            edges.push((a, b));
            endpoints.push(a);
            endpoints.push(b);
        }
    }
    let mut chosen: Vec<NodeId> = Vec::with_capacity(m);
    for v in seed_nodes..n {
        chosen.clear();
        while chosen.len() < m.min(v) {
            let t = endpoints[rng.random_range(0..endpoints.len())];
            if !chosen.contains(&t) {
                chosen.push(t);
            }
        }
        for &t in &chosen {
            edges.push((v as NodeId, t));
            endpoints.push(v as NodeId);
            endpoints.push(t);
        }
    }
    undirected(n, edges)
}

/// `num_cliques` complete graphs of `size` nodes; clique `i` is linked to
/// clique `i + 1` (cyclically) by one edge from its last node to the next
/// clique's first node. Node `v` belongs to clique `v / size`.
pub fn ring_of_cliques(num_cliques: usize, size: usize) -> Result<Graph> {
    undirected(num_cliques * size, ring_of_cliques_edges(num_cliques, size))
}

pub fn ring_of_cliques_edges(num_cliques: usize, size: usize) -> Vec<(NodeId, NodeId)> {
    let mut edges = Vec::new();
    for c in 0..num_cliques {
        let base = (c * size) as NodeId;
        for a in 0..size as NodeId {
            for b in a + 1..size as NodeId {
                edges.push((base + a, base + b));
            }
        }
        if num_cliques > 1 {
            let next = (((c + 1) % num_cliques) * size) as NodeId;
            edges.push((base + size as NodeId - 1, next));
        }
    }
    edges
}

pub fn path(n: usize) -> Result<Graph> {
    undirected(n, (1..n as NodeId).map(|v| (v - 1, v)).collect())
}

pub fn star(leaves: usize) -> Result<Graph> {
    undirected(leaves + 1, (1..=leaves as NodeId).map(|v| (0, v)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Direction;

    #[test]
    fn ring_of_cliques_shape() {
        let g = ring_of_cliques(10, 10).unwrap();
        assert_eq!(g.num_nodes(), 100);
        assert_eq!(g.num_edges(), 10 * 45 + 10);
        assert!(g.has_edge(9, 10));
        assert!(g.has_edge(99, 0));
    }

    #[test]
    fn preferential_attachment_degree() {
        let g = preferential_attachment(2000, 5, 1).unwrap();
        assert!((g.average_degree() - 10.0).abs() < 0.2, "{}", g.average_degree());
        let max = (0..2000).map(|v| g.degree(v, Direction::Out).unwrap()).max().unwrap();
        assert!(max > 50);
    }

    #[test]
    fn small_shapes() {
        assert_eq!(path(5).unwrap().num_edges(), 4);
        assert_eq!(star(4).unwrap().degree(0, Direction::Out).unwrap(), 4);
        let g = erdos_renyi(30, 1.0, 0).unwrap();
        assert_eq!(g.num_edges(), 435);
    }
}
