use std::collections::BTreeSet;

use neighbor2vec::generators::erdos_renyi_edges;
use neighbor2vec::{load_edge_list, Direction, Graph, IngestOptions, NodeId};
use proptest::prelude::*;

#[test]
fn erdos_renyi_degrees_match_recount_of_the_raw_lines() {
    let edges = erdos_renyi_edges(50, 0.2, 11);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("er.txt");
    let text: String = edges.iter().map(|(a, b, _)| format!("{a} {b}\n")).collect();
    std::fs::write(&path, &text).unwrap();

    let g = load_edge_list(&path, &IngestOptions { min_nodes: 50, ..Default::default() }).unwrap();
    let mut recount = [0usize; 50];
    for line in text.lines() {
        let mut it = line.split_whitespace().map(|t| t.parse::<usize>().unwrap());
        let (a, b) = (it.next().unwrap(), it.next().unwrap());
        recount[a] += 1;
        recount[b] += 1;
    }
    for v in 0..50 {
        assert_eq!(g.degree(v, Direction::Out).unwrap(), recount[v], "node {v}");
    }
}

fn edge_lists(max_nodes: usize) -> impl Strategy<Value = (usize, Vec<(NodeId, NodeId)>)> {
    (2..max_nodes).prop_flat_map(|n| {
        let pair = (0..n as NodeId, 0..n as NodeId);
        (Just(n), prop::collection::vec(pair, 0..4 * n))
    })
}

fn adjacency(g: &Graph) -> Vec<Vec<(NodeId, u64)>> {
    (0..g.num_nodes())
        .map(|v| g.neighbors(v, Direction::Out).unwrap().iter().map(|(u, w)| (u, w.to_bits())).collect())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn write_then_reload_keeps_adjacency((n, edges) in edge_lists(60), directed: bool, weighted: bool) {
        let g = Graph::from_edges(n, edges.iter().enumerate().map(|(i, &(a, b))| (a, b, 0.5 + i as f64)), directed, weighted, true).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.txt");
        g.write_edge_list(&path).unwrap();
        let opts = IngestOptions { directed, weighted, min_nodes: n, ..Default::default() };
        let back = load_edge_list(&path, &opts).unwrap();
        prop_assert_eq!(back.num_nodes(), g.num_nodes());
        prop_assert_eq!(adjacency(&back), adjacency(&g));
    }

    #[test]
    fn degree_sum_identity((n, edges) in edge_lists(60), directed: bool) {
        let g = Graph::from_edges(n, edges.iter().map(|&(a, b)| (a, b, 1.0)), directed, false, true).unwrap();
        let sum: usize = (0..n).map(|v| g.degree(v, Direction::Out).unwrap()).sum();
        prop_assert_eq!(sum, g.num_edge_slots());
        if !directed {
            prop_assert_eq!(sum, 2 * g.num_edges());
        }
        let distinct: BTreeSet<(NodeId, NodeId)> = edges
            .iter()
            .filter(|(a, b)| a != b)
            .map(|&(a, b)| if directed { (a, b) } else { (a.min(b), a.max(b)) })
            .collect();
        prop_assert_eq!(g.num_edges(), distinct.len());
    }

    #[test]
    fn in_and_out_lists_are_transposes((n, edges) in edge_lists(200)) {
        let g = Graph::from_edges(n, edges.iter().map(|&(a, b)| (a, b, 1.0)), true, false, true).unwrap();
        for &(a, b) in &edges {
            if a == b {
                continue;
            }
            prop_assert!(g.neighbors(b as usize, Direction::In).unwrap().targets().contains(&a));
            prop_assert!(g.neighbors(a as usize, Direction::Out).unwrap().targets().contains(&b));
        }
        for v in 0..n {
            for &u in g.neighbors(v, Direction::In).unwrap().targets() {
                prop_assert!(g.out_targets(u as usize).contains(&(v as NodeId)));
            }
        }
    }
}
