use neighbor2vec::generators::{erdos_renyi, path};
use neighbor2vec::seed::with_threads;
use neighbor2vec::{baseline_random_walk_corpus, generate_corpus, Direction};

#[test]
fn corpus_is_identical_across_thread_counts() {
    let g = erdos_renyi(100, 0.05, 3).unwrap();
    let one = with_threads(1, || generate_corpus(&g, 8, 5, 42).unwrap());
    let four = with_threads(4, || generate_corpus(&g, 8, 5, 42).unwrap());
    assert_eq!(one, four);

    let dir = tempfile::tempdir().unwrap();
    one.write_text(dir.path().join("a")).unwrap();
    four.write_text(dir.path().join("b")).unwrap();
    assert_eq!(std::fs::read(dir.path().join("a")).unwrap(), std::fs::read(dir.path().join("b")).unwrap());
}

#[test]
fn every_connected_node_is_a_center_n_sample_times() {
    let g = erdos_renyi(80, 0.03, 9).unwrap();
    let corpus = generate_corpus(&g, 6, 4, 1).unwrap();
    let mut centers = vec![0usize; 80];
    for s in corpus.sentences() {
        centers[s[0] as usize] += 1;
    }
    for v in 0..80 {
        let expected = if g.degree(v, Direction::Out).unwrap() > 0 { 4 } else { 0 };
        assert_eq!(centers[v], expected, "node {v}");
    }
}

#[test]
fn different_seeds_give_different_corpora() {
    let g = erdos_renyi(60, 0.2, 1).unwrap();
    assert_ne!(generate_corpus(&g, 5, 2, 1).unwrap(), generate_corpus(&g, 5, 2, 2).unwrap());
}

#[test]
fn walk_steps_are_uniform_over_neighbors() {
    // Interior nodes of a path step left or right with probability 1/2.
    let g = path(10).unwrap();
    let walks = baseline_random_walk_corpus(&g, 2, 1000, 5).unwrap();
    assert_eq!(walks.len(), 10_000);
    let mut counts = [[0u64; 2]; 10];
    for w in walks.sentences() {
        let (a, b) = (w[0] as usize, w[1] as usize);
        if (1..9).contains(&a) {
            counts[a][usize::from(b > a)] += 1;
        } else {
            assert_eq!(b, if a == 0 { 1 } else { 8 });
        }
    }
    for (v, [left, right]) in counts.iter().enumerate().take(9).skip(1) {
        let total = (left + right) as f64;
        let sigma = (total * 0.25).sqrt();
        assert!((*left as f64 - total / 2.0).abs() <= 3.0 * sigma, "node {v}: {left} vs {right}");
    }
}
