//! Acceptance suite. Each test checks one criterion at its pinned threshold
//! and prints a single `[PASS]`/`[FAIL]` line (visible with `--nocapture`).

use std::collections::{BTreeSet, VecDeque};
use std::path::PathBuf;
use std::sync::{Mutex, MutexGuard};
use std::time::Instant;

use neighbor2vec::eval::{
    self, accuracy, hits_at_k, holdout_link_task, mrr, roc_auc, EdgeCombiner, LinkMetric, MlpConfig, NodeLabelTask,
};
use neighbor2vec::generators::{preferential_attachment, ring_of_cliques};
use neighbor2vec::pipeline::{build_corpus, embed, linear_fit, EmbedConfig};
use neighbor2vec::propagation::{propagate, AggregationMethod, PropagationConfig};
use neighbor2vec::sampler::generate_corpus;
use neighbor2vec::seed::{rng_for, with_threads, Rng};
use neighbor2vec::sgns::{sgns_loss_and_grads, TrainConfig};
use neighbor2vec::{load_edge_list, EmbeddingMatrix, Graph, IngestOptions, NodeId};
use rand::Rng as _;

/// Timed criteria would skew each other if run concurrently; every test holds
/// this lock. A failed criterion poisons it, which is fine.
static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn verdict(id: &str, pass: bool, detail: String) {
    println!("[{}] criterion {id}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {id} failed: {detail}");
}

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

/// Random graph with at most 50 nodes and a density drawn per graph; the raw
/// edge list is kept for the oracle.
fn random_graph(seed: u64) -> (Graph, Vec<(NodeId, NodeId)>) {
    let mut rng = rng_for(seed, 77, 0);
    let n = rng.random_range(2..=50usize);
    let p = [0.02, 0.05, 0.1, 0.3, 0.6][rng.random_range(0..5)];
    let mut edges = Vec::new();
    for a in 0..n as NodeId {
        for b in a + 1..n as NodeId {
            if rng.random::<f64>() < p {
                edges.push((a, b));
            }
        }
    }
    let g = Graph::from_edges(n, edges.iter().map(|&(a, b)| (a, b, 1.0)), false, false, true).unwrap();
    (g, edges)
}

/// BFS distances from `src` over an adjacency built straight from the edge list.
fn bfs_distances(n: usize, edges: &[(NodeId, NodeId)], src: usize) -> Vec<Option<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a as usize].push(b as usize);
        adj[b as usize].push(a as usize);
    }
    let mut dist = vec![None; n];
    dist[src] = Some(0);
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        for &w in &adj[u] {
            if dist[w].is_none() {
                dist[w] = Some(dist[u].unwrap() + 1);
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Returns a description of the first rule the sentence breaks, if any.
fn sentence_violation(sentence: &[NodeId], v: usize, num: usize, dist: &[Option<usize>]) -> Option<String> {
    if sentence.first() != Some(&(v as NodeId)) {
        return Some("center is not first".into());
    }
    let tail = &sentence[1..];
    let tail_set: BTreeSet<usize> = tail.iter().map(|&x| x as usize).collect();
    if tail_set.len() != tail.len() || tail_set.contains(&v) {
        return Some("repeated node".into());
    }
    if tail.len() > num {
        return Some("too long".into());
    }
    let one: BTreeSet<usize> = (0..dist.len()).filter(|&u| dist[u] == Some(1)).collect();
    let closure: BTreeSet<usize> = (0..dist.len()).filter(|&u| matches!(dist[u], Some(1 | 2))).collect();
    if !tail_set.is_subset(&closure) {
        return Some("node beyond two hops".into());
    }
    if one.len() >= num {
        if !tail_set.is_subset(&one) || tail.len() != num {
            return Some("hop priority broken".into());
        }
    } else {
        let head: BTreeSet<usize> = tail[..one.len().min(tail.len())].iter().map(|&x| x as usize).collect();
        if head != one {
            return Some("one-hop neighbors not first".into());
        }
        if tail.len() != num.min(closure.len()) {
            return Some("closure truncation broken".into());
        }
        if closure.len() <= num && tail_set != closure {
            return Some("closure not exhausted".into());
        }
    }
    None
}

#[test]
fn criterion_1_sampler_oracle() {
    let _serial = serial();
    let start = Instant::now();
    let mut violations = Vec::new();
    let mut checked = 0usize;
    for seed in 0..100u64 {
        let (g, edges) = random_graph(seed);
        let n = g.num_nodes();
        let num = 1 + (seed as usize % 10);
        let dists: Vec<_> = (0..n).map(|v| bfs_distances(n, &edges, v)).collect();
        for v in 0..n {
            let mut rng = rng_for(seed, v as u64, 99);
            let s = neighbor2vec::sample_neighborhood(&g, v, num, &mut rng).unwrap();
            checked += 1;
            if let Some(why) = sentence_violation(&s.0, v, num, &dists[v]) {
                violations.push(format!("graph {seed} node {v}: {why}"));
            }
        }
        let corpus = generate_corpus(&g, num, 2, seed).unwrap();
        for s in corpus.sentences() {
            checked += 1;
            let v = s[0] as usize;
            if let Some(why) = sentence_violation(s, v, num, &dists[v]) {
                violations.push(format!("graph {seed} corpus node {v}: {why}"));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        "1",
        violations.is_empty() && secs < 10.0,
        format!("{checked} sentences, {} violations {:?}, {secs:.2}s (< 10s)", violations.len(), violations.first()),
    );
}

fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut plus = x.to_vec();
            let mut minus = x.to_vec();
            plus[i] += h;
            minus[i] -= h;
            (f(&plus) - f(&minus)) / (2.0 * h)
        })
        .collect()
}

fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff: f64 = analytic.iter().zip(numeric).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let na: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nb: f64 = numeric.iter().map(|b| b * b).sum::<f64>().sqrt();
    diff / na.max(nb).max(1e-8)
}

#[test]
fn criterion_2_sgns_gradients() {
    let _serial = serial();
    let start = Instant::now();
    let h = 1e-5;
    let mut worst = 0.0f64;
    for i in 0..100u64 {
        let mut rng = rng_for(i, 2, 2);
        let d = [1, 4, 16][i as usize % 3];
        let k = [1, 5][(i as usize / 3) % 2];
        let vec = |rng: &mut Rng| -> Vec<f64> { (0..d).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect() };
        let center = vec(&mut rng);
        let context = vec(&mut rng);
        let negs: Vec<Vec<f64>> = (0..k).map(|_| vec(&mut rng)).collect();
        let neg_refs: Vec<&[f64]> = negs.iter().map(Vec::as_slice).collect();
        let g = sgns_loss_and_grads(&center, &context, &neg_refs).unwrap();

        let loss = |c: &[f64], ctx: &[f64], ns: &[&[f64]]| sgns_loss_and_grads(c, ctx, ns).unwrap().loss;
        let num_center = central_difference(|x| loss(x, &context, &neg_refs), &center, h);
        let num_context = central_difference(|x| loss(&center, x, &neg_refs), &context, h);
        worst = worst.max(relative_error(&g.center, &num_center));
        worst = worst.max(relative_error(&g.context, &num_context));
        for j in 0..k {
            let num_neg = central_difference(
                |x| {
                    let mut refs = neg_refs.clone();
                    refs[j] = x;
                    loss(&center, &context, &refs)
                },
                &negs[j],
                h,
            );
            worst = worst.max(relative_error(&g.negatives[j], &num_neg));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        "2",
        worst < 1e-4 && secs < 5.0,
        format!("100 instances, worst relative error {worst:.2e} (< 1e-4), {secs:.2}s (< 5s)"),
    );
}

#[test]
fn criterion_3_propagation_invariants() {
    let _serial = serial();
    let mut violations = Vec::new();
    for seed in 0..20u64 {
        let (g, _) = random_graph(1000 + seed);
        let n = g.num_nodes();
        let mut rng = rng_for(seed, 3, 3);
        let m = EmbeddingMatrix::random_uniform(n, 4, 1.0, &mut rng);
        let rate = rng.random::<f64>();
        let iterations = 1 + seed as usize % 3;
        for method in [AggregationMethod::Average, AggregationMethod::Attention] {
            let zero_rate = PropagationConfig { rate: 0.0, iterations: 3, method };
            if propagate(&g, &m, &zero_rate).unwrap() != m {
                violations.push(format!("graph {seed}: r=0 not bit-exact"));
            }
            let zero_iter = PropagationConfig { rate, iterations: 0, method };
            if propagate(&g, &m, &zero_iter).unwrap() != m {
                violations.push(format!("graph {seed}: iterations=0 not bit-exact"));
            }
            let z: Vec<f32> = (0..4).map(|_| rng.random::<f32>() * 2.0 - 1.0).collect();
            let constant = EmbeddingMatrix::from_vec(n, 4, z.repeat(n)).unwrap();
            let out = propagate(&g, &constant, &PropagationConfig { rate, iterations, method }).unwrap();
            for v in 0..n {
                if out.row(v).iter().zip(&z).any(|(a, b)| (a - b).abs() > 1e-6) {
                    violations.push(format!("graph {seed}: constant rows moved at node {v}"));
                }
            }
        }
        // convexity of one average step
        let out = propagate(&g, &m, &PropagationConfig { rate, iterations: 1, method: AggregationMethod::Average }).unwrap();
        for v in 0..n {
            let nbrs = g.neighbors(v, neighbor2vec::Direction::In).unwrap();
            for j in 0..4 {
                let vals = std::iter::once(m.row(v)[j]).chain(nbrs.targets().iter().map(|&u| m.row(u as usize)[j]));
                let (lo, hi) = vals.fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
                let x = out.row(v)[j];
                if x < lo - 1e-6 || x > hi + 1e-6 {
                    violations.push(format!("graph {seed}: node {v} coordinate {j} outside [{lo}, {hi}]"));
                }
            }
        }
    }
    verdict("3", violations.is_empty(), format!("20 graphs, {} violations {:?}", violations.len(), violations.first()));
}

fn brute_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            if labels[i] && !labels[j] {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}

fn brute_hits(pos: &[f64], neg: &[f64], k: usize) -> f64 {
    let hits = pos.iter().filter(|&&p| neg.iter().filter(|&&x| x >= p).count() < k).count();
    hits as f64 / pos.len() as f64
}

fn brute_mrr(instances: &[(f64, Vec<f64>)]) -> f64 {
    let mut total = 0.0;
    for (p, cands) in instances {
        // positive sorted ahead of equal candidates
        let mut all: Vec<(f64, bool)> = cands.iter().map(|&c| (c, false)).collect();
        all.push((*p, true));
        all.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.cmp(&a.1)));
        let pos = all.iter().position(|x| x.1).unwrap();
        total += 1.0 / (pos + 1) as f64;
    }
    total / instances.len() as f64
}

#[test]
fn criterion_4_metric_oracles() {
    let _serial = serial();
    let mut mismatches = Vec::new();
    for i in 0..1000u64 {
        let mut rng = rng_for(i, 4, 4);
        // coarse scores create ties
        let score = |rng: &mut Rng| (rng.random_range(0..20) as f64) / 10.0;
        let len = rng.random_range(1..30usize);
        let classes = rng.random_range(1..5usize);
        let pred: Vec<usize> = (0..len).map(|_| rng.random_range(0..classes)).collect();
        let truth: Vec<usize> = (0..len).map(|_| rng.random_range(0..classes)).collect();
        let brute = pred.iter().zip(&truth).filter(|(a, b)| a == b).count() as f64 / len as f64;
        if accuracy(&pred, &truth).unwrap() != brute {
            mismatches.push(format!("accuracy instance {i}"));
        }

        let n = rng.random_range(2..40usize);
        let scores: Vec<f64> = (0..n).map(|_| score(&mut rng)).collect();
        let mut labels: Vec<bool> = (0..n).map(|_| rng.random::<bool>()).collect();
        labels[0] = true;
        labels[1] = false;
        if (roc_auc(&scores, &labels).unwrap() - brute_auc(&scores, &labels)).abs() > 1e-9 {
            mismatches.push(format!("auc instance {i}"));
        }

        let pos: Vec<f64> = (0..rng.random_range(1..20)).map(|_| score(&mut rng)).collect();
        let neg: Vec<f64> = (0..rng.random_range(1..30)).map(|_| score(&mut rng)).collect();
        let k = rng.random_range(1..=neg.len());
        if hits_at_k(&pos, &neg, k).unwrap() != brute_hits(&pos, &neg, k) {
            mismatches.push(format!("hits instance {i}"));
        }

        let instances: Vec<(f64, Vec<f64>)> = (0..rng.random_range(1..10))
            .map(|_| {
                let c = (0..rng.random_range(1..15)).map(|_| score(&mut rng)).collect();
                (score(&mut rng), c)
            })
            .collect();
        if mrr(&instances).unwrap() != brute_mrr(&instances) {
            mismatches.push(format!("mrr instance {i}"));
        }
    }
    verdict("4", mismatches.is_empty(), format!("4 x 1000 instances, {} mismatches {:?}", mismatches.len(), mismatches.first()));
}

fn karate() -> (Graph, Vec<Option<usize>>) {
    let g = load_edge_list(data("karate.edgelist"), &IngestOptions::default()).unwrap();
    let labels_text = std::fs::read_to_string(data("karate.labels")).unwrap();
    let mut labels = vec![None; g.num_nodes()];
    for line in labels_text.lines() {
        let (v, c) = line.split_once('\t').unwrap();
        labels[v.parse::<usize>().unwrap()] = Some(c.trim().parse().unwrap());
    }
    (g, labels)
}

#[test]
fn criterion_5_karate_node_classification() {
    let _serial = serial();
    let start = Instant::now();
    let (g, labels) = karate();
    assert_eq!((g.num_nodes(), g.num_edges()), (34, 78));
    let task = NodeLabelTask::stratified(labels, 0.5, 0.0, 1).unwrap();
    let cfg = EmbedConfig {
        train: TrainConfig { dim: 32, ..Default::default() },
        ..Default::default()
    };
    let (emb, _) = embed(&g, &cfg).unwrap();
    let emb = propagate(&g, &emb, &PropagationConfig::default()).unwrap();
    let report = eval::run_node_classification(&g, &emb, &task, &MlpConfig::default(), 10).unwrap();
    let secs = start.elapsed().as_secs_f64();
    verdict(
        "5",
        report.mean >= 0.90 && secs < 30.0,
        format!(
            "karate mean test accuracy {:.4} ± {:.4} over {} runs (>= 0.90), {secs:.1}s (< 30s)",
            report.mean, report.std, report.runs
        ),
    );
}

/// Ring-of-cliques link task shared by criteria 6 and 7.
struct CliqueLinkSetup {
    train_graph: Graph,
    task: eval::LinkTask,
}

fn clique_link_setup() -> CliqueLinkSetup {
    let g = ring_of_cliques(10, 10).unwrap();
    let (train_graph, task) =
        holdout_link_task(&g, 0.1, |u, v| u / 10 == v / 10, LinkMetric::RocAuc, 6).unwrap();
    CliqueLinkSetup { train_graph, task }
}

fn link_embed_config(seed: u64) -> EmbedConfig {
    EmbedConfig {
        train: TrainConfig { dim: 32, seed, ..Default::default() },
        ..Default::default()
    }
}

fn link_mlp_config() -> MlpConfig {
    MlpConfig { hidden: [64, 64], ..Default::default() }
}

#[test]
fn criterion_6_ring_of_cliques_link_prediction() {
    let _serial = serial();
    let start = Instant::now();
    let setup = clique_link_setup();
    let g = &setup.train_graph;
    assert_eq!(setup.task.test.positives.len(), 45);
    let (emb, _) = embed(g, &link_embed_config(1)).unwrap();
    let emb = propagate(g, &emb, &PropagationConfig::default()).unwrap();
    let mlp = link_mlp_config();
    let report = eval::run_link_prediction(g, &emb, &setup.task, &mlp, EdgeCombiner::Hadamard, 10).unwrap();

    // Control: a fresh random embedding per run.
    let control: Vec<f64> = (0..10u64)
        .map(|r| {
            let mut rng = rng_for(r, 0xC0, 0);
            let random = EmbeddingMatrix::random_uniform(g.num_nodes(), 32, 1.0, &mut rng);
            eval::run_link_prediction(g, &random, &setup.task, &MlpConfig { seed: r, ..mlp.clone() }, EdgeCombiner::Hadamard, 1)
                .unwrap()
                .mean
        })
        .collect();
    let control_mean = control.iter().sum::<f64>() / control.len() as f64;
    let secs = start.elapsed().as_secs_f64();
    verdict(
        "6",
        report.mean >= 0.85 && (control_mean - 0.5).abs() <= 0.05 && secs < 120.0,
        format!(
            "mean ROC-AUC {:.4} ± {:.4} (>= 0.85); random control {control_mean:.4} (0.5 ± 0.05); {secs:.1}s (< 120s)",
            report.mean, report.std
        ),
    );
}

#[test]
fn criterion_7_propagation_benefit() {
    let _serial = serial();
    let setup = clique_link_setup();
    let g = &setup.train_graph;
    let mlp = link_mlp_config();
    let mut wins = 0;
    let mut details = Vec::new();
    for seed in 0..10u64 {
        let (raw, _) = embed(g, &link_embed_config(100 + seed)).unwrap();
        let metric_at = |iterations: usize| {
            let cfg = PropagationConfig { rate: 0.1, iterations, ..Default::default() };
            let emb = propagate(g, &raw, &cfg).unwrap();
            let mlp = MlpConfig { seed, ..mlp.clone() };
            eval::run_link_prediction(g, &emb, &setup.task, &mlp, EdgeCombiner::Hadamard, 1).unwrap().mean
        };
        let base = metric_at(0);
        let best = (1..=5).map(metric_at).fold(f64::NEG_INFINITY, f64::max);
        if best >= base {
            wins += 1;
        }
        details.push(format!("{base:.3}->{best:.3}"));
    }
    verdict(
        "7",
        wins >= 8,
        format!("best of iterations 1-5 >= iterations 0 in {wins}/10 seeds (>= 8) [{}]", details.join(", ")),
    );
}

fn bench_config(threads: usize) -> EmbedConfig {
    EmbedConfig {
        n_sample: 1,
        train: TrainConfig {
            dim: 32,
            epochs: 1,
            threads,
            ..Default::default()
        },
        ..Default::default()
    }
}

#[test]
fn criterion_8a_thread_speedup() {
    let _serial = serial();
    let g = preferential_attachment(100_000, 5, 8).unwrap();
    let time = |threads: usize| {
        let start = Instant::now();
        embed(&g, &bench_config(threads)).unwrap();
        start.elapsed().as_secs_f64()
    };
    let t1 = time(1);
    let t4 = time(4);
    let speedup = t1 / t4;
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    verdict(
        "8a",
        speedup >= 2.5,
        format!(
            "100k-node preferential attachment, avg degree {:.2}: 1 thread {t1:.2}s, 4 threads {t4:.2}s, speedup {speedup:.2}x (>= 2.5x) on {cores} available core(s)",
            g.average_degree()
        ),
    );
}

#[test]
fn criterion_8b_corpus_time_linear_in_nodes() {
    let _serial = serial();
    let sizes = [10_000usize, 50_000, 100_000];
    let mut times = Vec::new();
    for &n in &sizes {
        let g = preferential_attachment(n, 5, 8).unwrap();
        let cfg = EmbedConfig { n_sample: 10, ..bench_config(1) };
        let best = (0..3)
            .map(|_| {
                let start = Instant::now();
                with_threads(1, || build_corpus(&g, &cfg).unwrap());
                start.elapsed().as_secs_f64()
            })
            .fold(f64::INFINITY, f64::min);
        times.push(best);
    }
    let xs: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
    let (_, slope, r2) = linear_fit(&xs, &times);
    verdict(
        "8b",
        r2 >= 0.95 && slope > 0.0,
        format!("corpus seconds at 10k/50k/100k nodes = {times:.3?}, linear fit R² {r2:.4} (>= 0.95)"),
    );
}

#[test]
fn criterion_9_ogbn_arxiv_optional() {
    let _serial = serial();
    // Medium-scale reproduction; runs only when the dataset is provided.
    let Ok(dir) = std::env::var("NEIGHBOR2VEC_ARXIV_DIR") else {
        println!("[SKIP] criterion 9: set NEIGHBOR2VEC_ARXIV_DIR to run the optional ogbn-arxiv check");
        return;
    };
    let dir = PathBuf::from(dir);
    let g = load_edge_list(dir.join("edges.txt"), &IngestOptions::default()).unwrap();
    let task = NodeLabelTask::load(
        &dir.join("labels.tsv"),
        &dir.join("train.txt"),
        Some(&dir.join("valid.txt")),
        &dir.join("test.txt"),
        g.num_nodes(),
        None,
    )
    .unwrap();
    let cfg = EmbedConfig {
        train: TrainConfig { threads: 0, ..Default::default() },
        ..Default::default()
    };
    let (emb, _) = embed(&g, &cfg).unwrap();
    let emb = propagate(&g, &emb, &PropagationConfig::default()).unwrap();
    let report = eval::run_node_classification(&g, &emb, &task, &MlpConfig::default(), 10).unwrap();
    let pass = (report.mean * 100.0 - 71.79).abs() <= 2.0;
    println!(
        "[{}] criterion 9: ogbn-arxiv mean test accuracy {:.2} (71.79 ± 2.0)",
        if pass { "PASS" } else { "FAIL" },
        report.mean * 100.0
    );
}
