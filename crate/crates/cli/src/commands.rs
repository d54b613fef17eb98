use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use neighbor2vec::embedding::EmbeddingFormat;
use neighbor2vec::eval::{
    self, holdout_link_task, load_candidates, load_labels, load_pairs, EdgeCombiner, EvalReport, LinkEvalSet,
    LinkMetric, LinkTask, MlpConfig, NegativeSet, NodeLabelTask,
};
use neighbor2vec::generators::preferential_attachment;
use neighbor2vec::graph::load_edge_list_mapped;
use neighbor2vec::pipeline::{bench_threads, build_corpus, embed, linear_fit, EmbedConfig, SamplerKind};
use neighbor2vec::seed::with_threads;
use neighbor2vec::sgns::{LrSchedule, TrainConfig, Window};
use neighbor2vec::{propagate, AggregationMethod, EmbeddingMatrix, Graph, IngestOptions, NodeIdMap, PropagationConfig};
use serde::Serialize;

use crate::args::*;
use crate::config::echo;
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

pub fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Sample(a) => sample(&a),
        Command::Embed(a) => embed_cmd(&a),
        Command::Propagate(a) => propagate_cmd(&a),
        Command::EvalNode(a) => eval_node(&a),
        Command::EvalLink(a) => eval_link(&a),
        Command::Sweep(a) => sweep(&a),
        Command::Bench(a) => bench(&a),
    }
}

fn announce<T: Serialize>(name: &str, args: &T) {
    eprint!("# neighbor2vec {name}\n{}", echo(args));
}

fn load_map(path: Option<&PathBuf>) -> Result<Option<NodeIdMap>> {
    Ok(path.map(NodeIdMap::load).transpose()?)
}

fn load_graph(a: &GraphArgs) -> Result<Graph> {
    let map = load_map(a.node_map.as_ref())?;
    let opts = IngestOptions {
        directed: a.directed,
        weighted: a.weighted,
        min_nodes: a.num_nodes,
        ..Default::default()
    };
    Ok(load_edge_list_mapped(&a.input, &opts, map.as_ref())?)
}

fn parse_list<T: FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(|t| t.trim())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| CliError::usage(format!("invalid {what} value `{t}`"))))
        .collect()
}

fn parse_window(text: &str) -> Result<Window> {
    if text == "full" {
        return Ok(Window::Full);
    }
    text.parse()
        .map(Window::Size)
        .map_err(|_| CliError::usage(format!("window must be `full` or a count, got `{text}`")))
}

fn train_config(t: &TrainArgs, seed: u64, threads: usize) -> Result<TrainConfig> {
    Ok(TrainConfig {
        dim: t.dim,
        window: parse_window(&t.window)?,
        negatives: t.negatives,
        alpha: t.alpha,
        epochs: t.epochs,
        noise_exponent: t.noise_exponent,
        schedule: match t.schedule {
            ScheduleChoice::Linear => LrSchedule::Linear,
            ScheduleChoice::Constant => LrSchedule::Constant,
        },
        seed,
        threads,
    })
}

fn embed_config(s: &SamplerArgs, t: &TrainArgs, seed: u64, threads: usize) -> Result<EmbedConfig> {
    Ok(EmbedConfig {
        sampler: match s.sampler {
            SamplerChoice::NoWalk => SamplerKind::NoWalk,
            SamplerChoice::RandomWalk => SamplerKind::RandomWalk { walk_len: s.walk_len },
        },
        num: s.num,
        n_sample: s.n_sample,
        train: train_config(t, seed, threads)?,
    })
}

fn prop_config(p: &PropArgs) -> PropagationConfig {
    PropagationConfig {
        rate: p.rate,
        iterations: p.iterations,
        method: match p.method {
            MethodChoice::Average => AggregationMethod::Average,
            MethodChoice::Attention => AggregationMethod::Attention,
        },
    }
}

fn mlp_config(m: &MlpArgs, seed: u64) -> Result<MlpConfig> {
    let hidden: Vec<usize> = parse_list(&m.hidden, "hidden")?;
    let [h1, h2] = hidden[..] else {
        return Err(CliError::usage(format!("hidden needs exactly two widths, got `{}`", m.hidden)));
    };
    Ok(MlpConfig {
        hidden: [h1, h2],
        dropout: m.dropout,
        epochs: m.mlp_epochs,
        lr: m.lr,
        batch: m.batch,
        seed,
    })
}

fn format_of(binary: bool) -> EmbeddingFormat {
    if binary {
        EmbeddingFormat::Binary
    } else {
        EmbeddingFormat::Text
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::new("io", format!("{}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::new("io", format!("stdout: {e}"))),
    }
}

fn report_json<T: Serialize>(report: &EvalReport, args: &T) -> String {
    let value = serde_json::json!({
        "metric": report.metric,
        "mean": report.mean,
        "std": report.std,
        "runs": report.runs,
        "values": report.values,
        "config": args,
    });
    let mut text = serde_json::to_string_pretty(&value).expect("report serializes");
    text.push('\n');
    text
}

fn sample(a: &SampleArgs) -> Result<()> {
    announce("sample", a);
    let g = load_graph(&a.graph)?;
    let cfg = embed_config(&a.sampler, &TrainArgs::default_for_sampling(), a.run.seed, a.run.threads)?;
    let start = Instant::now();
    let (corpus, num) = build_corpus(&g, &cfg)?;
    eprintln!(
        "nodes = {} edges = {} avg_degree = {:.3} num = {num} sentences = {} tokens = {} seconds = {:.3}",
        g.num_nodes(),
        g.num_edges(),
        g.average_degree(),
        corpus.len(),
        corpus.num_tokens(),
        start.elapsed().as_secs_f64()
    );
    match &a.output {
        Some(path) => corpus.write_text(path)?,
        None => {
            let mut text = String::new();
            for s in corpus.sentences() {
                let line: Vec<String> = s.iter().map(|v| v.to_string()).collect();
                text.push_str(&line.join(" "));
                text.push('\n');
            }
            write_output(None, &text)?;
        }
    }
    Ok(())
}

fn embed_cmd(a: &EmbedArgs) -> Result<()> {
    announce("embed", a);
    let g = load_graph(&a.graph)?;
    let cfg = embed_config(&a.sampler, &a.train, a.run.seed, a.run.threads)?;
    let (m, stats) = embed(&g, &cfg)?;
    eprintln!(
        "nodes = {} edges = {} avg_degree = {:.3} num = {} sentences = {} pairs = {} corpus_seconds = {:.3} train_seconds = {:.3}",
        stats.num_nodes,
        stats.num_edges,
        stats.average_degree,
        stats.num,
        stats.sentences,
        stats.train.pairs,
        stats.corpus_seconds,
        stats.train_seconds
    );
    m.write(&a.output, format_of(a.binary))?;
    Ok(())
}

fn propagate_cmd(a: &PropagateArgs) -> Result<()> {
    announce("propagate", a);
    let g = load_graph(&a.graph)?;
    let format = format_of(a.binary);
    let m = EmbeddingMatrix::read(&a.embeddings, format)?;
    let cfg = prop_config(&a.prop);
    cfg.validate()?;
    if m.rows() != g.num_nodes() {
        return Err(neighbor2vec::Error::DimensionMismatch {
            expected: g.num_nodes(),
            actual: m.rows(),
        }
        .into());
    }
    if cfg.rate == 0.0 || cfg.iterations == 0 {
        // Nothing changes; keep the input bytes exactly.
        std::fs::copy(&a.embeddings, &a.output)
            .map_err(|e| CliError::new("io", format!("{}: {e}", a.output.display())))?;
        return Ok(());
    }
    let start = Instant::now();
    let out = with_threads(a.threads, || propagate(&g, &m, &cfg))?;
    eprintln!("propagate_seconds = {:.3}", start.elapsed().as_secs_f64());
    out.write(&a.output, format)?;
    Ok(())
}

fn features_graph(rows: usize) -> Result<Graph> {
    Ok(Graph::from_edges(rows, std::iter::empty(), false, false, true)?)
}

fn eval_node(a: &EvalNodeArgs) -> Result<()> {
    announce("eval-node", a);
    let m = EmbeddingMatrix::read(&a.embeddings, format_of(a.binary))?;
    let map = load_map(a.node_map.as_ref())?;
    let task = NodeLabelTask::load(&a.labels, &a.train, a.valid.as_deref(), &a.test, m.rows(), map.as_ref())?;
    let cfg = mlp_config(&a.mlp, a.run.seed)?;
    let g = features_graph(m.rows())?;
    let report = with_threads(a.run.threads, || eval::run_node_classification(&g, &m, &task, &cfg, a.mlp.runs))?;
    write_output(a.report.as_deref(), &report_json(&report, a))
}

fn eval_set(pos: &Path, neg: Option<&PathBuf>, cands: Option<&PathBuf>, which: &str) -> Result<LinkEvalSet> {
    let positives = load_pairs(pos, None)?;
    let negatives = match (neg, cands) {
        (Some(p), None) => NegativeSet::Pairs(load_pairs(p, None)?),
        (None, Some(p)) => NegativeSet::Candidates(load_candidates(p, None)?),
        _ => {
            return Err(CliError::usage(format!(
                "{which} set needs exactly one of --{which}-neg and --{which}-candidates"
            )))
        }
    };
    Ok(LinkEvalSet { positives, negatives })
}

fn eval_link(a: &EvalLinkArgs) -> Result<()> {
    announce("eval-link", a);
    let g = load_graph(&a.graph)?;
    let m = EmbeddingMatrix::read(&a.embeddings, format_of(a.binary))?;
    let metric = LinkMetric::from_str(&a.metric)?;
    let combiner = EdgeCombiner::from_str(&a.combiner)?;
    let test = eval_set(&a.test_pos, a.test_neg.as_ref(), a.test_candidates.as_ref(), "test")?;
    let valid = a
        .valid_pos
        .as_ref()
        .map(|p| eval_set(p, a.valid_neg.as_ref(), a.valid_candidates.as_ref(), "valid"))
        .transpose()?;
    let task = LinkTask {
        train_edges: g.edges().map(|(u, v, _)| (u, v)).collect(),
        valid,
        test,
        metric,
    };
    let cfg = mlp_config(&a.mlp, a.run.seed)?;
    let report = with_threads(a.run.threads, || eval::run_link_prediction(&g, &m, &task, &cfg, combiner, a.mlp.runs))?;
    write_output(a.report.as_deref(), &report_json(&report, a))
}

enum SweepTask {
    Node(NodeLabelTask),
    Link {
        train_graph: Box<Graph>,
        task: LinkTask,
        combiner: EdgeCombiner,
    },
}

fn sweep(a: &SweepArgs) -> Result<()> {
    announce("sweep", a);
    let g = load_graph(&a.graph)?;
    let values: Vec<String> = parse_list(&a.values, "values")?;
    if values.is_empty() {
        return Err(CliError::usage("--values is empty"));
    }
    let map = load_map(a.graph.node_map.as_ref())?;
    let task = match a.task {
        TaskChoice::Node => {
            let labels_path = a.labels.as_ref().ok_or_else(|| CliError::usage("node sweep needs --labels"))?;
            let task = match (&a.train, &a.test) {
                (Some(train), Some(test)) => {
                    NodeLabelTask::load(labels_path, train, a.valid.as_deref(), test, g.num_nodes(), map.as_ref())?
                }
                (None, None) => {
                    let labels = load_labels(labels_path, g.num_nodes(), map.as_ref())?;
                    NodeLabelTask::stratified(labels, a.train_frac, a.valid_frac, a.run.seed)?
                }
                _ => return Err(CliError::usage("give both --train and --test, or neither")),
            };
            SweepTask::Node(task)
        }
        TaskChoice::Link => {
            let metric = LinkMetric::from_str(&a.metric)?;
            let combiner = EdgeCombiner::from_str(&a.combiner)?;
            let (train_graph, task) = holdout_link_task(&g, a.holdout, |_, _| true, metric, a.run.seed)?;
            SweepTask::Link { train_graph: Box::new(train_graph), task, combiner }
        }
    };
    let graph = match &task {
        SweepTask::Node(_) => &g,
        SweepTask::Link { train_graph, .. } => train_graph,
    };
    let reuse_embedding = matches!(a.param, SweepParam::Rate | SweepParam::Iterations);
    let mut cached: Option<EmbeddingMatrix> = None;

    let param_name = serde_json::to_value(a.param).expect("serializes");
    let mut csv = String::from("param,value,mean,std\n");
    for value in &values {
        let mut sampler = a.sampler.clone();
        let mut train = a.train_cfg.clone();
        let mut prop = a.prop.clone();
        let bad = || CliError::usage(format!("invalid value `{value}` for {param_name}"));
        match a.param {
            SweepParam::NSample => sampler.n_sample = value.parse().map_err(|_| bad())?,
            SweepParam::Num => sampler.num = Some(value.parse().map_err(|_| bad())?),
            SweepParam::Dim => train.dim = value.parse().map_err(|_| bad())?,
            SweepParam::Rate => prop.rate = value.parse().map_err(|_| bad())?,
            SweepParam::Iterations => prop.iterations = value.parse().map_err(|_| bad())?,
        }
        let raw = match (&cached, reuse_embedding) {
            (Some(m), true) => m.clone(),
            _ => {
                let cfg = embed_config(&sampler, &train, a.run.seed, a.run.threads)?;
                let (m, _) = embed(graph, &cfg)?;
                if reuse_embedding {
                    cached = Some(m.clone());
                }
                m
            }
        };
        let pcfg = prop_config(&prop);
        let emb = with_threads(a.run.threads, || propagate(graph, &raw, &pcfg))?;
        let mlp = mlp_config(&a.mlp, a.run.seed)?;
        let report = with_threads(a.run.threads, || match &task {
            SweepTask::Node(t) => eval::run_node_classification(graph, &emb, t, &mlp, a.mlp.runs),
            SweepTask::Link { task, combiner, .. } => {
                eval::run_link_prediction(graph, &emb, task, &mlp, *combiner, a.mlp.runs)
            }
        })?;
        let name = param_name.as_str().unwrap_or_default();
        writeln!(csv, "{name},{value},{},{}", report.mean, report.std).expect("string write");
        eprintln!("{name} = {value}: {} {:.4} ± {:.4}", report.metric, report.mean, report.std);
    }
    write_output(a.output.as_deref(), &csv)
}

fn bench(a: &BenchArgs) -> Result<()> {
    announce("bench", a);
    let threads: Vec<usize> = parse_list(&a.thread_counts, "thread count")?;
    let cfg = embed_config(&a.sampler, &a.train, a.seed, 1)?;
    let graphs: Vec<Graph> = match &a.input {
        Some(path) => {
            let opts = IngestOptions {
                directed: a.directed,
                weighted: a.weighted,
                ..Default::default()
            };
            vec![neighbor2vec::load_edge_list(path, &opts)?]
        }
        None => {
            let sizes: Vec<usize> = parse_list(&a.synthetic_nodes, "node count")?;
            if a.degree < 2 {
                return Err(CliError::usage("--degree must be at least 2"));
            }
            sizes
                .iter()
                .map(|&n| preferential_attachment(n, a.degree / 2, a.seed))
                .collect::<neighbor2vec::Result<_>>()?
        }
    };
    let mut csv = String::from("nodes,avg_degree,threads,corpus_seconds,train_seconds,total_seconds,speedup\n");
    let mut fit_points = Vec::new();
    for g in &graphs {
        let rows = bench_threads(g, &cfg, &threads)?;
        for r in &rows {
            writeln!(
                csv,
                "{},{:.3},{},{:.4},{:.4},{:.4},{:.3}",
                g.num_nodes(),
                g.average_degree(),
                r.threads,
                r.corpus_seconds,
                r.train_seconds,
                r.total_seconds,
                r.speedup
            )
            .expect("string write");
        }
        fit_points.push((g.num_nodes() as f64, rows[0].corpus_seconds));
    }
    if fit_points.len() >= 2 {
        let (xs, ys): (Vec<f64>, Vec<f64>) = fit_points.into_iter().unzip();
        let (intercept, slope, r2) = linear_fit(&xs, &ys);
        eprintln!("corpus seconds ~ {intercept:.4} + {:.4} per 1k nodes, R² = {r2:.4}", slope * 1000.0);
    }
    write_output(a.output.as_deref(), &csv)
}

impl TrainArgs {
    /// Training settings are irrelevant to sampling; only the seed and
    /// thread count carried alongside them matter.
    fn default_for_sampling() -> Self {
        TrainArgs {
            dim: 1,
            window: "full".into(),
            negatives: 1,
            alpha: 0.025,
            epochs: 1,
            noise_exponent: 0.75,
            schedule: ScheduleChoice::Linear,
        }
    }
}
