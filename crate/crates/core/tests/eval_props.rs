use ndarray::Array2;
use neighbor2vec::eval::mlp::gather_rows;
use neighbor2vec::eval::{
    accuracy, hits_at_k, mrr, node_classification_once, roc_auc, train_mlp, Mlp, MlpConfig, NodeLabelTask,
};
use neighbor2vec::seed::{rng_for, Rng};
use rand::Rng as _;

#[test]
fn metrics_ignore_strictly_increasing_transforms() {
    let transforms: [fn(f64) -> f64; 3] = [|x| x.exp(), |x| 3.0 * x.powi(3) + 1.0, |x| (x + 5.0).ln()];
    for i in 0..300u64 {
        let mut rng = rng_for(i, 5, 5);
        let score = |rng: &mut Rng| rng.random_range(-20..20) as f64 / 8.0;
        let scores: Vec<f64> = (0..30).map(|_| score(&mut rng)).collect();
        let mut labels: Vec<bool> = (0..30).map(|_| rng.random()).collect();
        labels[0] = true;
        labels[1] = false;
        let pos: Vec<f64> = (0..10).map(|_| score(&mut rng)).collect();
        let neg: Vec<f64> = (0..15).map(|_| score(&mut rng)).collect();
        let inst: Vec<(f64, Vec<f64>)> = (0..5).map(|_| (score(&mut rng), (0..6).map(|_| score(&mut rng)).collect())).collect();
        for f in transforms {
            let map = |v: &[f64]| v.iter().map(|&x| f(x)).collect::<Vec<_>>();
            assert_eq!(roc_auc(&map(&scores), &labels).unwrap(), roc_auc(&scores, &labels).unwrap());
            assert_eq!(hits_at_k(&map(&pos), &map(&neg), 3).unwrap(), hits_at_k(&pos, &neg, 3).unwrap());
            let mapped: Vec<(f64, Vec<f64>)> = inst.iter().map(|(p, c)| (f(*p), map(c))).collect();
            assert_eq!(mrr(&mapped).unwrap(), mrr(&inst).unwrap());
        }
    }
}

fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / norm(a).max(norm(b)).max(1e-8)
}

#[test]
fn mlp_gradients_match_finite_differences() {
    for i in 0..30u64 {
        let mut rng = rng_for(i, 6, 6);
        let d = rng.random_range(1..=5);
        let hidden = [rng.random_range(1..=4), rng.random_range(1..=4)];
        let classes = rng.random_range(2..=4);
        let cfg = MlpConfig { hidden, dropout: 0.0, ..Default::default() };
        let mut model = Mlp::new(d, classes, &cfg, &mut rng);
        let rows = 6;
        let x = Array2::from_shape_fn((rows, d), |_| rng.random_range(-1.0..1.0));
        let y: Vec<usize> = (0..rows).map(|_| rng.random_range(0..classes)).collect();

        let (_, grads) = model.loss_and_grads(x.view(), &y);
        let analytic = grads.flatten();
        let params = model.parameters();
        let h = 1e-5;
        let mut numeric = Vec::with_capacity(params.len());
        for j in 0..params.len() {
            let mut p = params.clone();
            p[j] += h;
            model.set_parameters(&p);
            let plus = model.loss_and_grads(x.view(), &y).0;
            p[j] -= 2.0 * h;
            model.set_parameters(&p);
            let minus = model.loss_and_grads(x.view(), &y).0;
            numeric.push((plus - minus) / (2.0 * h));
        }
        model.set_parameters(&params);
        let err = relative_error(&analytic, &numeric);
        assert!(err < 1e-3, "instance {i}: relative error {err}");
    }
}

fn two_class_task(n: usize) -> (Array2<f64>, NodeLabelTask) {
    let mut rng = rng_for(9, 9, 9);
    let labels: Vec<Option<usize>> = (0..n).map(|v| Some(v % 2)).collect();
    let x = Array2::from_shape_fn((n, 3), |(v, j)| if j == 0 { (v % 2) as f64 * 2.0 - 1.0 } else { rng.random_range(-1.0..1.0) });
    let task = NodeLabelTask::new(labels, (0..n / 2).collect(), vec![], (n / 2..n).collect()).unwrap();
    (x, task)
}

#[test]
fn held_out_rows_never_reach_training() {
    let (mut x, task) = two_class_task(80);
    let cfg = MlpConfig { hidden: [8, 8], epochs: 50, lr: 1e-2, ..Default::default() };
    let clean = node_classification_once(x.view(), &task, &cfg).unwrap();
    assert!(clean > 0.9);

    // Flipping test labels turns every hit into a miss and vice versa: the
    // model itself is unchanged.
    let mut flipped = task.clone();
    for &v in &task.test {
        flipped.labels[v] = Some(1 - task.labels[v].unwrap());
    }
    let flipped_acc = node_classification_once(x.view(), &flipped, &cfg).unwrap();
    assert!((clean + flipped_acc - 1.0).abs() < 1e-12);

    // Non-finite test features would poison any gradient that touched them.
    for &v in &task.test {
        x[[v, 1]] = f64::NAN;
    }
    let y_train: Vec<usize> = task.train.iter().map(|&v| task.labels[v].unwrap()).collect();
    let trained = train_mlp(gather_rows(x.view(), &task.train).view(), &y_train, 2, &cfg, None).unwrap();
    assert!(trained.train_losses.iter().all(|l| l.is_finite()));
    assert!(node_classification_once(x.view(), &task, &cfg).is_ok());
}

#[test]
fn validation_split_only_selects_checkpoints() {
    let (x, task) = two_class_task(90);
    let with_valid = NodeLabelTask::new(task.labels.clone(), (0..30).collect(), (30..60).collect(), (60..90).collect()).unwrap();
    let cfg = MlpConfig { hidden: [8, 8], epochs: 20, ..Default::default() };
    let y_train: Vec<usize> = (0..30).map(|v| v % 2).collect();
    let x_train = gather_rows(x.view(), &with_valid.train);
    let x_valid = gather_rows(x.view(), &with_valid.valid);
    let y_valid: Vec<usize> = (30..60).map(|v| v % 2).collect();
    let mut score = |m: &Mlp| accuracy(&m.predict(x_valid.view()), &y_valid).unwrap();
    let selected = train_mlp(x_train.view(), &y_train, 2, &cfg, Some(&mut score)).unwrap();
    let plain = train_mlp(x_train.view(), &y_train, 2, &cfg, None).unwrap();
    // Same gradient trajectory; only the kept checkpoint may differ.
    assert_eq!(selected.train_losses, plain.train_losses);
}
