//! Three-layer perceptron (two ReLU hidden layers with dropout, softmax
//! output) trained with Adam on cross-entropy.

use ndarray::{s, Array1, Array2, ArrayView2, Axis, Zip};
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::seed::{rng_for, Rng};

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct MlpConfig {
    pub hidden: [usize; 2],
    pub dropout: f64,
    pub epochs: usize,
    pub lr: f64,
    pub batch: usize,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden: [256, 256],
            dropout: 0.5,
            epochs: 100,
            lr: 1e-3,
            batch: 1024,
            seed: 1,
        }
    }
}

impl MlpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden.contains(&0) {
            return Err(Error::InvalidArgument("hidden layer sizes must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidArgument(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        if self.lr.is_nan() || self.lr <= 0.0 || self.batch == 0 {
            return Err(Error::InvalidArgument("lr and batch must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Dense {
    w: Array2<f64>,
    b: Array1<f64>,
}

impl Dense {
    /// Uniform `(-1/sqrt(fan_in), 1/sqrt(fan_in))` for weights and biases.
    fn new(fan_in: usize, fan_out: usize, rng: &mut Rng) -> Self {
        let bound = 1.0 / (fan_in as f64).sqrt();
        let mut draw = || (rng.random::<f64>() * 2.0 - 1.0) * bound;
        let w = Array2::from_shape_simple_fn((fan_in, fan_out), &mut draw);
        let b = Array1::from_shape_simple_fn(fan_out, &mut draw);
        Dense { w, b }
    }

    fn forward(&self, x: &ArrayView2<f64>) -> Array2<f64> {
        x.dot(&self.w) + &self.b
    }
}

/// Gradients in the same layout as the network's parameters.
#[derive(Debug, Clone)]
pub struct Gradients {
    layers: [(Array2<f64>, Array1<f64>); 3],
}

impl Gradients {
    pub fn flatten(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|(w, b)| w.iter().chain(b.iter()).copied().collect::<Vec<_>>())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: [Dense; 3],
    dropout: f64,
}

struct Forward {
    z1: Array2<f64>,
    h1: Array2<f64>,
    mask1: Option<Array2<f64>>,
    z2: Array2<f64>,
    h2: Array2<f64>,
    mask2: Option<Array2<f64>>,
    probs: Array2<f64>,
}

fn relu(z: &Array2<f64>) -> Array2<f64> {
    z.mapv(|x| x.max(0.0))
}

fn softmax_rows(mut z: Array2<f64>) -> Array2<f64> {
    for mut row in z.rows_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|x| (x - max).exp());
        let sum = row.sum();
        row /= sum;
    }
    z
}

impl Mlp {
    pub fn new(input: usize, classes: usize, cfg: &MlpConfig, rng: &mut Rng) -> Self {
        let [h1, h2] = cfg.hidden;
        Mlp {
            layers: [Dense::new(input, h1, rng), Dense::new(h1, h2, rng), Dense::new(h2, classes, rng)],
            dropout: cfg.dropout,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].w.nrows()
    }

    pub fn num_classes(&self) -> usize {
        self.layers[2].w.ncols()
    }

    fn dropout_mask(&self, shape: (usize, usize), rng: &mut Rng) -> Array2<f64> {
        let keep = 1.0 - self.dropout;
        Array2::from_shape_simple_fn(shape, || if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
    }

    fn forward(&self, x: &ArrayView2<f64>, rng: Option<&mut Rng>) -> Forward {
        let mut rng = rng.filter(|_| self.dropout > 0.0);
        let z1 = self.layers[0].forward(x);
        let mut h1 = relu(&z1);
        let mask1 = rng.as_deref_mut().map(|r| self.dropout_mask(h1.dim(), r));
        if let Some(m) = &mask1 {
            h1 *= m;
        }
        let z2 = self.layers[1].forward(&h1.view());
        let mut h2 = relu(&z2);
        let mask2 = rng.map(|r| self.dropout_mask(h2.dim(), r));
        if let Some(m) = &mask2 {
            h2 *= m;
        }
        let probs = softmax_rows(self.layers[2].forward(&h2.view()));
        Forward {
            z1,
            h1,
            mask1,
            z2,
            h2,
            mask2,
            probs,
        }
    }

    /// Class probabilities, dropout disabled.
    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Array2<f64> {
        self.forward(&x, None).probs
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Vec<usize> {
        self.predict_proba(x)
            .rows()
            .into_iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (i, &p)| if p > best.1 { (i, p) } else { best })
                    .0
            })
            .collect()
    }

    fn backward(&self, x: &ArrayView2<f64>, y: &[usize], f: &Forward) -> (f64, Gradients) {
        let n = y.len() as f64;
        let mut loss = 0.0;
        let mut dz3 = f.probs.clone();
        for (i, &c) in y.iter().enumerate() {
            loss -= f.probs[[i, c]].max(f64::MIN_POSITIVE).ln();
            dz3[[i, c]] -= 1.0;
        }
        dz3 /= n;
        loss /= n;

        let dw3 = f.h2.t().dot(&dz3);
        let db3 = dz3.sum_axis(Axis(0));
        let mut dz2 = dz3.dot(&self.layers[2].w.t());
        if let Some(m) = &f.mask2 {
            dz2 *= m;
        }
        Zip::from(&mut dz2).and(&f.z2).for_each(|d, &z| {
            if z <= 0.0 {
                *d = 0.0
            }
        });
        let dw2 = f.h1.t().dot(&dz2);
        let db2 = dz2.sum_axis(Axis(0));
        let mut dz1 = dz2.dot(&self.layers[1].w.t());
        if let Some(m) = &f.mask1 {
            dz1 *= m;
        }
        Zip::from(&mut dz1).and(&f.z1).for_each(|d, &z| {
            if z <= 0.0 {
                *d = 0.0
            }
        });
        let dw1 = x.t().dot(&dz1);
        let db1 = dz1.sum_axis(Axis(0));
        (
            loss,
            Gradients {
                layers: [(dw1, db1), (dw2, db2), (dw3, db3)],
            },
        )
    }

    /// Mean cross-entropy and its exact gradient, with dropout disabled.
    pub fn loss_and_grads(&self, x: ArrayView2<f64>, y: &[usize]) -> (f64, Gradients) {
        let f = self.forward(&x, None);
        self.backward(&x, y, &f)
    }

    pub fn parameters(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.w.iter().chain(l.b.iter()).copied().collect::<Vec<_>>())
            .collect()
    }

    pub fn set_parameters(&mut self, params: &[f64]) {
        let mut it = params.iter().copied();
        for l in &mut self.layers {
            for x in l.w.iter_mut().chain(l.b.iter_mut()) {
                *x = it.next().expect("parameter vector too short");
            }
        }
        assert!(it.next().is_none(), "parameter vector too long");
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(len: usize) -> Self {
        Adam {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    fn step(&mut self, model: &mut Mlp, grads: &Gradients, lr: f64) {
        self.t += 1;
        let c1 = 1.0 - ADAM_BETA1.powi(self.t);
        let c2 = 1.0 - ADAM_BETA2.powi(self.t);
        let mut k = 0;
        for (layer, (gw, gb)) in model.layers.iter_mut().zip(&grads.layers) {
            for (p, g) in layer.w.iter_mut().zip(gw.iter()).chain(layer.b.iter_mut().zip(gb.iter())) {
                self.m[k] = ADAM_BETA1 * self.m[k] + (1.0 - ADAM_BETA1) * g;
                self.v[k] = ADAM_BETA2 * self.v[k] + (1.0 - ADAM_BETA2) * g * g;
                *p -= lr * (self.m[k] / c1) / ((self.v[k] / c2).sqrt() + ADAM_EPS);
                k += 1;
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainedMlp {
    pub model: Mlp,
    /// Epoch (1-based) whose parameters were kept; 0 means the initialization.
    pub best_epoch: usize,
    pub best_valid: Option<f64>,
    pub train_losses: Vec<f64>,
}

/// Trains on `(x, y)` only. When `validate` is given it is called after every
/// epoch and the parameters with the highest score are returned; otherwise the
/// final parameters are.
pub fn train_mlp(
    x: ArrayView2<f64>,
    y: &[usize],
    num_classes: usize,
    cfg: &MlpConfig,
    mut validate: Option<&mut dyn FnMut(&Mlp) -> f64>,
) -> Result<TrainedMlp> {
    cfg.validate()?;
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            actual: y.len(),
        });
    }
    if let Some(&bad) = y.iter().find(|&&c| c >= num_classes) {
        return Err(Error::InvalidArgument(format!(
            "class id {bad} >= number of classes {num_classes}"
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("training features".into()));
    }
    let mut rng = rng_for(cfg.seed, 0x4d4c50, 0);
    let mut model = Mlp::new(x.ncols(), num_classes, cfg, &mut rng);
    let mut adam = Adam::new(model.parameters().len());

    let mut best_valid = validate.as_mut().map(|f| f(&model));
    let mut best = (0usize, model.clone());
    let mut order: Vec<usize> = (0..y.len()).collect();
    let mut train_losses = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch) {
            let xb = x.select(Axis(0), batch);
            let yb: Vec<usize> = batch.iter().map(|&i| y[i]).collect();
            let f = model.forward(&xb.view(), Some(&mut rng));
            let (loss, grads) = model.backward(&xb.view(), &yb, &f);
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!("MLP loss in epoch {epoch}")));
            }
            epoch_loss += loss * batch.len() as f64;
            adam.step(&mut model, &grads, cfg.lr);
        }
        train_losses.push(epoch_loss / y.len().max(1) as f64);
        if let Some(f) = validate.as_mut() {
            let score = f(&model);
            if best_valid.is_none_or(|b| score > b) {
                best_valid = Some(score);
                best = (epoch, model.clone());
            }
        }
    }
    let (best_epoch, model) = if validate.is_some() { best } else { (cfg.epochs, model) };
    Ok(TrainedMlp {
        model,
        best_epoch,
        best_valid,
        train_losses,
    })
}

/// Gathers `rows` of `features` into a dense matrix.
pub fn gather_rows(features: ArrayView2<f64>, rows: &[usize]) -> Array2<f64> {
    let mut out = Array2::zeros((rows.len(), features.ncols()));
    for (i, &r) in rows.iter().enumerate() {
        out.slice_mut(s![i, ..]).assign(&features.row(r));
    }
    out
}
