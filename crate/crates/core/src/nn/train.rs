//! Training loop: softmax cross-entropy, SGD-momentum / AdamW, learning-rate
//! schedules, and per-epoch reporting. Everything is sequential and seeded,
//! so identical configs reproduce identical reports bit for bit (wall time
//! aside).

use std::time::Instant;

use super::layers::{backward, forward, DenseNet, Gradients, Layer, LayerGrads, NnError};
use super::mat::Mat;
use crate::rng::Xoshiro256StarStar;

#[derive(Debug, Clone, PartialEq)]
pub enum Optimizer {
    SgdMomentum {
        lr: f64,
        momentum: f64,
        weight_decay: f64,
    },
    AdamW {
        lr: f64,
        beta1: f64,
        beta2: f64,
        weight_decay: f64,
    },
}

impl Optimizer {
    fn base_lr(&self) -> f64 {
        match self {
            Optimizer::SgdMomentum { lr, .. } | Optimizer::AdamW { lr, .. } => *lr,
        }
    }

    fn validate(&self) -> Result<(), NnError> {
        let bad = |msg: String| Err(NnError::InvalidConfig(msg));
        match *self {
            Optimizer::SgdMomentum { lr, momentum, .. } => {
                if lr <= 0.0 {
                    return bad(format!("lr must be > 0, got {lr}"));
                }
                if !(0.0..1.0).contains(&momentum) {
                    return bad(format!("momentum must be in [0,1), got {momentum}"));
                }
            }
            Optimizer::AdamW { lr, beta1, beta2, .. } => {
                if lr <= 0.0 {
                    return bad(format!("lr must be > 0, got {lr}"));
                }
                for (name, b) in [("beta1", beta1), ("beta2", beta2)] {
                    if !(0.0 < b && b < 1.0) {
                        return bad(format!("{name} must be in (0,1), got {b}"));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Schedule {
    Constant,
    /// Multiply the rate by gamma at each milestone epoch.
    Multistep { milestones: Vec<usize>, gamma: f64 },
    /// Linear warmup over the first `warmup_steps` optimizer steps, then
    /// cosine decay to zero over the remaining steps.
    Cosine { warmup_steps: usize },
}

impl Schedule {
    fn validate(&self) -> Result<(), NnError> {
        if let Schedule::Multistep { gamma, .. } = self {
            if !(0.0 < *gamma && *gamma <= 1.0) {
                return Err(NnError::InvalidConfig(format!(
                    "gamma must be in (0,1], got {gamma}"
                )));
            }
        }
        Ok(())
    }

    fn lr_at(&self, base: f64, epoch: usize, step: usize, total_steps: usize) -> f64 {
        match self {
            Schedule::Constant => base,
            Schedule::Multistep { milestones, gamma } => {
                let hits = milestones.iter().filter(|&&m| epoch >= m).count();
                base * gamma.powi(hits as i32)
            }
            Schedule::Cosine { warmup_steps } => {
                if step < *warmup_steps {
                    base * (step + 1) as f64 / *warmup_steps as f64
                } else {
                    let span = total_steps.saturating_sub(*warmup_steps).max(1);
                    let progress = (step - warmup_steps) as f64 / span as f64;
                    base * 0.5 * (1.0 + (std::f64::consts::PI * progress.min(1.0)).cos())
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub optimizer: Optimizer,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub schedule: Schedule,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        if self.batch_size == 0 {
            return Err(NnError::InvalidConfig("batch_size must be >= 1".into()));
        }
        self.optimizer.validate()?;
        self.schedule.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_acc: f64,
    pub lr: f64,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
    pub diverged: bool,
}

impl TrainReport {
    pub fn csv_header() -> &'static str {
        "epoch,train_loss,train_acc,val_acc,lr,elapsed_s"
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::csv_header());
        out.push('\n');
        for row in &self.epochs {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                row.epoch, row.train_loss, row.train_acc, row.val_acc, row.lr, row.elapsed_s
            ));
        }
        if self.diverged {
            out.push_str("# diverged: non-finite loss, training stopped early\n");
        }
        out
    }

    pub fn final_val_acc(&self) -> f64 {
        self.epochs.last().map_or(0.0, |e| e.val_acc)
    }
}

/// Train/validation split of a labeled dataset.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub train_x: Mat,
    pub train_y: Vec<u8>,
    pub val_x: Mat,
    pub val_y: Vec<u8>,
}

impl Dataset {
    /// Deterministic shuffled split; `val_fraction` of the rows go to
    /// validation (at least one row stays in train).
    pub fn split(features: Mat, labels: Vec<u8>, val_fraction: f64, seed: u64) -> Self {
        assert_eq!(features.rows(), labels.len());
        let n = labels.len();
        let mut idx: Vec<usize> = (0..n).collect();
        let mut rng = Xoshiro256StarStar::seed_from(seed);
        rng.shuffle(&mut idx);
        let n_val = ((n as f64 * val_fraction) as usize).min(n.saturating_sub(1));
        let n_train = n - n_val;
        let gather = |ids: &[usize]| -> (Mat, Vec<u8>) {
            let mut data = Vec::with_capacity(ids.len() * features.cols());
            let mut y = Vec::with_capacity(ids.len());
            for &i in ids {
                data.extend_from_slice(features.row(i));
                y.push(labels[i]);
            }
            (Mat::from_vec(ids.len(), features.cols(), data), y)
        };
        let (train_x, train_y) = gather(&idx[..n_train]);
        let (val_x, val_y) = gather(&idx[n_train..]);
        Dataset {
            train_x,
            train_y,
            val_x,
            val_y,
        }
    }
}

/// Mean softmax cross-entropy with log-sum-exp stabilization; returns the
/// loss and the logit gradients (already divided by the batch size).
pub fn softmax_cross_entropy(logits: &Mat, labels: &[u8]) -> (f64, Mat) {
    assert_eq!(logits.rows(), labels.len());
    let batch = logits.rows();
    let mut grad = Mat::zeros(logits.rows(), logits.cols());
    let mut loss = 0.0;
    for i in 0..batch {
        let row = logits.row(i);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum_exp: f64 = row.iter().map(|&v| (v - max).exp()).sum();
        let log_sum = max + sum_exp.ln();
        let label = labels[i] as usize;
        loss += log_sum - row[label];
        let grad_row = grad.row_mut(i);
        for (j, (&v, g)) in row.iter().zip(grad_row.iter_mut()).enumerate() {
            let p = (v - log_sum).exp();
            *g = (p - if j == label { 1.0 } else { 0.0 }) / batch as f64;
        }
    }
    (loss / batch as f64, grad)
}

pub fn accuracy(logits: &Mat, labels: &[u8]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let correct = labels
        .iter()
        .enumerate()
        .filter(|&(i, &label)| {
            let row = logits.row(i);
            let argmax = row
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(j, _)| j)
                .unwrap_or(0);
            argmax == label as usize
        })
        .count();
    correct as f64 / labels.len() as f64
}

/// Flat per-layer optimizer state matching the parameter layout.
struct OptState {
    velocity: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
    step: usize,
}

impl OptState {
    fn new(net: &DenseNet) -> Self {
        let shapes: Vec<usize> = net
            .layers
            .iter()
            .map(|l| match l {
                Layer::Dense(d) => d.weights.as_slice().len() + d.bias.len(),
                Layer::Gmglu(g) => g.w.as_slice().len() + g.v.as_slice().len(),
            })
            .collect();
        OptState {
            velocity: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            second: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            step: 0,
        }
    }
}

fn layer_params_and_grads<'a>(
    layer: &'a mut Layer,
    grads: &'a LayerGrads,
) -> (Vec<&'a mut [f64]>, Vec<&'a [f64]>) {
    match (layer, grads) {
        (Layer::Dense(d), LayerGrads::Dense { dw, db }) => (
            vec![d.weights.as_mut_slice(), &mut d.bias],
            vec![dw.as_slice(), db],
        ),
        (Layer::Gmglu(g), LayerGrads::Gmglu { dw, dv }) => (
            vec![g.w.as_mut_slice(), g.v.as_mut_slice()],
            vec![dw.as_slice(), dv.as_slice()],
        ),
        _ => unreachable!("gradients shaped like the network"),
    }
}

fn apply_update(
    net: &mut DenseNet,
    grads: &Gradients,
    optimizer: &Optimizer,
    state: &mut OptState,
    lr: f64,
) {
    state.step += 1;
    for (li, (layer, layer_grads)) in net.layers.iter_mut().zip(&grads.layers).enumerate() {
        let (params, grad_slices) = layer_params_and_grads(layer, layer_grads);
        let mut offset = 0usize;
        for (param, grad) in params.into_iter().zip(grad_slices) {
            match *optimizer {
                Optimizer::SgdMomentum {
                    momentum,
                    weight_decay,
                    ..
                } => {
                    let velocity = &mut state.velocity[li][offset..offset + param.len()];
                    for ((w, &g), v) in param.iter_mut().zip(grad).zip(velocity.iter_mut()) {
                        *v = momentum * *v + g + weight_decay * *w;
                        *w -= lr * *v;
                    }
                }
                Optimizer::AdamW {
                    beta1,
                    beta2,
                    weight_decay,
                    ..
                } => {
                    let t = state.step as i32;
                    let bias1 = 1.0 - beta1.powi(t);
                    let bias2 = 1.0 - beta2.powi(t);
                    let (m_all, v_all) = (&mut state.velocity[li], &mut state.second[li]);
                    for (k, (w, &g)) in param.iter_mut().zip(grad).enumerate() {
                        let m = &mut m_all[offset + k];
                        let v = &mut v_all[offset + k];
                        *m = beta1 * *m + (1.0 - beta1) * g;
                        *v = beta2 * *v + (1.0 - beta2) * g * g;
                        let m_hat = *m / bias1;
                        let v_hat = *v / bias2;
                        *w -= lr * (m_hat / (v_hat.sqrt() + 1e-8) + weight_decay * *w);
                    }
                }
            }
            offset += grad.len();
        }
    }
}

fn evaluate(net: &DenseNet, x: &Mat, y: &[u8]) -> Result<(f64, f64), NnError> {
    if y.is_empty() {
        return Ok((0.0, 0.0));
    }
    let (logits, _) = forward(net, x)?;
    let (loss, _) = softmax_cross_entropy(&logits, y);
    Ok((loss, accuracy(&logits, y)))
}

/// Run the configured training loop. Deterministic given the seed; a
/// non-finite loss stops training early and flags the report instead of
/// crashing.
pub fn train(net: &mut DenseNet, data: &Dataset, cfg: &TrainConfig) -> Result<TrainReport, NnError> {
    cfg.validate()?;
    if data.train_y.is_empty() {
        return Err(NnError::EmptyDataset);
    }
    let n_classes = net.layers.last().map_or(0, Layer::output_size);
    if let Some(&bad) = data
        .train_y
        .iter()
        .chain(&data.val_y)
        .find(|&&y| y as usize >= n_classes)
    {
        return Err(NnError::InvalidConfig(format!(
            "label {bad} out of range for {n_classes} classes"
        )));
    }

    let started = Instant::now();
    let mut rng = Xoshiro256StarStar::seed_from(cfg.seed);
    let mut state = OptState::new(net);
    let n = data.train_y.len();
    let batches_per_epoch = n.div_ceil(cfg.batch_size);
    let total_steps = batches_per_epoch * cfg.epochs;
    let mut report = TrainReport {
        epochs: Vec::with_capacity(cfg.epochs + 1),
        diverged: false,
    };

    if cfg.epochs == 0 {
        let (loss, acc) = evaluate(net, &data.train_x, &data.train_y)?;
        let (_, val_acc) = evaluate(net, &data.val_x, &data.val_y)?;
        report.epochs.push(EpochStats {
            epoch: 0,
            train_loss: loss,
            train_acc: acc,
            val_acc,
            lr: cfg.schedule.lr_at(cfg.optimizer.base_lr(), 0, 0, 1),
            elapsed_s: started.elapsed().as_secs_f64(),
        });
        return Ok(report);
    }

    let mut order: Vec<usize> = (0..n).collect();
    'epochs: for epoch in 1..=cfg.epochs {
        rng.shuffle(&mut order);
        let mut epoch_loss = 0.0;
        let mut epoch_correct = 0.0;
        for (batch_idx, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let mut xb = Vec::with_capacity(chunk.len() * data.train_x.cols());
            let mut yb = Vec::with_capacity(chunk.len());
            for &i in chunk {
                xb.extend_from_slice(data.train_x.row(i));
                yb.push(data.train_y[i]);
            }
            let xb = Mat::from_vec(chunk.len(), data.train_x.cols(), xb);
            let (logits, tape) = forward(net, &xb)?;
            let (loss, grad_logits) = softmax_cross_entropy(&logits, &yb);
            if !loss.is_finite() {
                report.diverged = true;
                break 'epochs;
            }
            epoch_loss += loss * chunk.len() as f64;
            epoch_correct += accuracy(&logits, &yb) * chunk.len() as f64;
            let grads = backward(net, &tape, &grad_logits)?;
            let step = (epoch - 1) * batches_per_epoch + batch_idx;
            let lr = cfg
                .schedule
                .lr_at(cfg.optimizer.base_lr(), epoch, step, total_steps);
            apply_update(net, &grads, &cfg.optimizer, &mut state, lr);
        }
        let (_, val_acc) = evaluate(net, &data.val_x, &data.val_y)?;
        report.epochs.push(EpochStats {
            epoch,
            train_loss: epoch_loss / n as f64,
            train_acc: epoch_correct / n as f64,
            val_acc,
            lr: cfg.schedule.lr_at(
                cfg.optimizer.base_lr(),
                epoch,
                epoch * batches_per_epoch - 1,
                total_steps,
            ),
            elapsed_s: started.elapsed().as_secs_f64(),
        });
    }
    Ok(report)
}
