//! Layer types, the network container, and manual forward/backward passes.
//! Rational-family layers save their gate caches on the tape so the backward
//! pass runs from stored ratios instead of recomputing powers.

use thiserror::Error;

use super::mat::Mat;
use crate::kernels::{apply_backward, apply_backward_direct, apply_forward, GateCache};
use crate::rng::Xoshiro256StarStar;
use crate::types::{ActivationSpec, SmoothnessOrder};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnError {
    #[error("dimension mismatch: {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("tape does not match network ({0})")]
    StaleTape(&'static str),
    #[error("probe needs samples >= 1000, got {0}")]
    TooFewSamples(usize),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("empty dataset")]
    EmptyDataset,
}

/// Activation slot of a dense layer; the output layer is usually `Identity`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LayerActivation {
    Identity,
    Act(ActivationSpec),
}

#[derive(Debug, Clone)]
pub struct DenseLayer {
    /// out x in
    pub weights: Mat,
    pub bias: Vec<f64>,
    pub activation: LayerActivation,
}

/// Gated projection pair: out = f_N(x Wᵀ) ⊙ (x Vᵀ), W and V both hidden x in.
#[derive(Debug, Clone)]
pub struct GmgluLayer {
    pub w: Mat,
    pub v: Mat,
    pub n: SmoothnessOrder,
}

#[derive(Debug, Clone)]
pub enum Layer {
    Dense(DenseLayer),
    Gmglu(GmgluLayer),
}

impl Layer {
    pub fn input_size(&self) -> usize {
        match self {
            Layer::Dense(l) => l.weights.cols(),
            Layer::Gmglu(l) => l.w.cols(),
        }
    }

    pub fn output_size(&self) -> usize {
        match self {
            Layer::Dense(l) => l.weights.rows(),
            Layer::Gmglu(l) => l.w.rows(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DenseNet {
    pub layers: Vec<Layer>,
}

/// Kaiming-style gain calibrated per activation: 1/sqrt(E[f(z)²]) under
/// z ~ N(0,1), estimated by Simpson quadrature. Keeps the forward variance
/// stationary at initialization for every member of the family (the ReLU
/// case recovers the familiar sqrt(2)).
pub fn calibrated_gain(activation: LayerActivation) -> f64 {
    let spec = match activation {
        LayerActivation::Identity => return 1.0,
        LayerActivation::Act(spec) => spec,
    };
    let n = 4096usize;
    let (lo, hi) = (-8.0f64, 8.0);
    let h = (hi - lo) / n as f64;
    let phi = |z: f64| (-0.5 * z * z).exp() * 0.3989422804014327;
    let integrand = |z: f64| {
        let y: f64 = spec.value(z);
        phi(z) * y * y
    };
    let mut acc = integrand(lo) + integrand(hi);
    for i in 1..n {
        let z = lo + i as f64 * h;
        acc += integrand(z) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    let second_moment = acc * h / 3.0;
    1.0 / second_moment.sqrt()
}

impl DenseLayer {
    /// Kaiming-uniform fan-in init with the calibrated gain; zero bias.
    pub fn init(
        input: usize,
        output: usize,
        activation: LayerActivation,
        rng: &mut Xoshiro256StarStar,
    ) -> Self {
        let gain = calibrated_gain(activation);
        let bound = gain * (3.0 / input as f64).sqrt();
        let data = (0..input * output)
            .map(|_| rng.next_range(-bound, bound))
            .collect();
        Self {
            weights: Mat::from_vec(output, input, data),
            bias: vec![0.0; output],
            activation,
        }
    }
}

impl GmgluLayer {
    pub fn init(
        input: usize,
        hidden: usize,
        n: SmoothnessOrder,
        rng: &mut Xoshiro256StarStar,
    ) -> Self {
        let gain = calibrated_gain(LayerActivation::Act(ActivationSpec::Gem(n)));
        let bound = gain * (3.0 / input as f64).sqrt();
        let mut draw = |count: usize| -> Vec<f64> {
            (0..count).map(|_| rng.next_range(-bound, bound)).collect()
        };
        Self {
            w: Mat::from_vec(hidden, input, draw(hidden * input)),
            v: Mat::from_vec(hidden, input, draw(hidden * input)),
            n,
        }
    }
}

impl DenseNet {
    /// Plain MLP: sizes[0] inputs, hidden layers with `hidden` activation,
    /// identity logits layer at the end.
    pub fn mlp(sizes: &[usize], hidden: LayerActivation, rng: &mut Xoshiro256StarStar) -> Self {
        assert!(sizes.len() >= 2, "need at least input and output sizes");
        let mut layers = Vec::with_capacity(sizes.len() - 1);
        for w in sizes.windows(2) {
            let last = layers.len() == sizes.len() - 2;
            let act = if last { LayerActivation::Identity } else { hidden };
            layers.push(Layer::Dense(DenseLayer::init(w[0], w[1], act, rng)));
        }
        DenseNet { layers }
    }

    pub fn input_size(&self) -> usize {
        self.layers.first().map_or(0, Layer::input_size)
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| match l {
                Layer::Dense(d) => d.weights.as_slice().len() + d.bias.len(),
                Layer::Gmglu(g) => g.w.as_slice().len() + g.v.as_slice().len(),
            })
            .sum()
    }

    /// Flat parameter access for gradient checking; slow, test-side only.
    pub fn get_param(&self, mut idx: usize) -> f64 {
        for layer in &self.layers {
            for slice in param_slices(layer) {
                if idx < slice.len() {
                    return slice[idx];
                }
                idx -= slice.len();
            }
        }
        panic!("parameter index out of range");
    }

    pub fn set_param(&mut self, mut idx: usize, value: f64) {
        for layer in &mut self.layers {
            for slice in param_slices_mut(layer) {
                if idx < slice.len() {
                    slice[idx] = value;
                    return;
                }
                idx -= slice.len();
            }
        }
        panic!("parameter index out of range");
    }
}

fn param_slices(layer: &Layer) -> Vec<&[f64]> {
    match layer {
        Layer::Dense(d) => vec![d.weights.as_slice(), &d.bias],
        Layer::Gmglu(g) => vec![g.w.as_slice(), g.v.as_slice()],
    }
}

fn param_slices_mut(layer: &mut Layer) -> Vec<&mut [f64]> {
    match layer {
        Layer::Dense(d) => vec![d.weights.as_mut_slice(), &mut d.bias],
        Layer::Gmglu(g) => vec![g.w.as_mut_slice(), g.v.as_mut_slice()],
    }
}

/// Layer-sequential variance rescale on a calibration batch: walk the
/// layers in order and scale each projection so its pre-activations have
/// standard deviation `target_std` on real data. Deep stacks without
/// normalization layers need this — the analytic gain keeps variance
/// stationary only in expectation, and the fixed point is unstable with
/// depth. Applied uniformly to every activation so comparisons stay fair.
pub fn lsuv_rescale(net: &mut DenseNet, batch: &Mat, passes: usize, target_std: f64) {
    let std_of = |m: &Mat| -> f64 {
        let n = m.as_slice().len().max(1);
        let mean = m.as_slice().iter().sum::<f64>() / n as f64;
        let var = m
            .as_slice()
            .iter()
            .map(|&v| (v - mean) * (v - mean))
            .sum::<f64>()
            / n as f64;
        var.sqrt()
    };
    for _ in 0..passes {
        let mut x = batch.clone();
        for layer in &mut net.layers {
            match layer {
                Layer::Dense(dense) => {
                    let mut pre = x.matmul_transpose_b(&dense.weights);
                    pre.add_row_vector(&dense.bias);
                    let std = std_of(&pre);
                    if std > 1e-12 {
                        let scale = target_std / std;
                        for w in dense.weights.as_mut_slice() {
                            *w *= scale;
                        }
                        for b in &mut dense.bias {
                            *b *= scale;
                        }
                        for v in pre.as_mut_slice() {
                            *v *= scale;
                        }
                    }
                    let (out, _) = activate(&pre, dense.activation);
                    x = out;
                }
                Layer::Gmglu(glu) => {
                    for proj in [&mut glu.w, &mut glu.v] {
                        let pre = x.matmul_transpose_b(proj);
                        let std = std_of(&pre);
                        if std > 1e-12 {
                            let scale = target_std / std;
                            for w in proj.as_mut_slice() {
                                *w *= scale;
                            }
                        }
                    }
                    let gate_pre = x.matmul_transpose_b(&glu.w);
                    let linear = x.matmul_transpose_b(&glu.v);
                    let spec = ActivationSpec::Gem(glu.n);
                    let result = apply_forward(gate_pre.as_slice(), spec, false);
                    let mut out = Mat::from_vec(gate_pre.rows(), gate_pre.cols(), result.output);
                    out.hadamard_assign(&linear);
                    x = out;
                }
            }
        }
    }
}

/// Saved forward state for one layer.
#[derive(Debug, Clone)]
pub enum TapeEntry {
    Dense {
        input: Mat,
        pre: Mat,
        cache: Option<GateCache<f64>>,
    },
    Gmglu {
        input: Mat,
        gate_pre: Mat,
        gated: Mat,
        linear: Mat,
        cache: GateCache<f64>,
    },
}

#[derive(Debug, Clone)]
pub struct Tape {
    pub entries: Vec<TapeEntry>,
}

/// Parameter gradients, shaped like the network.
#[derive(Debug, Clone)]
pub enum LayerGrads {
    Dense { dw: Mat, db: Vec<f64> },
    Gmglu { dw: Mat, dv: Mat },
}

#[derive(Debug, Clone)]
pub struct Gradients {
    pub layers: Vec<LayerGrads>,
}

fn activate(pre: &Mat, activation: LayerActivation) -> (Mat, Option<GateCache<f64>>) {
    match activation {
        LayerActivation::Identity => (pre.clone(), None),
        LayerActivation::Act(spec) => {
            let result = apply_forward(pre.as_slice(), spec, spec.is_gem_family());
            (
                Mat::from_vec(pre.rows(), pre.cols(), result.output),
                result.cache,
            )
        }
    }
}

/// Affine-then-activation composition over the whole batch; rational-family
/// layers store gate caches on the tape.
pub fn forward(net: &DenseNet, batch: &Mat) -> Result<(Mat, Tape), NnError> {
    if batch.cols() != net.input_size() {
        return Err(NnError::Dimension {
            context: "batch width vs first-layer input",
            expected: net.input_size(),
            got: batch.cols(),
        });
    }
    let mut entries = Vec::with_capacity(net.layers.len());
    let mut x = batch.clone();
    for layer in &net.layers {
        if x.cols() != layer.input_size() {
            return Err(NnError::Dimension {
                context: "layer input width",
                expected: layer.input_size(),
                got: x.cols(),
            });
        }
        match layer {
            Layer::Dense(dense) => {
                let mut pre = x.matmul_transpose_b(&dense.weights);
                pre.add_row_vector(&dense.bias);
                let (out, cache) = activate(&pre, dense.activation);
                entries.push(TapeEntry::Dense {
                    input: x,
                    pre,
                    cache,
                });
                x = out;
            }
            Layer::Gmglu(glu) => {
                let gate_pre = x.matmul_transpose_b(&glu.w);
                let linear = x.matmul_transpose_b(&glu.v);
                let spec = ActivationSpec::Gem(glu.n);
                let result = apply_forward(gate_pre.as_slice(), spec, true);
                let gated = Mat::from_vec(gate_pre.rows(), gate_pre.cols(), result.output);
                let mut out = gated.clone();
                out.hadamard_assign(&linear);
                entries.push(TapeEntry::Gmglu {
                    input: x,
                    gate_pre,
                    gated,
                    linear,
                    cache: result.cache.expect("rational spec always caches"),
                });
                x = out;
            }
        }
    }
    Ok((x, Tape { entries }))
}

fn activation_backward(
    grad_out: &Mat,
    pre: &Mat,
    cache: &Option<GateCache<f64>>,
    activation: LayerActivation,
) -> Mat {
    match activation {
        LayerActivation::Identity => grad_out.clone(),
        LayerActivation::Act(spec) => {
            let data = match cache {
                Some(cache) => {
                    apply_backward(grad_out.as_slice(), cache, spec).expect("cache from forward")
                }
                None => apply_backward_direct(grad_out.as_slice(), pre.as_slice(), spec)
                    .expect("matching buffers"),
            };
            Mat::from_vec(grad_out.rows(), grad_out.cols(), data)
        }
    }
}

/// Backpropagation through the taped forward; returns parameter gradients.
pub fn backward(net: &DenseNet, tape: &Tape, grad_logits: &Mat) -> Result<Gradients, NnError> {
    if tape.entries.len() != net.layers.len() {
        return Err(NnError::StaleTape("entry count"));
    }
    let mut grads: Vec<Option<LayerGrads>> = (0..net.layers.len()).map(|_| None).collect();
    let mut upstream = grad_logits.clone();
    for (i, layer) in net.layers.iter().enumerate().rev() {
        match (layer, &tape.entries[i]) {
            (Layer::Dense(dense), TapeEntry::Dense { input, pre, cache }) => {
                if upstream.cols() != dense.weights.rows() {
                    return Err(NnError::StaleTape("gradient width"));
                }
                let d_pre = activation_backward(&upstream, pre, cache, dense.activation);
                let dw = d_pre.matmul_transpose_a(input);
                let db = d_pre.column_sums();
                upstream = d_pre.matmul(&dense.weights);
                grads[i] = Some(LayerGrads::Dense { dw, db });
            }
            (
                Layer::Gmglu(glu),
                TapeEntry::Gmglu {
                    input,
                    gate_pre: _,
                    gated,
                    linear,
                    cache,
                },
            ) => {
                // out = f(p) ⊙ q with p = xWᵀ, q = xVᵀ
                let mut d_gated = upstream.clone();
                d_gated.hadamard_assign(linear);
                let d_p = Mat::from_vec(
                    d_gated.rows(),
                    d_gated.cols(),
                    apply_backward(d_gated.as_slice(), cache, ActivationSpec::Gem(glu.n))
                        .expect("cache from forward"),
                );
                let mut d_q = upstream.clone();
                d_q.hadamard_assign(gated);
                let dw = d_p.matmul_transpose_a(input);
                let dv = d_q.matmul_transpose_a(input);
                upstream = d_p.matmul(&glu.w);
                let d_x_lin = d_q.matmul(&glu.v);
                for (a, &b) in upstream
                    .as_mut_slice()
                    .iter_mut()
                    .zip(d_x_lin.as_slice())
                {
                    *a += b;
                }
                grads[i] = Some(LayerGrads::Gmglu { dw, dv });
            }
            _ => return Err(NnError::StaleTape("layer/tape kind mismatch")),
        }
    }
    Ok(Gradients {
        layers: grads.into_iter().map(|g| g.expect("filled")).collect(),
    })
}
