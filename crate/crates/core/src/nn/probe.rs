//! Gradient-flow probes: the depth-compounded suppression estimate and the
//! dead-neuron contrast experiment.

use super::layers::{backward, forward, DenseLayer, DenseNet, Layer, LayerActivation, LayerGrads, NnError};
use super::mat::Mat;
use super::train::softmax_cross_entropy;
use crate::rng::Xoshiro256StarStar;
use crate::types::{ActivationSpec, SmoothnessOrder};

#[derive(Debug, Clone, PartialEq)]
pub struct SuppressionProbeResult {
    pub n: SmoothnessOrder,
    pub depth: usize,
    pub mean_log_gain_per_layer: f64,
    pub log_product: f64,
    pub samples: usize,
}

/// Estimate E[log f'_N(z) | f'_N(z) > 0] over standard-normal pre-activations
/// (the batch-normalized regime) and compound it over `depth` activation
/// layers. Monotone decreasing in N for fixed depth.
pub fn suppression_probe(
    n: SmoothnessOrder,
    depth: usize,
    samples: usize,
    seed: u64,
) -> Result<SuppressionProbeResult, NnError> {
    if samples < 1000 {
        return Err(NnError::TooFewSamples(samples));
    }
    let mut rng = Xoshiro256StarStar::seed_from(seed);
    let mut sum_log = 0.0;
    let mut kept = 0usize;
    for _ in 0..samples {
        let z = rng.next_normal();
        let gain = crate::gem::gem_grad(z, n);
        if gain > 0.0 {
            sum_log += gain.ln();
            kept += 1;
        }
    }
    let mean_log = if kept == 0 {
        f64::NEG_INFINITY
    } else {
        sum_log / kept as f64
    };
    Ok(SuppressionProbeResult {
        n,
        depth,
        mean_log_gain_per_layer: mean_log,
        log_product: depth as f64 * mean_log,
        samples,
    })
}

pub fn probe_csv_header() -> &'static str {
    "n,depth,mean_log_gain_per_layer,log_product,samples"
}

pub fn probe_csv_row(r: &SuppressionProbeResult) -> String {
    format!(
        "{},{},{},{},{}",
        r.n, r.depth, r.mean_log_gain_per_layer, r.log_product, r.samples
    )
}

/// Adversarial-initialization contrast: a one-hidden-layer net whose first
/// layer bias drives every pre-activation negative for the whole dataset.
/// Returns the accumulated |dW| of the first layer over one epoch of
/// training. Zero-for-negative activations leave it exactly zero; the
/// piecewise variant recovers a signal.
pub fn dead_neuron_first_layer_grad(spec: ActivationSpec, seed: u64) -> Result<f64, NnError> {
    let mut rng = Xoshiro256StarStar::seed_from(seed);
    let n_per_class = 64usize;
    let (x, y) = super::data::make_synthetic(super::data::SyntheticKind::Blobs, n_per_class, 0.3, seed);

    let hidden = 16usize;
    let mut first = DenseLayer::init(2, hidden, LayerActivation::Act(spec), &mut rng);
    // inputs live in [-3, 3]^2, so a -64 offset pins every pre-activation
    // far below zero regardless of the drawn weights
    for b in &mut first.bias {
        *b = -64.0;
    }
    let head = DenseLayer::init(hidden, 2, LayerActivation::Identity, &mut rng);
    let mut net = DenseNet {
        layers: vec![Layer::Dense(first), Layer::Dense(head)],
    };

    let lr = 0.05;
    let mut accumulated = 0.0;
    for chunk_start in (0..y.len()).step_by(32) {
        let end = (chunk_start + 32).min(y.len());
        let rows = end - chunk_start;
        let mut xb = Vec::with_capacity(rows * 2);
        for i in chunk_start..end {
            xb.extend_from_slice(x.row(i));
        }
        let xb = Mat::from_vec(rows, 2, xb);
        let yb = &y[chunk_start..end];
        let (logits, tape) = forward(&net, &xb)?;
        let (_, grad_logits) = softmax_cross_entropy(&logits, yb);
        let grads = backward(&net, &tape, &grad_logits)?;
        if let LayerGrads::Dense { dw, .. } = &grads.layers[0] {
            accumulated += dw.as_slice().iter().map(|g| g.abs()).sum::<f64>();
        }
        // plain SGD step so the epoch actually trains
        for (layer, layer_grads) in net.layers.iter_mut().zip(&grads.layers) {
            if let (Layer::Dense(dense), LayerGrads::Dense { dw, db }) = (layer, layer_grads) {
                for (w, &g) in dense.weights.as_mut_slice().iter_mut().zip(dw.as_slice()) {
                    *w -= lr * g;
                }
                for (b, &g) in dense.bias.iter_mut().zip(db) {
                    *b -= lr * g;
                }
            }
        }
    }
    Ok(accumulated)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Epsilon;

    fn order(n: u32) -> SmoothnessOrder {
        SmoothnessOrder::new(n).unwrap()
    }

    #[test]
    fn rejects_small_sample_counts() {
        assert!(matches!(
            suppression_probe(order(1), 10, 999, 0),
            Err(NnError::TooFewSamples(999))
        ));
        assert!(suppression_probe(order(1), 10, 1000, 0).is_ok());
    }

    #[test]
    fn single_layer_mean_log_gain_is_negative() {
        let r = suppression_probe(order(1), 1, 20_000, 42).unwrap();
        assert!(r.mean_log_gain_per_layer < 0.0, "{r:?}");
        assert_eq!(r.log_product, r.mean_log_gain_per_layer);
    }

    #[test]
    fn deeper_and_sharper_is_more_suppressed() {
        let n1 = suppression_probe(order(1), 54, 50_000, 7).unwrap();
        let n2 = suppression_probe(order(2), 54, 50_000, 7).unwrap();
        assert!(n2.log_product < n1.log_product, "{n1:?} vs {n2:?}");
        let deep9 = suppression_probe(order(9), 18, 50_000, 7).unwrap();
        assert!(deep9.log_product < -40.0, "{deep9:?}");
    }

    #[test]
    fn probe_is_seed_deterministic() {
        let a = suppression_probe(order(3), 18, 5_000, 123).unwrap();
        let b = suppression_probe(order(3), 18, 5_000, 123).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dead_neuron_contrast() {
        let gem = dead_neuron_first_layer_grad(ActivationSpec::Gem(order(1)), 5).unwrap();
        assert_eq!(gem, 0.0, "clamped family must pass zero gradient");
        let segem = dead_neuron_first_layer_grad(
            ActivationSpec::SEGem(order(1), Epsilon::ONE),
            5,
        )
        .unwrap();
        assert!(segem > 1e-12, "piecewise family must recover, got {segem}");
    }
}
