//! Buffer-oriented elementwise application of any activation, gate caching
//! for the cheap backward pass, instrumented operation counts, and a
//! throughput micro-benchmark.
//!
//! Kernel outputs are bit-identical to mapping the scalar ops in order; the
//! rational forwards run a branch-free fast pass over the whole buffer and
//! patch the (astronomically rare) overflow-guard elements afterwards, so
//! the hot loop vectorizes.

mod audit;
mod bench;

pub use audit::{audit_backward_ops, audit_ops, paper_flop_claim, OpCount};
pub use bench::{bench, BenchError, BenchReport};

use thiserror::Error;

use crate::egem::{egem_gate, egem_grad_from_gate};
use crate::gem::{
    gem_gate, gem_grad_from_gate, overflow_guard, rational_forward_fast, rational_forward_slow,
};
use crate::real::Real;
use crate::segem::{segem_forward, segem_grad_from_ratio, segem_ratio};
use crate::types::ActivationSpec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("buffer length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("`{0}` has no gate cache; use the direct backward path")]
    NoGateCache(String),
}

/// Per-element gate values saved by the forward pass.
///
/// For the clamped rational variants each element is the stored-ratio gate
/// in [0, 1) (0 for non-positive inputs, reproducing the clamped gradient).
/// For the piecewise variant each element is the recovery ratio
/// ε/(ε + x^{2N}) in (0, 1] with 1 standing for the identity branch.
#[derive(Debug, Clone, PartialEq)]
pub struct GateCache<T> {
    gates: Vec<T>,
}

impl<T: Real> GateCache<T> {
    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.gates
    }
}

/// Forward output plus the optional cache. `cache_unavailable` flags a
/// cache request against a spec that has no rational gate.
#[derive(Debug, Clone)]
pub struct ForwardResult<T> {
    pub output: Vec<T>,
    pub cache: Option<GateCache<T>>,
    pub cache_unavailable: bool,
}

/// Elementwise forward over a buffer.
pub fn apply_forward<T: Real>(
    input: &[T],
    spec: ActivationSpec,
    want_cache: bool,
) -> ForwardResult<T> {
    let mut output = vec![T::ZERO; input.len()];
    fill_forward(input, &mut output, spec);
    let (cache, cache_unavailable) = if want_cache {
        match gate_fill(input, spec) {
            Some(gates) => (Some(GateCache { gates }), false),
            None => (None, true),
        }
    } else {
        (None, false)
    };
    ForwardResult {
        output,
        cache,
        cache_unavailable,
    }
}

/// Forward into a caller-owned buffer; the benchmark path, free of
/// per-pass allocation.
pub(crate) fn fill_forward<T: Real>(input: &[T], output: &mut [T], spec: ActivationSpec) {
    assert_eq!(input.len(), output.len());
    match spec {
        ActivationSpec::Gem(n) => fill_rational(input, output, n, 1.0),
        ActivationSpec::EGem(n, eps) => fill_rational(input, output, n, eps.get()),
        ActivationSpec::SEGem(n, eps) => {
            for (o, &x) in output.iter_mut().zip(input) {
                *o = segem_forward(x, n, eps);
            }
        }
        baseline => {
            for (o, &x) in output.iter_mut().zip(input) {
                *o = baseline.value(x);
            }
        }
    }
}

fn fill_rational<T: Real>(
    input: &[T],
    output: &mut [T],
    n: crate::types::SmoothnessOrder,
    eps: f64,
) {
    for (o, &x) in output.iter_mut().zip(input.iter()) {
        *o = rational_forward_fast(x, n, eps);
    }
    let guard = overflow_guard::<T>(n);
    for (o, &x) in output.iter_mut().zip(input.iter()) {
        if x.raw_abs() > guard {
            *o = rational_forward_slow(x, n, eps);
        }
    }
}

fn gate_fill<T: Real>(input: &[T], spec: ActivationSpec) -> Option<Vec<T>> {
    match spec {
        ActivationSpec::Gem(n) => Some(input.iter().map(|&x| gem_gate(x, n)).collect()),
        ActivationSpec::EGem(n, eps) => {
            Some(input.iter().map(|&x| egem_gate(x, n, eps.get())).collect())
        }
        ActivationSpec::SEGem(n, eps) => {
            Some(input.iter().map(|&x| segem_ratio(x, n, eps.get())).collect())
        }
        _ => None,
    }
}

/// Backward from the stored gates: grad_in = grad_out * f'(gate).
pub fn apply_backward<T: Real>(
    grad_out: &[T],
    cache: &GateCache<T>,
    spec: ActivationSpec,
) -> Result<Vec<T>, KernelError> {
    if grad_out.len() != cache.len() {
        return Err(KernelError::LengthMismatch {
            left: grad_out.len(),
            right: cache.len(),
        });
    }
    let zip = grad_out.iter().zip(cache.as_slice());
    match spec {
        ActivationSpec::Gem(n) => Ok(zip.map(|(&d, &g)| d * gem_grad_from_gate(g, n)).collect()),
        ActivationSpec::EGem(n, _) => {
            Ok(zip.map(|(&d, &g)| d * egem_grad_from_gate(g, n)).collect())
        }
        ActivationSpec::SEGem(n, _) => {
            Ok(zip.map(|(&d, &r)| d * segem_grad_from_ratio(r, n)).collect())
        }
        other => Err(KernelError::NoGateCache(other.to_string())),
    }
}

/// Reference backward from saved inputs: grad_in = grad_out * f'(x).
/// Works for every spec; the baselines have no cached form.
pub fn apply_backward_direct<T: Real>(
    grad_out: &[T],
    saved_input: &[T],
    spec: ActivationSpec,
) -> Result<Vec<T>, KernelError> {
    if grad_out.len() != saved_input.len() {
        return Err(KernelError::LengthMismatch {
            left: grad_out.len(),
            right: saved_input.len(),
        });
    }
    Ok(grad_out
        .iter()
        .zip(saved_input)
        .map(|(&d, &x)| d * spec.grad(x))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{Epsilon, SmoothnessOrder};

    fn gem(n: u32) -> ActivationSpec {
        ActivationSpec::Gem(SmoothnessOrder::new(n).unwrap())
    }

    #[test]
    fn forward_with_cache_reference() {
        let r = apply_forward(&[0.0f64, 1.0, -1.0], gem(1), true);
        assert_eq!(r.output, vec![0.0, 0.5, 0.0]);
        assert_eq!(r.cache.unwrap().as_slice(), &[0.0, 0.5, 0.0]);
        assert!(!r.cache_unavailable);
    }

    #[test]
    fn forward_matches_scalar_calls_bitwise() {
        let xs: Vec<f64> = (-40..=40).map(|i| i as f64 * 0.173).collect();
        for spec in [
            ActivationSpec::Relu,
            ActivationSpec::Silu,
            ActivationSpec::GeluExact,
            ActivationSpec::GeluTanh,
            gem(1),
            gem(9),
            ActivationSpec::EGem(
                SmoothnessOrder::new(2).unwrap(),
                Epsilon::new(0.01).unwrap(),
            ),
            ActivationSpec::SEGem(SmoothnessOrder::new(1).unwrap(), Epsilon::new(10.0).unwrap()),
        ] {
            let out = apply_forward(&xs, spec, false).output;
            for (&x, &y) in xs.iter().zip(&out) {
                assert_eq!(y.to_bits(), spec.value(x).to_bits(), "{spec} at {x}");
            }
        }
    }

    #[test]
    fn cache_request_on_baseline_sets_warning() {
        let r = apply_forward(&[1.0f64, 2.0], ActivationSpec::Silu, true);
        assert!(r.cache.is_none());
        assert!(r.cache_unavailable);
    }

    #[test]
    fn gate_cache_range_invariants() {
        let xs: Vec<f64> = (-30..=30).map(|i| i as f64 * 0.31).collect();
        let clamped = apply_forward(&xs, gem(3), true).cache.unwrap();
        for &g in clamped.as_slice() {
            assert!((0.0..1.0).contains(&g), "gate {g}");
        }
        let piecewise = apply_forward(
            &xs,
            ActivationSpec::SEGem(SmoothnessOrder::new(2).unwrap(), Epsilon::ONE),
            true,
        )
        .cache
        .unwrap();
        for &r in piecewise.as_slice() {
            assert!(r > 0.0 && r <= 1.0, "ratio {r}");
        }
    }

    #[test]
    fn backward_reference_points() {
        let cache = apply_forward(&[1.0f64], gem(1), true).cache.unwrap();
        assert_eq!(apply_backward(&[1.0], &cache, gem(1)).unwrap(), vec![1.0]);

        let zero = apply_forward(&[-2.0f64], gem(1), true).cache.unwrap();
        assert_eq!(apply_backward(&[1.0], &zero, gem(1)).unwrap(), vec![0.0]);

        let at_argmax = apply_forward(&[3.0f64.sqrt()], gem(1), true).cache.unwrap();
        assert_eq!(
            apply_backward(&[2.0], &at_argmax, gem(1)).unwrap(),
            vec![2.25]
        );
    }

    #[test]
    fn backward_direct_reference_points() {
        assert_eq!(
            apply_backward_direct(&[1.0f64], &[5.0], ActivationSpec::Relu).unwrap(),
            vec![1.0]
        );
        assert_eq!(
            apply_backward_direct(&[1.0f64], &[0.0], ActivationSpec::Silu).unwrap(),
            vec![0.5]
        );
        assert_eq!(
            apply_backward_direct(&[1.0f64], &[3.0f64.sqrt()], gem(1)).unwrap(),
            vec![1.125]
        );
    }

    #[test]
    fn length_mismatches_are_errors() {
        let cache = apply_forward(&[1.0f64, 2.0], gem(1), true).cache.unwrap();
        assert!(matches!(
            apply_backward(&[1.0], &cache, gem(1)),
            Err(KernelError::LengthMismatch { left: 1, right: 2 })
        ));
        assert!(apply_backward_direct(&[1.0f64], &[1.0, 2.0], gem(1)).is_err());
    }

    #[test]
    fn backward_on_baseline_cacheless() {
        let cache = apply_forward(&[1.0f64], gem(1), true).cache.unwrap();
        assert!(matches!(
            apply_backward(&[1.0], &cache, ActivationSpec::Relu),
            Err(KernelError::NoGateCache(_))
        ));
    }
}
