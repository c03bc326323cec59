//! Forward-pass throughput measurement over a fixed pseudo-random buffer.
//! Elementwise kernels are memory-bound at large sizes, so the interesting
//! outputs are the effective bandwidth and how per-element time scales with
//! the power chain in the compute-bound small-buffer regime.

use std::time::Instant;

use thiserror::Error;

use super::{audit_ops, fill_forward, OpCount};
use crate::real::Real;
use crate::rng::Xoshiro256StarStar;
use crate::types::{ActivationSpec, Precision, SpecError};

/// Seed for the standard-normal input buffer; fixed so runs are comparable.
const BUFFER_SEED: u64 = 0x9e3779b97f4a7c15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BenchError {
    #[error("elements must be >= 1, got {0}")]
    TooFewElements(usize),
    #[error("iterations must be >= 3, got {0}")]
    TooFewIterations(usize),
    #[error(transparent)]
    Spec(#[from] SpecError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub spec: ActivationSpec,
    pub elements: usize,
    pub iterations: usize,
    pub precision: Precision,
    pub median_ns_per_pass: f64,
    pub throughput_gelem_per_s: f64,
    pub effective_gb_per_s: f64,
    pub opcount: OpCount,
}

impl BenchReport {
    pub fn csv_header() -> &'static str {
        "spec,elements,iterations,precision,median_ns,gelem_s,gb_s,mul,add,recip,cmp"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            csv_field(&self.spec.to_string()),
            self.elements,
            self.iterations,
            self.precision,
            self.median_ns_per_pass,
            self.throughput_gelem_per_s,
            self.effective_gb_per_s,
            self.opcount.multiplies,
            self.opcount.adds,
            self.opcount.reciprocals,
            self.opcount.comparisons,
        )
    }
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Time repeated forward passes: 2 warm-ups, then `iterations` timed passes
/// on the monotonic clock, reporting the median. Buffer allocation happens
/// before any timing.
pub fn bench(
    spec: ActivationSpec,
    elements: usize,
    iterations: usize,
    precision: Precision,
) -> Result<BenchReport, BenchError> {
    if elements < 1 {
        return Err(BenchError::TooFewElements(elements));
    }
    if iterations < 3 {
        return Err(BenchError::TooFewIterations(iterations));
    }
    spec.validate_for(precision)?;
    let median_ns = match precision {
        Precision::Double => run_passes::<f64>(spec, elements, iterations),
        Precision::Single => run_passes::<f32>(spec, elements, iterations),
    };
    let bytes_per_elem = match precision {
        Precision::Double => 16.0, // 8 read + 8 written
        Precision::Single => 8.0,
    };
    Ok(BenchReport {
        spec,
        elements,
        iterations,
        precision,
        median_ns_per_pass: median_ns,
        throughput_gelem_per_s: elements as f64 / median_ns,
        effective_gb_per_s: elements as f64 * bytes_per_elem / median_ns,
        opcount: audit_ops(spec),
    })
}

fn run_passes<T: Real>(spec: ActivationSpec, elements: usize, iterations: usize) -> f64 {
    let mut rng = Xoshiro256StarStar::seed_from(BUFFER_SEED);
    let input: Vec<T> = (0..elements).map(|_| T::of(rng.next_normal())).collect();
    let mut output = vec![T::ZERO; elements];

    for _ in 0..2 {
        fill_forward(&input, &mut output, spec);
        std::hint::black_box(&output);
    }
    let mut samples: Vec<f64> = (0..iterations)
        .map(|_| {
            let start = Instant::now();
            fill_forward(&input, &mut output, spec);
            std::hint::black_box(&output);
            start.elapsed().as_nanos() as f64
        })
        .collect();
    samples.sort_by(|a, b| a.total_cmp(b));
    let mid = samples.len() / 2;
    if samples.len() % 2 == 1 {
        samples[mid]
    } else {
        0.5 * (samples[mid - 1] + samples[mid])
    }
}
