//! Shared helpers for the criterion benchmarks.

use gem_core::rng::Xoshiro256StarStar;

/// Standard-normal f64 buffer with a fixed seed, matching the regime the
/// throughput harness uses.
pub fn normal_buffer(len: usize) -> Vec<f64> {
    let mut rng = Xoshiro256StarStar::seed_from(0xbe9c4);
    (0..len).map(|_| rng.next_normal()).collect()
}
