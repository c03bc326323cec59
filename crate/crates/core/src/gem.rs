//! The base activation family: max(0, x^{2N+1} / (1 + x^{2N})), its
//! log-logistic gate, first and second derivatives, and the gate-cached
//! derivative forms that make the backward pass cheap.
//!
//! Derivatives are evaluated through the gate factorizations
//!
//! ```text
//! f'(x)  = g ((2N+1) - 2N g)                      g = x^{2N} / (1 + x^{2N})
//! f''(x) = (2N/x) g (1-g) ((2N+1) - 4N g)
//! ```
//!
//! so a value reconstructed from a stored gate is bit-identical to the one
//! computed from x. Numeric correctness of the shared route is checked
//! independently against finite differences and exact rational arithmetic
//! in the test suites.

use thiserror::Error;

use crate::real::Real;
use crate::types::{LipschitzResult, SmoothnessOrder};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("gate-cached second derivative requires x > 0, got {0}")]
pub struct NonPositiveInput(pub f64);

/// x^{2N} by square-and-multiply on x², together with the multiply count
/// 1 + floor(log2 N) + popcount(N) - 1. The count is validated against an
/// instrumented run by the kernel audit.
pub fn pow_even<T: Real>(x: T, n: SmoothnessOrder) -> (T, u32) {
    (pow_even_value(x, n), pow_even_multiplies(n))
}

pub fn pow_even_multiplies(n: SmoothnessOrder) -> u32 {
    let n = n.get();
    1 + n.ilog2() + n.count_ones() - 1
}

#[inline(always)]
pub(crate) fn pow_even_value<T: Real>(x: T, n: SmoothnessOrder) -> T {
    let base = x * x;
    let n = n.get();
    let mut acc = base;
    if n > 1 {
        // remaining bits of n below the leading one, most significant first
        let mut mask = 1u32 << (n.ilog2() - 1);
        while mask != 0 {
            acc = acc * acc;
            if n & mask != 0 {
                acc = acc * base;
            }
            mask >>= 1;
        }
    }
    acc
}

/// Inputs beyond this magnitude would push x^{2N} outside the exponent
/// budget; the rational forms switch to reciprocal-power identities there.
#[inline(always)]
pub(crate) fn overflow_guard<T: Real>(n: SmoothnessOrder) -> f64 {
    (T::POW_BUDGET / n.two_n()).exp2()
}

/// max(0, x^{2N+1} / (eps + x^{2N})) on the non-overflowing range.
/// Branch-free: the even power ignores the sign and the final clamp is the
/// max from the definition, so buffers of mixed-sign inputs vectorize.
#[inline(always)]
pub(crate) fn rational_forward_fast<T: Real>(x: T, n: SmoothnessOrder, eps: f64) -> T {
    let t = pow_even_value(x, n);
    (x * (t / (T::of(eps) + t))).max_zero()
}

/// Large-|x| fallback: x - eps*x/(eps + x^{2N}) via u = x^{-2N}, which
/// degrades gracefully to the identity once the remainder underflows.
#[inline(never)]
pub(crate) fn rational_forward_slow<T: Real>(x: T, n: SmoothnessOrder, eps: f64) -> T {
    if !x.gt_zero() {
        return T::ZERO;
    }
    let u = pow_even_value(T::ONE / x, n);
    let w = T::of(eps) * u;
    x - x * (w / (T::ONE + w))
}

#[inline(always)]
pub(crate) fn rational_forward<T: Real>(x: T, n: SmoothnessOrder, eps: f64) -> T {
    if x.raw_abs() <= overflow_guard::<T>(n) {
        rational_forward_fast(x, n, eps)
    } else {
        rational_forward_slow(x, n, eps)
    }
}

/// Forward value max(0, x^{2N+1} / (1 + x^{2N})).
#[inline]
pub fn gem_forward<T: Real>(x: T, n: SmoothnessOrder) -> T {
    rational_forward(x, n, 1.0)
}

/// The gate sigma_N(x) = x^{2N} / (1 + x^{2N}) for x > 0, 0 otherwise;
/// the x > 1 branch computes 1 / (1 + x^{-2N}) so the power cannot overflow.
#[inline]
pub fn gem_gate<T: Real>(x: T, n: SmoothnessOrder) -> T {
    let xf = x.to_f64();
    if xf <= 0.0 {
        T::ZERO
    } else if xf <= 1.0 {
        let t = pow_even_value(x, n);
        t / (T::ONE + t)
    } else {
        let u = pow_even_value(T::ONE / x, n);
        T::ONE / (T::ONE + u)
    }
}

/// First derivative; 0 for x < 0, converging to 1 for large x.
#[inline]
pub fn gem_grad<T: Real>(x: T, n: SmoothnessOrder) -> T {
    if x.to_f64() <= 0.0 {
        T::ZERO
    } else {
        gem_grad_from_gate(gem_gate(x, n), n)
    }
}

/// First derivative from a stored gate: (2N+1) g - 2N g², evaluated as
/// g ((2N+1) - 2N g) — two multiplies and one subtraction with the
/// order-dependent constants folded.
#[inline(always)]
pub fn gem_grad_from_gate<T: Real>(g: T, n: SmoothnessOrder) -> T {
    let two_n = T::of(n.two_n());
    let c = T::of(n.two_n() + 1.0);
    g * (c - two_n * g)
}

/// Second derivative; 0 for x <= 0 (all orders through 2N vanish at the
/// origin, and the negative branch is identically zero).
#[inline]
pub fn gem_second<T: Real>(x: T, n: SmoothnessOrder) -> T {
    if x.to_f64() <= 0.0 {
        T::ZERO
    } else {
        gem_second_from_gate(x, gem_gate(x, n), n).expect("x > 0")
    }
}

/// Second derivative from a stored gate: (2N/x) g (1-g) ((2N+1) - 4N g).
/// The self-referential form divides by x, so non-positive inputs are
/// rejected.
#[inline]
pub fn gem_second_from_gate<T: Real>(
    x: T,
    g: T,
    n: SmoothnessOrder,
) -> Result<T, NonPositiveInput> {
    if x.to_f64() <= 0.0 {
        return Err(NonPositiveInput(x.to_f64()));
    }
    let two_n = T::of(n.two_n());
    let c = T::of(n.two_n() + 1.0);
    let four_n = T::of(2.0 * n.two_n());
    Ok((two_n / x) * g * (T::ONE - g) * (c - four_n * g))
}

/// The gradient bound L_N = (2N+1)² / (8N), attained at
/// ((2N+1)/(2N-1))^{1/(2N)}.
pub fn lipschitz(n: SmoothnessOrder) -> LipschitzResult {
    let two_n = n.two_n();
    let c = two_n + 1.0;
    let constant = c * c / (4.0 * two_n);
    let ratio = c / (two_n - 1.0);
    let argmax = if n.get() == 1 {
        ratio.sqrt()
    } else {
        ratio.powf(1.0 / two_n)
    };
    LipschitzResult { constant, argmax }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn order(n: u32) -> SmoothnessOrder {
        SmoothnessOrder::new(n).unwrap()
    }

    #[test]
    fn pow_even_values_and_counts() {
        assert_eq!(pow_even(2.0f64, order(1)), (4.0, 1));
        assert_eq!(pow_even(2.0f64, order(2)), (16.0, 2));
        assert_eq!(pow_even(3.0f64, order(3)), (729.0, 3));
        assert_eq!(pow_even(2.0f64, order(4)), (256.0, 3));
        // negative base: even power drops the sign
        assert_eq!(pow_even_value(-2.0f64, order(1)), 4.0);
    }

    #[test]
    fn pow_even_count_bounds() {
        for n in 1..=64u32 {
            let n = order(n);
            let count = pow_even_multiplies(n);
            assert!(count <= 1 + 2 * n.get().ilog2());
            if n.get().is_power_of_two() {
                assert_eq!(count, 1 + n.get().ilog2());
            }
        }
    }

    #[test]
    fn forward_reference_points() {
        assert_eq!(gem_forward(0.0f64, order(1)), 0.0);
        assert_eq!(gem_forward(1.0f64, order(1)), 0.5);
        assert_eq!(gem_forward(-2.5f64, order(3)), 0.0);
        // 2^3 / (1 + 2^2) = 8/5
        assert_eq!(gem_forward(2.0f64, order(1)), 1.6);
    }

    #[test]
    fn forward_huge_inputs_degrade_to_identity() {
        for &x in &[1e200f64, 1e300] {
            for n in [1, 9, 64] {
                let y = gem_forward(x, order(n));
                assert!(y.is_finite());
                assert!((y - x).abs() <= x * 1e-15, "n={n} x={x} y={y}");
            }
        }
        assert_eq!(gem_forward(-1e300f64, order(1)), 0.0);
    }

    #[test]
    fn forward_f32_matches_f64_coarsely() {
        for &x in &[-2.0f32, -0.5, 0.0, 0.3, 1.0, 2.0, 17.0] {
            for n in [1, 2, 9] {
                let single = gem_forward(x, order(n)) as f64;
                let double = gem_forward(x as f64, order(n));
                assert!((single - double).abs() <= 1e-6 * (1.0 + double.abs()));
            }
        }
    }

    #[test]
    fn gate_reference_points() {
        for n in 1..=SmoothnessOrder::MAX {
            assert_eq!(gem_gate(1.0f64, order(n)), 0.5, "gate(1) must be 1/2 at n={n}");
        }
        assert_eq!(gem_gate(0.0f64, order(1)), 0.0);
        assert_eq!(gem_gate(-3.0f64, order(2)), 0.0);
        let g3 = gem_gate(3.0f64, order(1));
        assert!((g3 - 0.9).abs() < 1e-15, "got {g3}");
    }

    #[test]
    fn gate_stays_in_unit_interval() {
        for n in [1, 2, 9, 64] {
            for &x in &[1e-3f64, 0.5, 1.0, 2.0, 1e3, 1e6] {
                let g = gem_gate(x, order(n));
                assert!((0.0..=1.0).contains(&g), "gate({x}, {n}) = {g}");
            }
        }
    }

    #[test]
    fn grad_reference_points() {
        assert_eq!(gem_grad(3.0f64.sqrt(), order(1)), 1.125);
        assert_eq!(gem_grad(0.0f64, order(1)), 0.0);
        assert_eq!(gem_grad(-4.0f64, order(2)), 0.0);
        assert_eq!(gem_grad(1.0f64, order(2)), 1.5);
        // large x: derivative converges to 1
        let g = gem_grad(1e160f64, order(2));
        assert!((g - 1.0).abs() < 1e-12, "got {g}");
    }

    #[test]
    fn grad_from_gate_reference_points() {
        assert_eq!(gem_grad_from_gate(0.5f64, order(1)), 1.0);
        assert_eq!(gem_grad_from_gate(0.0f64, order(7)), 0.0);
        assert_eq!(gem_grad_from_gate(0.75f64, order(1)), 1.125);
    }

    #[test]
    fn second_reference_points() {
        assert_eq!(gem_second(0.0f64, order(1)), 0.0);
        assert_eq!(gem_second(-1.0f64, order(2)), 0.0);
        assert_eq!(gem_second(1.0f64, order(1)), 0.5);
        // past the inflection the second derivative goes negative:
        // 2*2*(3 - 4)/125 = -0.032 at x = 2, N = 1
        let s = gem_second(2.0f64, order(1));
        assert!((s - (-0.032)).abs() < 1e-16, "got {s}");
    }

    #[test]
    fn second_from_gate_rejects_non_positive_x() {
        assert_eq!(
            gem_second_from_gate(0.0f64, 0.0, order(1)),
            Err(NonPositiveInput(0.0))
        );
        assert!(gem_second_from_gate(-1.0f64, 0.5, order(1)).is_err());
        // saturated gate: the (1-g) factor kills the value
        assert_eq!(gem_second_from_gate(1e9f64, 1.0, order(1)).unwrap(), 0.0);
    }

    #[test]
    fn lipschitz_reference_points() {
        let l1 = lipschitz(order(1));
        assert_eq!(l1.constant, 1.125);
        assert_eq!(l1.argmax, 3.0f64.sqrt());

        let l2 = lipschitz(order(2));
        assert_eq!(l2.constant, 25.0 / 16.0);
        assert!((l2.argmax - (5.0f64 / 3.0).powf(0.25)).abs() < 1e-15);

        // L_N grows like N/2: L_{2N}/L_N -> 2 within 5% for N >= 16
        for n in [16u32, 24, 32] {
            let ratio = lipschitz(order(2 * n)).constant / lipschitz(order(n)).constant;
            assert!((ratio - 2.0).abs() < 0.1, "n={n} ratio={ratio}");
        }
    }

    #[test]
    fn grad_attains_lipschitz_bound() {
        for n in 1..=9u32 {
            let n = order(n);
            let l = lipschitz(n);
            let at_argmax = gem_grad(l.argmax, n);
            assert!(
                (at_argmax - l.constant).abs() <= 1e-12 * l.constant,
                "n={} grad={} L={}",
                n.get(),
                at_argmax,
                l.constant
            );
        }
    }
}
