//! The ε-parameterized family: max(0, x^{2N+1} / (ε + x^{2N})). Shrinking ε
//! pulls the curve toward max(0, x); at ε = 1 every code path reduces to the
//! base family bit-for-bit.

use crate::gem::{overflow_guard, pow_even_value, rational_forward};
use crate::real::Real;
use crate::types::{Epsilon, SmoothnessOrder};

/// Forward value max(0, x^{2N+1} / (ε + x^{2N})).
#[inline]
pub fn egem_forward<T: Real>(x: T, n: SmoothnessOrder, eps: Epsilon) -> T {
    rational_forward(x, n, eps.get())
}

/// The unclamped ratio x^{2N+1} / (ε + x^{2N}), an odd function of x.
/// Exposed for verification; the forward path clamps it at zero.
#[inline]
pub fn egem_unclipped<T: Real>(x: T, n: SmoothnessOrder, eps: Epsilon) -> T {
    let e = eps.get();
    if x.raw_abs() <= overflow_guard::<T>(n) {
        let t = pow_even_value(x, n);
        x * (t / (T::of(e) + t))
    } else {
        let u = pow_even_value(T::ONE / x, n);
        let w = T::of(e) * u;
        x - x * (w / (T::ONE + w))
    }
}

/// The stored-ratio gate x^{2N} / (ε + x^{2N}) for x > 0, 0 otherwise.
#[inline]
pub(crate) fn egem_gate<T: Real>(x: T, n: SmoothnessOrder, eps: f64) -> T {
    let xf = x.to_f64();
    if xf <= 0.0 {
        T::ZERO
    } else if xf <= 1.0 {
        let t = pow_even_value(x, n);
        t / (T::of(eps) + t)
    } else {
        let u = pow_even_value(T::ONE / x, n);
        T::ONE / (T::ONE + T::of(eps) * u)
    }
}

/// First derivative x^{2N} (x^{2N} + (2N+1) ε) / (ε + x^{2N})² for x >= 0,
/// 0 for x < 0, evaluated through the stored-ratio factorization.
#[inline]
pub fn egem_grad<T: Real>(x: T, n: SmoothnessOrder, eps: Epsilon) -> T {
    if x.to_f64() < 0.0 {
        T::ZERO
    } else {
        egem_grad_from_gate(egem_gate(x, n, eps.get()), n)
    }
}

/// First derivative from the stored ratio g = x^{2N} / (ε + x^{2N}):
/// g (g + (2N+1)(1 - g)).
#[inline(always)]
pub fn egem_grad_from_gate<T: Real>(g: T, n: SmoothnessOrder) -> T {
    let c = T::of(n.two_n() + 1.0);
    g * (g + c * (T::ONE - g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gem::gem_forward;

    fn order(n: u32) -> SmoothnessOrder {
        SmoothnessOrder::new(n).unwrap()
    }

    fn eps(v: f64) -> Epsilon {
        Epsilon::new(v).unwrap()
    }

    #[test]
    fn reduces_to_gem_bit_for_bit_at_unit_eps() {
        for n in [1u32, 2, 3, 5, 9, 64] {
            for &x in &[-3.0f64, -0.1, 0.0, 1e-3, 0.4, 1.0, 2.7, 1e3, 1e301] {
                let via_egem = egem_forward(x, order(n), Epsilon::ONE);
                let via_gem = gem_forward(x, order(n));
                assert_eq!(via_egem.to_bits(), via_gem.to_bits(), "x={x} n={n}");
            }
        }
    }

    #[test]
    fn forward_reference_points() {
        assert_eq!(egem_forward(1.0f64, order(1), eps(1.0)), 0.5);
        let near_relu = egem_forward(1.0f64, order(1), eps(1e-4));
        assert!((near_relu - 1.0 / 1.0001).abs() < 1e-16, "got {near_relu}");
        assert_eq!(egem_forward(-1.0f64, order(1), eps(0.01)), 0.0);
    }

    #[test]
    fn grad_reference_points() {
        assert_eq!(egem_grad(0.0f64, order(1), eps(0.5)), 0.0);
        assert_eq!(egem_grad(0.0f64, order(3), eps(1e-4)), 0.0);
        assert_eq!(egem_grad(1.0f64, order(1), eps(1.0)), 1.0);
        assert_eq!(egem_grad(-0.5f64, order(1), eps(0.01)), 0.0);
    }

    #[test]
    fn grad_overshoots_unity_near_small_eps() {
        // the derivative transiently exceeds 1 just past x = sqrt(eps)
        let g = egem_grad(0.12f64, order(1), eps(0.01));
        assert!(g > 1.0, "got {g}");
        let far = egem_grad(5.0f64, order(1), eps(0.01));
        assert!((far - 1.0).abs() < 1e-3);
    }

    #[test]
    fn unclipped_ratio_is_odd() {
        for &x in &[1e-3f64, 0.3, 1.0, 2.5, 40.0, 1e200] {
            for n in [1u32, 2, 9] {
                for &e in &[1e-6, 0.01, 1.0, 10.0] {
                    let pos = egem_unclipped(x, order(n), eps(e));
                    let neg = egem_unclipped(-x, order(n), eps(e));
                    assert_eq!(neg.to_bits(), (-pos).to_bits(), "x={x} n={n} eps={e}");
                }
            }
        }
    }
}
