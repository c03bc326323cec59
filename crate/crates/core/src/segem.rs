//! The piecewise variant: identity for x >= 0, ε x / (ε + x^{2N}) for x < 0.
//! The negative branch dips to a trough and recovers toward zero, so
//! persistently negative units keep a nonzero (sign-reversed) gradient
//! instead of dying.

use crate::gem::{overflow_guard, pow_even_value};
use crate::real::Real;
use crate::types::{Epsilon, SmoothnessOrder};

/// Forward value: x for x >= 0, ε x / (ε + x^{2N}) for x < 0.
#[inline]
pub fn segem_forward<T: Real>(x: T, n: SmoothnessOrder, eps: Epsilon) -> T {
    if x.gt_zero() {
        return x;
    }
    let e = eps.get();
    if x.raw_abs() <= overflow_guard::<T>(n) {
        let t = pow_even_value(x, n);
        (T::of(e) * x) / (T::of(e) + t)
    } else {
        let u = pow_even_value(T::ONE / x, n);
        let w = T::of(e) * u;
        (x * w) / (T::ONE + w)
    }
}

/// The stored recovery ratio r = ε / (ε + x^{2N}) for x < 0, and exactly 1
/// for x >= 0 (where the derivative formula collapses to the identity's
/// unit gradient, so no separate branch flag is needed).
#[inline]
pub(crate) fn segem_ratio<T: Real>(x: T, n: SmoothnessOrder, eps: f64) -> T {
    if x.to_f64() >= 0.0 {
        return T::ONE;
    }
    if x.raw_abs() <= overflow_guard::<T>(n) {
        let t = pow_even_value(x, n);
        T::of(eps) / (T::of(eps) + t)
    } else {
        let u = pow_even_value(T::ONE / x, n);
        let w = T::of(eps) * u;
        w / (T::ONE + w)
    }
}

/// First derivative: 1 for x >= 0, ε (ε + (1-2N) x^{2N}) / (ε + x^{2N})²
/// for x < 0. Continuous at the origin with value 1 from both sides.
#[inline]
pub fn segem_grad<T: Real>(x: T, n: SmoothnessOrder, eps: Epsilon) -> T {
    if x.to_f64() >= 0.0 {
        T::ONE
    } else {
        segem_grad_from_ratio(segem_ratio(x, n, eps.get()), n)
    }
}

/// First derivative from the stored ratio: r (1 - 2N (1 - r)).
#[inline(always)]
pub fn segem_grad_from_ratio<T: Real>(r: T, n: SmoothnessOrder) -> T {
    let two_n = T::of(n.two_n());
    r * (T::ONE - two_n * (T::ONE - r))
}

/// Closed-form minimizer of the negative branch and its depth:
/// x* = -(ε/(2N-1))^{1/(2N)}, value ((2N-1)/(2N)) x*.
pub fn segem_trough(n: SmoothnessOrder, eps: Epsilon) -> (f64, f64) {
    let two_n = n.two_n();
    let ratio = eps.get() / (two_n - 1.0);
    let argmin = -if n.get() == 1 {
        ratio.sqrt()
    } else {
        ratio.powf(1.0 / two_n)
    };
    let depth = (two_n - 1.0) / two_n * argmin;
    (argmin, depth)
}
