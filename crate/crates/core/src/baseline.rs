//! Comparison activations: ReLU, SiLU, exact GELU (via erf) and the
//! cubic-tanh GELU approximation, with their analytic derivatives.

use crate::real::Real;

/// sqrt(2/pi), the tanh-approximation scale.
pub const SQRT_2_OVER_PI: f64 = 0.7978845608028654;
/// The cubic coefficient of the tanh approximation.
pub const GELU_TANH_CUBIC: f64 = 0.044715;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;
const FRAC_1_SQRT_2PI: f64 = 0.3989422804014327;

#[inline(always)]
pub fn relu<T: Real>(x: T) -> T {
    x.max_zero()
}

/// ReLU'(0) is taken as 0, matching the ε -> 0 limit of the rational family.
#[inline(always)]
pub fn relu_grad<T: Real>(x: T) -> T {
    if x.gt_zero() {
        T::ONE
    } else {
        T::ZERO
    }
}

#[inline(always)]
fn sigmoid<T: Real>(x: T) -> T {
    T::ONE / (T::ONE + (-x).exp())
}

/// x * sigmoid(x)
#[inline(always)]
pub fn silu<T: Real>(x: T) -> T {
    x / (T::ONE + (-x).exp())
}

/// sigma(x) (1 + x (1 - sigma(x)))
#[inline(always)]
pub fn silu_grad<T: Real>(x: T) -> T {
    let s = sigmoid(x);
    s * (T::ONE + x * (T::ONE - s))
}

/// Standard normal CDF via the error function.
#[inline(always)]
fn normal_cdf<T: Real>(x: T) -> T {
    T::of(0.5) * (T::ONE + (x * T::of(FRAC_1_SQRT_2)).erf())
}

/// Standard normal density.
#[inline(always)]
fn normal_pdf<T: Real>(x: T) -> T {
    T::of(FRAC_1_SQRT_2PI) * (T::of(-0.5) * x * x).exp()
}

/// x * Phi(x)
#[inline(always)]
pub fn gelu_exact<T: Real>(x: T) -> T {
    x * normal_cdf(x)
}

/// Phi(x) + x phi(x)
#[inline(always)]
pub fn gelu_exact_grad<T: Real>(x: T) -> T {
    normal_cdf(x) + x * normal_pdf(x)
}

/// 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3)))
#[inline(always)]
pub fn gelu_tanh<T: Real>(x: T) -> T {
    let inner = T::of(SQRT_2_OVER_PI) * (x + T::of(GELU_TANH_CUBIC) * (x * x * x));
    T::of(0.5) * x * (T::ONE + inner.tanh())
}

#[inline(always)]
pub fn gelu_tanh_grad<T: Real>(x: T) -> T {
    let inner = T::of(SQRT_2_OVER_PI) * (x + T::of(GELU_TANH_CUBIC) * (x * x * x));
    let th = inner.tanh();
    let inner_grad =
        T::of(SQRT_2_OVER_PI) * (T::ONE + T::of(3.0 * GELU_TANH_CUBIC) * (x * x));
    T::of(0.5) * (T::ONE + th) + T::of(0.5) * x * (T::ONE - th * th) * inner_grad
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_points() {
        assert_eq!(relu(-3.0f64), 0.0);
        assert_eq!(relu(4.5f64), 4.5);
        assert_eq!(silu(0.0f64), 0.0);
        assert_eq!(gelu_exact(0.0f64), 0.0);
        assert_eq!(gelu_tanh(0.0f64), 0.0);
        // Phi(0) = 0.5
        assert!((gelu_exact(1e-300f64) / 1e-300 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn grad_reference_points() {
        assert_eq!(relu_grad(5.0f64), 1.0);
        assert_eq!(relu_grad(0.0f64), 0.0);
        assert_eq!(relu_grad(-1e-9f64), 0.0);
        assert_eq!(silu_grad(0.0f64), 0.5);
        assert_eq!(gelu_exact_grad(0.0f64), 0.5);
        assert_eq!(gelu_tanh_grad(0.0f64), 0.5);
    }

    #[test]
    fn tanh_approximation_tracks_exact_gelu() {
        for i in -40..=40 {
            let x = i as f64 * 0.1;
            let diff = (gelu_tanh(x) - gelu_exact(x)).abs();
            assert!(diff < 3e-3, "x={x} diff={diff}");
        }
    }
}
