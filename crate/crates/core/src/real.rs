//! Scalar abstraction so every activation is defined once for single and
//! double precision. The op-count audit in [`crate::kernels`] implements this
//! trait for a counting wrapper, so instrumented counts always come from the
//! production code path rather than a hand-tabulated twin.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Real:
    Copy
    + Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// Exponent budget for x^{2N}: past `exp2(budget / (2N))` the rational
    /// forms switch to their reciprocal-power identities.
    const POW_BUDGET: f64;

    const ZERO: Self;
    const ONE: Self;

    fn of(v: f64) -> Self;
    fn to_f64(self) -> f64;

    /// max(0, self). Counted as one comparison by the audit.
    fn max_zero(self) -> Self;

    /// self > 0. Counted as one comparison by the audit.
    fn gt_zero(self) -> bool;

    /// |self| as f64, for range guards. Not counted: guards are control
    /// flow around the arithmetic, not part of it.
    fn raw_abs(self) -> f64;

    fn exp(self) -> Self;
    fn tanh(self) -> Self;
    fn erf(self) -> Self;
    fn is_finite(self) -> bool;
}

impl Real for f64 {
    const POW_BUDGET: f64 = 1000.0;
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;

    #[inline(always)]
    fn of(v: f64) -> Self {
        v
    }

    #[inline(always)]
    fn to_f64(self) -> f64 {
        self
    }

    #[inline(always)]
    fn max_zero(self) -> Self {
        self.max(0.0)
    }

    #[inline(always)]
    fn gt_zero(self) -> bool {
        self > 0.0
    }

    #[inline(always)]
    fn raw_abs(self) -> f64 {
        self.abs()
    }

    #[inline(always)]
    fn exp(self) -> Self {
        f64::exp(self)
    }

    #[inline(always)]
    fn tanh(self) -> Self {
        f64::tanh(self)
    }

    #[inline(always)]
    fn erf(self) -> Self {
        libm::erf(self)
    }

    #[inline(always)]
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

impl Real for f32 {
    const POW_BUDGET: f64 = 120.0;
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;

    #[inline(always)]
    fn of(v: f64) -> Self {
        v as f32
    }

    #[inline(always)]
    fn to_f64(self) -> f64 {
        self as f64
    }

    #[inline(always)]
    fn max_zero(self) -> Self {
        self.max(0.0)
    }

    #[inline(always)]
    fn gt_zero(self) -> bool {
        self > 0.0
    }

    #[inline(always)]
    fn raw_abs(self) -> f64 {
        self.abs() as f64
    }

    #[inline(always)]
    fn exp(self) -> Self {
        f32::exp(self)
    }

    #[inline(always)]
    fn tanh(self) -> Self {
        f32::tanh(self)
    }

    #[inline(always)]
    fn erf(self) -> Self {
        libm::erff(self)
    }

    #[inline(always)]
    fn is_finite(self) -> bool {
        f32::is_finite(self)
    }
}
