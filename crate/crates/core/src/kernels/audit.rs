//! Instrumented per-element operation counts.
//!
//! Counting runs the production generic code with a wrapper scalar whose
//! arithmetic operators bump thread-local counters, so the reported numbers
//! are measured from the real forward path rather than tabulated by hand.
//! Counts cover the value-producing arithmetic of the non-overflow branch;
//! range-guard control flow and transcendental calls (exp/tanh/erf) are not
//! counted — divisions are reported in `reciprocals`, subtractions pool
//! with `adds`.

use std::cell::Cell;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::egem::egem_grad_from_gate;
use crate::gem::gem_grad_from_gate;
use crate::real::Real;
use crate::segem::segem_grad_from_ratio;
use crate::types::ActivationSpec;

/// Exact per-element operation counts, independent of buffer length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OpCount {
    pub multiplies: u32,
    pub adds: u32,
    pub reciprocals: u32,
    pub comparisons: u32,
}

impl OpCount {
    pub fn total(&self) -> u32 {
        self.multiplies + self.adds + self.reciprocals + self.comparisons
    }

    fn max_fields(self, other: Self) -> Self {
        Self {
            multiplies: self.multiplies.max(other.multiplies),
            adds: self.adds.max(other.adds),
            reciprocals: self.reciprocals.max(other.reciprocals),
            comparisons: self.comparisons.max(other.comparisons),
        }
    }
}

thread_local! {
    static COUNTS: Cell<OpCount> = const { Cell::new(OpCount {
        multiplies: 0,
        adds: 0,
        reciprocals: 0,
        comparisons: 0,
    }) };
}

fn bump(f: impl FnOnce(&mut OpCount)) {
    COUNTS.with(|c| {
        let mut v = c.get();
        f(&mut v);
        c.set(v);
    });
}

fn reset() {
    COUNTS.with(|c| c.set(OpCount::default()));
}

fn take() -> OpCount {
    COUNTS.with(|c| c.get())
}

/// f64 twin whose operators count themselves.
// counter bumps inside the operator bodies look arithmetic-suspicious to
// the lint but are the whole point here
#[allow(clippy::suspicious_arithmetic_impl)]
#[derive(Debug, Clone, Copy, PartialEq)]
struct Counted(f64);

impl Add for Counted {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        bump(|c| c.adds += 1);
        Counted(self.0 + rhs.0)
    }
}

impl Sub for Counted {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        bump(|c| c.adds += 1);
        Counted(self.0 - rhs.0)
    }
}

impl Mul for Counted {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        bump(|c| c.multiplies += 1);
        Counted(self.0 * rhs.0)
    }
}

impl Div for Counted {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        bump(|c| c.reciprocals += 1);
        Counted(self.0 / rhs.0)
    }
}

impl Neg for Counted {
    type Output = Self;
    fn neg(self) -> Self {
        Counted(-self.0)
    }
}

impl Real for Counted {
    const POW_BUDGET: f64 = f64::POW_BUDGET;
    const ZERO: Self = Counted(0.0);
    const ONE: Self = Counted(1.0);

    fn of(v: f64) -> Self {
        Counted(v)
    }

    fn to_f64(self) -> f64 {
        self.0
    }

    fn max_zero(self) -> Self {
        bump(|c| c.comparisons += 1);
        Counted(self.0.max(0.0))
    }

    fn gt_zero(self) -> bool {
        bump(|c| c.comparisons += 1);
        self.0 > 0.0
    }

    fn raw_abs(self) -> f64 {
        self.0.abs()
    }

    fn exp(self) -> Self {
        Counted(self.0.exp())
    }

    fn tanh(self) -> Self {
        Counted(self.0.tanh())
    }

    fn erf(self) -> Self {
        Counted(libm::erf(self.0))
    }

    fn is_finite(self) -> bool {
        self.0.is_finite()
    }
}

/// Measure the forward path at representative positive and negative probe
/// inputs and report the elementwise maximum, so piecewise variants are
/// charged for their more expensive branch.
pub fn audit_ops(spec: ActivationSpec) -> OpCount {
    let mut worst = OpCount::default();
    for probe in [1.5, -1.5] {
        reset();
        let _ = spec.value(Counted(probe));
        worst = worst.max_fields(take());
    }
    reset();
    worst
}

/// Measure the gate-cached backward (including the grad_out multiply).
/// `None` for baselines, which have no cached form.
pub fn audit_backward_ops(spec: ActivationSpec) -> Option<OpCount> {
    let n = spec.order()?;
    let run = |gate: f64, f: &dyn Fn(Counted) -> Counted| {
        reset();
        let _ = Counted(1.0) * f(Counted(gate));
        take()
    };
    let count = match spec {
        ActivationSpec::Gem(_) => run(0.5, &|g| gem_grad_from_gate(g, n)),
        ActivationSpec::EGem(..) => run(0.5, &|g| egem_grad_from_gate(g, n)),
        ActivationSpec::SEGem(..) => run(0.5, &|r| segem_grad_from_ratio(r, n)),
        _ => unreachable!(),
    };
    reset();
    Some(count)
}

/// The nominal cost claim 5 + floor(log2 N) for the rational variants.
/// The measured count exceeds it for non-power-of-two N, where repeated
/// squaring needs popcount(N) - 1 extra multiplies.
pub fn paper_flop_claim(spec: ActivationSpec) -> Option<u32> {
    spec.order().map(|n| 5 + n.get().ilog2())
}
