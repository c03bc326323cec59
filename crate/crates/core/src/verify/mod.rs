//! Independent numerical oracles: finite differences, adaptive quadrature,
//! golden-section extremum search, and the named check suites that validate
//! every closed-form claim. Oracles never call the closed forms they check.

mod fd;
mod golden;
mod quad;
mod suites;

pub use fd::{
    central_difference, derivative_5point, derivative_richardson, finite_diff,
    one_sided_difference, FdError, FiniteDiffConfig,
};
pub use golden::{maximize_unimodal, maximize_unimodal_log, minimize_unimodal};
pub use quad::{lp_distance_quadrature, QuadratureResult};
pub use suites::{run_suite, verified_specs, CheckRow, Suite};

fn monotone_bits(x: f64) -> u64 {
    let b = x.to_bits();
    if b & 0x8000_0000_0000_0000 != 0 {
        // two's-complement negation so -0 and +0 share one key
        (!b).wrapping_add(1)
    } else {
        b | 0x8000_0000_0000_0000
    }
}

/// Distance in units-in-last-place between two doubles, using the monotone
/// bit mapping so the measure is well-defined across zero. Equal values
/// (including -0 vs +0) are 0 ulp apart; any NaN is infinitely far.
pub fn ulp_diff(a: f64, b: f64) -> u64 {
    if a == b {
        return 0;
    }
    if a.is_nan() || b.is_nan() {
        return u64::MAX;
    }
    monotone_bits(a).abs_diff(monotone_bits(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ulp_distance_basics() {
        assert_eq!(ulp_diff(1.0, 1.0), 0);
        assert_eq!(ulp_diff(0.0, -0.0), 0);
        assert_eq!(ulp_diff(1.0, 1.0 + f64::EPSILON), 1);
        assert_eq!(ulp_diff(1.5, f64::from_bits(1.5f64.to_bits() + 3)), 3);
        assert_eq!(ulp_diff(f64::MIN_POSITIVE, -f64::MIN_POSITIVE), 2 * (1u64 << 52));
        assert_eq!(ulp_diff(f64::NAN, 1.0), u64::MAX);
        // straddling zero stays consistent with subnormal spacing
        assert_eq!(ulp_diff(0.0, f64::from_bits(1)), 1);
        assert_eq!(ulp_diff(-f64::from_bits(1), f64::from_bits(1)), 2);
    }
}
