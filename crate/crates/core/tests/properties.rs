//! Property tests for the spec-level invariants: monotonicity, bounds,
//! asymptotics, gate behavior, cached-form equivalence, kernel/scalar
//! bit-identity, and the grammar round-trip.

use proptest::prelude::*;

use gem_core::egem::{egem_forward, egem_unclipped};
use gem_core::gem::{gem_forward, gem_gate, gem_grad, gem_grad_from_gate, gem_second, gem_second_from_gate};
use gem_core::kernels::{apply_backward, apply_backward_direct, apply_forward};
use gem_core::segem::segem_forward;
use gem_core::types::{ActivationSpec, Epsilon, SmoothnessOrder};
use gem_core::verify::ulp_diff;

fn order(n: u32) -> SmoothnessOrder {
    SmoothnessOrder::new(n).unwrap()
}

fn order_strategy() -> impl Strategy<Value = SmoothnessOrder> {
    (1u32..=9).prop_map(|n| order(n))
}

fn eps_strategy() -> impl Strategy<Value = Epsilon> {
    prop_oneof![
        Just(Epsilon::new(1e-6).unwrap()),
        Just(Epsilon::new(1e-2).unwrap()),
        Just(Epsilon::ONE),
        Just(Epsilon::new(10.0).unwrap()),
    ]
}

fn spec_strategy() -> impl Strategy<Value = ActivationSpec> {
    prop_oneof![
        Just(ActivationSpec::Relu),
        Just(ActivationSpec::Silu),
        Just(ActivationSpec::GeluExact),
        Just(ActivationSpec::GeluTanh),
        order_strategy().prop_map(ActivationSpec::Gem),
        (order_strategy(), eps_strategy()).prop_map(|(n, e)| ActivationSpec::EGem(n, e)),
        (order_strategy(), eps_strategy()).prop_map(|(n, e)| ActivationSpec::SEGem(n, e)),
    ]
}

proptest! {
    #[test]
    fn forward_is_monotone(n in order_strategy(), a in -10.0f64..10.0, b in -10.0f64..10.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(gem_forward(lo, n) <= gem_forward(hi, n));
    }

    #[test]
    fn relu_is_a_pointwise_upper_bound(n in order_strategy(), x in -50.0f64..50.0) {
        let y = gem_forward(x, n);
        prop_assert!(y >= 0.0);
        prop_assert!(y <= x.max(0.0));
    }

    #[test]
    fn asymptotic_remainder_bound(n in order_strategy(), x in 2.0f64..100.0) {
        // |f(x) - x| = x / (1 + x^{2N}) <= x^{1-2N}; the measured remainder
        // carries the cancellation error of the subtraction, a few ulp of x
        let remainder = (gem_forward(x, n) - x).abs();
        let bound = x.powi(1 - 2 * n.get() as i32);
        let slack = 4.0 * x * f64::EPSILON;
        prop_assert!(remainder <= bound + slack, "{remainder} > {bound}");
    }

    #[test]
    fn gate_monotone_in_x(n in order_strategy(), a in 0.0f64..20.0, b in 0.0f64..20.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(gem_gate(lo, n) <= gem_gate(hi, n));
    }

    #[test]
    fn gate_sharpens_with_order(n in 1u32..9, x in 0.001f64..0.999) {
        // below the unit crossover a sharper gate passes less
        prop_assert!(gem_gate(x, order(n + 1)) <= gem_gate(x, order(n)));
        // above it, more
        let y = 1.0 / x;
        prop_assert!(gem_gate(y, order(n + 1)) >= gem_gate(y, order(n)));
    }

    #[test]
    fn gate_matches_uniform_cdf_at_n1(x in 1e-6f64..1e3) {
        let v = (x * x) / (1.0 + x * x);
        let g = gem_gate(x, order(1));
        if x <= 1.0 {
            prop_assert_eq!(g.to_bits(), v.to_bits());
        } else {
            prop_assert!(ulp_diff(g, v) <= 1);
        }
    }

    #[test]
    fn cached_forms_match_scalar_paths(n in order_strategy(), log_x in -3.0f64..3.0) {
        let x = 10f64.powf(log_x);
        let g = gem_gate(x, n);
        prop_assert!(ulp_diff(gem_grad(x, n), gem_grad_from_gate(g, n)) <= 4);
        let direct = gem_second(x, n);
        let cached = gem_second_from_gate(x, g, n).unwrap();
        prop_assert!(ulp_diff(direct, cached) <= 4);
    }

    #[test]
    fn kernel_forward_is_bit_identical_to_scalar(
        spec in spec_strategy(),
        xs in prop::collection::vec(-30.0f64..30.0, 0..64),
    ) {
        let out = apply_forward(&xs, spec, false).output;
        for (&x, &y) in xs.iter().zip(&out) {
            prop_assert_eq!(y.to_bits(), spec.value(x).to_bits());
        }
    }

    #[test]
    fn cache_round_trip_within_4_ulp(
        n in order_strategy(),
        eps in eps_strategy(),
        variant in 0u8..3,
        xs in prop::collection::vec(-8.0f64..8.0, 1..64),
        gs in prop::collection::vec(-2.0f64..2.0, 1..64),
    ) {
        let spec = match variant {
            0 => ActivationSpec::Gem(n),
            1 => ActivationSpec::EGem(n, eps),
            _ => ActivationSpec::SEGem(n, eps),
        };
        let len = xs.len().min(gs.len());
        let (xs, gs) = (&xs[..len], &gs[..len]);
        let cache = apply_forward(xs, spec, true).cache.unwrap();
        let cached = apply_backward(gs, &cache, spec).unwrap();
        let direct = apply_backward_direct(gs, xs, spec).unwrap();
        for (c, d) in cached.iter().zip(&direct) {
            prop_assert!(ulp_diff(*c, *d) <= 4, "{c} vs {d}");
        }
    }

    #[test]
    fn unclipped_ratio_is_odd(
        n in order_strategy(),
        eps in eps_strategy(),
        x in -1e3f64..1e3,
    ) {
        let pos = egem_unclipped(x, n, eps);
        let neg = egem_unclipped(-x, n, eps);
        prop_assert_eq!(neg.to_bits(), (-pos).to_bits());
    }

    #[test]
    fn unit_eps_reduces_to_the_base_family(n in order_strategy(), x in -1e4f64..1e4) {
        let a = egem_forward(x, n, Epsilon::ONE);
        let b = gem_forward(x, n);
        prop_assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn spec_grammar_round_trips(spec in spec_strategy()) {
        let text = spec.to_string();
        let parsed: ActivationSpec = text.parse().unwrap();
        prop_assert_eq!(parsed, spec);
    }

    #[test]
    fn piecewise_forward_is_identity_on_the_right(
        n in order_strategy(),
        eps in eps_strategy(),
        x in 0.0f64..1e6,
    ) {
        prop_assert_eq!(segem_forward(x, n, eps).to_bits(), x.to_bits());
    }
}

#[test]
fn gate_is_exactly_half_at_unit_input_for_every_order() {
    for n in 1..=SmoothnessOrder::MAX {
        assert_eq!(gem_gate(1.0f64, order(n)), 0.5, "n = {n}");
        assert_eq!(gem_gate(1.0f32, order(n)), 0.5, "n = {n} (single)");
    }
}
