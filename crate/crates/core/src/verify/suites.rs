//! Named oracle suites. Each check produces one machine-readable row;
//! the CLI serializes rows as CSV and fails the run on any failing row.

use std::fmt;
use std::str::FromStr;

use super::fd::{central_difference, derivative_richardson, finite_diff, one_sided_difference};
use super::golden::{maximize_unimodal_log, minimize_unimodal};
use super::quad::lp_distance_quadrature;
use super::ulp_diff;
use crate::distance::lp_distance_closed;
use crate::egem::{egem_forward, egem_grad};
use crate::gem::{gem_forward, gem_gate, gem_grad, gem_grad_from_gate, gem_second, gem_second_from_gate, lipschitz};
use crate::segem::{segem_forward, segem_grad, segem_trough};
use crate::types::{ActivationSpec, Epsilon, SmoothnessOrder};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Core,
    Distances,
    Smoothness,
    All,
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "core" => Ok(Suite::Core),
            "distances" => Ok(Suite::Distances),
            "smoothness" => Ok(Suite::Smoothness),
            "all" => Ok(Suite::All),
            other => Err(format!(
                "unknown suite `{other}` (core | distances | smoothness | all)"
            )),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Suite::Core => write!(f, "core"),
            Suite::Distances => write!(f, "distances"),
            Suite::Smoothness => write!(f, "smoothness"),
            Suite::All => write!(f, "all"),
        }
    }
}

/// One verification check: id, inputs, expected vs got, errors, verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub check_id: String,
    pub inputs: String,
    pub expected: String,
    pub got: String,
    pub abs_err: f64,
    pub rel_err: f64,
    pub pass: bool,
}

impl CheckRow {
    pub fn csv_header() -> &'static str {
        "check_id,inputs,expected,got,abs_err,rel_err,pass"
    }

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            field(&self.check_id),
            field(&self.inputs),
            field(&self.expected),
            field(&self.got),
            self.abs_err,
            self.rel_err,
            if self.pass { "pass" } else { "fail" }
        )
    }

    /// Numeric check: |expected - got| <= tol_abs + tol_rel * |expected|.
    fn numeric(
        id: impl Into<String>,
        inputs: impl Into<String>,
        expected: f64,
        got: f64,
        tol_abs: f64,
        tol_rel: f64,
    ) -> Self {
        let abs_err = (expected - got).abs();
        let rel_err = abs_err / expected.abs().max(f64::MIN_POSITIVE);
        CheckRow {
            check_id: id.into(),
            inputs: inputs.into(),
            expected: expected.to_string(),
            got: got.to_string(),
            abs_err,
            rel_err,
            pass: abs_err <= tol_abs + tol_rel * expected.abs(),
        }
    }

    fn boolean(
        id: impl Into<String>,
        inputs: impl Into<String>,
        expected: impl Into<String>,
        got: impl Into<String>,
        pass: bool,
    ) -> Self {
        CheckRow {
            check_id: id.into(),
            inputs: inputs.into(),
            expected: expected.into(),
            got: got.into(),
            abs_err: if pass { 0.0 } else { 1.0 },
            rel_err: if pass { 0.0 } else { 1.0 },
            pass,
        }
    }
}

fn field(s: &str) -> String {
    if s.contains(',') || s.contains('"') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn run_suite(suite: Suite) -> Vec<CheckRow> {
    match suite {
        Suite::Core => core_checks(),
        Suite::Distances => distance_checks(),
        Suite::Smoothness => smoothness_checks(),
        Suite::All => {
            let mut rows = core_checks();
            rows.extend(distance_checks());
            rows.extend(smoothness_checks());
            rows
        }
    }
}

fn order(n: u32) -> SmoothnessOrder {
    SmoothnessOrder::new(n).unwrap()
}

fn eps(v: f64) -> Epsilon {
    Epsilon::new(v).unwrap()
}

const DERIV_GRID_X: [f64; 10] = [
    0.01,
    -0.01,
    0.1,
    -0.1,
    1.0,
    -1.0,
    1.7320508075688772,
    -1.7320508075688772,
    5.0,
    -5.0,
];
const DERIV_GRID_N: [u32; 5] = [1, 2, 3, 5, 9];
const DERIV_GRID_EPS: [f64; 3] = [0.01, 1.0, 10.0];

/// Step that keeps the widest stencil (spanning 4h after one Richardson
/// halving... conservatively 4h) on one side of the origin kink.
fn fd_step(x: f64) -> f64 {
    let h = 5e-3 * (1.0 + x.abs());
    if x != 0.0 {
        h.min(x.abs() / 4.0)
    } else {
        h
    }
}

/// First-derivative oracle check at one point: 5-point stencil with one
/// Richardson step against the analytic value, normalized tolerance
/// |diff| <= tol * max(1, |oracle|).
fn grad_check<F: Fn(f64) -> f64, G: Fn(f64) -> f64>(
    id: String,
    inputs: String,
    forward: F,
    analytic: G,
    x: f64,
) -> CheckRow {
    let fd = derivative_richardson(&forward, x, fd_step(x));
    let got = analytic(x);
    let tol = 1e-6 * fd.abs().max(1.0);
    CheckRow::numeric(id, inputs, fd, got, tol, 0.0)
}

fn core_checks() -> Vec<CheckRow> {
    let mut rows = Vec::new();

    // gradient bound: closed form vs golden-section maximization in log-x
    for n in 1..=9u32 {
        let nn = order(n);
        let closed = lipschitz(nn);
        let (argmax, max) = maximize_unimodal_log(|x| gem_grad(x, nn), 1e-3, 1e3, 200);
        rows.push(CheckRow::numeric(
            format!("lipschitz_value_n{n}"),
            format!("n={n}"),
            closed.constant,
            max,
            1e-9,
            0.0,
        ));
        // the peak is flat to ~sqrt(ulp), so the abscissa resolves coarser
        rows.push(CheckRow::numeric(
            format!("lipschitz_argmax_n{n}"),
            format!("n={n}"),
            closed.argmax,
            argmax,
            1e-6,
            0.0,
        ));
    }
    let l1 = lipschitz(order(1));
    rows.push(CheckRow::boolean(
        "lipschitz_n1_exact",
        "n=1",
        "(1.125, sqrt(3))",
        format!("({}, {})", l1.constant, l1.argmax),
        l1.constant == 1.125 && l1.argmax == 3.0f64.sqrt(),
    ));

    // derivative oracle grid
    for n in DERIV_GRID_N {
        let nn = order(n);
        for x in DERIV_GRID_X {
            rows.push(grad_check(
                format!("fd_gem_grad_n{n}"),
                format!("x={x}"),
                |x| gem_forward(x, nn),
                |x| gem_grad(x, nn),
                x,
            ));
            // second derivative against an order-2 central difference of the
            // forward (never through the first-derivative code)
            let cfg =
                super::fd::FiniteDiffConfig::new(2, fd_step(x).max(1e-3), 2).expect("valid cfg");
            let fd2 = finite_diff(|x| gem_forward(x, nn), x, &cfg).expect("finite forward");
            let got2 = gem_second(x, nn);
            rows.push(CheckRow::numeric(
                format!("fd_gem_second_n{n}"),
                format!("x={x}"),
                fd2,
                got2,
                1e-6 * fd2.abs().max(1.0),
                0.0,
            ));
            for e in DERIV_GRID_EPS {
                rows.push(grad_check(
                    format!("fd_egem_grad_n{n}_eps{e}"),
                    format!("x={x}"),
                    |x| egem_forward(x, nn, eps(e)),
                    |x| egem_grad(x, nn, eps(e)),
                    x,
                ));
                rows.push(grad_check(
                    format!("fd_segem_grad_n{n}_eps{e}"),
                    format!("x={x}"),
                    |x| segem_forward(x, nn, eps(e)),
                    |x| segem_grad(x, nn, eps(e)),
                    x,
                ));
            }
        }
    }

    // gate-cached derivative forms against the scalar paths
    for n in DERIV_GRID_N {
        let nn = order(n);
        let mut worst_grad = 0u64;
        let mut worst_second = 0u64;
        for i in 0..=600 {
            let x = 1e-3 * 10f64.powf(i as f64 / 100.0); // log grid over [1e-3, 1e3]
            let g = gem_gate(x, nn);
            worst_grad = worst_grad.max(ulp_diff(gem_grad(x, nn), gem_grad_from_gate(g, nn)));
            worst_second = worst_second.max(ulp_diff(
                gem_second(x, nn),
                gem_second_from_gate(x, g, nn).expect("x > 0"),
            ));
        }
        rows.push(CheckRow::boolean(
            format!("cached_grad_ulp_n{n}"),
            "x in [1e-3, 1e3]",
            "<= 4 ulp",
            format!("{worst_grad} ulp"),
            worst_grad <= 4,
        ));
        rows.push(CheckRow::boolean(
            format!("cached_second_ulp_n{n}"),
            "x in [1e-3, 1e3]",
            "<= 4 ulp",
            format!("{worst_second} ulp"),
            worst_second <= 4,
        ));
    }

    // trough: closed form vs golden-section minimization
    for n in [1u32, 2, 3] {
        let nn = order(n);
        for e in DERIV_GRID_EPS {
            let (argmin, depth) = segem_trough(nn, eps(e));
            let lo = -10.0 * e.max(1.0);
            let (num_argmin, num_depth) =
                minimize_unimodal(|x| segem_forward(x, nn, eps(e)), lo, 0.0, 200);
            rows.push(CheckRow::numeric(
                format!("trough_depth_n{n}_eps{e}"),
                format!("bracket=[{lo},0]"),
                num_depth,
                depth,
                1e-9,
                0.0,
            ));
            rows.push(CheckRow::numeric(
                format!("trough_argmin_n{n}_eps{e}"),
                format!("bracket=[{lo},0]"),
                num_argmin,
                argmin,
                1e-6,
                0.0,
            ));
        }
    }

    rows
}

fn distance_checks() -> Vec<CheckRow> {
    let mut rows = Vec::new();

    for p in [2u32, 3] {
        for n in [1u32, 2, 3] {
            let nn = order(n);
            for e in [1e-4, 1e-2, 1.0] {
                let closed = lp_distance_closed(p, nn, eps(e)).expect("convergent grid point");
                let quad = lp_distance_quadrature(p, nn, eps(e), 1e-9)
                    .expect("convergent grid point");
                let mut row = CheckRow::numeric(
                    format!("lp_closed_vs_quad_p{p}_n{n}_eps{e}"),
                    format!("tol=1e-9 converged={}", quad.converged),
                    quad.value,
                    closed,
                    0.0,
                    1e-4,
                );
                row.pass &= quad.converged;
                rows.push(row);
            }
            // closed form strictly decreasing as eps shrinks
            let seq: Vec<f64> = [1.0, 1e-2, 1e-4, 1e-6]
                .iter()
                .map(|&e| lp_distance_closed(p, nn, eps(e)).expect("convergent"))
                .collect();
            let monotone = seq.windows(2).all(|w| w[1] < w[0]);
            rows.push(CheckRow::boolean(
                format!("lp_monotone_in_eps_p{p}_n{n}"),
                "eps in {1,1e-2,1e-4,1e-6}",
                "strictly decreasing",
                format!("{seq:?}"),
                monotone,
            ));
        }
    }

    // the pole: both routes must reject p=1, N=1
    let closed_err = lp_distance_closed(1, order(1), eps(1.0)).is_err();
    let quad_err = lp_distance_quadrature(1, order(1), eps(1.0), 1e-8).is_err();
    rows.push(CheckRow::boolean(
        "lp_divergence_p1_n1",
        "p=1,n=1",
        "divergence error on both paths",
        format!("closed_err={closed_err}, quad_err={quad_err}"),
        closed_err && quad_err,
    ));

    rows
}

fn smoothness_checks() -> Vec<CheckRow> {
    let mut rows = Vec::new();

    // vanishing derivatives at the origin: the k-th central difference of
    // the forward is bounded by B(k, N) h^{2N+1-k} because |f(x)| <= |x|^{2N+1},
    // so orders 1..2N scale to zero under refinement while order 2N+1
    // converges to the half-sided constant (2N+1)!/2.
    for n in [1u32, 2, 3] {
        let nn = order(n);
        let two_n = 2 * n;
        let h_min: f64 = 0.5 / 16.0;
        for k in 1..=two_n {
            let bound = stencil_bound(k, two_n + 1) * h_min.powi((two_n + 1 - k) as i32);
            let d = central_difference(|x| gem_forward(x, nn), 0.0, k, h_min)
                .expect("finite forward");
            rows.push(CheckRow::boolean(
                format!("vanishing_order{k}_n{n}"),
                format!("h={h_min}"),
                format!("|D| <= {bound:.3e}"),
                format!("{:.3e}", d.abs()),
                d.abs() <= bound * (1.0 + 1e-9) + 1e-12,
            ));
        }
        let k = two_n + 1;
        let expected = factorial(k) / 2.0;
        let d_coarse = central_difference(|x| gem_forward(x, nn), 0.0, k, 2.0 * h_min)
            .expect("finite forward");
        let d = central_difference(|x| gem_forward(x, nn), 0.0, k, h_min).expect("finite forward");
        let mut row = CheckRow::numeric(
            format!("nonvanishing_order{k}_n{n}"),
            format!("h={h_min}"),
            expected,
            d,
            0.0,
            0.05,
        );
        // refinement must move the estimate toward the constant
        row.pass &= (d - expected).abs() <= (d_coarse - expected).abs() + 1e-9;
        rows.push(row);
    }

    // junction smoothness: one-sided estimates of orders 1..2N agree across
    // zero within the one-sided O(h) error model scaled by the first
    // non-matching derivative (2N+1)!/eps; order 2N+1 splits by about that
    // full magnitude.
    for n in [1u32, 2] {
        let nn = order(n);
        for e in [1.0, 0.01f64] {
            let two_n = 2 * n;
            let scale = factorial(two_n + 1) / e;
            for k in 1..=two_n {
                let mut pass = true;
                let mut detail = String::new();
                for h in [0.02, 0.01] {
                    let right =
                        one_sided_difference(|x| segem_forward(x, nn, eps(e)), 0.0, k, h, true)
                            .expect("finite");
                    let left =
                        one_sided_difference(|x| segem_forward(x, nn, eps(e)), 0.0, k, h, false)
                            .expect("finite");
                    let tol = 1.5 * k as f64 * scale * h.powi((two_n + 1 - k) as i32) + 1e-8;
                    pass &= (right - left).abs() <= tol;
                    detail = format!("|d+ - d-|={:.3e} tol={:.3e}", (right - left).abs(), tol);
                }
                rows.push(CheckRow::boolean(
                    format!("junction_match_order{k}_n{n}_eps{e}"),
                    "h in {0.02, 0.01}",
                    "one-sided estimates agree within the step error model",
                    detail,
                    pass,
                ));
            }
            let k = two_n + 1;
            let h = 0.01;
            let right = one_sided_difference(|x| segem_forward(x, nn, eps(e)), 0.0, k, h, true)
                .expect("finite");
            let left = one_sided_difference(|x| segem_forward(x, nn, eps(e)), 0.0, k, h, false)
                .expect("finite");
            rows.push(CheckRow::boolean(
                format!("junction_break_order{k}_n{n}_eps{e}"),
                format!("h={h}"),
                format!("|d+ - d-| >= {:.3e}", 0.5 * scale),
                format!("{:.3e}", (right - left).abs()),
                (right - left).abs() >= 0.5 * scale,
            ));
        }
    }

    rows
}

fn factorial(k: u32) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * i as f64)
}

/// sum_j C(k,j) |k/2 - j|^pow — the constant in the vanishing-derivative
/// envelope |D_k(h)| <= B h^{pow - k}.
fn stencil_bound(k: u32, pow: u32) -> f64 {
    let mut b = 0.0;
    let mut c = 1.0f64;
    for j in 0..=k {
        if j > 0 {
            c = c * (k - j + 1) as f64 / j as f64;
        }
        b += c * (k as f64 / 2.0 - j as f64).abs().powi(pow as i32);
    }
    b
}

/// Convenience: the activation grid exercised by the CLI verify command.
pub fn verified_specs() -> Vec<ActivationSpec> {
    let mut specs = vec![
        ActivationSpec::Relu,
        ActivationSpec::Silu,
        ActivationSpec::GeluExact,
        ActivationSpec::GeluTanh,
    ];
    for n in DERIV_GRID_N {
        specs.push(ActivationSpec::Gem(order(n)));
        for e in DERIV_GRID_EPS {
            specs.push(ActivationSpec::EGem(order(n), eps(e)));
            specs.push(ActivationSpec::SEGem(order(n), eps(e)));
        }
    }
    specs
}
