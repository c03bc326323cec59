//! Exact-arithmetic oracle: evaluate the rational forms over BigRational at
//! rational probe points and compare the floating-point implementations
//! against values that carry no rounding error at all.

use num_rational::BigRational;

use gem_core::egem::{egem_forward, egem_grad};
use gem_core::gem::{gem_forward, gem_gate, gem_grad, gem_second};
use gem_core::segem::{segem_forward, segem_grad};
use gem_core::types::{Epsilon, SmoothnessOrder};

fn rat(num: i64, den: i64) -> BigRational {
    BigRational::new(num.into(), den.into())
}

fn to_f64(r: &BigRational) -> f64 {
    // exact conversion is unnecessary; the probe values stay well inside
    // the double range, so numerator/denominator doubles are faithful
    let num: f64 = r.numer().to_string().parse().unwrap();
    let den: f64 = r.denom().to_string().parse().unwrap();
    num / den
}

fn pow(x: &BigRational, k: u32) -> BigRational {
    let mut acc = BigRational::from_integer(1.into());
    for _ in 0..k {
        acc *= x;
    }
    acc
}

struct ExactFamily {
    n: u32,
    eps: BigRational,
}

impl ExactFamily {
    fn t(&self, x: &BigRational) -> BigRational {
        pow(x, 2 * self.n)
    }

    /// x^{2N+1} / (eps + x^{2N}) clamped at zero.
    fn forward(&self, x: &BigRational) -> BigRational {
        let zero = BigRational::from_integer(0.into());
        if x <= &zero {
            return zero;
        }
        x * self.t(x) / (&self.eps + self.t(x))
    }

    /// x^{2N} (x^{2N} + (2N+1) eps) / (eps + x^{2N})^2 for x > 0.
    fn grad(&self, x: &BigRational) -> BigRational {
        let zero = BigRational::from_integer(0.into());
        if x <= &zero {
            return zero;
        }
        let t = self.t(x);
        let c = BigRational::from_integer((2 * self.n as i64 + 1).into());
        let den = &self.eps + &t;
        &t * (&t + c * &self.eps) / (&den * &den)
    }

    /// 2N x^{2N-1} ((2N+1) eps - (2N-1) x^{2N}) / (eps + x^{2N})^3, x > 0.
    fn second(&self, x: &BigRational) -> BigRational {
        let zero = BigRational::from_integer(0.into());
        if x <= &zero {
            return zero;
        }
        let t = self.t(x);
        let two_n = BigRational::from_integer((2 * self.n as i64).into());
        let c = BigRational::from_integer((2 * self.n as i64 + 1).into());
        let d = BigRational::from_integer((2 * self.n as i64 - 1).into());
        let den = &self.eps + &t;
        two_n * pow(x, 2 * self.n - 1) * (c * &self.eps - d * &t) / (&den * &den * &den)
    }

    /// Piecewise: x for x >= 0, eps x / (eps + x^{2N}) for x < 0.
    fn piecewise_forward(&self, x: &BigRational) -> BigRational {
        let zero = BigRational::from_integer(0.into());
        if x >= &zero {
            return x.clone();
        }
        &self.eps * x / (&self.eps + self.t(x))
    }

    /// 1 for x >= 0, eps (eps + (1-2N) x^{2N}) / (eps + x^{2N})^2 for x < 0.
    fn piecewise_grad(&self, x: &BigRational) -> BigRational {
        let zero = BigRational::from_integer(0.into());
        if x >= &zero {
            return BigRational::from_integer(1.into());
        }
        let t = self.t(x);
        let k = BigRational::from_integer((1 - 2 * self.n as i64).into());
        let den = &self.eps + &t;
        &self.eps * (&self.eps + k * &t) / (&den * &den)
    }
}

fn assert_close(got: f64, exact: &BigRational, what: &str) {
    assert_close_rel(got, exact, 1e-14, what);
}

fn assert_close_rel(got: f64, exact: &BigRational, rel: f64, what: &str) {
    let want = to_f64(exact);
    let tol = rel * want.abs().max(1e-300);
    assert!(
        (got - want).abs() <= tol,
        "{what}: got {got}, exact {want}"
    );
}

/// The second derivative carries the gate's (1-g) factor, whose relative
/// error grows like x^{2N} * eps_machine as the gate saturates.
fn second_tol(x: f64, n: u32) -> f64 {
    let t = x.max(0.0).powi(2 * n as i32);
    1e-14 + 2.0 * f64::EPSILON * t.min(1e14)
}

fn probe_points() -> Vec<BigRational> {
    vec![
        rat(-3, 1),
        rat(-5, 2),
        rat(-1, 1),
        rat(-1, 8),
        rat(0, 1),
        rat(1, 8),
        rat(1, 2),
        rat(1, 1),
        rat(3, 2),
        rat(2, 1),
        rat(7, 2),
        rat(5, 1),
    ]
}

#[test]
fn base_family_matches_exact_rationals() {
    for n in [1u32, 2, 3, 5, 9] {
        let order = SmoothnessOrder::new(n).unwrap();
        let exact = ExactFamily {
            n,
            eps: rat(1, 1),
        };
        for x in probe_points() {
            let xf = to_f64(&x);
            assert_close(gem_forward(xf, order), &exact.forward(&x), "forward");
            assert_close(gem_grad(xf, order), &exact.grad(&x), "grad");
            assert_close_rel(
                gem_second(xf, order),
                &exact.second(&x),
                second_tol(xf, n),
                "second",
            );
            if xf > 0.0 {
                let gate = &exact.forward(&x) / &x;
                assert_close(gem_gate(xf, order), &gate, "gate");
            }
        }
    }
}

#[test]
fn eps_family_matches_exact_rationals() {
    for n in [1u32, 2, 3] {
        let order = SmoothnessOrder::new(n).unwrap();
        for (num, den) in [(1i64, 100i64), (1, 1), (10, 1)] {
            let eps = Epsilon::new(num as f64 / den as f64).unwrap();
            let exact = ExactFamily {
                n,
                eps: rat(num, den),
            };
            for x in probe_points() {
                let xf = to_f64(&x);
                assert_close(egem_forward(xf, order, eps), &exact.forward(&x), "e-forward");
                assert_close(egem_grad(xf, order, eps), &exact.grad(&x), "e-grad");
                assert_close(
                    segem_forward(xf, order, eps),
                    &exact.piecewise_forward(&x),
                    "piecewise forward",
                );
                assert_close(
                    segem_grad(xf, order, eps),
                    &exact.piecewise_grad(&x),
                    "piecewise grad",
                );
            }
        }
    }
}

#[test]
fn exact_oracle_reproduces_frozen_examples() {
    // the frozen unit-test values, recomputed in exact arithmetic
    let gem1 = ExactFamily { n: 1, eps: rat(1, 1) };
    assert_eq!(to_f64(&gem1.forward(&rat(2, 1))), 1.6);
    assert_eq!(to_f64(&gem1.grad(&rat(1, 1))), 1.0);
    assert_eq!(to_f64(&gem1.second(&rat(2, 1))), -0.032);
    let gem2 = ExactFamily { n: 2, eps: rat(1, 1) };
    assert_eq!(to_f64(&gem2.grad(&rat(1, 1))), 1.5);
}
