//! Central finite differences with Richardson extrapolation, plus the raw
//! binomial stencils used by the smoothness checks.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FdError {
    #[error("derivative order must be in 1..=6, got {0}")]
    BadOrder(u32),
    #[error("base step must lie in [1e-6, 1e-1], got {0}")]
    BadStep(f64),
    #[error("richardson levels must be <= 4, got {0}")]
    BadLevels(u32),
    #[error("function evaluation not finite at x = {0}")]
    NonFinite(f64),
}

/// Configuration for [`finite_diff`]. Each Richardson level halves the step,
/// raising the error model from O(h²) to O(h^{2 + 2 levels}).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteDiffConfig {
    pub order: u32,
    pub base_step: f64,
    pub richardson_levels: u32,
}

impl FiniteDiffConfig {
    pub fn new(order: u32, base_step: f64, richardson_levels: u32) -> Result<Self, FdError> {
        if !(1..=6).contains(&order) {
            return Err(FdError::BadOrder(order));
        }
        if !(1e-6..=1e-1).contains(&base_step) {
            return Err(FdError::BadStep(base_step));
        }
        if richardson_levels > 4 {
            return Err(FdError::BadLevels(richardson_levels));
        }
        Ok(Self {
            order,
            base_step,
            richardson_levels,
        })
    }
}

fn binomial(k: u32, j: u32) -> f64 {
    let mut c = 1.0f64;
    for i in 0..j {
        c = c * (k - i) as f64 / (i + 1) as f64;
    }
    c
}

/// k-th central binomial difference scaled by h^{-k}:
/// h^{-k} sum_j (-1)^j C(k,j) f(x + (k/2 - j) h).
/// O(h²) accurate on smooth functions; odd orders sample the staggered
/// half-integer grid. Supports orders beyond the config cap (the vanishing-
/// derivative checks need order 2N+1 up to 7).
pub fn central_difference<F: Fn(f64) -> f64>(
    f: F,
    x: f64,
    order: u32,
    h: f64,
) -> Result<f64, FdError> {
    let k = order;
    let mut acc = 0.0f64;
    for j in 0..=k {
        let offset = k as f64 / 2.0 - j as f64;
        let v = f(x + offset * h);
        if !v.is_finite() {
            return Err(FdError::NonFinite(x + offset * h));
        }
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * binomial(k, j) * v;
    }
    Ok(acc / h.powi(k as i32))
}

/// One-sided k-th difference from `x` into the chosen half-line, O(h):
/// forward uses f(x), f(x+h), ..., f(x+kh); backward mirrors it.
pub fn one_sided_difference<F: Fn(f64) -> f64>(
    f: F,
    x: f64,
    order: u32,
    h: f64,
    from_right: bool,
) -> Result<f64, FdError> {
    let k = order;
    let mut acc = 0.0f64;
    for j in 0..=k {
        let xi = if from_right {
            x + j as f64 * h
        } else {
            x - j as f64 * h
        };
        let v = f(xi);
        if !v.is_finite() {
            return Err(FdError::NonFinite(xi));
        }
        // forward difference: (-1)^{k-j} C(k,j); backward: (-1)^j C(k,j)
        let sign = if from_right {
            if (k - j) % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        } else if j % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        acc += sign * binomial(k, j) * v;
    }
    Ok(acc / h.powi(k as i32))
}

/// Central-difference estimate of f^(order)(x) with Richardson extrapolation
/// over step halvings.
pub fn finite_diff<F: Fn(f64) -> f64>(f: F, x: f64, cfg: &FiniteDiffConfig) -> Result<f64, FdError> {
    let levels = cfg.richardson_levels as usize;
    let mut table = vec![0.0f64; levels + 1];
    for (i, slot) in table.iter_mut().enumerate() {
        let h = cfg.base_step / (1u32 << i) as f64;
        *slot = central_difference(&f, x, cfg.order, h)?;
    }
    // Richardson: error expands in even powers of h
    let mut column = table;
    for m in 1..=levels {
        let factor = 4.0f64.powi(m as i32);
        for i in (m..=levels).rev() {
            column[i] = (factor * column[i] - column[i - 1]) / (factor - 1.0);
        }
    }
    Ok(column[levels])
}

/// Five-point first-derivative stencil, O(h^4):
/// (-f(x+2h) + 8 f(x+h) - 8 f(x-h) + f(x-2h)) / (12 h).
pub fn derivative_5point<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

/// One Richardson step on the five-point stencil, O(h^6). The derivative
/// oracle used across the check suites.
pub fn derivative_richardson<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    let coarse = derivative_5point(&f, x, h);
    let fine = derivative_5point(&f, x, h / 2.0);
    (16.0 * fine - coarse) / 15.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(FiniteDiffConfig::new(0, 1e-3, 1).is_err());
        assert!(FiniteDiffConfig::new(7, 1e-3, 1).is_err());
        assert!(FiniteDiffConfig::new(2, 1e-7, 1).is_err());
        assert!(FiniteDiffConfig::new(2, 1e-3, 5).is_err());
        assert!(FiniteDiffConfig::new(6, 1e-2, 4).is_ok());
    }

    #[test]
    fn exact_on_low_degree_polynomials() {
        // central differences are exact on polynomials up to the stencil order
        let square = |x: f64| x * x;
        let cfg = FiniteDiffConfig::new(1, 1e-2, 0).unwrap();
        let d = finite_diff(square, 1.0, &cfg).unwrap();
        assert!((d - 2.0).abs() < 1e-10, "got {d}");

        let cubic = |x: f64| x * x * x - 2.0 * x;
        let d2 = finite_diff(cubic, 0.5, &FiniteDiffConfig::new(2, 1e-2, 1).unwrap()).unwrap();
        assert!((d2 - 3.0).abs() < 1e-8, "got {d2}");
        let d3 = finite_diff(cubic, -1.0, &FiniteDiffConfig::new(3, 1e-2, 0).unwrap()).unwrap();
        assert!((d3 - 6.0).abs() < 1e-7, "got {d3}");
    }

    #[test]
    fn richardson_sharpens_transcendental_estimates() {
        let f = |x: f64| x.sin();
        let plain = finite_diff(f, 1.0, &FiniteDiffConfig::new(1, 1e-1, 0).unwrap()).unwrap();
        let extrapolated =
            finite_diff(f, 1.0, &FiniteDiffConfig::new(1, 1e-1, 3).unwrap()).unwrap();
        let truth = 1.0f64.cos();
        assert!((extrapolated - truth).abs() < (plain - truth).abs() / 100.0);
        assert!((extrapolated - truth).abs() < 1e-12);
    }

    #[test]
    fn five_point_oracle_accuracy() {
        let d = derivative_richardson(|x: f64| x.exp(), 0.3, 1e-2);
        assert!((d - 0.3f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn one_sided_estimates_split_a_kink() {
        let f = |x: f64| x.abs();
        let right = one_sided_difference(f, 0.0, 1, 1e-4, true).unwrap();
        let left = one_sided_difference(f, 0.0, 1, 1e-4, false).unwrap();
        assert!((right - 1.0).abs() < 1e-10);
        assert!((left - (-1.0)).abs() < 1e-10);
    }

    #[test]
    fn non_finite_evaluations_error() {
        let f = |x: f64| 1.0 / x;
        assert!(matches!(
            central_difference(f, 0.0, 2, 1e-2),
            Err(FdError::NonFinite(_))
        ));
    }
}
