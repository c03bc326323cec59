//! Domain types shared by every module: the smoothness order N, the ε scale,
//! and the activation selector with its textual grammar.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::real::Real;
use crate::{baseline, egem, gem, segem};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecError {
    #[error("smoothness order must satisfy 1 <= n <= 64, got {0}")]
    InvalidOrder(u64),
    #[error("epsilon must be positive and finite, got {0}")]
    InvalidEpsilon(f64),
    #[error("epsilon {0} is below the single-precision floor {floor}", floor = Epsilon::F32_FLOOR)]
    EpsilonBelowF32Floor(f64),
    #[error(
        "cannot parse activation spec `{0}`; expected relu | silu | gelu | gelu_tanh | \
         gem:n=<int> | egem:n=<int>,eps=<float> | segem:n=<int>,eps=<float>"
    )]
    Parse(String),
}

/// The family order N. Powers are natural (N >= 1) and capped at 64 so the
/// x^{2N} exponent arithmetic stays inside the double exponent range for
/// |x| up to 1e4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SmoothnessOrder(u32);

impl SmoothnessOrder {
    pub const MAX: u32 = 64;

    pub fn new(n: u32) -> Result<Self, SpecError> {
        if (1..=Self::MAX).contains(&n) {
            Ok(Self(n))
        } else {
            Err(SpecError::InvalidOrder(n as u64))
        }
    }

    #[inline(always)]
    pub fn get(self) -> u32 {
        self.0
    }

    /// 2N as f64, the even power actually raised to.
    #[inline(always)]
    pub fn two_n(self) -> f64 {
        2.0 * self.0 as f64
    }
}

impl fmt::Display for SmoothnessOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Floating-point compute width. Verification oracles always run in double.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    Single,
    Double,
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Precision::Single => write!(f, "single"),
            Precision::Double => write!(f, "double"),
        }
    }
}

impl FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "single" | "f32" => Ok(Precision::Single),
            "double" | "f64" => Ok(Precision::Double),
            other => Err(format!("unknown precision `{other}` (single|double)")),
        }
    }
}

/// The ε denominator offset. Strictly positive; in single precision values
/// below 1e-7 collapse to zero and are rejected up front.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Epsilon(f64);

impl Epsilon {
    pub const F32_FLOOR: f64 = 1e-7;
    pub const ONE: Epsilon = Epsilon(1.0);

    pub fn new(value: f64) -> Result<Self, SpecError> {
        if value > 0.0 && value.is_finite() {
            Ok(Self(value))
        } else {
            Err(SpecError::InvalidEpsilon(value))
        }
    }

    /// Like [`Epsilon::new`] but also enforces the single-precision floor.
    pub fn checked_for(value: f64, precision: Precision) -> Result<Self, SpecError> {
        let eps = Self::new(value)?;
        match precision {
            Precision::Single if value < Self::F32_FLOOR => {
                Err(SpecError::EpsilonBelowF32Floor(value))
            }
            _ => Ok(eps),
        }
    }

    #[inline(always)]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl fmt::Display for Epsilon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Selects one activation together with its parameters.
///
/// Grammar (defaults n=1, eps=1 when omitted):
/// `relu | silu | gelu | gelu_tanh | gem:n=<int> | egem:n=<int>,eps=<float> |
/// segem:n=<int>,eps=<float>`
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActivationSpec {
    Relu,
    Silu,
    GeluExact,
    GeluTanh,
    Gem(SmoothnessOrder),
    EGem(SmoothnessOrder, Epsilon),
    SEGem(SmoothnessOrder, Epsilon),
}

impl ActivationSpec {
    pub fn is_gem_family(&self) -> bool {
        matches!(
            self,
            ActivationSpec::Gem(_) | ActivationSpec::EGem(..) | ActivationSpec::SEGem(..)
        )
    }

    pub fn order(&self) -> Option<SmoothnessOrder> {
        match self {
            ActivationSpec::Gem(n) | ActivationSpec::EGem(n, _) | ActivationSpec::SEGem(n, _) => {
                Some(*n)
            }
            _ => None,
        }
    }

    /// Enforce precision-dependent parameter invariants (the ε floor).
    pub fn validate_for(&self, precision: Precision) -> Result<(), SpecError> {
        match self {
            ActivationSpec::EGem(_, eps) | ActivationSpec::SEGem(_, eps) => {
                Epsilon::checked_for(eps.get(), precision).map(|_| ())
            }
            _ => Ok(()),
        }
    }

    /// The forward value.
    #[inline]
    pub fn value<T: Real>(&self, x: T) -> T {
        match self {
            ActivationSpec::Relu => baseline::relu(x),
            ActivationSpec::Silu => baseline::silu(x),
            ActivationSpec::GeluExact => baseline::gelu_exact(x),
            ActivationSpec::GeluTanh => baseline::gelu_tanh(x),
            ActivationSpec::Gem(n) => gem::gem_forward(x, *n),
            ActivationSpec::EGem(n, eps) => egem::egem_forward(x, *n, *eps),
            ActivationSpec::SEGem(n, eps) => segem::segem_forward(x, *n, *eps),
        }
    }

    /// The analytic first derivative.
    #[inline]
    pub fn grad<T: Real>(&self, x: T) -> T {
        match self {
            ActivationSpec::Relu => baseline::relu_grad(x),
            ActivationSpec::Silu => baseline::silu_grad(x),
            ActivationSpec::GeluExact => baseline::gelu_exact_grad(x),
            ActivationSpec::GeluTanh => baseline::gelu_tanh_grad(x),
            ActivationSpec::Gem(n) => gem::gem_grad(x, *n),
            ActivationSpec::EGem(n, eps) => egem::egem_grad(x, *n, *eps),
            ActivationSpec::SEGem(n, eps) => segem::segem_grad(x, *n, *eps),
        }
    }
}

impl fmt::Display for ActivationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActivationSpec::Relu => write!(f, "relu"),
            ActivationSpec::Silu => write!(f, "silu"),
            ActivationSpec::GeluExact => write!(f, "gelu"),
            ActivationSpec::GeluTanh => write!(f, "gelu_tanh"),
            ActivationSpec::Gem(n) => write!(f, "gem:n={n}"),
            ActivationSpec::EGem(n, eps) => write!(f, "egem:n={n},eps={eps}"),
            ActivationSpec::SEGem(n, eps) => write!(f, "segem:n={n},eps={eps}"),
        }
    }
}

impl FromStr for ActivationSpec {
    type Err = SpecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SpecError::Parse(s.to_string());
        let (head, params) = match s.split_once(':') {
            Some((h, p)) => (h, Some(p)),
            None => (s, None),
        };
        match head {
            "relu" | "silu" | "gelu" | "gelu_tanh" => {
                if params.is_some() {
                    return Err(bad());
                }
                Ok(match head {
                    "relu" => ActivationSpec::Relu,
                    "silu" => ActivationSpec::Silu,
                    "gelu" => ActivationSpec::GeluExact,
                    _ => ActivationSpec::GeluTanh,
                })
            }
            "gem" | "egem" | "segem" => {
                let mut n: u32 = 1;
                let mut eps: f64 = 1.0;
                if let Some(params) = params {
                    if params.is_empty() {
                        return Err(bad());
                    }
                    for kv in params.split(',') {
                        let (k, v) = kv.split_once('=').ok_or_else(bad)?;
                        match k {
                            "n" => n = v.parse().map_err(|_| bad())?,
                            "eps" if head != "gem" => eps = v.parse().map_err(|_| bad())?,
                            _ => return Err(bad()),
                        }
                    }
                }
                let n = SmoothnessOrder::new(n)?;
                let eps = Epsilon::new(eps)?;
                Ok(match head {
                    "gem" => ActivationSpec::Gem(n),
                    "egem" => ActivationSpec::EGem(n, eps),
                    _ => ActivationSpec::SEGem(n, eps),
                })
            }
            _ => Err(bad()),
        }
    }
}

/// Maximum of the first derivative and the input achieving it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzResult {
    pub constant: f64,
    pub argmax: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_bounds() {
        assert!(SmoothnessOrder::new(0).is_err());
        assert!(SmoothnessOrder::new(1).is_ok());
        assert!(SmoothnessOrder::new(64).is_ok());
        assert!(SmoothnessOrder::new(65).is_err());
    }

    #[test]
    fn epsilon_bounds() {
        assert!(Epsilon::new(0.0).is_err());
        assert!(Epsilon::new(-1.0).is_err());
        assert!(Epsilon::new(f64::NAN).is_err());
        assert!(Epsilon::new(1e-12).is_ok());
        assert!(Epsilon::checked_for(1e-12, Precision::Double).is_ok());
        assert_eq!(
            Epsilon::checked_for(1e-12, Precision::Single),
            Err(SpecError::EpsilonBelowF32Floor(1e-12))
        );
        assert!(Epsilon::checked_for(1e-7, Precision::Single).is_ok());
    }

    #[test]
    fn grammar_defaults() {
        assert_eq!(
            "gem".parse::<ActivationSpec>().unwrap(),
            ActivationSpec::Gem(SmoothnessOrder::new(1).unwrap())
        );
        assert_eq!(
            "egem".parse::<ActivationSpec>().unwrap(),
            ActivationSpec::EGem(SmoothnessOrder::new(1).unwrap(), Epsilon::ONE)
        );
        assert_eq!(
            "segem:eps=0.01".parse::<ActivationSpec>().unwrap(),
            ActivationSpec::SEGem(
                SmoothnessOrder::new(1).unwrap(),
                Epsilon::new(0.01).unwrap()
            )
        );
    }

    #[test]
    fn grammar_rejects_garbage() {
        for s in [
            "bogus",
            "gem:",
            "gem:n=0",
            "gem:n=65",
            "gem:eps=1",
            "relu:n=1",
            "egem:n=1,eps=0",
            "egem:n=1,eps=nope",
            "egem:n=1,extra=2",
        ] {
            assert!(s.parse::<ActivationSpec>().is_err(), "accepted `{s}`");
        }
    }

    #[test]
    fn display_round_trips() {
        let specs = [
            ActivationSpec::Relu,
            ActivationSpec::GeluTanh,
            ActivationSpec::Gem(SmoothnessOrder::new(3).unwrap()),
            ActivationSpec::EGem(
                SmoothnessOrder::new(2).unwrap(),
                Epsilon::new(1e-4).unwrap(),
            ),
            ActivationSpec::SEGem(SmoothnessOrder::new(1).unwrap(), Epsilon::new(10.0).unwrap()),
        ];
        for spec in specs {
            let text = spec.to_string();
            assert_eq!(text.parse::<ActivationSpec>().unwrap(), spec, "via `{text}`");
        }
    }
}
