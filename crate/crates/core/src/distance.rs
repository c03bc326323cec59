//! Closed-form ℓ^p distance between the ε-family forward and max(0, x):
//!
//! ```text
//! ε^{(p+1)/(2Np)} / (2N)^{1/p} * ( Γ((p+1)/(2N)) Γ((p(2N-1)-1)/(2N)) / Γ(p) )^{1/p}
//! ```
//!
//! evaluated through log-Gamma so large arguments cannot overflow. The
//! expression requires p(2N-1) - 1 > 0; at the boundary the second Gamma
//! argument hits its pole and the underlying integral log-diverges, so such
//! inputs are rejected rather than extrapolated.

use thiserror::Error;

use crate::types::{Epsilon, SmoothnessOrder};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistanceError {
    #[error("p must be a natural number >= 1, got {0}")]
    InvalidP(u32),
    #[error(
        "integral diverges for p = {p}, N = {n}: Gamma argument (p(2N-1)-1)/(2N) = {arg} \
         is not positive"
    )]
    Divergent { p: u32, n: u32, arg: f64 },
}

/// Shared convergence precondition: p >= 1 and p(2N-1) - 1 > 0.
pub fn convergence_check(p: u32, n: SmoothnessOrder) -> Result<(), DistanceError> {
    if p < 1 {
        return Err(DistanceError::InvalidP(p));
    }
    let two_n = n.two_n();
    let arg = (p as f64 * (two_n - 1.0) - 1.0) / two_n;
    if arg <= 0.0 {
        return Err(DistanceError::Divergent { p, n: n.get(), arg });
    }
    Ok(())
}

/// The closed-form ℓ^p distance; monotone increasing in ε.
pub fn lp_distance_closed(
    p: u32,
    n: SmoothnessOrder,
    eps: Epsilon,
) -> Result<f64, DistanceError> {
    convergence_check(p, n)?;
    let pf = p as f64;
    let two_n = n.two_n();
    let a1 = (pf + 1.0) / two_n;
    let a2 = (pf * (two_n - 1.0) - 1.0) / two_n;
    let log_gamma = (libm::lgamma(a1) + libm::lgamma(a2) - libm::lgamma(pf)) / pf;
    let log_value = (pf + 1.0) / (two_n * pf) * eps.get().ln() - two_n.ln() / pf + log_gamma;
    Ok(log_value.exp())
}
