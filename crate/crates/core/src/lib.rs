//! Closed-form Bessel-bridge kernels, renormalized distribution pairings and
//! their independent numerical oracles.
//!
//! The crate evaluates, in closed form, the two-point moments of a Bessel
//! bridge of dimension `delta` pinned at 0 on `[0, 1]`, the even power-series
//! kernel obtained by conditioning on an interior value, and the
//! one-parameter family of distributions `mu_alpha` pairing derivative data
//! at 0 with Taylor-renormalized power-weight integrals. A verifier module
//! assembles these into executable identities (integration-by-parts on path
//! space, derivative jumps, vanishing odd derivatives) and checks every claim
//! against adaptive quadrature and exact-grid Monte Carlo oracles.

// `!(x > 0.0)`-style guards are deliberate: they reject NaN along with the
// out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bridge;
pub mod error;
pub mod mc;
pub mod mu;
pub mod quad;
pub mod specfun;
pub mod verifier;

pub use error::{Error, Result};
