//! Crate-wide error type.

use thiserror::Error;

/// Errors raised by kernel evaluation, pairings, quadrature and sampling.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("gamma pole: x = {x} is within {dist:e} of a nonpositive integer")]
    GammaPole { x: f64, dist: f64 },

    #[error("hypergeometric parameter c = {c} is a nonpositive integer")]
    NonpositiveIntegerC { c: f64 },

    #[error("hypergeometric argument z = {z} outside supported range ({lo}, {hi})")]
    ArgumentOutOfRange { z: f64, lo: f64, hi: f64 },

    #[error(
        "hypergeometric series did not converge in {max_terms} terms (z = {z}, tail ~ {tail:e})"
    )]
    SeriesNonConvergence { z: f64, max_terms: usize, tail: f64 },

    #[error("connection formula requires non-integer c - a - b, got {diff} (logarithmic case unsupported)")]
    IntegerParameterDifference { diff: f64 },

    #[error("time t = {t} must lie strictly inside (0, 1)")]
    InvalidTime { t: f64 },

    #[error("times s = {s} and r = {r} must be distinct")]
    CoincidentTimes { s: f64, r: f64 },

    #[error("dimension delta = {delta} must be strictly positive")]
    InvalidDimension { delta: f64 },

    #[error("delta = {delta} is within 1e-6 of 2; use the delta = 2 limit routine")]
    DimensionNearTwo { delta: f64 },

    #[error("series truncation cap {cap} exceeded for (s, r) = ({s}, {r}); times too close for b_max = {b_max}")]
    TruncationCap {
        s: f64,
        r: f64,
        b_max: f64,
        cap: usize,
    },

    #[error("evaluation point b = {b} exceeds declared b_max = {b_max}")]
    BeyondBMax { b: f64, b_max: f64 },

    #[error("transition density series hit the {cap}-term cap (x*y/2t = {scale})")]
    TransitionSeriesCap { scale: f64, cap: usize },

    #[error("alpha = {alpha} outside the supported range ({lo}, +inf)")]
    AlphaOutOfRange { alpha: f64, lo: f64 },

    #[error("test function is missing data required here: {what}")]
    MissingTestFunctionData { what: &'static str },

    #[error("invalid test function: {reason}")]
    InvalidTestFunction { reason: String },

    #[error("decay certificate insufficient for weight exponent alpha = {alpha}")]
    InsufficientDecay { alpha: f64 },

    #[error(
        "quadrature did not converge: err_est = {err_est:e} after {work} refinements/subdivisions"
    )]
    QuadratureNonConvergence { err_est: f64, work: usize },

    #[error("invalid quadrature configuration: {reason}")]
    InvalidQuadratureConfig { reason: String },

    #[error("grid must be sorted, duplicate-free and strictly inside (0, 1)")]
    DegenerateGrid,

    #[error("time t = {t} is not a grid point of the ensemble")]
    TimeNotOnGrid { t: f64 },

    #[error("Monte Carlo sampling requires an integer dimension >= 1, got {delta_int}")]
    InvalidMcDimension { delta_int: u32 },

    #[error("invalid verification input: {reason}")]
    InvalidVerification { reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
