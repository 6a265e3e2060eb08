//! Shared oracle helpers for the integration and acceptance suites.
#![allow(dead_code)] // each test binary uses its own subset

use bessel_ibpf::bridge::{joint_density, Dimension};
use bessel_ibpf::mu::SmoothTestFunction;
use bessel_ibpf::quad::{integrate_2d, Quadrature, QuadratureConfig};

/// 2D-quadrature oracle for `E[X_s X_r]` straight from the joint density
/// (times relabeled so the first argument is the smaller).
pub fn two_point_oracle(d: Dimension, s: f64, r: f64, rel_tol: f64) -> Quadrature {
    let (lo, hi) = if s < r { (s, r) } else { (r, s) };
    let cfg = QuadratureConfig {
        rel_tol,
        abs_tol: 1e-13,
        ..QuadratureConfig::default()
    };
    integrate_2d(
        |a, b| {
            // cut off where the pinned-start / pinned-end factors underflow,
            // long before the transition series would get expensive
            if a * a / (2.0 * lo) > 700.0 || b * b / (2.0 * (1.0 - hi)) > 700.0 {
                return 0.0;
            }
            a * b * joint_density(d, lo, hi, a, b).expect("valid joint evaluation")
        },
        (0.0, f64::INFINITY),
        (0.0, f64::INFINITY),
        &cfg,
    )
    .expect("oracle quadrature converges")
}

/// The even test-function battery: Gaussian factors times even polynomials,
/// all with exact Taylor data, termwise third derivatives and accurate
/// remainders.
pub fn even_battery() -> Vec<SmoothTestFunction> {
    let specs: [(f64, &[f64]); 10] = [
        (1.0, &[1.0]),
        (1.0, &[1.0, 0.5]),
        (1.0, &[1.0, 0.0, 0.25]),
        (2.0, &[0.5, 1.0]),
        (0.5, &[1.0, -0.3]),
        (1.5, &[2.0, 1.0, 0.125]),
        (1.0, &[0.0, 1.0]),
        (3.0, &[1.0, 1.0, 1.0]),
        (0.7, &[1.0, 0.2, 0.04, 0.008]),
        (2.5, &[0.3]),
    ];
    specs
        .iter()
        .map(|(rate, coeffs)| {
            SmoothTestFunction::even_gaussian_series(1.0, *rate, coeffs, None)
                .expect("battery function is valid")
        })
        .collect()
}
