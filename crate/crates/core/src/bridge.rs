//! Closed-form kernels of the Bessel bridge pinned at 0 on `[0, 1]`.
//!
//! For dimension `delta > 0` the module evaluates:
//!
//! * the marginal density of `X_r` and the Bessel transition densities,
//! * the conditional kernel `Sigma_r(X_s | b)`, an even entire function of
//!   `b` given by a Gaussian factor times a positive power series,
//! * the two-point moment `E[X_s X_r]` and its first and second
//!   `r`-derivatives, all hypergeometric in the cross-ratio
//!   `z = s(1-r) / (r(1-s))` (times relabeled so `s < r`),
//! * the one-sided derivative limits at the diagonal, whose difference is
//!   the constant jump `-1`.
//!
//! All hypergeometric factors are evaluated through the weighted product
//! `(1-z)^{a+b-c} 2F1(a,b;c;z)` with `1 - z` computed in closed form from
//! `(s, r)`, which keeps every kernel finite and accurate as `r -> s`
//! (`z -> 1`).

use crate::error::{Error, Result};
use crate::mu::SmoothTestFunction;
use crate::specfun::{self, gamma, log_gamma};

/// Bessel dimension `delta > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dimension {
    delta: f64,
}

impl Dimension {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidDimension { delta });
        }
        Ok(Self { delta })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Routes callers to the limit treatment of the drift factor
    /// `1/(delta - 2)`.
    pub fn near_two(&self) -> bool {
        (self.delta - 2.0).abs() < 1e-6
    }
}

pub(crate) fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidTime { t })
    }
}

/// `K(delta) = 2 Gamma((delta+1)/2)^2 / Gamma(delta/2)^2`, the constant in
/// front of every two-point expression.
pub fn two_point_constant(d: Dimension) -> f64 {
    let delta = d.delta();
    let (lg1, _) = log_gamma((delta + 1.0) / 2.0).expect("argument positive");
    let (lg0, _) = log_gamma(delta / 2.0).expect("argument positive");
    2.0 * (2.0 * (lg1 - lg0)).exp()
}

/// Marginal density of `X_r`:
/// `b^{delta-1} / (2^{delta/2-1} Gamma(delta/2) (r(1-r))^{delta/2})
///  * exp(-b^2 / (2 r (1-r)))`.
pub fn marginal_density(d: Dimension, r: f64, b: f64) -> Result<f64> {
    check_time(r)?;
    if b < 0.0 {
        return Err(Error::ArgumentOutOfRange {
            z: b,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    let delta = d.delta();
    let rho = r * (1.0 - r);
    let norm = 2.0f64.powf(delta / 2.0 - 1.0) * gamma(delta / 2.0)? * rho.powf(delta / 2.0);
    Ok(b.powf(delta - 1.0) / norm * (-b * b / (2.0 * rho)).exp())
}

/// `p_t(x, y) / y^{delta-1}`, the transition density with the terminal power
/// divided out. Finite for all `x, y >= 0` and symmetric in `(x, y)`; the
/// bare density is `y^{delta-1}` times this.
pub fn transition_density_ratio(d: Dimension, t: f64, x: f64, y: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidTime { t });
    }
    if x < 0.0 || y < 0.0 {
        return Err(Error::ArgumentOutOfRange {
            z: x.min(y),
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    let delta = d.delta();
    let w = x * y / (2.0 * t);
    let gauss = -(x * x + y * y) / (2.0 * t);

    // sum_k w^{2k} / ((2t)^{delta/2 - 1} k! Gamma(k + delta/2)) / t,
    // with the Gaussian folded in through a log-space scan so that large
    // w never overflows and small leading terms never underflow.
    let (lg_d2, _) = log_gamma(delta / 2.0)?;
    let base = gauss - (delta / 2.0 - 1.0) * (2.0 * t).ln() - t.ln();
    if w == 0.0 {
        return Ok((base - lg_d2).exp());
    }
    // every term satisfies log_term <= base + 2w (the k = w saddle), so the
    // whole sum underflows whenever that bound is deep enough
    if base + 2.0 * w + 60.0 < -745.0 {
        return Ok(0.0);
    }
    let lw = w.ln();
    let cap = 20_000usize;
    // peak term index ~ w; scan with the recursion in log space
    let mut log_term = base - lg_d2;
    let mut max_log = log_term;
    let mut logs = Vec::with_capacity(64);
    logs.push(log_term);
    let mut k = 0usize;
    loop {
        let kf = k as f64;
        let step = 2.0 * lw - ((kf + 1.0) * (kf + delta / 2.0)).ln();
        log_term += step;
        logs.push(log_term);
        max_log = max_log.max(log_term);
        k += 1;
        if step < 0.0 && log_term < max_log - 45.0 {
            break;
        }
        if k >= cap {
            return Err(Error::TransitionSeriesCap { scale: w, cap });
        }
    }
    let mut sum = 0.0;
    for lt in logs {
        sum += (lt - max_log).exp();
    }
    Ok(sum * max_log.exp())
}

/// Bessel transition density `p_t(x, y)`. For `x = 0` this is the closed
/// form `y^{delta-1} / (2^{delta/2-1} t^{delta/2} Gamma(delta/2))
/// exp(-y^2/2t)`; for `x > 0` the scaled modified-Bessel series.
pub fn transition_density(d: Dimension, t: f64, x: f64, y: f64) -> Result<f64> {
    let ratio = transition_density_ratio(d, t, x, y)?;
    Ok(y.powf(d.delta() - 1.0) * ratio)
}

/// The end factor `p_{1-r}(b, 0) / p_1(0, 0)
///  = (1-r)^{-delta/2} exp(-b^2 / (2(1-r)))`.
pub fn end_ratio(d: Dimension, r: f64, b: f64) -> Result<f64> {
    check_time(r)?;
    let delta = d.delta();
    Ok((1.0 - r).powf(-delta / 2.0) * (-b * b / (2.0 * (1.0 - r))).exp())
}

/// Joint density of `(X_s, X_r)` at `(a, b)` for `0 < s < r < 1`:
/// `p_s(0, a) p_{r-s}(a, b) * end_ratio(r, b)`. For `s > r` relabel by time
/// reversal, `(s, r, a, b) -> (1-r, 1-s, b, a)`.
pub fn joint_density(d: Dimension, s: f64, r: f64, a: f64, b: f64) -> Result<f64> {
    check_time(s)?;
    check_time(r)?;
    if s >= r {
        return Err(Error::InvalidVerification {
            reason: format!("joint_density requires s < r (got s = {s}, r = {r}); use the time-reversed relabeling"),
        });
    }
    let p0a = transition_density(d, s, 0.0, a)?;
    let pab = transition_density(d, r - s, a, b)?;
    Ok(p0a * pab * end_ratio(d, r, b)?)
}

// ---------------------------------------------------------------------------
// Sigma series
// ---------------------------------------------------------------------------

/// Series truncation cap of [`sigma_series`].
pub const SIGMA_COEFF_CAP: usize = 500;

/// The conditional kernel `Sigma_r(X_s | b)` as a Gaussian prefactor times an
/// even positive power series:
/// `Sigma = prefactor * exp(-gauss_rate b^2) * sum_k coeffs[k] b^{2k}`.
#[derive(Debug, Clone)]
pub struct SigmaSeries {
    delta: f64,
    s: f64,
    r: f64,
    prefactor: f64,
    gauss_rate: f64,
    coeffs: Vec<f64>,
    b_max: f64,
}

/// Build the series for `Sigma_r(X_s | .)` with the default evaluation range
/// `b_max = 10 sqrt(r(1-r))` (beyond which the kernel is below 1e-20 of its
/// peak).
pub fn sigma_series(d: Dimension, s: f64, r: f64) -> Result<SigmaSeries> {
    let b_max = 10.0 * (r * (1.0 - r)).sqrt();
    sigma_series_with_bmax(d, s, r, b_max)
}

/// [`sigma_series`] with a caller-chosen `b_max`. The truncation order is
/// certified at `b_max`: the first dropped term is below `1e-16` of the
/// partial sum and the term ratio is at most 1/2, so the dropped tail is
/// bounded by the last kept term.
pub fn sigma_series_with_bmax(d: Dimension, s: f64, r: f64, b_max: f64) -> Result<SigmaSeries> {
    check_time(s)?;
    check_time(r)?;
    if s == r {
        return Err(Error::CoincidentTimes { s, r });
    }
    if !(b_max > 0.0) {
        return Err(Error::ArgumentOutOfRange {
            z: b_max,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    let delta = d.delta();

    let (big_d, f0, f_ratio) = if s < r {
        let big_d = (1.0 - s) / ((r - s) * (1.0 - r));
        let f0 = ((s / r) * 2.0 * (r - s)).sqrt();
        let f_ratio = (s / r) / (2.0 * (r - s));
        (big_d, f0, f_ratio)
    } else {
        let big_d = s / (r * (s - r));
        let f0 = (((1.0 - s) / (1.0 - r)) * 2.0 * (s - r)).sqrt();
        let f_ratio = ((1.0 - s) / (1.0 - r)) / (2.0 * (s - r));
        (big_d, f0, f_ratio)
    };
    debug_assert!(big_d > 0.0);

    let prefactor = 1.0 / (2.0f64.powf(delta / 2.0 - 1.0) * (r * (1.0 - r)).powf(delta / 2.0));
    // C_0 = Gamma((delta+1)/2) / Gamma(delta/2)^2
    let (lg1, _) = log_gamma((delta + 1.0) / 2.0)?;
    let (lg0, _) = log_gamma(delta / 2.0)?;
    let c0 = (lg1 - 2.0 * lg0).exp();

    let bb = b_max * b_max;
    let mut coeffs = vec![c0 * f0];
    let mut term = coeffs[0]; // c_k b_max^{2k}, k = 0
    let mut partial = term;
    loop {
        let k = coeffs.len() - 1;
        let kf = k as f64;
        let ratio_c = (kf + (delta + 1.0) / 2.0) / ((kf + delta / 2.0) * (kf + 1.0));
        let step = ratio_c * f_ratio; // c_{k+1} / c_k
        let next_term = term * step * bb;
        if next_term < 1e-16 * partial && next_term < 0.5 * term {
            break;
        }
        if coeffs.len() >= SIGMA_COEFF_CAP {
            return Err(Error::TruncationCap {
                s,
                r,
                b_max,
                cap: SIGMA_COEFF_CAP,
            });
        }
        coeffs.push(coeffs[k] * step);
        term = next_term;
        partial += term;
    }

    Ok(SigmaSeries {
        delta,
        s,
        r,
        prefactor,
        gauss_rate: big_d / 2.0,
        coeffs,
        b_max,
    })
}

impl SigmaSeries {
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn times(&self) -> (f64, f64) {
        (self.s, self.r)
    }
    pub fn prefactor(&self) -> f64 {
        self.prefactor
    }
    pub fn gauss_rate(&self) -> f64 {
        self.gauss_rate
    }
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }
    pub fn b_max(&self) -> f64 {
        self.b_max
    }

    fn check_b(&self, b: f64) -> Result<()> {
        if b < 0.0 || b > self.b_max {
            return Err(Error::BeyondBMax {
                b,
                b_max: self.b_max,
            });
        }
        Ok(())
    }

    /// `Sigma(b) = prefactor e^{-gauss_rate b^2} sum_k c_k b^{2k}`, with the
    /// Gaussian folded into the (all-positive) terms so intermediate values
    /// never overflow.
    pub fn eval(&self, b: f64) -> Result<f64> {
        self.check_b(b)?;
        let u = self.gauss_rate * b * b;
        let shift = u.min(600.0);
        let bb = b * b;
        let mut term = self.coeffs[0] * (-shift).exp();
        let mut sum = term;
        for k in 1..self.coeffs.len() {
            term *= (self.coeffs[k] / self.coeffs[k - 1]) * bb;
            sum += term;
        }
        Ok(self.prefactor * (-(u - shift)).exp() * sum)
    }

    /// Analytic derivative of order 1..=3, by termwise differentiation of the
    /// polynomial-times-Gaussian form. No numerical differencing.
    pub fn deriv(&self, b: f64, order: usize) -> Result<f64> {
        self.check_b(b)?;
        if !(1..=3).contains(&order) {
            return Err(Error::InvalidVerification {
                reason: format!("derivative order {order} not in 1..=3"),
            });
        }
        let g = self.gauss_rate;
        let mut q = vec![0.0f64; 2 * self.coeffs.len() - 1];
        for (k, &c) in self.coeffs.iter().enumerate() {
            q[2 * k] = c;
        }
        for _ in 0..order {
            let mut out = vec![0.0f64; q.len() + 1];
            for (i, &qi) in q.iter().enumerate() {
                if i >= 1 {
                    out[i - 1] += i as f64 * qi;
                }
                out[i + 1] -= 2.0 * g * qi;
            }
            q = out;
        }
        let u = g * b * b;
        if u > 700.0 {
            return Ok(0.0);
        }
        let mut acc = 0.0;
        for &c in q.iter().rev() {
            acc = acc * b + c;
        }
        Ok(self.prefactor * (-u).exp() * acc)
    }

    /// Wrap the kernel as a test function for the `mu_alpha` pairing, with
    /// exact Taylor data, termwise third derivative and an accurate Taylor
    /// remainder.
    pub fn to_test_function(&self) -> Result<SmoothTestFunction> {
        SmoothTestFunction::even_gaussian_series(
            self.prefactor,
            self.gauss_rate,
            &self.coeffs,
            Some(self.b_max),
        )
    }
}

// ---------------------------------------------------------------------------
// two-point function and derivatives
// ---------------------------------------------------------------------------

/// Cross-ratio `z` and `1 - z`, computed in closed form after relabeling the
/// times so the first is the smaller: `z = lo(1-hi) / (hi(1-lo))`,
/// `1 - z = (hi-lo) / (hi(1-lo))`.
fn cross_ratio(s: f64, r: f64) -> (f64, f64) {
    let (lo, hi) = if s < r { (s, r) } else { (r, s) };
    let denom = hi * (1.0 - lo);
    ((lo * (1.0 - hi) / denom).min(1.0), (hi - lo) / denom)
}

const W_TOL: f64 = 1e-13;

fn weighted_f0(delta: f64, z: f64, omz: f64) -> Result<f64> {
    // (1-z)^{delta/2+1} 2F1((d+1)/2, (d+1)/2; d/2; z)
    specfun::hyp2f1_weighted(
        (delta + 1.0) / 2.0,
        (delta + 1.0) / 2.0,
        delta / 2.0,
        z,
        omz,
        W_TOL,
    )
}

fn weighted_f2(delta: f64, z: f64, omz: f64) -> Result<f64> {
    // (1-z)^{delta/2-1} 2F1((d+1)/2, (d-3)/2; d/2; z)
    specfun::hyp2f1_weighted(
        (delta + 1.0) / 2.0,
        (delta - 3.0) / 2.0,
        delta / 2.0,
        z,
        omz,
        W_TOL,
    )
}

/// Two-point moment `E[X_s X_r]`, symmetric in its time arguments:
/// `K(delta) sqrt(s r (1-s)(1-r)) * (1-z)^{delta/2+1}
///   2F1((d+1)/2, (d+1)/2; d/2; z)`.
/// On the diagonal it returns the continuous extension `delta s (1-s)`
/// (the second moment).
pub fn two_point(d: Dimension, s: f64, r: f64) -> Result<f64> {
    check_time(s)?;
    check_time(r)?;
    let delta = d.delta();
    if s == r {
        return Ok(delta * s * (1.0 - s));
    }
    // relabeled so the result is bit-identical under argument swap
    let (lo, hi) = if s < r { (s, r) } else { (r, s) };
    let (z, omz) = cross_ratio(lo, hi);
    let k = two_point_constant(d);
    Ok(k * (lo * hi * (1.0 - lo) * (1.0 - hi)).sqrt() * weighted_f0(delta, z, omz)?)
}

/// Closed-form `d/dr E[X_s X_r]`, branch-selected on the sign of `r - s`.
pub fn two_point_dr(d: Dimension, s: f64, r: f64) -> Result<f64> {
    two_point_dr_with_tol(d, s, r, W_TOL)
}

/// [`two_point_dr`] with an explicit hypergeometric stop tolerance. The
/// verifier's near-diagonal window integrals run this looser, where the
/// integer-difference (even-`delta`) series tail is polynomial and a tight
/// tolerance would cost millions of terms for accuracy nobody consumes.
pub(crate) fn two_point_dr_with_tol(d: Dimension, s: f64, r: f64, tol: f64) -> Result<f64> {
    check_time(s)?;
    check_time(r)?;
    if s == r {
        return Err(Error::CoincidentTimes { s, r });
    }
    let delta = d.delta();
    let (z, omz) = cross_ratio(s, r);
    let k = two_point_constant(d);
    let wa = specfun::hyp2f1_weighted(
        (delta + 1.0) / 2.0,
        (delta + 1.0) / 2.0,
        delta / 2.0,
        z,
        omz,
        tol,
    )?;
    let wb = specfun::hyp2f1_weighted(
        (delta + 1.0) / 2.0,
        (delta - 1.0) / 2.0,
        delta / 2.0,
        z,
        omz,
        tol,
    )?;
    let cross = (s * (1.0 - s) / (r * (1.0 - r))).sqrt();
    if s < r {
        // -K s z^{-1/2} (1-z)^{d/2+1} F0 + (K/2) ((1-s)/(1-r)) z^{1/2} (1-z)^{d/2} F1
        let t1 = -k * (s * r * (1.0 - s) / (1.0 - r)).sqrt() * wa;
        let t2 = 0.5 * k * cross * wb;
        Ok(t1 + t2)
    } else {
        // +K (1-s) z^{-1/2} (1-z)^{d/2+1} F0 - (K/2) (s/r) z^{1/2} (1-z)^{d/2} F1
        let t1 = k * (s * (1.0 - s) * (1.0 - r) / r).sqrt() * wa;
        let t2 = -0.5 * k * cross * wb;
        Ok(t1 + t2)
    }
}

/// Closed-form `d^2/dr^2 E[X_s X_r]` away from the diagonal:
/// `-(K/4) sqrt(s(1-s)) / (r(1-r))^{3/2} * (1-z)^{delta/2-1}
///   2F1((d+1)/2, (d-3)/2; d/2; z)`.
pub fn two_point_d2r(d: Dimension, s: f64, r: f64) -> Result<f64> {
    check_time(s)?;
    check_time(r)?;
    if s == r {
        return Err(Error::CoincidentTimes { s, r });
    }
    let delta = d.delta();
    let (z, omz) = cross_ratio(s, r);
    let k = two_point_constant(d);
    let wc = weighted_f2(delta, z, omz)?;
    Ok(-0.25 * k * (s * (1.0 - s)).sqrt() / (r * (1.0 - r)).powf(1.5) * wc)
}

/// One-sided limits of `d/dr E[X_s X_r]` at `r = s`:
/// `d+ = -delta s + (delta-1)/2`, `d- = delta (1-s) - (delta-1)/2`.
/// Their difference is `-1` identically.
pub fn derivative_limits(d: Dimension, s: f64) -> Result<(f64, f64)> {
    check_time(s)?;
    let delta = d.delta();
    let d_plus = -delta * s + (delta - 1.0) / 2.0;
    let d_minus = delta * (1.0 - s) - (delta - 1.0) / 2.0;
    Ok((d_plus, d_minus))
}
