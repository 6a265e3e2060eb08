//! The one-parameter distribution family `mu_alpha` on `[0, infinity)`.
//!
//! For `alpha = -k` with integer `k >= 0` the pairing is derivative
//! evaluation, `<mu_alpha, psi> = (-1)^k psi^(k)(0)`. Otherwise it is the
//! Taylor-renormalized power-weight integral
//!
//! `<mu_alpha, psi> = (1/Gamma(alpha)) int_0^inf
//!     ( psi(x) - sum_{0 <= j <= -alpha} x^j/j! psi^(j)(0) ) x^{alpha-1} dx`.
//!
//! Internally the integral branch is evaluated in the equivalent
//! analytic-continuation form
//!
//! `Gamma(alpha) <mu_alpha, psi> = int_0^1 R_3(x) x^{alpha-1} dx
//!     + int_1^inf psi(x) x^{alpha-1} dx
//!     + sum_{j=0}^{3} psi^(j)(0)/j! / (j + alpha)`,
//!
//! where `R_3` is the order-3 Taylor remainder at 0. The two writings agree
//! for every non-integer `alpha > -4` (split the defining integral at 1 and
//! integrate the subtracted monomials in closed form on both sides); the
//! second one keeps all the near-endpoint mass in the explicit `1/(j+alpha)`
//! poles, so the numerical pieces stay smooth even when `alpha` sits within
//! 1e-4 of a nonpositive integer. Test functions supply `R_3` in a form that
//! is accurate near 0; differencing the value map would lose every digit
//! there.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quad::{integrate_1d_fallible, EndpointTransform, QuadratureConfig};
use crate::specfun::log_gamma;

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Certified decay bound of a test function, used to decide integrability
/// against the `x^{alpha-1}` weight.
#[derive(Debug, Clone, Copy)]
pub enum DecayCertificate {
    /// `|psi(x)| <= amplitude * exp(-rate * x^2)`
    GaussianLike { amplitude: f64, rate: f64 },
    /// `|psi(x)| <= amplitude * exp(-rate * x)`
    Exponential { amplitude: f64, rate: f64 },
    /// `|psi(x)| <= amplitude * (1 + x)^{-power}`
    Polynomial { amplitude: f64, power: f64 },
}

impl DecayCertificate {
    fn supports_weight(&self, alpha: f64) -> bool {
        match *self {
            DecayCertificate::GaussianLike { rate, .. } => rate > 0.0,
            DecayCertificate::Exponential { rate, .. } => rate > 0.0,
            DecayCertificate::Polynomial { power, .. } => power > alpha,
        }
    }
}

/// A smooth function on `[0, infinity)` with exact Taylor data at 0 up to
/// order 3, an optional analytic third derivative, an optional accurate
/// order-3 Taylor remainder, and a decay certificate.
#[derive(Clone)]
pub struct SmoothTestFunction {
    value: RealFn,
    taylor0: [f64; 4],
    third_derivative: Option<RealFn>,
    remainder3: Option<RealFn>,
    decay: DecayCertificate,
}

impl SmoothTestFunction {
    /// Build and validate a test function. `taylor0` holds
    /// `[psi(0), psi'(0), psi''(0), psi'''(0)]` and must be exact (supplied
    /// analytically by the caller, never estimated by differencing).
    pub fn new(
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        taylor0: [f64; 4],
        third_derivative: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
        decay: DecayCertificate,
    ) -> Result<Self> {
        if taylor0.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidTestFunction {
                reason: "non-finite Taylor data".into(),
            });
        }
        let v0 = value(0.0);
        if (v0 - taylor0[0]).abs() > 1e-12 * (1.0 + taylor0[0].abs()) {
            return Err(Error::InvalidTestFunction {
                reason: format!("value(0) = {v0} disagrees with taylor0[0] = {}", taylor0[0]),
            });
        }
        if let Some(d3) = &third_derivative {
            // one-sided linear extrapolation of psi''' to 0
            let h = 1e-4;
            let extrap = 2.0 * d3(h) - d3(2.0 * h);
            if (extrap - taylor0[3]).abs() > 1e-6 * (1.0 + taylor0[3].abs()) {
                return Err(Error::InvalidTestFunction {
                    reason: format!(
                        "third derivative near 0 ({extrap}) disagrees with taylor0[3] = {}",
                        taylor0[3]
                    ),
                });
            }
        }
        Ok(Self {
            value: Arc::new(value),
            taylor0,
            third_derivative,
            remainder3: None,
            decay,
        })
    }

    /// Attach an accurate order-3 remainder map
    /// `x -> psi(x) - sum_{j<=3} x^j/j! psi^(j)(0)`.
    pub fn with_remainder3(mut self, rem: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.remainder3 = Some(Arc::new(rem));
        self
    }

    pub fn value(&self, x: f64) -> f64 {
        (self.value)(x)
    }

    pub fn taylor0(&self) -> [f64; 4] {
        self.taylor0
    }

    pub fn decay(&self) -> DecayCertificate {
        self.decay
    }

    pub fn has_third_derivative(&self) -> bool {
        self.third_derivative.is_some()
    }

    pub fn third_derivative(&self, x: f64) -> Result<f64> {
        match &self.third_derivative {
            Some(d3) => Ok(d3(x)),
            None => Err(Error::MissingTestFunctionData {
                what: "third derivative",
            }),
        }
    }

    /// Order-3 Taylor remainder at 0. Uses the attached accurate map when
    /// present; otherwise falls back to direct subtraction (fine away from 0,
    /// increasingly cancellation-limited near it).
    pub fn taylor_remainder3(&self, x: f64) -> f64 {
        match &self.remainder3 {
            Some(r) => r(x),
            None => {
                let [t0, t1, t2, t3] = self.taylor0;
                self.value(x) - (t0 + x * (t1 + x * (t2 / 2.0 + x * t3 / 6.0)))
            }
        }
    }

    /// `psi(x) = exp(-lambda x)` with exact Taylor data and remainder.
    pub fn exp_decay(lambda: f64) -> Result<Self> {
        let taylor0 = [1.0, -lambda, lambda * lambda, -lambda.powi(3)];
        let f = Self::new(
            move |x| (-lambda * x).exp(),
            taylor0,
            Some(Arc::new(move |x: f64| {
                -lambda.powi(3) * (-lambda * x).exp()
            })),
            DecayCertificate::Exponential {
                amplitude: 1.0,
                rate: lambda,
            },
        )?;
        Ok(f.with_remainder3(move |x| {
            let u = -lambda * x;
            if u.abs() < 0.9 {
                // tail of the exponential series from order 4
                let mut term = u * u * u * u / 24.0;
                let mut sum = term;
                let mut j = 4.0;
                while term.abs() > 1e-20 * sum.abs().max(1e-300) {
                    j += 1.0;
                    term *= u / j;
                    sum += term;
                }
                sum
            } else {
                u.exp() - (1.0 + u + u * u / 2.0 + u * u * u / 6.0)
            }
        }))
    }

    /// Even analytic function `prefactor * exp(-gauss_rate x^2) * sum_k
    /// coeffs[k] x^{2k}` with termwise derivatives and a remainder map that is
    /// stable near 0. When `valid_up_to` is set, the function is treated as 0
    /// beyond it (the series representation is only certified up to there and
    /// the true function is below every tolerance in use).
    pub fn even_gaussian_series(
        prefactor: f64,
        gauss_rate: f64,
        coeffs: &[f64],
        valid_up_to: Option<f64>,
    ) -> Result<Self> {
        if coeffs.is_empty() || gauss_rate <= 0.0 || !prefactor.is_finite() {
            return Err(Error::InvalidTestFunction {
                reason: "even series needs coefficients and a positive Gaussian rate".into(),
            });
        }
        let c0 = coeffs[0];
        let c1 = coeffs.get(1).copied().unwrap_or(0.0);
        let taylor0 = [
            prefactor * c0,
            0.0,
            2.0 * prefactor * (c1 - gauss_rate * c0),
            0.0,
        ];

        // even polynomial in x and its first three e^{-g x^2}-covariant
        // derivative polynomials: D[e^{-gx^2} Q] = e^{-gx^2} (Q' - 2g x Q)
        let mut q0 = vec![0.0; 2 * coeffs.len() - 1];
        for (k, &c) in coeffs.iter().enumerate() {
            q0[2 * k] = c;
        }
        let d_step = |q: &[f64]| -> Vec<f64> {
            let mut out = vec![0.0; q.len() + 1];
            for (i, &qi) in q.iter().enumerate() {
                if i >= 1 {
                    out[i - 1] += i as f64 * qi;
                }
                out[i + 1] -= 2.0 * gauss_rate * qi;
            }
            out
        };
        let q3 = d_step(&d_step(&d_step(&q0)));

        let cutoff = valid_up_to.unwrap_or(f64::INFINITY);
        let g = gauss_rate;
        let pre = prefactor;

        let horner = |q: &[f64], x: f64| -> f64 {
            let mut acc = 0.0;
            for &c in q.iter().rev() {
                acc = acc * x + c;
            }
            acc
        };

        let q0_val = q0.clone();
        let value_fn = move |x: f64| -> f64 {
            let u = g * x * x;
            if x > cutoff || u > 600.0 {
                return 0.0;
            }
            pre * (-u).exp() * horner(&q0_val, x)
        };
        let q3_val = q3;
        let d3_cut = cutoff;
        let d3_fn = move |x: f64| -> f64 {
            let u = g * x * x;
            if x > d3_cut || u > 600.0 {
                return 0.0;
            }
            pre * (-u).exp() * horner(&q3_val, x)
        };

        // Scaled Taylor coefficients of the full function:
        // psi(x) = pre * sum_n A_n x^{2n},
        // A_n x_c^{2n} = sum_{k<=n} c_k x_c^{2k} (-g x_c^2)^{n-k}/(n-k)!
        // with x_c = min(1, 1/sqrt(g)) so every factor is O(1).
        let x_c = (1.0 / g.sqrt()).min(1.0);
        let gx2 = g * x_c * x_c;
        let n_max = coeffs.len() + 60;
        let mut ck_scaled = Vec::with_capacity(coeffs.len());
        let mut p = 1.0;
        for &c in coeffs {
            ck_scaled.push(c * p);
            p *= x_c * x_c;
        }
        // pow_g[m] = (-g x_c^2)^m / m!
        let mut pow_g = vec![1.0f64; n_max + 1];
        for m in 1..=n_max {
            pow_g[m] = pow_g[m - 1] * (-gx2) / m as f64;
        }
        let mut a_scaled = vec![0.0f64; n_max + 1];
        for (n, slot) in a_scaled.iter_mut().enumerate() {
            let mut acc = 0.0;
            let k_hi = n.min(ck_scaled.len() - 1);
            for (k, &cks) in ck_scaled.iter().enumerate().take(k_hi + 1) {
                acc += cks * pow_g[n - k];
            }
            *slot = acc;
        }

        let [t0, _, t2, _] = taylor0;
        let rem_value = {
            let q0_rem = q0;
            move |x: f64| -> f64 {
                let u = g * x * x;
                if x > cutoff || u > 600.0 {
                    return 0.0;
                }
                pre * (-u).exp() * horner(&q0_rem, x)
            }
        };
        let remainder = move |x: f64| -> f64 {
            if x <= x_c {
                // sum_{n >= 2} A_n x^{2n} in the scaled variables; the
                // convolved coefficients can have interior exact zeros, so a
                // single small term must not end the sum
                let q = (x / x_c) * (x / x_c);
                let mut qn = q * q;
                let mut sum = 0.0f64;
                let mut peak = 0.0f64;
                let mut below = 0u32;
                for &a in a_scaled.iter().skip(2) {
                    let term = a * qn;
                    sum += term;
                    peak = peak.max(term.abs());
                    if peak > 0.0 && term.abs() < 1e-18 * peak {
                        below += 1;
                        if below >= 3 {
                            break;
                        }
                    } else {
                        below = 0;
                    }
                    qn *= q;
                }
                pre * sum
            } else {
                rem_value(x) - (t0 + 0.5 * t2 * x * x)
            }
        };

        // certified Gaussian-style bound: the function decays at the marginal
        // rate; take 60% of the raw series rate and bound the ratio on a grid
        let probe_hi = cutoff.min(12.0 / g.sqrt());
        let rate = 0.6 * g;
        let mut amplitude = taylor0[0].abs().max(1e-300);
        let mut xp = 0.0;
        while xp <= probe_hi {
            let v = value_fn(xp).abs() * (rate * xp * xp).exp();
            if v.is_finite() {
                amplitude = amplitude.max(v);
            }
            xp += probe_hi / 64.0 + 1e-12;
        }

        let f = Self::new(
            value_fn,
            taylor0,
            Some(Arc::new(d3_fn)),
            DecayCertificate::GaussianLike {
                amplitude: 1.5 * amplitude,
                rate,
            },
        )?;
        Ok(f.with_remainder3(remainder))
    }
}

const ALPHA_FLOOR: f64 = -4.0;
const INTEGER_SNAP: f64 = 1e-12;

fn quad_cfg(scale: f64) -> QuadratureConfig {
    QuadratureConfig {
        rel_tol: 1e-11,
        abs_tol: 1e-15 * (1.0 + scale.abs()),
        max_subdivisions: 2_000,
        endpoint_transform: EndpointTransform::TanhSinh,
    }
}

fn mu_pair_impl(alpha: f64, psi: &SmoothTestFunction, include_order1: bool) -> Result<f64> {
    if !(alpha > ALPHA_FLOOR) {
        return Err(Error::AlphaOutOfRange {
            alpha,
            lo: ALPHA_FLOOR,
        });
    }
    if alpha <= INTEGER_SNAP && (alpha - alpha.round()).abs() <= INTEGER_SNAP {
        // derivative branch: <mu_{-k}, psi> = (-1)^k psi^(k)(0)
        let k = (-alpha.round()) as usize;
        let t = psi.taylor0();
        let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
        return Ok(sign * t[k]);
    }
    if !psi.decay().supports_weight(alpha) {
        return Err(Error::InsufficientDecay { alpha });
    }

    let t = psi.taylor0();
    let scale = t[0].abs() + t[2].abs();
    let cfg = quad_cfg(scale);

    // int_0^1 R_3(x) x^{alpha-1} dx; when the order-1 term is toggled off the
    // remainder gains its t1 * x back (a no-op whenever t1 = 0).
    let inner = integrate_1d_fallible(
        |x| {
            let mut r = psi.taylor_remainder3(x);
            if !include_order1 {
                r += t[1] * x;
            }
            Ok(r * x.powf(alpha - 1.0))
        },
        0.0,
        1.0,
        &cfg,
    )?;

    // int_1^inf psi(x) x^{alpha-1} dx
    let outer = integrate_1d_fallible(
        |x| Ok(psi.value(x) * x.powf(alpha - 1.0)),
        1.0,
        f64::INFINITY,
        &cfg,
    )?;

    // explicit pole terms sum_j psi^(j)(0)/j! / (j + alpha)
    let factorial = [1.0, 1.0, 2.0, 6.0];
    let mut poles = 0.0;
    for j in 0..4 {
        if j == 1 && !include_order1 {
            continue;
        }
        poles += t[j] / factorial[j] / (j as f64 + alpha);
    }

    let (lg, sign) = log_gamma(alpha)?;
    Ok((inner.value + outer.value + poles) * sign * (-lg).exp())
}

/// Pair `mu_alpha` against a test function.
pub fn mu_pair(alpha: f64, psi: &SmoothTestFunction) -> Result<f64> {
    mu_pair_impl(alpha, psi, true)
}

/// [`mu_pair`] with the order-1 Taylor term removed from the renormalization.
/// For even test functions (`psi'(0) = 0`) this changes nothing, bit for bit;
/// the verifier asserts exactly that.
pub fn mu_pair_without_order1(alpha: f64, psi: &SmoothTestFunction) -> Result<f64> {
    mu_pair_impl(alpha, psi, false)
}

/// The alternative route through the distributional third derivative:
/// `<mu_alpha, psi> = -<mu_{alpha+3}, psi'''>
///   = -(1/Gamma(alpha+3)) int_0^inf x^{alpha+2} psi'''(x) dx`,
/// valid for `alpha + 3 > 0` (no renormalization needed on the right).
pub fn mu_pair_via_third_derivative(alpha: f64, psi: &SmoothTestFunction) -> Result<f64> {
    if !(alpha + 3.0 > 0.0) {
        return Err(Error::AlphaOutOfRange { alpha, lo: -3.0 });
    }
    if !psi.has_third_derivative() {
        return Err(Error::MissingTestFunctionData {
            what: "third derivative",
        });
    }
    let t = psi.taylor0();
    let cfg = quad_cfg(t[0].abs() + t[2].abs());
    let inner = integrate_1d_fallible(
        |x| Ok(psi.third_derivative(x).expect("checked above") * x.powf(alpha + 2.0)),
        0.0,
        1.0,
        &cfg,
    )?;
    let outer = integrate_1d_fallible(
        |x| Ok(psi.third_derivative(x).expect("checked above") * x.powf(alpha + 2.0)),
        1.0,
        f64::INFINITY,
        &cfg,
    )?;
    let (lg, sign) = log_gamma(alpha + 3.0)?;
    Ok(-(inner.value + outer.value) * sign * (-lg).exp())
}
