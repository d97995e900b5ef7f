//! Market model, Bayesian filter coefficients, and the change-of-measure
//! kernels `H` and `Psi` that reduce every expectation to a one-dimensional
//! integral against a centered normal density.

use serde::{Deserialize, Serialize};

use crate::error::{QvarError, Result};
use crate::quad::{self, QuadratureSpec};

/// Market, utility-reference, and constraint parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    /// Riskless rate (1/year).
    pub r: f64,
    /// Volatility (1/sqrt(year)), > 0.
    pub sigma: f64,
    /// Low drift state (1/year).
    pub mu_l: f64,
    /// High drift state (1/year).
    pub mu_h: f64,
    /// Prior probability of the high state, in (0, 1).
    pub p: f64,
    /// Horizon (years).
    pub t_horizon: f64,
    /// Initial wealth.
    pub x0: f64,
    /// Utility reference level.
    pub theta: f64,
    /// VaR floor, 0 < L < theta.
    pub floor: f64,
    /// Confidence parameter in [0, 1].
    pub epsilon: f64,
}

impl Default for ModelParams {
    /// Baseline experiment configuration: two drift states read off the
    /// filter grid endpoints with the prior chosen so the initial filtered
    /// drift is 0.07.
    fn default() -> Self {
        Self {
            r: 0.05,
            sigma: 0.2,
            mu_l: 0.03,
            mu_h: 0.1,
            p: 4.0 / 7.0,
            t_horizon: 1.0,
            x0: 1.0,
            theta: 1.5,
            floor: 0.9,
            epsilon: 0.1,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(QvarError::InvalidParameter(msg));
        if !(self.sigma > 0.0) {
            return fail(format!("sigma must be > 0, got {}", self.sigma));
        }
        if !(self.mu_l < self.mu_h) {
            return fail(format!("mu_l < mu_h required, got {} >= {}", self.mu_l, self.mu_h));
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return fail(format!("p must lie in (0,1), got {}", self.p));
        }
        if !(self.t_horizon > 0.0) {
            return fail(format!("horizon must be > 0, got {}", self.t_horizon));
        }
        if !(self.epsilon >= 0.0 && self.epsilon <= 1.0) {
            return fail(format!("epsilon must lie in [0,1], got {}", self.epsilon));
        }
        if !(self.floor > 0.0 && self.floor < self.theta) {
            return fail(format!(
                "floor must satisfy 0 < L < theta, got L = {}, theta = {}",
                self.floor, self.theta
            ));
        }
        if !(self.x0 > 0.0) {
            return fail(format!("x0 must be > 0, got {}", self.x0));
        }
        Ok(())
    }
}

/// Constants of the measure change, derived from [`ModelParams`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DerivedParams {
    /// Market price of risk of the low state, (mu_l - r)/sigma.
    pub theta_l: f64,
    /// Scaled state gap, (mu_h - mu_l)/sigma.
    pub big_theta: f64,
    /// Prior mean drift, p*mu_h + (1-p)*mu_l.
    pub mu_hat0: f64,
    /// Initial likelihood ratio, (mu_hat0 - mu_l)/(mu_h - mu_hat0).
    pub phi: f64,
}

/// Computes the measure-change constants, validating the model first.
pub fn derive_params(params: &ModelParams) -> Result<DerivedParams> {
    params.validate()?;
    let mu_hat0 = params.p * params.mu_h + (1.0 - params.p) * params.mu_l;
    Ok(DerivedParams {
        theta_l: (params.mu_l - params.r) / params.sigma,
        big_theta: (params.mu_h - params.mu_l) / params.sigma,
        mu_hat0,
        phi: (mu_hat0 - params.mu_l) / (params.mu_h - mu_hat0),
    })
}

/// Filter volatility of the estimated drift. Zero outside [mu_l, mu_h]
/// (indicator form, matching the clamped simulation scheme).
pub fn psi(mu_hat: f64, params: &ModelParams) -> f64 {
    if mu_hat < params.mu_l || mu_hat > params.mu_h {
        0.0
    } else {
        (mu_hat - params.mu_l) * (params.mu_h - mu_hat) / params.sigma
    }
}

/// Likelihood ratio of the filtered state: (mu_hat - mu_l)/(mu_h - mu_hat).
pub fn phi_of(mu_hat: f64, params: &ModelParams) -> Result<f64> {
    if mu_hat <= params.mu_l || mu_hat >= params.mu_h {
        return Err(QvarError::Domain(format!(
            "mu_hat must lie strictly inside ({}, {}), got {mu_hat}",
            params.mu_l, params.mu_h
        )));
    }
    Ok((mu_hat - params.mu_l) / (params.mu_h - mu_hat))
}

/// log(1 + e^a) without overflow.
fn log1p_exp(a: f64) -> f64 {
    if a > 0.0 {
        a + (-a).exp().ln_1p()
    } else {
        a.exp().ln_1p()
    }
}

/// The measure-change kernel state for one evaluation time: remaining time
/// `tau` and the likelihood ratio `phi` of the conditioning state. At the
/// start of the horizon `phi` is the prior ratio; restarted at time t it is
/// recomputed from the filtered drift.
#[derive(Debug, Clone, Copy)]
pub struct MeasureKernel {
    pub tau: f64,
    pub phi: f64,
    pub theta_l: f64,
    pub big_theta: f64,
    pub r: f64,
    log_phi: f64,
}

impl MeasureKernel {
    pub fn new(tau: f64, phi: f64, d: &DerivedParams, r: f64) -> Self {
        Self {
            tau,
            phi,
            theta_l: d.theta_l,
            big_theta: d.big_theta,
            r,
            log_phi: if phi > 0.0 { phi.ln() } else { f64::NEG_INFINITY },
        }
    }

    /// Kernel for the full horizon, conditioning on the prior.
    pub fn terminal(params: &ModelParams, d: &DerivedParams) -> Self {
        Self::new(params.t_horizon, d.phi, d, params.r)
    }

    /// Kernel restarted at time t from filtered drift mu_hat.
    pub fn at_time(t: f64, mu_hat: f64, params: &ModelParams, d: &DerivedParams) -> Result<Self> {
        if !(t >= 0.0 && t < params.t_horizon) {
            return Err(QvarError::Domain(format!(
                "t must lie in [0, T), got {t} with T = {}",
                params.t_horizon
            )));
        }
        Ok(Self::new(
            params.t_horizon - t,
            phi_of(mu_hat, params)?,
            d,
            params.r,
        ))
    }

    /// The market has a deterministic dual state when both exponents vanish;
    /// nothing to filter or integrate in that case.
    pub fn is_degenerate(&self) -> bool {
        self.theta_l == 0.0 && self.phi <= f64::EPSILON
    }

    fn log_denominator(&self, w: f64) -> f64 {
        // log(1 + phi exp(Theta w - Theta^2 tau / 2))
        if self.phi == 0.0 {
            0.0
        } else {
            log1p_exp(self.log_phi + self.big_theta * w - 0.5 * self.big_theta * self.big_theta * self.tau)
        }
    }

    pub fn log_h(&self, w: f64) -> f64 {
        -self.theta_l * w - (self.r + 0.5 * self.theta_l * self.theta_l) * self.tau
            - self.log_denominator(w)
    }

    /// H evaluated at terminal Brownian value w: the dual state per unit of
    /// initial value is y0 (1+phi) H(w).
    pub fn h(&self, w: f64) -> f64 {
        self.log_h(w).exp()
    }

    /// Psi(w) = (1 + phi exp(Theta w - Theta^2 tau/2)) / (1 + phi); this is
    /// the measure-change weight F at the terminal time.
    pub fn psi_weight(&self, w: f64) -> f64 {
        (self.log_denominator(w) - self.phi.ln_1p()).exp()
    }

    /// Half-width of the truncated integration domain.
    pub fn domain_half_width(&self, spec: &QuadratureSpec) -> f64 {
        spec.truncation * self.tau.sqrt()
    }

    /// Supremum of H over the truncated domain (and its location). For the
    /// mixed-sign market price of risk this is an interior maximum; in
    /// monotone cases it sits on the domain boundary.
    pub fn h_sup(&self, spec: &QuadratureSpec) -> (f64, f64) {
        let half = self.domain_half_width(spec);
        let (arg, log_max) = quad::max_on_interval(|w| self.log_h(w), -half, half, 2048);
        (arg, log_max.exp())
    }

    /// All solutions of H(w) = h_level inside the truncated domain, by dense
    /// sign scan plus bisection. Empty when the level is never attained or
    /// when H is constant (degenerate market).
    pub fn indicator_breakpoints(&self, h_level: f64, spec: &QuadratureSpec) -> Vec<f64> {
        assert!(h_level > 0.0, "h_level must be positive");
        if self.is_degenerate() {
            return Vec::new();
        }
        if !h_level.is_finite() {
            return Vec::new();
        }
        let half = self.domain_half_width(spec);
        let level = h_level.ln();
        quad::find_level_crossings(
            |w| self.log_h(w),
            level,
            -half,
            half,
            2048,
            spec.split_tolerance,
        )
    }
}

/// H(w) for remaining time tau, conditioning on the time-0 prior.
pub fn h_of_w(w: f64, tau: f64, d: &DerivedParams, r: f64) -> f64 {
    MeasureKernel::new(tau, d.phi, d, r).h(w)
}

/// Psi(w) = F-weight for remaining time tau, conditioning on the time-0 prior.
pub fn f_weight(w: f64, tau: f64, d: &DerivedParams) -> f64 {
    MeasureKernel::new(tau, d.phi, d, 0.0).psi_weight(w)
}

/// Crossings of H(w) = h_level over the truncated terminal-law domain.
pub fn find_indicator_breakpoints(
    h_level: f64,
    tau: f64,
    d: &DerivedParams,
    r: f64,
    spec: &QuadratureSpec,
) -> Vec<f64> {
    MeasureKernel::new(tau, d.phi, d, r).indicator_breakpoints(h_level, spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::q_expect;
    use approx::assert_abs_diff_eq;

    fn defaults() -> (ModelParams, DerivedParams) {
        let p = ModelParams::default();
        let d = derive_params(&p).unwrap();
        (p, d)
    }

    #[test]
    fn derived_constants() {
        let (_, d) = defaults();
        assert_abs_diff_eq!(d.theta_l, -0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(d.big_theta, 0.35, epsilon = 1e-15);
        assert_abs_diff_eq!(d.mu_hat0, 0.07, epsilon = 1e-15);
        assert_abs_diff_eq!(d.phi, 4.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn symmetric_prior_gives_unit_phi() {
        let p = ModelParams {
            p: 0.5,
            mu_l: 0.04,
            mu_h: 0.08,
            ..ModelParams::default()
        };
        let d = derive_params(&p).unwrap();
        assert_abs_diff_eq!(d.mu_hat0, 0.06, epsilon = 1e-15);
        assert_abs_diff_eq!(d.phi, 1.0, epsilon = 1e-13);
    }

    #[test]
    fn zero_mpr_when_low_state_is_riskless() {
        let p = ModelParams {
            mu_l: 0.05,
            ..ModelParams::default()
        };
        let d = derive_params(&p).unwrap();
        assert_eq!(d.theta_l, 0.0);
    }

    #[test]
    fn invalid_params_rejected() {
        let p = ModelParams { p: 1.0, ..ModelParams::default() };
        assert!(derive_params(&p).is_err());
        let p = ModelParams { mu_l: 0.2, ..ModelParams::default() };
        assert!(derive_params(&p).is_err());
        let p = ModelParams { floor: 2.0, ..ModelParams::default() };
        assert!(derive_params(&p).is_err());
    }

    #[test]
    fn filter_volatility() {
        let (p, _) = defaults();
        assert_eq!(psi(p.mu_l, &p), 0.0);
        assert_eq!(psi(p.mu_h, &p), 0.0);
        assert_eq!(psi(p.mu_l - 0.01, &p), 0.0);
        assert_abs_diff_eq!(psi(0.07, &p), 0.006, epsilon = 1e-15);
        assert!(psi(0.065, &p) > 0.0);
    }

    #[test]
    fn h_at_zero() {
        // exp(-(r + theta_l^2/2)) / (1 + phi exp(-Theta^2/2)) at w = 0, tau = 1
        let (_, d) = defaults();
        let expected = (-0.055f64).exp() / (1.0 + (4.0 / 3.0) * (-0.06125f64).exp());
        assert_abs_diff_eq!(h_of_w(0.0, 1.0, &d, 0.05), expected, epsilon = 1e-14);
        assert_abs_diff_eq!(expected, 0.419_891_679_320, epsilon = 1e-9);
    }

    #[test]
    fn h_degenerate_limits() {
        // tau -> 0: all exponents vanish, H -> 1/(1+phi)
        let (_, d) = defaults();
        assert_abs_diff_eq!(h_of_w(0.0, 1e-14, &d, 0.05), 1.0 / (1.0 + d.phi), epsilon = 1e-10);
        // theta_l = 0 and phi -> 0: H = exp(-r tau)
        let d0 = DerivedParams {
            theta_l: 0.0,
            big_theta: 0.35,
            mu_hat0: 0.07,
            phi: 0.0,
        };
        assert_abs_diff_eq!(h_of_w(1.7, 2.0, &d0, 0.05), (-0.1f64).exp(), epsilon = 1e-14);
    }

    #[test]
    fn psi_weight_basics() {
        let (_, d) = defaults();
        let d0 = DerivedParams { phi: 0.0, ..d };
        assert_eq!(f_weight(1.3, 1.0, &d0), 1.0);
        // identity point: phi exp(Theta w - Theta^2 tau/2) = phi
        let w_id = 0.5 * d.big_theta * 1.0;
        assert_abs_diff_eq!(f_weight(w_id, 1.0, &d), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn f_weight_has_unit_mean() {
        let (p, d) = defaults();
        let spec = QuadratureSpec::default();
        let k = MeasureKernel::terminal(&p, &d);
        let mean = q_expect(|w| k.psi_weight(w), p.t_horizon, &spec, &[]).unwrap();
        assert_abs_diff_eq!(mean, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn h_sup_is_interior_for_defaults() {
        let (p, d) = defaults();
        let spec = QuadratureSpec::default();
        let k = MeasureKernel::terminal(&p, &d);
        let (arg, sup) = k.h_sup(&spec);
        // stationarity of log H: theta_l + Theta s(w) = 0 with s the logistic term
        assert_abs_diff_eq!(arg, -3.264_922_4, epsilon = 1e-6);
        assert_abs_diff_eq!(sup, 0.487_744_065_6, epsilon = 1e-9);
    }

    #[test]
    fn breakpoints_match_dense_scan_oracle() {
        let (p, d) = defaults();
        let spec = QuadratureSpec::default();
        let k = MeasureKernel::terminal(&p, &d);
        let found = k.indicator_breakpoints(0.42, &spec);

        // brute-force oracle: 10^6-interval scan for sign changes of H - 0.42
        let half = k.domain_half_width(&spec);
        let n = 1_000_000;
        let mut oracle = Vec::new();
        let mut prev = k.h(-half) - 0.42;
        for i in 1..=n {
            let w = -half + (2.0 * half) * i as f64 / n as f64;
            let cur = k.h(w) - 0.42;
            if prev.signum() != cur.signum() {
                oracle.push(w);
            }
            prev = cur;
        }
        assert_eq!(found.len(), oracle.len());
        assert_eq!(found.len(), 2);
        for (a, b) in found.iter().zip(oracle.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 2.0 * half / n as f64 + 1e-9);
        }
    }

    #[test]
    fn breakpoints_empty_above_sup() {
        let (p, d) = defaults();
        let spec = QuadratureSpec::default();
        let k = MeasureKernel::terminal(&p, &d);
        let (_, sup) = k.h_sup(&spec);
        assert!(k.indicator_breakpoints(sup * 1.01, &spec).is_empty());
    }

    #[test]
    fn degenerate_kernel_flags_and_returns_empty() {
        let d0 = DerivedParams {
            theta_l: 0.0,
            big_theta: 0.35,
            mu_hat0: 0.07,
            phi: 0.0,
        };
        let k = MeasureKernel::new(1.0, 0.0, &d0, 0.05);
        assert!(k.is_degenerate());
        assert!(k
            .indicator_breakpoints((-0.05f64).exp(), &QuadratureSpec::default())
            .is_empty());
    }

    #[test]
    fn positivity_of_kernels() {
        let (p, d) = defaults();
        let k = MeasureKernel::terminal(&p, &d);
        for i in 0..200 {
            let w = -8.0 + 16.0 * i as f64 / 199.0;
            assert!(k.h(w) > 0.0);
            assert!(k.psi_weight(w) > 0.0);
        }
    }
}
