//! Exact solver: quantile threshold and critical wealth, feasibility
//! classification, budget-equation solves, the four-step multiplier
//! algorithm, and the semi-closed dual value / constraint functions.
//!
//! Everything here reduces to one-dimensional expectations of the kernel
//! pair (H, Psi) against a centered normal law, so the whole solve is
//! deterministic quadrature plus bisection.

use serde::{Deserialize, Serialize};

use crate::error::{QvarError, Result};
use crate::model::{derive_params, DerivedParams, MeasureKernel, ModelParams};
use crate::quad::{self, QuadratureSpec};
use crate::utility::{compute_knots, ConcavifiedUtility, EnvelopeCase, UtilitySpec};

/// Feasibility of the constrained problem at a given initial wealth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feasibility {
    Feasible,
    Boundary,
    Infeasible,
}

/// Terminal wealth profile as a function of the kernel value H, with the
/// realized dual cutoffs in H-units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "snake_case")]
pub enum WealthForm {
    /// X = (theta + I1(Y)) on {H <= h_gain}, else 0; the multiplier is zero.
    Unconstrained { h_gain: f64 },
    /// X = (theta + I1(Y)) on {H < h_gain}, else 0; h_gain equals the
    /// quantile threshold, which pins c_{z0} = y0 (1+phi) H*.
    OneSegmentBinding { h_gain: f64 },
    /// X = (theta + I1(Y)) on {H < h_gain}, L on {h_gain <= H < h_floor},
    /// else 0; h_floor equals the quantile threshold, which pins k_lambda.
    TwoSegmentBinding { h_gain: f64, h_floor: f64 },
    /// X = L on {H < h_floor}, else 0; boundary wealth, multiplier infinite.
    FloorOnly { h_floor: f64 },
}

impl WealthForm {
    pub fn tag(&self) -> &'static str {
        match self {
            WealthForm::Unconstrained { .. } => "unconstrained",
            WealthForm::OneSegmentBinding { .. } => "one_segment_binding",
            WealthForm::TwoSegmentBinding { .. } => "two_segment_binding",
            WealthForm::FloorOnly { .. } => "floor_only",
        }
    }

    fn cutoffs(&self) -> Vec<f64> {
        match *self {
            WealthForm::Unconstrained { h_gain } | WealthForm::OneSegmentBinding { h_gain } => {
                vec![h_gain]
            }
            WealthForm::TwoSegmentBinding { h_gain, h_floor } => vec![h_gain, h_floor],
            WealthForm::FloorOnly { h_floor } => vec![h_floor],
        }
    }
}

/// Statistics of a terminal wealth profile under the physical measure.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WealthStats {
    /// True expected utility E[U(X)].
    pub u: f64,
    /// Concavified value E[U^c_lambda(X)]; absent for the floor-only wealth
    /// where the multiplier is infinite.
    pub u_c: Option<f64>,
    /// P(X = L).
    pub p_at_l: f64,
    /// P(X = 0).
    pub p_at_0: f64,
    /// P(X >= L).
    pub p_ge_l: f64,
}

mod ext_real {
    use serde::Serializer;

    /// Serializes a possibly-infinite nonnegative value; JSON has no
    /// infinity literal so the limit case becomes the string "inf".
    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str("inf")
        }
    }
}

/// Output of one constrained solve.
#[derive(Debug, Clone, Serialize)]
pub struct Solution {
    pub epsilon: f64,
    pub x0: f64,
    pub feasibility: Feasibility,
    /// Critical wealth below which the problem is infeasible.
    pub x_hat: f64,
    /// Optimal multiplier; infinite only for the boundary wealth.
    #[serde(serialize_with = "ext_real::serialize")]
    pub lambda_star: f64,
    /// Initial dual value; infinite only for the boundary wealth.
    #[serde(serialize_with = "ext_real::serialize")]
    pub y0: f64,
    pub form: WealthForm,
    #[serde(flatten)]
    pub stats: WealthStats,
    /// E^Q[F 1{X >= L}] - (1 - epsilon); nonnegative up to tolerance.
    pub constraint_slack: f64,
    /// lambda * slack; complementary slackness residual.
    pub slackness_residual: f64,
}

/// Result of a constrained solve: either a solution or a typed infeasibility
/// record carrying the critical wealth.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SolveOutcome {
    Solved(Solution),
    Infeasible { epsilon: f64, x0: f64, x_hat: f64 },
}

impl SolveOutcome {
    pub fn solution(&self) -> Option<&Solution> {
        match self {
            SolveOutcome::Solved(s) => Some(s),
            SolveOutcome::Infeasible { .. } => None,
        }
    }
}

/// Absolute tolerance for detecting the boundary wealth x0 = x_hat.
const BOUNDARY_TOL: f64 = 1e-9;
/// Relative slack applied when a step acceptance inequality holds with
/// equality, matching the half-open branch conventions.
const ACCEPT_TOL: f64 = 1e-12;

/// Exact solver context: model constants, envelope knots, and the terminal
/// measure kernel. Immutable after construction; solves are pure.
#[derive(Debug, Clone)]
pub struct ExactSolver {
    pub params: ModelParams,
    pub derived: DerivedParams,
    pub knots: ConcavifiedUtility,
    pub quad: QuadratureSpec,
    kernel: MeasureKernel,
    h_sup: f64,
}

impl ExactSolver {
    pub fn new(
        params: &ModelParams,
        utility: &UtilitySpec,
        quad: &QuadratureSpec,
    ) -> Result<Self> {
        let derived = derive_params(params)?;
        quad.validate()?;
        if (utility.theta - params.theta).abs() > 1e-12
            || (utility.floor - params.floor).abs() > 1e-12
        {
            return Err(QvarError::InvalidParameter(
                "utility and model disagree on theta or the floor".into(),
            ));
        }
        let knots = compute_knots(utility)?;
        Self::from_parts(*params, derived, knots, *quad)
    }

    /// Assembles a solver from already-derived pieces; used by tests that
    /// need non-standard measure constants.
    pub fn from_parts(
        params: ModelParams,
        derived: DerivedParams,
        knots: ConcavifiedUtility,
        quad: QuadratureSpec,
    ) -> Result<Self> {
        let kernel = MeasureKernel::terminal(&params, &derived);
        if kernel.is_degenerate() {
            return Err(QvarError::DegenerateMarket);
        }
        let (_, h_sup) = kernel.h_sup(&quad);
        Ok(Self {
            params,
            derived,
            knots,
            quad,
            kernel,
            h_sup,
        })
    }

    fn one_plus_phi(&self) -> f64 {
        1.0 + self.derived.phi
    }

    /// Supremum of H over the truncated terminal domain.
    pub fn h_sup(&self) -> f64 {
        self.h_sup
    }

    /// E^Q[F g(H)] shorthand over the terminal law.
    fn expect_weighted<G>(&self, g: G, breakpoints: &[f64]) -> Result<f64>
    where
        G: Fn(f64) -> f64,
    {
        let k = &self.kernel;
        quad::q_expect(
            |w| k.psi_weight(w) * g(k.h(w)),
            self.params.t_horizon,
            &self.quad,
            breakpoints,
        )
    }

    fn breakpoints_for_levels(&self, levels: &[f64]) -> Vec<f64> {
        let mut out = Vec::new();
        for &level in levels {
            if level > 0.0 && level.is_finite() {
                out.extend(self.kernel.indicator_breakpoints(level, &self.quad));
            }
        }
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out
    }

    /// P under the physical measure of {H <= level}, as a Q-expectation
    /// weighted by F.
    pub fn prob_h_below(&self, level: f64) -> Result<f64> {
        if level <= 0.0 {
            return Ok(0.0);
        }
        if !level.is_finite() || level > self.h_sup {
            return Ok(1.0);
        }
        let bps = self.breakpoints_for_levels(&[level]);
        self.expect_weighted(|h| if h <= level { 1.0 } else { 0.0 }, &bps)
    }

    /// Quantile threshold H*_eps solving E^Q[F 1{H <= H*}] = 1 - eps.
    /// Returns +infinity at eps = 0 (the constraint must hold surely) and 0
    /// at eps = 1 (no constraint).
    pub fn solve_h_star(&self, epsilon: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(QvarError::Domain(format!(
                "epsilon must lie in [0,1], got {epsilon}"
            )));
        }
        if epsilon <= 0.0 {
            return Ok(f64::INFINITY);
        }
        if epsilon >= 1.0 {
            return Ok(0.0);
        }
        let target = 1.0 - epsilon;
        let g = |h: f64| self.prob_h_below(h).unwrap_or(f64::NAN) - target;
        let lo = self.h_sup * 1e-12;
        let hi = self.h_sup * (1.0 - 1e-13);
        quad::bisect(g, lo, hi, self.h_sup * 1e-14, 250)
    }

    /// The multiplier algebra needs a finite threshold even when the
    /// constraint binds surely; the cap is the essential supremum of H,
    /// nudged up so the floor indicator covers the whole domain.
    fn h_star_effective(&self, epsilon: f64) -> Result<f64> {
        let h = self.solve_h_star(epsilon)?;
        Ok(if h.is_finite() {
            h
        } else {
            self.h_sup * (1.0 + 1e-9)
        })
    }

    /// Critical wealth: cost of delivering the floor exactly on the cheapest
    /// feasible set.
    pub fn x_hat(&self, epsilon: f64) -> Result<f64> {
        if epsilon >= 1.0 {
            return Ok(0.0);
        }
        let h_star = self.h_star_effective(epsilon)?;
        let bps = self.breakpoints_for_levels(&[h_star]);
        let scale = self.params.floor * self.one_plus_phi();
        self.expect_weighted(|h| if h < h_star { scale * h } else { 0.0 }, &bps)
    }

    /// Classifies x0 against the critical wealth.
    pub fn classify_feasibility(&self, x0: f64, epsilon: f64) -> Result<Feasibility> {
        let x_hat = self.x_hat(epsilon)?;
        Ok(if (x0 - x_hat).abs() <= BOUNDARY_TOL {
            Feasibility::Boundary
        } else if x0 > x_hat {
            Feasibility::Feasible
        } else {
            Feasibility::Infeasible
        })
    }

    /// Terminal wealth at kernel value h for a given profile and dual start.
    fn wealth_at(&self, form: &WealthForm, y0: f64, h: f64) -> f64 {
        let gain = |h: f64| {
            let y = y0 * self.one_plus_phi() * h;
            self.params.theta + self.knots.spec.inverse_marginal_i1(y).unwrap_or(0.0)
        };
        match *form {
            WealthForm::Unconstrained { h_gain } => {
                if h <= h_gain {
                    gain(h)
                } else {
                    0.0
                }
            }
            WealthForm::OneSegmentBinding { h_gain } => {
                if h < h_gain {
                    gain(h)
                } else {
                    0.0
                }
            }
            WealthForm::TwoSegmentBinding { h_gain, h_floor } => {
                if h < h_gain.min(h_floor) {
                    gain(h)
                } else if h < h_floor {
                    self.params.floor
                } else {
                    0.0
                }
            }
            WealthForm::FloorOnly { h_floor } => {
                if h < h_floor {
                    self.params.floor
                } else {
                    0.0
                }
            }
        }
    }

    /// Budget functional f(y0) = E^Q[F X (1+phi) H] for the given profile.
    pub fn budget_value(&self, y0: f64, form: &WealthForm) -> Result<f64> {
        if !(y0 > 0.0) {
            return Err(QvarError::Domain(format!("y0 must be positive, got {y0}")));
        }
        let bps = self.breakpoints_for_levels(&form.cutoffs());
        let scale = self.one_plus_phi();
        self.expect_weighted(|h| self.wealth_at(form, y0, h) * scale * h, &bps)
    }

    /// Solves the binding budget constraint f(y0) = x0 by bisection on
    /// log y0, using that f is strictly decreasing.
    pub fn solve_y0(&self, form: &WealthForm, x0: f64) -> Result<f64> {
        const LOG_LO: f64 = -13.815_510_557_964_274; // ln 1e-6
        const LOG_HI: f64 = 13.815_510_557_964_274; // ln 1e6
        let f = |ln_y: f64| self.budget_value(ln_y.exp(), form).unwrap_or(f64::NAN) - x0;
        let f_lo = f(LOG_LO);
        let f_hi = f(LOG_HI);
        if !(f_lo > 0.0 && f_hi < 0.0) {
            return Err(QvarError::BudgetOutOfRange { target: x0 });
        }
        let ln_y = quad::bisect(f, LOG_LO, LOG_HI, 1e-14, 250)?;
        let y0 = ln_y.exp();
        let residual = (self.budget_value(y0, form)? - x0).abs();
        if residual > 1e-9 * x0.max(1.0) {
            return Err(QvarError::BracketFailure(format!(
                "budget residual {residual} too large at y0 = {y0}"
            )));
        }
        Ok(y0)
    }

    /// Physical-measure statistics of a wealth profile, all by quadrature.
    pub fn wealth_stats(&self, form: &WealthForm, y0: f64, lambda: f64) -> Result<WealthStats> {
        let bps = self.breakpoints_for_levels(&form.cutoffs());
        let spec = &self.knots.spec;
        let u = self.expect_weighted(|h| spec.eval_u(self.wealth_at(form, y0, h)), &bps)?;
        let (p_at_l, p_at_0, p_ge_l) = match *form {
            WealthForm::Unconstrained { h_gain } => {
                let p_gain = self.expect_weighted(|h| f64::from(h <= h_gain), &bps)?;
                (0.0, 1.0 - p_gain, p_gain)
            }
            WealthForm::OneSegmentBinding { h_gain } => {
                let p_gain = self.expect_weighted(|h| f64::from(h < h_gain), &bps)?;
                (0.0, 1.0 - p_gain, p_gain)
            }
            WealthForm::TwoSegmentBinding { h_gain, h_floor } => {
                let p_gain = self.expect_weighted(|h| f64::from(h < h_gain.min(h_floor)), &bps)?;
                let p_below = self.expect_weighted(|h| f64::from(h < h_floor), &bps)?;
                (p_below - p_gain, 1.0 - p_below, p_below)
            }
            WealthForm::FloorOnly { h_floor } => {
                let p_floor = self.expect_weighted(|h| f64::from(h < h_floor), &bps)?;
                (p_floor, 1.0 - p_floor, p_floor)
            }
        };
        let u_c = if lambda.is_finite() {
            let case = self.knots.case(lambda)?;
            Some(self.expect_weighted(
                |h| {
                    self.knots
                        .envelope_with(&case, self.wealth_at(form, y0, h))
                },
                &bps,
            )?)
        } else {
            None
        };
        Ok(WealthStats {
            u,
            u_c,
            p_at_l,
            p_at_0,
            p_ge_l,
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        &self,
        epsilon: f64,
        x0: f64,
        x_hat: f64,
        feasibility: Feasibility,
        lambda: f64,
        y0: f64,
        form: WealthForm,
    ) -> Result<Solution> {
        let stats = self.wealth_stats(&form, y0, lambda)?;
        let slack = stats.p_ge_l - (1.0 - epsilon);
        let residual = if lambda.is_finite() {
            lambda * slack
        } else {
            slack
        };
        Ok(Solution {
            epsilon,
            x0,
            feasibility,
            x_hat,
            lambda_star: lambda,
            y0,
            form,
            stats,
            constraint_slack: slack,
            slackness_residual: residual,
        })
    }

    /// The four-step exact algorithm. Step 0 classifies feasibility, step 1
    /// tries the two-segment binding profile, step 2 the one-segment binding
    /// profile, and step 3 falls back to the unconstrained solution.
    pub fn lagrange_solve(&self, x0: f64, epsilon: f64) -> Result<SolveOutcome> {
        if !(x0 > 0.0) {
            return Err(QvarError::Domain(format!("x0 must be positive, got {x0}")));
        }
        let spec = &self.knots.spec;
        let h_star = self.h_star_effective(epsilon)?;
        let x_hat = self.x_hat(epsilon)?;
        let one_plus_phi = self.one_plus_phi();

        // step 0: feasibility gate
        if (x0 - x_hat).abs() <= BOUNDARY_TOL {
            let form = WealthForm::FloorOnly { h_floor: h_star };
            let sol = self.assemble(
                epsilon,
                x0,
                x_hat,
                Feasibility::Boundary,
                f64::INFINITY,
                f64::INFINITY,
                form,
            )?;
            return Ok(SolveOutcome::Solved(sol));
        }
        if x0 < x_hat {
            return Ok(SolveOutcome::Infeasible { epsilon, x0, x_hat });
        }

        // step 1: two-segment binding profile, k_lambda = y0 (1+phi) H*
        if h_star > 0.0 {
            let trial = |y0: f64| WealthForm::TwoSegmentBinding {
                h_gain: self.knots.c_z_tilde / (y0 * one_plus_phi),
                h_floor: h_star,
            };
            if let Ok(y0) = self.solve_y0_moving(trial, x0) {
                let accept = self.knots.c_z_tilde / (h_star * one_plus_phi);
                if y0 > accept * (1.0 - ACCEPT_TOL) {
                    let k_lambda = y0 * one_plus_phi * h_star;
                    let lambda = k_lambda * spec.floor + spec.u2(spec.theta - spec.floor)
                        - spec.u2(spec.theta);
                    let form = trial(y0);
                    let sol = self.assemble(
                        epsilon,
                        x0,
                        x_hat,
                        Feasibility::Feasible,
                        lambda,
                        y0,
                        form,
                    )?;
                    return Ok(SolveOutcome::Solved(sol));
                }
            }

            // step 2: one-segment binding profile, c_{z0} = y0 (1+phi) H*
            let form = WealthForm::OneSegmentBinding { h_gain: h_star };
            if let Ok(y0) = self.solve_y0(&form, x0) {
                let accept = self.knots.c_z / (h_star * one_plus_phi);
                if y0 > accept * (1.0 + ACCEPT_TOL) {
                    let c_zt0 = y0 * one_plus_phi * h_star;
                    let z0 = spec.theta + spec.inverse_marginal_i1(c_zt0)?;
                    let lambda = z0 * c_zt0 - spec.u1(z0 - spec.theta) - spec.u2(spec.theta);
                    let sol = self.assemble(
                        epsilon,
                        x0,
                        x_hat,
                        Feasibility::Feasible,
                        lambda,
                        y0,
                        form,
                    )?;
                    return Ok(SolveOutcome::Solved(sol));
                }
            }
        }

        // step 3: unconstrained solution, lambda = 0
        let y0 = self.solve_y0_moving(
            |y0| WealthForm::Unconstrained {
                h_gain: self.knots.c_z / (y0 * one_plus_phi),
            },
            x0,
        )?;
        let form = WealthForm::Unconstrained {
            h_gain: self.knots.c_z / (y0 * one_plus_phi),
        };
        let sol = self.assemble(epsilon, x0, x_hat, Feasibility::Feasible, 0.0, y0, form)?;
        Ok(SolveOutcome::Solved(sol))
    }

    /// Budget bisection for profiles whose gain cutoff moves with y0.
    fn solve_y0_moving<F>(&self, form_of: F, x0: f64) -> Result<f64>
    where
        F: Fn(f64) -> WealthForm,
    {
        const LOG_LO: f64 = -13.815_510_557_964_274;
        const LOG_HI: f64 = 13.815_510_557_964_274;
        let f = |ln_y: f64| {
            let y0 = ln_y.exp();
            self.budget_value(y0, &form_of(y0)).unwrap_or(f64::NAN) - x0
        };
        if !(f(LOG_LO) > 0.0 && f(LOG_HI) < 0.0) {
            return Err(QvarError::BudgetOutOfRange { target: x0 });
        }
        let ln_y = quad::bisect(f, LOG_LO, LOG_HI, 1e-14, 250)?;
        Ok(ln_y.exp())
    }

    /// Dual value v^c_lambda(t, y, mu_hat): one-dimensional integral of the
    /// restarted kernel against the conjugate.
    pub fn dual_value(&self, t: f64, y: f64, mu_hat: f64, lambda: f64) -> Result<f64> {
        if !(y > 0.0) {
            return Err(QvarError::Domain(format!("y must be positive, got {y}")));
        }
        let kernel = MeasureKernel::at_time(t, mu_hat, &self.params, &self.derived)?;
        let case = self.knots.case(lambda)?;
        let one_plus_phi = 1.0 + kernel.phi;
        let kink_levels: Vec<f64> = self
            .conjugate_kinks(&case)
            .iter()
            .map(|k| k / (y * one_plus_phi))
            .collect();
        let mut bps = Vec::new();
        for level in kink_levels {
            bps.extend(kernel.indicator_breakpoints(level, &self.quad));
        }
        bps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        quad::q_expect(
            |w| {
                let arg = y * one_plus_phi * kernel.h(w);
                kernel.psi_weight(w) * self.knots.v_dual_with(&case, arg).unwrap_or(f64::NAN)
            },
            kernel.tau,
            &self.quad,
            &bps,
        )
    }

    /// Dual constraint g_lambda(t, y, mu_hat) = P(x*(Y(T)) >= L | state).
    pub fn dual_constraint(&self, t: f64, y: f64, mu_hat: f64, lambda: f64) -> Result<f64> {
        if !(y > 0.0) {
            return Err(QvarError::Domain(format!("y must be positive, got {y}")));
        }
        let kernel = MeasureKernel::at_time(t, mu_hat, &self.params, &self.derived)?;
        let case = self.knots.case(lambda)?;
        let one_plus_phi = 1.0 + kernel.phi;
        // x* >= L exactly when the dual state stays below the floor cutoff
        let cut = match case {
            EnvelopeCase::TwoSegment { k_lambda } => k_lambda,
            EnvelopeCase::OneSegment { c_z_tilde0, .. } => c_z_tilde0,
        } / (y * one_plus_phi);
        let bps = kernel.indicator_breakpoints(cut, &self.quad);
        quad::q_expect(
            |w| kernel.psi_weight(w) * f64::from(kernel.h(w) < cut),
            kernel.tau,
            &self.quad,
            &bps,
        )
    }

    fn conjugate_kinks(&self, case: &EnvelopeCase) -> Vec<f64> {
        match *case {
            EnvelopeCase::TwoSegment { k_lambda } => vec![self.knots.c_z_tilde, k_lambda],
            EnvelopeCase::OneSegment { c_z_tilde0, .. } => vec![c_z_tilde0],
        }
    }

    /// Region boundaries of the optimal profile in epsilon, at a given dual
    /// start: eps* uses the global knot, eps_* the floor-anchored knot.
    pub fn epsilon_thresholds(&self, y0: f64) -> Result<(f64, f64)> {
        if !(y0 > 0.0) {
            return Err(QvarError::Domain(format!("y0 must be positive, got {y0}")));
        }
        let one_plus_phi = self.one_plus_phi();
        let eps_star = 1.0 - self.prob_h_below(self.knots.c_z / (y0 * one_plus_phi))?;
        let eps_lower = 1.0 - self.prob_h_below(self.knots.c_z_tilde / (y0 * one_plus_phi))?;
        Ok((eps_star, eps_lower))
    }

    /// Fixed-multiplier solve: budget-matched dual start and the profile
    /// implied by the envelope case of lambda.
    pub fn solve_for_lambda(&self, lambda: f64, x0: f64) -> Result<(f64, WealthForm)> {
        let case = self.knots.case(lambda)?;
        let one_plus_phi = self.one_plus_phi();
        let form_of = |y0: f64| match case {
            EnvelopeCase::TwoSegment { k_lambda } => WealthForm::TwoSegmentBinding {
                h_gain: self.knots.c_z_tilde / (y0 * one_plus_phi),
                h_floor: k_lambda / (y0 * one_plus_phi),
            },
            EnvelopeCase::OneSegment { c_z_tilde0, .. } => {
                if lambda == 0.0 {
                    WealthForm::Unconstrained {
                        h_gain: self.knots.c_z / (y0 * one_plus_phi),
                    }
                } else {
                    WealthForm::OneSegmentBinding {
                        h_gain: c_z_tilde0 / (y0 * one_plus_phi),
                    }
                }
            }
        };
        let y0 = self.solve_y0_moving(form_of, x0)?;
        Ok((y0, form_of(y0)))
    }

    /// Constraint level at which the multiplier first vanishes: one minus
    /// the floor-clearing probability of the unconstrained solution.
    pub fn epsilon0(&self, x0: f64) -> Result<f64> {
        let (y0, form) = self.solve_for_lambda(0.0, x0)?;
        let stats = self.wealth_stats(&form, y0, 0.0)?;
        Ok(1.0 - stats.p_ge_l)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn solver() -> ExactSolver {
        ExactSolver::new(
            &ModelParams::default(),
            &UtilitySpec::default(),
            &QuadratureSpec::default(),
        )
        .unwrap()
    }

    #[test]
    fn h_star_limits() {
        let s = solver();
        assert_eq!(s.solve_h_star(1.0).unwrap(), 0.0);
        assert!(s.solve_h_star(0.0).unwrap().is_infinite());
        assert!(s.solve_h_star(-0.1).is_err());
    }

    #[test]
    fn h_star_solves_the_quantile_equation() {
        let s = solver();
        for &eps in &[0.05, 0.1, 0.2, 0.35, 0.5, 0.9] {
            let h = s.solve_h_star(eps).unwrap();
            assert_abs_diff_eq!(s.prob_h_below(h).unwrap(), 1.0 - eps, epsilon = 1e-10);
        }
    }

    #[test]
    fn h_star_against_monte_carlo_oracle() {
        // independent check of the quadrature route: sample the terminal
        // Brownian value directly and average Psi 1{H <= H*}
        let s = solver();
        let h_star = s.solve_h_star(0.2).unwrap();
        let kernel = MeasureKernel::terminal(&s.params, &s.derived);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 10_000_000usize;
        let sqrt_t = s.params.t_horizon.sqrt();
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let w: f64 = rng.sample::<f64, _>(StandardNormal) * sqrt_t;
            let v = if kernel.h(w) <= h_star {
                kernel.psi_weight(w)
            } else {
                0.0
            };
            sum += v;
            sum_sq += v * v;
        }
        let mean = sum / n as f64;
        let var = (sum_sq / n as f64 - mean * mean).max(0.0);
        let se = (var / n as f64).sqrt();
        assert!(
            (mean - 0.8).abs() <= 3.0 * se,
            "MC {mean} vs 0.8 (3se = {})",
            3.0 * se
        );
    }

    #[test]
    fn x_hat_values() {
        let s = solver();
        assert_eq!(s.x_hat(1.0).unwrap(), 0.0);
        // eps = 0: discounted floor
        let discounted = s.params.floor * (-s.params.r * s.params.t_horizon).exp();
        assert_abs_diff_eq!(s.x_hat(0.0).unwrap(), discounted, epsilon = 1e-9);
        // frozen quadrature value; the published rounding is 0.66
        assert_abs_diff_eq!(s.x_hat(0.2).unwrap(), 0.663_175_59, epsilon = 1e-6);
    }

    #[test]
    fn feasibility_classification() {
        let s = solver();
        assert_eq!(
            s.classify_feasibility(0.73, 0.2).unwrap(),
            Feasibility::Feasible
        );
        assert_eq!(
            s.classify_feasibility(0.6, 0.2).unwrap(),
            Feasibility::Infeasible
        );
        assert_eq!(
            s.classify_feasibility(5.0, 1.0).unwrap(),
            Feasibility::Feasible
        );
        let x_hat = s.x_hat(0.2).unwrap();
        assert_eq!(
            s.classify_feasibility(x_hat + 1e-12, 0.2).unwrap(),
            Feasibility::Boundary
        );
    }

    #[test]
    fn budget_is_strictly_decreasing() {
        let s = solver();
        let form = WealthForm::Unconstrained { h_gain: 0.45 };
        let mut prev = f64::INFINITY;
        for i in 1..=20 {
            let y0 = 0.2 * i as f64;
            let f = s.budget_value(y0, &form).unwrap();
            assert!(f < prev, "budget not decreasing at y0 = {y0}");
            prev = f;
        }
    }

    #[test]
    fn floor_only_budget_ignores_y0() {
        let s = solver();
        let h_star = s.solve_h_star(0.2).unwrap();
        let form = WealthForm::FloorOnly { h_floor: h_star };
        let a = s.budget_value(0.3, &form).unwrap();
        let b = s.budget_value(30.0, &form).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        assert_abs_diff_eq!(a, s.x_hat(0.2).unwrap(), epsilon = 1e-10);
    }

    #[test]
    fn two_segment_budget_tends_to_x_hat() {
        let s = solver();
        let h_star = s.solve_h_star(0.2).unwrap();
        let x_hat = s.x_hat(0.2).unwrap();
        let f = |y0: f64| {
            let form = WealthForm::TwoSegmentBinding {
                h_gain: s.knots.c_z_tilde / (y0 * s.one_plus_phi()),
                h_floor: h_star,
            };
            s.budget_value(y0, &form).unwrap()
        };
        assert!((f(1e4) - x_hat).abs() < 1e-3);
        assert!((f(1e5) - x_hat).abs() < 1e-4);
    }

    #[test]
    fn solve_y0_contract() {
        let s = solver();
        // unconstrained budget at the defaults (eps = 1 solution)
        let y0 = s
            .solve_y0_moving(
                |y0| WealthForm::Unconstrained {
                    h_gain: s.knots.c_z / (y0 * s.one_plus_phi()),
                },
                1.0,
            )
            .unwrap();
        assert_abs_diff_eq!(y0, 0.944_9, epsilon = 5e-4); // printed rounding: 0.945
        let form = WealthForm::Unconstrained {
            h_gain: s.knots.c_z / (y0 * s.one_plus_phi()),
        };
        assert!((s.budget_value(y0, &form).unwrap() - 1.0).abs() <= 1e-9);

        // doubling x0 strictly decreases y0
        let y0_rich = s
            .solve_y0_moving(
                |y0| WealthForm::Unconstrained {
                    h_gain: s.knots.c_z / (y0 * s.one_plus_phi()),
                },
                2.0,
            )
            .unwrap();
        assert!(y0_rich < y0);
    }

    #[test]
    fn solve_y0_range_error() {
        let s = solver();
        // floor-only budget cannot reach wealth above x_hat
        let h_star = s.solve_h_star(0.2).unwrap();
        let form = WealthForm::FloorOnly { h_floor: h_star };
        assert!(matches!(
            s.solve_y0(&form, 1.0),
            Err(QvarError::BudgetOutOfRange { .. })
        ));
    }

    /// Frozen quadrature solves for the default configuration. The printed
    /// reference rounding (lambda*, y0, u, u^c, atoms) is listed alongside.
    #[test]
    fn lagrange_solve_reference_rows() {
        let s = solver();

        // eps = 0.1 -> two-segment binding (printed: 1.452, 1.794, -0.411, 0.896, 0.5, 0.1)
        let sol = s.lagrange_solve(1.0, 0.1).unwrap();
        let sol = sol.solution().unwrap();
        assert!(matches!(sol.form, WealthForm::TwoSegmentBinding { .. }));
        assert_abs_diff_eq!(sol.lambda_star, 1.452_4, epsilon = 5e-4);
        assert_abs_diff_eq!(sol.y0, 1.794_2, epsilon = 5e-4);
        assert_abs_diff_eq!(sol.stats.u, -0.410_9, epsilon = 5e-4);
        assert_abs_diff_eq!(sol.stats.u_c.unwrap(), 0.896_3, epsilon = 5e-4);
        assert_abs_diff_eq!(sol.stats.p_at_l, 0.5, epsilon = 1e-3);
        assert_abs_diff_eq!(sol.stats.p_at_0, 0.1, epsilon = 1e-6);
        assert!(sol.slackness_residual.abs() <= 1e-8);

        // eps = 0 -> surely-binding floor (printed: 1.659, 1.885, -0.564, 1.095, 0.751, 0)
        let sol = s.lagrange_solve(1.0, 0.0).unwrap();
        let sol = sol.solution().unwrap();
        assert!(matches!(sol.form, WealthForm::TwoSegmentBinding { .. }));
        assert_abs_diff_eq!(sol.lambda_star, 1.659_8, epsilon = 1e-3);
        assert_abs_diff_eq!(sol.y0, 1.885_6, epsilon = 1e-3);
        assert_abs_diff_eq!(sol.stats.p_at_0, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(sol.stats.p_ge_l, 1.0, epsilon = 1e-9);

        // eps = 0.35 -> one-segment binding (printed: 0.483, 1.216, -0.095, 0.219, 0, 0.35)
        let sol = s.lagrange_solve(1.0, 0.35).unwrap();
        let sol = sol.solution().unwrap();
        assert!(matches!(sol.form, WealthForm::OneSegmentBinding { .. }));
        assert_abs_diff_eq!(sol.lambda_star, 0.481_9, epsilon = 1e-3);
        assert_abs_diff_eq!(sol.y0, 1.215_2, epsilon = 1e-3);
        assert_abs_diff_eq!(sol.stats.p_at_0, 0.35, epsilon = 1e-6);
        assert_abs_diff_eq!(sol.stats.p_at_l, 0.0, epsilon = 1e-12);

        // eps = 1 -> unconstrained (printed: 0, 0.945, -0.085, -0.085, 0, 0.395)
        let sol = s.lagrange_solve(1.0, 1.0).unwrap();
        let sol = sol.solution().unwrap();
        assert!(matches!(sol.form, WealthForm::Unconstrained { .. }));
        assert_eq!(sol.lambda_star, 0.0);
        assert_abs_diff_eq!(sol.y0, 0.944_9, epsilon = 5e-4);
        assert_abs_diff_eq!(sol.stats.u, -0.085_7, epsilon = 5e-4);
        assert_abs_diff_eq!(sol.stats.u_c.unwrap(), sol.stats.u, epsilon = 1e-9);
        assert_abs_diff_eq!(sol.stats.p_at_0, 0.395_6, epsilon = 1e-3);
    }

    #[test]
    fn multiplier_positive_in_binding_steps() {
        let s = solver();
        for &eps in &[0.0, 0.05, 0.1, 0.2, 0.3, 0.35] {
            let sol = s.lagrange_solve(1.0, eps).unwrap();
            let sol = sol.solution().unwrap();
            match sol.form {
                WealthForm::Unconstrained { .. } => assert_eq!(sol.lambda_star, 0.0),
                _ => assert!(sol.lambda_star > 0.0, "eps = {eps}"),
            }
        }
    }

    #[test]
    fn infeasible_and_boundary_outcomes() {
        let s = solver();
        match s.lagrange_solve(0.6, 0.2).unwrap() {
            SolveOutcome::Infeasible { x_hat, .. } => {
                assert_abs_diff_eq!(x_hat, 0.663_175_59, epsilon = 1e-6);
            }
            SolveOutcome::Solved(_) => panic!("x0 = 0.6 must be infeasible at eps = 0.2"),
        }
        let x_hat = s.x_hat(0.2).unwrap();
        let sol = s.lagrange_solve(x_hat, 0.2).unwrap();
        let sol = sol.solution().unwrap();
        assert_eq!(sol.feasibility, Feasibility::Boundary);
        assert!(matches!(sol.form, WealthForm::FloorOnly { .. }));
        assert!(sol.lambda_star.is_infinite());
        assert!(sol.y0.is_infinite());
        assert_abs_diff_eq!(sol.stats.p_at_l, 0.8, epsilon = 1e-9);
        assert_abs_diff_eq!(sol.stats.p_at_0, 0.2, epsilon = 1e-9);
        assert!(sol.stats.u_c.is_none());
    }

    #[test]
    fn complementary_slackness_on_a_grid() {
        let s = solver();
        for i in 0..=10 {
            let eps = i as f64 / 10.0;
            let sol = s.lagrange_solve(1.0, eps).unwrap();
            let sol = sol.solution().unwrap();
            assert!(
                sol.constraint_slack >= -1e-8,
                "eps = {eps}: slack {}",
                sol.constraint_slack
            );
            assert!(
                sol.slackness_residual.abs() <= 1e-8,
                "eps = {eps}: residual {}",
                sol.slackness_residual
            );
        }
    }

    #[test]
    fn value_monotonicity_in_epsilon() {
        let s = solver();
        let mut prev_u = f64::NEG_INFINITY;
        let mut prev_lambda = f64::INFINITY;
        for i in 0..=10 {
            let eps = i as f64 / 10.0;
            let sol = s.lagrange_solve(1.0, eps).unwrap();
            let sol = sol.solution().unwrap();
            assert!(sol.stats.u >= prev_u - 1e-9, "u not monotone at eps = {eps}");
            assert!(
                sol.lambda_star <= prev_lambda + 1e-9,
                "lambda* not monotone at eps = {eps}"
            );
            prev_u = sol.stats.u;
            prev_lambda = sol.lambda_star;
        }
    }

    #[test]
    fn dual_value_terminal_and_reduction() {
        let s = solver();
        // t -> T: the integral collapses onto the conjugate
        let case = s.knots.case(0.7).unwrap();
        let v_term = s.knots.v_dual_with(&case, 0.9).unwrap();
        let v = s
            .dual_value(s.params.t_horizon * (1.0 - 1e-9), 0.9, 0.07, 0.7)
            .unwrap();
        assert_abs_diff_eq!(v, v_term, epsilon = 1e-5);

        // constant-H reduction: theta_l = 0 and phi ~ 0 collapse the kernel
        // to the discount factor, so v(t,y) = V(y e^{-r tau})
        let params = ModelParams::default();
        let derived = DerivedParams {
            theta_l: 0.0,
            big_theta: 0.35,
            mu_hat0: 0.030_000_1,
            phi: 1e-9,
        };
        let knots = compute_knots(&UtilitySpec::default()).unwrap();
        let reduced =
            ExactSolver::from_parts(params, derived, knots, QuadratureSpec::default()).unwrap();
        let y = 2.6; // stays beyond every kink along the discounted path
        let case = reduced.knots.case(0.4).unwrap();
        let expect = reduced
            .knots
            .v_dual_with(&case, y * (-0.05f64).exp())
            .unwrap();
        let got = reduced.dual_value(0.0, y, 0.030_000_1, 0.4).unwrap();
        assert_abs_diff_eq!(got, expect, epsilon = 1e-6);
    }

    #[test]
    fn dual_constraint_at_the_optimum() {
        let s = solver();
        let sol = s.lagrange_solve(1.0, 0.1).unwrap();
        let sol = sol.solution().unwrap();
        let g = s
            .dual_constraint(0.0, sol.y0, s.derived.mu_hat0, sol.lambda_star)
            .unwrap();
        assert_abs_diff_eq!(g, 0.9, epsilon = 1e-6);
        // monotone nonincreasing in y
        let mut prev = f64::INFINITY;
        for i in 1..=15 {
            let y = 0.2 * i as f64;
            let g = s.dual_constraint(0.0, y, 0.07, 1.5).unwrap();
            assert!(g <= prev + 1e-10);
            assert!((0.0..=1.0 + 1e-12).contains(&g));
            prev = g;
        }
    }

    #[test]
    fn epsilon_thresholds_order_and_regions() {
        let s = solver();
        for &y0 in &[0.3, 0.9, 1.8, 5.0] {
            let (eps_star, eps_lower) = s.epsilon_thresholds(y0).unwrap();
            assert!(eps_lower <= eps_star + 1e-12);
        }
        // tiny y0 pushes both thresholds to zero
        let (eps_star, eps_lower) = s.epsilon_thresholds(1e-5).unwrap();
        assert!(eps_star < 1e-9 && eps_lower < 1e-9);

        // the solved form matches the epsilon-region classification at the
        // solution's own dual start
        for &eps in &[0.05, 0.2, 0.5, 0.9] {
            let sol = s.lagrange_solve(1.0, eps).unwrap();
            let sol = sol.solution().unwrap();
            let (eps_star, eps_lower) = s.epsilon_thresholds(sol.y0).unwrap();
            match sol.form {
                WealthForm::Unconstrained { .. } => assert!(eps >= eps_star - 1e-9),
                WealthForm::OneSegmentBinding { .. } => {
                    assert!(eps >= eps_lower - 1e-9 && eps < eps_star + 1e-9)
                }
                WealthForm::TwoSegmentBinding { .. } => assert!(eps < eps_lower + 1e-9),
                WealthForm::FloorOnly { .. } => panic!("unexpected boundary form"),
            }
        }
    }

    #[test]
    fn epsilon0_matches_unconstrained_zero_mass() {
        let s = solver();
        let eps0 = s.epsilon0(1.0).unwrap();
        let sol = s.lagrange_solve(1.0, 1.0).unwrap();
        let sol = sol.solution().unwrap();
        assert_abs_diff_eq!(eps0, sol.stats.p_at_0, epsilon = 1e-10);
        // multiplier vanishes exactly beyond eps0
        let above = s.lagrange_solve(1.0, eps0 + 1e-3).unwrap();
        assert_eq!(above.solution().unwrap().lambda_star, 0.0);
        let below = s.lagrange_solve(1.0, eps0 - 1e-3).unwrap();
        assert!(below.solution().unwrap().lambda_star > 0.0);
    }

    #[test]
    fn solve_for_lambda_consistency() {
        let s = solver();
        // reconciles with the constrained solve at its own multiplier
        let sol = s.lagrange_solve(1.0, 0.1).unwrap();
        let sol = sol.solution().unwrap();
        let (y0, form) = s.solve_for_lambda(sol.lambda_star, 1.0).unwrap();
        assert_abs_diff_eq!(y0, sol.y0, epsilon = 1e-7);
        let stats = s.wealth_stats(&form, y0, sol.lambda_star).unwrap();
        assert_abs_diff_eq!(stats.p_ge_l, 0.9, epsilon = 1e-7);
    }

    #[test]
    fn degenerate_market_rejected() {
        let params = ModelParams::default();
        let derived = DerivedParams {
            theta_l: 0.0,
            big_theta: 0.35,
            mu_hat0: 0.03,
            phi: 0.0,
        };
        let knots = compute_knots(&UtilitySpec::default()).unwrap();
        assert!(matches!(
            ExactSolver::from_parts(params, derived, knots, QuadratureSpec::default()),
            Err(QvarError::DegenerateMarket)
        ));
    }

    #[test]
    fn solution_serializes_with_infinite_multiplier() {
        let s = solver();
        let x_hat = s.x_hat(0.2).unwrap();
        let sol = s.lagrange_solve(x_hat, 0.2).unwrap();
        let json = serde_json::to_string(&sol).unwrap();
        assert!(json.contains("\"lambda_star\":\"inf\""));
        assert!(json.contains("\"status\":\"solved\""));
    }
}
