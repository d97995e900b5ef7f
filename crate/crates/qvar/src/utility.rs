//! S-shaped utility, its concave envelope with and without the floor reward
//! term, the pointwise dual maximizer, and the conjugate (dual) function.
//!
//! The utility is fixed to the two-power family U1(x) = x^g1, U2(x) = x^g2 so
//! every envelope knot has a closed-form cross-check; the knot equations are
//! still solved by bracketed bisection so the code stays correct for any
//! exponents in (0, 1).

use serde::{Deserialize, Serialize};

use crate::error::{QvarError, Result};
use crate::quad::bisect;

/// Two-power S-shaped utility specification.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UtilitySpec {
    /// Gain-side power exponent, in (0, 1).
    pub gamma1: f64,
    /// Loss-side power exponent, in (0, 1).
    pub gamma2: f64,
    /// Reference wealth separating losses from gains.
    pub theta: f64,
    /// VaR floor, 0 < L < theta.
    pub floor: f64,
}

impl Default for UtilitySpec {
    fn default() -> Self {
        Self {
            gamma1: 0.5,
            gamma2: 0.3,
            theta: 1.5,
            floor: 0.9,
        }
    }
}

impl UtilitySpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma1 > 0.0 && self.gamma1 < 1.0) {
            return Err(QvarError::InvalidParameter(format!(
                "gamma1 must lie in (0,1), got {}",
                self.gamma1
            )));
        }
        if !(self.gamma2 > 0.0 && self.gamma2 < 1.0) {
            return Err(QvarError::InvalidParameter(format!(
                "gamma2 must lie in (0,1), got {}",
                self.gamma2
            )));
        }
        if !(self.floor > 0.0 && self.floor < self.theta) {
            return Err(QvarError::InvalidParameter(format!(
                "floor must satisfy 0 < L < theta, got L = {}, theta = {}",
                self.floor, self.theta
            )));
        }
        Ok(())
    }

    /// Gain-side utility U1 on the excess over theta.
    pub fn u1(&self, s: f64) -> f64 {
        s.powf(self.gamma1)
    }

    /// Loss-side utility U2 on the shortfall below theta.
    pub fn u2(&self, s: f64) -> f64 {
        s.powf(self.gamma2)
    }

    /// Marginal gain-side utility U1'.
    pub fn du1(&self, s: f64) -> f64 {
        self.gamma1 * s.powf(self.gamma1 - 1.0)
    }

    /// S-shaped utility of terminal wealth.
    pub fn eval_u(&self, x: f64) -> f64 {
        if x < 0.0 {
            f64::NEG_INFINITY
        } else if x < self.theta {
            -self.u2(self.theta - x)
        } else {
            self.u1(x - self.theta)
        }
    }

    /// Inverse of U1': I1(y) = (gamma1 / y)^(1/(1-gamma1)).
    pub fn inverse_marginal_i1(&self, y: f64) -> Result<f64> {
        if !(y > 0.0) {
            return Err(QvarError::Domain(format!(
                "inverse marginal utility needs y > 0, got {y}"
            )));
        }
        Ok((self.gamma1 / y).powf(1.0 / (1.0 - self.gamma1)))
    }
}

/// Envelope knots of the concavified utility, cached with their marginal
/// utilities. `z` is the global envelope knot (lambda = 0, no floor term);
/// `z_tilde` anchors the floor segment.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ConcavifiedUtility {
    pub spec: UtilitySpec,
    pub z: f64,
    pub z_tilde: f64,
    /// c_z = U1'(z - theta).
    pub c_z: f64,
    /// c_zt = U1'(z_tilde - theta).
    pub c_z_tilde: f64,
}

const KNOT_TOL: f64 = 1e-12;

/// Bisection on (theta, theta + b] with doubling bracket expansion; `f` must
/// go from negative near theta to positive for large wealth.
fn solve_knot<F>(spec: &UtilitySpec, f: F) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let lo = spec.theta + 1e-12;
    let mut hi = spec.theta + 10.0 * (spec.theta + 1.0);
    let flo = f(lo);
    let mut fhi = f(hi);
    let mut expansions = 0;
    while flo.signum() == fhi.signum() {
        hi = spec.theta + 2.0 * (hi - spec.theta);
        fhi = f(hi);
        expansions += 1;
        if expansions > 60 {
            return Err(QvarError::BracketFailure(
                "knot equation has no sign change; utility axioms violated".into(),
            ));
        }
    }
    bisect(f, lo, hi, KNOT_TOL, 240)
}

/// Solves the two knot equations and caches the marginal utilities.
pub fn compute_knots(spec: &UtilitySpec) -> Result<ConcavifiedUtility> {
    spec.validate()?;
    let (theta, floor) = (spec.theta, spec.floor);
    let u2_theta = spec.u2(theta);
    let u2_short = spec.u2(theta - floor);

    let z = solve_knot(spec, |x| {
        spec.u1(x - theta) + u2_theta - x * spec.du1(x - theta)
    })?;
    let z_tilde = solve_knot(spec, |x| {
        spec.u1(x - theta) + u2_short - (x - floor) * spec.du1(x - theta)
    })?;

    Ok(ConcavifiedUtility {
        spec: *spec,
        z,
        z_tilde,
        c_z: spec.du1(z - theta),
        c_z_tilde: spec.du1(z_tilde - theta),
    })
}

/// Shape of the concave envelope for a given multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EnvelopeCase {
    /// k_lambda > c_zt: a chord to the floor plus a tangent segment.
    TwoSegment { k_lambda: f64 },
    /// k_lambda <= c_zt: a single chord through the origin region, with
    /// knot z_tilde0 in [z_tilde, z] and its marginal utility.
    OneSegment {
        k_lambda: f64,
        z_tilde0: f64,
        c_z_tilde0: f64,
    },
}

impl ConcavifiedUtility {
    /// Chord slope of the floor reward: (U2(theta) - U2(theta - L) + lambda)/L.
    pub fn k_lambda(&self, lambda: f64) -> f64 {
        let spec = &self.spec;
        (spec.u2(spec.theta) - spec.u2(spec.theta - spec.floor) + lambda) / spec.floor
    }

    /// Multiplier at which the envelope switches between the two cases.
    pub fn case_boundary_lambda(&self) -> f64 {
        let spec = &self.spec;
        self.c_z_tilde * spec.floor - spec.u2(spec.theta) + spec.u2(spec.theta - spec.floor)
    }

    /// Knot of the one-segment envelope, solved on [z_tilde, z].
    pub fn z_tilde0(&self, lambda: f64) -> Result<f64> {
        let k = self.k_lambda(lambda);
        if k > self.c_z_tilde {
            return Err(QvarError::CaseMismatch(format!(
                "z_tilde0 only exists when k_lambda <= c_zt (lambda = {lambda})"
            )));
        }
        if lambda == 0.0 {
            return Ok(self.z);
        }
        let spec = &self.spec;
        let theta = spec.theta;
        let u2_theta = spec.u2(theta);
        let f = |x: f64| spec.u1(x - theta) + u2_theta + lambda - x * spec.du1(x - theta);
        bisect(f, self.z_tilde, self.z, KNOT_TOL, 240)
    }

    /// Classifies the multiplier and precomputes the thresholds the
    /// pointwise maximizer needs.
    pub fn case(&self, lambda: f64) -> Result<EnvelopeCase> {
        if !(lambda >= 0.0) {
            return Err(QvarError::Domain(format!(
                "multiplier must be nonnegative, got {lambda}"
            )));
        }
        let k = self.k_lambda(lambda);
        if k > self.c_z_tilde {
            Ok(EnvelopeCase::TwoSegment { k_lambda: k })
        } else {
            let z0 = self.z_tilde0(lambda)?;
            Ok(EnvelopeCase::OneSegment {
                k_lambda: k,
                z_tilde0: z0,
                c_z_tilde0: self.spec.du1(z0 - self.spec.theta),
            })
        }
    }

    /// Concave envelope of U_lambda for a precomputed case.
    pub fn envelope_with(&self, case: &EnvelopeCase, x: f64) -> f64 {
        let spec = &self.spec;
        if x < 0.0 {
            return f64::NEG_INFINITY;
        }
        match *case {
            EnvelopeCase::TwoSegment { k_lambda } => {
                let lambda = k_lambda * spec.floor - spec.u2(spec.theta)
                    + spec.u2(spec.theta - spec.floor);
                if x < spec.floor {
                    k_lambda * x - spec.u2(spec.theta)
                } else if x < self.z_tilde {
                    self.c_z_tilde * (x - spec.floor) - spec.u2(spec.theta - spec.floor) + lambda
                } else {
                    spec.u1(x - spec.theta) + lambda
                }
            }
            EnvelopeCase::OneSegment {
                k_lambda,
                z_tilde0,
                c_z_tilde0,
            } => {
                let lambda = k_lambda * spec.floor - spec.u2(spec.theta)
                    + spec.u2(spec.theta - spec.floor);
                if x < z_tilde0 {
                    c_z_tilde0 * x - spec.u2(spec.theta)
                } else {
                    spec.u1(x - spec.theta) + lambda
                }
            }
        }
    }

    /// Pointwise maximizer of U^c_lambda(x) - xy over x >= 0. Tie-breaking at
    /// the kinks follows the half-open branch intervals.
    pub fn x_star_with(&self, case: &EnvelopeCase, y: f64) -> Result<f64> {
        if !(y > 0.0) {
            return Err(QvarError::Domain(format!(
                "dual argument must be positive, got {y}"
            )));
        }
        let spec = &self.spec;
        Ok(match *case {
            EnvelopeCase::TwoSegment { k_lambda } => {
                if y < self.c_z_tilde {
                    spec.theta + spec.inverse_marginal_i1(y)?
                } else if y < k_lambda {
                    spec.floor
                } else {
                    0.0
                }
            }
            EnvelopeCase::OneSegment { c_z_tilde0, .. } => {
                if y < c_z_tilde0 {
                    spec.theta + spec.inverse_marginal_i1(y)?
                } else {
                    0.0
                }
            }
        })
    }

    /// Conjugate V^c_lambda(y) = sup_x { U^c_lambda(x) - xy }.
    pub fn v_dual_with(&self, case: &EnvelopeCase, y: f64) -> Result<f64> {
        let x = self.x_star_with(case, y)?;
        Ok(self.envelope_with(case, x) - y * x)
    }

    /// Derivative of the conjugate: -x_star. At the kink points this picks
    /// the same branch as the half-open maximizer intervals.
    pub fn v_dual_derivative_with(&self, case: &EnvelopeCase, y: f64) -> f64 {
        -self.x_star_with(case, y).unwrap_or(0.0)
    }
}

/// Concave envelope of U_lambda, classifying the case on the fly.
pub fn envelope(x: f64, lambda: f64, knots: &ConcavifiedUtility) -> Result<f64> {
    let case = knots.case(lambda)?;
    Ok(knots.envelope_with(&case, x))
}

/// Pointwise dual maximizer x^{*,lambda}(y).
pub fn x_star(y: f64, lambda: f64, knots: &ConcavifiedUtility) -> Result<f64> {
    let case = knots.case(lambda)?;
    knots.x_star_with(&case, y)
}

/// Dual function V^c_lambda(y).
pub fn v_dual(y: f64, lambda: f64, knots: &ConcavifiedUtility) -> Result<f64> {
    let case = knots.case(lambda)?;
    knots.v_dual_with(&case, y)
}

/// Derivative of the dual function, -x^{*,lambda}(y).
pub fn v_dual_derivative(y: f64, lambda: f64, knots: &ConcavifiedUtility) -> Result<f64> {
    let case = knots.case(lambda)?;
    knots.x_star_with(&case, y).map(|x| -x)
}
