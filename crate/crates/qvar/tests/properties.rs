//! Property tests over the spec invariants: envelope structure, conjugate
//! duality, kernel positivity, and quadrature normalization.

use proptest::prelude::*;

use qvar::model::{derive_params, MeasureKernel, ModelParams};
use qvar::quad::{q_expect, QuadratureSpec};
use qvar::utility::{compute_knots, EnvelopeCase, UtilitySpec};

fn default_knots() -> qvar::utility::ConcavifiedUtility {
    compute_knots(&UtilitySpec::default()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    /// The envelope dominates the rewarded utility everywhere and touches it
    /// on the coincidence set.
    #[test]
    fn envelope_dominates(lambda in 0.0..2.5f64, x in 0.0..8.0f64) {
        let k = default_knots();
        let spec = UtilitySpec::default();
        let case = k.case(lambda).unwrap();
        let reward = if x >= spec.floor { lambda } else { 0.0 };
        prop_assert!(k.envelope_with(&case, x) >= spec.eval_u(x) + reward - 1e-10);
    }

    /// Midpoint concavity of the envelope.
    #[test]
    fn envelope_concave(lambda in 0.0..2.5f64, a in 0.0..8.0f64, b in 0.0..8.0f64) {
        let k = default_knots();
        let case = k.case(lambda).unwrap();
        let mid = 0.5 * (a + b);
        prop_assert!(
            k.envelope_with(&case, mid)
                >= 0.5 * (k.envelope_with(&case, a) + k.envelope_with(&case, b)) - 1e-10
        );
    }

    /// The maximizer dominates every grid candidate in the conjugate gap.
    #[test]
    fn x_star_is_the_maximizer(lambda in 0.0..2.5f64, y in 0.05..3.0f64) {
        let k = default_knots();
        let case = k.case(lambda).unwrap();
        let xs = k.x_star_with(&case, y).unwrap();
        let best = k.envelope_with(&case, xs) - y * xs;
        for i in 0..=500 {
            let x = 9.0 * i as f64 / 500.0;
            prop_assert!(k.envelope_with(&case, x) - y * x <= best + 1e-9);
        }
    }

    /// The maximizer is nonincreasing in the dual argument and jumps only at
    /// the documented kinks.
    #[test]
    fn x_star_monotone(lambda in 0.0..2.5f64) {
        let k = default_knots();
        let case = k.case(lambda).unwrap();
        let kinks: Vec<f64> = match case {
            EnvelopeCase::TwoSegment { k_lambda } => vec![k.c_z_tilde, k_lambda],
            EnvelopeCase::OneSegment { c_z_tilde0, .. } => vec![c_z_tilde0],
        };
        let spec = UtilitySpec::default();
        let mut prev = f64::INFINITY;
        for i in 1..=300 {
            let y = 0.015 * i as f64;
            let x = k.x_star_with(&case, y).unwrap();
            prop_assert!(x <= prev + 1e-12);
            // without a kink in the interval, the drop is bounded by the
            // smooth gain branch's own decrease
            if i > 1 {
                let lo = 0.015 * (i - 1) as f64;
                let gain_drop = spec.inverse_marginal_i1(lo).unwrap()
                    - spec.inverse_marginal_i1(y).unwrap();
                if prev - x > gain_drop + 1e-9 {
                    prop_assert!(
                        kinks.iter().any(|&q| q > lo - 1e-12 && q <= y + 1e-12),
                        "jump of {} at y in ({lo}, {y}] without a kink",
                        prev - x
                    );
                }
            }
            prev = x;
        }
    }

    /// Kernel positivity and the unit mean of the measure-change weight.
    #[test]
    fn kernel_positive_and_normalized(
        mu_l in 0.0..0.05f64,
        gap in 0.01..0.1f64,
        p in 0.05..0.95f64,
        tau in 0.1..3.0f64,
    ) {
        let params = ModelParams {
            mu_l,
            mu_h: mu_l + gap,
            p,
            t_horizon: tau,
            ..ModelParams::default()
        };
        let d = derive_params(&params).unwrap();
        let kernel = MeasureKernel::terminal(&params, &d);
        for i in 0..=50 {
            let w = -8.0 * tau.sqrt() + 16.0 * tau.sqrt() * i as f64 / 50.0;
            prop_assert!(kernel.h(w) > 0.0);
            prop_assert!(kernel.psi_weight(w) > 0.0);
        }
        let spec = QuadratureSpec::default();
        let mean = q_expect(|w| kernel.psi_weight(w), tau, &spec, &[]).unwrap();
        prop_assert!((mean - 1.0).abs() < 1e-9, "E[Psi] = {mean}");
    }

    /// Normal-density normalization and the second moment under varying
    /// horizon, with and without spurious breakpoints.
    #[test]
    fn quadrature_normalization(tau in 0.05..4.0f64, bp in -1.0..1.0f64) {
        let spec = QuadratureSpec::default();
        let one = q_expect(|_| 1.0, tau, &spec, &[bp]).unwrap();
        prop_assert!((one - 1.0).abs() < 1e-11);
        let m2 = q_expect(|w| w * w, tau, &spec, &[bp]).unwrap();
        prop_assert!((m2 - tau).abs() < 1e-9 * tau.max(1.0));
    }

    /// Formatting is width-stable and parses back within rounding error.
    #[test]
    fn g6_round_trips(x in -1e9..1e9f64) {
        let s = qvar::report::g6(x);
        let back: f64 = s.parse().unwrap();
        let tol = 1e-5 * x.abs().max(1e-12);
        prop_assert!((back - x).abs() <= tol, "{x} -> {s} -> {back}");
    }
}
