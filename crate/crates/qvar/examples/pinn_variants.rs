use qvar::lagrange::ExactSolver;
use qvar::mc::{self, SimConfig};
use qvar::model::ModelParams;
use qvar::pinn::{self, PinnConfig};
use qvar::quad::QuadratureSpec;
use qvar::utility::{compute_knots, UtilitySpec};

fn main() {
    let params = ModelParams::default();
    let knots = compute_knots(&UtilitySpec::default()).unwrap();
    let solver = ExactSolver::new(&params, &UtilitySpec::default(), &QuadratureSpec::default()).unwrap();
    let pool = mc::simulate_paths(&SimConfig::default(), &params).unwrap();

    for (tag, seed, delta_final) in [
        ("seed7", 7u64, Some(1e-4)),
        ("seed2024", 2024u64, Some(1e-4)),
        ("seed42-df3e5", 42u64, Some(3e-5)),
    ] {
        let cfg = PinnConfig {
            seed,
            delta_final,
            ..PinnConfig::desk()
        };
        let t0 = std::time::Instant::now();
        let model = pinn::train(&cfg, &params, &knots).unwrap();
        let mut worst_term = 0.0f64;
        for iy in 0..=30 {
            let y = 0.22 + (1.98 - 0.22) * iy as f64 / 30.0;
            for il in 0..=20 {
                let lam = 2.5 * il as f64 / 20.0;
                let case = knots.case(lam).unwrap();
                let v_ref = knots.v_dual_with(&case, y).unwrap();
                let rel = (model.eval(1.0, y, 0.065, lam) - v_ref).abs() / (1.0 + v_ref.abs());
                worst_term = worst_term.max(rel);
            }
        }
        let mut worst_probe = 0.0f64;
        for (t, y, mu, lam) in [(0.3, 0.8, 0.06, 0.5), (0.5, 1.4, 0.07, 1.5), (0.1, 0.5, 0.05, 2.0), (0.8, 1.8, 0.09, 0.2), (0.25, 1.0, 0.07, 1.0), (0.6, 0.35, 0.045, 2.3), (0.9, 1.9, 0.095, 0.1)] {
            let v_ref = solver.dual_value(t, y, mu, lam).unwrap();
            worst_probe = worst_probe.max((model.eval(t, y, mu, lam) - v_ref).abs());
        }
        let lam_star = pinn::coupled_solve(1.0, 0.1, &model, &pool, &SimConfig::default(), &knots)
            .map(|s| s.lambda_star)
            .unwrap_or(f64::NAN);
        println!(
            "{tag}: loss {:.3e} steps {} slice {:.4} probe {:.4} lambda*(0.1) {:.4} [{:.0}s]",
            model.final_loss, model.steps_run, worst_term, worst_probe, lam_star,
            t0.elapsed().as_secs_f64()
        );
    }
}
