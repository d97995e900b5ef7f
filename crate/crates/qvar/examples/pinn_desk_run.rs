use qvar::model::ModelParams;
use qvar::pinn::{self, PinnConfig};
use qvar::utility::{compute_knots, UtilitySpec};

fn main() {
    let params = ModelParams::default();
    let knots = compute_knots(&UtilitySpec::default()).unwrap();
    let cfg = PinnConfig::desk();
    let t0 = std::time::Instant::now();
    let model = pinn::train(&cfg, &params, &knots).unwrap();
    println!("steps {} loss {:.3e} in {:.0}s", model.steps_run, model.final_loss, t0.elapsed().as_secs_f64());
    for row in model.history.iter().step_by(10) {
        println!("{} {:.5e} {:.5e} {:.5e}", row.step, row.loss, row.residual_term, row.boundary_term);
    }
    model.save(std::path::Path::new("/tmp/desk_model.json")).unwrap();
    // probe quality: terminal slice + a few dual values
    let solver = qvar::lagrange::ExactSolver::new(&params, &UtilitySpec::default(), &qvar::quad::QuadratureSpec::default()).unwrap();
    let mut worst_term: f64 = 0.0;
    for iy in 0..20 {
        let y = 0.25 + 1.7 * iy as f64 / 19.0;
        for il in 0..10 {
            let lam = 2.5 * il as f64 / 9.0;
            let case = knots.case(lam).unwrap();
            let v_ref = knots.v_dual_with(&case, y).unwrap();
            let v_net = model.eval(1.0, y, 0.065, lam);
            let rel = (v_net - v_ref).abs() / (1.0 + v_ref.abs());
            worst_term = worst_term.max(rel);
        }
    }
    println!("terminal slice worst rel err: {worst_term:.4}");
    let mut worst_int: f64 = 0.0;
    for (t, y, mu, lam) in [(0.3, 0.8, 0.06, 0.5), (0.5, 1.4, 0.07, 1.5), (0.1, 0.5, 0.05, 2.0), (0.8, 1.8, 0.09, 0.2), (0.25, 1.0, 0.07, 1.0)] {
        let v_ref = solver.dual_value(t, y, mu, lam).unwrap();
        let v_net = model.eval(t, y, mu, lam);
        println!("probe t={t} y={y} mu={mu} lam={lam}: net {v_net:.4} ref {v_ref:.4} diff {:.4}", (v_net - v_ref).abs());
        worst_int = worst_int.max((v_net - v_ref).abs());
    }
    println!("interior worst abs err: {worst_int:.4}");
    // y* at lambda=0 and the dy check
    match model.solve_y_star(0.0, 1.0) {
        Ok(r) => println!("y*(0) = {:.4} (multi: {})", r.y_star, r.multiple_roots),
        Err(e) => println!("y* failed: {e}"),
    }
}
