use qvar::model::ModelParams;
use qvar::pinn::{self, PinnConfig};
use qvar::utility::{compute_knots, UtilitySpec};

fn main() {
    let params = ModelParams::default();
    let knots = compute_knots(&UtilitySpec::default()).unwrap();
    let mut cfg = PinnConfig::desk();
    cfg.max_steps = 300;
    cfg.loss_tol = 1e-16;
    let t0 = std::time::Instant::now();
    let model = pinn::train(&cfg, &params, &knots).unwrap();
    let dt = t0.elapsed().as_secs_f64();
    println!("300 steps in {dt:.2}s -> {:.1} ms/step", dt / 300.0 * 1000.0);
    for row in &model.history {
        println!("step {}: loss {:.4} (res {:.4}, bnd {:.4})", row.step, row.loss, row.residual_term, row.boundary_term);
    }
}
