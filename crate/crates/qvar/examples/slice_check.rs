use qvar::pinn::PinnModel;
use qvar::utility::{compute_knots, UtilitySpec};

fn main() {
    let model = PinnModel::load(std::path::Path::new("/tmp/desk_model.json")).unwrap();
    let k = compute_knots(&UtilitySpec::default()).unwrap();
    let mut worst = (0.0f64, 0.0, 0.0);
    for iy in 0..=30 {
        let y = 0.22 + (1.98 - 0.22) * iy as f64 / 30.0;
        for il in 0..=20 {
            let lam = 2.5 * il as f64 / 20.0;
            let case = k.case(lam).unwrap();
            let v_ref = k.v_dual_with(&case, y).unwrap();
            let rel = (model.eval(model.t_horizon, y, 0.065, lam) - v_ref).abs() / (1.0 + v_ref.abs());
            if rel > worst.0 { worst = (rel, y, lam); }
        }
    }
    println!("acceptance slice worst: {:.4} at y={:.3} lam={:.3}", worst.0, worst.1, worst.2);
    // where are the top errors?
    let mut errs = vec![];
    for iy in 0..=60 {
        let y = 0.2 + 1.8 * iy as f64 / 60.0;
        for il in 0..=25 {
            let lam = 2.5 * il as f64 / 25.0;
            let case = k.case(lam).unwrap();
            let v_ref = k.v_dual_with(&case, y).unwrap();
            let rel = (model.eval(model.t_horizon, y, 0.065, lam) - v_ref).abs() / (1.0 + v_ref.abs());
            errs.push((rel, y, lam));
        }
    }
    errs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    for e in errs.iter().take(8) {
        println!("  rel {:.4} at y={:.3} lam={:.3}", e.0, e.1, e.2);
    }
}
