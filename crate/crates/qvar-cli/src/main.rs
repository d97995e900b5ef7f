//! Experiment runner: configuration ingestion, the three solvers behind
//! subcommands, and CSV/JSON emitters for the summary table and the figure
//! data.

use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};

use qvar::config::ExperimentConfig;
use qvar::lagrange::{ExactSolver, SolveOutcome, WealthForm};
use qvar::mc::{self, SamplePool, SweepCurve};
use qvar::pinn::{self, PinnConfig, PinnModel};
use qvar::report::g6;
use qvar::utility::{ConcavifiedUtility, EnvelopeCase};
use qvar::QvarError;

const EXIT_INFEASIBLE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "qvar", version, about = "Constrained S-shaped utility solvers")]
struct Cli {
    /// Experiment configuration (JSON); defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the simulation and training seeds.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for CSV/JSON artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Network training budget: the desk profile trains in minutes, the
    /// paper profile runs the full published budget.
    #[arg(long, global = true, value_enum, default_value_t = PinnProfile::Desk)]
    pinn_profile: PinnProfile,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum PinnProfile {
    /// Take the network section from the configuration file as-is.
    Config,
    /// Reduced budget: 50 nodes, 20000 steps, loss tolerance 5e-4.
    Desk,
    /// Full budget: 100 nodes, 100000 steps, loss tolerance 5e-5.
    Paper,
}

#[derive(Clone, Copy, ValueEnum, Debug)]
enum Method {
    Lagrange,
    Mc,
    Pinn,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Lagrange => "lagrange",
            Method::Mc => "mc",
            Method::Pinn => "pinn",
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the constrained problem at one confidence level.
    Solve {
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, value_enum, default_value_t = Method::Lagrange)]
        method: Method,
        /// Overrides the initial wealth from the configuration.
        #[arg(long)]
        x0: Option<f64>,
    },
    /// Sweep the epsilon grid and emit multiplier/value/constraint columns.
    Sweep {
        #[arg(long, value_enum, default_value_t = Method::Lagrange)]
        method: Method,
    },
    /// Terminal-wealth histograms at fixed multipliers.
    Dist {
        #[arg(long, value_enum, default_value_t = Method::Mc)]
        method: Method,
        /// Multipliers to plot (defaults: 0, 1.5, 2.5).
        #[arg(long = "lambda")]
        lambdas: Vec<f64>,
    },
    /// Constraint and full-value curves across feasible and infeasible
    /// initial wealth levels.
    Feasibility {
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// All three methods at the reference epsilons, with diffs against the
    /// bundled reference results.
    Table1,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}

struct Runner {
    cfg: ExperimentConfig,
    out_dir: PathBuf,
    solver: ExactSolver,
    knots: ConcavifiedUtility,
}

impl Runner {
    fn new(cli: &Cli) -> anyhow::Result<Self> {
        let mut cfg = match &cli.config {
            Some(path) => ExperimentConfig::load(path)
                .with_context(|| format!("loading config {}", path.display()))?,
            None => ExperimentConfig::default(),
        };
        match cli.pinn_profile {
            PinnProfile::Config => {}
            PinnProfile::Desk => cfg.pinn = PinnConfig::desk(),
            PinnProfile::Paper => cfg.pinn = PinnConfig::default(),
        }
        if let Some(seed) = cli.seed {
            cfg.sim.seed = seed;
            cfg.pinn.seed = seed;
        }
        if let Some(out) = &cli.out {
            cfg.output_dir = out.clone();
        }
        cfg.validate().map_err(|e| anyhow!(e))?;
        let out_dir = cfg.output_dir.clone();
        fs::create_dir_all(&out_dir)
            .with_context(|| format!("creating output dir {}", out_dir.display()))?;
        let solver = ExactSolver::new(&cfg.model, &cfg.utility, &cfg.quadrature)?;
        let knots = solver.knots;
        Ok(Self {
            cfg,
            out_dir,
            solver,
            knots,
        })
    }

    fn write_manifest(&self, command: &str) -> anyhow::Result<()> {
        let manifest = serde_json::json!({
            "command": command,
            "build": {
                "name": env!("CARGO_PKG_NAME"),
                "version": env!("CARGO_PKG_VERSION"),
                "git": option_env!("QVAR_BUILD_GIT").unwrap_or("untracked"),
            },
            "config": &self.cfg,
        });
        let path = self.out_dir.join(format!("manifest_{command}.json"));
        fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
        Ok(())
    }

    fn write_file(&self, name: &str, contents: &str) -> anyhow::Result<PathBuf> {
        let path = self.out_dir.join(name);
        let mut f = fs::File::create(&path)?;
        f.write_all(contents.as_bytes())?;
        Ok(path)
    }

    fn pool(&self) -> anyhow::Result<SamplePool> {
        let pool = mc::simulate_paths(&self.cfg.sim, &self.cfg.model)?;
        if pool.clamp_fraction() > 1e-3 {
            eprintln!(
                "warning: {:.3}% of paths hit the positivity floor; increase sim.steps",
                100.0 * pool.clamp_fraction()
            );
        }
        Ok(pool)
    }

    /// Loads the checkpoint when it matches the current configuration,
    /// otherwise trains and saves one alongside the training log.
    fn pinn_model(&self) -> anyhow::Result<PinnModel> {
        let path = self.out_dir.join("pinn_checkpoint.json");
        let hash = pinn::config_hash(&self.cfg.pinn, &self.cfg.model);
        if path.exists() {
            match PinnModel::load(&path) {
                Ok(model) if model.config_hash == hash => {
                    eprintln!("loaded checkpoint {}", path.display());
                    return Ok(model);
                }
                Ok(_) => eprintln!("checkpoint config changed; retraining"),
                Err(e) => eprintln!("checkpoint unreadable ({e}); retraining"),
            }
        }
        eprintln!(
            "training network: {} nodes, {} max steps",
            self.cfg.pinn.nodes, self.cfg.pinn.max_steps
        );
        let model = pinn::train(&self.cfg.pinn, &self.cfg.model, &self.knots)?;
        model.save(&path)?;
        let mut log = String::from("step,loss,residual_term,boundary_term\n");
        for row in &model.history {
            log.push_str(&format!(
                "{},{},{},{}\n",
                row.step,
                g6(row.loss),
                g6(row.residual_term),
                g6(row.boundary_term)
            ));
        }
        self.write_file("pinn_training_log.csv", &log)?;
        eprintln!(
            "trained: {} steps, final loss {}",
            model.steps_run,
            g6(model.final_loss)
        );
        Ok(model)
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let runner = Runner::new(&cli)?;
    match cli.cmd {
        Cmd::Solve {
            epsilon,
            method,
            x0,
        } => cmd_solve(&runner, epsilon, method, x0),
        Cmd::Sweep { method } => cmd_sweep(&runner, method),
        Cmd::Dist { method, lambdas } => cmd_dist(&runner, method, lambdas),
        Cmd::Feasibility { epsilon } => cmd_feasibility(&runner, epsilon),
        Cmd::Table1 => cmd_table1(&runner),
    }
}

/// Uniform row shape shared by all three methods in CSV output.
struct MethodRow {
    lambda_star: f64,
    y_star: f64,
    u: f64,
    u_c: f64,
    p_at_l: f64,
    p_at_0: f64,
    form: String,
}

fn form_label(form: &WealthForm) -> String {
    form.tag().to_string()
}

fn case_label(knots: &ConcavifiedUtility, lambda: f64) -> String {
    match knots.case(lambda) {
        Ok(EnvelopeCase::TwoSegment { .. }) => "two_segment_binding".into(),
        Ok(EnvelopeCase::OneSegment { .. }) => {
            if lambda == 0.0 {
                "unconstrained".into()
            } else {
                "one_segment_binding".into()
            }
        }
        Err(_) => "unknown".into(),
    }
}

fn cmd_solve(
    runner: &Runner,
    epsilon: Option<f64>,
    method: Method,
    x0: Option<f64>,
) -> anyhow::Result<ExitCode> {
    runner.write_manifest("solve")?;
    let epsilon = epsilon.unwrap_or(runner.cfg.model.epsilon);
    let x0 = x0.unwrap_or(runner.cfg.model.x0);

    let (json, infeasible) = match method {
        Method::Lagrange => {
            let outcome = runner.solver.lagrange_solve(x0, epsilon)?;
            let infeasible = outcome.solution().is_none();
            (serde_json::to_value(&outcome)?, infeasible)
        }
        Method::Mc => {
            let pool = runner.pool()?;
            match mc::lambda_sweep(x0, epsilon, &pool, &runner.cfg.sim, &runner.knots) {
                Ok(sol) => (serde_json::to_value(&sol)?, false),
                Err(QvarError::LambdaGridExhausted { max_h }) => (
                    serde_json::json!({
                        "status": "infeasible",
                        "epsilon": epsilon,
                        "x0": x0,
                        "max_constraint_on_grid": max_h,
                        "x_hat": runner.solver.x_hat(epsilon)?,
                    }),
                    true,
                ),
                Err(e) => return Err(e.into()),
            }
        }
        Method::Pinn => {
            let model = runner.pinn_model()?;
            let pool = runner.pool()?;
            match pinn::coupled_solve(x0, epsilon, &model, &pool, &runner.cfg.sim, &runner.knots) {
                Ok(sol) => (serde_json::to_value(&sol)?, false),
                Err(QvarError::LambdaGridExhausted { max_h }) => (
                    serde_json::json!({
                        "status": "infeasible",
                        "epsilon": epsilon,
                        "x0": x0,
                        "max_constraint_on_grid": max_h,
                        "x_hat": runner.solver.x_hat(epsilon)?,
                    }),
                    true,
                ),
                Err(e) => return Err(e.into()),
            }
        }
    };

    let text = serde_json::to_string_pretty(&json)?;
    println!("{text}");
    runner.write_file(
        &format!("solution_{}_eps{}.json", method.name(), g6(epsilon)),
        &text,
    )?;
    Ok(if infeasible {
        ExitCode::from(EXIT_INFEASIBLE)
    } else {
        ExitCode::SUCCESS
    })
}

fn lagrange_row(runner: &Runner, epsilon: f64, x0: f64) -> anyhow::Result<Option<MethodRow>> {
    match runner.solver.lagrange_solve(x0, epsilon)? {
        SolveOutcome::Solved(sol) => Ok(Some(MethodRow {
            lambda_star: sol.lambda_star,
            y_star: sol.y0,
            u: sol.stats.u,
            u_c: sol.stats.u_c.unwrap_or(f64::NAN),
            p_at_l: sol.stats.p_at_l,
            p_at_0: sol.stats.p_at_0,
            form: form_label(&sol.form),
        })),
        SolveOutcome::Infeasible { .. } => Ok(None),
    }
}

fn mc_row_from_curve(
    runner: &Runner,
    curve: &SweepCurve,
    pool: &SamplePool,
    epsilon: f64,
    x0: f64,
) -> anyhow::Result<Option<MethodRow>> {
    match mc::invert_curve(curve, epsilon, x0, pool, &runner.knots) {
        Ok(sol) => Ok(Some(MethodRow {
            lambda_star: sol.lambda_star,
            y_star: sol.y_star,
            u: sol.u,
            u_c: sol.u_c,
            p_at_l: sol.p_at_l,
            p_at_0: sol.p_at_0,
            form: case_label(&runner.knots, sol.lambda_star),
        })),
        Err(QvarError::LambdaGridExhausted { .. }) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn sweep_csv(rows: &[(f64, Option<MethodRow>)]) -> String {
    let mut out = String::from("epsilon,lambda_star,y0,form,u,u_c,p_at_L,p_at_0\n");
    for (eps, row) in rows {
        match row {
            Some(r) => out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                g6(*eps),
                g6(r.lambda_star),
                g6(r.y_star),
                r.form,
                g6(r.u),
                g6(r.u_c),
                g6(r.p_at_l),
                g6(r.p_at_0)
            )),
            None => out.push_str(&format!("{},,,infeasible,,,,\n", g6(*eps))),
        }
    }
    out
}

fn lambda_curve_csv(curve: &SweepCurve) -> String {
    let mut out = String::from("lambda,y_star,u_c,u,h,p_at_L,p_at_0\n");
    for p in &curve.points {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            g6(p.lambda),
            g6(p.y_star),
            g6(p.u_c),
            g6(p.u),
            g6(p.h),
            g6(p.p_at_l),
            g6(p.p_at_0)
        ));
    }
    out
}

fn cmd_sweep(runner: &Runner, method: Method) -> anyhow::Result<ExitCode> {
    runner.write_manifest("sweep")?;
    let x0 = runner.cfg.model.x0;
    let grid = &runner.cfg.epsilon_grid;

    let rows: Vec<(f64, Option<MethodRow>)> = match method {
        Method::Lagrange => {
            let mut rows = Vec::new();
            for &eps in grid {
                rows.push((eps, lagrange_row(runner, eps, x0)?));
            }
            rows
        }
        Method::Mc => {
            let pool = runner.pool()?;
            let curve = mc::sweep_curve(x0, &pool, &runner.cfg.sim, &runner.knots)?;
            if !curve.h_monotone {
                eprintln!("warning: constraint curve not monotone on the grid");
            }
            runner.write_file("lambda_curve_mc.csv", &lambda_curve_csv(&curve))?;
            let mut rows = Vec::new();
            for &eps in grid {
                rows.push((eps, mc_row_from_curve(runner, &curve, &pool, eps, x0)?));
            }
            rows
        }
        Method::Pinn => {
            let model = runner.pinn_model()?;
            let pool = runner.pool()?;
            let mut rows = Vec::new();
            for &eps in grid {
                let row = match pinn::coupled_solve(
                    x0,
                    eps,
                    &model,
                    &pool,
                    &runner.cfg.sim,
                    &runner.knots,
                ) {
                    Ok(sol) => Some(MethodRow {
                        lambda_star: sol.lambda_star,
                        y_star: sol.y_star,
                        u: sol.u_simulated,
                        u_c: sol.u_c,
                        p_at_l: sol.p_at_l,
                        p_at_0: sol.p_at_0,
                        form: case_label(&runner.knots, sol.lambda_star),
                    }),
                    Err(QvarError::LambdaGridExhausted { .. })
                    | Err(QvarError::TrainedRangeBoundary(_)) => None,
                    Err(e) => return Err(e.into()),
                };
                rows.push((eps, row));
            }
            rows
        }
    };

    let path = runner.write_file(&format!("sweep_{}.csv", method.name()), &sweep_csv(&rows))?;
    println!("wrote {}", path.display());
    Ok(ExitCode::SUCCESS)
}

/// Histogram of simulated terminal wealth: explicit atom rows at 0 and the
/// floor, then equal-width bins over the continuous support.
fn histogram_csv(samples: &[f64], floor: f64) -> String {
    let m = samples.len() as f64;
    let at_zero = samples.iter().filter(|&&x| x == 0.0).count() as f64 / m;
    let at_floor = samples.iter().filter(|&&x| x == floor).count() as f64 / m;
    let continuous: Vec<f64> = samples
        .iter()
        .copied()
        .filter(|&x| x != 0.0 && x != floor)
        .collect();

    let mut out = String::from("bin_left,bin_right,frequency\n");
    out.push_str(&format!("0,0,{}\n", g6(at_zero)));
    out.push_str(&format!("{},{},{}\n", g6(floor), g6(floor), g6(at_floor)));
    if continuous.is_empty() {
        return out;
    }
    let lo = continuous.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = continuous.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let bins = 60usize;
    let width = ((hi - lo) / bins as f64).max(1e-12);
    let mut counts = vec![0usize; bins];
    for &x in &continuous {
        let idx = (((x - lo) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    for (i, c) in counts.iter().enumerate() {
        let left = lo + width * i as f64;
        out.push_str(&format!(
            "{},{},{}\n",
            g6(left),
            g6(left + width),
            g6(*c as f64 / m)
        ));
    }
    out
}

fn cmd_dist(runner: &Runner, method: Method, lambdas: Vec<f64>) -> anyhow::Result<ExitCode> {
    runner.write_manifest("dist")?;
    let lambdas = if lambdas.is_empty() {
        vec![0.0, 1.5, 2.5]
    } else {
        lambdas
    };
    let x0 = runner.cfg.model.x0;
    let pool = runner.pool()?;
    let model = match method {
        Method::Pinn => Some(runner.pinn_model()?),
        _ => None,
    };

    for (i, &lambda) in lambdas.iter().enumerate() {
        let y_star = match method {
            Method::Lagrange => runner.solver.solve_for_lambda(lambda, x0)?.0,
            Method::Mc => {
                mc::optimize_y(lambda, x0, &pool, &runner.cfg.sim, &runner.knots)?.y_star
            }
            Method::Pinn => model.as_ref().unwrap().solve_y_star(lambda, x0)?.y_star,
        };
        let case = runner.knots.case(lambda)?;
        let samples: Vec<f64> = pool
            .zeta
            .iter()
            .map(|&z| runner.knots.x_star_with(&case, y_star * z))
            .collect::<Result<_, _>>()?;
        let csv = histogram_csv(&samples, runner.cfg.model.floor);
        let path = runner.write_file(&format!("hist_{}_lambda{}.csv", method.name(), i), &csv)?;
        println!(
            "lambda = {}: y* = {}, wrote {}",
            g6(lambda),
            g6(y_star),
            path.display()
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_feasibility(runner: &Runner, epsilon: Option<f64>) -> anyhow::Result<ExitCode> {
    runner.write_manifest("feasibility")?;
    let epsilon = epsilon.unwrap_or(0.2);
    let x_hat = runner.solver.x_hat(epsilon)?;
    println!("critical wealth at epsilon {}: {}", g6(epsilon), g6(x_hat));

    let pool = runner.pool()?;
    for (tag, x0) in [
        ("infeasible", 0.6),
        ("threshold", x_hat),
        ("feasible_a", 0.73),
        ("feasible_b", 0.8),
    ] {
        let curve = mc::sweep_curve(x0, &pool, &runner.cfg.sim, &runner.knots)?;
        let mut out = String::from("lambda,y_star,constraint,u_c,full_value\n");
        for p in &curve.points {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                g6(p.lambda),
                g6(p.y_star),
                g6(p.h),
                g6(p.u_c),
                g6(p.u_c - p.lambda * (1.0 - epsilon))
            ));
        }
        let path = runner.write_file(&format!("feasibility_{tag}.csv"), &out)?;
        println!("x0 = {}: wrote {}", g6(x0), path.display());
    }
    Ok(ExitCode::SUCCESS)
}

/// Reference row: (epsilon, method, lambda*, y*, u, u_c, P(X=L), P(X=0)).
type ReferenceRow = (f64, &'static str, f64, f64, f64, f64, f64, f64);

/// Reference results for the baseline configuration.
const REFERENCE_TABLE: &[ReferenceRow] = &[
    (0.0, "mc", 1.65, 1.883, -0.561, 1.086, 0.746, 0.003),
    (0.0, "pinn", 1.7, 1.911, -0.601, 1.13, 0.782, 0.0),
    (0.0, "lagrange", 1.659, 1.885, -0.564, 1.095, 0.751, 0.0),
    (0.1, "mc", 1.453, 1.795, -0.411, 0.898, 0.5, 0.102),
    (0.1, "pinn", 1.464, 1.806, -0.435, 0.91, 0.52, 0.1),
    (0.1, "lagrange", 1.452, 1.794, -0.411, 0.896, 0.5, 0.1),
    (0.35, "mc", 0.478, 1.214, -0.095, 0.216, 0.0, 0.35),
    (0.35, "pinn", 0.614, 1.295, -0.114, 0.31, 0.0, 0.35),
    (0.35, "lagrange", 0.483, 1.216, -0.095, 0.219, 0.0, 0.35),
    (1.0, "mc", 0.0, 0.946, -0.086, -0.085, 0.0, 0.395),
    (1.0, "pinn", 0.0, 0.94, -0.046, -0.084, 0.0, 0.374),
    (1.0, "lagrange", 0.0, 0.945, -0.085, -0.085, 0.0, 0.395),
];

fn cmd_table1(runner: &Runner) -> anyhow::Result<ExitCode> {
    runner.write_manifest("table1")?;
    let epsilons = [0.0, 0.1, 0.35, 1.0];
    let x0 = runner.cfg.model.x0;

    let pool = runner.pool()?;
    let curve = mc::sweep_curve(x0, &pool, &runner.cfg.sim, &runner.knots)?;
    let model = runner.pinn_model()?;

    let mut out = String::from(
        "epsilon,method,lambda_star,y_star,u,u_c,p_at_L,p_at_0,\
         ref_lambda_star,ref_y_star,ref_u,ref_u_c,ref_p_at_L,ref_p_at_0,\
         diff_lambda_star,diff_y_star,diff_u,diff_u_c,diff_p_at_L,diff_p_at_0,status\n",
    );
    for &eps in &epsilons {
        for method in [Method::Mc, Method::Pinn, Method::Lagrange] {
            let row: anyhow::Result<Option<MethodRow>> = match method {
                Method::Lagrange => lagrange_row(runner, eps, x0),
                Method::Mc => mc_row_from_curve(runner, &curve, &pool, eps, x0),
                Method::Pinn => {
                    match pinn::coupled_solve(
                        x0,
                        eps,
                        &model,
                        &pool,
                        &runner.cfg.sim,
                        &runner.knots,
                    ) {
                        Ok(sol) => Ok(Some(MethodRow {
                            lambda_star: sol.lambda_star,
                            y_star: sol.y_star,
                            u: sol.u_simulated,
                            u_c: sol.u_c,
                            p_at_l: sol.p_at_l,
                            p_at_0: sol.p_at_0,
                            form: case_label(&runner.knots, sol.lambda_star),
                        })),
                        Err(QvarError::TrainedRangeBoundary(msg)) => {
                            eprintln!("pinn cell eps = {eps}: {msg}");
                            Ok(None)
                        }
                        Err(e) => Err(e.into()),
                    }
                }
            };
            let reference = REFERENCE_TABLE
                .iter()
                .find(|r| r.0 == eps && r.1 == method.name());
            match row {
                Ok(Some(r)) => {
                    let (rl, ry, ru, ruc, rpl, rp0) = reference
                        .map(|t| (t.2, t.3, t.4, t.5, t.6, t.7))
                        .unwrap_or((f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN));
                    out.push_str(&format!(
                        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},ok\n",
                        g6(eps),
                        method.name(),
                        g6(r.lambda_star),
                        g6(r.y_star),
                        g6(r.u),
                        g6(r.u_c),
                        g6(r.p_at_l),
                        g6(r.p_at_0),
                        g6(rl),
                        g6(ry),
                        g6(ru),
                        g6(ruc),
                        g6(rpl),
                        g6(rp0),
                        g6(r.lambda_star - rl),
                        g6(r.y_star - ry),
                        g6(r.u - ru),
                        g6(r.u_c - ruc),
                        g6(r.p_at_l - rpl),
                        g6(r.p_at_0 - rp0)
                    ));
                }
                Ok(None) => {
                    out.push_str(&format!(
                        "{},{},,,,,,,,,,,,,,,,,,,infeasible_or_boundary\n",
                        g6(eps),
                        method.name()
                    ));
                }
                Err(e) => {
                    eprintln!("cell (eps = {eps}, {}) failed: {e:#}", method.name());
                    out.push_str(&format!(
                        "{},{},,,,,,,,,,,,,,,,,,,error\n",
                        g6(eps),
                        method.name()
                    ));
                }
            }
        }
    }
    let path = runner.write_file("table1.csv", &out)?;
    println!("wrote {}", path.display());
    Ok(ExitCode::SUCCESS)
}
