//! Dual PINN solver: a two-hidden-layer tanh network over (t, y, mu_hat,
//! lambda) trained on the dual HJB residual plus the terminal conjugate
//! condition, followed by the coupled (y*, lambda*) optimization.

mod adam;
pub mod net;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{QvarError, Result};
use crate::mc::{self, SamplePool, SimConfig, SweepCurve, SweepPoint};
use crate::model::{derive_params, psi, ModelParams};
use crate::utility::ConcavifiedUtility;

use adam::Adam;
use net::{BoundarySet, CollocationSet, InputDerivs, InputScaling, NetParams};

/// Training configuration. The default mirrors the full experimental budget;
/// [`PinnConfig::desk`] is the reduced profile used by the test suite.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PinnConfig {
    /// Hidden nodes per layer.
    pub nodes: usize,
    /// Interior collocation points.
    pub collocation_points: usize,
    /// Terminal boundary points.
    pub boundary_points: usize,
    /// Adam learning rate.
    pub delta: f64,
    /// Optional final learning rate for cosine decay across the step
    /// budget; constant rate when absent.
    pub delta_final: Option<f64>,
    /// Iteration budget.
    pub max_steps: usize,
    /// Early-stop threshold on the loss.
    pub loss_tol: f64,
    /// Dual-start domain.
    pub y_domain: [f64; 2],
    /// Filtered-drift domain.
    pub mu_domain: [f64; 2],
    /// Multiplier domain.
    pub lambda_domain: [f64; 2],
    pub seed: u64,
    /// Resample the point sets every step instead of fixing them once.
    pub resample_each_step: bool,
    /// History logging cadence.
    pub log_every: usize,
}

impl Default for PinnConfig {
    fn default() -> Self {
        Self {
            nodes: 100,
            collocation_points: 2000,
            boundary_points: 200,
            delta: 0.01,
            delta_final: None,
            max_steps: 100_000,
            loss_tol: 5e-5,
            y_domain: [0.2, 2.0],
            mu_domain: [0.03, 0.1],
            lambda_domain: [0.0, 2.5],
            seed: 42,
            resample_each_step: false,
            log_every: 100,
        }
    }
}

impl PinnConfig {
    /// Reduced profile that trains in minutes on one core.
    pub fn desk() -> Self {
        Self {
            nodes: 50,
            max_steps: 20_000,
            loss_tol: 1e-5,
            delta_final: Some(1e-4),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes == 0 || self.collocation_points == 0 || self.boundary_points == 0 {
            return Err(QvarError::InvalidParameter(
                "network and point counts must be positive".into(),
            ));
        }
        if !(self.loss_tol > 0.0 && self.delta > 0.0) {
            return Err(QvarError::InvalidParameter(
                "loss_tol and delta must be positive".into(),
            ));
        }
        for (name, d) in [
            ("y", self.y_domain),
            ("mu", self.mu_domain),
            ("lambda", self.lambda_domain),
        ] {
            if !(d[0] < d[1]) {
                return Err(QvarError::InvalidParameter(format!(
                    "{name} domain must be a nonempty interval"
                )));
            }
        }
        Ok(())
    }
}

/// One row of the training log.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrainLogRow {
    pub step: usize,
    pub loss: f64,
    pub residual_term: f64,
    pub boundary_term: f64,
}

/// Trained dual value surface v(t, y, mu_hat, lambda).
#[derive(Debug, Clone)]
pub struct PinnModel {
    pub params: NetParams,
    pub scaling: InputScaling,
    pub cfg: PinnConfig,
    pub t_horizon: f64,
    pub mu_hat0: f64,
    pub config_hash: String,
    pub history: Vec<TrainLogRow>,
    pub steps_run: usize,
    pub final_loss: f64,
}

/// Hash of everything the surface depends on; used to validate checkpoints.
pub fn config_hash(cfg: &PinnConfig, params: &ModelParams) -> String {
    let blob = serde_json::to_string(&(cfg, params)).expect("config serializes");
    let mut hasher = Sha256::new();
    hasher.update(blob.as_bytes());
    hex_string(&hasher.finalize())
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn scaling_for(cfg: &PinnConfig, t_horizon: f64) -> InputScaling {
    InputScaling {
        lo: [0.0, cfg.y_domain[0], cfg.mu_domain[0], cfg.lambda_domain[0]],
        hi: [
            t_horizon,
            cfg.y_domain[1],
            cfg.mu_domain[1],
            cfg.lambda_domain[1],
        ],
    }
}

/// Uniform interior sample with precomputed operator coefficients.
pub fn sample_collocation<R: Rng>(
    cfg: &PinnConfig,
    params: &ModelParams,
    scaling: &InputScaling,
    rng: &mut R,
) -> CollocationSet {
    let k = cfg.collocation_points;
    let mut xn = Array2::zeros((4, k));
    let mut c = [
        Array1::zeros(k),
        Array1::zeros(k),
        Array1::zeros(k),
        Array1::zeros(k),
    ];
    for i in 0..k {
        let t = rng.gen_range(0.0..params.t_horizon);
        let y = rng.gen_range(cfg.y_domain[0]..cfg.y_domain[1]);
        let mu = rng.gen_range(cfg.mu_domain[0]..cfg.mu_domain[1]);
        let lam = rng.gen_range(cfg.lambda_domain[0]..cfg.lambda_domain[1]);
        let n = scaling.normalize([t, y, mu, lam]);
        for j in 0..4 {
            xn[[j, i]] = n[j];
        }
        let mpr = (mu - params.r) / params.sigma;
        let filter_vol = psi(mu, params);
        c[0][i] = -params.r * y;
        c[1][i] = 0.5 * y * y * mpr * mpr;
        c[2][i] = 0.5 * filter_vol * filter_vol;
        c[3][i] = -y * mpr * filter_vol;
    }
    CollocationSet { xn, c }
}

/// Uniform terminal sample with conjugate targets.
pub fn sample_boundary<R: Rng>(
    cfg: &PinnConfig,
    params: &ModelParams,
    knots: &ConcavifiedUtility,
    scaling: &InputScaling,
    rng: &mut R,
) -> Result<BoundarySet> {
    let k = cfg.boundary_points;
    let mut xn = Array2::zeros((4, k));
    let mut target = Array1::zeros(k);
    for i in 0..k {
        let y = rng.gen_range(cfg.y_domain[0]..cfg.y_domain[1]);
        let mu = rng.gen_range(cfg.mu_domain[0]..cfg.mu_domain[1]);
        let lam = rng.gen_range(cfg.lambda_domain[0]..cfg.lambda_domain[1]);
        let n = scaling.normalize([params.t_horizon, y, mu, lam]);
        for j in 0..4 {
            xn[[j, i]] = n[j];
        }
        let case = knots.case(lam)?;
        target[i] = knots.v_dual_with(&case, y)?;
    }
    Ok(BoundarySet { xn, target })
}

/// Minimizes the mean residual + terminal loss with Adam until the step
/// budget or the loss tolerance is reached. Deterministic for a fixed seed.
pub fn train(
    cfg: &PinnConfig,
    params: &ModelParams,
    knots: &ConcavifiedUtility,
) -> Result<PinnModel> {
    cfg.validate()?;
    let derived = derive_params(params)?;
    let scaling = scaling_for(cfg, params.t_horizon);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut net = NetParams::glorot(cfg.nodes, &mut rng);
    let mut colloc = sample_collocation(cfg, params, &scaling, &mut rng);
    let mut boundary = sample_boundary(cfg, params, knots, &scaling, &mut rng)?;

    let mut opt = Adam::new(cfg.nodes);
    let mut ws = net::Workspace::new(cfg.nodes, cfg.collocation_points);
    let mut history = Vec::new();
    let mut loss = f64::INFINITY;
    let mut resid = f64::INFINITY;
    let mut bnd = f64::INFINITY;
    let mut steps_run = 0;

    for step in 0..cfg.max_steps {
        if cfg.resample_each_step {
            colloc = sample_collocation(cfg, params, &scaling, &mut rng);
            boundary = sample_boundary(cfg, params, knots, &scaling, &mut rng)?;
        }
        let out = net::loss_and_grad_ws(&net, &scaling, &colloc, &boundary, &mut ws);
        resid = out.residual_term;
        bnd = out.boundary_term;
        loss = resid + bnd;
        if !loss.is_finite() {
            return Err(QvarError::NanLoss { step });
        }
        if step % cfg.log_every == 0 {
            history.push(TrainLogRow {
                step,
                loss,
                residual_term: resid,
                boundary_term: bnd,
            });
        }
        steps_run = step + 1;
        if loss <= cfg.loss_tol {
            break;
        }
        // cosine decay from delta to delta_final across the budget when a
        // final rate is configured
        let lr = match cfg.delta_final {
            Some(end) => {
                let frac = step as f64 / cfg.max_steps.max(1) as f64;
                end + 0.5 * (cfg.delta - end) * (1.0 + (std::f64::consts::PI * frac).cos())
            }
            None => cfg.delta,
        };
        opt.update(&mut net, &out.grad, lr);
    }
    history.push(TrainLogRow {
        step: steps_run,
        loss,
        residual_term: resid,
        boundary_term: bnd,
    });

    Ok(PinnModel {
        params: net,
        scaling,
        cfg: *cfg,
        t_horizon: params.t_horizon,
        mu_hat0: derived.mu_hat0,
        config_hash: config_hash(cfg, params),
        history,
        steps_run,
        final_loss: loss,
    })
}

/// Root of dy v(0, y, mu_hat0, lambda) + x0 = 0 inside the trained y-range.
#[derive(Debug, Clone, Copy)]
pub struct YStarResult {
    pub y_star: f64,
    /// More than one sign change was seen; the smallest root was taken.
    pub multiple_roots: bool,
}

impl PinnModel {
    pub fn eval(&self, t: f64, y: f64, mu_hat: f64, lambda: f64) -> f64 {
        net::eval(&self.params, &self.scaling, [t, y, mu_hat, lambda])
    }

    pub fn input_derivatives(&self, t: f64, y: f64, mu_hat: f64, lambda: f64) -> InputDerivs {
        net::eval_with_input_derivatives(&self.params, &self.scaling, [t, y, mu_hat, lambda])
    }

    /// Dual HJB operator applied to the network at one point.
    pub fn pde_residual(&self, t: f64, y: f64, mu_hat: f64, lambda: f64, params: &ModelParams) -> f64 {
        let d = self.input_derivatives(t, y, mu_hat, lambda);
        let mpr = (mu_hat - params.r) / params.sigma;
        let filter_vol = psi(mu_hat, params);
        d.dt - params.r * y * d.dy
            + 0.5 * y * y * mpr * mpr * d.dyy
            + 0.5 * filter_vol * filter_vol * d.dmm
            - y * mpr * filter_vol * d.dym
    }

    /// Smallest root of dy v + x0 = 0 on the trained y-domain at t = 0.
    pub fn solve_y_star(&self, lambda: f64, x0: f64) -> Result<YStarResult> {
        let [y_lo, y_hi] = self.cfg.y_domain;
        let n = 256;
        let g = |y: f64| self.input_derivatives(0.0, y, self.mu_hat0, lambda).dy + x0;
        let mut prev = g(y_lo);
        let mut bracket = None;
        let mut crossings = 0;
        for i in 1..=n {
            let y = y_lo + (y_hi - y_lo) * i as f64 / n as f64;
            let cur = g(y);
            if prev.signum() != cur.signum() {
                crossings += 1;
                if bracket.is_none() {
                    bracket = Some((y_lo + (y_hi - y_lo) * (i - 1) as f64 / n as f64, y));
                }
            }
            prev = cur;
        }
        let Some((lo, hi)) = bracket else {
            return Err(QvarError::TrainedRangeBoundary(format!(
                "dy v + x0 has no root in [{y_lo}, {y_hi}] at lambda = {lambda}; widen the y range"
            )));
        };
        let y_star = crate::quad::bisect(g, lo, hi, 1e-12, 200)?;
        Ok(YStarResult {
            y_star,
            multiple_roots: crossings > 1,
        })
    }
}

/// Solution record of the coupled (y*, lambda*) optimization.
#[derive(Debug, Clone, Serialize)]
pub struct PinnSolution {
    pub epsilon: f64,
    pub x0: f64,
    pub lambda_star: f64,
    pub y_star: f64,
    /// Primal value recovered from the network: v(0, y*, ., lambda*) + x0 y*.
    pub u_c: f64,
    /// Simulated statistics of the implied terminal wealth.
    pub u_simulated: f64,
    pub u_c_simulated: f64,
    pub h: f64,
    pub p_at_l: f64,
    pub p_at_0: f64,
    pub multiple_roots: bool,
}

/// Finds y*(lambda) over the multiplier grid with the network, evaluates the
/// constraint by simulation, and inverts at 1 - epsilon (reusing the sweep
/// inversion). Errors if the answer pins to the domain boundary.
pub fn coupled_solve(
    x0: f64,
    epsilon: f64,
    model: &PinnModel,
    pool: &SamplePool,
    sim: &SimConfig,
    knots: &ConcavifiedUtility,
) -> Result<PinnSolution> {
    let mut points = Vec::with_capacity(sim.lambda_grid_size);
    let mut any_multiple = false;
    for lambda in sim.lambda_grid() {
        let ys = model.solve_y_star(lambda, x0)?;
        any_multiple |= ys.multiple_roots;
        let est = mc::primal_estimates(lambda, ys.y_star, pool, knots)?;
        points.push(SweepPoint {
            lambda,
            y_star: ys.y_star,
            residual: (model.input_derivatives(0.0, ys.y_star, model.mu_hat0, lambda).dy + x0)
                .abs(),
            u_c: est.u_c,
            u: est.u,
            h: est.h,
            p_at_l: est.p_at_l,
            p_at_0: est.p_at_0,
        });
    }
    let curve = SweepCurve {
        h_monotone: points.windows(2).all(|w| w[1].h >= w[0].h - 1e-12),
        points,
    };
    let sol = mc::invert_curve(&curve, epsilon, x0, pool, knots)?;
    let lambda_top = sim.lambda_grid().last().copied().unwrap();
    if sol.lambda_star >= lambda_top - 1e-12 && epsilon > 0.0 {
        return Err(QvarError::TrainedRangeBoundary(format!(
            "lambda* pinned at the grid top {lambda_top}; widen the lambda range"
        )));
    }
    let u_c = model.eval(0.0, sol.y_star, model.mu_hat0, sol.lambda_star) + x0 * sol.y_star;
    Ok(PinnSolution {
        epsilon,
        x0,
        lambda_star: sol.lambda_star,
        y_star: sol.y_star,
        u_c,
        u_simulated: sol.u,
        u_c_simulated: sol.u_c,
        h: sol.h,
        p_at_l: sol.p_at_l,
        p_at_0: sol.p_at_0,
        multiple_roots: any_multiple,
    })
}

/// Versioned checkpoint: layer shapes, domains, normalization constants, the
/// flattened parameters, and the config hash.
#[derive(Debug, Serialize, Deserialize)]
struct CheckpointFile {
    version: u32,
    nodes: usize,
    t_horizon: f64,
    mu_hat0: f64,
    config_hash: String,
    cfg: PinnConfig,
    scaling_lo: [f64; 4],
    scaling_hi: [f64; 4],
    params_flat: Vec<f64>,
    steps_run: usize,
    final_loss: f64,
    history: Vec<TrainLogRow>,
}

const CHECKPOINT_VERSION: u32 = 1;

impl PinnModel {
    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let file = CheckpointFile {
            version: CHECKPOINT_VERSION,
            nodes: self.cfg.nodes,
            t_horizon: self.t_horizon,
            mu_hat0: self.mu_hat0,
            config_hash: self.config_hash.clone(),
            cfg: self.cfg,
            scaling_lo: self.scaling.lo,
            scaling_hi: self.scaling.hi,
            params_flat: self.params.to_flat(),
            steps_run: self.steps_run,
            final_loss: self.final_loss,
            history: self.history.clone(),
        };
        std::fs::write(path, serde_json::to_string(&file)?)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let file: CheckpointFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if file.version != CHECKPOINT_VERSION {
            return Err(QvarError::Checkpoint(format!(
                "unsupported checkpoint version {}",
                file.version
            )));
        }
        let mut params = NetParams::zeros(file.nodes);
        if file.params_flat.len() != params.len() {
            return Err(QvarError::Checkpoint(
                "parameter count does not match the stored shape".into(),
            ));
        }
        params.assign_from_flat(&file.params_flat);
        Ok(PinnModel {
            params,
            scaling: InputScaling {
                lo: file.scaling_lo,
                hi: file.scaling_hi,
            },
            cfg: file.cfg,
            t_horizon: file.t_horizon,
            mu_hat0: file.mu_hat0,
            config_hash: file.config_hash,
            history: file.history,
            steps_run: file.steps_run,
            final_loss: file.final_loss,
        })
    }
}
