//! Dual Monte Carlo solver: Euler simulation of the dual discount factor and
//! the filtered drift, sample-average dual values, gradient descent for the
//! optimal dual start, and the multiplier-grid sweep with common random
//! numbers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{QvarError, Result};
use crate::model::{derive_params, psi, MeasureKernel, ModelParams};
use crate::quad::QuadratureSpec;
use crate::utility::{ConcavifiedUtility, EnvelopeCase};

/// Simulation and descent configuration.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Sample count M.
    pub samples: usize,
    /// Euler time steps N.
    pub steps: usize,
    /// RNG seed.
    pub seed: u64,
    /// Descent learning rate.
    pub delta: f64,
    /// Descent iterations per multiplier.
    pub descent_steps: usize,
    /// Multiplier grid size J on [0, lambda_max].
    pub lambda_grid_size: usize,
    /// Upper end of the multiplier grid.
    pub lambda_max: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            samples: 100_000,
            steps: 100,
            seed: 20_240_901,
            delta: 0.1,
            descent_steps: 200,
            lambda_grid_size: 51,
            lambda_max: 2.5,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 || self.steps == 0 {
            return Err(QvarError::InvalidParameter(
                "samples and steps must be positive".into(),
            ));
        }
        if !(self.delta > 0.0) {
            return Err(QvarError::InvalidParameter(
                "learning rate must be positive".into(),
            ));
        }
        if self.lambda_grid_size < 2 {
            return Err(QvarError::InvalidParameter(
                "lambda grid needs at least two points".into(),
            ));
        }
        if !(self.lambda_max > 0.0) {
            return Err(QvarError::InvalidParameter(
                "lambda_max must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn lambda_grid(&self) -> Vec<f64> {
        let j = self.lambda_grid_size;
        (0..j)
            .map(|i| self.lambda_max * i as f64 / (j - 1) as f64)
            .collect()
    }
}

/// Terminal samples of the dual pair, with the discretization that produced
/// them. The pool is immutable and shared across the whole multiplier grid.
#[derive(Debug, Clone)]
pub struct SamplePool {
    /// Terminal discount-factor samples (dual state per unit start).
    pub zeta: Vec<f64>,
    /// Terminal filtered drifts.
    pub mu_hat: Vec<f64>,
    pub seed: u64,
    pub steps: usize,
    pub dt: f64,
    /// Euler excursions below the positivity floor, clamped and counted.
    pub clamped: usize,
    /// Essential supremum of the continuum dual state per unit start,
    /// (1+phi) sup H; the saturated-constraint inversion pins the multiplier
    /// against this closed-form bound instead of the Euler-biased sample
    /// maximum.
    pub zeta_sup: f64,
}

const ZETA_FLOOR: f64 = 1e-12;
/// Fixed chunk length for per-stream RNG splitting; the work partition is a
/// function of the configuration alone, so worker count never changes the
/// draws.
const CHUNK: usize = 8192;

/// Worker cap: QVAR_THREADS when set, otherwise the available parallelism.
pub fn worker_count() -> usize {
    std::env::var("QVAR_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
}

fn simulate_chunk(
    out_zeta: &mut [f64],
    out_mu: &mut [f64],
    stream: u64,
    cfg: &SimConfig,
    params: &ModelParams,
) -> usize {
    let n = cfg.steps;
    let h = params.t_horizon / n as f64;
    let sqrt_h = h.sqrt();
    let mu0 = params.p * params.mu_h + (1.0 - params.p) * params.mu_l;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);
    let mut clamped = 0usize;
    for (z_out, mu_out) in out_zeta.iter_mut().zip(out_mu.iter_mut()) {
        let mut z = 1.0f64;
        let mut mu = mu0;
        for _ in 0..n {
            let draw: f64 = rng.sample(StandardNormal);
            let mpr = (mu - params.r) / params.sigma;
            z *= 1.0 - h * params.r - sqrt_h * mpr * draw;
            if z < ZETA_FLOOR {
                z = ZETA_FLOOR;
                clamped += 1;
            }
            mu = (mu + sqrt_h * psi(mu, params) * draw).clamp(params.mu_l, params.mu_h);
        }
        *z_out = z;
        *mu_out = mu;
    }
    clamped
}

/// Euler recursion for (zeta, mu_hat) under the physical filtration.
/// Deterministic for a fixed seed: sample i draws from stream i / CHUNK,
/// independently of how chunks are scheduled across workers.
pub fn simulate_paths(cfg: &SimConfig, params: &ModelParams) -> Result<SamplePool> {
    cfg.validate()?;
    params.validate()?;
    let m = cfg.samples;

    let mut zeta = vec![0.0; m];
    let mut mu_hat = vec![0.0; m];

    type Job<'a> = (u64, &'a mut [f64], &'a mut [f64]);
    let jobs: Vec<Job> = zeta
        .chunks_mut(CHUNK)
        .zip(mu_hat.chunks_mut(CHUNK))
        .enumerate()
        .map(|(i, (z, mu))| (i as u64, z, mu))
        .collect();

    let workers = worker_count().min(jobs.len().max(1));
    let clamped = if workers <= 1 {
        let mut clamped = 0;
        for (stream, z, mu) in jobs {
            clamped += simulate_chunk(z, mu, stream, cfg, params);
        }
        clamped
    } else {
        let counts = std::sync::Mutex::new(0usize);
        std::thread::scope(|scope| {
            let mut queues: Vec<Vec<Job>> = (0..workers).map(|_| Vec::new()).collect();
            for (i, job) in jobs.into_iter().enumerate() {
                queues[i % workers].push(job);
            }
            for queue in queues {
                let counts = &counts;
                scope.spawn(move || {
                    let mut local = 0;
                    for (stream, z, mu) in queue {
                        local += simulate_chunk(z, mu, stream, cfg, params);
                    }
                    *counts.lock().unwrap() += local;
                });
            }
        });
        counts.into_inner().unwrap()
    };

    let derived = derive_params(params)?;
    let kernel = MeasureKernel::terminal(params, &derived);
    let (_, h_sup) = kernel.h_sup(&QuadratureSpec::default());

    Ok(SamplePool {
        zeta,
        mu_hat,
        seed: cfg.seed,
        steps: cfg.steps,
        dt: params.t_horizon / cfg.steps as f64,
        clamped,
        zeta_sup: (1.0 + derived.phi) * h_sup,
    })
}

impl SamplePool {
    pub fn len(&self) -> usize {
        self.zeta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zeta.is_empty()
    }

    /// Fraction of Euler steps that hit the positivity floor; above 0.1% of
    /// samples the discretization is too coarse.
    pub fn clamp_fraction(&self) -> f64 {
        self.clamped as f64 / self.zeta.len() as f64
    }
}

/// Sample-average dual value (1/M) sum V^c_lambda(y zeta_i).
pub fn mc_dual_value(
    y: f64,
    lambda: f64,
    pool: &SamplePool,
    knots: &ConcavifiedUtility,
) -> Result<f64> {
    if !(y > 0.0) {
        return Err(QvarError::Domain(format!("y must be positive, got {y}")));
    }
    let case = knots.case(lambda)?;
    let mut sum = 0.0;
    for &z in &pool.zeta {
        sum += knots.v_dual_with(&case, y * z)?;
    }
    Ok(sum / pool.len() as f64)
}

/// Result of one fixed-multiplier descent.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DescentResult {
    pub y_star: f64,
    /// First-order residual |(1/M) sum zeta V'(y zeta) + x0| at the return.
    pub residual: f64,
}

fn descent_gradient(y: f64, x0: f64, pool: &SamplePool, knots: &ConcavifiedUtility, case: &EnvelopeCase) -> f64 {
    // (1/M) sum zeta (V^c)'(y zeta) + x0 with (V^c)' = -x*
    let mut sum = 0.0;
    for &z in &pool.zeta {
        sum += z * knots.v_dual_derivative_with(case, y * z);
    }
    sum / pool.len() as f64 + x0
}

/// Fixed-step gradient descent on y -> MC dual value + x0 y, from the given
/// start. The iteration count is a fixed budget; the residual is reported.
pub fn optimize_y_from(
    lambda: f64,
    x0: f64,
    start: f64,
    pool: &SamplePool,
    cfg: &SimConfig,
    knots: &ConcavifiedUtility,
) -> Result<DescentResult> {
    if !(x0 > 0.0) {
        return Err(QvarError::Domain(format!("x0 must be positive, got {x0}")));
    }
    let case = knots.case(lambda)?;
    let mut y = start;
    for _ in 0..cfg.descent_steps {
        let grad = descent_gradient(y, x0, pool, knots, &case);
        y -= cfg.delta * grad;
        if !(1e-6..=1e6).contains(&y) {
            return Err(QvarError::DescentDiverged {
                y,
                lo: 1e-6,
                hi: 1e6,
            });
        }
    }
    let residual = descent_gradient(y, x0, pool, knots, &case).abs();
    Ok(DescentResult { y_star: y, residual })
}

/// Descent from the standard start y = 1.
pub fn optimize_y(
    lambda: f64,
    x0: f64,
    pool: &SamplePool,
    cfg: &SimConfig,
    knots: &ConcavifiedUtility,
) -> Result<DescentResult> {
    optimize_y_from(lambda, x0, 1.0, pool, cfg, knots)
}

/// Primal sample averages at a fixed (lambda, y*).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PrimalEstimates {
    /// Concavified value (1/M) sum U^c_lambda(x*(y* zeta)).
    pub u_c: f64,
    /// True utility (1/M) sum U(x*(y* zeta)).
    pub u: f64,
    /// Floor-clearing fraction h.
    pub h: f64,
    /// Atom frequencies.
    pub p_at_l: f64,
    pub p_at_0: f64,
}

pub fn primal_estimates(
    lambda: f64,
    y_star: f64,
    pool: &SamplePool,
    knots: &ConcavifiedUtility,
) -> Result<PrimalEstimates> {
    if !(y_star > 0.0) {
        return Err(QvarError::Domain(format!(
            "y_star must be positive, got {y_star}"
        )));
    }
    let case = knots.case(lambda)?;
    let spec = &knots.spec;
    let m = pool.len() as f64;
    let (mut u_c, mut u, mut h, mut p_l, mut p_0) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &z in &pool.zeta {
        let x = knots.x_star_with(&case, y_star * z)?;
        u_c += knots.envelope_with(&case, x);
        u += spec.eval_u(x);
        if x >= spec.floor {
            h += 1.0;
        }
        if x == spec.floor {
            p_l += 1.0;
        }
        if x == 0.0 {
            p_0 += 1.0;
        }
    }
    Ok(PrimalEstimates {
        u_c: u_c / m,
        u: u / m,
        h: h / m,
        p_at_l: p_l / m,
        p_at_0: p_0 / m,
    })
}

/// One multiplier grid point of a sweep.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SweepPoint {
    pub lambda: f64,
    pub y_star: f64,
    pub residual: f64,
    pub u_c: f64,
    pub u: f64,
    pub h: f64,
    pub p_at_l: f64,
    pub p_at_0: f64,
}

/// The (lambda_j, y*_j, h_j, ...) curve over the multiplier grid, computed
/// once per pool and reused for every epsilon.
#[derive(Debug, Clone, Serialize)]
pub struct SweepCurve {
    pub points: Vec<SweepPoint>,
    /// True when h is nondecreasing along the grid (expected under common
    /// random numbers).
    pub h_monotone: bool,
}

/// Grid points per sweep block: descents warm-start within a block, and the
/// block partition is fixed so worker count does not change results.
const SWEEP_BLOCK: usize = 8;

fn sweep_block(
    lambdas: &[f64],
    x0: f64,
    pool: &SamplePool,
    cfg: &SimConfig,
    knots: &ConcavifiedUtility,
) -> Result<Vec<SweepPoint>> {
    let mut out = Vec::with_capacity(lambdas.len());
    let mut start = 1.0;
    for &lambda in lambdas {
        let d = optimize_y_from(lambda, x0, start, pool, cfg, knots)?;
        start = d.y_star;
        let est = primal_estimates(lambda, d.y_star, pool, knots)?;
        out.push(SweepPoint {
            lambda,
            y_star: d.y_star,
            residual: d.residual,
            u_c: est.u_c,
            u: est.u,
            h: est.h,
            p_at_l: est.p_at_l,
            p_at_0: est.p_at_0,
        });
    }
    Ok(out)
}

/// Runs the descent over the whole multiplier grid with one shared pool.
/// Blocks of grid points fan out across workers; results are identical for
/// any worker count.
pub fn sweep_curve(
    x0: f64,
    pool: &SamplePool,
    cfg: &SimConfig,
    knots: &ConcavifiedUtility,
) -> Result<SweepCurve> {
    let grid = cfg.lambda_grid();
    let blocks: Vec<&[f64]> = grid.chunks(SWEEP_BLOCK).collect();
    let workers = worker_count().min(blocks.len());

    let results: Vec<Result<Vec<SweepPoint>>> = if workers <= 1 {
        blocks
            .iter()
            .map(|b| sweep_block(b, x0, pool, cfg, knots))
            .collect()
    } else {
        let mut slots: Vec<Option<Result<Vec<SweepPoint>>>> =
            (0..blocks.len()).map(|_| None).collect();
        std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for (i, chunk) in slots.chunks_mut(1).enumerate() {
                let block = blocks[i];
                let slot = &mut chunk[0];
                handles.push(scope.spawn(move || {
                    *slot = Some(sweep_block(block, x0, pool, cfg, knots));
                }));
                if handles.len() == workers {
                    handles.drain(..).for_each(|h| h.join().unwrap());
                }
            }
            handles.drain(..).for_each(|h| h.join().unwrap());
        });
        slots.into_iter().map(|s| s.unwrap()).collect()
    };

    let mut points = Vec::with_capacity(grid.len());
    for block in results {
        points.extend(block?);
    }
    let h_monotone = points.windows(2).all(|w| w[1].h >= w[0].h - 1e-12);
    Ok(SweepCurve { points, h_monotone })
}

/// Solution record produced by inverting the sweep curve at one epsilon.
#[derive(Debug, Clone, Serialize)]
pub struct McSolution {
    pub epsilon: f64,
    pub x0: f64,
    pub lambda_star: f64,
    pub y_star: f64,
    pub u_c: f64,
    pub u: f64,
    pub h: f64,
    pub p_at_l: f64,
    pub p_at_0: f64,
}

/// In-sample constraint fraction at an off-grid multiplier, with the dual
/// start interpolated linearly between the bracketing grid optima.
fn h_between(
    lambda: f64,
    a: &SweepPoint,
    b: &SweepPoint,
    pool: &SamplePool,
    knots: &ConcavifiedUtility,
) -> Result<(f64, f64)> {
    let w = (lambda - a.lambda) / (b.lambda - a.lambda);
    let y = a.y_star * (1.0 - w) + b.y_star * w;
    let case = knots.case(lambda)?;
    let mut count = 0usize;
    for &z in &pool.zeta {
        if knots.x_star_with(&case, y * z)? >= knots.spec.floor {
            count += 1;
        }
    }
    Ok((count as f64 / pool.len() as f64, y))
}

/// Dual start at an off-grid multiplier, interpolated linearly along the
/// whole grid.
fn y_star_interp(pts: &[SweepPoint], lambda: f64) -> f64 {
    let j = pts
        .iter()
        .position(|p| p.lambda >= lambda)
        .unwrap_or(pts.len() - 1)
        .max(1);
    let (a, b) = (&pts[j - 1], &pts[j]);
    let w = ((lambda - a.lambda) / (b.lambda - a.lambda)).clamp(0.0, 1.0);
    a.y_star * (1.0 - w) + b.y_star * w
}

/// Inverts the monotone constraint curve at the target 1 - epsilon.
///
/// Interior targets interpolate linearly between the bracketing grid points.
/// A surely-binding constraint (epsilon = 0) saturates the sample curve, so
/// interpolation degenerates; the multiplier is then pinned by the
/// threshold identity k_lambda = y*(lambda) (1+phi) sup H against the
/// closed-form bound of the dual state, with y*(lambda) interpolated
/// between the grid optima. An interior saturated bracket (a sample
/// plateau) falls back to in-sample bisection.
pub fn invert_curve(
    curve: &SweepCurve,
    epsilon: f64,
    x0: f64,
    pool: &SamplePool,
    knots: &ConcavifiedUtility,
) -> Result<McSolution> {
    let target = 1.0 - epsilon;
    let pts = &curve.points;
    let first = &pts[0];
    if first.h >= target {
        return Ok(McSolution {
            epsilon,
            x0,
            lambda_star: 0.0,
            y_star: first.y_star,
            u_c: first.u_c,
            u: first.u,
            h: first.h,
            p_at_l: first.p_at_l,
            p_at_0: first.p_at_0,
        });
    }

    if target >= 1.0 {
        // surely-binding floor: solve k_lambda = y*(lambda) zeta_sup
        let g = |lambda: f64| knots.k_lambda(lambda) - y_star_interp(pts, lambda) * pool.zeta_sup;
        let lo = pts[0].lambda;
        let hi = pts[pts.len() - 1].lambda;
        if !(g(lo) < 0.0 && g(hi) > 0.0) {
            let max_h = pts.iter().fold(f64::NEG_INFINITY, |m, p| m.max(p.h));
            return Err(QvarError::LambdaGridExhausted { max_h });
        }
        let lambda_star = crate::quad::bisect(g, lo, hi, 1e-12, 200)?;
        let y_star = y_star_interp(pts, lambda_star);
        let est = primal_estimates(lambda_star, y_star, pool, knots)?;
        // the realized floor mass must be statistically full, otherwise the
        // start is infeasible for a surely-binding constraint
        if est.h < 0.99 {
            return Err(QvarError::LambdaGridExhausted { max_h: est.h });
        }
        return Ok(McSolution {
            epsilon,
            x0,
            lambda_star,
            y_star,
            u_c: est.u_c,
            u: est.u,
            h: est.h,
            p_at_l: est.p_at_l,
            p_at_0: est.p_at_0,
        });
    }

    let max_h = pts.iter().fold(f64::NEG_INFINITY, |m, p| m.max(p.h));
    if max_h < target {
        return Err(QvarError::LambdaGridExhausted { max_h });
    }
    let j = pts.iter().position(|p| p.h >= target).unwrap();
    let (a, b) = (&pts[j - 1], &pts[j]);

    let lambda_star = if b.h > target {
        a.lambda + (target - a.h) * (b.lambda - a.lambda) / (b.h - a.h)
    } else {
        // saturated bracket: find the smallest multiplier attaining the
        // target on the in-sample curve
        let mut lo = a.lambda;
        let mut hi = b.lambda;
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            let (h_mid, _) = h_between(mid, a, b, pool, knots)?;
            if h_mid >= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };

    let (_, y_guess) = h_between(lambda_star, a, b, pool, knots)?;
    let est = primal_estimates(lambda_star, y_guess, pool, knots)?;
    Ok(McSolution {
        epsilon,
        x0,
        lambda_star,
        y_star: y_guess,
        u_c: est.u_c,
        u: est.u,
        h: est.h,
        p_at_l: est.p_at_l,
        p_at_0: est.p_at_0,
    })
}

/// Full sweep-and-invert for one epsilon.
pub fn lambda_sweep(
    x0: f64,
    epsilon: f64,
    pool: &SamplePool,
    cfg: &SimConfig,
    knots: &ConcavifiedUtility,
) -> Result<McSolution> {
    let curve = sweep_curve(x0, pool, cfg, knots)?;
    invert_curve(&curve, epsilon, x0, pool, knots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::utility::{compute_knots, UtilitySpec};
    use approx::assert_abs_diff_eq;

    fn small_cfg() -> SimConfig {
        SimConfig {
            samples: 20_000,
            seed: 11,
            ..SimConfig::default()
        }
    }

    fn knots() -> ConcavifiedUtility {
        compute_knots(&UtilitySpec::default()).unwrap()
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let cfg = SimConfig {
            samples: 5000,
            ..SimConfig::default()
        };
        let params = ModelParams::default();
        let a = simulate_paths(&cfg, &params).unwrap();
        let b = simulate_paths(&cfg, &params).unwrap();
        assert_eq!(a.zeta, b.zeta);
        assert_eq!(a.mu_hat, b.mu_hat);
        let mut cfg2 = cfg;
        cfg2.seed += 1;
        let c = simulate_paths(&cfg2, &params).unwrap();
        assert_ne!(a.zeta, c.zeta);
    }

    #[test]
    fn deterministic_drift_without_noise_terms() {
        // mu = r freezes the market price of risk at the prior and psi = 0
        // keeps the filter constant, so zeta is (1 - h r)^N exactly
        let params = ModelParams {
            mu_l: 0.05 - 1e-9,
            mu_h: 0.05 + 1e-9,
            p: 0.5,
            ..ModelParams::default()
        };
        let cfg = SimConfig {
            samples: 100,
            steps: 50,
            ..SimConfig::default()
        };
        let pool = simulate_paths(&cfg, &params).unwrap();
        let h = params.t_horizon / 50.0;
        let expect = (1.0 - h * params.r).powi(50);
        for &z in &pool.zeta {
            assert_abs_diff_eq!(z, expect, epsilon = 1e-9);
        }
    }

    #[test]
    fn discount_mean_within_three_standard_errors() {
        let cfg = SimConfig::default();
        let params = ModelParams::default();
        let pool = simulate_paths(&cfg, &params).unwrap();
        let m = pool.len() as f64;
        let mean: f64 = pool.zeta.iter().sum::<f64>() / m;
        let var: f64 = pool.zeta.iter().map(|z| (z - mean) * (z - mean)).sum::<f64>() / m;
        let se = (var / m).sqrt();
        let target = (-params.r * params.t_horizon).exp();
        assert!(
            (mean - target).abs() <= 3.0 * se,
            "mean {mean} vs {target} (3se = {})",
            3.0 * se
        );
        assert!(pool.clamp_fraction() < 1e-3);
        // filtered drift stays on the state interval
        assert!(pool
            .mu_hat
            .iter()
            .all(|&mu| (params.mu_l..=params.mu_h).contains(&mu)));
    }

    #[test]
    fn dual_value_constant_branch() {
        let pool = simulate_paths(&small_cfg(), &ModelParams::default()).unwrap();
        let k = knots();
        // push every sample beyond k_lambda: the conjugate is flat there
        let lambda = 2.0;
        let y = 1e5;
        let v = mc_dual_value(y, lambda, &pool, &k).unwrap();
        assert_abs_diff_eq!(v, -k.spec.u2(k.spec.theta), epsilon = 1e-14);
        assert!(mc_dual_value(0.0, 0.2, &pool, &k).is_err());
    }

    #[test]
    fn dual_value_convex_in_y() {
        let pool = simulate_paths(&small_cfg(), &ModelParams::default()).unwrap();
        let k = knots();
        for &lambda in &[0.0, 1.5] {
            let grid: Vec<f64> = (1..=40).map(|i| 0.1 * i as f64).collect();
            let vals: Vec<f64> = grid
                .iter()
                .map(|&y| mc_dual_value(y, lambda, &pool, &k).unwrap())
                .collect();
            for i in 1..vals.len() - 1 {
                assert!(vals[i] <= 0.5 * (vals[i - 1] + vals[i + 1]) + 1e-10);
            }
        }
    }

    #[test]
    fn descent_converges_and_reports_residual() {
        let pool = simulate_paths(&SimConfig::default(), &ModelParams::default()).unwrap();
        let cfg = SimConfig::default();
        let k = knots();
        let d = optimize_y(0.0, 1.0, &pool, &cfg, &k).unwrap();
        // printed rounding for the unconstrained row: 0.946
        assert_abs_diff_eq!(d.y_star, 0.945, epsilon = 5e-3);
        assert!(d.residual <= 1e-3);

        let d = optimize_y(1.453, 1.0, &pool, &cfg, &k).unwrap();
        assert_abs_diff_eq!(d.y_star, 1.795, epsilon = 5e-3);
        assert!(d.residual <= 1e-3);
    }

    #[test]
    fn descent_divergence_guard() {
        let pool = simulate_paths(&small_cfg(), &ModelParams::default()).unwrap();
        let cfg = SimConfig {
            delta: 1e5,
            ..small_cfg()
        };
        assert!(matches!(
            optimize_y(0.0, 1.0, &pool, &cfg, &knots()),
            Err(QvarError::DescentDiverged { .. })
        ));
    }

    #[test]
    fn primal_estimates_sanity() {
        let pool = simulate_paths(&small_cfg(), &ModelParams::default()).unwrap();
        let cfg = small_cfg();
        let k = knots();
        let d = optimize_y(0.0, 1.0, &pool, &cfg, &k).unwrap();
        let est = primal_estimates(0.0, d.y_star, &pool, &k).unwrap();
        // at lambda = 0 the only atom below the floor is zero wealth
        assert_abs_diff_eq!(est.h, 1.0 - est.p_at_0, epsilon = 1e-12);
        assert_eq!(est.p_at_l, 0.0);
        assert!(est.u <= est.u_c + 1e-12);
    }

    #[test]
    fn sweep_monotone_and_inverts() {
        let cfg = SimConfig {
            samples: 20_000,
            lambda_grid_size: 26,
            seed: 11,
            ..SimConfig::default()
        };
        let pool = simulate_paths(&cfg, &ModelParams::default()).unwrap();
        let k = knots();
        let curve = sweep_curve(1.0, &pool, &cfg, &k).unwrap();
        assert!(curve.h_monotone);

        // vacuous constraint
        let sol = invert_curve(&curve, 1.0, 1.0, &pool, &k).unwrap();
        assert_eq!(sol.lambda_star, 0.0);

        // binding constraint: the inverted point honors the target level
        let sol = invert_curve(&curve, 0.1, 1.0, &pool, &k).unwrap();
        assert!(sol.lambda_star > 1.0 && sol.lambda_star < 2.0);
        assert_abs_diff_eq!(sol.h, 0.9, epsilon = 1e-2);

        // surely-binding constraint: the multiplier is pinned against the
        // closed-form dual-state bound rather than the sample maximum
        let sol = invert_curve(&curve, 0.0, 1.0, &pool, &k).unwrap();
        assert!(
            sol.lambda_star > 1.60 && sol.lambda_star < 1.72,
            "saturated inversion gave {}",
            sol.lambda_star
        );
        assert!(sol.h >= 0.99);

        // infeasible start: the grid cannot reach the target
        let cfg_small = SimConfig {
            samples: 20_000,
            lambda_grid_size: 26,
            seed: 11,
            ..SimConfig::default()
        };
        let err = lambda_sweep(0.6, 0.2, &pool, &cfg_small, &k).unwrap_err();
        assert!(matches!(err, QvarError::LambdaGridExhausted { .. }));
        let err = lambda_sweep(0.6, 0.0, &pool, &cfg_small, &k).unwrap_err();
        assert!(matches!(err, QvarError::LambdaGridExhausted { .. }));
    }
}
