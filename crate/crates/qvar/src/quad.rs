//! One-dimensional quadrature against a centered normal density, plus the
//! scalar root-finding helpers the solvers share.
//!
//! Every expectation in the semi-closed machinery is of the form
//! `E[g(W)]` with `W ~ N(0, tau)`. Integrands are piecewise smooth: the
//! only non-smooth points come from indicator thresholds, so the engine
//! accepts a list of breakpoints and splits the Gauss-Legendre panels there.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{QvarError, Result};

/// Settings for the quadrature engine.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSpec {
    /// Target number of Gauss-Legendre nodes across the truncated domain.
    pub node_count: usize,
    /// Domain half-width in standard deviations.
    pub truncation: f64,
    /// Absolute tolerance (in w) for locating integrand discontinuities.
    pub split_tolerance: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            node_count: 512,
            truncation: 8.0,
            split_tolerance: 1e-10,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.node_count < 64 {
            return Err(QvarError::InvalidParameter(format!(
                "node_count must be >= 64, got {}",
                self.node_count
            )));
        }
        if !(self.truncation >= 6.0) {
            return Err(QvarError::InvalidParameter(format!(
                "truncation must be >= 6, got {}",
                self.truncation
            )));
        }
        if !(self.split_tolerance > 0.0) {
            return Err(QvarError::InvalidParameter(
                "split_tolerance must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1], computed by Newton iteration
/// on the Legendre recurrence and cached per order.
fn gauss_legendre(n: usize) -> Arc<Vec<(f64, f64)>> {
    type RuleCache = Mutex<HashMap<usize, Arc<Vec<(f64, f64)>>>>;
    static CACHE: OnceLock<RuleCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(rule) = cache.lock().unwrap().get(&n) {
        return Arc::clone(rule);
    }

    let nf = n as f64;
    let mut rule = vec![(0.0, 0.0); n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j as f64 + 1.0);
            }
            pp = nf * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z -= p1 / pp;
            if (z - z1).abs() <= 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * pp * pp);
        rule[i] = (-z, w);
        rule[n - 1 - i] = (z, w);
    }

    let rule = Arc::new(rule);
    cache.lock().unwrap().insert(n, Arc::clone(&rule));
    rule
}

/// Density of N(0, tau) at w.
pub fn normal_pdf(w: f64, tau: f64) -> f64 {
    (-w * w / (2.0 * tau)).exp() / (2.0 * std::f64::consts::PI * tau).sqrt()
}

fn gl_panel<F>(g: &F, lo: f64, hi: f64, n: usize, tau: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let rule = gauss_legendre(n);
    let mid = 0.5 * (hi + lo);
    let scale = 0.5 * (hi - lo);
    let mut total = 0.0;
    for &(x, w) in rule.iter() {
        let node = mid + scale * x;
        let value = g(node);
        if !value.is_finite() {
            return Err(QvarError::NonFiniteIntegrand { at: node });
        }
        total += w * scale * value * normal_pdf(node, tau);
    }
    Ok(total)
}

/// Recursive refinement: a panel is accepted once halving it no longer moves
/// the estimate. Known breakpoints make every panel smooth so this
/// terminates immediately; without them the refinement localizes any missed
/// discontinuity instead of silently losing accuracy.
fn adaptive_panel<F>(g: &F, lo: f64, hi: f64, n: usize, tau: f64, depth: usize) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let coarse = gl_panel(g, lo, hi, n, tau)?;
    let mid = 0.5 * (lo + hi);
    let left = gl_panel(g, lo, mid, n, tau)?;
    let right = gl_panel(g, mid, hi, n, tau)?;
    let fine = left + right;
    if (fine - coarse).abs() <= (1e-12 * fine.abs()).max(1e-13) || depth >= 48 {
        return Ok(fine);
    }
    Ok(adaptive_panel(g, lo, mid, n, tau, depth + 1)?
        + adaptive_panel(g, mid, hi, n, tau, depth + 1)?)
}

/// Computes `E[g(W)]` for `W ~ N(0, tau)` by composite Gauss-Legendre
/// quadrature over `[-truncation*sqrt(tau), truncation*sqrt(tau)]`, splitting
/// panels at the supplied breakpoints and refining each panel until its
/// estimate is stable. Deterministic for a fixed spec.
pub fn q_expect<F>(g: F, tau: f64, spec: &QuadratureSpec, breakpoints: &[f64]) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    assert!(tau > 0.0, "q_expect requires tau > 0");
    let half = spec.truncation * tau.sqrt();

    let mut edges = Vec::with_capacity(breakpoints.len() + 2);
    edges.push(-half);
    for &b in breakpoints {
        if b > -half && b < half {
            edges.push(b);
        }
    }
    edges.push(half);
    edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
    edges.dedup_by(|a, b| (*a - *b).abs() <= spec.split_tolerance);

    let width_total = 2.0 * half;
    let mut total = 0.0;
    for pair in edges.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        if hi <= lo {
            continue;
        }
        let allotted = ((spec.node_count as f64 * (hi - lo) / width_total).ceil() as usize).max(32);
        // base sub-panels of at most 64 nodes; the refinement takes over
        // from there
        let sub = allotted.div_ceil(64);
        let n = allotted.div_ceil(sub).max(32);
        let step = (hi - lo) / sub as f64;
        for k in 0..sub {
            let a = lo + step * k as f64;
            let b = if k + 1 == sub { hi } else { a + step };
            total += adaptive_panel(&g, a, b, n, tau, 0)?;
        }
    }
    Ok(total)
}

/// Bisection for a root of `f` on a bracketing interval. `f(lo)` and `f(hi)`
/// must have opposite signs (zero endpoints count as roots).
pub fn bisect<F>(f: F, mut lo: f64, mut hi: f64, xtol: f64, max_iter: usize) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(QvarError::BracketFailure(format!(
            "no sign change on [{lo}, {hi}] (f: {flo} .. {fhi})"
        )));
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        let fmid = f(mid);
        if fmid == 0.0 || (hi - lo) <= xtol {
            return Ok(mid);
        }
        if fmid.signum() == flo.signum() {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// All solutions of `f(w) = level` on [lo, hi], found by a dense sign scan
/// (`n_scan` intervals) refined with bisection to `xtol`. Assumes crossings
/// are isolated at the scan resolution.
pub fn find_level_crossings<F>(
    f: F,
    level: f64,
    lo: f64,
    hi: f64,
    n_scan: usize,
    xtol: f64,
) -> Vec<f64>
where
    F: Fn(f64) -> f64,
{
    let step = (hi - lo) / n_scan as f64;
    let mut out = Vec::new();
    let mut prev_w = lo;
    let mut prev = f(lo) - level;
    for i in 1..=n_scan {
        let w = lo + step * i as f64;
        let cur = f(w) - level;
        if prev == 0.0 {
            out.push(prev_w);
        } else if prev.signum() != cur.signum() && cur != 0.0 {
            if let Ok(root) = bisect(|x| f(x) - level, prev_w, w, xtol, 200) {
                out.push(root);
            }
        }
        prev_w = w;
        prev = cur;
    }
    if prev == 0.0 {
        out.push(hi);
    }
    out
}

/// Maximum of `f` on [lo, hi]: dense scan followed by golden-section
/// refinement around the best node. Returns (argmax, max).
pub fn max_on_interval<F>(f: F, lo: f64, hi: f64, n_scan: usize) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let step = (hi - lo) / n_scan as f64;
    let mut best_i = 0;
    let mut best = f64::NEG_INFINITY;
    for i in 0..=n_scan {
        let v = f(lo + step * i as f64);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let mut a = lo + step * best_i.saturating_sub(1) as f64;
    let mut b = (lo + step * (best_i + 1) as f64).min(hi);
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() < 1e-14 * (1.0 + a.abs()) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let arg = 0.5 * (a + b);
    let val = f(arg);
    if val >= best {
        (arg, val)
    } else {
        (lo + step * best_i as f64, best)
    }
}
