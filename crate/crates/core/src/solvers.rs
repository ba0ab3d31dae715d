//! Numerical subroutines: bracketing root finder, projected-gradient
//! minimization, the ball-constrained program behind balanced descent, and
//! two offline optimizers.

use serde::Serialize;

use crate::functions::{ConvexFunction, Quadratic};
use crate::geometry::{project_intersection, FeasibleSet, Point, SimpleSet};
use crate::instance::Instance;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepRule {
    /// Always step `1/beta`.
    Fixed,
    /// Start at `1/beta`, halve until the sufficient-decrease test holds.
    #[default]
    Backtracking,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub step_rule: StepRule,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { tol: 1e-9, max_iter: 100_000, step_rule: StepRule::Backtracking }
    }
}

impl SolverConfig {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::InvalidMode(format!(
                "solver needs tol > 0 and max_iter > 0, got ({}, {})",
                self.tol, self.max_iter
            )));
        }
        Ok(())
    }
}

/// Result of [`bisect_root`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub point: f64,
    /// `|g(point)|`.
    pub residual: f64,
}

/// Bisection on a sign change of `g` over `[lo, hi]`.
///
/// The returned point is the end of a bracket of width at most `tol` on the
/// side where `g` has the sign of `g(hi)`. When `g(lo) = 0`, `lo` is returned.
/// If the nonnegative set of `g` (oriented so `g(lo) < 0`) is an interval, the
/// smallest root is found.
///
/// ```
/// use convex_chase::solvers::bisect_root;
/// let root = bisect_root(|s| s * s + s - 1.0, 0.0, 1.0, 1e-12).unwrap();
/// assert!((root.point - 0.6180339887498949).abs() < 1e-11);
/// ```
pub fn bisect_root(mut g: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> Result<Root> {
    let g_lo = g(lo);
    if g_lo == 0.0 {
        return Ok(Root { point: lo, residual: 0.0 });
    }
    let g_hi = g(hi);
    if g_lo.signum() == g_hi.signum() && g_hi != 0.0 || g_lo.is_nan() || g_hi.is_nan() {
        return Err(Error::NoBracket { g_lo, g_hi });
    }
    let sign = if g_lo < 0.0 { 1.0 } else { -1.0 };
    let mut at_hi = g_hi;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = g(mid);
        if sign * v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
            at_hi = v;
        }
    }
    Ok(Root { point: hi, residual: at_hi.abs() })
}

/// Gradient, with `0` standing in at the kink of a norm-like function.
pub(crate) fn subgradient(f: &ConvexFunction, x: &Point) -> Result<Point> {
    match f.gradient(x) {
        Err(Error::NotDifferentiable) => Ok(Point::zeros(x.len())),
        other => other,
    }
}

/// The pieces of `K ∩ dom f`.
pub(crate) fn region(f: &ConvexFunction, k: &FeasibleSet) -> Vec<SimpleSet> {
    let mut sets = k.pieces();
    if let Some(a) = f.support() {
        sets.push(SimpleSet::Affine(a.clone()));
    }
    sets
}

fn region_violation(sets: &[SimpleSet], x: &Point) -> f64 {
    sets.iter().fold(0.0, |m, s| m.max(s.violation(x)))
}

/// `argmin_{x ∈ K} f(x)`.
///
/// Returns the global minimizer when it is feasible, otherwise runs
/// projected gradient from the projection of `start` until the residual
/// `|x - P(x - ∇f(x)/beta)|` drops below `cfg.tol`. For a plain subspace
/// indicator every point of `A ∩ K` is a minimizer and the projection of
/// `start` is returned.
pub fn constrained_minimize(f: &ConvexFunction, k: &FeasibleSet, start: &Point, cfg: &SolverConfig) -> Result<Point> {
    let sets = region(f, k);
    if is_plain_indicator(f) {
        return project_intersection(start, &sets, cfg.tol);
    }
    let m = f.global_minimizer();
    if region_violation(&sets, &m) <= 0.1 * cfg.tol {
        return Ok(m);
    }
    minimize_over(f, &sets, start, cfg)
}

fn is_plain_indicator(f: &ConvexFunction) -> bool {
    matches!(f, ConvexFunction::Subspace(s) if s.inner().is_none())
}

/// Projected gradient over the intersection of `sets`.
pub(crate) fn minimize_over(f: &ConvexFunction, sets: &[SimpleSet], start: &Point, cfg: &SolverConfig) -> Result<Point> {
    let proj_tol = 0.1 * cfg.tol;
    let project = |x: &Point| project_intersection(x, sets, proj_tol);
    let beta = f.conditioning().beta;
    let nominal = if beta > 0.0 && beta.is_finite() { 1.0 / beta } else { 1.0 };
    let mut x = project(start)?;
    let mut fx = f.evaluate(&x)?;
    let mut step = nominal;
    for _ in 0..cfg.max_iter {
        let g = subgradient(f, &x)?;
        let probe = project(&(&x - &g * nominal))?;
        if (&probe - &x).norm() <= cfg.tol {
            return Ok(x);
        }
        let next = match cfg.step_rule {
            StepRule::Fixed => probe,
            StepRule::Backtracking => {
                step = (step * 2.0).min(nominal);
                let mut y = probe;
                let mut first = true;
                loop {
                    if !first {
                        y = project(&(&x - &g * step))?;
                    }
                    first = false;
                    let d = &y - &x;
                    let fy = f.evaluate(&y)?;
                    let model = fx + g.dot(&d) + d.norm_squared() / (2.0 * step);
                    if fy <= model + 1e-15 * fx.abs() || step < 1e-18 * nominal {
                        break y;
                    }
                    step *= 0.5;
                }
            }
        };
        x = next;
        fx = f.evaluate(&x)?;
    }
    Err(Error::NonConvergence { what: "projected gradient", iterations: cfg.max_iter })
}

/// `argmin { f(x) : |x - x_prev| <= r, x ∈ K }`.
///
/// Unconstrained quadratics (and quadratics living on a subspace) are solved
/// exactly through the secular equation of the trust-region problem;
/// everything else goes through projected gradient on `K ∩ Ball(x_prev, r)`.
pub fn cobd_inner(f: &ConvexFunction, x_prev: &Point, r: f64, k: &FeasibleSet, cfg: &SolverConfig) -> Result<Point> {
    if !(r >= 0.0) {
        return Err(Error::InvalidSet(format!("ball radius must be nonnegative, got {r}")));
    }
    if r == 0.0 {
        return Ok(x_prev.clone());
    }
    let sets = region(f, k);
    if !is_plain_indicator(f) {
        let m = f.global_minimizer();
        if (&m - x_prev).norm() <= r && region_violation(&sets, &m) <= 0.1 * cfg.tol {
            return Ok(m);
        }
    }
    if k.is_whole_space() {
        match f {
            ConvexFunction::Quadratic(q) => return Ok(trust_region(q, x_prev, r)),
            ConvexFunction::Subspace(s) => {
                let a = s.support();
                let foot = a.project(x_prev);
                let off = (x_prev - &foot).norm();
                let inner_r = (r * r - off * off).max(0.0).sqrt();
                return Ok(match s.inner() {
                    None => foot,
                    Some(g) if inner_r == 0.0 || a.dim() == 0 => {
                        let _ = g;
                        foot
                    }
                    Some(g) => a.lift(&trust_region(g, &a.coords(&foot), inner_r)),
                });
            }
            _ => {}
        }
    }
    let mut sets = sets;
    sets.push(SimpleSet::Ball { center: x_prev.clone(), radius: r });
    minimize_over(f, &sets, x_prev, cfg)
}

/// `argmin ½(x-c)ᵀH(x-c)` over `|x - x_prev| <= r`.
fn trust_region(q: &Quadratic, x_prev: &Point, r: f64) -> Point {
    let (lam, vecs) = q.spectrum();
    let g = q.gradient(x_prev);
    let gh = match vecs {
        Some(v) => v.transpose() * &g,
        None => g.clone(),
    };
    let top = lam.iter().copied().fold(0.0, f64::max);
    let flat = 1e-14 * top;
    let step_norm = |eta: f64| -> f64 {
        lam.iter()
            .zip(gh.iter())
            .map(|(&l, &c)| if l + eta > flat { (c / (l + eta)).powi(2) } else { 0.0 })
            .sum::<f64>()
            .sqrt()
    };
    let eta = if step_norm(0.0) <= r {
        0.0
    } else {
        let (mut lo, mut hi) = (0.0, g.norm() / r);
        while step_norm(hi) > r {
            hi *= 2.0;
        }
        for _ in 0..4000 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if step_norm(mid) > r {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    };
    let uh = Point::from_fn(lam.len(), |i, _| {
        if lam[i] + eta > flat {
            -gh[i] / (lam[i] + eta)
        } else {
            0.0
        }
    });
    let u = match vecs {
        Some(v) => v * uh,
        None => uh,
    };
    x_prev + u
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OfflineMethod {
    SmoothedDescent,
    GridDp,
}

/// One summand of the offline cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepCost {
    pub movement: f64,
    pub hit: f64,
}

/// An offline trajectory `y_1..y_T` and its true (unsmoothed) cost.
///
/// `cost` is an upper bound on the offline optimum, so ratios computed
/// against it are lower bounds on the true competitive ratio.
#[derive(Debug, Clone)]
pub struct OfflineResult {
    pub trajectory: Vec<Point>,
    pub cost: f64,
    pub certificate: Vec<StepCost>,
    pub method: OfflineMethod,
    /// `false` when the last smoothing stage hit its iteration cap.
    pub converged: bool,
}

fn certify(inst: &Instance, trajectory: &[Point]) -> Result<(f64, Vec<StepCost>)> {
    let mut prev = &inst.start;
    let mut certificate = Vec::with_capacity(trajectory.len());
    for (f, y) in inst.functions.iter().zip(trajectory) {
        certificate.push(StepCost { movement: (y - prev).norm(), hit: f.evaluate(y)? });
        prev = y;
    }
    let cost = certificate.iter().map(|c| c.movement + c.hit).sum();
    Ok((cost, certificate))
}

/// Smoothing levels for the movement norm, coarse to fine.
pub const SMOOTHING_LEVELS: [f64; 3] = [1e-2, 1e-4, 1e-6];

/// Iteration cap of one smoothing stage (further capped by `cfg.max_iter`).
pub const STAGE_ITERS: usize = 20_000;

/// Offline optimum by accelerated projected gradient on the smoothed cost,
/// warm-started from follow-the-minimizer and from staying at `x_0`.
pub fn offline_opt(inst: &Instance, cfg: &SolverConfig) -> Result<OfflineResult> {
    offline_opt_with_starts(inst, cfg, &[])
}

/// [`offline_opt`] with additional warm starts (typically the trajectory of
/// the algorithm under evaluation). The result is never worse than any
/// warm start.
pub fn offline_opt_with_starts(inst: &Instance, cfg: &SolverConfig, extra: &[Vec<Point>]) -> Result<OfflineResult> {
    let t_len = inst.len();
    if t_len == 0 {
        return Ok(OfflineResult {
            trajectory: Vec::new(),
            cost: 0.0,
            certificate: Vec::new(),
            method: OfflineMethod::SmoothedDescent,
            converged: true,
        });
    }
    let regions: Vec<Vec<SimpleSet>> = inst.functions.iter().map(|f| region(f, &inst.feasible)).collect();
    let problem = Smoothed { inst, regions: &regions, proj_tol: 0.1 * cfg.tol };

    let mut starts: Vec<Vec<Point>> = Vec::new();
    let mut prev = inst.start.clone();
    let mut follow = Vec::with_capacity(t_len);
    for f in &inst.functions {
        match constrained_minimize(f, &inst.feasible, &prev, cfg) {
            Ok(m) => {
                prev = m.clone();
                follow.push(m);
            }
            Err(_) => break,
        }
    }
    if follow.len() == t_len {
        starts.push(follow);
    }
    starts.push(vec![inst.start.clone(); t_len]);
    for s in extra {
        if s.len() != t_len {
            return Err(Error::LengthMismatch { left: t_len, right: s.len() });
        }
        starts.push(s.clone());
    }

    let stage_cap = STAGE_ITERS.min(cfg.max_iter);
    let mut best: Option<(f64, Vec<Point>, bool)> = None;
    for start in starts {
        let mut y = problem.project(&start)?;
        let mut cand_cost = problem.true_cost(&y)?;
        let mut cand = y.clone();
        let mut converged = true;
        for &eps in &SMOOTHING_LEVELS {
            let (next, best_seen, ok) = problem.fista(&y, eps, stage_cap, cfg.tol)?;
            converged = ok;
            y = next;
            if best_seen.0 < cand_cost {
                cand_cost = best_seen.0;
                cand = best_seen.1;
            }
        }
        if best.as_ref().is_none_or(|b| cand_cost < b.0) {
            best = Some((cand_cost, cand, converged));
        }
    }
    let (_, trajectory, converged) = best.expect("at least one warm start");
    let (cost, certificate) = certify(inst, &trajectory)?;
    Ok(OfflineResult { trajectory, cost, certificate, method: OfflineMethod::SmoothedDescent, converged })
}

struct Smoothed<'a> {
    inst: &'a Instance,
    regions: &'a [Vec<SimpleSet>],
    proj_tol: f64,
}

impl Smoothed<'_> {
    fn project(&self, ys: &[Point]) -> Result<Vec<Point>> {
        ys.iter().zip(self.regions).map(|(y, sets)| project_intersection(y, sets, self.proj_tol)).collect()
    }

    fn true_cost(&self, ys: &[Point]) -> Result<f64> {
        let mut prev = &self.inst.start;
        let mut total = 0.0;
        for (f, y) in self.inst.functions.iter().zip(ys) {
            total += (y - prev).norm() + f.evaluate(y)?;
            prev = y;
        }
        Ok(total)
    }

    /// Smoothed cost and, when `grad` is given, its gradient.
    fn value(&self, ys: &[Point], eps: f64, grad: Option<&mut Vec<Point>>) -> Result<f64> {
        let mut total = 0.0;
        let mut grads = grad;
        if let Some(g) = grads.as_deref_mut() {
            g.clear();
            g.extend(ys.iter().map(|y| Point::zeros(y.len())));
        }
        let mut prev = &self.inst.start;
        for (t, (f, y)) in self.inst.functions.iter().zip(ys).enumerate() {
            let v = y - prev;
            let s = (v.norm_squared() + eps * eps).sqrt();
            total += s - eps + f.evaluate(y)?;
            if let Some(g) = grads.as_deref_mut() {
                let dv = v / s;
                g[t] += &dv;
                if t > 0 {
                    g[t - 1] -= &dv;
                }
                g[t] += subgradient(f, y)?;
            }
            prev = y;
        }
        Ok(total)
    }

    /// FISTA with backtracking and function-value restarts. Returns the last
    /// iterate, the best iterate by true cost, and whether the stationarity
    /// test was met.
    #[allow(clippy::type_complexity)]
    fn fista(&self, y0: &[Point], eps: f64, cap: usize, tol: f64) -> Result<(Vec<Point>, (f64, Vec<Point>), bool)> {
        let mut x = y0.to_vec();
        let mut fx = self.value(&x, eps, None)?;
        let mut best = (self.true_cost(&x)?, x.clone());
        let mut z = x.clone();
        let mut theta = 1.0f64;
        let mut lip = 1.0f64;
        let mut grad = Vec::new();
        let mut restarted = false;
        for _ in 0..cap {
            let fz = self.value(&z, eps, Some(&mut grad))?;
            let (next, f_next, gap) = loop {
                let trial: Vec<Point> = z.iter().zip(&grad).map(|(zi, gi)| zi - gi / lip).collect();
                let next = self.project(&trial)?;
                let f_next = self.value(&next, eps, None)?;
                let mut lin = 0.0;
                let mut sq = 0.0;
                for ((n, zi), gi) in next.iter().zip(&z).zip(&grad) {
                    let d = n - zi;
                    lin += gi.dot(&d);
                    sq += d.norm_squared();
                }
                if f_next <= fz + lin + 0.5 * lip * sq + 1e-14 * fz.abs() || lip > 1e18 {
                    break (next, f_next, lip * sq.sqrt());
                }
                lip *= 2.0;
            };
            let true_next = self.true_cost(&next)?;
            if true_next < best.0 {
                best = (true_next, next.clone());
            }
            if gap <= tol.max(1e-12) * (1.0 + fz.abs()) {
                return Ok((next, best, true));
            }
            if f_next > fx {
                if restarted {
                    // No decrease even without momentum: f is flat to
                    // rounding here, so the stationarity test cannot improve.
                    let floor = 16.0 * f64::EPSILON.sqrt() * (1.0 + fz.abs());
                    return Ok((x, best, gap <= floor));
                }
                // Restart the momentum from the last accepted point.
                theta = 1.0;
                z = x.clone();
                restarted = true;
                continue;
            }
            restarted = false;
            let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
            let w = (theta - 1.0) / theta_next;
            z = next.iter().zip(&x).map(|(n, o)| n + (n - o) * w).collect();
            theta = theta_next;
            x = next;
            fx = f_next;
            lip *= 0.9;
        }
        Ok((x, best, false))
    }
}

/// Exact offline optimum over the grid `lo, lo+h, ..., hi` (`n` points) for
/// a one-dimensional instance, by dynamic programming with linear-time
/// distance-transform sweeps.
pub fn offline_opt_grid_1d(inst: &Instance, lo: f64, hi: f64, n: usize) -> Result<OfflineResult> {
    if inst.dim() != 1 {
        return Err(Error::dims(1, inst.dim()));
    }
    if n < 2 || !(hi > lo) {
        return Err(Error::InvalidSet(format!("grid needs hi > lo and n >= 2, got [{lo}, {hi}] with {n}")));
    }
    let h = (hi - lo) / (n - 1) as f64;
    let grid: Vec<f64> = (0..n).map(|i| lo + h * i as f64).collect();
    let hit = |f: &ConvexFunction, g: f64| -> f64 {
        let p = Point::from_element(1, g);
        if !inst.feasible.contains(&p, 1e-12) {
            return f64::INFINITY;
        }
        f.evaluate(&p).unwrap_or(f64::INFINITY)
    };
    let x0 = inst.start[0];
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(inst.len());
    let mut dp: Vec<f64> = Vec::new();
    for (t, f) in inst.functions.iter().enumerate() {
        let next: Vec<f64> = if t == 0 {
            grid.iter().map(|&g| (g - x0).abs() + hit(f, g)).collect()
        } else {
            let arg = distance_transform(&grid, &dp);
            let vals = grid
                .iter()
                .zip(&arg)
                .map(|(&g, &j)| dp[j] + (g - grid[j]).abs() + hit(f, g))
                .collect();
            back.push(arg);
            vals
        };
        if next.iter().all(|v| !v.is_finite()) {
            return Err(Error::InvalidSet(format!("no feasible grid point for request {}", t + 1)));
        }
        dp = next;
    }
    let mut trajectory = Vec::with_capacity(inst.len());
    if !inst.is_empty() {
        let mut i = (0..n).min_by(|&a, &b| dp[a].total_cmp(&dp[b])).unwrap_or(0);
        trajectory.push(Point::from_element(1, grid[i]));
        for arg in back.iter().rev() {
            i = arg[i];
            trajectory.push(Point::from_element(1, grid[i]));
        }
        trajectory.reverse();
    }
    let (cost, certificate) = certify(inst, &trajectory)?;
    Ok(OfflineResult { trajectory, cost, certificate, method: OfflineMethod::GridDp, converged: true })
}

/// For each `i`, the `j` minimizing `values[j] + |grid[i] - grid[j]|`.
fn distance_transform(grid: &[f64], values: &[f64]) -> Vec<usize> {
    let n = grid.len();
    let score = |i: usize, j: usize| values[j] + (grid[i] - grid[j]).abs();
    let mut arg: Vec<usize> = (0..n).collect();
    for i in 1..n {
        let j = arg[i - 1];
        if score(i, j) < score(i, arg[i]) {
            arg[i] = j;
        }
    }
    for i in (0..n - 1).rev() {
        let j = arg[i + 1];
        if score(i, j) < score(i, arg[i]) {
            arg[i] = j;
        }
    }
    arg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::{PowerNorm, Quadratic};
    use crate::geometry::{AffineSubspace, Halfspace};
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(c: &[f64]) -> Point {
        Point::from_column_slice(c)
    }

    fn quad(diag: &[f64], c: &[f64]) -> ConvexFunction {
        Quadratic::diagonal(diag, v(c), 0.0).unwrap().into()
    }

    fn cfg() -> SolverConfig {
        SolverConfig::default()
    }

    #[test]
    fn bisect_examples() {
        let r = bisect_root(|s| s - 0.5, 0.0, 1.0, 1e-12).unwrap();
        assert!((r.point - 0.5).abs() <= 1e-12);
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        let r = bisect_root(|s| s * s + s - 1.0, 0.0, 1.0, 1e-13).unwrap();
        assert!((r.point - golden).abs() <= 1e-12);
        assert_eq!(bisect_root(|s| s, 0.0, 1.0, 1e-12).unwrap().point, 0.0);
        let r = bisect_root(|s| 0.5 - s, 0.0, 1.0, 1e-12).unwrap();
        assert!((r.point - 0.5).abs() <= 1e-12);
        assert!(matches!(bisect_root(|s| s + 1.0, 0.0, 1.0, 1e-12), Err(Error::NoBracket { .. })));
    }

    #[test]
    fn bisect_finds_smallest_root_of_concave_function() {
        // Zero on [0.3, 0.7], positive in between.
        let g = |s: f64| (0.04 - (s - 0.5f64).powi(2)).min(0.1);
        let r = bisect_root(g, 0.0, 0.5, 1e-12).unwrap();
        assert!((r.point - 0.3).abs() < 1e-10);
    }

    #[test]
    fn constrained_minimize_examples() {
        let f = quad(&[2.0, 2.0], &[0.0, 0.0]);
        let x = constrained_minimize(&f, &FeasibleSet::WholeSpace, &v(&[3.0, 4.0]), &cfg()).unwrap();
        assert_eq!(x, v(&[0.0, 0.0]));

        let f = quad(&[2.0, 2.0], &[2.0, 0.0]);
        let ball = FeasibleSet::ball(v(&[0.0, 0.0]), 1.0).unwrap();
        let x = constrained_minimize(&f, &ball, &v(&[0.0, 0.0]), &cfg()).unwrap();
        assert!((x - v(&[1.0, 0.0])).norm() < 1e-7);

        // x1 + x2 >= 1 written as -x1 - x2 <= -1.
        let f = quad(&[2.0, 8.0], &[0.0, 0.0]);
        let k = FeasibleSet::halfspaces(vec![Halfspace::new(v(&[-1.0, -1.0]), -1.0).unwrap()], v(&[1.0, 1.0])).unwrap();
        let x = constrained_minimize(&f, &k, &v(&[1.0, 1.0]), &cfg()).unwrap();
        assert!((&x - v(&[0.8, 0.2])).norm() < 1e-7, "{x}");
    }

    #[test]
    fn constrained_minimize_is_start_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = quad(&[1.0, 5.0, 2.0], &[3.0, -2.0, 1.0]);
        let k = FeasibleSet::halfspaces(
            vec![
                Halfspace::new(v(&[1.0, 0.0, 0.0]), 1.0).unwrap(),
                Halfspace::new(v(&[0.0, -1.0, 1.0]), 0.5).unwrap(),
            ],
            v(&[0.0, 0.0, 0.0]),
        )
        .unwrap();
        let reference = constrained_minimize(&f, &k, &v(&[0.0, 0.0, 0.0]), &cfg()).unwrap();
        for _ in 0..5 {
            let s = Point::from_fn(3, |_, _| rng.random_range(-5.0..5.0));
            let x = constrained_minimize(&f, &k, &s, &cfg()).unwrap();
            assert!((x - &reference).norm() < 1e-6);
        }
    }

    /// Independent oracle for the 2-d balanced-descent fixture: the KKT
    /// point of min x1² + 4x2² on the circle around (1, 1) is
    /// (ν/(1+ν), ν/(4+ν)) for the multiplier ν.
    fn kkt_point(r: f64) -> Point {
        let at = |nu: f64| v(&[nu / (1.0 + nu), nu / (4.0 + nu)]);
        let nu = bisect_root(|nu| r - (at(nu) - v(&[1.0, 1.0])).norm(), 1e-12, 1e6, 1e-14).unwrap().point;
        at(nu)
    }

    #[test]
    fn cobd_inner_examples() {
        let f = quad(&[2.0, 2.0], &[0.0, 0.0]);
        let xp = v(&[2.0, 0.0]);
        assert_eq!(cobd_inner(&f, &xp, 0.0, &FeasibleSet::WholeSpace, &cfg()).unwrap(), xp);
        let z = cobd_inner(&f, &xp, 1.0, &FeasibleSet::WholeSpace, &cfg()).unwrap();
        assert!((z - v(&[1.0, 0.0])).norm() < 1e-12);

        let f = quad(&[2.0, 8.0], &[0.0, 0.0]);
        let r = 0.782432807009573;
        let z = cobd_inner(&f, &v(&[1.0, 1.0]), r, &FeasibleSet::WholeSpace, &cfg()).unwrap();
        assert!((&z - kkt_point(r)).norm() < 1e-9, "{z}");
        assert!((&z - v(&[0.638344561766887, 0.306165407693380])).norm() < 1e-9);
    }

    #[test]
    fn cobd_inner_generic_path_agrees_with_trust_region() {
        let f = quad(&[2.0, 8.0], &[0.0, 0.0]);
        let big = FeasibleSet::ball(v(&[0.0, 0.0]), 100.0).unwrap();
        for r in [0.1, 0.5, 0.78, 1.2] {
            let exact = cobd_inner(&f, &v(&[1.0, 1.0]), r, &FeasibleSet::WholeSpace, &cfg()).unwrap();
            let pg = cobd_inner(&f, &v(&[1.0, 1.0]), r, &big, &cfg()).unwrap();
            assert!((&exact - &pg).norm() < 1e-6, "r={r}: {exact} vs {pg}");
        }
    }

    #[test]
    fn trust_region_handles_singular_hessians() {
        // Flat along e2: every point with x1 = 0 minimizes.
        let f = quad(&[2.0, 0.0], &[0.0, 0.0]);
        let z = cobd_inner(&f, &v(&[1.0, 3.0]), 2.0, &FeasibleSet::WholeSpace, &cfg()).unwrap();
        assert!((z - v(&[0.0, 3.0])).norm() < 1e-12);
        let z = cobd_inner(&f, &v(&[1.0, 3.0]), 0.5, &FeasibleSet::WholeSpace, &cfg()).unwrap();
        assert!((z - v(&[0.5, 3.0])).norm() < 1e-12);
    }

    #[test]
    fn cobd_inner_on_subspace_functions() {
        let line = AffineSubspace::new(v(&[0.0, 1.0]), vec![v(&[1.0, 0.0])]).unwrap();
        let inner = Quadratic::diagonal(&[2.0], v(&[5.0]), 0.0).unwrap();
        let f: ConvexFunction = crate::functions::SubspaceIndicator::new(line, Some(inner)).unwrap().into();
        // Ball of radius 2 around the origin meets the line y = 1 in |x| <= √3.
        let z = cobd_inner(&f, &v(&[0.0, 0.0]), 2.0, &FeasibleSet::WholeSpace, &cfg()).unwrap();
        assert!((z - v(&[3f64.sqrt(), 1.0])).norm() < 1e-12);
    }

    #[test]
    fn cobd_inner_value_is_monotone_in_radius() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0));
        let h = &a * a.transpose() + DMatrix::identity(3, 3) * 0.1;
        let f: ConvexFunction = Quadratic::new(h, v(&[1.0, 2.0, -1.0]), 0.0).unwrap().into();
        let xp = v(&[-2.0, 0.0, 2.0]);
        let ks = [
            FeasibleSet::WholeSpace,
            FeasibleSet::halfspaces(vec![Halfspace::new(v(&[0.0, 1.0, 0.0]), 1.0).unwrap()], xp.clone()).unwrap(),
        ];
        for k in &ks {
            let mut last = f64::INFINITY;
            for i in 0..=20 {
                let z = cobd_inner(&f, &xp, 0.25 * i as f64, k, &cfg()).unwrap();
                let val = f.evaluate(&z).unwrap();
                assert!(val <= last + 1e-9);
                last = val;
            }
        }
    }

    fn one_d(start: f64, fs: Vec<ConvexFunction>) -> Instance {
        Instance::new(v(&[start]), FeasibleSet::WholeSpace, fs).unwrap()
    }

    #[test]
    fn offline_single_step() {
        let inst = one_d(1.0, vec![quad(&[2.0], &[0.0])]);
        let res = offline_opt(&inst, &cfg()).unwrap();
        assert!((res.trajectory[0][0] - 0.5).abs() < 1e-5);
        assert!((res.cost - 0.75).abs() < 1e-7);
        let dp = offline_opt_grid_1d(&inst, -2.0, 2.0, 4001).unwrap();
        assert!((dp.cost - 0.75).abs() <= 1e-3);
        assert_eq!(dp.method, OfflineMethod::GridDp);
    }

    #[test]
    fn offline_stays_put_when_start_is_optimal() {
        let inst = one_d(0.0, vec![quad(&[1.0], &[0.0]); 4]);
        let res = offline_opt(&inst, &cfg()).unwrap();
        assert!(res.cost.abs() < 1e-12);
        let dp = offline_opt_grid_1d(&inst, -2.0, 2.0, 4001).unwrap();
        assert!(dp.cost.abs() < 1e-12);
    }

    #[test]
    fn offline_cost_matches_certificate() {
        let inst = one_d(1.0, vec![quad(&[2.0], &[0.0]), quad(&[4.0], &[2.0]), quad(&[1.0], &[-1.0])]);
        let res = offline_opt(&inst, &cfg()).unwrap();
        let recomputed = inst.cost_of(&res.trajectory).unwrap();
        assert!((recomputed - res.cost).abs() <= 1e-8);
        let sum: f64 = res.certificate.iter().map(|c| c.movement + c.hit).sum();
        assert!((sum - res.cost).abs() <= 1e-12);
    }

    fn random_1d(rng: &mut ChaCha8Rng) -> Instance {
        let t = rng.random_range(1..=6);
        let fs = (0..t)
            .map(|_| {
                let c = rng.random_range(-1.5..1.5);
                let a = rng.random_range(0.2..4.0);
                quad(&[a], &[c])
            })
            .collect();
        one_d(rng.random_range(-1.0..1.0), fs)
    }

    #[test]
    fn offline_agrees_with_grid_dp_in_one_dimension() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let inst = random_1d(&mut rng);
            let res = offline_opt(&inst, &cfg()).unwrap();
            let dp = offline_opt_grid_1d(&inst, -2.0, 2.0, 4001).unwrap();
            assert!(res.cost <= dp.cost + 1e-4, "smoothed {} vs dp {}", res.cost, dp.cost);
            assert!(dp.cost <= res.cost + 1e-2);
        }
    }

    #[test]
    fn offline_never_worse_than_warm_starts() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let k = FeasibleSet::ball(v(&[0.0, 0.0]), 1.0).unwrap();
        let fs: Vec<ConvexFunction> = (0..5)
            .map(|_| quad(&[rng.random_range(0.5..3.0), rng.random_range(0.5..3.0)], &[rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]))
            .collect();
        let inst = Instance::new(v(&[0.0, 0.0]), k, fs).unwrap();
        let wild: Vec<Point> = (0..5).map(|i| v(&[0.1 * i as f64, -0.05 * i as f64])).collect();
        let res = offline_opt_with_starts(&inst, &cfg(), std::slice::from_ref(&wild)).unwrap();
        assert!(res.cost <= inst.cost_of(&wild).unwrap() + 1e-12);
        assert!(res.cost <= inst.cost_of(&vec![inst.start.clone(); 5]).unwrap() + 1e-12);
        for y in &res.trajectory {
            assert!(inst.feasible.contains(y, 1e-8));
        }
    }

    #[test]
    fn offline_handles_kinked_functions() {
        let f: ConvexFunction = PowerNorm::new(1.0, 1.0, v(&[0.5, 0.0]), 1.0).unwrap().into();
        let inst = Instance::new(v(&[0.0, 0.0]), FeasibleSet::WholeSpace, vec![f; 3]).unwrap();
        let res = offline_opt(&inst, &cfg()).unwrap();
        // Moving costs exactly what it saves on the first step, then saves more.
        assert!((res.cost - 0.5).abs() < 1e-6, "{}", res.cost);
    }

    #[test]
    fn grid_dp_rejects_higher_dimensions() {
        let inst = Instance::new(v(&[0.0, 0.0]), FeasibleSet::WholeSpace, vec![quad(&[1.0, 1.0], &[0.0, 0.0])]).unwrap();
        assert!(matches!(offline_opt_grid_1d(&inst, -1.0, 1.0, 11), Err(Error::DimensionMismatch { .. })));
    }
}
