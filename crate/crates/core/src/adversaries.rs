//! Lower-bound instance generators: the random hypercube instance and the
//! adaptive adversaries against move-towards-minimizer and balanced descent.

use nalgebra::{DMatrix, Matrix2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::chasers::{Chaser, ChaserKind, OnlinePlayer, Run, StepRecord};
use crate::functions::{ConvexFunction, Quadratic};
use crate::geometry::{AffineIsometry, FeasibleSet, NormTag, Point};
use crate::instance::{Instance, Metadata};
use crate::solvers::{bisect_root, SolverConfig};
use crate::{Error, Result};

/// Name recorded in metadata for the generator behind every seeded draw.
pub const PRNG_NAME: &str = "chacha8";

/// Parameters of the hypercube instance
/// `f_t(x) = λ Σ_{i<=t} (x_i - γ ε_i)² + μ Σ_{i>t} x_i²`, `t = 1..d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubeParams {
    pub d: usize,
    pub gamma: f64,
    pub lambda: f64,
    pub mu: f64,
    pub seed: u64,
}

impl CubeParams {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || !(self.gamma > 0.0) || !(self.mu >= 0.0) || !(self.lambda >= self.mu) || !self.lambda.is_finite() {
            return Err(Error::InvalidMode(format!(
                "cube parameters need d >= 1, gamma > 0 and lambda >= mu >= 0, got {self:?}"
            )));
        }
        Ok(())
    }

    /// `λ/μ`; infinite when `μ = 0` (smooth but not strongly convex).
    pub fn kappa(&self) -> f64 {
        if self.mu == 0.0 {
            f64::INFINITY
        } else {
            self.lambda / self.mu
        }
    }

    /// Upper bound `γ(1 + μ d^{3/2} γ)√d` on the cost of moving to `γε` and staying.
    pub fn candidate_bound(&self) -> f64 {
        let d = self.d as f64;
        self.gamma * (1.0 + self.mu * d.powf(1.5) * self.gamma) * d.sqrt()
    }
}

/// A generated hypercube instance with its explicit comparator.
#[derive(Debug, Clone)]
pub struct CubeInstance {
    pub instance: Instance,
    pub params: CubeParams,
    /// The random signs `ε`.
    pub signs: Vec<f64>,
    /// `γε` repeated `d` times.
    pub candidate: Vec<Point>,
    pub candidate_cost: f64,
}

/// Draws `ε ∈ {-1, 1}^d` from the seeded generator and builds the instance.
pub fn gen_cube_instance(params: &CubeParams) -> Result<CubeInstance> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let signs: Vec<f64> = (0..params.d).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
    cube_instance_with_signs(params, &signs)
}

/// The hypercube instance for given signs.
pub fn cube_instance_with_signs(params: &CubeParams, signs: &[f64]) -> Result<CubeInstance> {
    params.validate()?;
    let d = params.d;
    if signs.len() != d {
        return Err(Error::dims(d, signs.len()));
    }
    let functions = (1..=d)
        .map(|t| {
            let diag: Vec<f64> = (0..d).map(|i| if i < t { 2.0 * params.lambda } else { 2.0 * params.mu }).collect();
            let center = Point::from_fn(d, |i, _| if i < t { params.gamma * signs[i] } else { 0.0 });
            Quadratic::diagonal(&diag, center, 0.0).map(ConvexFunction::from)
        })
        .collect::<Result<Vec<_>>>()?;
    let kappa = params.kappa();
    let metadata = Metadata {
        seed: Some(params.seed),
        adversary: Some("cube".into()),
        kappa: kappa.is_finite().then_some(kappa),
        prng: Some(PRNG_NAME.into()),
        extra: json!({ "d": d, "gamma": params.gamma, "lambda": params.lambda, "mu": params.mu })
            .as_object()
            .cloned()
            .unwrap_or_default(),
    };
    let instance = Instance::new(Point::zeros(d), FeasibleSet::WholeSpace, functions)?.with_metadata(metadata);
    let corner = Point::from_fn(d, |i, _| params.gamma * signs[i]);
    let candidate = vec![corner; d];
    let candidate_cost = instance.cost_of(&candidate)?;
    Ok(CubeInstance { instance, params: *params, signs: signs.to_vec(), candidate, candidate_cost })
}

/// Which quantity the hypercube parameters are tuned to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CubePreset {
    /// `d = round(κ^{2/3})`, `γ = λ = 1`, `μ = 1/κ`.
    WellConditioned { kappa: f64 },
    /// `μ = α/2`, `γ = 1/(d^{3/2} α)`, `λ = d^{3/2} α`.
    StronglyConvex { alpha: f64 },
    /// `λ = β/2`, `γ = 1/β`, `μ = 0`.
    Smooth { beta: f64 },
}

/// Parameters for the three lower-bound regimes. The strongly convex and
/// smooth regimes need an explicit dimension.
pub fn preset_params(preset: CubePreset, d_override: Option<usize>, seed: u64) -> Result<CubeParams> {
    let need_d = || d_override.filter(|&d| d > 0).ok_or_else(|| Error::InvalidMode("this preset needs a dimension".into()));
    let params = match preset {
        CubePreset::WellConditioned { kappa } => {
            if !(kappa >= 1.0) || !kappa.is_finite() {
                return Err(Error::InvalidMode(format!("kappa must be >= 1, got {kappa}")));
            }
            let d = d_override.unwrap_or_else(|| kappa.powf(2.0 / 3.0).round().max(1.0) as usize);
            CubeParams { d, gamma: 1.0, lambda: 1.0, mu: 1.0 / kappa, seed }
        }
        CubePreset::StronglyConvex { alpha } => {
            if !(alpha > 0.0) {
                return Err(Error::InvalidMode(format!("alpha must be positive, got {alpha}")));
            }
            let d = need_d()?;
            let scale = (d as f64).powf(1.5) * alpha;
            CubeParams { d, gamma: 1.0 / scale, lambda: scale, mu: alpha / 2.0, seed }
        }
        CubePreset::Smooth { beta } => {
            if !(beta > 0.0) {
                return Err(Error::InvalidMode(format!("beta must be positive, got {beta}")));
            }
            CubeParams { d: need_d()?, gamma: 1.0 / beta, lambda: beta / 2.0, mu: 0.0, seed }
        }
    };
    params.validate()?;
    Ok(params)
}

/// The adaptive adversaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdaptiveKind {
    /// Against move-towards-minimizer: a `κ`-conditioned quadratic whose
    /// minimizer sits so that the chaser drifts away from the comparator.
    M2M,
    /// Against balanced descent: a quadratic whose level sets make the
    /// chaser step mostly sideways.
    Cobd,
}

impl AdaptiveKind {
    pub fn name(&self) -> &'static str {
        match self {
            AdaptiveKind::M2M => "m2m",
            AdaptiveKind::Cobd => "cobd",
        }
    }

    /// The chaser each adversary is built against.
    pub fn target(&self) -> ChaserKind {
        match self {
            AdaptiveKind::M2M => ChaserKind::M2M(NormTag::L2),
            AdaptiveKind::Cobd => ChaserKind::Cobd,
        }
    }
}

/// Comparator side of an adaptive run.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveAdversaryState {
    pub y_current: Point,
    pub kappa: f64,
    /// Requests issued so far.
    pub t: usize,
    pub comparator_cost: f64,
}

impl AdaptiveAdversaryState {
    /// `y = e₁` after a first move from the origin that costs 1.
    pub fn new(kappa: f64) -> Result<Self> {
        if !(kappa >= 1.0) || !kappa.is_finite() {
            return Err(Error::InvalidMode(format!("kappa must be >= 1, got {kappa}")));
        }
        Ok(AdaptiveAdversaryState { y_current: Point::from_column_slice(&[1.0, 0.0]), kappa, t: 0, comparator_cost: 1.0 })
    }
}

fn planar(x: &Point, y: &Point) -> Result<(Vector2<f64>, Vector2<f64>)> {
    if x.len() != 2 {
        return Err(Error::dims(2, x.len()));
    }
    if y.len() != 2 {
        return Err(Error::dims(2, y.len()));
    }
    Ok((Vector2::new(x[0], x[1]), Vector2::new(y[0], y[1])))
}

/// Proper rotation of the plane taking the unit vector `from` to `to`.
fn rotation_between(from: Vector2<f64>, to: Vector2<f64>) -> Matrix2<f64> {
    let (c, s) = (from.dot(&to), from.x * to.y - from.y * to.x);
    Matrix2::new(c, -s, s, c)
}

/// The isometry `canonical -> actual` that takes `(a, b)` to `(a', b')`,
/// given `|a - b| = |a' - b'|`.
fn isometry_between(a: Vector2<f64>, b: Vector2<f64>, a_to: Vector2<f64>, b_to: Vector2<f64>) -> Result<AffineIsometry> {
    let q = rotation_between((b - a).normalize(), (b_to - a_to).normalize());
    let t = a_to - q * a;
    AffineIsometry::new(
        DMatrix::from_column_slice(2, 2, q.as_slice()),
        Point::from_column_slice(t.as_slice()),
    )
}

/// Next request against move-towards-minimizer. With `γ = |x - y|/√2`,
/// the pair `(x_prev, y)` is carried to `((γ, γ), (2γ, 0))` and the
/// request is `(1/(4γ))(x₁²/κ + x₂²)` in those coordinates. The comparator
/// stays put.
pub fn m2m_adversary_step(x_prev: &Point, state: &mut AdaptiveAdversaryState) -> Result<ConvexFunction> {
    let (x, y) = planar(x_prev, &state.y_current)?;
    let dist = (x - y).norm();
    if !(dist > 0.0) {
        return Err(Error::DegenerateState);
    }
    let gamma = dist / std::f64::consts::SQRT_2;
    let kappa = state.kappa;
    let canonical = Quadratic::diagonal(&[1.0 / (2.0 * gamma * kappa), 1.0 / (2.0 * gamma)], Point::zeros(2), 0.0)?;
    let iso = isometry_between(Vector2::new(gamma, gamma), Vector2::new(2.0 * gamma, 0.0), x, y)?;
    let f = ConvexFunction::Quadratic(canonical.transport(&iso));
    state.comparator_cost += f.evaluate(&state.y_current)?;
    state.t += 1;
    Ok(f)
}

/// The canonical balanced-descent adversary at distance `dist` from the
/// comparator at the origin: returns `(α, x⁻_α, x_α)`.
pub fn cobd_canonical(dist: f64, kappa: f64) -> Result<(f64, Vector2<f64>, Vector2<f64>)> {
    let m = dist / (2.0 * kappa.sqrt());
    let at = |alpha: f64| -> (Vector2<f64>, Vector2<f64>) {
        // f(γ(√κ, 1)) = 2ακγ² = m.
        let g = (m / (2.0 * alpha * kappa)).sqrt();
        let xa = Vector2::new(g * kappa.sqrt(), g);
        let grad = Vector2::new(2.0 * alpha * xa.x, 2.0 * alpha * kappa * xa.y);
        (xa + grad.normalize() * m, xa)
    };
    // |x⁻_α| falls from ∞ to m as α grows; bisect in log α.
    let excess = |log_alpha: f64| at(log_alpha.exp()).0.norm() - dist;
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    for _ in 0..200 {
        if excess(lo) > 0.0 {
            break;
        }
        lo -= 2.0;
    }
    for _ in 0..200 {
        if excess(hi) < 0.0 {
            break;
        }
        hi += 2.0;
    }
    if !(excess(lo) > 0.0 && excess(hi) < 0.0) {
        return Err(Error::RootNotBracketed { lo: lo.exp(), hi: hi.exp() });
    }
    let root = bisect_root(excess, lo, hi, 1e-15)?;
    let alpha = root.point.exp();
    let (minus, xa) = at(alpha);
    Ok((alpha, minus, xa))
}

/// Next request against balanced descent: `α(x₁² + κx₂²)` in coordinates
/// where the comparator is the origin and `x_prev` is `x⁻_α`, so balanced
/// descent answers with `x_α`, a step of length `|x_prev - y|/(2√κ)`.
pub fn cobd_adversary_step(x_prev: &Point, state: &mut AdaptiveAdversaryState) -> Result<ConvexFunction> {
    let (x, y) = planar(x_prev, &state.y_current)?;
    let dist = (x - y).norm();
    if !(dist > 0.0) {
        return Err(Error::DegenerateState);
    }
    let kappa = state.kappa;
    let (alpha, minus, _) = cobd_canonical(dist, kappa)?;
    let canonical = Quadratic::diagonal(&[2.0 * alpha, 2.0 * alpha * kappa], Point::zeros(2), 0.0)?;
    let iso = isometry_between(Vector2::zeros(), minus, y, x)?;
    let f = ConvexFunction::Quadratic(canonical.transport(&iso));
    state.comparator_cost += f.evaluate(&state.y_current)?;
    state.t += 1;
    Ok(f)
}

/// Post-hoc bookkeeping for one adaptive step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdversaryStep {
    pub t: usize,
    pub phi_prev: f64,
    pub phi: f64,
    pub alg_cost: f64,
    pub cmp_cost: f64,
    /// Whether the step satisfies the inequalities the construction is
    /// supposed to force (see [`LbdSchedule::run`]).
    pub ok: bool,
}

/// A lower-bound schedule: start `x₀ = 0`, comparator at `e₁`, `T` adaptive
/// requests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbdSchedule {
    pub kind: AdaptiveKind,
    pub kappa: f64,
    pub horizon: usize,
}

/// Everything an adaptive run produced.
#[derive(Debug, Clone)]
pub struct AdaptiveRun {
    /// The realized requests as a static, replayable instance.
    pub instance: Instance,
    pub alg: Run,
    /// `y_1..y_T`.
    pub comparator: Vec<Point>,
    pub comparator_cost: f64,
    pub steps: Vec<AdversaryStep>,
}

impl AdaptiveRun {
    pub fn alg_cost(&self) -> f64 {
        self.alg.total
    }

    /// `ALG / comparator`: a lower bound on the competitive ratio.
    pub fn ratio(&self) -> f64 {
        self.alg.total / self.comparator_cost
    }

    /// Steps whose post-hoc checks failed.
    pub fn flagged(&self) -> usize {
        self.steps.iter().filter(|s| !s.ok).count()
    }
}

/// Schedule with `T` requests; `T = κ` when `horizon` is `None`.
pub fn build_lbd_schedule(kind: AdaptiveKind, kappa: f64, horizon: Option<usize>) -> Result<LbdSchedule> {
    AdaptiveAdversaryState::new(kappa)?;
    Ok(LbdSchedule { kind, kappa, horizon: horizon.unwrap_or(kappa.round() as usize) })
}

impl LbdSchedule {
    /// Plays the schedule against the chaser the adversary targets.
    pub fn run_default(&self, cfg: SolverConfig) -> Result<AdaptiveRun> {
        let mut chaser = Chaser::new(self.kind.target(), cfg, Point::zeros(2), FeasibleSet::WholeSpace)?;
        self.run(&mut chaser)
    }

    /// Plays the schedule against `player`, which must start at the origin
    /// of the plane.
    ///
    /// Step checks: against move-towards-minimizer the potential
    /// `Φ = |x - y|` must not drop by more than `1e-9`; against balanced
    /// descent the step length must be `Φ_{t-1}/(2√κ)` to `1e-6` and the
    /// step cost must be at least both `(√κ/5)(-ΔΦ)` and `Φ_{t-1}/√κ`
    /// (to `1e-6`).
    pub fn run<P: OnlinePlayer + ?Sized>(&self, player: &mut P) -> Result<AdaptiveRun> {
        let mut state = AdaptiveAdversaryState::new(self.kappa)?;
        let start = player.current().clone();
        if start.len() != 2 || start.norm() != 0.0 {
            return Err(Error::InvalidMode("adaptive schedules start at the origin of the plane".into()));
        }
        let mut functions = Vec::with_capacity(self.horizon);
        let mut steps = Vec::with_capacity(self.horizon);
        let mut comparator = Vec::with_capacity(self.horizon);
        let mut alg = Run { trajectory: vec![start.clone()], records: Vec::with_capacity(self.horizon), total: 0.0 };
        let sqrt_k = self.kappa.sqrt();
        for t in 1..=self.horizon {
            let x_prev = player.current().clone();
            let cost_before = state.comparator_cost;
            let f = match self.kind {
                AdaptiveKind::M2M => m2m_adversary_step(&x_prev, &mut state)?,
                AdaptiveKind::Cobd => cobd_adversary_step(&x_prev, &mut state)?,
            };
            let x = player.respond(&f)?;
            let y = &state.y_current;
            let moved = (&x - &x_prev).norm();
            let hit = f.evaluate(&x)?;
            let alg_cost = moved + hit;
            let phi_prev = (&x_prev - y).norm();
            let phi = (&x - y).norm();
            let ok = match self.kind {
                AdaptiveKind::M2M => phi >= phi_prev - 1e-9,
                AdaptiveKind::Cobd => {
                    (moved - phi_prev / (2.0 * sqrt_k)).abs() <= 1e-6
                        && alg_cost >= sqrt_k / 5.0 * (phi_prev - phi) - 1e-6
                        && alg_cost >= phi_prev / sqrt_k - 1e-6
                }
            };
            steps.push(AdversaryStep { t, phi_prev, phi, alg_cost, cmp_cost: state.comparator_cost - cost_before, ok });
            comparator.push(y.clone());
            functions.push(f);
            alg.total += alg_cost;
            alg.trajectory.push(x.clone());
            alg.records.push(StepRecord {
                t,
                x_prev,
                x_new: x,
                movement: moved,
                hit,
                hit_normalized: hit,
                offset: 0.0,
                total: alg_cost,
            });
        }
        let metadata = Metadata {
            adversary: Some(self.kind.name().into()),
            kappa: Some(self.kappa),
            ..Metadata::default()
        };
        let instance = Instance::new(start, FeasibleSet::WholeSpace, functions)?.with_metadata(metadata);
        Ok(AdaptiveRun { instance, alg, comparator, comparator_cost: state.comparator_cost, steps })
    }
}
