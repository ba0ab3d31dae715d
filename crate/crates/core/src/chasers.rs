//! Online algorithms behind a common [`OnlinePlayer`] interface.
//!
//! Every step receives the request normalized to minimum value zero; the
//! run ledger records hit costs against the raw request.

use std::fmt;

use crate::functions::ConvexFunction;
use crate::geometry::{norm, project_intersection, FeasibleSet, NormTag, Point};
use crate::instance::Instance;
use crate::solvers::{bisect_root, cobd_inner, constrained_minimize, region, SolverConfig};
use crate::{Error, Result};

/// Bracket width for the segment bisections, in the segment parameter.
const SEGMENT_TOL: f64 = 1e-16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChaserKind {
    /// Move towards the minimizer until movement equals hit cost.
    M2M(NormTag),
    /// Move towards the constrained minimizer until movement equals the
    /// excess hit cost.
    ConstrainedM2M,
    /// Constrained online balanced descent.
    Cobd,
    /// Jump to the constrained minimizer.
    FollowMin,
}

impl ChaserKind {
    pub fn name(&self) -> &'static str {
        match self {
            ChaserKind::M2M(_) => "m2m",
            ChaserKind::ConstrainedM2M => "cm2m",
            ChaserKind::Cobd => "cobd",
            ChaserKind::FollowMin => "followmin",
        }
    }
}

impl fmt::Display for ChaserKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Anything that answers requests one at a time.
pub trait OnlinePlayer {
    fn current(&self) -> &Point;

    /// Norm in which this player's movement is charged.
    fn movement_norm(&self) -> NormTag {
        NormTag::L2
    }

    /// Answers a zero-min request and moves there.
    fn respond(&mut self, f: &ConvexFunction) -> Result<Point>;
}

#[derive(Debug, Clone)]
pub struct Chaser {
    pub kind: ChaserKind,
    pub cfg: SolverConfig,
    current: Point,
    feasible: FeasibleSet,
}

impl Chaser {
    pub fn new(kind: ChaserKind, cfg: SolverConfig, start: Point, feasible: FeasibleSet) -> Result<Self> {
        cfg.validate()?;
        if let ChaserKind::M2M(tag) = kind {
            if !feasible.is_whole_space() {
                return Err(Error::InvalidMode(format!(
                    "m2m is unconstrained; use cm2m for constrained instances (norm p = {})",
                    tag.p()
                )));
            }
        }
        Ok(Chaser { kind, cfg, current: start, feasible })
    }

    /// A chaser positioned at the instance start.
    pub fn for_instance(kind: ChaserKind, inst: &Instance, cfg: SolverConfig) -> Result<Self> {
        Chaser::new(kind, cfg, inst.start.clone(), inst.feasible.clone())
    }

    pub fn feasible(&self) -> &FeasibleSet {
        &self.feasible
    }

    /// The step this chaser would take, without moving.
    pub fn propose(&self, f: &ConvexFunction) -> Result<Point> {
        let x = &self.current;
        match self.kind {
            ChaserKind::M2M(tag) => m2m_step(x, f, tag, &self.cfg),
            ChaserKind::ConstrainedM2M => constrained_m2m_step(x, f, &self.feasible, &self.cfg),
            ChaserKind::Cobd => cobd_step(x, f, &self.feasible, &self.cfg),
            ChaserKind::FollowMin => follow_min_step(x, f, &self.feasible, &self.cfg),
        }
    }
}

impl OnlinePlayer for Chaser {
    fn current(&self) -> &Point {
        &self.current
    }

    fn movement_norm(&self) -> NormTag {
        match self.kind {
            ChaserKind::M2M(tag) => tag,
            _ => NormTag::L2,
        }
    }

    fn respond(&mut self, f: &ConvexFunction) -> Result<Point> {
        let next = self.propose(f)?;
        self.current = next.clone();
        Ok(next)
    }
}

/// Point on `[from, to]` where movement from `origin` equals
/// `f - floor`. The leg `origin -> from` is already committed, so the
/// balance is taken along the segment only: `s|to - from| = f(from + s(to - from)) - floor`.
fn balance_on_segment(from: &Point, to: &Point, f: &ConvexFunction, floor: f64, tag: NormTag) -> Result<Point> {
    let dir = to - from;
    let len = norm(&dir, tag);
    if len == 0.0 {
        return Ok(from.clone());
    }
    let mut failure = None;
    let root = bisect_root(
        |s| match f.evaluate(&(from + &dir * s)) {
            Ok(v) => s * len - (v - floor),
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        0.0,
        1.0,
        SEGMENT_TOL,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let s = match root {
        Ok(r) => r.point,
        // Only possible when rounding lifts f(to) above the floor by more
        // than the whole segment length; the far end is then the answer.
        Err(Error::NoBracket { g_hi, .. }) if g_hi < 0.0 => 1.0,
        Err(e) => return Err(e),
    };
    Ok(from + dir * s)
}

/// Move-towards-minimizer step for a zero-min request.
///
/// Returns the point on `[x_prev, x*]` whose distance from `x_prev` (in
/// `tag`) equals its hit cost; the closest such point when there are
/// several. Requests supported on a subspace first move to the nearest
/// point of the support and balance from there.
pub fn m2m_step(x_prev: &Point, f: &ConvexFunction, tag: NormTag, _cfg: &SolverConfig) -> Result<Point> {
    let from = match f.support() {
        Some(a) => a.project(x_prev),
        None => x_prev.clone(),
    };
    let target = match f {
        ConvexFunction::Subspace(s) if s.inner().is_none() => from.clone(),
        _ => f.global_minimizer(),
    };
    balance_on_segment(&from, &target, f, 0.0, tag)
}

/// Constrained move-towards-minimizer: balance movement against
/// `f(x) - f(x*_K)` on the segment to the constrained minimizer `x*_K`.
pub fn constrained_m2m_step(x_prev: &Point, f: &ConvexFunction, k: &FeasibleSet, cfg: &SolverConfig) -> Result<Point> {
    let from = match f.support() {
        Some(_) => project_intersection(x_prev, &region(f, k), cfg.tol)?,
        None => x_prev.clone(),
    };
    let target = constrained_minimize(f, k, &from, cfg)?;
    let floor = f.evaluate(&target)?;
    balance_on_segment(&from, &target, f, floor, NormTag::L2)
}

/// Constrained online balanced descent step for a zero-min request.
///
/// If the constrained minimizer `m` already costs at least the distance to
/// it, `m` is returned. Otherwise the radius `r` of the ball around
/// `x_prev` is bisected (first probe `f(x_prev)/2`) until the minimizer of
/// `f` over the ball and `K` costs `r`.
pub fn cobd_step(x_prev: &Point, f: &ConvexFunction, k: &FeasibleSet, cfg: &SolverConfig) -> Result<Point> {
    let sets = region(f, k);
    let m = constrained_minimize(f, k, x_prev, cfg)?;
    let to_m = (&m - x_prev).norm();
    let fm = f.evaluate(&m)?;
    if fm >= to_m {
        return Ok(m);
    }
    let (mut lo, mut hi, scale) = match f.support() {
        None => {
            let fp = f.evaluate(x_prev)?;
            (0.0, fp.min(to_m), fp)
        }
        Some(_) => {
            let foot = project_intersection(x_prev, &sets, cfg.tol)?;
            let reach = (&foot - x_prev).norm();
            let at_foot = f.evaluate(&foot)?;
            if at_foot <= reach {
                // Reaching the support already costs more than the request
                // charges there; stop at the nearest point.
                return Ok(foot);
            }
            (reach, to_m, at_foot)
        }
    };
    let width = cfg.tol * (1.0 + scale);
    let tol_balance = 10.0 * width;
    let imbalance = |z: &Point| -> Result<f64> { Ok((z - x_prev).norm() - f.evaluate(z)?) };
    let mut closest: Option<(f64, Point)> = None;
    let mut first = true;
    loop {
        let r = if first && lo == 0.0 && 0.5 * scale < hi { 0.5 * scale } else { 0.5 * (lo + hi) };
        first = false;
        if r <= lo || r >= hi {
            break;
        }
        let z = cobd_inner(f, x_prev, r, k, cfg)?;
        if f.evaluate(&z)? < r {
            hi = r;
        } else {
            lo = r;
        }
        let gap = imbalance(&z)?;
        if closest.as_ref().is_none_or(|(g, _)| gap.abs() < g.abs()) {
            closest = Some((gap, z));
        }
        // The interval test alone can leave an imbalance of (slope + 1)·width;
        // keep halving until the played point is balanced to the base tolerance.
        if hi - lo <= width && closest.as_ref().is_some_and(|(g, _)| g.abs() <= width) {
            break;
        }
    }
    let (gap, best) = closest.unwrap_or((0.0, m));
    if gap > tol_balance {
        let hit = f.evaluate(&best)?;
        return Err(Error::NumericalAmbiguity { hit, movement: hit + gap });
    }
    Ok(best)
}

/// Jump straight to the constrained minimizer.
pub fn follow_min_step(x_prev: &Point, f: &ConvexFunction, k: &FeasibleSet, cfg: &SolverConfig) -> Result<Point> {
    constrained_minimize(f, k, x_prev, cfg)
}

/// Ledger entry for one request.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// 1-based request index.
    pub t: usize,
    pub x_prev: Point,
    pub x_new: Point,
    pub movement: f64,
    /// `f_t(x_new)` for the request as given.
    pub hit: f64,
    /// `f_t(x_new) - min f_t`.
    pub hit_normalized: f64,
    /// `min f_t`.
    pub offset: f64,
    /// `movement + hit`.
    pub total: f64,
}

/// Outcome of [`run_chaser`].
#[derive(Debug, Clone, Default)]
pub struct Run {
    /// `x_0, x_1, ..., x_T`.
    pub trajectory: Vec<Point>,
    pub records: Vec<StepRecord>,
    pub total: f64,
}

impl Run {
    /// Played points `x_1..x_T` (without the start).
    pub fn played(&self) -> &[Point] {
        self.trajectory.get(1..).unwrap_or(&[])
    }
}

/// A run that stopped early: the steps completed so far and the failure.
#[derive(Debug)]
pub struct RunError {
    pub partial: Run,
    pub error: Error,
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "step {} failed: {}", self.partial.records.len() + 1, self.error)
    }
}

impl std::error::Error for RunError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// Feeds every request of `inst` (normalized to minimum zero) to `player`.
pub fn run_chaser<P: OnlinePlayer + ?Sized>(player: &mut P, inst: &Instance) -> std::result::Result<Run, RunError> {
    let tag = player.movement_norm();
    let mut run = Run { trajectory: vec![player.current().clone()], records: Vec::with_capacity(inst.len()), total: 0.0 };
    for (i, f) in inst.functions.iter().enumerate() {
        let mut step = || -> Result<StepRecord> {
            let x_prev = player.current().clone();
            let normalized = f.normalize_zero_min();
            let x_new = player.respond(&normalized)?;
            let hit = f.evaluate(&x_new)?;
            let hit_normalized = normalized.evaluate(&x_new)?;
            let movement = norm(&(&x_new - &x_prev), tag);
            Ok(StepRecord {
                t: i + 1,
                x_prev,
                x_new,
                movement,
                hit,
                hit_normalized,
                offset: f.min_value(),
                total: movement + hit,
            })
        };
        match step() {
            Ok(rec) => {
                run.total += rec.total;
                run.trajectory.push(rec.x_new.clone());
                run.records.push(rec);
            }
            Err(error) => return Err(RunError { partial: run, error }),
        }
    }
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::{PowerNorm, Quadratic, SubspaceIndicator};
    use crate::geometry::{AffineSubspace, Halfspace};
    use nalgebra::DMatrix;
    use proptest::prelude::{prop_assert, proptest};
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

    const GOLDEN: f64 = 0.6180339887498949;

    #[test]
    fn m2m_one_dimensional_fixture() {
        let x = m2m_step(&v(&[1.0]), &quad(&[2.0], &[0.0]), NormTag::L2, &cfg()).unwrap();
        assert!((x[0] - GOLDEN).abs() < 1e-12);
        let at_min = m2m_step(&v(&[0.0]), &quad(&[2.0], &[0.0]), NormTag::L2, &cfg()).unwrap();
        assert_eq!(at_min, v(&[0.0]));
    }

    #[test]
    fn m2m_adversary_function_fixture() {
        // (1/4)(x1²/4 + x2²) from (1, 1): the step is λ(1, 1) with
        // (5/16)(1 - s)² = s√2 and λ = 1 - s.
        let f = quad(&[0.125, 0.5], &[0.0, 0.0]);
        let x = m2m_step(&v(&[1.0, 1.0]), &f, NormTag::L2, &cfg()).unwrap();
        let s = bisect_root(|s| s * 2f64.sqrt() - 5.0 / 16.0 * (1.0 - s).powi(2), 0.0, 1.0, 1e-15).unwrap().point;
        assert!((x[0] - (1.0 - s)).abs() < 1e-12 && (x[1] - x[0]).abs() < 1e-15);
        assert!((x[0] - 0.842976155964241).abs() < 1e-12);
        assert!(x[0] > 0.5);
    }

    #[test]
    fn cobd_fixtures() {
        let x = cobd_step(&v(&[1.0]), &quad(&[2.0], &[0.0]), &FeasibleSet::WholeSpace, &cfg()).unwrap();
        assert!((x[0] - GOLDEN).abs() < 1e-8);

        let f = quad(&[2.0, 8.0], &[0.0, 0.0]);
        let xp = v(&[1.0, 1.0]);
        let x = cobd_step(&xp, &f, &FeasibleSet::WholeSpace, &cfg()).unwrap();
        assert!((&x - v(&[0.638344561766887, 0.306165407693380])).norm() < 1e-7, "{x}");
        let hit = f.evaluate(&x).unwrap();
        assert!((hit - (&x - &xp).norm()).abs() < 1e-8);
        assert!((hit - 0.782432807009573).abs() < 1e-8);

        let m2m = m2m_step(&xp, &f, NormTag::L2, &cfg()).unwrap();
        assert!((m2m[0] - 0.408890112364444).abs() < 1e-9);
        assert!(hit < f.evaluate(&m2m).unwrap());
        assert!((f.evaluate(&m2m).unwrap() - 0.835955619947039).abs() < 1e-9);

        let at_min = cobd_step(&v(&[0.0, 0.0]), &f, &FeasibleSet::WholeSpace, &cfg()).unwrap();
        assert_eq!(at_min, v(&[0.0, 0.0]));
    }

    #[test]
    fn constrained_m2m_matches_m2m_without_constraints() {
        let f = quad(&[1.0, 3.0], &[2.0, -1.0]);
        let xp = v(&[-1.0, 2.0]);
        let a = m2m_step(&xp, &f, NormTag::L2, &cfg()).unwrap();
        let b = constrained_m2m_step(&xp, &f, &FeasibleSet::WholeSpace, &cfg()).unwrap();
        assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn constrained_m2m_ball_example() {
        // f = |x - (2, 0)|², K = unit ball, from (-1, 0): target (1, 0),
        // point (-1 + 2s, 0) with 2s = (3 - 2s)² - 1.
        let f = quad(&[2.0, 2.0], &[2.0, 0.0]);
        let k = FeasibleSet::ball(v(&[0.0, 0.0]), 1.0).unwrap();
        let x = constrained_m2m_step(&v(&[-1.0, 0.0]), &f, &k, &cfg()).unwrap();
        let s = bisect_root(|s| 2.0 * s - ((3.0 - 2.0 * s).powi(2) - 1.0), 0.0, 1.0, 1e-15).unwrap().point;
        assert!((x[0] - (-1.0 + 2.0 * s)).abs() < 1e-7 && x[1].abs() < 1e-9, "{x}");
        let moved = (&x - v(&[-1.0, 0.0])).norm();
        assert!((moved - (f.evaluate(&x).unwrap() - 1.0)).abs() < 1e-7);

        let stay = constrained_m2m_step(&v(&[1.0, 0.0]), &f, &k, &cfg()).unwrap();
        assert!((stay - v(&[1.0, 0.0])).norm() < 1e-9);
    }

    #[test]
    fn follow_min_baseline() {
        let f = quad(&[2.0, 2.0], &[0.0, 0.0]);
        let x = follow_min_step(&v(&[5.0, 5.0]), &f, &FeasibleSet::WholeSpace, &cfg()).unwrap();
        assert_eq!(x, v(&[0.0, 0.0]));

        let a = quad(&[2.0], &[-1.0]);
        let b = quad(&[2.0], &[1.0]);
        let cost = |t: usize| {
            let fs = (0..t).map(|i| if i % 2 == 0 { a.clone() } else { b.clone() }).collect();
            let inst = Instance::new(v(&[0.0]), FeasibleSet::WholeSpace, fs).unwrap();
            let mut c = Chaser::for_instance(ChaserKind::FollowMin, &inst, cfg()).unwrap();
            run_chaser(&mut c, &inst).unwrap().total
        };
        assert!((cost(10) - (1.0 + 2.0 * 9.0)).abs() < 1e-12);
        assert!((cost(20) - (1.0 + 2.0 * 19.0)).abs() < 1e-12);
    }

    #[test]
    fn run_chaser_ledgers() {
        let inst = Instance::new(v(&[1.0]), FeasibleSet::WholeSpace, vec![]).unwrap();
        let mut c = Chaser::for_instance(ChaserKind::M2M(NormTag::L2), &inst, cfg()).unwrap();
        let run = run_chaser(&mut c, &inst).unwrap();
        assert_eq!(run.total, 0.0);
        assert!(run.records.is_empty() && run.played().is_empty());

        let inst = Instance::new(v(&[1.0]), FeasibleSet::WholeSpace, vec![quad(&[2.0], &[0.0])]).unwrap();
        for kind in [ChaserKind::M2M(NormTag::L2), ChaserKind::Cobd] {
            let mut c = Chaser::for_instance(kind, &inst, cfg()).unwrap();
            let run = run_chaser(&mut c, &inst).unwrap();
            assert!((run.total - 0.7639320225002103).abs() < 1e-7, "{kind}: {}", run.total);
        }
    }

    #[test]
    fn run_chaser_ledgers_offsets_separately() {
        let f: ConvexFunction = Quadratic::diagonal(&[2.0], v(&[0.0]), 3.0).unwrap().into();
        let inst = Instance::new(v(&[1.0]), FeasibleSet::WholeSpace, vec![f]).unwrap();
        let mut c = Chaser::for_instance(ChaserKind::M2M(NormTag::L2), &inst, cfg()).unwrap();
        let rec = &run_chaser(&mut c, &inst).unwrap().records[0];
        assert!((rec.x_new[0] - GOLDEN).abs() < 1e-12);
        assert!((rec.hit - rec.hit_normalized - 3.0).abs() < 1e-12);
        assert_eq!(rec.offset, 3.0);
        assert_eq!(rec.total, rec.movement + rec.hit);
    }

    #[test]
    fn run_chaser_reports_partial_progress() {
        let good = quad(&[2.0], &[0.0]);
        let kink: ConvexFunction = PowerNorm::new(1.0, 1.0, v(&[0.0]), 1.0).unwrap().into();
        let off = BadSupport::function();
        let inst = Instance::new(v(&[1.0]), FeasibleSet::WholeSpace, vec![good, kink, off]).unwrap();
        let mut c = Chaser::for_instance(ChaserKind::M2M(NormTag::L2), &inst, cfg()).unwrap();
        let err = run_chaser(&mut c, &inst).unwrap_err();
        assert_eq!(err.partial.records.len(), 2);
        assert_eq!(err.partial.trajectory.len(), 3);
    }

    /// A black box whose value is NaN everywhere.
    struct BadSupport;

    impl BadSupport {
        fn function() -> ConvexFunction {
            crate::functions::BlackBoxOracle::new(|_: &Point| f64::NAN, |x: &Point| x.clone(), v(&[5.0]), 1.0, 1.0)
                .unwrap()
                .into()
        }
    }

    #[test]
    fn m2m_in_other_norms_balances_in_that_norm() {
        let f = quad(&[1.0, 4.0], &[0.0, 0.0]);
        let xp = v(&[2.0, -1.0]);
        for p in [1.0, 1.5, 3.0, f64::INFINITY] {
            let tag = NormTag::new(p).unwrap();
            let x = m2m_step(&xp, &f, tag, &cfg()).unwrap();
            assert!((norm(&(&x - &xp), tag) - f.evaluate(&x).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn steps_on_subspace_requests_land_on_the_support() {
        let line = AffineSubspace::new(v(&[0.0, 1.0, 0.0]), vec![v(&[1.0, 0.0, 0.0])]).unwrap();
        let inner = Quadratic::diagonal(&[2.0], v(&[4.0]), 0.0).unwrap();
        let f: ConvexFunction = SubspaceIndicator::new(line.clone(), Some(inner)).unwrap().into();
        let bare: ConvexFunction = SubspaceIndicator::new(line.clone(), None).unwrap().into();
        let xp = v(&[0.0, 0.0, 0.5]);
        for g in [&f, &bare] {
            for x in [
                m2m_step(&xp, g, NormTag::L2, &cfg()).unwrap(),
                constrained_m2m_step(&xp, g, &FeasibleSet::WholeSpace, &cfg()).unwrap(),
                cobd_step(&xp, g, &FeasibleSet::WholeSpace, &cfg()).unwrap(),
                follow_min_step(&xp, g, &FeasibleSet::WholeSpace, &cfg()).unwrap(),
            ] {
                assert!(line.contains(&x, 1e-12), "{x}");
            }
        }
        // Plain indicator: everything goes to the nearest point.
        let x = cobd_step(&xp, &bare, &FeasibleSet::WholeSpace, &cfg()).unwrap();
        assert!((x - v(&[0.0, 1.0, 0.0])).norm() < 1e-12);
        // With the inner quadratic, balanced descent moves past the foot.
        let x = cobd_step(&xp, &f, &FeasibleSet::WholeSpace, &cfg()).unwrap();
        assert!((f.evaluate(&x).unwrap() - (&x - &xp).norm()).abs() < 1e-7);
    }

    #[test]
    fn cobd_on_constrained_instances_stays_feasible_and_balanced() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let ks = [
            FeasibleSet::ball(v(&[0.0, 0.0, 0.0]), 1.0).unwrap(),
            FeasibleSet::halfspaces(
                vec![
                    Halfspace::new(v(&[1.0, 0.0, 0.0]), 0.3).unwrap(),
                    Halfspace::new(v(&[0.0, 1.0, 1.0]), 0.2).unwrap(),
                ],
                v(&[0.0, 0.0, 0.0]),
            )
            .unwrap(),
        ];
        for k in &ks {
            let mut x = v(&[0.0, 0.0, 0.0]);
            for _ in 0..8 {
                let a = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0));
                let h = &a * a.transpose() + DMatrix::identity(3, 3) * 0.5;
                let c = Point::from_fn(3, |_, _| rng.random_range(-3.0..3.0));
                let f: ConvexFunction = Quadratic::new(h, c, 0.0).unwrap().into();
                let f = f.normalize_zero_min();
                let shift = f.evaluate(&constrained_minimize(&f, k, &x, &cfg()).unwrap()).unwrap();
                let next = cobd_step(&x, &f, k, &cfg()).unwrap();
                assert!(k.contains(&next, 1e-7));
                let hit = f.evaluate(&next).unwrap();
                let moved = (&next - &x).norm();
                assert!(moved <= hit + 1e-7, "moved {moved} hit {hit} (floor {shift})");
                x = next;
            }
        }
    }

    proptest! {
        #[test]
        fn m2m_step_identity(seed in 0u64..10_000, d in 1usize..8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
            let h = &a * a.transpose() + DMatrix::identity(d, d) * 0.2;
            let f: ConvexFunction = Quadratic::new(h, Point::from_fn(d, |_, _| rng.random_range(-2.0..2.0)), 0.0).unwrap().into();
            let xp = Point::from_fn(d, |_, _| rng.random_range(-4.0..4.0));
            let x = m2m_step(&xp, &f, NormTag::L2, &cfg()).unwrap();
            let moved = (&x - &xp).norm();
            let hit = f.evaluate(&x).unwrap();
            prop_assert!((moved - hit).abs() <= 1e-9 * (1.0 + f.evaluate(&xp).unwrap()));
        }

        #[test]
        fn cobd_moves_at_most_its_hit(seed in 0u64..10_000, d in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
            let h = &a * a.transpose() + DMatrix::identity(d, d) * 0.1;
            let f: ConvexFunction = Quadratic::new(h, Point::from_fn(d, |_, _| rng.random_range(-2.0..2.0)), 0.0).unwrap().into();
            let xp = Point::from_fn(d, |_, _| rng.random_range(-4.0..4.0));
            let x = cobd_step(&xp, &f, &FeasibleSet::WholeSpace, &cfg()).unwrap();
            let moved = (&x - &xp).norm();
            prop_assert!(moved <= f.evaluate(&x).unwrap() + 1e-7);
        }
    }
}
