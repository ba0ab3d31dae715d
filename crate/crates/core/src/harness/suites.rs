//! Randomized property suites behind `check`.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::chasers::{run_chaser, Chaser, ChaserKind};
use crate::functions::ConvexFunction;
use crate::geometry::{segment_structure, NormTag, Point};
use crate::harness::analysis::{amortized_check, bound_for, potential_trace, run_costs, step_costs, AmortizedReport};
use crate::harness::generate::{
    random_feasible_trajectory, random_powernorm_instance, random_quadratic, random_quadratic_instance,
    random_subspace_instance, RandomDomain,
};
use crate::instance::Instance;
use crate::reduction::{reduce_instance, LiftedChaser};
use crate::solvers::{offline_opt_with_starts, SolverConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Structure,
    Amortized,
    Gradbound,
    Reduction,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "structure" => Ok(Suite::Structure),
            "amortized" => Ok(Suite::Amortized),
            "gradbound" => Ok(Suite::Gradbound),
            "reduction" => Ok(Suite::Reduction),
            other => Err(Error::InvalidMode(format!("unknown suite `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub seed: u64,
    pub trials: usize,
    pub failures: usize,
    /// Descriptions of the first few failures.
    pub examples: Vec<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    fn fail(&mut self, what: String) {
        self.failures += 1;
        if self.examples.len() < 10 {
            self.examples.push(what);
        }
    }
}

/// Slack for the segment structure disjunction.
pub const STRUCTURE_SLACK: f64 = 1e-12;
/// Additive slack for the gradient bound.
pub const GRADBOUND_SLACK: f64 = 1e-9;
/// Tolerance for the reduction checks on points.
pub const REDUCTION_TOL: f64 = 1e-8;
/// Tolerance for lifted and reduced run costs.
pub const REDUCTION_COST_TOL: f64 = 1e-6;

/// Runs `suite` with its default trial count, or `trials` when given.
pub fn run_suite(suite: Suite, seed: u64, trials: Option<usize>) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SuiteReport { suite, seed, trials: 0, failures: 0, examples: Vec::new() };
    match suite {
        Suite::Structure => structure(&mut rng, trials.unwrap_or(100_000), &mut report),
        Suite::Gradbound => gradbound(&mut rng, trials.unwrap_or(10_000), &mut report),
        Suite::Amortized => amortized(&mut rng, trials.unwrap_or(20), &mut report)?,
        Suite::Reduction => reduction(&mut rng, trials.unwrap_or(50), &mut report)?,
    }
    Ok(report)
}

fn gaussian(rng: &mut ChaCha8Rng, d: usize) -> Point {
    Point::from_fn(d, |_, _| rng.sample(StandardNormal))
}

/// `trials` draws for each of l2, l1, l1.5, l3 and l_inf.
fn structure(rng: &mut ChaCha8Rng, trials: usize, report: &mut SuiteReport) {
    let tags = [NormTag::L2, NormTag::L1, NormTag::new(1.5).unwrap(), NormTag::new(3.0).unwrap(), NormTag::LINF];
    for tag in tags {
        for _ in 0..trials {
            let d = rng.random_range(1..=6);
            let x = gaussian(rng, d) * rng.random_range(0.1..10.0);
            let y = gaussian(rng, d) * rng.random_range(0.1..10.0);
            let gamma = rng.random_range(0.0..=1.0);
            report.trials += 1;
            if segment_structure(&x, &y, gamma, tag, STRUCTURE_SLACK).is_none() {
                report.fail(format!("p={} x={:?} y={:?} gamma={gamma}", tag.p(), x.as_slice(), y.as_slice()));
            }
        }
    }
}

/// `|∇f(x)| <= sqrt(2 β f(x))` for zero-min smooth functions.
fn gradbound(rng: &mut ChaCha8Rng, trials: usize, report: &mut SuiteReport) {
    for _ in 0..trials {
        let d = rng.random_range(1..=8);
        let kappa = rng.random_range(1.0..100.0);
        let f = ConvexFunction::from(random_quadratic(rng, d, kappa));
        let x = gaussian(rng, d) * rng.random_range(0.1..5.0);
        report.trials += 1;
        let (Ok(g), Ok(v)) = (f.gradient(&x), f.evaluate(&x)) else {
            report.fail(format!("evaluation failed at {:?}", x.as_slice()));
            continue;
        };
        let beta = f.conditioning().beta;
        let bound = (2.0 * beta * v).sqrt() + GRADBOUND_SLACK;
        if g.norm() > bound {
            report.fail(format!("|grad| = {} > {bound}", g.norm()));
        }
    }
}

/// Checks the chaser's per-step inequality against follow-the-minimizer,
/// the offline solution and `n_random` random feasible trajectories.
pub fn amortized_reports(
    inst: &Instance,
    kind: ChaserKind,
    cfg: &SolverConfig,
    offline_cfg: &SolverConfig,
    rng: &mut impl Rng,
    n_random: usize,
) -> Result<Vec<AmortizedReport>> {
    let (bound, kappa) = bound_for(kind, inst)
        .ok_or_else(|| Error::InvalidMode(format!("no per-step inequality for {} on this instance", kind.name())))?;
    let mut chaser = Chaser::for_instance(kind, inst, *cfg)?;
    let run = run_chaser(&mut chaser, inst).map_err(|e| e.error)?;
    let alg = run_costs(&run);

    let mut comparators = Vec::with_capacity(n_random + 2);
    let mut follow = Chaser::for_instance(ChaserKind::FollowMin, inst, *cfg)?;
    comparators.push(run_chaser(&mut follow, inst).map_err(|e| e.error)?.trajectory);
    let offline = offline_opt_with_starts(inst, offline_cfg, &[run.played().to_vec()])?;
    let mut opt = vec![inst.start.clone()];
    opt.extend(offline.trajectory);
    comparators.push(opt);
    for _ in 0..n_random {
        comparators.push(random_feasible_trajectory(rng, inst, 4.0)?);
    }
    comparators
        .iter()
        .map(|cmp| {
            let trace = potential_trace(&run.trajectory, cmp)?;
            amortized_check(&alg, &step_costs(inst, cmp)?, &trace, kappa, bound)
        })
        .collect()
}

fn amortized(rng: &mut ChaCha8Rng, per_family: usize, report: &mut SuiteReport) -> Result<()> {
    let cfg = SolverConfig::default();
    let offline_cfg = SolverConfig { max_iter: 2_000, ..SolverConfig::default() };
    let families: [(&str, ChaserKind, RandomDomain); 5] = [
        ("m2m", ChaserKind::M2M(NormTag::L2), RandomDomain::Whole),
        ("cobd", ChaserKind::Cobd, RandomDomain::Whole),
        ("cobd-ball", ChaserKind::Cobd, RandomDomain::UnitBall),
        ("cobd-halfspaces", ChaserKind::Cobd, RandomDomain::Halfspaces),
        ("cm2m-halfspaces", ChaserKind::ConstrainedM2M, RandomDomain::Halfspaces),
    ];
    for (name, kind, dom) in families {
        for _ in 0..per_family {
            let d = rng.random_range(1..=8);
            let t = rng.random_range(1..=12);
            let kappa = [1.0, 4.0, 16.0][rng.random_range(0..3)];
            let inst = random_quadratic_instance(rng, d, t, kappa, dom)?;
            record(report, name, amortized_reports(&inst, kind, &cfg, &offline_cfg, rng, 10)?);
        }
    }
    for _ in 0..per_family {
        let d = rng.random_range(1..=6);
        let t = rng.random_range(1..=12);
        let gamma = [1.5, 2.0, 3.0][rng.random_range(0..3)];
        let inst = random_powernorm_instance(rng, d, t, gamma, 1.0)?;
        record(report, "well-centered", amortized_reports(&inst, ChaserKind::M2M(NormTag::L2), &cfg, &offline_cfg, rng, 10)?);
    }
    Ok(())
}

fn record(report: &mut SuiteReport, name: &str, reports: Vec<AmortizedReport>) {
    for r in reports {
        report.trials += r.residuals.len();
        for t in r.violations() {
            report.fail(format!("{name}: step {t} residual {:e} (scale {:e})", r.residuals[t - 1], r.scale));
        }
    }
}

/// Outcome of reducing and replaying one subspace instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReductionCheck {
    /// Largest distance of a transported request from `L`.
    pub off_l: f64,
    /// Largest disagreement `|R_t p - R_{t-1} p|` over sampled points of the
    /// previous request.
    pub drift: f64,
    pub lifted_cost: f64,
    pub reduced_cost: f64,
}

/// Reduces `inst`, measures how well the isometries behave and compares the
/// lifted chaser with the same chaser on the reduced instance.
pub fn check_reduction(inst: &Instance, k: usize, kind: ChaserKind, cfg: &SolverConfig, rng: &mut impl Rng) -> Result<ReductionCheck> {
    let reduced = reduce_instance(inst, k)?;
    let width = reduced.instance.dim();
    let tail = |p: &Point| p.rows(width, p.len() - width).norm();
    let mut off_l = 0.0f64;
    let mut drift = 0.0f64;
    let mut prev_support = None;
    let mut start_image = Point::zeros(inst.dim());
    start_image.rows_mut(0, width).copy_from(&reduced.instance.start);
    for (t, (f, iso)) in inst.functions.iter().zip(&reduced.isometries).enumerate() {
        let support = f.support().ok_or_else(|| Error::InvalidFunction("request without a support".into()))?;
        off_l = off_l.max(tail(&iso.apply(support.base())));
        for b in support.basis() {
            off_l = off_l.max(tail(&iso.apply_direction(b)));
        }
        if t == 0 {
            drift = drift.max((iso.apply(&inst.start) - &start_image).norm());
        } else if let Some(prev) = prev_support {
            let prev: &crate::geometry::AffineSubspace = prev;
            for _ in 0..4 {
                let c = Point::from_fn(prev.dim(), |_, _| rng.random_range(-5.0..5.0));
                let p = prev.lift(&c);
                drift = drift.max((iso.apply(&p) - reduced.isometries[t - 1].apply(&p)).norm());
            }
        }
        prev_support = Some(support);
    }

    let mut lifted = LiftedChaser::for_instance(kind, inst, *cfg, k)?;
    let lifted_run = run_chaser(&mut lifted, inst).map_err(|e| e.error)?;
    let mut base = Chaser::for_instance(kind, &reduced.instance, *cfg)?;
    let reduced_run = run_chaser(&mut base, &reduced.instance).map_err(|e| e.error)?;
    Ok(ReductionCheck { off_l, drift, lifted_cost: lifted_run.total, reduced_cost: reduced_run.total })
}

fn reduction(rng: &mut ChaCha8Rng, per_case: usize, report: &mut SuiteReport) -> Result<()> {
    let cfg = SolverConfig::default();
    for k in [1, 2] {
        for d in [8, 50] {
            for _ in 0..per_case {
                let t = rng.random_range(2..=10);
                let inst = random_subspace_instance(rng, d, t, k, 4.0)?;
                let kind = if rng.random_bool(0.5) { ChaserKind::Cobd } else { ChaserKind::M2M(NormTag::L2) };
                let c = check_reduction(&inst, k, kind, &cfg, rng)?;
                report.trials += 1;
                let cost_gap = (c.lifted_cost - c.reduced_cost).abs();
                if c.off_l > REDUCTION_TOL || c.drift > REDUCTION_TOL || cost_gap > REDUCTION_COST_TOL {
                    report.fail(format!(
                        "k={k} d={d} {}: off L {:e}, drift {:e}, cost gap {:e}",
                        kind.name(),
                        c.off_l,
                        c.drift,
                        cost_gap
                    ));
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suites_pass() {
        for (suite, n) in [(Suite::Structure, 2_000), (Suite::Gradbound, 2_000), (Suite::Amortized, 2), (Suite::Reduction, 2)] {
            let r = run_suite(suite, 3, Some(n)).unwrap();
            assert!(r.trials > 0);
            assert!(r.passed(), "{suite:?}: {:?}", r.examples);
        }
    }

    #[test]
    fn suite_names() {
        assert_eq!("gradbound".parse::<Suite>().unwrap(), Suite::Gradbound);
        assert!("nope".parse::<Suite>().is_err());
    }
}
