//! Potentials, amortized residuals, ratios and scaling fits.

use serde::Serialize;

use crate::chasers::{run_chaser, Chaser, ChaserKind, Run};
use crate::functions::ConvexFunction;
use crate::geometry::{NormTag, Point};
use crate::instance::Instance;
use crate::solvers::{offline_opt_grid_1d, offline_opt_with_starts, OfflineMethod, OfflineResult, SolverConfig};
use crate::{Error, Result};

/// Relative tolerance of the amortized check.
pub const AMORTIZED_TOL: f64 = 1e-6;

/// Grid size used for one-dimensional offline optima.
pub const GRID_POINTS: usize = 4001;

/// What a competitive ratio computed here means.
pub const RATIO_SEMANTICS: &str =
    "ratio_lower = alg_cost / opt_upper_cost; opt_upper_cost is the cost of a feasible offline trajectory, \
     so ratio_lower is a lower bound on the competitive ratio of this instance";

/// `Φ_t = |x_t - y_t|` and its increments.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PotentialTrace {
    /// `Φ_0, ..., Φ_T`.
    pub phi: Vec<f64>,
    /// `Φ_t - Φ_{t-1}` for `t = 1..T`.
    pub delta: Vec<f64>,
}

/// Both trajectories include the start, so they have `T + 1` points.
pub fn potential_trace(traj_alg: &[Point], traj_cmp: &[Point]) -> Result<PotentialTrace> {
    if traj_alg.len() != traj_cmp.len() {
        return Err(Error::LengthMismatch { left: traj_alg.len(), right: traj_cmp.len() });
    }
    let phi: Vec<f64> = traj_alg.iter().zip(traj_cmp).map(|(x, y)| (x - y).norm()).collect();
    let delta = phi.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(PotentialTrace { phi, delta })
}

/// Which per-step inequality to test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BoundKind {
    M2M,
    Cobd,
    WellCentered { gamma: f64 },
    ConstrainedM2M,
}

impl BoundKind {
    /// `(a, b)` in `cost_t(ALG) + a ΔΦ_t <= b cost_t(Y)`.
    pub fn constants(&self, kappa: f64) -> (f64, f64) {
        let s2 = std::f64::consts::SQRT_2;
        match *self {
            BoundKind::M2M => (2.0 * s2, (4.0 + 4.0 * s2) * kappa),
            BoundKind::Cobd => {
                let c = 2.0 * (2.0 * kappa).sqrt();
                (c, 2.0 * (2.0 + c))
            }
            BoundKind::WellCentered { gamma } => (2.0 * s2, (2.0 + 2.0 * s2) * 2f64.powf(gamma / 2.0) * kappa),
            BoundKind::ConstrainedM2M => (2.0 * s2, 25.0 * (2.0 + 2.0 * s2) * kappa),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmortizedReport {
    pub bound: BoundKind,
    pub kappa: f64,
    pub a: f64,
    pub b: f64,
    /// `cost_t(ALG) + a ΔΦ_t - b cost_t(Y)`.
    pub residuals: Vec<f64>,
    /// Largest magnitude among the three terms over all steps.
    pub scale: f64,
    pub max_residual: f64,
    pub pass: bool,
}

impl AmortizedReport {
    /// Steps whose residual exceeds the tolerance.
    pub fn violations(&self) -> Vec<usize> {
        let tol = AMORTIZED_TOL * (1.0 + self.scale);
        (1..=self.residuals.len()).filter(|&t| self.residuals[t - 1] > tol).collect()
    }
}

/// Per-step costs `|y_t - y_{t-1}| + f_t(y_t) - min f_t` of a trajectory
/// `y_0, ..., y_T`.
pub fn step_costs(inst: &Instance, traj: &[Point]) -> Result<Vec<f64>> {
    if traj.len() != inst.len() + 1 {
        return Err(Error::LengthMismatch { left: inst.len() + 1, right: traj.len() });
    }
    inst.functions
        .iter()
        .zip(traj.windows(2))
        .map(|(f, w)| Ok((&w[1] - &w[0]).norm() + f.evaluate(&w[1])? - f.min_value()))
        .collect()
}

/// Per-step costs of a chaser run against the zero-min requests.
pub fn run_costs(run: &Run) -> Vec<f64> {
    run.records.iter().map(|r| r.movement + r.hit_normalized).collect()
}

/// Residuals of the per-step inequality selected by `bound`. Passes when
/// the largest residual is at most `1e-6 (1 + scale)`.
pub fn amortized_check(
    alg_costs: &[f64],
    cmp_costs: &[f64],
    trace: &PotentialTrace,
    kappa: f64,
    bound: BoundKind,
) -> Result<AmortizedReport> {
    if alg_costs.len() != cmp_costs.len() {
        return Err(Error::LengthMismatch { left: alg_costs.len(), right: cmp_costs.len() });
    }
    if trace.delta.len() != alg_costs.len() {
        return Err(Error::LengthMismatch { left: alg_costs.len(), right: trace.delta.len() });
    }
    let (a, b) = bound.constants(kappa);
    let mut scale = 0.0f64;
    let residuals: Vec<f64> = alg_costs
        .iter()
        .zip(cmp_costs)
        .zip(&trace.delta)
        .map(|((&alg, &cmp), &dphi)| {
            scale = scale.max(alg.abs()).max((a * dphi).abs()).max((b * cmp).abs());
            alg + a * dphi - b * cmp
        })
        .collect();
    let max_residual = residuals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pass = residuals.is_empty() || max_residual <= AMORTIZED_TOL * (1.0 + scale);
    Ok(AmortizedReport { bound, kappa, a, b, residuals, scale, max_residual, pass })
}

/// The per-step inequality that applies to `kind` on `inst`, with its
/// condition number, if any does.
pub fn bound_for(kind: ChaserKind, inst: &Instance) -> Option<(BoundKind, f64)> {
    if inst.is_empty() {
        return None;
    }
    let smooth = inst.functions.iter().all(|f| matches!(f, ConvexFunction::Quadratic(_) | ConvexFunction::BlackBox(_)));
    let kappa = inst.functions.iter().map(|f| f.conditioning().kappa).fold(1.0, f64::max);
    if !kappa.is_finite() {
        return None;
    }
    match kind {
        ChaserKind::M2M(tag) if tag == NormTag::L2 => {
            if smooth {
                Some((BoundKind::M2M, kappa))
            } else {
                let mut gamma = 0.0f64;
                for f in &inst.functions {
                    match f {
                        ConvexFunction::PowerNorm(p) => gamma = gamma.max(p.exponent()),
                        _ => return None,
                    }
                }
                Some((BoundKind::WellCentered { gamma }, kappa))
            }
        }
        ChaserKind::Cobd if smooth => Some((BoundKind::Cobd, kappa)),
        ChaserKind::ConstrainedM2M if smooth => Some((BoundKind::ConstrainedM2M, kappa)),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioReport {
    pub algo: String,
    pub alg_cost: f64,
    pub opt_upper_cost: f64,
    pub opt_method: OfflineMethod,
    pub ratio_lower: f64,
    pub semantics: &'static str,
    /// Per-step inequality against the offline trajectory, when one applies.
    pub amortized: Option<AmortizedReport>,
    pub flags: Vec<String>,
}

/// Everything [`compare`] computed.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub run: Run,
    pub offline: OfflineResult,
    pub report: RatioReport,
}

fn grid_range(inst: &Instance, points: &[&[Point]]) -> (f64, f64) {
    let mut lo = inst.start[0];
    let mut hi = lo;
    let minimizers: Vec<Point> = inst.functions.iter().map(|f| f.global_minimizer()).collect();
    for p in points.iter().flat_map(|s| s.iter()).chain(&minimizers) {
        lo = lo.min(p[0]);
        hi = hi.max(p[0]);
    }
    let margin = 0.05 * (hi - lo) + 1e-3;
    (lo - margin, hi + margin)
}

/// Runs the chaser and the offline solver and compares their costs.
pub fn compare(inst: &Instance, kind: ChaserKind, cfg: &SolverConfig) -> Result<Comparison> {
    let mut chaser = Chaser::for_instance(kind, inst, *cfg)?;
    let run = run_chaser(&mut chaser, inst).map_err(|e| e.error)?;
    let mut flags = Vec::new();

    let mut offline = offline_opt_with_starts(inst, cfg, &[run.played().to_vec()])?;
    if !offline.converged {
        flags.push("offline-not-converged".to_string());
    }
    if inst.dim() == 1 && !inst.is_empty() {
        let (lo, hi) = grid_range(inst, &[&run.trajectory, &offline.trajectory]);
        let grid = offline_opt_grid_1d(inst, lo, hi, GRID_POINTS)?;
        if grid.cost < offline.cost {
            offline = grid;
        }
    }

    let alg_cost = run.total;
    let opt = offline.cost;
    let ratio_lower = if alg_cost.abs() <= 1e-12 && opt.abs() <= 1e-12 {
        flags.push("degenerate".to_string());
        1.0
    } else if opt <= 0.0 {
        flags.push("opt-zero".to_string());
        f64::INFINITY
    } else {
        alg_cost / opt
    };

    let amortized = match bound_for(kind, inst) {
        Some((bound, kappa)) => {
            let mut cmp = vec![inst.start.clone()];
            cmp.extend(offline.trajectory.iter().cloned());
            let trace = potential_trace(&run.trajectory, &cmp)?;
            let report = amortized_check(&run_costs(&run), &step_costs(inst, &cmp)?, &trace, kappa, bound)?;
            if !report.pass {
                flags.push("amortized-violation".to_string());
            }
            Some(report)
        }
        None => None,
    };

    let report = RatioReport {
        algo: kind.name().to_string(),
        alg_cost,
        opt_upper_cost: opt,
        opt_method: offline.method,
        ratio_lower,
        semantics: RATIO_SEMANTICS,
        amortized,
        flags,
    };
    Ok(Comparison { run, offline, report })
}

pub fn competitive_ratio(inst: &Instance, kind: ChaserKind, cfg: &SolverConfig) -> Result<RatioReport> {
    compare(inst, kind, cfg).map(|c| c.report)
}

/// Least-squares line through `(log x, log y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingFit {
    pub exponent: f64,
    /// `log c` in `y ≈ c x^exponent`.
    pub intercept: f64,
    pub r2: f64,
}

pub fn scaling_fit(xs: &[f64], ys: &[f64]) -> Result<ScalingFit> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch { left: xs.len(), right: ys.len() });
    }
    if xs.len() < 3 {
        return Err(Error::NonPositiveData(format!("need at least 3 points, got {}", xs.len())));
    }
    if let Some(v) = xs.iter().chain(ys).find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::NonPositiveData(format!("found {v}")));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::NonPositiveData("all x values are equal".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let ss_res: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - exponent * x).powi(2)).sum();
    let ss_tot: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(ScalingFit { exponent, intercept, r2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversaries::{build_lbd_schedule, AdaptiveKind};
    use crate::functions::Quadratic;
    use crate::geometry::FeasibleSet;

    fn p(c: &[f64]) -> Point {
        Point::from_column_slice(c)
    }

    #[test]
    fn trace_examples() {
        let xs = vec![p(&[0.0, 0.0]); 4];
        let t = potential_trace(&xs, &xs).unwrap();
        assert!(t.phi.iter().chain(&t.delta).all(|v| *v == 0.0));
        let ys = vec![p(&[1.0, 0.0]); 4];
        let t = potential_trace(&xs, &ys).unwrap();
        assert_eq!(t.phi, vec![1.0; 4]);
        assert_eq!(t.delta, vec![0.0; 3]);
        assert!(matches!(potential_trace(&xs, &ys[..3]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn m2m_adversary_potential_never_drops() {
        let run = build_lbd_schedule(AdaptiveKind::M2M, 4.0, None).unwrap().run_default(SolverConfig::default()).unwrap();
        let mut cmp = vec![Point::from_column_slice(&[1.0, 0.0])];
        cmp.extend(run.comparator.iter().cloned());
        let t = potential_trace(&run.alg.trajectory, &cmp).unwrap();
        assert!(t.delta.iter().all(|d| *d >= -1e-9), "{:?}", t.delta);
    }

    #[test]
    fn self_comparison_is_nonpositive() {
        let costs = [0.5, 1.0, 0.0, 2.0];
        let trace = PotentialTrace { phi: vec![0.0; 5], delta: vec![0.0; 4] };
        for bound in [BoundKind::M2M, BoundKind::Cobd, BoundKind::WellCentered { gamma: 2.0 }, BoundKind::ConstrainedM2M] {
            let r = amortized_check(&costs, &costs, &trace, 4.0, bound).unwrap();
            assert!(r.pass);
            for (res, c) in r.residuals.iter().zip(costs) {
                assert!((res - c * (1.0 - r.b)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bound_constants() {
        let (a, b) = BoundKind::Cobd.constants(8.0);
        assert_eq!(a, 8.0);
        assert_eq!(b, 20.0);
        let (a, b) = BoundKind::WellCentered { gamma: 2.0 }.constants(1.0);
        assert!((a - 2.0 * 2f64.sqrt()).abs() < 1e-15);
        assert!((b - 2.0 * (2.0 + 2.0 * 2f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn one_step_ratio() {
        let f = Quadratic::diagonal(&[2.0], p(&[0.0]), 0.0).unwrap();
        let inst = Instance::new(p(&[1.0]), FeasibleSet::WholeSpace, vec![f.into()]).unwrap();
        let r = competitive_ratio(&inst, ChaserKind::M2M(NormTag::L2), &SolverConfig::default()).unwrap();
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        let alg = 2.0 * (1.0 - golden);
        assert!((r.alg_cost - alg).abs() < 1e-9);
        assert!((r.opt_upper_cost - 0.75).abs() < 1e-6);
        assert!((r.ratio_lower - alg / 0.75).abs() < 1e-5);
        assert!(r.amortized.as_ref().unwrap().pass);
    }

    #[test]
    fn vanishing_instance_is_degenerate() {
        let f = Quadratic::diagonal(&[2.0, 2.0], p(&[1.0, 1.0]), 0.0).unwrap();
        let inst = Instance::new(p(&[1.0, 1.0]), FeasibleSet::WholeSpace, vec![f.clone().into(), f.into()]).unwrap();
        let r = competitive_ratio(&inst, ChaserKind::Cobd, &SolverConfig::default()).unwrap();
        assert_eq!(r.ratio_lower, 1.0);
        assert!(r.flags.iter().any(|f| f == "degenerate"));
    }

    #[test]
    fn fit_examples() {
        let xs = [8.0, 27.0, 64.0, 125.0];
        let lin: Vec<f64> = xs.iter().map(|x| 3.0 * x).collect();
        let root: Vec<f64> = xs.iter().map(|x| 0.5 * x.sqrt()).collect();
        let f = scaling_fit(&xs, &lin).unwrap();
        assert!((f.exponent - 1.0).abs() < 1e-12 && (f.r2 - 1.0).abs() < 1e-12);
        assert!((scaling_fit(&xs, &root).unwrap().exponent - 0.5).abs() < 1e-12);
        assert!(matches!(scaling_fit(&xs, &[1.0, 0.0, 2.0, 3.0]), Err(Error::NonPositiveData(_))));
        assert!(matches!(scaling_fit(&xs[..2], &lin[..2]), Err(Error::NonPositiveData(_))));
    }
}
