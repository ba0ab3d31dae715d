//! Lower-bound sweeps over the condition number.

use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::adversaries::{build_lbd_schedule, gen_cube_instance, preset_params, AdaptiveKind, CubePreset};
use crate::chasers::{run_chaser, Chaser, ChaserKind};
use crate::harness::analysis::{scaling_fit, ScalingFit};
use crate::solvers::SolverConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAdversary {
    /// Random hypercube instances, played by a chosen chaser.
    Cube,
    /// Adaptive adversary against move-towards-minimizer.
    M2M,
    /// Adaptive adversary against balanced descent.
    Cobd,
}

impl FromStr for SweepAdversary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cube" => Ok(SweepAdversary::Cube),
            "m2m" => Ok(SweepAdversary::M2M),
            "cobd" => Ok(SweepAdversary::Cobd),
            other => Err(Error::InvalidMode(format!("unknown adversary `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub adversary: SweepAdversary,
    pub kappas: Vec<f64>,
    /// Seeds per condition number. The adaptive adversaries are
    /// deterministic and run once per condition number.
    pub seeds: usize,
    pub base_seed: u64,
    /// Player for cube instances.
    pub algo: ChaserKind,
    pub solver: SolverConfig,
}

/// One instance of the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub kappa: f64,
    pub seed: Option<u64>,
    pub horizon: usize,
    pub alg_cost: f64,
    /// Cost of the explicit comparator, an upper bound on the optimum.
    pub cmp_cost: f64,
    pub ratio_lower: f64,
    /// Adaptive steps whose bookkeeping checks failed.
    pub flagged: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepSummary {
    pub kappa: f64,
    pub runs: usize,
    pub mean_ratio: f64,
    pub std_ratio: f64,
    pub mean_step_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub adversary: SweepAdversary,
    pub algo: String,
    pub points: Vec<SweepPoint>,
    pub summaries: Vec<SweepSummary>,
    /// Log-log fit of the mean ratio against the condition number.
    pub fit: Option<ScalingFit>,
}

fn one(cfg: &SweepConfig, kappa: f64, seed: Option<u64>) -> Result<SweepPoint> {
    match cfg.adversary {
        SweepAdversary::Cube => {
            let seed = seed.unwrap_or(cfg.base_seed);
            let params = preset_params(CubePreset::WellConditioned { kappa }, None, seed)?;
            let cube = gen_cube_instance(&params)?;
            let mut chaser = Chaser::for_instance(cfg.algo, &cube.instance, cfg.solver)?;
            let run = run_chaser(&mut chaser, &cube.instance).map_err(|e| e.error)?;
            Ok(SweepPoint {
                kappa,
                seed: Some(seed),
                horizon: cube.instance.len(),
                alg_cost: run.total,
                cmp_cost: cube.candidate_cost,
                ratio_lower: run.total / cube.candidate_cost,
                flagged: 0,
            })
        }
        SweepAdversary::M2M | SweepAdversary::Cobd => {
            let kind = if cfg.adversary == SweepAdversary::M2M { AdaptiveKind::M2M } else { AdaptiveKind::Cobd };
            let run = build_lbd_schedule(kind, kappa, None)?.run_default(cfg.solver)?;
            Ok(SweepPoint {
                kappa,
                seed: None,
                horizon: run.steps.len(),
                alg_cost: run.alg_cost(),
                cmp_cost: run.comparator_cost,
                ratio_lower: run.ratio(),
                flagged: run.flagged(),
            })
        }
    }
}

/// Runs every (condition number, seed) pair in parallel.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepReport> {
    if cfg.kappas.is_empty() {
        return Err(Error::InvalidMode("sweep needs at least one condition number".into()));
    }
    let jobs: Vec<(f64, Option<u64>)> = cfg
        .kappas
        .iter()
        .flat_map(|&k| match cfg.adversary {
            SweepAdversary::Cube => (0..cfg.seeds.max(1) as u64).map(|s| (k, Some(cfg.base_seed + s))).collect::<Vec<_>>(),
            _ => vec![(k, None)],
        })
        .collect();
    let points = jobs.par_iter().map(|&(k, s)| one(cfg, k, s)).collect::<Result<Vec<_>>>()?;

    let summaries: Vec<SweepSummary> = cfg
        .kappas
        .iter()
        .map(|&kappa| {
            let rows: Vec<&SweepPoint> = points.iter().filter(|p| p.kappa == kappa).collect();
            let n = rows.len() as f64;
            let mean = rows.iter().map(|p| p.ratio_lower).sum::<f64>() / n;
            let var = if rows.len() > 1 {
                rows.iter().map(|p| (p.ratio_lower - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            let mean_step_cost = rows.iter().map(|p| p.alg_cost / p.horizon.max(1) as f64).sum::<f64>() / n;
            SweepSummary { kappa, runs: rows.len(), mean_ratio: mean, std_ratio: var.sqrt(), mean_step_cost }
        })
        .collect();
    let xs: Vec<f64> = summaries.iter().map(|s| s.kappa).collect();
    let ys: Vec<f64> = summaries.iter().map(|s| s.mean_ratio).collect();
    let fit = scaling_fit(&xs, &ys).ok();
    let algo = match cfg.adversary {
        SweepAdversary::Cube => cfg.algo.name(),
        SweepAdversary::M2M => "m2m",
        SweepAdversary::Cobd => "cobd",
    };
    Ok(SweepReport { adversary: cfg.adversary, algo: algo.to_string(), points, summaries, fit })
}
