use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use convex_chase::chasers::{run_chaser, Chaser, ChaserKind, OnlinePlayer, Run};
use convex_chase::geometry::NormTag;
use convex_chase::harness::{
    check_reduction, compare, load_instance, potential_trace, resolve_seed, run_suite, run_sweep, save_instance,
    write_json, write_rows_csv, write_run_csv, Suite, SweepAdversary, SweepConfig, REDUCTION_COST_TOL, REDUCTION_TOL,
};
use convex_chase::instance::Instance;
use convex_chase::reduction::{reduce_instance, LiftedChaser};
use convex_chase::solvers::SolverConfig;
use convex_chase::Error;

const EXIT_PROPERTY: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_NONCONVERGENCE: u8 = 3;

#[derive(Parser)]
#[command(name = "chase", version, about = "Run and measure convex function chasing algorithms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct AlgoArgs {
    /// m2m, cm2m, cobd or followmin.
    #[arg(long)]
    algo: String,
    /// Movement norm exponent for m2m.
    #[arg(long, default_value_t = 2.0)]
    norm: f64,
    /// Solver tolerance.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Play an instance and write the trajectory.
    Run {
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        algo: AlgoArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Play an instance and compare against the offline solution.
    Compare {
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        algo: AlgoArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Lower-bound sweep over condition numbers.
    Sweep {
        /// cube, m2m or cobd.
        #[arg(long)]
        adversary: String,
        #[arg(long, value_delimiter = ',', default_value = "8,27,64,125")]
        kappas: Vec<f64>,
        /// Seeds per condition number (cube instances only).
        #[arg(long, default_value_t = 20)]
        seeds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Player for cube instances.
        #[arg(long, default_value = "m2m")]
        algo: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Play a subspace instance through the dimension reduction.
    Reduce {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        algo: AlgoArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a randomized property suite.
    Check {
        /// structure, amortized, gradbound or reduction.
        #[arg(long)]
        suite: String,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

enum Failure {
    Property(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Lib(e.into())
    }
}

fn parse_kind(a: &AlgoArgs) -> Result<ChaserKind, Error> {
    parse_algo(&a.algo, a.norm)
}

fn parse_algo(name: &str, p: f64) -> Result<ChaserKind, Error> {
    match name {
        "m2m" => NormTag::new(p)
            .map(ChaserKind::M2M)
            .ok_or_else(|| Error::InvalidMode(format!("norm exponent must be >= 1, got {p}"))),
        "cm2m" => Ok(ChaserKind::ConstrainedM2M),
        "cobd" => Ok(ChaserKind::Cobd),
        "followmin" => Ok(ChaserKind::FollowMin),
        other => Err(Error::InvalidMode(format!("unknown algorithm `{other}`"))),
    }
}

fn solver(a: &AlgoArgs) -> Result<SolverConfig, Error> {
    let cfg = match a.tol {
        Some(t) => SolverConfig::default().with_tol(t),
        None => SolverConfig::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn load(path: &Path) -> Result<Instance, Error> {
    let mut inst = load_instance(path)?;
    if std::env::var_os(convex_chase::harness::SEED_ENV).is_some() {
        inst.metadata.seed = Some(resolve_seed(0)?);
    }
    Ok(inst)
}

fn summary(kind: ChaserKind, inst: &Instance, run: &Run) -> serde_json::Value {
    json!({
        "algo": kind.name(),
        "dimension": inst.dim(),
        "horizon": inst.len(),
        "total": run.total,
        "movement": run.records.iter().map(|r| r.movement).sum::<f64>(),
        "hit": run.records.iter().map(|r| r.hit).sum::<f64>(),
        "metadata": inst.metadata,
    })
}

fn play<P: OnlinePlayer + ?Sized>(player: &mut P, inst: &Instance, out: Option<&Path>) -> Result<Run, Failure> {
    run_chaser(player, inst).map_err(|e| {
        if let Some(dir) = out {
            // Keep whatever was played before the failure.
            let _ = write_run_csv(dir.join("partial.csv"), &e.partial, None, None);
        }
        Failure::Lib(e.error)
    })
}

fn execute(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Run { instance, algo, out } => {
            let inst = load(&instance)?;
            let kind = parse_kind(&algo)?;
            fs::create_dir_all(&out)?;
            let mut chaser = Chaser::for_instance(kind, &inst, solver(&algo)?)?;
            let run = play(&mut chaser, &inst, Some(&out))?;
            write_run_csv(out.join("run.csv"), &run, None, None)?;
            let s = summary(kind, &inst, &run);
            write_json(out.join("summary.json"), &s)?;
            println!("{}", serde_json::to_string_pretty(&s).unwrap_or_default());
            Ok(())
        }
        Command::Compare { instance, algo, out } => {
            let inst = load(&instance)?;
            let kind = parse_kind(&algo)?;
            let cmp = compare(&inst, kind, &solver(&algo)?)?;
            if let Some(dir) = &out {
                fs::create_dir_all(dir)?;
                let mut y = vec![inst.start.clone()];
                y.extend(cmp.offline.trajectory.iter().cloned());
                let trace = potential_trace(&cmp.run.trajectory, &y)?;
                write_run_csv(dir.join("run.csv"), &cmp.run, Some(&trace), cmp.report.amortized.as_ref())?;
                write_json(dir.join("summary.json"), &cmp.report)?;
            }
            println!("{}", serde_json::to_string_pretty(&cmp.report).unwrap_or_default());
            match &cmp.report.amortized {
                Some(a) if !a.pass => Err(Failure::Property(format!("per-step inequality violated at steps {:?}", a.violations()))),
                _ => Ok(()),
            }
        }
        Command::Sweep { adversary, kappas, seeds, seed, algo, out } => {
            let cfg = SweepConfig {
                adversary: adversary.parse::<SweepAdversary>()?,
                kappas,
                seeds,
                base_seed: resolve_seed(seed)?,
                algo: parse_algo(&algo, 2.0)?,
                solver: SolverConfig::default(),
            };
            let report = run_sweep(&cfg)?;
            fs::create_dir_all(&out)?;
            write_rows_csv(out.join("points.csv"), &report.points)?;
            write_json(out.join("summary.json"), &report)?;
            for s in &report.summaries {
                println!("kappa {:>8}  runs {:>3}  mean ratio {:.6}  std {:.6}", s.kappa, s.runs, s.mean_ratio, s.std_ratio);
            }
            if let Some(fit) = report.fit {
                println!("exponent {:.4}  r2 {:.4}", fit.exponent, fit.r2);
            }
            let flagged: usize = report.points.iter().map(|p| p.flagged).sum();
            if flagged > 0 {
                return Err(Failure::Property(format!("{flagged} adversary steps failed their checks")));
            }
            Ok(())
        }
        Command::Reduce { instance, k, algo, out } => {
            let inst = load(&instance)?;
            let kind = parse_kind(&algo)?;
            let cfg = solver(&algo)?;
            let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(resolve_seed(0)?);
            let check = check_reduction(&inst, k, kind, &cfg, &mut rng)?;
            let mut lifted = LiftedChaser::for_instance(kind, &inst, cfg, k)?;
            let run = play(&mut lifted, &inst, out.as_deref())?;
            let s = json!({
                "algo": kind.name(),
                "k": k,
                "dimension": inst.dim(),
                "reduced_dimension": lifted.state().width(),
                "lifted_cost": check.lifted_cost,
                "reduced_cost": check.reduced_cost,
                "max_distance_from_target": check.off_l,
                "max_isometry_drift": check.drift,
            });
            if let Some(dir) = &out {
                fs::create_dir_all(dir)?;
                write_run_csv(dir.join("run.csv"), &run, None, None)?;
                save_instance(&reduce_instance(&inst, k)?.instance, dir.join("reduced.json"))?;
                write_json(dir.join("summary.json"), &s)?;
            }
            println!("{}", serde_json::to_string_pretty(&s).unwrap_or_default());
            if check.off_l > REDUCTION_TOL
                || check.drift > REDUCTION_TOL
                || (check.lifted_cost - check.reduced_cost).abs() > REDUCTION_COST_TOL
            {
                return Err(Failure::Property("reduction checks failed".into()));
            }
            Ok(())
        }
        Command::Check { suite, trials, seed } => {
            let report = run_suite(suite.parse::<Suite>()?, resolve_seed(seed)?, trials)?;
            println!("{}", serde_json::to_string_pretty(&report).unwrap_or_default());
            if report.passed() {
                Ok(())
            } else {
                Err(Failure::Property(format!("{} of {} trials failed", report.failures, report.trials)))
            }
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NonConvergence { .. }
        | Error::NumericalAmbiguity { .. }
        | Error::RootNotBracketed { .. }
        | Error::NoBracket { .. } => EXIT_NONCONVERGENCE,
        _ => EXIT_IO,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Property(msg)) => {
            eprintln!("property failure: {msg}");
            ExitCode::from(EXIT_PROPERTY)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
