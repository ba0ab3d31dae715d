//! Experiment plumbing: instance files, potentials and amortized checks,
//! ratios against offline solutions, sweeps, property suites and output.

mod analysis;
mod generate;
mod io;
mod output;
mod suites;
mod sweep;

pub use analysis::{
    amortized_check, bound_for, compare, competitive_ratio, potential_trace, run_costs, scaling_fit, step_costs,
    AmortizedReport, BoundKind, Comparison, PotentialTrace, RatioReport, ScalingFit, AMORTIZED_TOL, GRID_POINTS,
    RATIO_SEMANTICS,
};
pub use generate::{
    random_feasible_trajectory, random_orthogonal, random_powernorm_instance, random_quadratic,
    random_quadratic_instance, random_spd, random_subspace, random_subspace_instance, RandomDomain,
};
pub use io::{instance_from_json, instance_to_json, load_instance, save_instance};
pub use output::{write_json, write_rows_csv, write_run_csv};
pub use suites::{
    amortized_reports, check_reduction, run_suite, ReductionCheck, Suite, SuiteReport, GRADBOUND_SLACK,
    REDUCTION_COST_TOL, REDUCTION_TOL, STRUCTURE_SLACK,
};
pub use sweep::{run_sweep, SweepAdversary, SweepConfig, SweepPoint, SweepReport, SweepSummary};

/// Environment variable that overrides every seed.
pub const SEED_ENV: &str = "CHASE_SEED";

/// `CHASE_SEED` when set, otherwise `default`.
pub fn resolve_seed(default: u64) -> crate::Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s.trim().parse().map_err(|_| crate::Error::Schema {
            path: SEED_ENV.to_string(),
            message: format!("`{s}` is not an unsigned integer"),
        }),
        Err(_) => Ok(default),
    }
}
