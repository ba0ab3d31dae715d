//! Convex function chasing: online algorithms, lower-bound adversaries, and
//! the tooling to measure them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adversaries;
pub mod chasers;
pub mod error;
pub mod functions;
pub mod geometry;
pub mod harness;
pub mod instance;
pub mod reduction;
pub mod solvers;

pub use chasers::{run_chaser, Chaser, ChaserKind, OnlinePlayer, Run};
pub use error::{Error, Result};
pub use functions::ConvexFunction;
pub use geometry::{FeasibleSet, NormTag, Point};
pub use instance::{Instance, Metadata};
pub use solvers::SolverConfig;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/instances.md")]
    mod instances {}
    #[doc = include_str!("../../../book/src/chasers.md")]
    mod chasers {}
    #[doc = include_str!("../../../book/src/offline.md")]
    mod offline {}
    #[doc = include_str!("../../../book/src/amortized.md")]
    mod amortized {}
    #[doc = include_str!("../../../book/src/adversaries.md")]
    mod adversaries {}
    #[doc = include_str!("../../../book/src/reduction.md")]
    mod reduction {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
