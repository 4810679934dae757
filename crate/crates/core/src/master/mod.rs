//! Master problems, solver backends and the Benders driver.
//!
//! Three formulations are available: the direct model with a packing
//! variable per fitting pair, the master over boxes and cartons with cuts
//! in `y`, and the master over cartons alone with cuts in `z`.

mod benders;
mod builtin;
mod external;
mod model;
mod mps;

pub use benders::{
    benders_loop, greedy_selection, solve_direct, BendersConfig, BendersResult, Instance, IterationRecord, Mode,
    Termination,
};
pub use builtin::{binomial, BuiltinSolver, DEFAULT_ENUMERATION_CAP};
pub use external::{parse_solution, ExternalSolver};
pub use model::{
    build_direct, build_master_x, build_master_xy, Constraint, MipModel, ModelStats, Sense, Shape, VarRole, Variable,
    TAG_AVAILABLE, TAG_BOX_REQUIRES_CARTON, TAG_CARTON_IMPLIES_BOXES, TAG_FIXED_BOXES, TAG_LIMITED_CARTONS,
    TAG_OPTIMALITY_CUT, TAG_SHIPPABLE,
};
pub use mps::write_mps;

use serde::Serialize;

use crate::error::Result;

pub const DEFAULT_DIRECT_CAP: u64 = 100_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MasterConfig {
    /// Number of cartons to select, `M`.
    pub cartons: usize,
    /// Boxes that must be producible.
    pub fixed_boxes: Vec<usize>,
    /// Largest `P * B` accepted by the direct model.
    pub direct_cap: u64,
}

impl Default for MasterConfig {
    fn default() -> Self {
        MasterConfig {
            cartons: 1,
            fixed_boxes: Vec::new(),
            direct_cap: DEFAULT_DIRECT_CAP,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Optimal,
    Infeasible,
    /// Stopped early; `values` hold the best assignment found, if any.
    Limit,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MipSolution {
    pub status: Status,
    pub objective: Option<i64>,
    /// One value per model variable; empty without a solution.
    pub values: Vec<i64>,
}

#[derive(Clone, Debug)]
pub enum Backend {
    Builtin(BuiltinSolver),
    External(ExternalSolver),
}

impl Default for Backend {
    fn default() -> Self {
        Backend::Builtin(BuiltinSolver::default())
    }
}

impl Backend {
    pub fn solve(&self, m: &MipModel) -> Result<MipSolution> {
        match self {
            Backend::Builtin(s) => s.solve(m),
            Backend::External(s) => s.solve(m),
        }
    }
}

/// Solves `m` with the chosen backend.
pub fn solve_mip(m: &MipModel, backend: &Backend) -> Result<MipSolution> {
    backend.solve(m)
}
