//! Comparison solvers: projected subgradient, entropic mirror descent and
//! budgeted influence maximization under an independent-cascade model.

pub mod bim;
pub mod descent;
pub mod ic;
pub mod projection;

pub use bim::{seed_cost, solve_bim_celf, SeedSet};
pub use descent::{
    mirror_descent, projected_subgradient, solve_mirror_descent, solve_projected_subgradient,
    DescentConfig, MD_STEP_SCALE,
};
pub use ic::{edge_probability, ic_spread, Digraph, IcModel};
pub use projection::{project, project_onto_feasible};
