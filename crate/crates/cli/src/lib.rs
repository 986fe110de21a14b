//! Command-line front end for `bpo-core`: instance generation and trace
//! ingestion, the solvers, solver comparison and the benchmark harness.
//!
//! Exit codes: 0 on success, 2 for invalid input, 3 for an infeasible
//! instance.

pub mod args;
pub mod bench;
pub mod commands;
pub mod report;
pub mod runners;

pub use args::Cli;
pub use commands::run;

use bpo_core::BpoError;

pub const EXIT_INVALID: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

/// Process exit code for a failed run.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    let infeasible = err
        .chain()
        .any(|e| matches!(e.downcast_ref::<BpoError>(), Some(BpoError::Infeasible(_))));
    if infeasible {
        EXIT_INFEASIBLE
    } else {
        EXIT_INVALID
    }
}
