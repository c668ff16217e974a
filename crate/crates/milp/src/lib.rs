//! Small deterministic LP/MILP solver used by the dispatch pipeline.
//!
//! The LP core is a bounded-variable revised simplex with a dense LU basis
//! factorization and product-form updates. Integer variables (binaries only)
//! are handled by best-bound branch and bound. Everything is deterministic:
//! ties break on the lowest index, and the worker-thread count changes wall
//! time but never the search tree, the node count, or the answer.

pub mod branch;
pub mod linalg;
pub mod mps;
pub mod problem;
pub mod simplex;

pub use branch::{solve_milp, MilpOptions, MilpSolution, MilpStatus};
pub use mps::{check_imported_solution, read_solution_file, write_mps, ImportReport};
pub use problem::{MilpProblem, Row, RowId, Sense, SolutionCheck, VarId, Variable};
pub use simplex::{solve_lp, LpOptions, LpSolution, LpStatus};

/// Infinity marker for variable bounds.
pub const INF: f64 = f64::INFINITY;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("numerical failure in simplex: {0}")]
    Numerical(String),
    #[error("simplex iteration limit exceeded ({0} iterations)")]
    IterationLimit(usize),
    #[error("solution import: {0}")]
    SolutionImport(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
