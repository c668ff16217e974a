//! Frequency-aware real-time dispatch for grids with inverter-based resources.
//!
//! The crate is organized around one modeling chain: reduced-order frequency
//! dynamics with closed-form step responses (`freq`), ReLU-network surrogates
//! of the nonlinear frequency metrics together with their exact mixed-integer
//! encodings (`surrogate`), interval dispatch models that schedule generation,
//! reserves, and inverter virtual inertia (`dispatch`), and a time-domain
//! simulator with violation accounting (`sim`). `casedata` carries the
//! built-in study system, and `pipeline` wires the chain end to end.

pub mod casedata;
pub mod dispatch;
pub mod freq;
pub mod pipeline;
pub mod sim;
pub mod surrogate;
pub mod util;

/// Unified error type for the modeling chain.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid or inconsistent physical parameters.
    #[error("{0}")]
    Params(String),
    /// A closed form does not cover the requested regime.
    #[error("{0}")]
    Unsupported(String),
    /// Numerical failure: diverged integration, non-finite training loss.
    #[error("{0}")]
    Numerics(String),
    /// Input outside a trained or tabulated domain.
    #[error("{0}")]
    Domain(String),
    /// Infeasible or structurally invalid scheduling model.
    #[error("{0}")]
    Dispatch(String),
    #[error(transparent)]
    Milp(#[from] visched_milp::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
