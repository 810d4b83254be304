//! Exact Lindblad master-equation propagation on small truncated Fock
//! spaces, used to verify the models' pre-factorization equations of motion
//! as operator identities and to benchmark mean-field trajectories at small
//! atom number.

mod fock;
mod lindblad;
mod systems;

pub use fock::{DensityMatrix, FockSpace, Mode, OpKind, Operator, Statistics, DEFAULT_DIM_CAP};
pub use lindblad::{check_eom_identity, evolve, liouvillian, LindbladSystem, SparseOp};
pub use systems::{
    build_bb_system, build_bf_system, build_fb_system, collision_commutator_residual,
    conservation_drift, identity_battery, IdentityReport,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("unknown mode label {0}")]
    UnknownMode(String),
    #[error("bosonic truncation too small: need at least {required}, got {got}")]
    TruncationTooSmall { required: usize, got: usize },
    #[error("space dimension {total_dim} exceeds the cap {cap}")]
    CapExceeded { total_dim: usize, cap: usize },
    #[error("operator dimensions do not match the system's space")]
    DimensionMismatch,
    #[error("non-physical state at t = {t}: min eigenvalue {min_eigenvalue:.3e}")]
    NonPhysicalState { t: f64, min_eigenvalue: f64 },
    #[error("invalid state: {0}")]
    InvalidState(String),
}
