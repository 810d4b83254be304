//! Collective decay models for radioactive atomic condensates.
//!
//! Three mean-field decay channels are implemented as closed ODE systems,
//! together with an exact Lindblad master-equation oracle on small truncated
//! Fock spaces:
//!
//! - [`bb`] — bosonic atoms decaying into a bosonic daughter species
//!   (logistic avalanche, with and without contact interactions),
//! - [`bf`] — bosonic atoms decaying into a fermionic level ladder
//!   (Pauli blocking, downward thermalization),
//! - [`fb`] — a fermion-pair condensate decaying into two bosonic quanta
//!   (cubic, explosively cooperative growth),
//! - [`oracle`] — dense density-matrix propagation and operator-identity
//!   checks that validate the models' pre-factorization equations of motion.
//!
//! Units: ħ = 1 throughout. All couplings and rates share one energy unit,
//! time is its inverse.

pub mod bb;
pub mod bf;
pub mod fb;
pub mod figures;
pub mod ode;
pub mod oracle;
pub mod scenario;
pub mod sweep;
pub mod trajectory;

pub use trajectory::Trajectory;

/// Crate version, recorded in trajectory metadata.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
