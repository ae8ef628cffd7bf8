//! Truncated-lattice laboratory for the periodic Benjamin-Ono equation: Lax matrix,
//! resolvent gauge, spectral measure and energy, intertwining operator and the
//! regularized commuting flows.

pub mod error;
pub mod field;
pub mod flows;
pub mod intertwine;
pub mod lax;
pub mod linalg;
pub mod par;
pub mod series;
pub mod snapshot;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
pub use field::{Field, LatticeSpec, PositiveField};
pub use flows::{FlowConfig, FlowKind};
