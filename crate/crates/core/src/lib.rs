//! All-at-once space-time Newton-Krylov solver for 2D incompressible
//! resistive MHD in velocity, pressure, current and vector-potential form.

pub mod error;
pub mod fem;
pub mod linalg;
pub mod mesh;
pub mod problems;
pub mod precond;
pub mod solver;
pub mod spacetime;
pub mod verify;

pub use error::{Error, Result};
