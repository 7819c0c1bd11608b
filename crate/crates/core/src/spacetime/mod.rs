//! The all-at-once nonlinear system over `N_t` backward-Euler steps and its
//! block Jacobian.

mod discretization;
mod jacobian;
mod residual;

pub use discretization::{
    step_count, Coupling, Discretization, Forcing, MeshSpec, RawOperators, SchurOperators, SpatialDisc, DEGREES,
};
pub use jacobian::{SlabLinearization, SpaceTimeJacobian};
pub use residual::Lifted;
