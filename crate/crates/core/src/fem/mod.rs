//! Lagrange finite elements on structured triangulations.

pub mod assembly;
pub mod basis;
pub mod bc;
pub mod quadrature;
pub mod space;

pub use bc::{Condition, Constraints, FieldBcs, ScalarFn};
pub use space::{ElementData, ElementMap, FeSpace};
