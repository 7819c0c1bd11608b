//! Boundary conditions as per-DOF constraints.
//!
//! Dirichlet data and slip conditions are both expressed as fixed values on
//! a subset of DOFs. Slip on an axis-aligned side fixes the normal velocity
//! component to zero; on scalar fields it is the natural condition.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use super::space::FeSpace;
use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;
use crate::mesh::Side;

pub type ScalarFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Condition {
    Natural,
    /// Zero normal velocity, free tangential component.
    Slip,
    Dirichlet(ScalarFn),
}

impl fmt::Debug for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::Natural => write!(f, "Natural"),
            Condition::Slip => write!(f, "Slip"),
            Condition::Dirichlet(_) => write!(f, "Dirichlet(..)"),
        }
    }
}

impl Condition {
    pub fn kind(&self) -> &'static str {
        match self {
            Condition::Natural => "natural",
            Condition::Slip => "slip",
            Condition::Dirichlet(_) => "dirichlet",
        }
    }
}

/// One condition per side for a single field.
#[derive(Clone, Debug)]
pub struct FieldBcs {
    sides: BTreeMap<Side, Condition>,
}

impl Default for FieldBcs {
    fn default() -> Self {
        Self::natural()
    }
}

impl FieldBcs {
    pub fn natural() -> Self {
        Self {
            sides: Side::ALL.iter().map(|&s| (s, Condition::Natural)).collect(),
        }
    }

    pub fn with(mut self, side: Side, cond: Condition) -> Self {
        self.sides.insert(side, cond);
        self
    }

    /// Builds from tag names; unknown tags are a configuration error.
    pub fn from_tags(pairs: &[(&str, Condition)]) -> Result<Self> {
        let mut out = Self::natural();
        for (tag, cond) in pairs {
            out.sides.insert(tag.parse()?, cond.clone());
        }
        Ok(out)
    }

    pub fn get(&self, side: Side) -> &Condition {
        &self.sides[&side]
    }
}

/// Fixed values on a subset of DOFs.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraints {
    mask: Vec<bool>,
    values: Vec<f64>,
}

impl Constraints {
    pub fn none(n: usize) -> Self {
        Self {
            mask: vec![false; n],
            values: vec![0.0; n],
        }
    }

    pub fn build(space: &FeSpace, bcs: &FieldBcs) -> Result<Self> {
        let mut out = Self::none(space.dof_count());
        for side in Side::ALL {
            match bcs.get(side) {
                Condition::Natural => {}
                Condition::Slip => {
                    if space.components() == 2 {
                        for d in space.boundary_dofs(side, side.normal_axis()) {
                            out.fix(d, 0.0);
                        }
                    }
                }
                Condition::Dirichlet(g) => {
                    if space.components() != 1 {
                        return Err(Error::config(format!(
                            "Dirichlet data on {} is only supported for scalar fields",
                            side.name()
                        )));
                    }
                    for n in space.boundary_nodes(side) {
                        let [x, y] = space.node_coord(n);
                        out.fix(n, g(x, y));
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn fix(&mut self, dof: usize, value: f64) {
        self.mask[dof] = true;
        self.values[dof] = value;
    }

    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_fixed(&self, dof: usize) -> bool {
        self.mask[dof]
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn fixed_dofs(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i)
    }

    /// Overwrites constrained entries with their prescribed values.
    pub fn lift(&self, x: &mut [f64]) {
        for i in self.fixed_dofs() {
            x[i] = self.values[i];
        }
    }

    /// Zeros constrained entries.
    pub fn zero(&self, x: &mut [f64]) {
        for i in self.fixed_dofs() {
            x[i] = 0.0;
        }
    }

    /// Constrained rows and columns replaced by the identity.
    pub fn apply_matrix(&self, a: &CsrMatrix) -> CsrMatrix {
        a.constrained(Some(&self.mask), Some(&self.mask), Some(1.0))
    }

    /// Constrained rows and columns removed (zeroed), e.g. for time-coupling
    /// blocks.
    pub fn strip_matrix(&self, a: &CsrMatrix) -> CsrMatrix {
        a.constrained(Some(&self.mask), Some(&self.mask), None)
    }

    /// Symmetric elimination of `A x = b`: constrained columns are moved to
    /// the right-hand side and constrained rows become `x_i = g_i`.
    pub fn apply_system(&self, a: &CsrMatrix, b: &[f64]) -> (CsrMatrix, Vec<f64>) {
        let mut g = vec![0.0; self.len()];
        self.lift(&mut g);
        let mut rhs = b.to_vec();
        a.mul_vec_add(-1.0, &g, &mut rhs);
        self.lift(&mut rhs);
        (self.apply_matrix(a), rhs)
    }
}
