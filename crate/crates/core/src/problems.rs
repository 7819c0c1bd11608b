//! Tearing-mode and island-coalescence test cases.
//!
//! Both start from a quiet flow and a magnetic equilibrium sustained by an
//! external electric field, with the pressure balancing the Lorentz force
//! `j∇A`. The potential at `t = 0` carries a small perturbation.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::{Condition, FieldBcs};
use crate::linalg::Field;
use crate::mesh::Side;
use crate::spacetime::Discretization;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ProblemKind {
    TearingMode,
    IslandCoalescence,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 2] = [ProblemKind::TearingMode, ProblemKind::IslandCoalescence];

    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::TearingMode => "tearing",
            ProblemKind::IslandCoalescence => "island",
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "1" | "tearing" | "tearing-mode" => Ok(ProblemKind::TearingMode),
            "2" | "island" | "island-coalescence" => Ok(ProblemKind::IslandCoalescence),
            other => Err(Error::config(format!("unknown problem '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Problem {
    pub kind: ProblemKind,
    /// Viscosity.
    pub mu: f64,
    /// Resistivity.
    pub eta: f64,
    /// Magnetic permeability.
    pub mu0: f64,
    /// Perturbation amplitude of the initial potential.
    pub epsilon: f64,
    /// Sheet sharpness (tearing mode).
    pub lambda: f64,
    /// Domain length in x (tearing mode).
    pub length: f64,
    /// Island amplitude (island coalescence).
    pub beta: f64,
}

impl Problem {
    pub fn tearing_mode() -> Self {
        Self {
            kind: ProblemKind::TearingMode,
            mu: 1.0,
            eta: 1.0,
            mu0: 1.0,
            epsilon: 1e-3,
            lambda: 5.0,
            length: 3.0,
            beta: 0.0,
        }
    }

    pub fn island_coalescence() -> Self {
        Self {
            kind: ProblemKind::IslandCoalescence,
            mu: 1.0,
            eta: 1.0,
            mu0: 1.0,
            epsilon: 1e-3,
            lambda: 0.0,
            length: 1.0,
            beta: 0.2,
        }
    }

    pub fn new(kind: ProblemKind) -> Self {
        match kind {
            ProblemKind::TearingMode => Self::tearing_mode(),
            ProblemKind::IslandCoalescence => Self::island_coalescence(),
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    /// `(x0, x1, y0, y1)`
    pub fn domain(&self) -> (f64, f64, f64, f64) {
        match self.kind {
            ProblemKind::TearingMode => (0.0, self.length, 0.0, 0.5),
            ProblemKind::IslandCoalescence => (0.0, 1.0, 0.0, 1.0),
        }
    }

    fn ic_denominator(&self, x: f64, y: f64) -> f64 {
        (2.0 * PI * y).cosh() + self.beta * (2.0 * PI * x).cos()
    }

    /// Equilibrium vector potential.
    pub fn a_eq(&self, x: f64, y: f64) -> f64 {
        match self.kind {
            ProblemKind::TearingMode => (self.lambda * y).cosh().ln() / self.lambda,
            ProblemKind::IslandCoalescence => self.ic_denominator(x, y).ln() / (2.0 * PI),
        }
    }

    pub fn a_eq_grad(&self, x: f64, y: f64) -> [f64; 2] {
        match self.kind {
            ProblemKind::TearingMode => [0.0, (self.lambda * y).tanh()],
            ProblemKind::IslandCoalescence => {
                let c = self.ic_denominator(x, y);
                [
                    -self.beta * (2.0 * PI * x).sin() / c,
                    (2.0 * PI * y).sinh() / c,
                ]
            }
        }
    }

    pub fn a_eq_laplacian(&self, x: f64, y: f64) -> f64 {
        match self.kind {
            ProblemKind::TearingMode => self.lambda / (self.lambda * y).cosh().powi(2),
            ProblemKind::IslandCoalescence => {
                2.0 * PI * (1.0 - self.beta * self.beta) / self.ic_denominator(x, y).powi(2)
            }
        }
    }

    /// Equilibrium current `∇²A/μ0`.
    pub fn j_eq(&self, x: f64, y: f64) -> f64 {
        self.a_eq_laplacian(x, y) / self.mu0
    }

    /// Sustaining electric field `(η/μ0)∇²A`.
    pub fn e_eq(&self, x: f64, y: f64) -> f64 {
        self.eta / self.mu0 * self.a_eq_laplacian(x, y)
    }

    /// Equilibrium pressure before removing its mean.
    pub fn p_eq_raw(&self, x: f64, y: f64) -> f64 {
        match self.kind {
            ProblemKind::TearingMode => 0.5 / self.mu0 / (self.lambda * y).cosh().powi(2),
            ProblemKind::IslandCoalescence => {
                0.5 / self.mu0 * (1.0 - self.beta * self.beta) / self.ic_denominator(x, y).powi(2)
            }
        }
    }

    pub fn perturbation(&self, x: f64, y: f64) -> f64 {
        match self.kind {
            ProblemKind::TearingMode => {
                -self.epsilon * (PI * y).cos() * (2.0 * PI * x / self.length).cos()
            }
            ProblemKind::IslandCoalescence => self.epsilon * (0.5 * PI * y).cos() * (PI * x).cos(),
        }
    }

    /// Potential at `t = 0`.
    pub fn a_initial(&self, x: f64, y: f64) -> f64 {
        self.a_eq(x, y) + self.perturbation(x, y)
    }

    /// Side carrying the Dirichlet potential and slip velocity; the other
    /// three sides are symmetry planes.
    pub fn dirichlet_side(&self) -> Side {
        Side::Top
    }

    pub fn bcs(&self, field: Field) -> FieldBcs {
        match field {
            Field::U => Side::ALL
                .iter()
                .fold(FieldBcs::natural(), |b, &s| b.with(s, Condition::Slip)),
            Field::P | Field::J => FieldBcs::natural(),
            Field::A => {
                let p = *self;
                FieldBcs::natural().with(
                    self.dirichlet_side(),
                    Condition::Dirichlet(Arc::new(move |x, y| p.a_eq(x, y))),
                )
            }
        }
    }
}

/// Newton starting point: the interpolated equilibrium in every slab with
/// the current solved from its own equation. The perturbation enters only
/// through the initial condition carried by `disc`.
pub fn initial_state(disc: &Discretization) -> Vec<f64> {
    disc.initial_guess()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tearing_values_on_axis() {
        let p = Problem::tearing_mode();
        assert_eq!(p.a_eq(1.3, 0.0), 0.0);
        assert!((p.e_eq(0.7, 0.0) - 5.0).abs() < 1e-15);
    }

    #[test]
    fn island_values_at_origin() {
        let p = Problem::island_coalescence();
        assert!((p.a_eq(0.0, 0.0) - 1.2f64.ln() / (2.0 * PI)).abs() < 1e-15);
        assert!((p.e_eq(0.0, 0.0) - 4.0 * PI / 3.0).abs() < 1e-13);
    }

    #[test]
    fn perturbation_vanishes_on_dirichlet_side() {
        for p in [Problem::tearing_mode(), Problem::island_coalescence()] {
            let (x0, x1, _, y1) = p.domain();
            for i in 0..=10 {
                let x = x0 + (x1 - x0) * i as f64 / 10.0;
                assert!(p.perturbation(x, y1).abs() < 1e-18);
            }
        }
    }

    #[test]
    fn parse_names() {
        assert_eq!("tearing".parse::<ProblemKind>().unwrap(), ProblemKind::TearingMode);
        assert_eq!("island_coalescence".parse::<ProblemKind>().unwrap(), ProblemKind::IslandCoalescence);
        assert!("kelvin".parse::<ProblemKind>().is_err());
    }
}
