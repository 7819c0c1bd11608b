//! Continuous Lagrange spaces on structured triangulations.
//!
//! Pk nodes form a `(k·nx+1) × (k·ny+1)` lattice with spacing `h/k`; node
//! `(i, j)` has index `j·(k·nx+1) + i`. Vector spaces are component-blocked:
//! DOF `c·n_nodes + node`.

use std::sync::Arc;

use super::basis::LagrangeBasis;
use super::quadrature::TriangleRule;
use crate::mesh::{Mesh, Side};

#[derive(Clone, Debug)]
pub struct FeSpace {
    mesh: Arc<Mesh>,
    degree: usize,
    components: usize,
    basis: LagrangeBasis,
    rule: TriangleRule,
    /// Basis values at quadrature points, `values[q][i]`.
    values: Vec<Vec<f64>>,
    /// Reference gradients at quadrature points.
    ref_grads: Vec<Vec<[f64; 2]>>,
}

/// Affine map of one triangle: `x = origin + diag(scale)·ξ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElementMap {
    pub origin: [f64; 2],
    pub scale: [f64; 2],
}

impl ElementMap {
    pub fn to_physical(&self, p: [f64; 2]) -> [f64; 2] {
        [
            self.origin[0] + self.scale[0] * p[0],
            self.origin[1] + self.scale[1] * p[1],
        ]
    }

    pub fn det(&self) -> f64 {
        self.scale[0] * self.scale[1]
    }

    pub fn physical_grad(&self, g: [f64; 2]) -> [f64; 2] {
        [g[0] / self.scale[0], g[1] / self.scale[1]]
    }
}

/// Quadrature data of one element for one space.
pub struct ElementData<'a> {
    /// Local-to-global node map.
    pub nodes: Vec<usize>,
    /// Physical quadrature weights.
    pub weights: Vec<f64>,
    pub points: Vec<[f64; 2]>,
    pub values: &'a [Vec<f64>],
    pub grads: Vec<Vec<[f64; 2]>>,
}

impl ElementData<'_> {
    /// Scalar field values at quadrature points, from node coefficients.
    pub fn field(&self, coef: &[f64]) -> Vec<f64> {
        self.values
            .iter()
            .map(|phi| self.nodes.iter().zip(phi).map(|(&n, p)| coef[n] * p).sum())
            .collect()
    }

    /// Scalar field gradients at quadrature points.
    pub fn field_grad(&self, coef: &[f64]) -> Vec<[f64; 2]> {
        self.grads
            .iter()
            .map(|g| {
                self.nodes.iter().zip(g).fold([0.0, 0.0], |acc, (&n, gi)| {
                    [acc[0] + coef[n] * gi[0], acc[1] + coef[n] * gi[1]]
                })
            })
            .collect()
    }
}

impl FeSpace {
    pub fn new(mesh: Arc<Mesh>, degree: usize, components: usize) -> Self {
        assert!((1..=2).contains(&components), "1 or 2 components supported");
        let basis = LagrangeBasis::new(degree);
        let rule = TriangleRule::standard();
        let values = rule.points.iter().map(|&p| basis.eval(p)).collect();
        let ref_grads = rule.points.iter().map(|&p| basis.grad(p)).collect();
        Self {
            mesh,
            degree,
            components,
            basis,
            rule,
            values,
            ref_grads,
        }
    }

    pub fn scalar(mesh: Arc<Mesh>, degree: usize) -> Self {
        Self::new(mesh, degree, 1)
    }

    pub fn vector(mesh: Arc<Mesh>, degree: usize) -> Self {
        Self::new(mesh, degree, 2)
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn basis(&self) -> &LagrangeBasis {
        &self.basis
    }

    pub fn rule(&self) -> &TriangleRule {
        &self.rule
    }

    /// Lattice dimensions `(k·nx + 1, k·ny + 1)`.
    pub fn lattice_dims(&self) -> (usize, usize) {
        (
            self.degree * self.mesh.nx() + 1,
            self.degree * self.mesh.ny() + 1,
        )
    }

    pub fn n_nodes(&self) -> usize {
        let (a, b) = self.lattice_dims();
        a * b
    }

    pub fn dof_count(&self) -> usize {
        self.components * self.n_nodes()
    }

    pub fn node_index(&self, i: usize, j: usize) -> usize {
        j * self.lattice_dims().0 + i
    }

    pub fn node_coord(&self, n: usize) -> [f64; 2] {
        let (w, h) = self.lattice_dims();
        let (i, j) = (n % w, n / w);
        let (x0, x1, y0, y1) = self.mesh.bounds();
        let fx = if i + 1 == w { x1 } else { x0 + (x1 - x0) * i as f64 / (w - 1) as f64 };
        let fy = if j + 1 == h { y1 } else { y0 + (y1 - y0) * j as f64 / (h - 1) as f64 };
        [fx, fy]
    }

    pub fn element_map(&self, t: usize) -> ElementMap {
        let tri = self.mesh.triangles()[t];
        let v = self.mesh.vertices();
        let (a, b, c) = (v[tri[0]], v[tri[1]], v[tri[2]]);
        ElementMap {
            origin: a,
            scale: [b[0] - a[0], c[1] - a[1]],
        }
    }

    /// Global node of every local basis function of triangle `t`.
    pub fn element_nodes(&self, t: usize) -> Vec<usize> {
        let (ci, cj, half) = self.mesh.cell_of(t);
        let k = self.degree;
        self.basis
            .lattice()
            .iter()
            .map(|&(a, b)| {
                if half == 0 {
                    self.node_index(ci * k + a, cj * k + b)
                } else {
                    self.node_index(ci * k + k - a, cj * k + k - b)
                }
            })
            .collect()
    }

    /// Global DOFs of triangle `t`, component-blocked.
    pub fn element_dofs(&self, t: usize) -> Vec<usize> {
        let nodes = self.element_nodes(t);
        let nn = self.n_nodes();
        (0..self.components)
            .flat_map(|c| nodes.iter().map(move |&n| c * nn + n))
            .collect()
    }

    pub fn element(&self, t: usize) -> ElementData<'_> {
        let map = self.element_map(t);
        let det = map.det();
        ElementData {
            nodes: self.element_nodes(t),
            weights: self.rule.weights.iter().map(|w| w * det).collect(),
            points: self.rule.points.iter().map(|&p| map.to_physical(p)).collect(),
            values: &self.values,
            grads: self
                .ref_grads
                .iter()
                .map(|gs| gs.iter().map(|&g| map.physical_grad(g)).collect())
                .collect(),
        }
    }

    /// Lattice nodes lying on `side`, in increasing index order.
    pub fn boundary_nodes(&self, side: Side) -> Vec<usize> {
        let (w, h) = self.lattice_dims();
        match side {
            Side::Bottom => (0..w).map(|i| self.node_index(i, 0)).collect(),
            Side::Top => (0..w).map(|i| self.node_index(i, h - 1)).collect(),
            Side::Left => (0..h).map(|j| self.node_index(0, j)).collect(),
            Side::Right => (0..h).map(|j| self.node_index(w - 1, j)).collect(),
        }
    }

    /// DOFs of component `comp` on `side`.
    pub fn boundary_dofs(&self, side: Side, comp: usize) -> Vec<usize> {
        assert!(comp < self.components);
        let off = comp * self.n_nodes();
        self.boundary_nodes(side).into_iter().map(|n| off + n).collect()
    }

    /// Nodal interpolant of a scalar function.
    pub fn interpolate(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        assert_eq!(self.components, 1);
        (0..self.n_nodes())
            .map(|n| {
                let [x, y] = self.node_coord(n);
                f(x, y)
            })
            .collect()
    }

    /// Nodal interpolant of a vector function.
    pub fn interpolate_vector(&self, f: impl Fn(f64, f64) -> [f64; 2]) -> Vec<f64> {
        assert_eq!(self.components, 2);
        let nn = self.n_nodes();
        let mut out = vec![0.0; 2 * nn];
        for n in 0..nn {
            let [x, y] = self.node_coord(n);
            let v = f(x, y);
            out[n] = v[0];
            out[nn + n] = v[1];
        }
        out
    }

    /// Triangle containing `p` and its reference coordinates.
    pub fn locate(&self, p: [f64; 2]) -> (usize, [f64; 2]) {
        let (x0, _, y0, _) = self.mesh.bounds();
        let (hx, hy) = self.mesh.spacing();
        let (nx, ny) = (self.mesh.nx(), self.mesh.ny());
        let ci = (((p[0] - x0) / hx).floor().max(0.0) as usize).min(nx - 1);
        let cj = (((p[1] - y0) / hy).floor().max(0.0) as usize).min(ny - 1);
        let lx = (p[0] - x0) / hx - ci as f64;
        let ly = (p[1] - y0) / hy - cj as f64;
        let t = 2 * (cj * nx + ci);
        if lx + ly <= 1.0 {
            (t, [lx, ly])
        } else {
            (t + 1, [1.0 - lx, 1.0 - ly])
        }
    }

    /// Value of a scalar finite-element function at a point.
    pub fn eval(&self, coef: &[f64], p: [f64; 2]) -> f64 {
        let (t, r) = self.locate(p);
        let phi = self.basis.eval(r);
        self.element_nodes(t).iter().zip(phi).map(|(&n, v)| coef[n] * v).sum()
    }
}
