//! Assembly of the linear operators, nonlinear residual terms and their
//! linearizations.
//!
//! Vector spaces are component-blocked, so a velocity test function is
//! `φ_m e_c` with global DOF `c·n_nodes + m`.

use super::space::FeSpace;
use super::basis::LagrangeBasis;
use super::quadrature::gauss_legendre;
use crate::linalg::CsrMatrix;
use crate::mesh::Side;

type Triplets = Vec<(usize, usize, f64)>;

fn finish(nrows: usize, ncols: usize, t: Triplets) -> CsrMatrix {
    CsrMatrix::from_triplets(nrows, ncols, &t)
}

/// Dense element matrix scattered into global triplets once per element.
struct Local {
    rows: Vec<usize>,
    cols: Vec<usize>,
    data: Vec<f64>,
}

impl Local {
    fn new(rows: Vec<usize>, cols: Vec<usize>) -> Self {
        let data = vec![0.0; rows.len() * cols.len()];
        Self { rows, cols, data }
    }

    #[inline]
    fn add(&mut self, a: usize, b: usize, v: f64) {
        self.data[a * self.cols.len() + b] += v;
    }

    fn scatter(&self, trip: &mut Triplets) {
        let nc = self.cols.len();
        for (a, &r) in self.rows.iter().enumerate() {
            for (b, &c) in self.cols.iter().enumerate() {
                trip.push((r, c, self.data[a * nc + b]));
            }
        }
    }
}

fn scalar_only(s: &FeSpace, what: &str) {
    assert_eq!(s.components(), 1, "{what} expects a scalar space");
}

fn vector_only(s: &FeSpace, what: &str) {
    assert_eq!(s.components(), 2, "{what} expects a vector space");
}

/// Gram matrix `∫ φ_m φ_n`; block diagonal over components.
pub fn mass(space: &FeSpace) -> CsrMatrix {
    let nn = space.n_nodes();
    let mut trip = Triplets::new();
    for t in 0..space.mesh().n_triangles() {
        let e = space.element(t);
        let nl = e.nodes.len();
        let mut local = vec![0.0; nl * nl];
        for (q, w) in e.weights.iter().enumerate() {
            let phi = &e.values[q];
            for a in 0..nl {
                for b in 0..nl {
                    local[a * nl + b] += w * phi[a] * phi[b];
                }
            }
        }
        for c in 0..space.components() {
            for a in 0..nl {
                for b in 0..nl {
                    trip.push((c * nn + e.nodes[a], c * nn + e.nodes[b], local[a * nl + b]));
                }
            }
        }
    }
    finish(space.dof_count(), space.dof_count(), trip)
}

/// `∫ ∇φ_m · ∇φ_n`; block diagonal over components.
pub fn stiffness(space: &FeSpace) -> CsrMatrix {
    let nn = space.n_nodes();
    let mut trip = Triplets::new();
    for t in 0..space.mesh().n_triangles() {
        let e = space.element(t);
        let nl = e.nodes.len();
        let mut local = vec![0.0; nl * nl];
        for (q, w) in e.weights.iter().enumerate() {
            let g = &e.grads[q];
            for a in 0..nl {
                for b in 0..nl {
                    local[a * nl + b] += w * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
                }
            }
        }
        for c in 0..space.components() {
            for a in 0..nl {
                for b in 0..nl {
                    trip.push((c * nn + e.nodes[a], c * nn + e.nodes[b], local[a * nl + b]));
                }
            }
        }
    }
    finish(space.dof_count(), space.dof_count(), trip)
}

/// Mixed stiffness `∫ ∇ψ_n · ∇χ_m` with test space `test` (rows) and trial
/// space `trial` (columns).
pub fn mixed_stiffness(test: &FeSpace, trial: &FeSpace) -> CsrMatrix {
    scalar_only(test, "mixed_stiffness");
    scalar_only(trial, "mixed_stiffness");
    let mut trip = Triplets::new();
    for t in 0..test.mesh().n_triangles() {
        let (et, es) = (test.element(t), trial.element(t));
        let mut local = Local::new(et.nodes.clone(), es.nodes.clone());
        for (q, w) in et.weights.iter().enumerate() {
            for (a, ga) in et.grads[q].iter().enumerate() {
                for (b, gb) in es.grads[q].iter().enumerate() {
                    local.add(a, b, w * (ga[0] * gb[0] + ga[1] * gb[1]));
                }
            }
        }
        local.scatter(&mut trip);
    }
    finish(test.dof_count(), trial.dof_count(), trip)
}

/// Negative divergence `B[m, (c,n)] = −∫ q_m ∂_c φ_n`.
pub fn divergence(vel: &FeSpace, prs: &FeSpace) -> CsrMatrix {
    vector_only(vel, "divergence");
    scalar_only(prs, "divergence");
    let mut trip = Triplets::new();
    for t in 0..vel.mesh().n_triangles() {
        let (ev, ep) = (vel.element(t), prs.element(t));
        let nl = ev.nodes.len();
        let mut local = Local::new(ep.nodes.clone(), vel.element_dofs(t));
        for (q, w) in ev.weights.iter().enumerate() {
            for (a, qa) in ep.values[q].iter().enumerate() {
                for (b, gb) in ev.grads[q].iter().enumerate() {
                    for c in 0..2 {
                        local.add(a, c * nl + b, -w * qa * gb[c]);
                    }
                }
            }
        }
        local.scatter(&mut trip);
    }
    finish(prs.dof_count(), vel.dof_count(), trip)
}

/// Convective term `∫ ((u·∇)u)·φ` and its Newton linearization.
#[derive(Clone, Debug)]
pub struct AdvectionU {
    pub residual: Vec<f64>,
    /// `W[(c,m),(c,n)] = ∫ (u·∇φ_n) φ_m`
    pub transport: CsrMatrix,
    /// `ΔW[(c,m),(d,n)] = ∫ φ_n ∂_d u_c φ_m`
    pub newton: CsrMatrix,
}

impl AdvectionU {
    pub fn linearization(&self) -> CsrMatrix {
        self.transport.add(1.0, &self.newton, 1.0)
    }
}

pub fn advection_u(vel: &FeSpace, u: &[f64]) -> AdvectionU {
    vector_only(vel, "advection_u");
    let nn = vel.n_nodes();
    let (ux, uy) = u.split_at(nn);
    let n = vel.dof_count();
    let mut residual = vec![0.0; n];
    let mut tw = Triplets::new();
    let mut tn = Triplets::new();
    for t in 0..vel.mesh().n_triangles() {
        let e = vel.element(t);
        let nl = e.nodes.len();
        let dofs = vel.element_dofs(t);
        let mut lw = Local::new(e.nodes.clone(), e.nodes.clone());
        let mut ln = Local::new(dofs.clone(), dofs);
        let (vx, vy) = (e.field(ux), e.field(uy));
        let (gx, gy) = (e.field_grad(ux), e.field_grad(uy));
        for (q, w) in e.weights.iter().enumerate() {
            let vel_q = [vx[q], vy[q]];
            let grad_u = [gx[q], gy[q]];
            let phi = &e.values[q];
            let g = &e.grads[q];
            for (a, &pa) in phi.iter().enumerate() {
                for c in 0..2 {
                    let conv = vel_q[0] * grad_u[c][0] + vel_q[1] * grad_u[c][1];
                    residual[c * nn + e.nodes[a]] += w * conv * pa;
                }
                for (b, &pb) in phi.iter().enumerate() {
                    lw.add(a, b, w * (vel_q[0] * g[b][0] + vel_q[1] * g[b][1]) * pa);
                    let wab = w * pb * pa;
                    for c in 0..2 {
                        for d in 0..2 {
                            ln.add(c * nl + a, d * nl + b, wab * grad_u[c][d]);
                        }
                    }
                }
            }
        }
        for c in 0..2 {
            let shift = |v: &[usize]| v.iter().map(|n| c * nn + n).collect::<Vec<_>>();
            let block = Local {
                rows: shift(&lw.rows),
                cols: shift(&lw.cols),
                data: lw.data.clone(),
            };
            block.scatter(&mut tw);
        }
        ln.scatter(&mut tn);
    }
    AdvectionU {
        residual,
        transport: finish(n, n, tw),
        newton: finish(n, n, tn),
    }
}

/// Lorentz force `∫ j ∇A · φ` and its partial linearizations.
#[derive(Clone, Debug)]
pub struct Lorentz {
    pub residual: Vec<f64>,
    /// Derivative in `j`: `∫ χ_n ∂_c A φ_m`.
    pub z_j: CsrMatrix,
    /// Derivative in `A`: `∫ j ∂_c ψ_n φ_m`.
    pub z_a: CsrMatrix,
}

pub fn lorentz(vel: &FeSpace, cur: &FeSpace, pot: &FeSpace, j: &[f64], a: &[f64]) -> Lorentz {
    vector_only(vel, "lorentz");
    scalar_only(cur, "lorentz");
    scalar_only(pot, "lorentz");
    let nn = vel.n_nodes();
    let mut residual = vec![0.0; vel.dof_count()];
    let mut tj = Triplets::new();
    let mut ta = Triplets::new();
    for t in 0..vel.mesh().n_triangles() {
        let (ev, ej, ea) = (vel.element(t), cur.element(t), pot.element(t));
        let nl = ev.nodes.len();
        let dofs = vel.element_dofs(t);
        let mut lj = Local::new(dofs.clone(), ej.nodes.clone());
        let mut la = Local::new(dofs, ea.nodes.clone());
        let jq = ej.field(j);
        let ga = ea.field_grad(a);
        for (q, w) in ev.weights.iter().enumerate() {
            for (m, &pm) in ev.values[q].iter().enumerate() {
                for c in 0..2 {
                    let wm = w * pm;
                    residual[c * nn + ev.nodes[m]] += wm * jq[q] * ga[q][c];
                    for (n, &xn) in ej.values[q].iter().enumerate() {
                        lj.add(c * nl + m, n, wm * xn * ga[q][c]);
                    }
                    for (n, gn) in ea.grads[q].iter().enumerate() {
                        la.add(c * nl + m, n, wm * jq[q] * gn[c]);
                    }
                }
            }
        }
        lj.scatter(&mut tj);
        la.scatter(&mut ta);
    }
    Lorentz {
        residual,
        z_j: finish(vel.dof_count(), cur.dof_count(), tj),
        z_a: finish(vel.dof_count(), pot.dof_count(), ta),
    }
}

/// Potential transport `∫ (u·∇A) ψ` and its partial linearizations.
#[derive(Clone, Debug)]
pub struct AdvectionA {
    pub residual: Vec<f64>,
    /// Derivative in `A`: `∫ (u·∇ψ_n) ψ_m`.
    pub f_adv: CsrMatrix,
    /// Derivative in `u`: `Y[m,(d,n)] = ∫ φ_n ∂_d A ψ_m`.
    pub y: CsrMatrix,
}

pub fn advection_a(pot: &FeSpace, vel: &FeSpace, u: &[f64], a: &[f64]) -> AdvectionA {
    scalar_only(pot, "advection_a");
    vector_only(vel, "advection_a");
    let nn = vel.n_nodes();
    let (ux, uy) = u.split_at(nn);
    let mut residual = vec![0.0; pot.dof_count()];
    let mut tf = Triplets::new();
    let mut ty = Triplets::new();
    for t in 0..pot.mesh().n_triangles() {
        let (ea, ev) = (pot.element(t), vel.element(t));
        let nl = ev.nodes.len();
        let mut lf = Local::new(ea.nodes.clone(), ea.nodes.clone());
        let mut ly = Local::new(ea.nodes.clone(), vel.element_dofs(t));
        let (vx, vy) = (ev.field(ux), ev.field(uy));
        let ga = ea.field_grad(a);
        for (q, w) in ea.weights.iter().enumerate() {
            for (m, &pm) in ea.values[q].iter().enumerate() {
                let wm = w * pm;
                residual[ea.nodes[m]] += wm * (vx[q] * ga[q][0] + vy[q] * ga[q][1]);
                for (n, gn) in ea.grads[q].iter().enumerate() {
                    lf.add(m, n, wm * (vx[q] * gn[0] + vy[q] * gn[1]));
                }
                for (n, &phin) in ev.values[q].iter().enumerate() {
                    for d in 0..2 {
                        ly.add(m, d * nl + n, wm * phin * ga[q][d]);
                    }
                }
            }
        }
        lf.scatter(&mut tf);
        ly.scatter(&mut ty);
    }
    AdvectionA {
        residual,
        f_adv: finish(pot.dof_count(), pot.dof_count(), tf),
        y: finish(pot.dof_count(), vel.dof_count(), ty),
    }
}

/// `∫ ((u·∇)u)·φ` without building the linearization.
pub fn advection_u_residual(vel: &FeSpace, u: &[f64]) -> Vec<f64> {
    vector_only(vel, "advection_u_residual");
    let nn = vel.n_nodes();
    let (ux, uy) = u.split_at(nn);
    let mut out = vec![0.0; vel.dof_count()];
    for t in 0..vel.mesh().n_triangles() {
        let e = vel.element(t);
        let (vx, vy) = (e.field(ux), e.field(uy));
        let (gx, gy) = (e.field_grad(ux), e.field_grad(uy));
        for (q, w) in e.weights.iter().enumerate() {
            let cx = w * (vx[q] * gx[q][0] + vy[q] * gx[q][1]);
            let cy = w * (vx[q] * gy[q][0] + vy[q] * gy[q][1]);
            for (a, &pa) in e.values[q].iter().enumerate() {
                out[e.nodes[a]] += cx * pa;
                out[nn + e.nodes[a]] += cy * pa;
            }
        }
    }
    out
}

/// `∫ j ∇A · φ` without building the linearizations.
pub fn lorentz_residual(vel: &FeSpace, cur: &FeSpace, pot: &FeSpace, j: &[f64], a: &[f64]) -> Vec<f64> {
    vector_only(vel, "lorentz_residual");
    let nn = vel.n_nodes();
    let mut out = vec![0.0; vel.dof_count()];
    for t in 0..vel.mesh().n_triangles() {
        let (ev, ej, ea) = (vel.element(t), cur.element(t), pot.element(t));
        let jq = ej.field(j);
        let ga = ea.field_grad(a);
        for (q, w) in ev.weights.iter().enumerate() {
            let (fx, fy) = (w * jq[q] * ga[q][0], w * jq[q] * ga[q][1]);
            for (m, &pm) in ev.values[q].iter().enumerate() {
                out[ev.nodes[m]] += fx * pm;
                out[nn + ev.nodes[m]] += fy * pm;
            }
        }
    }
    out
}

/// `∫ (u·∇A) ψ` without building the linearizations.
pub fn advection_a_residual(pot: &FeSpace, vel: &FeSpace, u: &[f64], a: &[f64]) -> Vec<f64> {
    let nn = vel.n_nodes();
    let (ux, uy) = u.split_at(nn);
    let mut out = vec![0.0; pot.dof_count()];
    for t in 0..pot.mesh().n_triangles() {
        let (ea, ev) = (pot.element(t), vel.element(t));
        let (vx, vy) = (ev.field(ux), ev.field(uy));
        let ga = ea.field_grad(a);
        for (q, w) in ea.weights.iter().enumerate() {
            let c = w * (vx[q] * ga[q][0] + vy[q] * ga[q][1]);
            for (m, &pm) in ea.values[q].iter().enumerate() {
                out[ea.nodes[m]] += c * pm;
            }
        }
    }
    out
}

/// Pressure-space advection `∫ (u·∇q_n) q_m` for the convection-diffusion
/// Schur approximation.
pub fn pcd_advection(prs: &FeSpace, vel: &FeSpace, u: &[f64]) -> CsrMatrix {
    scalar_only(prs, "pcd_advection");
    vector_only(vel, "pcd_advection");
    let nn = vel.n_nodes();
    let (ux, uy) = u.split_at(nn);
    let mut trip = Triplets::new();
    for t in 0..prs.mesh().n_triangles() {
        let (ep, ev) = (prs.element(t), vel.element(t));
        let (vx, vy) = (ev.field(ux), ev.field(uy));
        let mut local = Local::new(ep.nodes.clone(), ep.nodes.clone());
        for (q, w) in ep.weights.iter().enumerate() {
            for (m, &qm) in ep.values[q].iter().enumerate() {
                for (n, gn) in ep.grads[q].iter().enumerate() {
                    local.add(m, n, w * (vx[q] * gn[0] + vy[q] * gn[1]) * qm);
                }
            }
        }
        local.scatter(&mut trip);
    }
    finish(prs.dof_count(), prs.dof_count(), trip)
}

/// Load vector `∫ f φ_m` of a scalar space.
pub fn load(space: &FeSpace, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    scalar_only(space, "load");
    let mut out = vec![0.0; space.dof_count()];
    for t in 0..space.mesh().n_triangles() {
        let e = space.element(t);
        for (q, w) in e.weights.iter().enumerate() {
            let fq = f(e.points[q][0], e.points[q][1]);
            for (a, &pa) in e.values[q].iter().enumerate() {
                out[e.nodes[a]] += w * fq * pa;
            }
        }
    }
    out
}

/// Load vector `∫ f·φ_m` of a vector space.
pub fn load_vector(space: &FeSpace, f: impl Fn(f64, f64) -> [f64; 2]) -> Vec<f64> {
    vector_only(space, "load_vector");
    let nn = space.n_nodes();
    let mut out = vec![0.0; space.dof_count()];
    for t in 0..space.mesh().n_triangles() {
        let e = space.element(t);
        for (q, w) in e.weights.iter().enumerate() {
            let fq = f(e.points[q][0], e.points[q][1]);
            for (a, &pa) in e.values[q].iter().enumerate() {
                for c in 0..2 {
                    out[c * nn + e.nodes[a]] += w * fq[c] * pa;
                }
            }
        }
    }
    out
}

/// Boundary load `∫_side g ψ_m ds` of a scalar space.
pub fn boundary_load(space: &FeSpace, side: Side, g: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    scalar_only(space, "boundary_load");
    let mesh = space.mesh();
    let (nx, ny) = (mesh.nx(), mesh.ny());
    let basis: &LagrangeBasis = space.basis();
    let (s, ws) = gauss_legendre(6);
    // (triangle, edge parametrization in reference coordinates)
    let edges: Vec<(usize, bool)> = match side {
        Side::Bottom => (0..nx).map(|i| (2 * i, true)).collect(),
        Side::Top => (0..nx).map(|i| (2 * ((ny - 1) * nx + i) + 1, true)).collect(),
        Side::Left => (0..ny).map(|j| (2 * (j * nx), false)).collect(),
        Side::Right => (0..ny).map(|j| (2 * (j * nx + nx - 1) + 1, false)).collect(),
    };
    let mut out = vec![0.0; space.dof_count()];
    for (t, along_xi) in edges {
        let map = space.element_map(t);
        let len = if along_xi { map.scale[0].abs() } else { map.scale[1].abs() };
        let nodes = space.element_nodes(t);
        for (si, wi) in s.iter().zip(&ws) {
            let r = if along_xi { [*si, 0.0] } else { [0.0, *si] };
            let x = map.to_physical(r);
            let gq = g(x[0], x[1]);
            for (n, v) in nodes.iter().zip(basis.eval(r)) {
                out[*n] += wi * len * gq * v;
            }
        }
    }
    out
}

/// Mean of `∇×(A k̂) = (∂_y A, −∂_x A)` over the domain.
pub fn curl_average(pot: &FeSpace, a: &[f64]) -> [f64; 2] {
    scalar_only(pot, "curl_average");
    let mut acc = [0.0, 0.0];
    for t in 0..pot.mesh().n_triangles() {
        let e = pot.element(t);
        for (w, g) in e.weights.iter().zip(e.field_grad(a)) {
            acc[0] += w * g[1];
            acc[1] -= w * g[0];
        }
    }
    let area = pot.mesh().area();
    [acc[0] / area, acc[1] / area]
}

/// `∫ f` of a scalar finite-element function.
pub fn integral(space: &FeSpace, coef: &[f64]) -> f64 {
    scalar_only(space, "integral");
    (0..space.mesh().n_triangles())
        .map(|t| {
            let e = space.element(t);
            e.weights.iter().zip(e.field(coef)).map(|(w, v)| w * v).sum::<f64>()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::mesh::{build_rect_mesh, Mesh};

    fn unit(n: usize) -> Arc<Mesh> {
        Arc::new(Mesh::structured(0.0, 1.0, 0.0, 1.0, n, n).unwrap())
    }

    #[test]
    fn mass_entries_sum_to_area() {
        for k in 1..=3 {
            let s = FeSpace::scalar(unit(3), k);
            let m = mass(&s);
            let total: f64 = m.data().iter().sum();
            assert!((total - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn stiffness_kills_constants() {
        let s = FeSpace::scalar(unit(2), 3);
        let k = stiffness(&s);
        let y = k.mul_vec(&vec![1.0; s.dof_count()]);
        assert!(y.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn curl_average_of_linear_potential() {
        let mesh = Arc::new(build_rect_mesh(0.0, 3.0, 0.0, 0.5, 0.25).unwrap());
        let s = FeSpace::scalar(mesh, 1);
        let a = s.interpolate(|x, y| 2.0 * y - x);
        let b = curl_average(&s, &a);
        assert!((b[0] - 2.0).abs() < 1e-13 && (b[1] - 1.0).abs() < 1e-13);
    }

    #[test]
    fn boundary_load_measures_side_length() {
        let mesh = Arc::new(build_rect_mesh(0.0, 3.0, 0.0, 0.5, 0.25).unwrap());
        let s = FeSpace::scalar(mesh, 2);
        for (side, len) in [(Side::Top, 3.0), (Side::Bottom, 3.0), (Side::Left, 0.5), (Side::Right, 0.5)] {
            let v = boundary_load(&s, side, |_, _| 1.0);
            assert!((v.iter().sum::<f64>() - len).abs() < 1e-13, "{side:?}");
            let on: std::collections::BTreeSet<_> = s.boundary_nodes(side).into_iter().collect();
            assert!(v.iter().enumerate().all(|(i, x)| on.contains(&i) || *x == 0.0));
        }
    }
}
