//! Preconditioner oracles: dense exact-Schur factorization, PCD on the
//! velocity-pressure block, degenerate limits and inverse round trips.

mod common;

use nalgebra::{DMatrix, DVector};
use stmhd_core::linalg::{gmres, norm2, CsrMatrix, Field, GmresConfig};
use stmhd_core::precond::{Preconditioner, Variant};
use stmhd_core::problems::{Problem, ProblemKind};
use stmhd_core::spacetime::{Discretization, Forcing, MeshSpec, SpaceTimeJacobian};
use stmhd_core::verify;

use common::to_nalgebra;

fn disc(kind: ProblemKind, cells: (usize, usize), nt: usize) -> Discretization {
    Discretization::new(Problem::new(kind), MeshSpec::Cells(cells.0, cells.1), 0.25, 0.25 * nt as f64, Forcing::Balanced).unwrap()
}

/// Field-major view of a slab-major dense Jacobian.
struct Blocks {
    j: DMatrix<f64>,
    idx: [Vec<usize>; 4],
}

impl Blocks {
    fn new(jac: &SpaceTimeJacobian) -> Self {
        let d = jac.to_dense();
        let n = d.nrows();
        let j = DMatrix::from_fn(n, n, |r, c| d[(r, c)]);
        let lay = &jac.layout;
        let idx = Field::ALL.map(|f| (0..jac.nt()).flat_map(|k| lay.range(k, f)).collect());
        Self { j, idx }
    }

    fn get(&self, r: Field, c: Field) -> DMatrix<f64> {
        let (ri, ci) = (&self.idx[r as usize], &self.idx[c as usize]);
        DMatrix::from_fn(ri.len(), ci.len(), |a, b| self.j[(ri[a], ci[b])])
    }

    fn field_major(&self) -> DMatrix<f64> {
        let order: Vec<usize> = self.idx.iter().flatten().copied().collect();
        DMatrix::from_fn(order.len(), order.len(), |a, b| self.j[(order[a], order[b])])
    }
}

fn stack(rows: Vec<Vec<DMatrix<f64>>>) -> DMatrix<f64> {
    let heights: Vec<usize> = rows.iter().map(|r| r[0].nrows()).collect();
    let widths: Vec<usize> = rows[0].iter().map(|b| b.ncols()).collect();
    let mut m = DMatrix::zeros(heights.iter().sum(), widths.iter().sum());
    let mut r0 = 0;
    for (row, h) in rows.iter().zip(&heights) {
        let mut c0 = 0;
        for (b, w) in row.iter().zip(&widths) {
            m.view_mut((r0, c0), (*h, *w)).copy_from(b);
            c0 += w;
        }
        r0 += h;
    }
    m
}

#[test]
fn exact_schur_factorization() {
    use Field::*;
    let d = disc(ProblemKind::TearingMode, (2, 2), 2);
    let jac = d.jacobian(&verify::perturbed_state(&d, 1e-2, 4));
    let b = Blocks::new(&jac);
    for (r, c) in [(P, J), (P, A), (J, U), (J, P), (A, P), (A, J)] {
        assert_eq!(b.get(r, c).abs().max(), 0.0, "{r:?}{c:?} block must vanish");
    }

    let (fu, bt, zj, za) = (b.get(U, U), b.get(U, P), b.get(U, J), b.get(U, A));
    let (bb, cpp, mj, k) = (b.get(P, U), b.get(P, P), b.get(J, J), b.get(J, A));
    let (y, fa) = (b.get(A, U), b.get(A, A));
    let fu_inv = fu.clone().try_inverse().unwrap();
    let mj_inv = mj.clone().try_inverse().unwrap();
    let s_p = &cpp - &bb * &fu_inv * &bt;
    let s_a = &fa - &y * &fu_inv * (&za - &zj * &mj_inv * &k);

    let n = [U, P, J, A].map(|f| b.idx[f as usize].len());
    let z = |r: usize, c: usize| DMatrix::<f64>::zeros(n[r], n[c]);
    let id = |r: usize| DMatrix::<f64>::identity(n[r], n[r]);

    let u_up = stack(vec![
        vec![fu.clone(), bt.clone(), z(0, 2), z(0, 3)],
        vec![z(1, 0), s_p, z(1, 2), z(1, 3)],
        vec![z(2, 0), z(2, 1), id(2), z(2, 3)],
        vec![z(3, 0), z(3, 1), z(3, 2), id(3)],
    ]);
    let l_up = stack(vec![
        vec![id(0), z(0, 1), z(0, 2), z(0, 3)],
        vec![&bb * &fu_inv, id(1), z(1, 2), z(1, 3)],
        vec![z(2, 0), z(2, 1), id(2), z(2, 3)],
        vec![z(3, 0), z(3, 1), z(3, 2), id(3)],
    ]);
    let f_ui_inv = stack(vec![
        vec![fu_inv.clone(), z(0, 1), z(0, 2), z(0, 3)],
        vec![z(1, 0), id(1), z(1, 2), z(1, 3)],
        vec![z(2, 0), z(2, 1), id(2), z(2, 3)],
        vec![z(3, 0), z(3, 1), z(3, 2), id(3)],
    ]);
    let u_uja = stack(vec![
        vec![fu.clone(), z(0, 1), zj.clone(), za],
        vec![z(1, 0), id(1), z(1, 2), z(1, 3)],
        vec![z(2, 0), z(2, 1), mj, k],
        vec![z(3, 0), z(3, 1), z(3, 2), s_a],
    ]);
    let l_uja = stack(vec![
        vec![id(0), z(0, 1), z(0, 2), z(0, 3)],
        vec![z(1, 0), id(1), z(1, 2), z(1, 3)],
        vec![z(2, 0), z(2, 1), id(2), z(2, 3)],
        vec![&y * &fu_inv, z(3, 1), -(&y * &fu_inv * &zj * &mj_inv), id(3)],
    ]);
    let p = &l_uja * &u_uja * &f_ui_inv * &l_up * &u_up;

    // The only factorization error is the (A, p) block Y F_u⁻¹ Bᵀ.
    let jf = b.field_major();
    let mut err = &p - &jf;
    let (a0, p0) = (n[0] + n[1] + n[2], n[0]);
    let ypb = &y * &fu_inv * &bt;
    let scale = jf.abs().max();
    assert!((err.view((a0, p0), (n[3], n[1])) - &ypb).abs().max() < 1e-9 * scale);
    err.view_mut((a0, p0), (n[3], n[1])).fill(0.0);
    assert!(err.abs().max() < 1e-9 * scale, "unexpected factorization error {:e}", err.abs().max());

    let p_lu = p.lu();
    let op = |x: &[f64], out: &mut [f64]| out.copy_from_slice((&jf * DVector::from_column_slice(x)).as_slice());
    let pinv = |x: &[f64], out: &mut [f64]| out.copy_from_slice(p_lu.solve(&DVector::from_column_slice(x)).unwrap().as_slice());
    let rhs: Vec<f64> = (0..jf.nrows()).map(|i| ((i * 7919) % 101) as f64 / 50.0 - 1.0).collect();
    let cfg = GmresConfig {
        rel_tol: 1e-2,
        ..Default::default()
    };
    let out = gmres(&op, &pinv, &rhs, None, &cfg).unwrap();
    assert!(out.converged && out.iterations <= 3, "{} iterations", out.iterations);
}

#[test]
fn pcd_on_velocity_pressure_block() {
    let d = disc(ProblemKind::TearingMode, (4, 4), 2);
    let jac = d.jacobian(&verify::perturbed_state(&d, 1e-2, 8));
    let pre = Preconditioner::new(&jac, Variant::UpperTriangular).unwrap();
    let c = &d.spatial.coupling;
    let (nu, np) = (d.layout.size(Field::U), d.layout.size(Field::P));
    let nt = d.nt;
    let per_slab = |m: &CsrMatrix, x: &[f64], n_in: usize, n_out: usize| -> Vec<f64> {
        let y: Vec<f64> = (0..nt).flat_map(|k| m.mul_vec(&x[k * n_in..(k + 1) * n_in])).collect();
        assert_eq!(y.len(), n_out * nt);
        y
    };
    let split = nu * nt;
    let op = |x: &[f64], out: &mut [f64]| {
        let (u, p) = x.split_at(split);
        let mut top = pre.f_u_apply(u);
        top.iter_mut().zip(per_slab(&c.bt, p, np, nu)).for_each(|(a, b)| *a += b);
        let mut bot = per_slab(&c.b, u, nu, np);
        for k in 0..nt {
            bot[k * np + c.pin] += p[k * np + c.pin];
        }
        out[..split].copy_from_slice(&top);
        out[split..].copy_from_slice(&bot);
    };
    let pinv = |r: &[f64], out: &mut [f64]| {
        let (ru, rp) = r.split_at(split);
        let p = pre.pressure_schur_inverse(rp);
        let mut t = ru.to_vec();
        t.iter_mut().zip(per_slab(&c.bt, &p, np, nu)).for_each(|(a, b)| *a -= b);
        out[..split].copy_from_slice(&pre.f_u_solve(&t));
        out[split..].copy_from_slice(&p);
    };
    let rhs: Vec<f64> = (0..split + np * nt).map(|i| ((i * 31) % 17) as f64 - 8.0).collect();
    let cfg = GmresConfig {
        rel_tol: 1e-8,
        ..Default::default()
    };
    let out = gmres(&op, &pinv, &rhs, None, &cfg).unwrap();
    assert!(out.converged && out.iterations <= 25, "{} iterations", out.iterations);
}

#[test]
fn one_slab_single_step_matches_space_time() {
    for kind in ProblemKind::ALL {
        let d = disc(kind, (3, 3), 1);
        let jac = d.jacobian(&verify::perturbed_state(&d, 1e-2, 2));
        let pre = Preconditioner::new(&jac, Variant::UpperTriangular).unwrap();
        let r: Vec<f64> = (0..d.layout.len()).map(|i| (i as f64 * 0.37).sin()).collect();
        let a = pre.apply_inverse(&r);
        let b = pre.single_step_inverse(0, &r);
        let diff: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        assert!(norm2(&diff) <= 1e-12 * norm2(&a));
    }
}

#[test]
fn without_y_full_and_simplified_coincide() {
    let d = disc(ProblemKind::IslandCoalescence, (3, 3), 3);
    let jac = d.jacobian(&verify::perturbed_state(&d, 1e-2, 6));
    let mut slabs = jac.slabs.clone();
    for s in &mut slabs {
        s.y = CsrMatrix::zeros(s.y.nrows(), s.y.ncols());
    }
    let jac0 = SpaceTimeJacobian::new(jac.spatial.clone(), jac.dt, slabs);
    let pre = Preconditioner::new(&jac0, Variant::Full).unwrap();
    let r: Vec<f64> = (0..d.layout.len()).map(|i| (i as f64 * 1.3).cos()).collect();
    let a = pre.inverse_with(&r, Variant::Full);
    let b = pre.inverse_with(&r, Variant::Simplified);
    let diff: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
    assert!(norm2(&diff) <= 1e-13 * norm2(&a));
    // With Y present the variants differ.
    let pre = Preconditioner::new(&jac, Variant::Full).unwrap();
    let a = pre.inverse_with(&r, Variant::Full);
    let b = pre.inverse_with(&r, Variant::Simplified);
    assert!(a.iter().zip(&b).any(|(x, y)| x != y));
}

#[test]
fn wave_block_in_the_long_step_limit() {
    let p = Problem::tearing_mode();
    let big = 1e8;
    let d = Discretization::new(p, MeshSpec::Cells(4, 2), big, big, Forcing::Balanced).unwrap();
    let jac = d.jacobian(&d.initial_guess());
    let pre = Preconditioner::new(&jac, Variant::UpperTriangular).unwrap();
    let s = &d.spatial;
    let k_bc = to_nalgebra(&s.bc_a.apply_matrix(&s.ops.k_a.scaled(p.eta / p.mu0)));
    let dinv = DMatrix::from_diagonal(&DVector::from_column_slice(&s.schur.d_inv));
    let scaling = jac.slabs[0].alfven;
    let want = &k_bc * &dinv * &k_bc + to_nalgebra(&s.schur.k_a0) * scaling;
    let got = to_nalgebra(&pre.c_a_blocks().0[0]);
    assert!((&got - &want).abs().max() < 1e-6 * want.abs().max());
}

#[test]
fn round_trips_on_all_meshes() {
    for kind in ProblemKind::ALL {
        for (cells, nt) in [((1, 1), 1), ((2, 2), 4), ((4, 4), 4), ((8, 8), 4)] {
            let c = verify::round_trips(kind, cells, nt, 20, 23).unwrap();
            assert!(c.passed, "{c}");
        }
    }
}

#[test]
fn structure_oracles() {
    for kind in ProblemKind::ALL {
        let c = verify::structure(kind, 1).unwrap();
        assert!(c.passed, "{c}");
    }
}

#[test]
fn preconditioner_failure_names_the_block() {
    let d = disc(ProblemKind::TearingMode, (2, 2), 2);
    let jac = d.jacobian(&d.initial_guess());
    let mut slabs = jac.slabs.clone();
    let n = slabs[1].f_u.nrows();
    slabs[1].f_u = CsrMatrix::zeros(n, n);
    let broken = SpaceTimeJacobian::new(jac.spatial.clone(), jac.dt, slabs);
    let err = Preconditioner::new(&broken, Variant::UpperTriangular).unwrap_err();
    assert!(err.to_string().contains("F_u[1]"), "{err}");
}
