//! Block solves and applications over a range of slabs, on field-stacked
//! vectors (slab after slab for one field).

use std::ops::Range;

use rayon::prelude::*;

use super::Preconditioner;
use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, Field, SparseLu};
use crate::spacetime::{Coupling, SlabLinearization};

/// Maps every slab of `x` independently.
fn per_slab<F>(x: &[f64], n_in: usize, n_out: usize, f: F) -> Vec<f64>
where
    F: Fn(usize, &[f64], &mut [f64]) + Sync,
{
    let nt = x.len() / n_in;
    let mut out = vec![0.0; nt * n_out];
    out.par_chunks_mut(n_out)
        .zip(x.par_chunks(n_in))
        .enumerate()
        .for_each(|(i, (y, xi))| f(i, xi, y));
    out
}

/// `x_i = D_i⁻¹ (r_i + M x_{i−1}/Δt)` for a block lower-bidiagonal operator
/// with sub-diagonal `−M/Δt`.
fn bidiagonal_solve(r: &[f64], n: usize, sub: &CsrMatrix, inv_dt: f64, solve: impl Fn(usize, &mut [f64])) -> Vec<f64> {
    let mut x = r.to_vec();
    for i in 0..r.len() / n {
        let (done, rest) = x.split_at_mut(i * n);
        let xi = &mut rest[..n];
        if i > 0 {
            sub.mul_vec_add(inv_dt, &done[(i - 1) * n..], xi);
        }
        solve(i, xi);
    }
    x
}

/// `y_i = D_i x_i − M x_{i−1}/Δt`
fn bidiagonal_apply<'m>(x: &[f64], n: usize, sub: &CsrMatrix, inv_dt: f64, diag: impl Fn(usize) -> &'m CsrMatrix + Sync) -> Vec<f64> {
    per_slab(x, n, n, |i, xi, y| {
        diag(i).mul_vec_add(1.0, xi, y);
        if i > 0 {
            sub.mul_vec_add(-inv_dt, &x[(i - 1) * n..i * n], y);
        }
    })
}

impl Preconditioner<'_> {
    fn inv_dt(&self) -> f64 {
        1.0 / self.jac.dt
    }

    fn coupling(&self) -> &Coupling {
        &self.jac.spatial.coupling
    }

    fn check(&self, ks: &Range<usize>, x: &[f64], f: Field) {
        assert!(ks.end <= self.nt(), "slab range out of bounds");
        assert_eq!(x.len(), ks.len() * self.size(f), "{f:?} vector length mismatch");
    }

    /// Per-slab product with a block chosen from the slab linearization or
    /// the constant coupling blocks.
    pub(super) fn block_apply<S>(&self, ks: Range<usize>, x: &[f64], from: Field, to: Field, select: S) -> Vec<f64>
    where
        S: for<'b> Fn(&'b SlabLinearization, &'b Coupling) -> &'b CsrMatrix + Sync,
    {
        self.check(&ks, x, from);
        per_slab(x, self.size(from), self.size(to), |i, xi, y| {
            select(&self.jac.slabs[ks.start + i], self.coupling()).mul_vec_add(1.0, xi, y);
        })
    }

    pub(super) fn m_j_solve(&self, x: &[f64]) -> Vec<f64> {
        let lu = &self.jac.spatial.schur.m_j_lu;
        let n = self.size(Field::J);
        per_slab(x, n, n, |_, xi, y| {
            y.copy_from_slice(xi);
            lu.solve_in_place(y);
        })
    }

    pub(super) fn m_j_apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.size(Field::J);
        per_slab(x, n, n, |_, xi, y| self.coupling().m_j.mul_vec_add(1.0, xi, y))
    }

    pub(super) fn f_u_solve_on(&self, ks: Range<usize>, r: &[f64]) -> Vec<f64> {
        self.check(&ks, r, Field::U);
        let m0 = &self.coupling().m_u0;
        bidiagonal_solve(r, self.size(Field::U), m0, self.inv_dt(), |i, x| {
            self.factors[ks.start + i].f_u.solve_in_place(x)
        })
    }

    pub(super) fn f_u_apply_on(&self, ks: Range<usize>, x: &[f64]) -> Vec<f64> {
        self.check(&ks, x, Field::U);
        let m0 = &self.coupling().m_u0;
        bidiagonal_apply(x, self.size(Field::U), m0, self.inv_dt(), |i| &self.jac.slabs[ks.start + i].f_u)
    }

    fn f_p_solve_on(&self, ks: Range<usize>, r: &[f64]) -> Vec<f64> {
        let m0 = &self.jac.spatial.schur.m_p;
        bidiagonal_solve(r, self.size(Field::P), m0, self.inv_dt(), |i, x| {
            self.factors[ks.start + i].f_p.solve_in_place(x)
        })
    }

    fn f_p_apply_on(&self, ks: Range<usize>, x: &[f64]) -> Vec<f64> {
        let m0 = &self.jac.spatial.schur.m_p;
        bidiagonal_apply(x, self.size(Field::P), m0, self.inv_dt(), |i| &self.jac.slabs[ks.start + i].f_p)
    }

    fn f_a_apply_on(&self, ks: Range<usize>, x: &[f64]) -> Vec<f64> {
        let m0 = &self.coupling().m_a0;
        bidiagonal_apply(x, self.size(Field::A), m0, self.inv_dt(), |i| &self.jac.slabs[ks.start + i].f_a)
    }

    fn f_a_solve_on(&self, ks: Range<usize>, r: &[f64]) -> Result<Vec<f64>> {
        let lus = ks
            .clone()
            .into_par_iter()
            .map(|k| SparseLu::factor(&self.jac.slabs[k].f_a).map_err(Error::block(format!("F_A[{k}]"))))
            .collect::<Result<Vec<_>>>()?;
        let m0 = &self.coupling().m_a0;
        Ok(bidiagonal_solve(r, self.size(Field::A), m0, self.inv_dt(), |i, x| {
            lus[i].solve_in_place(x)
        }))
    }

    fn c_a_solve_on(&self, ks: Range<usize>, r: &[f64]) -> Vec<f64> {
        let n = self.size(Field::A);
        let mut x = r.to_vec();
        for i in 0..ks.len() {
            let k = ks.start + i;
            let (done, rest) = x.split_at_mut(i * n);
            let xi = &mut rest[..n];
            if i > 0 {
                self.c_sub1[k].mul_vec_add(-1.0, &done[(i - 1) * n..], xi);
            }
            if i > 1 {
                self.c_sub2.mul_vec_add(-1.0, &done[(i - 2) * n..(i - 1) * n], xi);
            }
            self.factors[k].c_a.solve_in_place(xi);
        }
        x
    }

    fn c_a_apply_on(&self, ks: Range<usize>, x: &[f64]) -> Vec<f64> {
        let n = self.size(Field::A);
        per_slab(x, n, n, |i, xi, y| {
            let k = ks.start + i;
            self.c_diag[k].mul_vec_add(1.0, xi, y);
            if i > 0 {
                self.c_sub1[k].mul_vec_add(1.0, &x[(i - 1) * n..i * n], y);
            }
            if i > 1 {
                self.c_sub2.mul_vec_add(1.0, &x[(i - 2) * n..(i - 1) * n], y);
            }
        })
    }

    /// `S̃_p⁻¹ r = −M_p⁻¹ F_p K_p⁻¹ r` on the pressure space modulo constants.
    ///
    /// The pinned entry of each slab is replaced by the value that makes the
    /// right-hand side compatible with the Neumann stiffness; the result is
    /// shifted to vanish at the pin, which then carries `r[pin]` through.
    pub(super) fn pressure_schur_inverse_on(&self, ks: Range<usize>, r: &[f64]) -> Vec<f64> {
        self.check(&ks, r, Field::P);
        let sc = &self.jac.spatial.schur;
        let n = self.size(Field::P);
        let pin = self.coupling().pin;
        let a = per_slab(r, n, n, |_, ri, y| {
            y.copy_from_slice(ri);
            y[pin] = 0.0;
            sc.k_p_lu.solve_in_place(y);
        });
        let b = self.f_p_apply_on(ks, &a);
        per_slab(&b, n, n, |i, bi, y| {
            y.iter_mut().zip(bi).for_each(|(o, v)| *o = -v);
            sc.m_p_lu.solve_in_place(y);
            let shift = y[pin];
            y.iter_mut().for_each(|v| *v -= shift);
            y[pin] = r[i * n + pin];
        })
    }

    /// `S̃_p x = −K_p F_p⁻¹ M_p x`, the inverse of [`Self::pressure_schur_inverse_on`].
    pub(super) fn pressure_schur_apply_on(&self, ks: Range<usize>, x: &[f64]) -> Vec<f64> {
        self.check(&ks, x, Field::P);
        let sc = &self.jac.spatial.schur;
        let n = self.size(Field::P);
        let pin = self.coupling().pin;
        let v = per_slab(x, n, n, |_, xi, y| {
            let mut q = xi.to_vec();
            q[pin] = 0.0;
            sc.m_p.mul_vec_add(1.0, &q, y);
        });
        let w = self.f_p_solve_on(ks, &v);
        per_slab(&w, n, n, |i, wi, y| {
            sc.k_p.mul_vec_add(-1.0, wi, y);
            y[pin] = x[i * n + pin];
        })
    }

    /// `S̃_A⁻¹ r = C̃_A⁻¹ F_A M_A⁻¹ r`
    pub(super) fn magnetic_schur_inverse_on(&self, ks: Range<usize>, r: &[f64]) -> Vec<f64> {
        self.check(&ks, r, Field::A);
        let lu = &self.jac.spatial.schur.m_a_lu;
        let n = self.size(Field::A);
        let v = per_slab(r, n, n, |_, ri, y| {
            y.copy_from_slice(ri);
            lu.solve_in_place(y);
        });
        let w = self.f_a_apply_on(ks.clone(), &v);
        self.c_a_solve_on(ks, &w)
    }

    /// `S̃_A x = M_A F_A⁻¹ C̃_A x`
    pub(super) fn magnetic_schur_apply_on(&self, ks: Range<usize>, x: &[f64]) -> Result<Vec<f64>> {
        self.check(&ks, x, Field::A);
        let n = self.size(Field::A);
        let w = self.c_a_apply_on(ks.clone(), x);
        let v = self.f_a_solve_on(ks, &w)?;
        let m = &self.jac.spatial.schur.m_a;
        Ok(per_slab(&v, n, n, |_, vi, y| m.mul_vec_add(1.0, vi, y)))
    }

    pub fn pressure_schur_inverse(&self, r: &[f64]) -> Vec<f64> {
        self.pressure_schur_inverse_on(self.all(), r)
    }

    pub fn pressure_schur_apply(&self, x: &[f64]) -> Vec<f64> {
        self.pressure_schur_apply_on(self.all(), x)
    }

    pub fn magnetic_schur_inverse(&self, r: &[f64]) -> Vec<f64> {
        self.magnetic_schur_inverse_on(self.all(), r)
    }

    pub fn magnetic_schur_apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.magnetic_schur_apply_on(self.all(), x)
    }

    /// Space-time velocity operator `F_u x`.
    pub fn f_u_apply(&self, x: &[f64]) -> Vec<f64> {
        self.f_u_apply_on(self.all(), x)
    }

    pub fn f_u_solve(&self, r: &[f64]) -> Vec<f64> {
        self.f_u_solve_on(self.all(), r)
    }

    /// Space-time pressure convection-diffusion operator `F_p x`.
    pub fn f_p_apply(&self, x: &[f64]) -> Vec<f64> {
        self.check(&self.all(), x, Field::P);
        self.f_p_apply_on(self.all(), x)
    }

    /// Space-time potential operator `F_A x`.
    pub fn f_a_apply(&self, x: &[f64]) -> Vec<f64> {
        self.check(&self.all(), x, Field::A);
        self.f_a_apply_on(self.all(), x)
    }

    /// Wave-type operator `C̃_A x`.
    pub fn c_a_apply(&self, x: &[f64]) -> Vec<f64> {
        self.check(&self.all(), x, Field::A);
        self.c_a_apply_on(self.all(), x)
    }

    pub fn c_a_solve(&self, r: &[f64]) -> Vec<f64> {
        self.check(&self.all(), r, Field::A);
        self.c_a_solve_on(self.all(), r)
    }
}
