use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use rayon::prelude::*;

use super::{Discretization, SpatialDisc};
use crate::fem::assembly;
use crate::linalg::{BlockLayout, CsrMatrix, DenseMatrix, LinearOperator};

/// Per-step blocks of the Jacobian, linearized at one slab of the iterate.
///
/// Boundary conditions are applied: constrained rows of the diagonal blocks
/// are identity rows, and off-diagonal blocks vanish on constrained rows and
/// columns.
#[derive(Clone, Debug)]
pub struct SlabLinearization {
    /// `M_u/Δt + W_u + ΔW_u + μK_u`
    pub f_u: CsrMatrix,
    /// `M_A/Δt + W_A + (η/μ0)K_A`
    pub f_a: CsrMatrix,
    /// Lorentz derivative in `j`.
    pub z_j: CsrMatrix,
    /// Lorentz derivative in `A`.
    pub z_a: CsrMatrix,
    /// Potential transport derivative in `u`.
    pub y: CsrMatrix,
    /// Pressure-space advection by the slab velocity, without BCs.
    pub w_p: CsrMatrix,
    /// `M_p/Δt + W_p + μK_p`, grounded at the pinned DOF.
    pub f_p: CsrMatrix,
    /// `‖B̄‖²/μ0` for the slab potential.
    pub alfven: f64,
}

impl SlabLinearization {
    pub fn new(s: &SpatialDisc, dt: f64, u: &[f64], j: &[f64], a: &[f64]) -> Self {
        let pb = &s.problem;
        let ops = &s.ops;
        let inv_dt = 1.0 / dt;

        let adv = assembly::advection_u(&s.vel, u);
        let f_u = ops
            .m_u
            .add(inv_dt, &ops.k_u, pb.mu)
            .add(1.0, &adv.linearization(), 1.0);
        let f_u = s.bc_u.apply_matrix(&f_u);

        let lor = assembly::lorentz(&s.vel, &s.cur, &s.pot, j, a);
        let u_mask = s.bc_u.mask();
        let a_mask = s.bc_a.mask();
        let z_j = lor.z_j.constrained(Some(u_mask), None, None);
        let z_a = lor.z_a.constrained(Some(u_mask), Some(a_mask), None);

        let tr = assembly::advection_a(&s.pot, &s.vel, u, a);
        let f_a = ops.m_a.add(inv_dt, &ops.k_a, pb.eta / pb.mu0).add(1.0, &tr.f_adv, 1.0);
        let f_a = s.bc_a.apply_matrix(&f_a);
        let y = tr.y.constrained(Some(a_mask), Some(u_mask), None);

        let w_p = assembly::pcd_advection(&s.prs, &s.vel, u);
        let f_p = ops.m_p.add(inv_dt, &ops.k_p, pb.mu).add(1.0, &w_p, 1.0);

        let b = assembly::curl_average(&s.pot, a);
        let alfven = (b[0] * b[0] + b[1] * b[1]) / pb.mu0;
        Self {
            f_u,
            f_a,
            z_j,
            z_a,
            y,
            w_p,
            f_p,
            alfven,
        }
    }
}

/// Block lower-bidiagonal space-time Jacobian, applied matrix-free.
#[derive(Debug)]
pub struct SpaceTimeJacobian {
    pub spatial: Arc<SpatialDisc>,
    pub dt: f64,
    pub layout: BlockLayout,
    pub slabs: Vec<SlabLinearization>,
    block_products: AtomicUsize,
}

impl Clone for SpaceTimeJacobian {
    fn clone(&self) -> Self {
        Self {
            spatial: self.spatial.clone(),
            dt: self.dt,
            layout: self.layout,
            slabs: self.slabs.clone(),
            block_products: AtomicUsize::new(self.block_products()),
        }
    }
}

impl Discretization {
    /// Linearizes every slab at the iterate `x`.
    pub fn jacobian(&self, x: &[f64]) -> SpaceTimeJacobian {
        assert_eq!(x.len(), self.layout.len(), "state length mismatch");
        let slabs = (0..self.nt)
            .into_par_iter()
            .map(|k| {
                let slab = &x[self.layout.slab(k)];
                let l = self.lifted(slab);
                let j = &slab[self.layout.local(crate::linalg::Field::J)];
                SlabLinearization::new(&self.spatial, self.dt, &l.u, j, &l.a)
            })
            .collect();
        SpaceTimeJacobian::new(self.spatial.clone(), self.dt, slabs)
    }
}

impl SpaceTimeJacobian {
    pub fn new(spatial: Arc<SpatialDisc>, dt: f64, slabs: Vec<SlabLinearization>) -> Self {
        let layout = spatial.slab.with_nt(slabs.len());
        Self {
            spatial,
            dt,
            layout,
            slabs,
            block_products: AtomicUsize::new(0),
        }
    }

    pub fn nt(&self) -> usize {
        self.slabs.len()
    }

    /// Number of per-slab sparse block products performed so far.
    pub fn block_products(&self) -> usize {
        self.block_products.load(Ordering::Relaxed)
    }

    pub fn reset_counter(&self) {
        self.block_products.store(0, Ordering::Relaxed);
    }

    /// Output slab `k` from input slab `k` and, for `k > 0`, slab `k − 1`.
    pub fn apply_slab(&self, k: usize, v: &[f64], v_prev: Option<&[f64]>, out: &mut [f64]) {
        let lay = &self.spatial.slab;
        let c = &self.spatial.coupling;
        let sl = &self.slabs[k];
        let [vu, vp, vj, va] = lay.split(v);
        let [yu, yp, yj, ya] = lay.split_mut(out);
        let mut products = 8;

        yu.fill(0.0);
        sl.f_u.mul_vec_add(1.0, vu, yu);
        c.bt.mul_vec_add(1.0, vp, yu);
        sl.z_j.mul_vec_add(1.0, vj, yu);
        sl.z_a.mul_vec_add(1.0, va, yu);

        yp.fill(0.0);
        c.b.mul_vec_add(1.0, vu, yp);
        yp[c.pin] += vp[c.pin];

        yj.fill(0.0);
        c.m_j.mul_vec_add(1.0, vj, yj);
        c.k_ja.mul_vec_add(1.0, va, yj);

        ya.fill(0.0);
        sl.y.mul_vec_add(1.0, vu, ya);
        sl.f_a.mul_vec_add(1.0, va, ya);

        if let Some(prev) = v_prev {
            let [pu, _, _, pa] = lay.split(prev);
            let s = -1.0 / self.dt;
            c.m_u0.mul_vec_add(s, pu, yu);
            c.m_a0.mul_vec_add(s, pa, ya);
            products += 2;
        }
        self.block_products.fetch_add(products, Ordering::Relaxed);
    }

    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        assert_eq!(v.len(), self.layout.len());
        assert_eq!(out.len(), self.layout.len());
        let n = self.layout.slab_len();
        out.par_chunks_mut(n).enumerate().for_each(|(k, y)| {
            let prev = (k > 0).then(|| &v[self.layout.slab(k - 1)]);
            self.apply_slab(k, &v[self.layout.slab(k)], prev, y);
        });
    }

    pub fn mul(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        self.apply(v, &mut out);
        out
    }

    /// Dense matrix of the operator, built column by column.
    pub fn to_dense(&self) -> DenseMatrix {
        let n = self.layout.len();
        let mut m = DenseMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            m.set_column(j, &self.mul(&e));
            e[j] = 0.0;
        }
        m
    }
}

impl LinearOperator for SpaceTimeJacobian {
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        SpaceTimeJacobian::apply(self, x, y)
    }
}
