use rayon::prelude::*;

use super::Discretization;
use crate::fem::assembly;

/// Lifted copies of the velocity, pressure and potential of one slab.
pub struct Lifted {
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub a: Vec<f64>,
}

impl Discretization {
    pub fn lifted(&self, slab: &[f64]) -> Lifted {
        let s = &self.spatial;
        let [u, p, _, a] = s.slab.split(slab);
        let (mut u, mut p, mut a) = (u.to_vec(), p.to_vec(), a.to_vec());
        s.bc_u.lift(&mut u);
        s.bc_p.lift(&mut p);
        s.bc_a.lift(&mut a);
        Lifted { u, p, a }
    }

    /// Lifted velocity and potential entering step `k` from the left.
    pub fn previous(&self, x: &[f64], k: usize) -> (Vec<f64>, Vec<f64>) {
        if k == 0 {
            (self.u_init.clone(), self.a_init.clone())
        } else {
            let l = self.lifted(&x[self.layout.slab(k - 1)]);
            (l.u, l.a)
        }
    }

    /// Residual of step `k` given the previous velocity and potential.
    pub fn slab_residual(&self, slab: &[f64], u_prev: &[f64], a_prev: &[f64], out: &mut [f64]) {
        let s = &*self.spatial;
        let pb = &s.problem;
        let ops = &s.ops;
        let inv_dt = 1.0 / self.dt;
        let x = self.lifted(slab);
        let [xu, xp, j, xa] = s.slab.split(slab);
        let [ru, rp, rj, ra] = s.slab.split_mut(out);

        let du: Vec<f64> = x.u.iter().zip(u_prev).map(|(a, b)| a - b).collect();
        ru.copy_from_slice(&assembly::advection_u_residual(&s.vel, &x.u));
        let lor = assembly::lorentz_residual(&s.vel, &s.cur, &s.pot, j, &x.a);
        ru.iter_mut().zip(lor).zip(&s.f).for_each(|((r, l), f)| *r += l - f);
        ops.m_u.mul_vec_add(inv_dt, &du, ru);
        ops.k_u.mul_vec_add(pb.mu, &x.u, ru);
        ops.bt.mul_vec_add(1.0, &x.p, ru);
        for i in s.bc_u.fixed_dofs() {
            ru[i] = xu[i] - s.bc_u.values()[i];
        }

        rp.fill(0.0);
        ops.b.mul_vec_add(1.0, &x.u, rp);
        for i in s.bc_p.fixed_dofs() {
            rp[i] = xp[i] - s.bc_p.values()[i];
        }

        rj.iter_mut().zip(&s.h).for_each(|(r, h)| *r = -h);
        ops.m_j.mul_vec_add(1.0, j, rj);
        ops.k_ja.mul_vec_add(1.0 / pb.mu0, &x.a, rj);

        let da: Vec<f64> = x.a.iter().zip(a_prev).map(|(a, b)| a - b).collect();
        ra.copy_from_slice(&assembly::advection_a_residual(&s.pot, &s.vel, &x.u, &x.a));
        ra.iter_mut().zip(&s.e).for_each(|(r, e)| *r += e);
        ops.m_a.mul_vec_add(inv_dt, &da, ra);
        ops.k_a.mul_vec_add(pb.eta / pb.mu0, &x.a, ra);
        for i in s.bc_a.fixed_dofs() {
            ra[i] = xa[i] - s.bc_a.values()[i];
        }
    }

    /// Residual of the full all-at-once system.
    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.layout.len(), "state length mismatch");
        let mut out = self.layout.zeros();
        out.par_chunks_mut(self.layout.slab_len()).enumerate().for_each(|(k, r)| {
            let (u_prev, a_prev) = self.previous(x, k);
            self.slab_residual(&x[self.layout.slab(k)], &u_prev, &a_prev, r);
        });
        out
    }
}
