//! Block preconditioners for the space-time Jacobian.
//!
//! All variants are built from the same approximate Schur complements:
//! `S̃_p = −K_p F_p⁻¹ M_p` for the pressure and `S̃_A = M_A F_A⁻¹ C̃_A` for the
//! potential, where `C̃_A` is the wave-type operator
//! `F_A D⁻¹ F_A + diag(‖B̄_k‖²/μ0 K_A)` with `D` the diagonal of `M_A`.
//!
//! Every operation is written for a contiguous range of slabs. The
//! space-time preconditioner uses the full range; its single-step
//! counterpart restricts to one slab, which drops the coupling to the
//! previous step.

mod schur;

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::assembly;
use crate::fem::FeSpace;
use crate::linalg::{CsrMatrix, Field, LinearOperator, SparseLu};
use crate::spacetime::SpaceTimeJacobian;

/// Which approximate factorization of the Jacobian is inverted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Variant {
    /// `P = L_ujA Ū_ujA L_up Ũ_up`
    Full,
    /// `P̃ = Ū_ujA L_up Ũ_up`
    Simplified,
    /// `P_T = Ū_ujA Ũ_up`
    #[default]
    UpperTriangular,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::UpperTriangular, Variant::Full, Variant::Simplified];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Full => "P",
            Variant::Simplified => "Ptilde",
            Variant::UpperTriangular => "PT",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "p" | "full" => Ok(Variant::Full),
            "ptilde" | "simplified" => Ok(Variant::Simplified),
            "pt" | "upper" | "upper-triangular" | "triangular" => Ok(Variant::UpperTriangular),
            other => Err(Error::config(format!("unknown preconditioner '{other}'"))),
        }
    }
}

/// `‖B̄‖²/μ0` with `B̄` the domain average of `∇×(A k̂)`.
pub fn compute_alfven_scaling(pot: &FeSpace, a: &[f64], mu0: f64) -> f64 {
    let b = assembly::curl_average(pot, a);
    (b[0] * b[0] + b[1] * b[1]) / mu0
}

struct SlabFactors {
    f_u: SparseLu,
    f_p: SparseLu,
    c_a: SparseLu,
}

/// Factorized preconditioner for one Jacobian.
pub struct Preconditioner<'a> {
    jac: &'a SpaceTimeJacobian,
    variant: Variant,
    factors: Vec<SlabFactors>,
    /// Diagonal blocks of `C̃_A`.
    c_diag: Vec<CsrMatrix>,
    /// First sub-diagonal blocks; entry `k` couples slab `k` to `k − 1`
    /// (entry 0 is empty).
    c_sub1: Vec<CsrMatrix>,
    /// Second sub-diagonal block, identical for all slabs.
    c_sub2: CsrMatrix,
}

impl fmt::Debug for Preconditioner<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Preconditioner")
            .field("variant", &self.variant)
            .field("nt", &self.nt())
            .finish()
    }
}

impl<'a> Preconditioner<'a> {
    pub fn new(jac: &'a SpaceTimeJacobian, variant: Variant) -> Result<Self> {
        let s = &*jac.spatial;
        let dinv = &s.schur.d_inv;
        let k_a0 = &*s.schur.k_a0;
        let m0 = &*s.coupling.m_a0;
        let inv_dt = 1.0 / jac.dt;

        let c_diag: Vec<CsrMatrix> = jac
            .slabs
            .par_iter()
            .map(|sl| sl.f_a.matmul(&sl.f_a.scale_rows(dinv)).add(1.0, k_a0, sl.alfven))
            .collect();
        let c_sub1: Vec<CsrMatrix> = (0..jac.nt())
            .into_par_iter()
            .map(|k| {
                if k == 0 {
                    return CsrMatrix::zeros(m0.nrows(), m0.ncols());
                }
                let fk = &jac.slabs[k].f_a;
                let fp = &jac.slabs[k - 1].f_a;
                fk.matmul(&m0.scale_rows(dinv))
                    .add(-inv_dt, &m0.matmul(&fp.scale_rows(dinv)), -inv_dt)
            })
            .collect();
        let c_sub2 = m0.matmul(&m0.scale_rows(dinv)).scaled(inv_dt * inv_dt);

        let factors = jac
            .slabs
            .par_iter()
            .zip(&c_diag)
            .enumerate()
            .map(|(k, (sl, c))| {
                Ok(SlabFactors {
                    f_u: SparseLu::factor(&sl.f_u).map_err(Error::block(format!("F_u[{k}]")))?,
                    f_p: SparseLu::factor(&sl.f_p).map_err(Error::block(format!("F_p[{k}]")))?,
                    c_a: SparseLu::factor(c).map_err(Error::block(format!("C_A[{k}]")))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            jac,
            variant,
            factors,
            c_diag,
            c_sub1,
            c_sub2,
        })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn nt(&self) -> usize {
        self.jac.nt()
    }

    pub fn jacobian(&self) -> &SpaceTimeJacobian {
        self.jac
    }

    pub fn c_a_blocks(&self) -> (&[CsrMatrix], &[CsrMatrix], &CsrMatrix) {
        (&self.c_diag, &self.c_sub1, &self.c_sub2)
    }

    fn all(&self) -> Range<usize> {
        0..self.nt()
    }

    fn size(&self, f: Field) -> usize {
        self.jac.spatial.slab.size(f)
    }

    /// Applies the inverse of the selected variant.
    pub fn apply_inverse(&self, r: &[f64]) -> Vec<f64> {
        self.inverse_on(self.all(), r, self.variant)
    }

    /// Applies the selected variant itself.
    pub fn apply_forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.forward_on(self.all(), x, self.variant)
    }

    pub fn inverse_with(&self, r: &[f64], variant: Variant) -> Vec<f64> {
        self.inverse_on(self.all(), r, variant)
    }

    pub fn forward_with(&self, x: &[f64], variant: Variant) -> Result<Vec<f64>> {
        self.forward_on(self.all(), x, variant)
    }

    /// Single-step counterpart of the selected variant on slab `k`.
    pub fn single_step_inverse(&self, k: usize, r: &[f64]) -> Vec<f64> {
        self.inverse_on(k..k + 1, r, self.variant)
    }

    pub fn single_step_forward(&self, k: usize, x: &[f64]) -> Result<Vec<f64>> {
        self.forward_on(k..k + 1, x, self.variant)
    }

    fn inverse_on(&self, ks: Range<usize>, r: &[f64], variant: Variant) -> Vec<f64> {
        let lay = self.jac.spatial.slab.with_nt(ks.len());
        assert_eq!(r.len(), lay.len(), "residual length mismatch");
        let [mut xu, mut xp, mut xj, mut xa] = Field::ALL.map(|f| lay.gather(r, f));

        if variant == Variant::Full {
            // L_ujA⁻¹: x_A += Y F_u⁻¹ (Z_j M_j⁻¹ x_j − x_u)
            let mjx = self.m_j_solve(&xj);
            let mut t = self.block_apply(ks.clone(), &mjx, Field::J, Field::U, |sl, _| &sl.z_j);
            t.iter_mut().zip(&xu).for_each(|(a, b)| *a -= b);
            let t = self.f_u_solve_on(ks.clone(), &t);
            let y = self.block_apply(ks.clone(), &t, Field::U, Field::A, |sl, _| &sl.y);
            xa.iter_mut().zip(y).for_each(|(a, b)| *a += b);
        }

        // Ū_ujA⁻¹
        xa = self.magnetic_schur_inverse_on(ks.clone(), &xa);
        let ka = self.block_apply(ks.clone(), &xa, Field::A, Field::J, |_, c| &c.k_ja);
        xj.iter_mut().zip(ka).for_each(|(a, b)| *a -= b);
        xj = self.m_j_solve(&xj);
        let zj = self.block_apply(ks.clone(), &xj, Field::J, Field::U, |sl, _| &sl.z_j);
        let za = self.block_apply(ks.clone(), &xa, Field::A, Field::U, |sl, _| &sl.z_a);
        xu.iter_mut().zip(zj).zip(za).for_each(|((a, b), c)| *a -= b + c);

        if variant != Variant::UpperTriangular {
            // L_up⁻¹: x_p −= B F_u⁻¹ x_u
            let t = self.f_u_solve_on(ks.clone(), &xu);
            let bt = self.block_apply(ks.clone(), &t, Field::U, Field::P, |_, c| &c.b);
            xp.iter_mut().zip(bt).for_each(|(a, b)| *a -= b);
        }

        // Ũ_up⁻¹
        xp = self.pressure_schur_inverse_on(ks.clone(), &xp);
        let bp = self.block_apply(ks.clone(), &xp, Field::P, Field::U, |_, c| &c.bt);
        xu.iter_mut().zip(bp).for_each(|(a, b)| *a -= b);
        xu = self.f_u_solve_on(ks, &xu);

        let mut out = lay.zeros();
        for (f, v) in Field::ALL.into_iter().zip([xu, xp, xj, xa]) {
            lay.scatter(&v, f, &mut out);
        }
        out
    }

    fn forward_on(&self, ks: Range<usize>, x: &[f64], variant: Variant) -> Result<Vec<f64>> {
        let lay = self.jac.spatial.slab.with_nt(ks.len());
        assert_eq!(x.len(), lay.len(), "vector length mismatch");
        let [xu, xp, xj, xa] = Field::ALL.map(|f| lay.gather(x, f));

        // Ũ_up
        let mut yu = self.f_u_apply_on(ks.clone(), &xu);
        let bp = self.block_apply(ks.clone(), &xp, Field::P, Field::U, |_, c| &c.bt);
        yu.iter_mut().zip(bp).for_each(|(a, b)| *a += b);
        let mut yp = self.pressure_schur_apply_on(ks.clone(), &xp);

        if variant != Variant::UpperTriangular {
            // L_up: y_p += B F_u⁻¹ y_u
            let t = self.f_u_solve_on(ks.clone(), &yu);
            let bt = self.block_apply(ks.clone(), &t, Field::U, Field::P, |_, c| &c.b);
            yp.iter_mut().zip(bt).for_each(|(a, b)| *a += b);
        }

        // Ū_ujA
        let zj = self.block_apply(ks.clone(), &xj, Field::J, Field::U, |sl, _| &sl.z_j);
        let za = self.block_apply(ks.clone(), &xa, Field::A, Field::U, |sl, _| &sl.z_a);
        yu.iter_mut().zip(zj).zip(za).for_each(|((a, b), c)| *a += b + c);
        let mut yj = self.m_j_apply(&xj);
        let ka = self.block_apply(ks.clone(), &xa, Field::A, Field::J, |_, c| &c.k_ja);
        yj.iter_mut().zip(ka).for_each(|(a, b)| *a += b);
        let mut ya = self.magnetic_schur_apply_on(ks.clone(), &xa)?;

        if variant == Variant::Full {
            // L_ujA: y_A += Y F_u⁻¹ (y_u − Z_j M_j⁻¹ y_j)
            let mjy = self.m_j_solve(&yj);
            let zm = self.block_apply(ks.clone(), &mjy, Field::J, Field::U, |sl, _| &sl.z_j);
            let t: Vec<f64> = yu.iter().zip(zm).map(|(a, b)| a - b).collect();
            let t = self.f_u_solve_on(ks.clone(), &t);
            let y = self.block_apply(ks, &t, Field::U, Field::A, |sl, _| &sl.y);
            ya.iter_mut().zip(y).for_each(|(a, b)| *a += b);
        }

        let mut out = lay.zeros();
        for (f, v) in Field::ALL.into_iter().zip([yu, yp, yj, ya]) {
            lay.scatter(&v, f, &mut out);
        }
        Ok(out)
    }
}

impl LinearOperator for Preconditioner<'_> {
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(&self.apply_inverse(x));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::Problem;
    use crate::spacetime::{Discretization, Forcing, MeshSpec};

    #[test]
    fn variant_names_parse_back() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert_eq!(" Upper ".parse::<Variant>().unwrap(), Variant::UpperTriangular);
        assert!("lower".parse::<Variant>().is_err());
        assert_eq!(Variant::default(), Variant::UpperTriangular);
    }

    #[test]
    fn inverse_then_forward_is_identity() {
        let d = Discretization::new(Problem::tearing_mode(), MeshSpec::Cells(2, 2), 0.25, 0.5, Forcing::Balanced).unwrap();
        let jac = d.jacobian(&d.initial_guess());
        let r: Vec<f64> = (0..d.layout.len()).map(|i| (i as f64 * 0.7).sin()).collect();
        for v in Variant::ALL {
            let pre = Preconditioner::new(&jac, v).unwrap();
            let back = pre.apply_forward(&pre.apply_inverse(&r)).unwrap();
            let err = r.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-9, "{v}: {err:e}");
        }
    }
}
