//! Spatial discretization of a problem and its uniform time grid.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::{assembly, Constraints, FeSpace};
use crate::linalg::{BlockLayout, CsrMatrix, Field, SparseLu};
use crate::mesh::{build_rect_mesh, Mesh, Side};
use crate::problems::Problem;

/// Velocity, pressure, current and potential polynomial degrees.
pub const DEGREES: [usize; 4] = [3, 2, 1, 1];

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MeshSpec {
    /// Square cells of the given side.
    Spacing(f64),
    /// Explicit cell counts `(nx, ny)`.
    Cells(usize, usize),
}

/// How the momentum forcing `f` and electric field `E` are discretized.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Forcing {
    /// Chosen so that the interpolated equilibrium is an exact discrete
    /// steady state.
    #[default]
    Balanced,
    /// Plain load vectors of the continuous data (`f = 0`).
    Galerkin,
}

/// Assembled operators before boundary conditions.
#[derive(Clone, Debug)]
pub struct RawOperators {
    pub m_u: CsrMatrix,
    pub k_u: CsrMatrix,
    pub m_p: CsrMatrix,
    pub k_p: CsrMatrix,
    pub m_j: CsrMatrix,
    pub m_a: CsrMatrix,
    pub k_a: CsrMatrix,
    pub k_ja: CsrMatrix,
    pub b: CsrMatrix,
    pub bt: CsrMatrix,
}

/// Constant space-time coupling blocks with boundary conditions applied.
#[derive(Clone, Debug)]
pub struct Coupling {
    /// Divergence with the pinned pressure row and constrained velocity
    /// columns removed.
    pub b: Arc<CsrMatrix>,
    pub bt: Arc<CsrMatrix>,
    /// `K_jA/μ0` with constrained potential columns removed.
    pub k_ja: Arc<CsrMatrix>,
    pub m_j: Arc<CsrMatrix>,
    /// Velocity mass with constrained rows and columns removed.
    pub m_u0: Arc<CsrMatrix>,
    /// Potential mass with constrained rows and columns removed.
    pub m_a0: Arc<CsrMatrix>,
    pub pin: usize,
}

/// Boundary-treated operators and factorizations shared by all slabs of the
/// preconditioner.
#[derive(Clone, Debug)]
pub struct SchurOperators {
    pub m_j_lu: Arc<SparseLu>,
    /// Potential mass with identity on constrained DOFs.
    pub m_a: Arc<CsrMatrix>,
    pub m_a_lu: Arc<SparseLu>,
    /// Inverse diagonal of `m_a`.
    pub d_inv: Arc<Vec<f64>>,
    /// Potential stiffness with constrained rows and columns removed.
    pub k_a0: Arc<CsrMatrix>,
    /// Pressure mass and pure-Neumann stiffness.
    pub m_p: Arc<CsrMatrix>,
    pub m_p_lu: Arc<SparseLu>,
    pub k_p: Arc<CsrMatrix>,
    /// Factorization of `k_p` grounded at the pinned DOF.
    pub k_p_lu: Arc<SparseLu>,
}

pub struct SpatialDisc {
    pub problem: Problem,
    pub forcing: Forcing,
    pub mesh: Arc<Mesh>,
    pub vel: FeSpace,
    pub prs: FeSpace,
    pub cur: FeSpace,
    pub pot: FeSpace,
    pub ops: RawOperators,
    pub bc_u: Constraints,
    pub bc_p: Constraints,
    pub bc_a: Constraints,
    /// Momentum forcing `f`.
    pub f: Vec<f64>,
    /// Current-equation boundary term `h`.
    pub h: Vec<f64>,
    /// Discrete electric field `E`.
    pub e: Vec<f64>,
    /// Slab holding the interpolated equilibrium `(0, p_h, j_h, A_h)`.
    pub equilibrium: Vec<f64>,
    pub coupling: Coupling,
    pub schur: SchurOperators,
    pub slab: BlockLayout,
}

impl std::fmt::Debug for SpatialDisc {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpatialDisc")
            .field("problem", &self.problem)
            .field("forcing", &self.forcing)
            .field("nx", &self.mesh.nx())
            .field("ny", &self.mesh.ny())
            .field("sizes", &self.slab.sizes)
            .finish()
    }
}

fn factor(m: &CsrMatrix, name: &str) -> Result<Arc<SparseLu>> {
    SparseLu::factor(m).map(Arc::new).map_err(Error::block(name))
}

impl SpatialDisc {
    pub fn new(problem: Problem, mesh: MeshSpec, forcing: Forcing) -> Result<Self> {
        let (x0, x1, y0, y1) = problem.domain();
        let mesh = Arc::new(match mesh {
            MeshSpec::Spacing(dx) => build_rect_mesh(x0, x1, y0, y1, dx)?,
            MeshSpec::Cells(nx, ny) => Mesh::structured(x0, x1, y0, y1, nx, ny)?,
        });
        let [ku, kp, kj, ka] = DEGREES;
        let vel = FeSpace::vector(mesh.clone(), ku);
        let prs = FeSpace::scalar(mesh.clone(), kp);
        let cur = FeSpace::scalar(mesh.clone(), kj);
        let pot = FeSpace::scalar(mesh.clone(), ka);

        let b = assembly::divergence(&vel, &prs);
        let ops = RawOperators {
            m_u: assembly::mass(&vel),
            k_u: assembly::stiffness(&vel),
            m_p: assembly::mass(&prs),
            k_p: assembly::stiffness(&prs),
            m_j: assembly::mass(&cur),
            m_a: assembly::mass(&pot),
            k_a: assembly::stiffness(&pot),
            k_ja: assembly::mixed_stiffness(&cur, &pot),
            bt: b.transpose(),
            b,
        };

        let bc_u = Constraints::build(&vel, &problem.bcs(Field::U))?;
        let bc_a = Constraints::build(&pot, &problem.bcs(Field::A))?;
        let inv_mu0 = 1.0 / problem.mu0;

        // Interpolated equilibrium, with the pressure mean removed exactly.
        let p_raw = prs.interpolate(|x, y| problem.p_eq_raw(x, y));
        let p_mean = assembly::integral(&prs, &p_raw) / mesh.area();
        let p_h: Vec<f64> = p_raw.iter().map(|v| v - p_mean).collect();
        let mut a_h = pot.interpolate(|x, y| problem.a_eq(x, y));
        bc_a.lift(&mut a_h);

        let pin = 0;
        let mut bc_p = Constraints::none(prs.dof_count());
        bc_p.fix(pin, p_h[pin]);

        let mut h = vec![0.0; cur.dof_count()];
        for side in Side::ALL {
            let n = side.normal();
            let flux = assembly::boundary_load(&cur, side, |x, y| {
                let g = problem.a_eq_grad(x, y);
                inv_mu0 * (g[0] * n[0] + g[1] * n[1])
            });
            h.iter_mut().zip(flux).for_each(|(a, b)| *a += b);
        }

        let m_j_lu = factor(&ops.m_j, "M_j")?;
        let mut rhs = h.clone();
        ops.k_ja.mul_vec_add(-inv_mu0, &a_h, &mut rhs);
        let j_h = m_j_lu.solve(&rhs);

        let (f, e) = match forcing {
            Forcing::Balanced => {
                let mut f = ops.bt.mul_vec(&p_h);
                let lor = assembly::lorentz_residual(&vel, &cur, &pot, &j_h, &a_h);
                f.iter_mut().zip(lor).for_each(|(a, b)| *a += b);
                let e = ops.k_a.scaled(-problem.eta * inv_mu0).mul_vec(&a_h);
                (f, e)
            }
            Forcing::Galerkin => (
                vec![0.0; vel.dof_count()],
                assembly::load(&pot, |x, y| problem.e_eq(x, y)),
            ),
        };

        let slab = BlockLayout::new(1, vel.dof_count(), prs.dof_count(), cur.dof_count(), pot.dof_count());
        let mut equilibrium = slab.zeros();
        {
            let [_, p, j, a] = slab.split_mut(&mut equilibrium);
            p.copy_from_slice(&p_h);
            j.copy_from_slice(&j_h);
            a.copy_from_slice(&a_h);
        }

        let u_mask = bc_u.mask();
        let p_mask = bc_p.mask();
        let a_mask = bc_a.mask();
        let coupling = Coupling {
            b: Arc::new(ops.b.constrained(Some(p_mask), Some(u_mask), None)),
            bt: Arc::new(ops.bt.constrained(Some(u_mask), Some(p_mask), None)),
            k_ja: Arc::new(ops.k_ja.scaled(inv_mu0).constrained(None, Some(a_mask), None)),
            m_j: Arc::new(ops.m_j.clone()),
            m_u0: Arc::new(bc_u.strip_matrix(&ops.m_u)),
            m_a0: Arc::new(bc_a.strip_matrix(&ops.m_a)),
            pin,
        };

        let m_a_bc = bc_a.apply_matrix(&ops.m_a);
        let d_inv = m_a_bc.diagonal().iter().map(|d| 1.0 / d).collect();
        let k_p_g = bc_p.apply_matrix(&ops.k_p);
        let schur = SchurOperators {
            m_j_lu,
            m_a_lu: factor(&m_a_bc, "M_A")?,
            m_a: Arc::new(m_a_bc),
            d_inv: Arc::new(d_inv),
            k_a0: Arc::new(bc_a.strip_matrix(&ops.k_a)),
            m_p_lu: factor(&ops.m_p, "M_p")?,
            m_p: Arc::new(ops.m_p.clone()),
            k_p_lu: factor(&k_p_g, "K_p")?,
            k_p: Arc::new(ops.k_p.clone()),
        };

        Ok(Self {
            problem,
            forcing,
            mesh,
            vel,
            prs,
            cur,
            pot,
            ops,
            bc_u,
            bc_p,
            bc_a,
            f,
            h,
            e,
            equilibrium,
            coupling,
            schur,
            slab,
        })
    }

    /// Perturbed potential at `t = 0`.
    pub fn initial_potential(&self) -> Vec<f64> {
        let p = self.problem;
        let mut a = self.pot.interpolate(|x, y| p.a_initial(x, y));
        self.bc_a.lift(&mut a);
        a
    }

    pub fn field<'a>(&self, slab: &'a [f64], f: Field) -> &'a [f64] {
        &slab[self.slab.local(f)]
    }

    /// Pressure shifted to zero mean.
    pub fn zero_mean_pressure(&self, p: &[f64]) -> Vec<f64> {
        let mean = assembly::integral(&self.prs, p) / self.mesh.area();
        p.iter().map(|v| v - mean).collect()
    }
}

/// A spatial discretization, a uniform time grid and initial data.
#[derive(Clone, Debug)]
pub struct Discretization {
    pub spatial: Arc<SpatialDisc>,
    pub dt: f64,
    pub nt: usize,
    pub u_init: Vec<f64>,
    pub a_init: Vec<f64>,
    pub layout: BlockLayout,
}

/// Number of uniform steps of size `dt` covering `[0, t_final]`.
pub fn step_count(dt: f64, t_final: f64) -> Result<usize> {
    if !(dt > 0.0 && t_final > 0.0) || !dt.is_finite() || !t_final.is_finite() {
        return Err(Error::config(format!("need dt > 0 and T > 0, got dt = {dt}, T = {t_final}")));
    }
    if dt > t_final * (1.0 + 1e-12) {
        return Err(Error::config(format!("dt = {dt} exceeds T = {t_final}")));
    }
    let n = t_final / dt;
    let r = n.round();
    if (n - r).abs() > 1e-9 * n {
        return Err(Error::config(format!("T = {t_final} is not a multiple of dt = {dt}")));
    }
    Ok(r as usize)
}

impl Discretization {
    pub fn new(problem: Problem, mesh: MeshSpec, dt: f64, t_final: f64, forcing: Forcing) -> Result<Self> {
        let nt = step_count(dt, t_final)?;
        let spatial = Arc::new(SpatialDisc::new(problem, mesh, forcing)?);
        Ok(Self::from_spatial(spatial, dt, nt))
    }

    pub fn from_spatial(spatial: Arc<SpatialDisc>, dt: f64, nt: usize) -> Self {
        let u_init = vec![0.0; spatial.vel.dof_count()];
        let a_init = spatial.initial_potential();
        let layout = spatial.slab.with_nt(nt);
        Self {
            spatial,
            dt,
            nt,
            u_init,
            a_init,
            layout,
        }
    }

    /// One step of size `dt` starting from the given velocity and potential.
    pub fn single_step(&self, u_prev: &[f64], a_prev: &[f64]) -> Self {
        Self {
            spatial: self.spatial.clone(),
            dt: self.dt,
            nt: 1,
            u_init: u_prev.to_vec(),
            a_init: a_prev.to_vec(),
            layout: self.layout.with_nt(1),
        }
    }

    pub fn with_nt(&self, nt: usize) -> Self {
        Self {
            layout: self.layout.with_nt(nt),
            nt,
            ..self.clone()
        }
    }

    /// Equilibrium interpolant in every slab, with the current solved from
    /// its own equation so that its residual block vanishes.
    pub fn initial_guess(&self) -> Vec<f64> {
        self.spatial.equilibrium.repeat(self.nt)
    }
}
