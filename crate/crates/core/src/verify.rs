//! Headless self-checks: analytic, inverse and structural oracles plus the
//! iteration-count experiments.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::Result;
use crate::fem::assembly;
use crate::linalg::{norm2, CsrMatrix, DenseMatrix, Field};
use crate::precond::{compute_alfven_scaling, Preconditioner, Variant};
use crate::problems::{Problem, ProblemKind};
use crate::solver::{compute_overhead_ratios, solve_all_at_once, solve_sequential, NewtonConfig};
use crate::spacetime::{Discretization, Forcing, MeshSpec, SpaceTimeJacobian};

/// Outcome of one check: a measured quantity against its limit.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            passed: value <= limit,
            detail: format!("{value:.3e} <= {limit:.1e}"),
        }
    }

    fn new(name: impl Into<String>, passed: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            passed,
            detail,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag}  {}: {}", self.name, self.detail)
    }
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm2(&d) / norm2(b).max(f64::MIN_POSITIVE)
}

/// Equilibrium guess with a random perturbation, so every convective and
/// coupling block is active.
pub fn perturbed_state(disc: &Discretization, scale: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = disc.initial_guess();
    x.iter_mut().for_each(|v| *v += scale * rng.random_range(-1.0..1.0));
    x
}

/// Average magnetic field of the interpolated tearing-mode equilibrium
/// against `(2/5) ln cosh 2.5`.
pub fn alfven_average(cells: (usize, usize)) -> Result<Check> {
    let p = Problem::tearing_mode();
    let disc = Discretization::new(p, MeshSpec::Cells(cells.0, cells.1), 1.0, 1.0, Forcing::Balanced)?;
    let s = &disc.spatial;
    let a = s.field(&s.equilibrium, Field::A);
    let b = compute_alfven_scaling(&s.pot, a, p.mu0).sqrt();
    let exact = 0.4 * 2.5f64.cosh().ln();
    Ok(Check::at_most("Alfven average |B|", (b - exact).abs(), 1e-8))
}

/// Largest relative error of `inverse(forward(x))` over random `x`, for
/// every variant, both Schur approximations and the single-step operator.
pub fn round_trips(kind: ProblemKind, cells: (usize, usize), nt: usize, samples: usize, seed: u64) -> Result<Check> {
    let disc = Discretization::new(Problem::new(kind), MeshSpec::Cells(cells.0, cells.1), 0.25, 0.25 * nt as f64, Forcing::Balanced)?;
    let jac = disc.jacobian(&perturbed_state(&disc, 1e-2, seed));
    let pre = Preconditioner::new(&jac, Variant::UpperTriangular)?;
    let lay = &disc.layout;
    let slab = lay.slab_len();
    let (np, na) = (lay.size(Field::P) * nt, lay.size(Field::A) * nt);

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut worst = [0.0f64; 6];
    for _ in 0..samples {
        for (i, v) in Variant::ALL.into_iter().enumerate() {
            let x = random_vec(&mut rng, lay.len());
            let y = pre.forward_with(&x, v)?;
            worst[i] = worst[i].max(rel_diff(&pre.inverse_with(&y, v), &x));
        }
        let x = random_vec(&mut rng, np);
        worst[3] = worst[3].max(rel_diff(&pre.pressure_schur_inverse(&pre.pressure_schur_apply(&x)), &x));
        let x = random_vec(&mut rng, na);
        worst[4] = worst[4].max(rel_diff(&pre.magnetic_schur_inverse(&pre.magnetic_schur_apply(&x)?), &x));
        let k = rng.random_range(0..nt);
        let x = random_vec(&mut rng, slab);
        worst[5] = worst[5].max(rel_diff(&pre.single_step_inverse(k, &pre.single_step_forward(k, &x)?), &x));
    }
    let max = worst.iter().cloned().fold(0.0, f64::max);
    let mut c = Check::at_most(format!("round trips {kind} {}x{} Nt={nt}", cells.0, cells.1), max, 1e-9);
    c.detail = format!(
        "{} [P_T {:.1e}, P {:.1e}, Ptilde {:.1e}, S_p {:.1e}, S_A {:.1e}, P_T,k {:.1e}]",
        c.detail, worst[0], worst[1], worst[2], worst[3], worst[4], worst[5]
    );
    Ok(c)
}

/// Central-difference directional derivatives of the space-time residual
/// against the Jacobian, at the initial guess and after one Newton step.
pub fn jacobian_fd(kind: ProblemKind, seed: u64) -> Result<Check> {
    let disc = Discretization::new(Problem::new(kind), MeshSpec::Cells(2, 2), 0.25, 0.5, Forcing::Balanced)?;
    let x0 = disc.initial_guess();
    let one = NewtonConfig {
        max_iters: 1,
        ..Default::default()
    };
    let x1 = crate::solver::newton(&disc, x0.clone(), 0.0, &one)?.state;

    let eps = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for x in [&x0, &x1] {
        let jac = disc.jacobian(x);
        for _ in 0..3 {
            let v = random_vec(&mut rng, x.len());
            let shifted = |s: f64| -> Vec<f64> {
                let y: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a + s * b).collect();
                disc.residual(&y)
            };
            let (rp, rm) = (shifted(eps), shifted(-eps));
            let fd: Vec<f64> = rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * eps)).collect();
            worst = worst.max(rel_diff(&fd, &jac.mul(&v)));
        }
    }
    Ok(Check::at_most(format!("Jacobian FD {kind}"), worst, 1e-6))
}

fn dense(m: &CsrMatrix) -> DenseMatrix {
    m.to_dense()
}

fn combine(terms: &[(f64, &DenseMatrix)]) -> DenseMatrix {
    let (r, c) = (terms[0].1.nrows(), terms[0].1.ncols());
    let mut out = DenseMatrix::zeros(r, c);
    for i in 0..r {
        for j in 0..c {
            out[(i, j)] = terms.iter().map(|(s, m)| s * m[(i, j)]).sum();
        }
    }
    out
}

fn materialize(n: usize, f: impl Fn(&[f64]) -> Vec<f64>) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        m.set_column(j, &f(&e));
        e[j] = 0.0;
    }
    m
}

/// Hand-stacked space-time Jacobian in slab-major ordering.
fn stacked_jacobian(jac: &SpaceTimeJacobian) -> DenseMatrix {
    let s = &jac.spatial;
    let c = &s.coupling;
    let lay = &jac.layout;
    let mut m = DenseMatrix::zeros(lay.len(), lay.len());
    let off = |k: usize, f: Field| lay.range(k, f).start;
    for (k, sl) in jac.slabs.iter().enumerate() {
        use Field::*;
        let mut pin = DenseMatrix::zeros(lay.size(P), lay.size(P));
        pin[(c.pin, c.pin)] = 1.0;
        let blocks: [(Field, Field, DenseMatrix); 10] = [
            (U, U, dense(&sl.f_u)),
            (U, P, dense(&c.bt)),
            (U, J, dense(&sl.z_j)),
            (U, A, dense(&sl.z_a)),
            (P, U, dense(&c.b)),
            (P, P, pin),
            (J, J, dense(&c.m_j)),
            (J, A, dense(&c.k_ja)),
            (A, U, dense(&sl.y)),
            (A, A, dense(&sl.f_a)),
        ];
        for (r, col, b) in &blocks {
            m.set_block(off(k, *r), off(k, *col), b);
        }
        if k > 0 {
            let inv = -1.0 / jac.dt;
            m.set_block(off(k, U), off(k - 1, U), &combine(&[(inv, &dense(&c.m_u0))]));
            m.set_block(off(k, A), off(k - 1, A), &combine(&[(inv, &dense(&c.m_a0))]));
        }
    }
    m
}

/// Block lower-bidiagonal matrix with per-slab diagonal blocks and constant
/// sub-diagonal `−sub/Δt`.
fn stacked_bidiagonal(diag: &[DenseMatrix], sub: &DenseMatrix, dt: f64) -> DenseMatrix {
    let n = sub.nrows();
    let mut m = DenseMatrix::zeros(n * diag.len(), n * diag.len());
    for (k, d) in diag.iter().enumerate() {
        m.set_block(k * n, k * n, d);
        if k > 0 {
            m.set_block(k * n, (k - 1) * n, &combine(&[(-1.0 / dt, sub)]));
        }
    }
    m
}

/// Wave-type operator assembled from its defining products.
fn stacked_wave(jac: &SpaceTimeJacobian, scalings: &[f64]) -> DenseMatrix {
    let s = &jac.spatial;
    let n = s.slab.size(Field::A);
    let nt = jac.nt();
    let dinv = DenseMatrix::from_rows(
        &(0..n)
            .map(|i| (0..n).map(|j| if i == j { s.schur.d_inv[i] } else { 0.0 }).collect())
            .collect::<Vec<_>>(),
    );
    let m0 = dense(&s.coupling.m_a0);
    let k0 = dense(&s.schur.k_a0);
    let f: Vec<DenseMatrix> = jac.slabs.iter().map(|sl| dense(&sl.f_a)).collect();
    let fd = |a: &DenseMatrix, b: &DenseMatrix| a.matmul(&dinv).matmul(b);
    let inv_dt = 1.0 / jac.dt;
    let mut m = DenseMatrix::zeros(n * nt, n * nt);
    for k in 0..nt {
        let scaling = scalings[k];
        m.set_block(k * n, k * n, &combine(&[(1.0, &fd(&f[k], &f[k])), (scaling, &k0)]));
        if k > 0 {
            let sub = combine(&[(-inv_dt, &fd(&f[k], &m0)), (-inv_dt, &fd(&m0, &f[k - 1]))]);
            m.set_block(k * n, (k - 1) * n, &sub);
        }
        if k > 1 {
            m.set_block(k * n, (k - 2) * n, &combine(&[(inv_dt * inv_dt, &fd(&m0, &m0))]));
        }
    }
    m
}

/// Zero pattern of the blocks outside the allowed bandwidth in time.
fn block_bandwidth_ok(m: &DenseMatrix, n: usize, lower: usize) -> bool {
    let nt = m.nrows() / n;
    (0..nt).all(|bi| {
        (0..nt).all(|bj| {
            let inside = bj <= bi && bi - bj <= lower;
            inside || (0..n).all(|i| (0..n).all(|j| m[(bi * n + i, bj * n + j)] == 0.0))
        })
    })
}

/// Dense materializations of `J`, `F_p`, `F_A` and `C̃_A` against
/// hand-stacked block constructions, on a 2×2 mesh with three slabs.
pub fn structure(kind: ProblemKind, seed: u64) -> Result<Check> {
    let p = Problem::new(kind);
    let disc = Discretization::new(p, MeshSpec::Cells(2, 2), 0.25, 0.75, Forcing::Balanced)?;
    let x = perturbed_state(&disc, 1e-1, seed);
    let jac = disc.jacobian(&x);
    let pre = Preconditioner::new(&jac, Variant::UpperTriangular)?;
    let s = &disc.spatial;
    let lay = &disc.layout;
    let (np, na) = (lay.size(Field::P), lay.size(Field::A));

    let e_j = jac.to_dense().max_abs_diff(&stacked_jacobian(&jac));

    let f_p: Vec<DenseMatrix> = (0..disc.nt)
        .map(|k| {
            let u = disc.lifted(&x[lay.slab(k)]).u;
            let w = dense(&assembly::pcd_advection(&s.prs, &s.vel, &u));
            combine(&[(1.0 / disc.dt, &dense(&s.ops.m_p)), (p.mu, &dense(&s.ops.k_p)), (1.0, &w)])
        })
        .collect();
    let fp_ref = stacked_bidiagonal(&f_p, &dense(&s.ops.m_p), disc.dt);
    let fp = materialize(np * disc.nt, |v| pre.f_p_apply(v));
    let e_p = fp.max_abs_diff(&fp_ref);

    let f_a: Vec<DenseMatrix> = jac.slabs.iter().map(|sl| dense(&sl.f_a)).collect();
    let fa = materialize(na * disc.nt, |v| pre.f_a_apply(v));
    let e_a = fa.max_abs_diff(&stacked_bidiagonal(&f_a, &dense(&s.coupling.m_a0), disc.dt));

    let scalings: Vec<f64> = (0..disc.nt)
        .map(|k| compute_alfven_scaling(&s.pot, &disc.lifted(&x[lay.slab(k)]).a, p.mu0))
        .collect();
    let ca = materialize(na * disc.nt, |v| pre.c_a_apply(v));
    let e_c = ca.max_abs_diff(&stacked_wave(&jac, &scalings));

    let bands = block_bandwidth_ok(&fp, np, 1) && block_bandwidth_ok(&fa, na, 1) && block_bandwidth_ok(&ca, na, 2);
    let worst = e_j.max(e_p).max(e_a).max(e_c);
    Ok(Check::new(
        format!("structure {kind}"),
        worst <= 1e-12 && bands,
        format!("J {e_j:.1e}, F_p {e_p:.1e}, F_A {e_a:.1e}, C_A {e_c:.1e} <= 1e-12; block bandwidths {}", if bands { "ok" } else { "WRONG" }),
    ))
}

/// Unperturbed equilibrium: Newton must stay put.
pub fn equilibrium(kind: ProblemKind) -> Result<Check> {
    let p = Problem::new(kind).with_epsilon(0.0);
    let disc = Discretization::new(p, MeshSpec::Spacing(0.125), 0.25, 1.0, Forcing::Balanced)?;
    let out = solve_all_at_once(&disc, &NewtonConfig::default())?;
    let drift = out
        .state
        .iter()
        .zip(disc.initial_guess())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let n = out.stats.newton_iters;
    Ok(Check::new(
        format!("equilibrium {kind}"),
        out.converged && n <= 2 && drift <= 1e-6,
        format!("converged {}, Newton {n} <= 2, max drift {drift:.1e} <= 1e-6", out.converged),
    ))
}

/// All-at-once and sequential solutions on the same grid.
pub fn consistency(kind: ProblemKind) -> Result<Check> {
    let disc = Discretization::new(Problem::new(kind), MeshSpec::Spacing(0.25), 0.25, 1.0, Forcing::Balanced)?;
    let cfg = NewtonConfig::default();
    let (st, seq) = rayon::join(|| solve_all_at_once(&disc, &cfg), || solve_sequential(&disc, &cfg));
    let (st, seq) = (st?, seq?);
    let mut c = Check::at_most(format!("sequential vs all-at-once {kind}"), rel_diff(&seq.state, &st.state), 1e-6);
    c.passed &= st.converged && seq.converged;
    Ok(c)
}

/// One all-at-once solve in an iteration-count experiment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub dx: f64,
    pub dt: f64,
    pub t_final: f64,
    pub newton: usize,
    pub avg_gmres: f64,
    pub converged: bool,
}

/// All-at-once solves over the Cartesian product of the given grids.
pub fn sweep(kind: ProblemKind, dxs: &[f64], dts: &[f64], ts: &[f64], cfg: &NewtonConfig) -> Result<Vec<Cell>> {
    let grid: Vec<(f64, f64, f64)> = dxs
        .iter()
        .flat_map(|&dx| dts.iter().flat_map(move |&dt| ts.iter().map(move |&t| (dx, dt, t))))
        .collect();
    grid.into_par_iter()
        .map(|(dx, dt, t)| {
            let disc = Discretization::new(Problem::new(kind), MeshSpec::Spacing(dx), dt, t, Forcing::Balanced)?;
            let out = solve_all_at_once(&disc, cfg)?;
            Ok(Cell {
                dx,
                dt,
                t_final: t,
                newton: out.stats.newton_iters,
                avg_gmres: out.stats.avg_gmres(),
                converged: out.converged,
            })
        })
        .collect()
}

fn spread<T: Copy + PartialOrd>(v: impl Iterator<Item = T>) -> Option<(T, T)> {
    v.fold(None, |acc, x| match acc {
        None => Some((x, x)),
        Some((lo, hi)) => Some((if x < lo { x } else { lo }, if x > hi { x } else { hi })),
    })
}

fn describe(cells: &[Cell]) -> String {
    cells
        .iter()
        .map(|c| format!("({}, {}, {}): {} ({:.2})", c.dx, c.dt, c.t_final, c.newton, c.avg_gmres))
        .collect::<Vec<_>>()
        .join("; ")
}

/// Newton count constant within ±1 across the given cells.
pub fn newton_constant(name: &str, cells: &[Cell]) -> Check {
    let (lo, hi) = spread(cells.iter().map(|c| c.newton)).unwrap_or((0, 0));
    let ok = cells.iter().all(|c| c.converged) && hi - lo <= 2 && !cells.is_empty();
    Check::new(name, ok, format!("Newton in [{lo}, {hi}], spread <= 2; {}", describe(cells)))
}

/// Growth of the average GMRES count from the coarsest to the finest time
/// step, per spatial mesh.
pub fn gmres_growth(name: &str, cells: &[Cell], limit: f64) -> Check {
    let mut worst = 0.0f64;
    let mut dxs: Vec<f64> = cells.iter().map(|c| c.dx).collect();
    dxs.dedup();
    for dx in dxs {
        let row: Vec<&Cell> = cells.iter().filter(|c| c.dx == dx).collect();
        let coarse = row.iter().max_by(|a, b| a.dt.total_cmp(&b.dt));
        let fine = row.iter().min_by(|a, b| a.dt.total_cmp(&b.dt));
        if let (Some(c), Some(f)) = (coarse, fine) {
            worst = worst.max(f.avg_gmres / c.avg_gmres);
        }
    }
    let ok = cells.iter().all(|c| c.converged) && worst <= limit;
    Check::new(name, ok, format!("max growth {worst:.3} <= {limit}; {}", describe(cells)))
}

/// Average GMRES within ±`half_width` of the row midpoint and Newton
/// constant within ±1.
pub fn flat_row(name: &str, cells: &[Cell], half_width: f64) -> Check {
    let (glo, ghi) = spread(cells.iter().map(|c| c.avg_gmres)).unwrap_or((0.0, 0.0));
    let (nlo, nhi) = spread(cells.iter().map(|c| c.newton)).unwrap_or((0, 0));
    let ok = cells.iter().all(|c| c.converged) && ghi - glo <= 2.0 * half_width && nhi - nlo <= 2;
    Check::new(
        name,
        ok,
        format!("avg GMRES in [{glo:.2}, {ghi:.2}] (width <= {}), Newton in [{nlo}, {nhi}]; {}", 2.0 * half_width, describe(cells)),
    )
}

/// Cost of the all-at-once solve relative to one sequential step.
pub fn overhead_ratios(kind: ProblemKind, dx: f64, dt: f64, t_final: f64) -> Result<Check> {
    let disc = Discretization::new(Problem::new(kind), MeshSpec::Spacing(dx), dt, t_final, Forcing::Balanced)?;
    let cfg = NewtonConfig::default();
    let (st, seq) = rayon::join(|| solve_all_at_once(&disc, &cfg), || solve_sequential(&disc, &cfg));
    let (st, seq) = (st?, seq?);
    let (rn, rg) = compute_overhead_ratios(&st.stats, &seq.stats)?;
    let ok = st.converged && seq.converged && (1.0..=1.6).contains(&rn) && (1.0..=1.8).contains(&rg);
    Ok(Check::new(
        format!("overhead ratios {kind}"),
        ok,
        format!("Newton {rn:.3} in [1, 1.6], GMRES {rg:.3} in [1, 1.8]"),
    ))
}

/// The quick oracle battery: everything except the iteration sweeps.
/// Iteration-count scaling checks for the tearing mode: Newton constancy
/// and GMRES growth under time refinement, flatness in `T` at `Δt = 0.5`
/// and the overhead ratios against time-stepping.
pub fn scaling(cfg: &NewtonConfig) -> Result<Vec<Check>> {
    let tm = ProblemKind::TearingMode;
    let table = sweep(tm, &[0.25, 0.125], &[0.25, 0.125, 0.0625, 0.03125], &[1.0], cfg)?;
    let coarse: Vec<Cell> = table.iter().copied().filter(|c| c.dt >= 0.0625).collect();
    let row = sweep(tm, &[0.25], &[0.5], &[4.0, 8.0, 16.0], cfg)?;
    Ok(vec![
        newton_constant("Newton count constant under refinement", &coarse),
        gmres_growth("avg GMRES growth dt 2^-2 -> 2^-5", &table, 2.5),
        flat_row("flat scaling in T at dt = 0.5", &row, 1.5),
        overhead_ratios(tm, 0.25, 0.25, 1.0)?,
    ])
}

pub fn battery() -> Result<Vec<Check>> {
    let mut checks = vec![alfven_average((8, 4))?];
    for kind in ProblemKind::ALL {
        checks.push(round_trips(kind, (4, 4), 3, 5, 11)?);
        checks.push(jacobian_fd(kind, 7)?);
        checks.push(structure(kind, 3)?);
        checks.push(equilibrium(kind)?);
        checks.push(consistency(kind)?);
    }
    Ok(checks)
}
