//! Newton drivers for the all-at-once system and for sequential
//! time-stepping.

use crate::error::{Error, Result};
use crate::linalg::{gmres, norm2, GmresConfig};
use crate::precond::{Preconditioner, Variant};
use crate::spacetime::Discretization;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonConfig {
    /// Absolute tolerance on the Euclidean residual norm of the full
    /// space-time system. Sequential runs use `abs_tol/√N_t` per step.
    pub abs_tol: f64,
    pub max_iters: usize,
    pub gmres: GmresConfig,
    pub variant: Variant,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            max_iters: 20,
            gmres: GmresConfig::default(),
            variant: Variant::UpperTriangular,
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) {
            return Err(Error::config("Newton tolerance must be positive"));
        }
        if self.max_iters == 0 {
            return Err(Error::config("Newton needs max_iters >= 1"));
        }
        self.gmres.validate()?;
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolveStats {
    pub newton_iters: usize,
    /// GMRES iterations of each Newton step.
    pub gmres_iters: Vec<usize>,
    /// Residual norm before the first and after every Newton step.
    pub residual_history: Vec<f64>,
    /// Whether every inner GMRES solve met its tolerance.
    pub gmres_converged: bool,
}

impl SolveStats {
    pub fn total_gmres(&self) -> usize {
        self.gmres_iters.iter().sum()
    }

    /// Mean GMRES iterations per Newton step (0 without Newton steps).
    pub fn avg_gmres(&self) -> f64 {
        if self.gmres_iters.is_empty() {
            0.0
        } else {
            self.total_gmres() as f64 / self.gmres_iters.len() as f64
        }
    }

    /// Whether the residual norm decreased at every Newton step.
    pub fn monotone(&self) -> bool {
        self.residual_history.windows(2).all(|w| w[1] <= w[0])
    }

    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(f64::NAN)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SequentialStats {
    pub steps: Vec<SolveStats>,
    /// Step whose Newton iteration failed, if any; later steps were not run.
    pub failed_step: Option<usize>,
}

impl SequentialStats {
    /// A step is frozen when its warm-started residual already meets the
    /// tolerance, so no Newton update is performed.
    pub fn is_frozen(&self, k: usize) -> bool {
        self.steps[k].newton_iters == 0
    }

    pub fn effective_steps(&self) -> usize {
        (0..self.steps.len()).filter(|&k| !self.is_frozen(k)).count()
    }

    pub fn total_newton(&self) -> usize {
        self.steps.iter().map(|s| s.newton_iters).sum()
    }

    pub fn total_gmres(&self) -> usize {
        self.steps.iter().map(SolveStats::total_gmres).sum()
    }

    /// Mean Newton iterations per effective step.
    pub fn avg_newton_per_step(&self) -> f64 {
        self.total_newton() as f64 / self.effective_steps().max(1) as f64
    }

    /// Mean GMRES iterations per effective step, summed over its Newton steps.
    pub fn avg_gmres_per_step(&self) -> f64 {
        self.total_gmres() as f64 / self.effective_steps().max(1) as f64
    }

    /// Mean GMRES iterations per Newton step over all steps.
    pub fn avg_gmres(&self) -> f64 {
        let n = self.total_newton();
        if n == 0 {
            0.0
        } else {
            self.total_gmres() as f64 / n as f64
        }
    }

    pub fn monotone(&self) -> bool {
        self.steps.iter().all(SolveStats::monotone)
    }
}

#[derive(Clone, Debug)]
pub struct Outcome<S> {
    pub state: Vec<f64>,
    pub stats: S,
    pub converged: bool,
}

/// Plain Newton iteration with full steps, each linear solve by GMRES
/// right-preconditioned with `cfg.variant`.
pub fn newton(disc: &Discretization, x0: Vec<f64>, tol: f64, cfg: &NewtonConfig) -> Result<Outcome<SolveStats>> {
    cfg.validate()?;
    let mut x = x0;
    let mut r = disc.residual(&x);
    let mut norm = norm2(&r);
    let mut stats = SolveStats {
        residual_history: vec![norm],
        gmres_converged: true,
        ..Default::default()
    };
    while !(norm <= tol) && stats.newton_iters < cfg.max_iters {
        if !norm.is_finite() {
            break;
        }
        let jac = disc.jacobian(&x);
        let pre = Preconditioner::new(&jac, cfg.variant)?;
        r.iter_mut().for_each(|v| *v = -*v);
        let lin = gmres(&jac, &pre, &r, None, &cfg.gmres)?;
        x.iter_mut().zip(&lin.x).for_each(|(a, d)| *a += d);
        stats.newton_iters += 1;
        stats.gmres_iters.push(lin.iterations);
        stats.gmres_converged &= lin.converged;
        r = disc.residual(&x);
        norm = norm2(&r);
        stats.residual_history.push(norm);
    }
    Ok(Outcome {
        state: x,
        stats,
        converged: norm <= tol,
    })
}

/// Solves all time steps simultaneously from the equilibrium initial guess.
pub fn solve_all_at_once(disc: &Discretization, cfg: &NewtonConfig) -> Result<Outcome<SolveStats>> {
    newton(disc, disc.initial_guess(), cfg.abs_tol, cfg)
}

/// Backward-Euler time-stepping, each step warm-started from the previous
/// one and solved to `abs_tol/√N_t`.
///
/// The returned state stacks the step solutions in the space-time layout.
/// On a failed step the remaining slabs are left zero.
pub fn solve_sequential(disc: &Discretization, cfg: &NewtonConfig) -> Result<Outcome<SequentialStats>> {
    cfg.validate()?;
    let tol = cfg.abs_tol / (disc.nt as f64).sqrt();
    let s = &disc.spatial;
    let mut state = disc.layout.zeros();
    let mut stats = SequentialStats::default();
    let mut guess = s.equilibrium.clone();
    let (mut u_prev, mut a_prev) = (disc.u_init.clone(), disc.a_init.clone());
    for k in 0..disc.nt {
        let step = disc.single_step(&u_prev, &a_prev);
        let out = newton(&step, guess, tol, cfg)?;
        stats.steps.push(out.stats);
        state[disc.layout.slab(k)].copy_from_slice(&out.state);
        if !out.converged {
            stats.failed_step = Some(k);
            return Ok(Outcome {
                state,
                stats,
                converged: false,
            });
        }
        let l = step.lifted(&out.state);
        u_prev = l.u;
        a_prev = l.a;
        guess = out.state;
    }
    Ok(Outcome {
        state,
        stats,
        converged: true,
    })
}

/// `(N_NL^ST / N̄_NL^0, N_L^ST / N̄_L^0)`: total all-at-once iterations over
/// the sequential per-effective-step averages.
pub fn compute_overhead_ratios(st: &SolveStats, seq: &SequentialStats) -> Result<(f64, f64)> {
    let eff = seq.effective_steps();
    if eff == 0 {
        return Err(Error::config("sequential run has no effective time steps"));
    }
    let newton = st.newton_iters as f64 / (seq.total_newton() as f64 / eff as f64);
    let gmres = st.total_gmres() as f64 / (seq.total_gmres() as f64 / eff as f64);
    Ok((newton, gmres))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step(newton: usize, gmres: &[usize]) -> SolveStats {
        SolveStats {
            newton_iters: newton,
            gmres_iters: gmres.to_vec(),
            ..Default::default()
        }
    }

    #[test]
    fn synthetic_ratios() {
        let st = step(6, &[2, 2, 2, 2, 2, 2]);
        let seq = SequentialStats {
            steps: vec![step(3, &[1, 1, 2]), step(3, &[2, 1, 1]), step(0, &[])],
            failed_step: None,
        };
        assert_eq!(seq.effective_steps(), 2);
        assert_eq!(compute_overhead_ratios(&st, &seq).unwrap(), (2.0, 3.0));
    }

    #[test]
    fn no_effective_steps_is_an_error() {
        let seq = SequentialStats {
            steps: vec![step(0, &[])],
            failed_step: None,
        };
        assert!(compute_overhead_ratios(&step(1, &[1]), &seq).is_err());
    }

    #[test]
    fn averages() {
        let s = step(2, &[3, 4]);
        assert_eq!(s.total_gmres(), 7);
        assert_eq!(s.avg_gmres(), 3.5);
        assert_eq!(step(0, &[]).avg_gmres(), 0.0);
    }
}
