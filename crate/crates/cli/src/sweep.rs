//! Parameter sweeps over `(dx, dt, T)` in space-time and sequential modes.

use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use stmhd_core::problems::{Problem, ProblemKind};
use stmhd_core::solver::{compute_overhead_ratios, solve_all_at_once, solve_sequential, Outcome, SequentialStats, SolveStats};
use stmhd_core::spacetime::{step_count, Discretization, MeshSpec, SpatialDisc};

use crate::config::{ExperimentConfig, Mode};
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Converged,
    NotConverged,
    /// The solver aborted, e.g. on a singular factorization.
    Failed,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Converged => "converged",
            Status::NotConverged => "not_converged",
            Status::Failed => "failed",
        })
    }
}

/// Which solve a row reports. `Both` rows carry only the overhead ratios.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowMode {
    SpaceTime,
    Sequential,
    Both,
}

impl fmt::Display for RowMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RowMode::SpaceTime => "spacetime",
            RowMode::Sequential => "sequential",
            RowMode::Both => "both",
        })
    }
}

/// One CSV row.
///
/// Space-time rows report total Newton iterations. Sequential rows report
/// Newton iterations per effective step. `avg_gmres` is always per Newton
/// iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub problem: ProblemKind,
    pub dx: f64,
    pub dt: f64,
    pub t_final: f64,
    pub nt: usize,
    pub mode: RowMode,
    pub newton: Option<f64>,
    pub avg_gmres: Option<f64>,
    pub effective_steps: Option<usize>,
    pub newton_ratio: Option<f64>,
    pub gmres_ratio: Option<f64>,
    pub status: Status,
    pub wall_s: Option<f64>,
}

impl ResultRow {
    fn empty(problem: ProblemKind, (dx, dt, t_final): (f64, f64, f64), nt: usize, mode: RowMode) -> Self {
        Self {
            problem,
            dx,
            dt,
            t_final,
            nt,
            mode,
            newton: None,
            avg_gmres: None,
            effective_steps: None,
            newton_ratio: None,
            gmres_ratio: None,
            status: Status::Failed,
            wall_s: None,
        }
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let v = f();
    (v, start.elapsed().as_secs_f64())
}

fn status(converged: bool) -> Status {
    if converged {
        Status::Converged
    } else {
        Status::NotConverged
    }
}

fn report_failure(row: &ResultRow, e: &stmhd_core::Error) {
    eprintln!("{} dx={} dt={} T={}: {e}", row.mode, row.dx, row.dt, row.t_final);
}

/// A solve that may not have run, with its wall time.
type Timed<S> = Option<(stmhd_core::Result<Outcome<S>>, f64)>;

fn cell_rows(cfg: &ExperimentConfig, spatial: Arc<SpatialDisc>, key: (f64, f64, f64)) -> Vec<ResultRow> {
    let (_, dt, t) = key;
    let nt = step_count(dt, t).expect("validated");
    let disc = Discretization::from_spatial(spatial, dt, nt);
    let wall = |s: f64| cfg.timings.then_some(s);
    let run_st = || timed(|| solve_all_at_once(&disc, &cfg.solver));
    let run_seq = || timed(|| solve_sequential(&disc, &cfg.solver));
    let (st, seq): (Timed<SolveStats>, Timed<SequentialStats>) = match cfg.mode {
        Mode::SpaceTime => (Some(run_st()), None),
        Mode::Sequential => (None, Some(run_seq())),
        Mode::Both => {
            let (a, b) = rayon::join(run_st, run_seq);
            (Some(a), Some(b))
        }
    };

    let mut rows = Vec::new();
    if let Some((res, secs)) = &st {
        let mut row = ResultRow::empty(cfg.problem, key, nt, RowMode::SpaceTime);
        row.wall_s = wall(*secs);
        match res {
            Ok(out) => {
                row.newton = Some(out.stats.newton_iters as f64);
                row.avg_gmres = Some(out.stats.avg_gmres());
                row.status = status(out.converged);
            }
            Err(e) => report_failure(&row, e),
        }
        rows.push(row);
    }
    if let Some((res, secs)) = &seq {
        let mut row = ResultRow::empty(cfg.problem, key, nt, RowMode::Sequential);
        row.wall_s = wall(*secs);
        match res {
            Ok(out) => {
                row.newton = Some(out.stats.avg_newton_per_step());
                row.avg_gmres = Some(out.stats.avg_gmres());
                row.effective_steps = Some(out.stats.effective_steps());
                row.status = status(out.converged);
            }
            Err(e) => report_failure(&row, e),
        }
        rows.push(row);
    }
    if let (Some((Ok(st), _)), Some((Ok(seq), _))) = (&st, &seq) {
        let mut row = ResultRow::empty(cfg.problem, key, nt, RowMode::Both);
        row.effective_steps = Some(seq.stats.effective_steps());
        if let Ok((rn, rg)) = compute_overhead_ratios(&st.stats, &seq.stats) {
            row.newton_ratio = Some(rn);
            row.gmres_ratio = Some(rg);
            row.status = status(st.converged && seq.converged);
        }
        rows.push(row);
    } else if cfg.mode == Mode::Both {
        rows.push(ResultRow::empty(cfg.problem, key, nt, RowMode::Both));
    }
    rows
}

/// Runs every `(dx, dt, T)` cell, `dx` outermost and `T` innermost.
///
/// Cells run in parallel; the returned order does not depend on completion
/// order. Solver failures are recorded in the row status.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>, CliError> {
    cfg.validate()?;
    let problem = Problem::new(cfg.problem);
    let spatial: Vec<Arc<SpatialDisc>> = cfg
        .dx
        .par_iter()
        .map(|&dx| SpatialDisc::new(problem, MeshSpec::Spacing(dx), cfg.forcing).map(Arc::new))
        .collect::<stmhd_core::Result<_>>()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let cells: Vec<(usize, (f64, f64, f64))> = cfg
        .dx
        .iter()
        .enumerate()
        .flat_map(|(i, &dx)| cfg.dt.iter().flat_map(move |&dt| cfg.t_final.iter().map(move |&t| (i, (dx, dt, t)))))
        .collect();
    let rows: Vec<Vec<ResultRow>> = cells
        .into_par_iter()
        .map(|(i, key)| cell_rows(cfg, spatial[i].clone(), key))
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

/// Whether every row converged.
pub fn all_converged(rows: &[ResultRow]) -> bool {
    rows.iter().all(|r| r.status == Status::Converged)
}
