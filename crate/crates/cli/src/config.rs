//! Experiment configuration: a `key = value` text file plus flag overrides.
//!
//! ```text
//! # Time refinement on the tearing mode
//! problem = tearing
//! dx      = 2^-2, 2^-3
//! dt      = 2^-2, 2^-3, 2^-4
//! T       = 1
//! mode    = both
//! precond = PT
//! out     = table1.csv
//! ```
//!
//! Lists are separated by commas or whitespace. Numbers accept `b^e`
//! notation. `#` starts a comment.

use std::collections::HashSet;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use stmhd_core::mesh::build_rect_mesh;
use stmhd_core::problems::{Problem, ProblemKind};
use stmhd_core::solver::NewtonConfig;
use stmhd_core::spacetime::{step_count, Forcing};

use crate::CliError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Mode {
    #[default]
    SpaceTime,
    Sequential,
    Both,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::SpaceTime => "spacetime",
            Mode::Sequential => "sequential",
            Mode::Both => "both",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "spacetime" | "space-time" | "st" | "all-at-once" => Ok(Mode::SpaceTime),
            "sequential" | "seq" | "timestepping" => Ok(Mode::Sequential),
            "both" => Ok(Mode::Both),
            other => Err(CliError::Config(format!("unknown mode '{other}'"))),
        }
    }
}

fn parse_forcing(s: &str) -> Result<Forcing, CliError> {
    match s.trim().to_ascii_lowercase().as_str() {
        "balanced" => Ok(Forcing::Balanced),
        "galerkin" => Ok(Forcing::Galerkin),
        other => Err(CliError::Config(format!("unknown forcing '{other}'"))),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemKind,
    pub dx: Vec<f64>,
    pub dt: Vec<f64>,
    pub t_final: Vec<f64>,
    pub mode: Mode,
    pub forcing: Forcing,
    /// Newton and GMRES settings, including the preconditioner variant.
    pub solver: NewtonConfig,
    /// CSV destination; standard output when absent.
    pub out: Option<PathBuf>,
    /// Reserved; the solver is deterministic.
    pub seed: u64,
    /// Fill the `wall_s` column.
    pub timings: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: ProblemKind::TearingMode,
            dx: Vec::new(),
            dt: Vec::new(),
            t_final: vec![1.0],
            mode: Mode::SpaceTime,
            forcing: Forcing::Balanced,
            solver: NewtonConfig::default(),
            out: None,
            seed: 0,
            timings: false,
        }
    }
}

/// Parses a number, allowing `b^e` powers such as `2^-3`.
pub fn parse_number(s: &str) -> Result<f64, CliError> {
    let s = s.trim();
    let bad = || CliError::Config(format!("invalid number '{s}'"));
    let v = match s.split_once('^') {
        Some((b, e)) => {
            let b: f64 = b.trim().parse().map_err(|_| bad())?;
            let e: f64 = e.trim().parse().map_err(|_| bad())?;
            b.powf(e)
        }
        None => s.parse().map_err(|_| bad())?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad())
    }
}

pub fn parse_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(parse_number)
        .collect()
}

fn parse_int<T: FromStr>(key: &str, s: &str) -> Result<T, CliError> {
    s.trim()
        .parse()
        .map_err(|_| CliError::Config(format!("{key}: invalid integer '{}'", s.trim())))
}

impl ExperimentConfig {
    /// Parses a configuration file's contents. Keys may appear once.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        let mut seen = HashSet::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected 'key = value'", i + 1)))?;
            let key = canonical_key(key.trim());
            if !seen.insert(key.clone()) {
                return Err(CliError::Config(format!("line {}: duplicate key '{key}'", i + 1)));
            }
            cfg.set(&key, value.trim())
                .map_err(|e| CliError::Config(format!("line {}: {}", i + 1, e.message())))?;
        }
        Ok(cfg)
    }

    /// Sets one key; used for file entries and command-line overrides alike.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let s = &mut self.solver;
        match canonical_key(key).as_str() {
            "problem" => self.problem = value.parse().map_err(|e: stmhd_core::Error| CliError::Config(strip(&e)))?,
            "dx" => self.dx = parse_list(value)?,
            "dt" => self.dt = parse_list(value)?,
            "t" => self.t_final = parse_list(value)?,
            "mode" => self.mode = value.parse()?,
            "precond" => s.variant = value.parse().map_err(|e: stmhd_core::Error| CliError::Config(strip(&e)))?,
            "forcing" => self.forcing = parse_forcing(value)?,
            "newton_tol" => s.abs_tol = parse_number(value)?,
            "newton_max_iters" => s.max_iters = parse_int(key, value)?,
            "gmres_rel_tol" => s.gmres.rel_tol = parse_number(value)?,
            "gmres_abs_tol" => s.gmres.abs_tol = parse_number(value)?,
            "gmres_max_iters" => s.gmres.max_iters = parse_int(key, value)?,
            "gmres_restart" => {
                s.gmres.restart = match value.trim().to_ascii_lowercase().as_str() {
                    "none" | "off" | "" => None,
                    v => Some(parse_int(key, v)?),
                }
            }
            "out" => self.out = Some(PathBuf::from(value.trim())),
            "seed" => self.seed = parse_int(key, value)?,
            other => return Err(CliError::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Rejects empty or non-positive lists, steps that do not tile `T` and
    /// spacings that do not tile the domain, all before any solve.
    pub fn validate(&self) -> Result<(), CliError> {
        let core = |e: stmhd_core::Error| CliError::Config(strip(&e));
        for (name, list) in [("dx", &self.dx), ("dt", &self.dt), ("T", &self.t_final)] {
            if list.is_empty() {
                return Err(CliError::Config(format!("{name} list is empty")));
            }
            if let Some(v) = list.iter().find(|v| !(**v > 0.0)) {
                return Err(CliError::Config(format!("{name} entries must be positive, got {v}")));
            }
        }
        let (x0, x1, y0, y1) = Problem::new(self.problem).domain();
        for &dx in &self.dx {
            build_rect_mesh(x0, x1, y0, y1, dx).map_err(core)?;
        }
        for &dt in &self.dt {
            for &t in &self.t_final {
                step_count(dt, t).map_err(core)?;
            }
        }
        self.solver.validate().map_err(core)
    }
}

fn canonical_key(key: &str) -> String {
    match key.to_ascii_lowercase().replace('-', "_").as_str() {
        "t_final" | "tfinal" => "t".to_string(),
        "preconditioner" | "variant" => "precond".to_string(),
        "output" => "out".to_string(),
        k => k.to_string(),
    }
}

/// Core configuration errors already carry their own prefix.
fn strip(e: &stmhd_core::Error) -> String {
    match e {
        stmhd_core::Error::Config(m) => m.clone(),
        other => other.to_string(),
    }
}
