use stmhd_core::linalg::norm2;
use stmhd_core::precond::Variant;
use stmhd_core::problems::{Problem, ProblemKind};
use stmhd_core::solver::{compute_overhead_ratios, solve_all_at_once, solve_sequential, NewtonConfig};
use stmhd_core::spacetime::{Discretization, Forcing, MeshSpec};

fn disc(kind: ProblemKind, dx: f64, dt: f64, t: f64) -> Discretization {
    Discretization::new(Problem::new(kind), MeshSpec::Spacing(dx), dt, t, Forcing::Balanced).unwrap()
}

fn rel(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm2(&d) / norm2(a).max(f64::MIN_POSITIVE)
}

#[test]
fn one_step_sequential_equals_all_at_once() {
    for kind in ProblemKind::ALL {
        let d = disc(kind, 0.25, 0.25, 0.25);
        let cfg = NewtonConfig::default();
        let st = solve_all_at_once(&d, &cfg).unwrap();
        let seq = solve_sequential(&d, &cfg).unwrap();
        assert!(st.converged && seq.converged);
        assert!(rel(&st.state, &seq.state) < 1e-9);
        assert_eq!(st.stats.newton_iters, seq.stats.steps[0].newton_iters);
        let (rn, rg) = compute_overhead_ratios(&st.stats, &seq.stats).unwrap();
        assert_eq!((rn, rg), (1.0, 1.0));
    }
}

#[test]
fn sequential_solution_solves_the_space_time_system() {
    let d = disc(ProblemKind::TearingMode, 0.25, 0.25, 1.0);
    let cfg = NewtonConfig::default();
    let seq = solve_sequential(&d, &cfg).unwrap();
    assert!(seq.converged);
    assert!(norm2(&d.residual(&seq.state)) <= 1e-10);
    let st = solve_all_at_once(&d, &cfg).unwrap();
    assert!(rel(&st.state, &seq.state) < 1e-6);
}

#[test]
fn runs_are_deterministic() {
    let d = disc(ProblemKind::IslandCoalescence, 0.25, 0.25, 0.5);
    let cfg = NewtonConfig::default();
    let a = solve_all_at_once(&d, &cfg).unwrap();
    let b = solve_all_at_once(&d, &cfg).unwrap();
    assert_eq!(a.state, b.state);
    assert_eq!(a.stats, b.stats);
}

#[test]
fn newton_residuals_decrease() {
    for kind in ProblemKind::ALL {
        let d = disc(kind, 0.25, 0.125, 0.5);
        let out = solve_all_at_once(&d, &NewtonConfig::default()).unwrap();
        assert!(out.converged && out.stats.monotone(), "{:?}", out.stats.residual_history);
        assert!(out.stats.gmres_converged);
        assert!(out.stats.final_residual() <= 1e-10);
    }
}

#[test]
fn variants_need_similar_iterations() {
    let d = disc(ProblemKind::TearingMode, 0.25, 0.25, 1.0);
    let count = |variant| {
        let cfg = NewtonConfig {
            variant,
            ..Default::default()
        };
        let out = solve_all_at_once(&d, &cfg).unwrap();
        assert!(out.converged, "{variant:?}");
        out.stats.avg_gmres()
    };
    let base = count(Variant::UpperTriangular);
    for v in [Variant::Full, Variant::Simplified] {
        let n = count(v);
        assert!(n <= base + 2.0, "{v:?}: {n} vs {base}");
    }
}

#[test]
fn iteration_cap_reports_non_convergence() {
    let d = disc(ProblemKind::TearingMode, 0.25, 0.25, 0.5);
    let cfg = NewtonConfig {
        max_iters: 1,
        abs_tol: 1e-14,
        ..Default::default()
    };
    let out = solve_all_at_once(&d, &cfg).unwrap();
    assert!(!out.converged);
    assert_eq!(out.stats.newton_iters, 1);
    let seq = solve_sequential(&d, &cfg).unwrap();
    assert!(!seq.converged);
    assert_eq!(seq.stats.failed_step, Some(0));
}

#[test]
fn galerkin_forcing_converges() {
    let d = Discretization::new(Problem::tearing_mode(), MeshSpec::Spacing(0.25), 0.25, 0.5, Forcing::Galerkin).unwrap();
    let out = solve_all_at_once(&d, &NewtonConfig::default()).unwrap();
    assert!(out.converged);
}

#[test]
fn invalid_config_is_rejected() {
    let d = disc(ProblemKind::TearingMode, 0.25, 0.25, 0.25);
    let cfg = NewtonConfig {
        max_iters: 0,
        ..Default::default()
    };
    assert!(solve_all_at_once(&d, &cfg).is_err());
    assert!(Discretization::new(Problem::tearing_mode(), MeshSpec::Spacing(0.25), 0.3, 1.0, Forcing::Balanced).is_err());
}
