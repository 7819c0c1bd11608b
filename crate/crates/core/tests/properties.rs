//! Property tests of the linear algebra kernels and FE utilities.

mod common;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use stmhd_core::fem::FeSpace;
use stmhd_core::linalg::{gmres, BlockLayout, CsrMatrix, Field, GmresConfig, Identity, SparseLu};
use stmhd_core::mesh::Mesh;
use stmhd_core::precond::compute_alfven_scaling;
use stmhd_core::spacetime::step_count;

use common::{max_abs_diff, to_nalgebra};

fn triplets(n: usize, m: usize) -> impl Strategy<Value = Vec<(usize, usize, f64)>> {
    prop::collection::vec((0..n, 0..m, -5.0..5.0f64), 0..3 * n * m)
}

/// Random sparse matrix with a dominant diagonal.
fn dominant(n: usize) -> impl Strategy<Value = CsrMatrix> {
    triplets(n, n).prop_map(move |t| {
        let off = CsrMatrix::from_triplets(n, n, &t);
        let row_sums: Vec<f64> = (0..n).map(|i| off.row(i).1.iter().map(|v| v.abs()).sum::<f64>() + 1.0).collect();
        off.add(1.0, &CsrMatrix::from_diagonal(&row_sums), 2.0)
    })
}

fn vector(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csr_ops_match_dense(
        (n, m, k, ta, tb, tc) in (1usize..8, 1usize..8, 1usize..8)
            .prop_flat_map(|(n, m, k)| (Just(n), Just(m), Just(k), triplets(n, m), triplets(n, m), triplets(m, k))),
    ) {
        let a = CsrMatrix::from_triplets(n, m, &ta);
        let b = CsrMatrix::from_triplets(n, m, &tb);
        let c = CsrMatrix::from_triplets(m, k, &tc);
        prop_assert!(a.is_canonical());
        let dense = |t: &[(usize, usize, f64)], r, cc| {
            let mut d = DMatrix::zeros(r, cc);
            for &(i, j, v) in t { d[(i, j)] += v; }
            d
        };
        let (da, db, dc) = (dense(&ta, n, m), dense(&tb, n, m), dense(&tc, m, k));
        prop_assert!(max_abs_diff(&to_nalgebra(&a), &da) < 1e-12);
        prop_assert!(max_abs_diff(&to_nalgebra(&a.add(2.0, &b, -0.5)), &(&da * 2.0 - &db * 0.5)) < 1e-11);
        prop_assert!(max_abs_diff(&to_nalgebra(&a.matmul(&c)), &(&da * &dc)) < 1e-10);
        prop_assert!(max_abs_diff(&to_nalgebra(&a.transpose()), &da.transpose()) < 1e-12);
        let x: Vec<f64> = (0..m).map(|i| (i as f64).cos()).collect();
        let y = DVector::from_vec(a.mul_vec(&x));
        prop_assert!((y - &da * DVector::from_vec(x)).abs().max() < 1e-11);
    }

    #[test]
    fn sparse_lu_solves((a, b) in (1usize..30).prop_flat_map(|n| (dominant(n), vector(n)))) {
        let lu = SparseLu::factor(&a).unwrap();
        let x = lu.solve(&b);
        let r: Vec<f64> = a.mul_vec(&x).iter().zip(&b).map(|(p, q)| p - q).collect();
        let scale = b.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        prop_assert!(r.iter().all(|v| v.abs() <= 1e-10 * scale));
        let want = to_nalgebra(&a).lu().solve(&DVector::from_column_slice(&b)).unwrap();
        prop_assert!(x.iter().zip(want.iter()).all(|(p, q)| (p - q).abs() <= 1e-9 * scale));
    }

    #[test]
    fn gmres_terminates_within_dimension((a, b) in (1usize..25).prop_flat_map(|n| (dominant(n), vector(n)))) {
        let n = b.len();
        let cfg = GmresConfig { rel_tol: 1e-10, abs_tol: 1e-300, max_iters: n + 1, restart: None };
        let op = |x: &[f64], y: &mut [f64]| y.copy_from_slice(&a.mul_vec(x));
        let out = gmres(&op, &Identity, &b, None, &cfg).unwrap();
        prop_assert!(out.converged);
        prop_assert!(out.iterations <= n);
        let hist = &out.residual_history;
        prop_assert!(hist.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    }

    #[test]
    fn layout_gather_scatter_round_trip(
        nt in 1usize..5,
        sizes in [1usize..6, 1usize..6, 1usize..6, 1usize..6],
    ) {
        let lay = BlockLayout::new(nt, sizes[0], sizes[1], sizes[2], sizes[3]);
        let v: Vec<f64> = (0..lay.len()).map(|i| i as f64).collect();
        let mut w = lay.zeros();
        for f in Field::ALL {
            let g = lay.gather(&v, f);
            prop_assert_eq!(g.len(), nt * lay.size(f));
            for k in 0..nt {
                prop_assert_eq!(&g[k * lay.size(f)..(k + 1) * lay.size(f)], lay.view(&v, k, f));
            }
            lay.scatter(&g, f, &mut w);
        }
        prop_assert_eq!(v, w);
    }

    #[test]
    fn step_count_recovers_n(n in 1usize..4096, e in -6i32..6) {
        let t = 2f64.powi(e) * 3.0;
        prop_assert_eq!(step_count(t / n as f64, t).unwrap(), n);
    }

    #[test]
    fn step_count_rejects_fractions(n in 2usize..500) {
        let t = 1.0;
        let dt = t / (n as f64 - 0.5);
        prop_assert!(step_count(dt, t).is_err());
    }

    #[test]
    fn alfven_scaling_of_linear_potential(
        c in -3.0..3.0f64,
        d in -3.0..3.0f64,
        mu0 in 0.1..10.0f64,
        (nx, ny) in (1usize..6, 1usize..6),
    ) {
        let mesh = Arc::new(Mesh::structured(-1.0, 2.0, 0.0, 1.5, nx, ny).unwrap());
        let pot = FeSpace::scalar(mesh, 1);
        let a = pot.interpolate(|x, y| c * y + d * x + 0.3);
        let s = compute_alfven_scaling(&pot, &a, mu0);
        prop_assert!((s - (c * c + d * d) / mu0).abs() <= 1e-12 * (1.0 + s));
    }

    #[test]
    fn interpolation_is_exact_on_polynomials(
        degree in 1usize..4,
        coef in prop::collection::vec(-2.0..2.0f64, 10),
        pts in prop::collection::vec((0.0..1.0f64, 0.0..1.0f64), 5),
    ) {
        let mesh = Arc::new(Mesh::structured(0.0, 1.0, 0.0, 1.0, 3, 2).unwrap());
        let space = FeSpace::scalar(mesh, degree);
        let mons = common::monomials(degree);
        let f = |x: f64, y: f64| -> f64 {
            mons.iter().zip(&coef).map(|(&(a, b), k)| k * x.powi(a as i32) * y.powi(b as i32)).sum()
        };
        let v = space.interpolate(f);
        for (x, y) in pts {
            prop_assert!((space.eval(&v, [x, y]) - f(x, y)).abs() < 1e-11);
        }
    }
}
