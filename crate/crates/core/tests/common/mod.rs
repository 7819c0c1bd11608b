//! Independent oracles: Lagrange bases from Vandermonde inversion on the
//! physical element nodes, integrated with the closed-form monomial moments
//! of the reference triangle.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use stmhd_core::fem::FeSpace;
use stmhd_core::linalg::CsrMatrix;

/// Exponents `(a, b)` of all monomials `ξ^a η^b` with `a + b ≤ p`.
pub fn monomials(p: usize) -> Vec<(usize, usize)> {
    (0..=p).flat_map(|d| (0..=d).map(move |b| (d - b, b))).collect()
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `∫_T ξ^a η^b` over the reference triangle.
pub fn moment(a: usize, b: usize) -> f64 {
    factorial(a) * factorial(b) / factorial(a + b + 2)
}

/// Polynomial as `(exponent, coefficient)` pairs.
pub type Poly = Vec<((usize, usize), f64)>;

pub fn derivative(p: &Poly, axis: usize) -> Poly {
    p.iter()
        .filter_map(|&((a, b), c)| match axis {
            0 if a > 0 => Some(((a - 1, b), c * a as f64)),
            1 if b > 0 => Some(((a, b - 1), c * b as f64)),
            _ => None,
        })
        .collect()
}

pub fn integrate_product(p: &Poly, q: &Poly) -> f64 {
    p.iter()
        .flat_map(|&((a, b), c)| q.iter().map(move |&((d, e), k)| c * k * moment(a + d, b + e)))
        .sum()
}

/// Affine element map `x = v0 + J ξ`.
pub struct Affine {
    pub v0: [f64; 2],
    pub jac: DMatrix<f64>,
}

impl Affine {
    pub fn of(space: &FeSpace, t: usize) -> Self {
        let mesh = space.mesh();
        let tri = mesh.triangles()[t];
        let v = mesh.vertices();
        let (a, b, c) = (v[tri[0]], v[tri[1]], v[tri[2]]);
        Self {
            v0: a,
            jac: DMatrix::from_row_slice(2, 2, &[b[0] - a[0], c[0] - a[0], b[1] - a[1], c[1] - a[1]]),
        }
    }

    pub fn to_reference(&self, x: [f64; 2]) -> [f64; 2] {
        let inv = self.jac.clone().try_inverse().unwrap();
        let r = &inv * DVector::from_row_slice(&[x[0] - self.v0[0], x[1] - self.v0[1]]);
        [r[0], r[1]]
    }

    pub fn det(&self) -> f64 {
        self.jac.determinant().abs()
    }

    /// `J⁻¹`, mapping reference gradients to physical ones via its transpose.
    pub fn inverse(&self) -> DMatrix<f64> {
        self.jac.clone().try_inverse().unwrap()
    }
}

/// Lagrange basis of degree `p` interpolating at the given reference nodes.
pub fn lagrange_basis(nodes: &[[f64; 2]], p: usize) -> Vec<Poly> {
    let mons = monomials(p);
    assert_eq!(mons.len(), nodes.len());
    let n = nodes.len();
    let v = DMatrix::from_fn(n, n, |i, m| {
        let (a, b) = mons[m];
        nodes[i][0].powi(a as i32) * nodes[i][1].powi(b as i32)
    });
    let c = v.try_inverse().expect("unisolvent nodes");
    (0..n)
        .map(|i| mons.iter().enumerate().map(|(m, &e)| (e, c[(m, i)])).collect())
        .collect()
}

/// Basis of a scalar space on triangle `t`, ordered like `element_nodes`.
pub fn element_basis(space: &FeSpace, t: usize) -> (Affine, Vec<Poly>) {
    let map = Affine::of(space, t);
    let nodes: Vec<[f64; 2]> = space
        .element_nodes(t)
        .iter()
        .map(|&n| map.to_reference(space.node_coord(n)))
        .collect();
    let basis = lagrange_basis(&nodes, space.degree());
    (map, basis)
}

/// Physical gradient of a reference polynomial as a pair of polynomials.
pub fn physical_grad(map: &Affine, p: &Poly) -> [Poly; 2] {
    let inv = map.inverse();
    let (dx, dy) = (derivative(p, 0), derivative(p, 1));
    let combine = |c: usize| -> Poly {
        dx.iter()
            .map(|&(e, k)| (e, k * inv[(0, c)]))
            .chain(dy.iter().map(|&(e, k)| (e, k * inv[(1, c)])))
            .collect()
    };
    [combine(0), combine(1)]
}

fn assemble(space_r: &FeSpace, space_c: &FeSpace, entry: impl Fn(&Affine, &Poly, &Poly) -> f64) -> DMatrix<f64> {
    let (nr, nc) = (space_r.n_nodes(), space_c.n_nodes());
    let mut m = DMatrix::zeros(nr, nc);
    for t in 0..space_r.mesh().n_triangles() {
        let (map, br) = element_basis(space_r, t);
        let (_, bc) = element_basis(space_c, t);
        let (rows, cols) = (space_r.element_nodes(t), space_c.element_nodes(t));
        for (a, pa) in br.iter().enumerate() {
            for (b, pb) in bc.iter().enumerate() {
                m[(rows[a], cols[b])] += entry(&map, pa, pb);
            }
        }
    }
    m
}

/// Scalar mass matrix `∫ φ_m φ_n`.
pub fn mass(space: &FeSpace) -> DMatrix<f64> {
    cross_mass(space, space)
}

/// `∫ ψ_m χ_n` between two scalar spaces on the same mesh.
pub fn cross_mass(rows: &FeSpace, cols: &FeSpace) -> DMatrix<f64> {
    assemble(rows, cols, |map, p, q| map.det() * integrate_product(p, q))
}

/// Scalar stiffness `∫ ∇ψ_m · ∇χ_n` between two scalar spaces.
pub fn stiffness(rows: &FeSpace, cols: &FeSpace) -> DMatrix<f64> {
    assemble(rows, cols, |map, p, q| {
        let (gp, gq) = (physical_grad(map, p), physical_grad(map, q));
        map.det() * (integrate_product(&gp[0], &gq[0]) + integrate_product(&gp[1], &gq[1]))
    })
}

/// `−∫ q_m ∂_c φ_n` for a scalar pressure space and one velocity component.
pub fn divergence_component(prs: &FeSpace, vel_scalar: &FeSpace, c: usize) -> DMatrix<f64> {
    assemble(prs, vel_scalar, |map, q, phi| -map.det() * integrate_product(q, &physical_grad(map, phi)[c]))
}

pub fn to_nalgebra(m: &CsrMatrix) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        let (cols, vals) = m.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            d[(i, j)] += v;
        }
    }
    d
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    (a - b).abs().max()
}
