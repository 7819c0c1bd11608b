//! Lagrange bases on the reference triangle.

use crate::linalg::DenseMatrix;

/// Nodal Lagrange basis of degree `k` on `(0,0), (1,0), (0,1)`.
///
/// Nodes are the lattice points `(a/k, b/k)` with `a + b ≤ k`, ordered by
/// `b` then `a`. Basis functions are stored as monomial coefficients.
#[derive(Clone, Debug)]
pub struct LagrangeBasis {
    degree: usize,
    lattice: Vec<(usize, usize)>,
    exponents: Vec<(i32, i32)>,
    /// `coeffs[(m, i)]` multiplies monomial `m` in basis function `i`.
    coeffs: DenseMatrix,
}

impl LagrangeBasis {
    pub fn new(degree: usize) -> Self {
        assert!((1..=3).contains(&degree), "supported degrees are 1..=3");
        let k = degree;
        let mut lattice = Vec::new();
        for b in 0..=k {
            for a in 0..=(k - b) {
                lattice.push((a, b));
            }
        }
        let mut exponents = Vec::new();
        for total in 0..=k as i32 {
            for q in 0..=total {
                exponents.push((total - q, q));
            }
        }
        let n = lattice.len();
        let mut vdm = DenseMatrix::zeros(n, n);
        for (i, &(a, b)) in lattice.iter().enumerate() {
            let (x, y) = (a as f64 / k as f64, b as f64 / k as f64);
            for (m, &(p, q)) in exponents.iter().enumerate() {
                vdm[(i, m)] = x.powi(p) * y.powi(q);
            }
        }
        let coeffs = vdm.lu().expect("Lagrange Vandermonde is nonsingular").inverse();
        Self {
            degree,
            lattice,
            exponents,
            coeffs,
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.lattice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lattice.is_empty()
    }

    /// Integer lattice coordinates `(a, b)` of each node.
    pub fn lattice(&self) -> &[(usize, usize)] {
        &self.lattice
    }

    pub fn node(&self, i: usize) -> [f64; 2] {
        let (a, b) = self.lattice[i];
        let k = self.degree as f64;
        [a as f64 / k, b as f64 / k]
    }

    pub fn eval(&self, p: [f64; 2]) -> Vec<f64> {
        let mono: Vec<f64> = self
            .exponents
            .iter()
            .map(|&(a, b)| p[0].powi(a) * p[1].powi(b))
            .collect();
        self.combine(&mono)
    }

    /// Reference gradients `(∂ξ, ∂η)` of every basis function.
    pub fn grad(&self, p: [f64; 2]) -> Vec<[f64; 2]> {
        let pw = |x: f64, e: i32| if e <= 0 { 0.0 } else { e as f64 * x.powi(e - 1) };
        let dx: Vec<f64> = self
            .exponents
            .iter()
            .map(|&(a, b)| pw(p[0], a) * p[1].powi(b))
            .collect();
        let dy: Vec<f64> = self
            .exponents
            .iter()
            .map(|&(a, b)| p[0].powi(a) * pw(p[1], b))
            .collect();
        let gx = self.combine(&dx);
        let gy = self.combine(&dy);
        gx.into_iter().zip(gy).map(|(a, b)| [a, b]).collect()
    }

    fn combine(&self, mono: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| (0..n).map(|m| self.coeffs[(m, i)] * mono[m]).sum())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronecker_property() {
        for k in 1..=3 {
            let b = LagrangeBasis::new(k);
            for i in 0..b.len() {
                let v = b.eval(b.node(i));
                for (j, vj) in v.iter().enumerate() {
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!((vj - e).abs() < 1e-12, "degree {k}");
                }
            }
        }
    }

    #[test]
    fn partition_of_unity_and_zero_gradient_sum() {
        let b = LagrangeBasis::new(3);
        let p = [0.21, 0.37];
        assert!((b.eval(p).iter().sum::<f64>() - 1.0).abs() < 1e-13);
        let g = b.grad(p);
        assert!(g.iter().map(|v| v[0]).sum::<f64>().abs() < 1e-12);
        assert!(g.iter().map(|v| v[1]).sum::<f64>().abs() < 1e-12);
    }
}
