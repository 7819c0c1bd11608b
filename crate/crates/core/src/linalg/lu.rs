//! Sparse LU factorization with partial pivoting.
//!
//! The matrix is symmetrically permuted with reverse Cuthill-McKee, which on
//! the structured finite-element meshes used here yields a narrow band. The
//! permuted matrix is then factored in band storage with row interchanges,
//! so fill is confined to `kl` extra super-diagonals.

use std::collections::VecDeque;

use super::{CsrMatrix, LinalgError, SINGULAR_RTOL};

/// Reverse Cuthill-McKee ordering of the symmetrized pattern of `a`.
///
/// Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            if i != j && v != 0.0 {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();

    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));

    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        let start = pseudo_peripheral(seed, &adj, &degree);
        let mut queue = VecDeque::new();
        visited[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (degree[w], w));
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// George-Liu search for a node of (nearly) maximal eccentricity within the
/// connected component of `seed`.
fn pseudo_peripheral(seed: usize, adj: &[Vec<usize>], degree: &[usize]) -> usize {
    let mut current = seed;
    let mut ecc = 0;
    for _ in 0..8 {
        let levels = bfs_levels(current, adj);
        let depth = *levels.iter().map(|(_, l)| l).max().unwrap_or(&0);
        if depth <= ecc && current != seed {
            break;
        }
        ecc = depth;
        let candidate = levels
            .iter()
            .filter(|(_, l)| *l == depth)
            .map(|(v, _)| *v)
            .min_by_key(|&v| (degree[v], v))
            .unwrap_or(current);
        if candidate == current {
            break;
        }
        current = candidate;
    }
    current
}

fn bfs_levels(start: usize, adj: &[Vec<usize>]) -> Vec<(usize, usize)> {
    let mut seen = std::collections::HashMap::new();
    let mut queue = VecDeque::new();
    seen.insert(start, 0usize);
    queue.push_back(start);
    let mut out = Vec::new();
    while let Some(v) = queue.pop_front() {
        let l = seen[&v];
        out.push((v, l));
        for &w in &adj[v] {
            if let std::collections::hash_map::Entry::Vacant(e) = seen.entry(w) {
                e.insert(l + 1);
                queue.push_back(w);
            }
        }
    }
    out
}

/// LU factors of a square sparse matrix.
#[derive(Clone, Debug)]
pub struct SparseLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    /// Row `i` holds columns `i - kl ..= i + kl + ku` of the working matrix.
    band: Vec<f64>,
    /// `perm[new] = old`
    perm: Vec<usize>,
    pivots: Vec<usize>,
}

impl SparseLu {
    pub fn factor(a: &CsrMatrix) -> Result<Self, LinalgError> {
        if a.nrows() != a.ncols() {
            return Err(LinalgError::Shape(format!(
                "LU needs a square matrix, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let n = a.nrows();
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }

        let (mut kl, mut ku) = (0usize, 0usize);
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if v == 0.0 {
                    continue;
                }
                let (r, c) = (inv[i], inv[j]);
                if r > c {
                    kl = kl.max(r - c);
                } else {
                    ku = ku.max(c - r);
                }
            }
        }
        let width = 2 * kl + ku + 1;
        let mut band = vec![0.0; n * width];
        for i in 0..n {
            let (cols, vals) = a.row(i);
            let r = inv[i];
            for (&j, &v) in cols.iter().zip(vals) {
                if v == 0.0 {
                    continue;
                }
                let c = inv[j];
                band[r * width + (c + kl - r)] += v;
            }
        }

        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        let at = |row: usize, col: usize| row * width + col + kl - row;
        let mut pivots = vec![0usize; n];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + kl + ku).min(n - 1);
            let (mut p, mut best) = (k, band[at(k, k)].abs());
            for i in k + 1..=last_row {
                let v = band[at(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= scale * SINGULAR_RTOL {
                return Err(LinalgError::Singular { row: perm[k] });
            }
            pivots[k] = p;
            if p != k {
                for c in k..=last_col {
                    band.swap(at(k, c), at(p, c));
                }
            }
            let pivot = band[at(k, k)];
            for i in k + 1..=last_row {
                let l = band[at(i, k)] / pivot;
                band[at(i, k)] = l;
                if l != 0.0 {
                    for c in k + 1..=last_col {
                        band[at(i, c)] -= l * band[at(k, c)];
                    }
                }
            }
        }
        Ok(Self {
            n,
            kl,
            ku,
            width,
            band,
            perm,
            pivots,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Lower and upper bandwidth of the permuted matrix.
    pub fn bandwidth(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let (n, kl, ku, width) = (self.n, self.kl, self.ku, self.width);
        assert_eq!(b.len(), n);
        let at = |row: usize, col: usize| row * width + col + kl - row;
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                y.swap(k, p);
            }
            let yk = y[k];
            if yk != 0.0 {
                for i in k + 1..=(k + kl).min(n.saturating_sub(1)) {
                    y[i] -= self.band[at(i, k)] * yk;
                }
            }
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for c in i + 1..=(i + kl + ku).min(n - 1) {
                s -= self.band[at(i, c)] * y[c];
            }
            y[i] = s / self.band[at(i, i)];
        }
        for (new, &old) in self.perm.iter().enumerate() {
            b[old] = y[new];
        }
    }
}
