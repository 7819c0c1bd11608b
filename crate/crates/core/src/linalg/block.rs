//! Layout of space-time vectors.
//!
//! A space-time vector stacks `nt` slabs; each slab holds the velocity,
//! pressure, current and potential coefficients in that order. Views are
//! plain subslices of one contiguous buffer.

use std::ops::Range;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Field {
    U,
    P,
    J,
    A,
}

impl Field {
    pub const ALL: [Field; 4] = [Field::U, Field::P, Field::J, Field::A];

    fn index(self) -> usize {
        match self {
            Field::U => 0,
            Field::P => 1,
            Field::J => 2,
            Field::A => 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockLayout {
    pub nt: usize,
    pub sizes: [usize; 4],
}

impl BlockLayout {
    pub fn new(nt: usize, n_u: usize, n_p: usize, n_j: usize, n_a: usize) -> Self {
        Self {
            nt,
            sizes: [n_u, n_p, n_j, n_a],
        }
    }

    /// Same spatial layout with a different number of slabs.
    pub fn with_nt(&self, nt: usize) -> Self {
        Self { nt, sizes: self.sizes }
    }

    pub fn size(&self, f: Field) -> usize {
        self.sizes[f.index()]
    }

    pub fn slab_len(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.nt * self.slab_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn zeros(&self) -> Vec<f64> {
        vec![0.0; self.len()]
    }

    /// Offset of `f` inside a slab.
    pub fn field_offset(&self, f: Field) -> usize {
        self.sizes[..f.index()].iter().sum()
    }

    /// Range of slab `k` (0-based) in the full vector.
    pub fn slab(&self, k: usize) -> Range<usize> {
        assert!(k < self.nt, "slab {k} out of range for nt = {}", self.nt);
        let s = k * self.slab_len();
        s..s + self.slab_len()
    }

    /// Range of field `f` in slab `k` of the full vector.
    pub fn range(&self, k: usize, f: Field) -> Range<usize> {
        let s = self.slab(k).start + self.field_offset(f);
        s..s + self.size(f)
    }

    /// Range of field `f` within a single slab vector.
    pub fn local(&self, f: Field) -> Range<usize> {
        let s = self.field_offset(f);
        s..s + self.size(f)
    }

    pub fn view<'a>(&self, v: &'a [f64], k: usize, f: Field) -> &'a [f64] {
        &v[self.range(k, f)]
    }

    pub fn view_mut<'a>(&self, v: &'a mut [f64], k: usize, f: Field) -> &'a mut [f64] {
        &mut v[self.range(k, f)]
    }

    /// Splits a full vector into its slabs.
    pub fn slabs<'a>(&self, v: &'a [f64]) -> std::slice::Chunks<'a, f64> {
        assert_eq!(v.len(), self.len());
        v.chunks(self.slab_len().max(1))
    }

    pub fn slabs_mut<'a>(&self, v: &'a mut [f64]) -> std::slice::ChunksMut<'a, f64> {
        assert_eq!(v.len(), self.len());
        v.chunks_mut(self.slab_len().max(1))
    }

    /// Splits one slab into its four field segments.
    pub fn split<'a>(&self, slab: &'a [f64]) -> [&'a [f64]; 4] {
        let [nu, np, nj, _] = self.sizes;
        let (u, rest) = slab.split_at(nu);
        let (p, rest) = rest.split_at(np);
        let (j, a) = rest.split_at(nj);
        [u, p, j, a]
    }

    pub fn split_mut<'a>(&self, slab: &'a mut [f64]) -> [&'a mut [f64]; 4] {
        let [nu, np, nj, _] = self.sizes;
        let (u, rest) = slab.split_at_mut(nu);
        let (p, rest) = rest.split_at_mut(np);
        let (j, a) = rest.split_at_mut(nj);
        [u, p, j, a]
    }

    /// Gathers field `f` over all slabs into one contiguous vector.
    pub fn gather(&self, v: &[f64], f: Field) -> Vec<f64> {
        (0..self.nt).flat_map(|k| self.view(v, k, f).iter().copied()).collect()
    }

    /// Inverse of [`gather`](Self::gather).
    pub fn scatter(&self, field_data: &[f64], f: Field, v: &mut [f64]) {
        let n = self.size(f);
        assert_eq!(field_data.len(), n * self.nt);
        for k in 0..self.nt {
            self.view_mut(v, k, f).copy_from_slice(&field_data[k * n..(k + 1) * n]);
        }
    }
}
