//! Structured triangulations of axis-aligned rectangles.
//!
//! Cell `(i, j)` of an `nx × ny` grid is split along its anti-diagonal into
//! `T1 = (v00, v10, v01)` and `T2 = (v11, v01, v10)`, both counterclockwise.
//! Vertex `(i, j)` has index `j·(nx+1) + i`.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Left, Side::Right, Side::Bottom, Side::Top];

    /// Cartesian axis normal to this side (0 = x, 1 = y).
    pub fn normal_axis(self) -> usize {
        match self {
            Side::Left | Side::Right => 0,
            Side::Bottom | Side::Top => 1,
        }
    }

    /// Outward unit normal.
    pub fn normal(self) -> [f64; 2] {
        match self {
            Side::Left => [-1.0, 0.0],
            Side::Right => [1.0, 0.0],
            Side::Bottom => [0.0, -1.0],
            Side::Top => [0.0, 1.0],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
            Side::Bottom => "bottom",
            Side::Top => "top",
        }
    }
}

impl FromStr for Side {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "left" => Ok(Side::Left),
            "right" => Ok(Side::Right),
            "bottom" => Ok(Side::Bottom),
            "top" => Ok(Side::Top),
            other => Err(Error::config(format!("unknown boundary tag '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    nx: usize,
    ny: usize,
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<([usize; 2], Side)>,
}

/// Builds a mesh of `[x0,x1]×[y0,y1]` with square cells of side `dx`.
pub fn build_rect_mesh(x0: f64, x1: f64, y0: f64, y1: f64, dx: f64) -> Result<Mesh> {
    if !(dx > 0.0) || !dx.is_finite() {
        return Err(Error::config(format!("mesh spacing must be positive, got {dx}")));
    }
    let cells = |len: f64, axis: &str| -> Result<usize> {
        let n = len / dx;
        let r = n.round();
        if r < 1.0 || (n - r).abs() > 1e-9 * n.max(1.0) {
            return Err(Error::config(format!(
                "{axis}-extent {len} is not a positive multiple of dx = {dx}"
            )));
        }
        Ok(r as usize)
    };
    let nx = cells(x1 - x0, "x")?;
    let ny = cells(y1 - y0, "y")?;
    Mesh::structured(x0, x1, y0, y1, nx, ny)
}

impl Mesh {
    /// Builds an `nx × ny` grid; cells need not be square.
    pub fn structured(x0: f64, x1: f64, y0: f64, y1: f64, nx: usize, ny: usize) -> Result<Mesh> {
        if !(x1 > x0 && y1 > y0) {
            return Err(Error::config(format!(
                "empty rectangle [{x0}, {x1}]×[{y0}, {y1}]"
            )));
        }
        if nx == 0 || ny == 0 {
            return Err(Error::config("a mesh needs at least one cell per direction"));
        }
        let (hx, hy) = ((x1 - x0) / nx as f64, (y1 - y0) / ny as f64);
        let vid = |i: usize, j: usize| j * (nx + 1) + i;
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                // Snap the far edges so the rectangle is tiled exactly.
                let x = if i == nx { x1 } else { x0 + i as f64 * hx };
                let y = if j == ny { y1 } else { y0 + j as f64 * hy };
                vertices.push([x, y]);
            }
        }
        let mut triangles = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (v00, v10, v01, v11) = (vid(i, j), vid(i + 1, j), vid(i, j + 1), vid(i + 1, j + 1));
                triangles.push([v00, v10, v01]);
                triangles.push([v11, v01, v10]);
            }
        }
        let mut boundary = Vec::with_capacity(2 * (nx + ny));
        for i in 0..nx {
            boundary.push(([vid(i, 0), vid(i + 1, 0)], Side::Bottom));
            boundary.push(([vid(i, ny), vid(i + 1, ny)], Side::Top));
        }
        for j in 0..ny {
            boundary.push(([vid(0, j), vid(0, j + 1)], Side::Left));
            boundary.push(([vid(nx, j), vid(nx, j + 1)], Side::Right));
        }
        Ok(Mesh {
            x0,
            x1,
            y0,
            y1,
            nx,
            ny,
            vertices,
            triangles,
            boundary,
        })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    /// `(x0, x1, y0, y1)`
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        (self.x0, self.x1, self.y0, self.y1)
    }

    /// Cell widths `(hx, hy)`.
    pub fn spacing(&self) -> (f64, f64) {
        (
            (self.x1 - self.x0) / self.nx as f64,
            (self.y1 - self.y0) / self.ny as f64,
        )
    }

    /// Largest cell width.
    pub fn h(&self) -> f64 {
        let (hx, hy) = self.spacing();
        hx.max(hy)
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Boundary edges with their side tags.
    pub fn boundary_edges(&self) -> &[([usize; 2], Side)] {
        &self.boundary
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|v| self.vertices[v]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    /// Cell `(i, j)` and half (0 for `T1`, 1 for `T2`) of triangle `t`.
    pub fn cell_of(&self, t: usize) -> (usize, usize, usize) {
        let c = t / 2;
        (c % self.nx, c / self.nx, t % 2)
    }

    /// Number of triangles sharing each undirected edge.
    pub fn edge_multiplicity(&self) -> std::collections::BTreeMap<[usize; 2], usize> {
        let mut count = std::collections::BTreeMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                *count.entry([a.min(b), a.max(b)]).or_insert(0) += 1;
            }
        }
        count
    }

    /// Plain-text dump for debugging.
    pub fn dump(&self) -> String {
        let mut s = String::from("vertices\n");
        for v in &self.vertices {
            let _ = writeln!(s, "{} {}", v[0], v[1]);
        }
        s.push_str("triangles\n");
        for t in &self.triangles {
            let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
        }
        s.push_str("tags\n");
        for (e, side) in &self.boundary {
            let _ = writeln!(s, "{} {} {}", e[0], e[1], side.name());
        }
        s
    }
}
