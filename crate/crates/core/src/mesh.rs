//! Structured crossed-diagonal triangulations of a rectangle, plus the
//! degenerate one-point "homogeneous" mesh where every gradient vanishes.

use crate::error::{Error, Result};
use std::collections::HashMap;

#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    /// Topological boundary of the triangulation.
    pub boundary_vertices: Vec<usize>,
    pub is_boundary: Vec<bool>,
    pub areas: Vec<f64>,
    /// P1 basis gradients per triangle, one 2-vector per local vertex.
    pub grads: Vec<[[f64; 2]; 3]>,
    pub homogeneous: bool,
}

impl Mesh {
    /// Crossed-diagonal triangulation of [0,lx]×[0,ly] with nx×ny cells,
    /// each split into four triangles around the cell center. Vertex order:
    /// grid points row-major, then cell centers row-major.
    pub fn structured(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Mesh> {
        if lx <= 0.0 || ly <= 0.0 {
            return Err(Error::Config(format!("mesh extents must be positive, got {lx}x{ly}")));
        }
        if nx < 1 || ny < 1 {
            return Err(Error::Config(format!("mesh cells must be >= 1, got {nx}x{ny}")));
        }
        let hx = lx / nx as f64;
        let hy = ly / ny as f64;
        let grid = |i: usize, j: usize| j * (nx + 1) + i;
        let n_grid = (nx + 1) * (ny + 1);
        let center = |i: usize, j: usize| n_grid + j * nx + i;

        let mut vertices = Vec::with_capacity(n_grid + nx * ny);
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push([i as f64 * hx, j as f64 * hy]);
            }
        }
        for j in 0..ny {
            for i in 0..nx {
                vertices.push([(i as f64 + 0.5) * hx, (j as f64 + 0.5) * hy]);
            }
        }

        let mut triangles = Vec::with_capacity(4 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let sw = grid(i, j);
                let se = grid(i + 1, j);
                let ne = grid(i + 1, j + 1);
                let nw = grid(i, j + 1);
                let c = center(i, j);
                triangles.push([sw, se, c]);
                triangles.push([se, ne, c]);
                triangles.push([ne, nw, c]);
                triangles.push([nw, sw, c]);
            }
        }

        Mesh::finish(vertices, triangles, false)
    }

    /// One-point mesh of prescribed area: a single pseudo-element whose
    /// basis gradients are zero, so every gradient operator vanishes and all
    /// quadratures reduce to area × nodal value.
    pub fn homogeneous(area: f64) -> Result<Mesh> {
        if area <= 0.0 {
            return Err(Error::Config(format!("homogeneous area must be positive, got {area}")));
        }
        Ok(Mesh {
            vertices: vec![[0.0, 0.0]],
            triangles: vec![[0, 0, 0]],
            boundary_vertices: vec![0],
            is_boundary: vec![true],
            areas: vec![area],
            grads: vec![[[0.0, 0.0]; 3]],
            homogeneous: true,
        })
    }

    fn finish(vertices: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>, homogeneous: bool) -> Result<Mesh> {
        let mut areas = Vec::with_capacity(triangles.len());
        let mut grads = Vec::with_capacity(triangles.len());
        for tri in &triangles {
            let a = vertices[tri[0]];
            let b = vertices[tri[1]];
            let c = vertices[tri[2]];
            let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
            let area = 0.5 * det;
            if area <= 0.0 {
                return Err(Error::Config(format!("non-positive element area {area}")));
            }
            areas.push(area);
            grads.push([
                [(b[1] - c[1]) / det, (c[0] - b[0]) / det],
                [(c[1] - a[1]) / det, (a[0] - c[0]) / det],
                [(a[1] - b[1]) / det, (b[0] - a[0]) / det],
            ]);
        }

        // Boundary = edges referenced by exactly one triangle.
        let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
        for tri in &triangles {
            for (i, j) in [(0, 1), (1, 2), (2, 0)] {
                let (a, b) = (tri[i].min(tri[j]), tri[i].max(tri[j]));
                *edge_count.entry((a, b)).or_insert(0) += 1;
            }
        }
        let mut is_boundary = vec![false; vertices.len()];
        for (&(a, b), &count) in &edge_count {
            if count == 1 {
                is_boundary[a] = true;
                is_boundary[b] = true;
            }
        }
        let boundary_vertices: Vec<usize> = (0..vertices.len()).filter(|&v| is_boundary[v]).collect();

        Ok(Mesh {
            vertices,
            triangles,
            boundary_vertices,
            is_boundary,
            areas,
            grads,
            homogeneous,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    /// Plain-text listing, one record per line, for external plotting.
    pub fn export_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "# mesh vertices={} triangles={}\n",
            self.n_vertices(),
            self.n_triangles()
        ));
        for v in &self.vertices {
            out.push_str(&format!("v {:.17e} {:.17e}\n", v[0], v[1]));
        }
        for t in &self.triangles {
            out.push_str(&format!("t {} {} {}\n", t[0], t[1], t[2]));
        }
        for &b in &self.boundary_vertices {
            out.push_str(&format!("b {b}\n"));
        }
        out
    }
}
