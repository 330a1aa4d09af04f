//! Structured triangulation of a rectangle.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Triangulated rectangle `[0, Lx] × [0, Ly]`.
///
/// Node `(i, j)` has index `i + j·(nx+1)`. Every cell is split along its
/// lower-left to upper-right diagonal into two counter-clockwise triangles.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    nodes: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<bool>,
    areas: Vec<f64>,
}

pub fn build_rect_mesh(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Mesh> {
    Mesh::rectangle(nx, ny, lx, ly)
}

impl Mesh {
    pub fn rectangle(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        let mut violations = Vec::new();
        if nx < 1 || ny < 1 {
            violations.push(crate::error::Violation::new(
                "mesh.cells",
                format!("nx and ny must be >= 1 (got {nx} x {ny})"),
            ));
        }
        if !(lx > 0.0 && lx.is_finite() && ly > 0.0 && ly.is_finite()) {
            violations.push(crate::error::Violation::new(
                "mesh.lengths",
                format!("Lx and Ly must be positive and finite (got {lx}, {ly})"),
            ));
        }
        if !violations.is_empty() {
            return Err(Error::Config(violations));
        }

        let stride = nx + 1;
        let mut nodes = Vec::with_capacity(stride * (ny + 1));
        let mut boundary = Vec::with_capacity(stride * (ny + 1));
        for j in 0..=ny {
            let y = ly * j as f64 / ny as f64;
            for i in 0..=nx {
                let x = lx * i as f64 / nx as f64;
                nodes.push([x, y]);
                boundary.push(i == 0 || j == 0 || i == nx || j == ny);
            }
        }

        let mut triangles = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let n00 = i + j * stride;
                let n10 = n00 + 1;
                let n01 = n00 + stride;
                let n11 = n01 + 1;
                triangles.push([n00, n10, n11]);
                triangles.push([n00, n11, n01]);
            }
        }

        let areas = triangles
            .iter()
            .map(|t| signed_area(&nodes[t[0]], &nodes[t[1]], &nodes[t[2]]))
            .collect();

        Ok(Self {
            nx,
            ny,
            lx,
            ly,
            nodes,
            triangles,
            boundary,
            areas,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.boundary[node]
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    pub fn cells(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn extent(&self) -> (f64, f64) {
        (self.lx, self.ly)
    }

    /// Sum of element areas.
    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    /// Gradients of the three barycentric shape functions of triangle `k`.
    pub fn shape_gradients(&self, k: usize) -> [[f64; 2]; 3] {
        let [i, j, l] = self.triangles[k];
        let (p, q, r) = (self.nodes[i], self.nodes[j], self.nodes[l]);
        let two_area = 2.0 * self.areas[k];
        [
            [(q[1] - r[1]) / two_area, (r[0] - q[0]) / two_area],
            [(r[1] - p[1]) / two_area, (p[0] - r[0]) / two_area],
            [(p[1] - q[1]) / two_area, (q[0] - p[0]) / two_area],
        ]
    }

    /// Text export: `# nodes <n> triangles <m>`, node coordinates, then
    /// 0-based triangle connectivity.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "# nodes {} triangles {}",
            self.num_nodes(),
            self.num_triangles()
        );
        for p in &self.nodes {
            let _ = writeln!(s, "{:.16e} {:.16e}", p[0], p[1]);
        }
        for t in &self.triangles {
            let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
        }
        s
    }

    pub fn write_text(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

fn signed_area(p: &[f64; 2], q: &[f64; 2], r: &[f64; 2]) -> f64 {
    0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]))
}
