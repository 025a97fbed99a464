//! Structured triangulations of the unit square.
//!
//! Level `l` splits `[0,1]²` into `2^l × 2^l` square cells, each cut along the
//! lower-left to upper-right diagonal into two counter-clockwise triangles.
//! Vertices are numbered row-major: vertex `(i, j)` has id `j * (n + 1) + i`.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub const MIN_LEVEL: u32 = 1;
pub const MAX_LEVEL: u32 = 12;

pub type Point = [f64; 2];

/// Area and constant barycentric gradients of one P1 triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementGeometry {
    pub area: f64,
    pub grads: [[f64; 2]; 3],
}

impl ElementGeometry {
    /// Geometry of the triangle with vertices `p` (counter-clockwise).
    pub fn from_points(p: &[Point; 3]) -> Self {
        let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1])
            - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
        let inv = 1.0 / det;
        let grads = [
            [(p[1][1] - p[2][1]) * inv, (p[2][0] - p[1][0]) * inv],
            [(p[2][1] - p[0][1]) * inv, (p[0][0] - p[2][0]) * inv],
            [(p[0][1] - p[1][1]) * inv, (p[1][0] - p[0][0]) * inv],
        ];
        ElementGeometry {
            area: 0.5 * det,
            grads,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    level: u32,
    h: f64,
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<bool>,
    boundary_nodes: Vec<usize>,
    geometry: Vec<ElementGeometry>,
}

impl Mesh {
    /// Build the level-`level` structured mesh (`h = 2^-level`).
    pub fn structured(level: u32) -> Result<Self> {
        if !(MIN_LEVEL..=MAX_LEVEL).contains(&level) {
            return Err(Error::InvalidArgument(format!(
                "mesh level {level} outside [{MIN_LEVEL}, {MAX_LEVEL}]"
            )));
        }
        let n = 1usize << level;
        let h = 1.0 / n as f64;
        let stride = n + 1;

        let mut vertices = Vec::with_capacity(stride * stride);
        let mut boundary = Vec::with_capacity(stride * stride);
        for j in 0..=n {
            for i in 0..=n {
                vertices.push([i as f64 * h, j as f64 * h]);
                boundary.push(i == 0 || j == 0 || i == n || j == n);
            }
        }

        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let v00 = j * stride + i;
                let v10 = v00 + 1;
                let v01 = v00 + stride;
                let v11 = v01 + 1;
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            }
        }

        let geometry = triangles
            .iter()
            .map(|t| ElementGeometry::from_points(&[vertices[t[0]], vertices[t[1]], vertices[t[2]]]))
            .collect();
        let boundary_nodes = (0..vertices.len()).filter(|&v| boundary[v]).collect();

        Ok(Mesh {
            level,
            h,
            vertices,
            triangles,
            boundary,
            boundary_nodes,
            geometry,
        })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Number of vector degrees of freedom (two per vertex).
    pub fn num_dofs(&self) -> usize {
        2 * self.vertices.len()
    }

    pub fn element_geometry(&self, elem: usize) -> Result<ElementGeometry> {
        self.geometry.get(elem).copied().ok_or(Error::OutOfRange {
            index: elem,
            len: self.geometry.len(),
        })
    }

    /// Cached geometry for every element, indexed like `triangles()`.
    pub fn geometry(&self) -> &[ElementGeometry] {
        &self.geometry
    }

    /// Sorted ids of the vertices on the outer boundary.
    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    pub fn is_boundary(&self, vertex: usize) -> bool {
        self.boundary[vertex]
    }

    pub fn element_points(&self, elem: usize) -> [Point; 3] {
        let t = self.triangles[elem];
        [self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]]
    }

    /// Smallest interior angle over all triangles, in degrees.
    pub fn min_angle_degrees(&self) -> f64 {
        let mut min = f64::INFINITY;
        for e in 0..self.num_triangles() {
            let p = self.element_points(e);
            for k in 0..3 {
                let a = p[k];
                let b = p[(k + 1) % 3];
                let c = p[(k + 2) % 3];
                let u = [b[0] - a[0], b[1] - a[1]];
                let v = [c[0] - a[0], c[1] - a[1]];
                let cos = (u[0] * v[0] + u[1] * v[1])
                    / ((u[0] * u[0] + u[1] * u[1]).sqrt() * (v[0] * v[0] + v[1] * v[1]).sqrt());
                min = min.min(cos.clamp(-1.0, 1.0).acos().to_degrees());
            }
        }
        min
    }

    /// Write the `# vertices` / `# triangles` CSV dump.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# vertices")?;
        writeln!(out, "id,x,y")?;
        for (id, v) in self.vertices.iter().enumerate() {
            writeln!(out, "{id},{:.17e},{:.17e}", v[0], v[1])?;
        }
        writeln!(out, "# triangles")?;
        writeln!(out, "id,v0,v1,v2")?;
        for (id, t) in self.triangles.iter().enumerate() {
            writeln!(out, "{id},{},{},{}", t[0], t[1], t[2])?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
            .map_err(|e| Error::io(path, e))
    }
}
