//! Assembly of the discrete operators of the stabilized variational problem:
//! lumped weighted masses, the vector stiffness `(∇E, ∇v)` and the
//! stabilization `(∇·((ε − 1)E), ∇·v)`.
//!
//! Degrees of freedom are node-major: dof `2 i + a` is component `a` at vertex `i`.

use crate::coefficients::NodalScalarField;
use crate::error::{Error, Result};
use crate::mesh::{ElementGeometry, Mesh, Point};
use crate::sparse::{CsrMatrix, DiagonalOperator, TripletBuilder};

/// Nodal two-component field.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub values: Vec<f64>,
}

impl VectorField {
    pub fn zeros(mesh: &Mesh) -> Self {
        VectorField {
            values: vec![0.0; mesh.num_dofs()],
        }
    }

    /// Nodal evaluation of `f` at every vertex.
    pub fn from_fn(mesh: &Mesh, mut f: impl FnMut(Point) -> [f64; 2]) -> Self {
        let mut values = Vec::with_capacity(mesh.num_dofs());
        for &p in mesh.vertices() {
            values.extend(f(p));
        }
        VectorField { values }
    }

    pub fn num_nodes(&self) -> usize {
        self.values.len() / 2
    }

    #[inline]
    pub fn node(&self, i: usize) -> [f64; 2] {
        [self.values[2 * i], self.values[2 * i + 1]]
    }

    pub fn check_mesh(&self, mesh: &Mesh) -> Result<()> {
        if self.values.len() != mesh.num_dofs() {
            return Err(Error::DimensionMismatch {
                expected: mesh.num_dofs(),
                got: self.values.len(),
            });
        }
        Ok(())
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &VectorField) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += alpha * b;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        self.values.iter_mut().for_each(|v| *v *= alpha);
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// True when every boundary dof is exactly zero.
    pub fn is_boundary_constrained(&self, mesh: &Mesh) -> bool {
        mesh.boundary_nodes()
            .iter()
            .all(|&v| self.values[2 * v] == 0.0 && self.values[2 * v + 1] == 0.0)
    }
}

/// Dof mask with `true` on boundary dofs.
pub fn dirichlet_mask(mesh: &Mesh) -> Vec<bool> {
    let mut mask = vec![false; mesh.num_dofs()];
    for &v in mesh.boundary_nodes() {
        mask[2 * v] = true;
        mask[2 * v + 1] = true;
    }
    mask
}

/// Homogeneous Dirichlet conditions on `∂Ω`.
pub trait ApplyDirichlet {
    fn apply_dirichlet(&mut self, mesh: &Mesh);
}

impl ApplyDirichlet for CsrMatrix {
    fn apply_dirichlet(&mut self, mesh: &Mesh) {
        self.mask_dofs(&dirichlet_mask(mesh));
    }
}

impl ApplyDirichlet for DiagonalOperator {
    fn apply_dirichlet(&mut self, mesh: &Mesh) {
        self.mask_dofs(&dirichlet_mask(mesh));
    }
}

impl ApplyDirichlet for VectorField {
    fn apply_dirichlet(&mut self, mesh: &Mesh) {
        for &v in mesh.boundary_nodes() {
            self.values[2 * v] = 0.0;
            self.values[2 * v + 1] = 0.0;
        }
    }
}

/// Row-sum lumped mass weighted by nodal values: `M_i = w_i Σ_{K ∋ i} |K| / 3`,
/// repeated for both components.
pub fn lumped_mass(mesh: &Mesh, weight: &NodalScalarField) -> Result<DiagonalOperator> {
    weight.check_mesh(mesh)?;
    let mut patch = vec![0.0; mesh.num_vertices()];
    for (t, g) in mesh.triangles().iter().zip(mesh.geometry()) {
        for &v in t {
            patch[v] += g.area / 3.0;
        }
    }
    let mut values = Vec::with_capacity(mesh.num_dofs());
    for (v, (&a, &w)) in patch.iter().zip(&weight.values).enumerate() {
        let m = a * w;
        if !(m > 0.0) && !mesh.is_boundary(v) {
            return Err(Error::Assembly(format!(
                "non-positive lumped mass {m} at free vertex {v}"
            )));
        }
        values.push(m);
        values.push(m);
    }
    Ok(DiagonalOperator { values })
}

/// Local scalar stiffness block `|K| ∇φ_i · ∇φ_j`.
pub fn element_stiffness(g: &ElementGeometry) -> [[f64; 3]; 3] {
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = g.area * (g.grads[i][0] * g.grads[j][0] + g.grads[i][1] * g.grads[j][1]);
        }
    }
    k
}

/// Vector stiffness, block-diagonal over the two components.
pub fn stiffness(mesh: &Mesh) -> CsrMatrix {
    let mut b = TripletBuilder::with_capacity(mesh.num_dofs(), 18 * mesh.num_triangles());
    for (t, g) in mesh.triangles().iter().zip(mesh.geometry()) {
        let k = element_stiffness(g);
        for i in 0..3 {
            for j in 0..3 {
                for a in 0..2 {
                    b.add(2 * t[i] + a, 2 * t[j] + a, k[i][j]);
                }
            }
        }
    }
    b.build()
}

/// Quadrature used for the elementwise stabilization integral. Both are exact
/// for the linear integrand; the edge-midpoint rule exists as a cross-check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DivDivRule {
    Centroid,
    EdgeMidpoints,
}

/// Local stabilization block, indexed by local dof `2 i + a`:
/// `∫_K ∂_b((ε_h − 1) φ_j) ∂_a φ_i`.
pub fn element_divdiv(g: &ElementGeometry, eps_local: [f64; 3], rule: DivDivRule) -> [[f64; 6]; 6] {
    let w = [eps_local[0] - 1.0, eps_local[1] - 1.0, eps_local[2] - 1.0];
    let grad_w = [
        w[0] * g.grads[0][0] + w[1] * g.grads[1][0] + w[2] * g.grads[2][0],
        w[0] * g.grads[0][1] + w[1] * g.grads[1][1] + w[2] * g.grads[2][1],
    ];
    let points: &[[f64; 3]] = match rule {
        DivDivRule::Centroid => &[[1.0 / 3.0; 3]],
        DivDivRule::EdgeMidpoints => &[[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]],
    };
    let qw = g.area / points.len() as f64;

    let mut local = [[0.0; 6]; 6];
    for lam in points {
        let w_q = w[0] * lam[0] + w[1] * lam[1] + w[2] * lam[2];
        for j in 0..3 {
            for b in 0..2 {
                let trial = grad_w[b] * lam[j] + w_q * g.grads[j][b];
                for i in 0..3 {
                    for a in 0..2 {
                        local[2 * i + a][2 * j + b] += qw * trial * g.grads[i][a];
                    }
                }
            }
        }
    }
    local
}

/// Stabilization operator with centroid quadrature.
pub fn divdiv_stab(mesh: &Mesh, eps_h: &NodalScalarField) -> Result<CsrMatrix> {
    divdiv_stab_with_rule(mesh, eps_h, DivDivRule::Centroid)
}

pub fn divdiv_stab_with_rule(
    mesh: &Mesh,
    eps_h: &NodalScalarField,
    rule: DivDivRule,
) -> Result<CsrMatrix> {
    eps_h.check_mesh(mesh)?;
    let mut b = TripletBuilder::with_capacity(mesh.num_dofs(), 36 * mesh.num_triangles());
    for (t, g) in mesh.triangles().iter().zip(mesh.geometry()) {
        let local = element_divdiv(g, [eps_h.values[t[0]], eps_h.values[t[1]], eps_h.values[t[2]]], rule);
        for i in 0..3 {
            for a in 0..2 {
                for j in 0..3 {
                    for c in 0..2 {
                        b.add(2 * t[i] + a, 2 * t[j] + c, local[2 * i + a][2 * j + c]);
                    }
                }
            }
        }
    }
    Ok(b.build())
}

/// The bilinear form `a(u, v) = vᵀ (K + D) u` with operators assembled once.
#[derive(Debug, Clone)]
pub struct BilinearForm {
    pub stiffness: CsrMatrix,
    pub stab: CsrMatrix,
}

impl BilinearForm {
    pub fn assemble(mesh: &Mesh, eps_h: &NodalScalarField) -> Result<Self> {
        Ok(BilinearForm {
            stiffness: stiffness(mesh),
            stab: divdiv_stab(mesh, eps_h)?,
        })
    }

    pub fn eval(&self, u: &VectorField, v: &VectorField) -> Result<f64> {
        Ok(self.stiffness.bilinear(&v.values, &u.values)? + self.stab.bilinear(&v.values, &u.values)?)
    }
}

/// `a(u, v)` for boundary-constrained fields.
pub fn quad_form_a(u: &VectorField, v: &VectorField, mesh: &Mesh, eps_h: &NodalScalarField) -> Result<f64> {
    u.check_mesh(mesh)?;
    v.check_mesh(mesh)?;
    BilinearForm::assemble(mesh, eps_h)?.eval(u, v)
}
