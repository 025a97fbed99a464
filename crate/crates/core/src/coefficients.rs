//! Permittivity and conductivity profiles.
//!
//! Inside the open inner box `Ω₁` both coefficients follow a two-bump profile
//! with even exponent `m`; outside it `ε = 1` and `σ = 0`. Points on `∂Ω₁`
//! take the exterior branch.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};

/// Phase offsets of the two bumps.
const BUMP_SHIFTS: [f64; 2] = [0.375, 0.625];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InnerBox {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl InnerBox {
    pub const DEFAULT: InnerBox = InnerBox {
        x0: 0.25,
        x1: 0.75,
        y0: 0.25,
        y1: 0.75,
    };

    /// Strict interior test.
    pub fn contains(&self, p: Point) -> bool {
        p[0] > self.x0 && p[0] < self.x1 && p[1] > self.y0 && p[1] < self.y1
    }

    /// True when `p` is within `tol` of the box outline.
    pub fn on_outline(&self, p: Point, tol: f64) -> bool {
        let in_x = p[0] >= self.x0 - tol && p[0] <= self.x1 + tol;
        let in_y = p[1] >= self.y0 - tol && p[1] <= self.y1 + tol;
        let near_x = (p[0] - self.x0).abs() <= tol || (p[0] - self.x1).abs() <= tol;
        let near_y = (p[1] - self.y0).abs() <= tol || (p[1] - self.y1).abs() <= tol;
        (near_x && in_y) || (near_y && in_x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Profile {
    /// `ε ≡ 1`, `σ ≡ 0`.
    Uniform,
    /// Two-bump profile with exponent `m` (even, ≥ 2).
    Bumps { m: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoefficientField {
    pub profile: Profile,
    pub sigma_scale: f64,
    pub inner_box: InnerBox,
    pub d1: f64,
    pub d2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coefficient {
    Epsilon,
    Sigma,
}

/// Values of a scalar coefficient at mesh vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalScalarField {
    pub values: Vec<f64>,
}

impl NodalScalarField {
    pub fn constant(mesh: &Mesh, value: f64) -> Self {
        NodalScalarField {
            values: vec![value; mesh.num_vertices()],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check_mesh(&self, mesh: &Mesh) -> Result<()> {
        if self.values.len() != mesh.num_vertices() {
            return Err(Error::DimensionMismatch {
                expected: mesh.num_vertices(),
                got: self.values.len(),
            });
        }
        Ok(())
    }
}

/// Grid-search estimate of `sup (ε − 1)`; a lower bound on the true supremum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupEstimate {
    pub value: f64,
    pub grid_step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub samples: usize,
    pub grid_step: f64,
    pub fd_step: f64,
    /// Largest finite-difference `|∇ε|` over the sample grid.
    pub max_grad_eps: f64,
    /// Fraction of samples with `|∇ε| > ½ min(½, ε − 1)`.
    pub gradient_violation_fraction: f64,
    pub eps_min: f64,
    pub eps_max: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// `1 ≤ ε ≤ d1` everywhere.
    pub eps_bounds_ok: bool,
    /// `0 ≤ σ ≤ d2` everywhere.
    pub sigma_bounds_ok: bool,
    pub d1_exceeds_d2: bool,
    /// `ε = 1`, `σ = 0` at every sample outside the inner box.
    pub exterior_ok: bool,
    /// Nodal samples satisfy the same bounds and equal the exterior values on `∂Ω`.
    pub nodal_ok: bool,
}

impl AdmissibilityReport {
    /// Bound conditions on ε and σ (the gradient condition is reported separately).
    pub fn bounds_ok(&self) -> bool {
        self.eps_bounds_ok && self.sigma_bounds_ok && self.d1_exceeds_d2 && self.exterior_ok && self.nodal_ok
    }
}

#[inline]
fn bump_factor(s: f64, shift: f64, m: i32) -> (f64, f64, f64) {
    // q^m and its first two derivatives in s, with q = sin π(2s − shift).
    let arg = PI * (2.0 * s - shift);
    let (q, c) = arg.sin_cos();
    let w = 2.0 * PI;
    let mf = m as f64;
    let qm2 = q.powi(m - 2);
    let qm1 = qm2 * q;
    let value = qm1 * q;
    let d1 = mf * qm1 * w * c;
    let d2 = w * w * mf * ((mf - 1.0) * qm2 * c * c - value);
    (value, d1, d2)
}

impl CoefficientField {
    pub const DEFAULT_SIGMA_SCALE: f64 = 0.001;
    pub const DEFAULT_D1: f64 = 2.1;
    pub const DEFAULT_D2: f64 = 0.003;

    /// Two-bump profile with exponent `m` and the default box and bounds.
    pub fn bumps(m: u32) -> Result<Self> {
        if m < 2 || m % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "profile exponent m must be even and >= 2, got {m}"
            )));
        }
        Ok(CoefficientField {
            profile: Profile::Bumps { m },
            sigma_scale: Self::DEFAULT_SIGMA_SCALE,
            inner_box: InnerBox::DEFAULT,
            d1: Self::DEFAULT_D1,
            d2: Self::DEFAULT_D2,
        })
    }

    /// `ε ≡ 1`, `σ ≡ 0`.
    pub fn uniform() -> Self {
        CoefficientField {
            profile: Profile::Uniform,
            sigma_scale: 0.0,
            inner_box: InnerBox::DEFAULT,
            d1: Self::DEFAULT_D1,
            d2: Self::DEFAULT_D2,
        }
    }

    pub fn with_sigma_scale(mut self, scale: f64) -> Self {
        self.sigma_scale = scale;
        self
    }

    pub fn with_inner_box(mut self, inner_box: InnerBox) -> Self {
        self.inner_box = inner_box;
        self
    }

    pub fn m(&self) -> Option<u32> {
        match self.profile {
            Profile::Uniform => None,
            Profile::Bumps { m } => Some(m),
        }
    }

    /// True if `p` takes the interior (non-trivial) branch.
    pub fn is_interior(&self, p: Point) -> bool {
        matches!(self.profile, Profile::Bumps { .. }) && self.inner_box.contains(p)
    }

    /// Bracketed bump profile `ε − 1` on the interior branch.
    fn bumps_value(&self, m: u32, p: Point) -> f64 {
        let m = m as i32;
        BUMP_SHIFTS
            .iter()
            .map(|&s| bump_factor(p[0], s, m).0 * bump_factor(p[1], s, m).0)
            .sum()
    }

    pub fn epsilon_at(&self, p: Point) -> f64 {
        match self.profile {
            Profile::Bumps { m } if self.inner_box.contains(p) => 1.0 + self.bumps_value(m, p),
            _ => 1.0,
        }
    }

    pub fn sigma_at(&self, p: Point) -> f64 {
        match self.profile {
            Profile::Bumps { m } if self.inner_box.contains(p) => {
                self.sigma_scale * (1.0 + self.bumps_value(m, p))
            }
            _ => 0.0,
        }
    }

    pub fn value_at(&self, which: Coefficient, p: Point) -> f64 {
        match which {
            Coefficient::Epsilon => self.epsilon_at(p),
            Coefficient::Sigma => self.sigma_at(p),
        }
    }

    /// Closed-form `∇ε`; zero on the exterior branch.
    pub fn epsilon_gradient(&self, p: Point) -> [f64; 2] {
        match self.profile {
            Profile::Bumps { m } if self.inner_box.contains(p) => {
                let m = m as i32;
                let mut g = [0.0; 2];
                for &s in &BUMP_SHIFTS {
                    let (ax, dax, _) = bump_factor(p[0], s, m);
                    let (ay, day, _) = bump_factor(p[1], s, m);
                    g[0] += dax * ay;
                    g[1] += ax * day;
                }
                g
            }
            _ => [0.0; 2],
        }
    }

    /// Closed-form Hessian of `ε`; zero on the exterior branch.
    pub fn epsilon_hessian(&self, p: Point) -> [[f64; 2]; 2] {
        match self.profile {
            Profile::Bumps { m } if self.inner_box.contains(p) => {
                let m = m as i32;
                let mut hess = [[0.0; 2]; 2];
                for &s in &BUMP_SHIFTS {
                    let (ax, dax, ddax) = bump_factor(p[0], s, m);
                    let (ay, day, dday) = bump_factor(p[1], s, m);
                    hess[0][0] += ddax * ay;
                    hess[0][1] += dax * day;
                    hess[1][1] += ax * dday;
                }
                hess[1][0] = hess[0][1];
                hess
            }
            _ => [[0.0; 2]; 2],
        }
    }

    /// Pointwise evaluation at every mesh vertex.
    pub fn sample_nodal(&self, mesh: &Mesh, which: Coefficient) -> NodalScalarField {
        NodalScalarField {
            values: mesh.vertices().iter().map(|&p| self.value_at(which, p)).collect(),
        }
    }

    /// `sup (ε − 1)` by grid search over the inner box at step `2^-10`.
    pub fn sup_eps_minus_one(&self) -> SupEstimate {
        self.sup_eps_minus_one_at(10)
    }

    /// Grid search at step `2^-exp` over the closed inner box.
    pub fn sup_eps_minus_one_at(&self, exp: u32) -> SupEstimate {
        let step = (-(exp as f64)).exp2();
        if self.profile == Profile::Uniform {
            return SupEstimate {
                value: 0.0,
                grid_step: step,
            };
        }
        let b = self.inner_box;
        let nx = ((b.x1 - b.x0) / step).round() as usize;
        let ny = ((b.y1 - b.y0) / step).round() as usize;
        let mut best = 0.0f64;
        for j in 0..=ny {
            let y = b.y0 + j as f64 * step;
            for i in 0..=nx {
                let x = b.x0 + i as f64 * step;
                best = best.max(self.epsilon_at([x, y]) - 1.0);
            }
        }
        SupEstimate {
            value: best,
            grid_step: step,
        }
    }

    /// Check the coefficient bounds and the gradient condition
    /// `|∇ε| ≤ ½ min(½, ε − 1)` on a cell-centred sample grid.
    ///
    /// Violations are reported, never raised.
    pub fn check_admissibility(&self, mesh: &Mesh) -> AdmissibilityReport {
        const GRID_EXP: i32 = 8;
        const FD_EXP: i32 = 12;
        let n = 1usize << GRID_EXP;
        let step = 1.0 / n as f64;
        let fd = (-(FD_EXP as f64)).exp2();

        let mut max_grad = 0.0f64;
        let mut violations = 0usize;
        let (mut eps_min, mut eps_max) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut sig_min, mut sig_max) = (f64::INFINITY, f64::NEG_INFINITY);
        let mut exterior_ok = true;

        for j in 0..n {
            let y = (j as f64 + 0.5) * step;
            for i in 0..n {
                let x = (i as f64 + 0.5) * step;
                let p = [x, y];
                let eps = self.epsilon_at(p);
                let sig = self.sigma_at(p);
                eps_min = eps_min.min(eps);
                eps_max = eps_max.max(eps);
                sig_min = sig_min.min(sig);
                sig_max = sig_max.max(sig);
                if !self.inner_box.contains(p) && (eps != 1.0 || sig != 0.0) {
                    exterior_ok = false;
                }

                let gx = (self.epsilon_at([x + fd, y]) - self.epsilon_at([x - fd, y])) / (2.0 * fd);
                let gy = (self.epsilon_at([x, y + fd]) - self.epsilon_at([x, y - fd])) / (2.0 * fd);
                let grad = gx.hypot(gy);
                max_grad = max_grad.max(grad);
                if grad > 0.5 * (0.5f64).min(eps - 1.0) {
                    violations += 1;
                }
            }
        }

        let eps_h = self.sample_nodal(mesh, Coefficient::Epsilon);
        let sig_h = self.sample_nodal(mesh, Coefficient::Sigma);
        let nodal_ok = eps_h.values.iter().all(|&e| (1.0..=self.d1).contains(&e))
            && sig_h.values.iter().all(|&s| (0.0..=self.d2).contains(&s))
            && mesh
                .boundary_nodes()
                .iter()
                .all(|&v| eps_h.values[v] == 1.0 && sig_h.values[v] == 0.0);

        AdmissibilityReport {
            samples: n * n,
            grid_step: step,
            fd_step: fd,
            max_grad_eps: max_grad,
            gradient_violation_fraction: violations as f64 / (n * n) as f64,
            eps_min,
            eps_max,
            sigma_min: sig_min,
            sigma_max: sig_max,
            eps_bounds_ok: eps_min >= 1.0 && eps_max <= self.d1,
            sigma_bounds_ok: sig_min >= 0.0 && sig_max <= self.d2,
            d1_exceeds_d2: self.d1 > self.d2 && self.d1 > 1.0 && self.d2 > 0.0,
            exterior_ok,
            nodal_ok,
        }
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn exterior_values() {
        for m in [6, 8, 10, 12] {
            let f = CoefficientField::bumps(m).unwrap();
            assert_eq!(f.epsilon_at([0.1, 0.9]), 1.0);
            assert_eq!(f.sigma_at([0.1, 0.9]), 0.0);
            assert_eq!(f.epsilon_gradient([0.1, 0.9]), [0.0, 0.0]);
        }
    }

    #[test]
    fn bump_peak_value() {
        let f = CoefficientField::bumps(6).unwrap();
        let p = [0.4375, 0.4375];
        assert!((f.epsilon_at(p) - 2.015625).abs() < 1e-14);
        assert!((f.sigma_at(p) - 0.002015625).abs() < 1e-16);
    }

    #[test]
    fn outline_takes_exterior_branch() {
        let f = CoefficientField::bumps(6).unwrap();
        assert_eq!(f.epsilon_at([0.25, 0.5]), 1.0);
        let inside = f.epsilon_at([0.25 + 1e-12, 0.4375]);
        // Each bump contributes at most (sin π/8)^m across the outline.
        let jump = (PI * 0.125).sin().powi(6);
        assert!(inside > 1.0 && inside - 1.0 <= 2.0 * jump, "{inside}");
    }

    #[test]
    fn rejects_odd_exponent() {
        assert!(CoefficientField::bumps(7).is_err());
        assert!(CoefficientField::bumps(0).is_err());
    }

    #[test]
    fn nodal_samples() {
        let mesh = Mesh::structured(4).unwrap();
        let f = CoefficientField::bumps(6).unwrap();
        let eps = f.sample_nodal(&mesh, Coefficient::Epsilon);
        let sig = f.sample_nodal(&mesh, Coefficient::Sigma);
        for &v in mesh.boundary_nodes() {
            assert_eq!(eps.values[v], 1.0);
        }
        assert!(eps.values.iter().all(|&e| e >= 1.0));
        for ((e, s), &p) in eps.values.iter().zip(&sig.values).zip(mesh.vertices()) {
            if f.inner_box.contains(p) {
                assert!((s - 0.001 * e).abs() < 1e-18);
            } else {
                assert_eq!((*e, *s), (1.0, 0.0));
            }
        }
    }

    /// Independent grid search, finer than the production grid.
    fn brute_sup(f: &CoefficientField, exp: i32) -> f64 {
        let n = 1usize << exp;
        let mut best = 0.0f64;
        for j in 0..=n {
            for i in 0..=n {
                let p = [i as f64 / n as f64, j as f64 / n as f64];
                best = best.max(f.epsilon_at(p) - 1.0);
            }
        }
        best
    }

    #[test]
    fn sup_matches_fine_grid_oracle() {
        assert_eq!(CoefficientField::uniform().sup_eps_minus_one().value, 0.0);
        let f = CoefficientField::bumps(6).unwrap();
        let est = f.sup_eps_minus_one();
        assert!(est.grid_step <= 2f64.powi(-10));
        let oracle = brute_sup(&f, 12);
        assert!(est.value <= oracle + 1e-15);
        assert!((est.value - oracle).abs() < 1e-6, "{} vs {oracle}", est.value);
        assert!(est.value >= 1.015625 && est.value < 1.02);
    }

    #[test]
    fn sup_decreases_with_exponent() {
        let s6 = CoefficientField::bumps(6).unwrap().sup_eps_minus_one().value;
        let s12 = CoefficientField::bumps(12).unwrap().sup_eps_minus_one().value;
        assert!(s12 <= s6);
    }

    #[test]
    fn admissibility_uniform() {
        let mesh = Mesh::structured(3).unwrap();
        let r = CoefficientField::uniform().check_admissibility(&mesh);
        assert_eq!(r.max_grad_eps, 0.0);
        assert_eq!(r.gradient_violation_fraction, 0.0);
        assert!(r.bounds_ok());
    }

    #[test]
    fn admissibility_bumps() {
        let mesh = Mesh::structured(3).unwrap();
        let r = CoefficientField::bumps(6).unwrap().check_admissibility(&mesh);
        assert!(r.gradient_violation_fraction > 0.0);
        assert!(r.bounds_ok(), "{r:?}");
        assert!(r.eps_max <= 2.1 && r.eps_max > 2.0);
        assert!(r.sigma_max <= 0.003);
    }

    #[test]
    fn closed_form_derivatives_match_differences() {
        let f = CoefficientField::bumps(8).unwrap();
        let d = 1e-5;
        for p in [[0.4, 0.45], [0.6, 0.33], [0.51, 0.7]] {
            let g = f.epsilon_gradient(p);
            let fx = (f.epsilon_at([p[0] + d, p[1]]) - f.epsilon_at([p[0] - d, p[1]])) / (2.0 * d);
            let fy = (f.epsilon_at([p[0], p[1] + d]) - f.epsilon_at([p[0], p[1] - d])) / (2.0 * d);
            assert!((g[0] - fx).abs() < 1e-6 * (1.0 + g[0].abs()));
            assert!((g[1] - fy).abs() < 1e-6 * (1.0 + g[1].abs()));
            let hs = f.epsilon_hessian(p);
            let gxp = f.epsilon_gradient([p[0] + d, p[1]]);
            let gxm = f.epsilon_gradient([p[0] - d, p[1]]);
            let gyp = f.epsilon_gradient([p[0], p[1] + d]);
            let gym = f.epsilon_gradient([p[0], p[1] - d]);
            let fd = [
                [(gxp[0] - gxm[0]) / (2.0 * d), (gxp[1] - gxm[1]) / (2.0 * d)],
                [(gyp[0] - gym[0]) / (2.0 * d), (gyp[1] - gym[1]) / (2.0 * d)],
            ];
            for a in 0..2 {
                for b in 0..2 {
                    assert!((hs[a][b] - fd[a][b]).abs() < 1e-5 * (1.0 + hs[a][b].abs()));
                }
            }
        }
    }

    proptest! {
        #[test]
        fn profile_invariants(x in 0.0f64..=1.0, y in 0.0f64..=1.0, mi in 3u32..=6) {
            let f = CoefficientField::bumps(2 * mi).unwrap();
            let eps = f.epsilon_at([x, y]);
            let sig = f.sigma_at([x, y]);
            prop_assert!(eps >= 1.0 && eps <= f.d1);
            prop_assert!(sig >= 0.0 && sig <= f.d2);
            prop_assert!(sig <= 0.001 * eps + 1e-18);
            prop_assert_eq!(eps, f.epsilon_at([y, x]));
            prop_assert_eq!(sig, f.sigma_at([y, x]));
            if !f.inner_box.contains([x, y]) {
                prop_assert_eq!(eps, 1.0);
                prop_assert_eq!(sig, 0.0);
            }
        }
    }
}
