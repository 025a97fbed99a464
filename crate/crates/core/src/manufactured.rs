//! Manufactured solution, its closed-form derivatives and the induced source.
//!
//! The exact field is `E = t² g / ε` with
//! `g = π (sin²πx cosπy sinπy, −sin²πy cosπx sinπx)`. Spatial derivatives
//! come from the product and chain rules applied to `g` and `1/ε`; the
//! `finite_difference` submodule provides an independent cross-check.

use std::f64::consts::PI;

use crate::assembly::{ApplyDirichlet, VectorField};
use crate::coefficients::CoefficientField;
use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};

/// Distance below which a point is treated as lying on `∂Ω₁`.
pub const OUTLINE_TOL: f64 = 1e-12;

/// Time and space derivatives of the exact field at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivatives {
    pub dt: [f64; 2],
    pub dtt: [f64; 2],
    /// `grad[c][i] = ∂_i E_c`.
    pub grad: [[f64; 2]; 2],
    pub curlcurl: [f64; 2],
}

/// Time-polynomial coefficients of the source: `f = steady + t·linear + t²·quadratic`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceTerms {
    pub steady: [f64; 2],
    pub linear: [f64; 2],
    pub quadratic: [f64; 2],
}

impl SourceTerms {
    pub fn at(&self, t: f64) -> [f64; 2] {
        [
            self.steady[0] + t * self.linear[0] + t * t * self.quadratic[0],
            self.steady[1] + t * self.linear[1] + t * t * self.quadratic[1],
        ]
    }
}

/// Value, gradient and Hessian of a scalar in 2D.
#[derive(Debug, Clone, Copy, Default)]
struct Jet {
    v: f64,
    d: [f64; 2],
    dd: [[f64; 2]; 2],
}

impl Jet {
    fn product(a: &Jet, b: &Jet) -> Jet {
        let mut dd = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                dd[i][j] = a.dd[i][j] * b.v + a.d[i] * b.d[j] + a.d[j] * b.d[i] + a.v * b.dd[i][j];
            }
        }
        Jet {
            v: a.v * b.v,
            d: [a.d[0] * b.v + a.v * b.d[0], a.d[1] * b.v + a.v * b.d[1]],
            dd,
        }
    }
}

/// `g = (g1, g2)` with first and second derivatives.
fn spatial_factor(p: Point) -> [Jet; 2] {
    // a(s) = sin²πs, b(s) = sinπs cosπs, and their first two derivatives.
    let pieces = |s: f64| {
        let (sn, _) = (PI * s).sin_cos();
        let (s2, c2) = (2.0 * PI * s).sin_cos();
        let a = [sn * sn, PI * s2, 2.0 * PI * PI * c2];
        let b = [0.5 * s2, PI * c2, -2.0 * PI * PI * s2];
        (a, b)
    };
    let (ax, bx) = pieces(p[0]);
    let (ay, by) = pieces(p[1]);

    let g1 = Jet {
        v: PI * ax[0] * by[0],
        d: [PI * ax[1] * by[0], PI * ax[0] * by[1]],
        dd: [
            [PI * ax[2] * by[0], PI * ax[1] * by[1]],
            [PI * ax[1] * by[1], PI * ax[0] * by[2]],
        ],
    };
    let g2 = Jet {
        v: -PI * ay[0] * bx[0],
        d: [-PI * ay[0] * bx[1], -PI * ay[1] * bx[0]],
        dd: [
            [-PI * ay[0] * bx[2], -PI * ay[1] * bx[1]],
            [-PI * ay[1] * bx[1], -PI * ay[2] * bx[0]],
        ],
    };
    [g1, g2]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactSolution {
    pub field: CoefficientField,
}

impl ExactSolution {
    pub fn new(field: CoefficientField) -> Self {
        ExactSolution { field }
    }

    /// `1/ε` with derivatives, on the branch `epsilon_at` selects.
    fn inverse_eps(&self, p: Point) -> Jet {
        let e = self.field.epsilon_at(p);
        let g = self.field.epsilon_gradient(p);
        let h = self.field.epsilon_hessian(p);
        let mut dd = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                dd[i][j] = -h[i][j] / (e * e) + 2.0 * g[i] * g[j] / (e * e * e);
            }
        }
        Jet {
            v: 1.0 / e,
            d: [-g[0] / (e * e), -g[1] / (e * e)],
            dd,
        }
    }

    /// Time-independent profile `u = g / ε`, so that `E = t² u`.
    fn profile(&self, p: Point) -> [Jet; 2] {
        let r = self.inverse_eps(p);
        let [g1, g2] = spatial_factor(p);
        [Jet::product(&g1, &r), Jet::product(&g2, &r)]
    }

    fn curlcurl_of(u: &[Jet; 2]) -> [f64; 2] {
        // w = ∂x u2 − ∂y u1; curl curl u = (∂y w, −∂x w).
        let dy_w = u[1].dd[0][1] - u[0].dd[1][1];
        let dx_w = u[1].dd[0][0] - u[0].dd[0][1];
        [dy_w, -dx_w]
    }

    fn refuse_outline(&self, p: Point) -> Result<()> {
        if self.field.m().is_some() && self.field.inner_box.on_outline(p, OUTLINE_TOL) {
            return Err(Error::DiscontinuitySet { x: p[0], y: p[1] });
        }
        Ok(())
    }

    /// `E(p, t)`; total on the closed square.
    pub fn exact_e(&self, p: Point, t: f64) -> [f64; 2] {
        let r = 1.0 / self.field.epsilon_at(p);
        let [g1, g2] = spatial_factor(p);
        [t * t * g1.v * r, t * t * g2.v * r]
    }

    /// Closed-form derivatives; refuses points on the coefficient discontinuity.
    pub fn exact_derivatives(&self, p: Point, t: f64) -> Result<Derivatives> {
        self.refuse_outline(p)?;
        Ok(self.derivatives_unchecked(p, t))
    }

    /// Closed-form derivatives on the branch `epsilon_at` picks (exterior on `∂Ω₁`).
    pub fn derivatives_unchecked(&self, p: Point, t: f64) -> Derivatives {
        let u = self.profile(p);
        let t2 = t * t;
        let cc = Self::curlcurl_of(&u);
        Derivatives {
            dt: [2.0 * t * u[0].v, 2.0 * t * u[1].v],
            dtt: [2.0 * u[0].v, 2.0 * u[1].v],
            grad: [
                [t2 * u[0].d[0], t2 * u[0].d[1]],
                [t2 * u[1].d[0], t2 * u[1].d[1]],
            ],
            curlcurl: [t2 * cc[0], t2 * cc[1]],
        }
    }

    /// Source coefficients on the branch `epsilon_at` picks.
    pub fn source_terms_unchecked(&self, p: Point) -> SourceTerms {
        let u = self.profile(p);
        let eps = self.field.epsilon_at(p);
        let sigma = self.field.sigma_at(p);
        let cc = Self::curlcurl_of(&u);
        SourceTerms {
            steady: [2.0 * eps * u[0].v, 2.0 * eps * u[1].v],
            linear: [2.0 * sigma * u[0].v, 2.0 * sigma * u[1].v],
            quadratic: cc,
        }
    }

    pub fn source_terms(&self, p: Point) -> Result<SourceTerms> {
        self.refuse_outline(p)?;
        Ok(self.source_terms_unchecked(p))
    }

    /// `f = ε ∂_tt E + ∇×∇×E + σ ∂_t E`.
    pub fn source_f(&self, p: Point, t: f64) -> Result<[f64; 2]> {
        Ok(self.source_terms(p)?.at(t))
    }

    /// `∇·(εE)` from the closed forms; vanishes identically.
    pub fn div_eps_e(&self, p: Point, t: f64) -> Result<f64> {
        let d = self.exact_derivatives(p, t)?;
        let e = self.exact_e(p, t);
        let eps = self.field.epsilon_at(p);
        let ge = self.field.epsilon_gradient(p);
        Ok(ge[0] * e[0] + ge[1] * e[1] + eps * (d.grad[0][0] + d.grad[1][1]))
    }
}

/// Nodal interpolant of `f(·, t)` with boundary dofs zeroed.
pub fn interpolate(mesh: &Mesh, t: f64, f: impl Fn(Point, f64) -> [f64; 2]) -> VectorField {
    let mut v = VectorField::from_fn(mesh, |p| f(p, t));
    v.apply_dirichlet(mesh);
    v
}

/// Nodal interpolant of the exact field at time `t`.
pub fn interpolate_exact(exact: &ExactSolution, mesh: &Mesh, t: f64) -> VectorField {
    interpolate(mesh, t, |p, t| exact.exact_e(p, t))
}

/// Nodal interpolant of the source `f` at time `t`; outline vertices use the exterior branch.
pub fn interpolate_source(exact: &ExactSolution, mesh: &Mesh, t: f64) -> VectorField {
    interpolate(mesh, t, |p, t| exact.source_terms_unchecked(p).at(t))
}

/// Central-difference reconstructions used to cross-check the closed forms.
pub mod finite_difference {
    use super::*;

    /// `∂_i E_c` by central differences of `exact_e`.
    pub fn gradient(exact: &ExactSolution, p: Point, t: f64, step: f64) -> [[f64; 2]; 2] {
        let ex_p = exact.exact_e([p[0] + step, p[1]], t);
        let ex_m = exact.exact_e([p[0] - step, p[1]], t);
        let ey_p = exact.exact_e([p[0], p[1] + step], t);
        let ey_m = exact.exact_e([p[0], p[1] - step], t);
        let s = 2.0 * step;
        [
            [(ex_p[0] - ex_m[0]) / s, (ey_p[0] - ey_m[0]) / s],
            [(ex_p[1] - ex_m[1]) / s, (ey_p[1] - ey_m[1]) / s],
        ]
    }

    /// `∇×∇×E` by central differences of the (separately checked) closed-form gradient.
    pub fn curlcurl(exact: &ExactSolution, p: Point, t: f64, step: f64) -> [f64; 2] {
        let w = |q: Point| {
            let g = exact.derivatives_unchecked(q, t).grad;
            g[1][0] - g[0][1]
        };
        let s = 2.0 * step;
        let dy_w = (w([p[0], p[1] + step]) - w([p[0], p[1] - step])) / s;
        let dx_w = (w([p[0] + step, p[1]]) - w([p[0] - step, p[1]])) / s;
        [dy_w, -dx_w]
    }

    /// `f` rebuilt from difference quotients in space and time.
    pub fn source(exact: &ExactSolution, p: Point, t: f64, step: f64) -> [f64; 2] {
        let e_p = exact.exact_e(p, t + step);
        let e_0 = exact.exact_e(p, t);
        let e_m = exact.exact_e(p, t - step);
        let cc = curlcurl(exact, p, t, step);
        let eps = exact.field.epsilon_at(p);
        let sigma = exact.field.sigma_at(p);
        let mut f = [0.0; 2];
        for c in 0..2 {
            let dtt = (e_p[c] - 2.0 * e_0[c] + e_m[c]) / (step * step);
            let dt = (e_p[c] - e_m[c]) / (2.0 * step);
            f[c] = eps * dtt + cc[c] + sigma * dt;
        }
        f
    }

    /// Largest relative mismatch between closed forms and difference quotients at `p`.
    pub fn max_relative_mismatch(exact: &ExactSolution, p: Point, t: f64, step: f64) -> Result<f64> {
        let d = exact.exact_derivatives(p, t)?;
        let f = exact.source_f(p, t)?;
        let rel = |closed: &[f64], approx: &[f64]| {
            let scale = closed.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let diff = closed
                .iter()
                .zip(approx)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            diff / scale.max(f64::MIN_POSITIVE)
        };
        let g = gradient(exact, p, t, step);
        let gc = [d.grad[0][0], d.grad[0][1], d.grad[1][0], d.grad[1][1]];
        let gf = [g[0][0], g[0][1], g[1][0], g[1][1]];
        let cc = curlcurl(exact, p, t, step);
        let fs = source(exact, p, t, step);
        Ok(rel(&gc, &gf).max(rel(&d.curlcurl, &cc)).max(rel(&f, &fs)))
    }
}
