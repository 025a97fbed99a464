//! Error norms, convergence rates, the discrete energy functional and
//! coercivity probes of the bilinear form.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::assembly::{ApplyDirichlet, BilinearForm, VectorField};
use crate::coefficients::{Coefficient, CoefficientField, NodalScalarField};
use crate::error::{Error, Result};
use crate::manufactured::ExactSolution;
use crate::mesh::Mesh;
use crate::quadrature::TriangleRule;
use crate::sparse::DiagonalOperator;
use crate::timestepper::{Observer, SchemeOperators, StepState};

/// Relative L2 and gradient-seminorm errors at one refinement level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorPair {
    pub theta1: f64,
    pub theta2: f64,
    pub level: u32,
    pub m: u32,
}

/// `Θ⁽¹⁾ = ‖Ê − Ê_h‖ / ‖Ê‖` and `Θ⁽²⁾ = ‖∇(Ê − Ê_h)‖ / ‖∇Ê‖` at time `t`, with the
/// six-point degree-4 rule.
pub fn relative_errors(exact: &ExactSolution, eh: &VectorField, mesh: &Mesh, t: f64) -> Result<ErrorPair> {
    relative_errors_with_rule(exact, eh, mesh, t, &TriangleRule::degree4())
}

pub fn relative_errors_with_rule(
    exact: &ExactSolution,
    eh: &VectorField,
    mesh: &Mesh,
    t: f64,
    rule: &TriangleRule,
) -> Result<ErrorPair> {
    eh.check_mesh(mesh)?;
    let (mut num1, mut den1, mut num2, mut den2) = (0.0, 0.0, 0.0, 0.0);
    for (e, tri) in mesh.triangles().iter().enumerate() {
        let g = &mesh.geometry()[e];
        let nodal = [eh.node(tri[0]), eh.node(tri[1]), eh.node(tri[2])];
        let mut grad_h = [[0.0; 2]; 2];
        for (n, v) in nodal.iter().enumerate() {
            for c in 0..2 {
                for i in 0..2 {
                    grad_h[c][i] += v[c] * g.grads[n][i];
                }
            }
        }
        for (p, w, lam) in rule.map_points(&mesh.element_points(e)) {
            let wa = w * g.area;
            let ex = exact.exact_e(p, t);
            // Quadrature points are element-interior and the mesh is aligned with ∂Ω₁.
            let gex = exact.derivatives_unchecked(p, t).grad;
            for c in 0..2 {
                let vh = lam[0] * nodal[0][c] + lam[1] * nodal[1][c] + lam[2] * nodal[2][c];
                num1 += wa * (ex[c] - vh).powi(2);
                den1 += wa * ex[c].powi(2);
                for i in 0..2 {
                    num2 += wa * (gex[c][i] - grad_h[c][i]).powi(2);
                    den2 += wa * gex[c][i].powi(2);
                }
            }
        }
    }
    if den1 == 0.0 || den2 == 0.0 {
        return Err(Error::UndefinedError);
    }
    Ok(ErrorPair {
        theta1: (num1 / den1).sqrt(),
        theta2: (num2 / den2).sqrt(),
        level: mesh.level(),
        m: exact.field.m().unwrap_or(0),
    })
}

/// `|log(Θ_l / Θ_{l+1})| / log 2`; `None` when either value is zero or not finite.
pub fn rate(coarse: f64, fine: f64) -> Option<f64> {
    if coarse > 0.0 && fine > 0.0 && coarse.is_finite() && fine.is_finite() {
        Some((coarse / fine).ln().abs() / std::f64::consts::LN_2)
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub level: u32,
    pub nel: usize,
    pub nno: usize,
    pub theta1: f64,
    pub ratio1: Option<f64>,
    pub r1: Option<f64>,
    pub theta2: f64,
    pub ratio2: Option<f64>,
    pub r2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportMetadata {
    pub m: u32,
    pub tau: f64,
    pub t_final: f64,
    pub cfl_c: f64,
    pub timestamp: String,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub metadata: Option<ReportMetadata>,
}

/// Ratios and rates between consecutive levels. `errors` must be ordered by level.
pub fn convergence_rates(errors: &[ErrorPair]) -> Result<ConvergenceReport> {
    if errors.is_empty() {
        return Err(Error::InvalidArgument("no error levels to tabulate".into()));
    }
    if errors.windows(2).any(|w| w[1].level <= w[0].level) {
        return Err(Error::InvalidArgument("error levels must be strictly increasing".into()));
    }
    let ratio = |a: f64, b: f64| (b > 0.0 && a.is_finite()).then(|| a / b);
    let rows = errors
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let prev = i.checked_sub(1).map(|p| errors[p]);
            ConvergenceRow {
                level: e.level,
                nel: 2usize << (2 * e.level),
                nno: ((1usize << e.level) + 1).pow(2),
                theta1: e.theta1,
                ratio1: prev.and_then(|p| ratio(p.theta1, e.theta1)),
                r1: prev.and_then(|p| rate(p.theta1, e.theta1)),
                theta2: e.theta2,
                ratio2: prev.and_then(|p| ratio(p.theta2, e.theta2)),
                r2: prev.and_then(|p| rate(p.theta2, e.theta2)),
            }
        })
        .collect();
    Ok(ConvergenceReport { rows, metadata: None })
}

/// Terms of the discrete energy functional at one time level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergySample {
    pub t: f64,
    pub dt_e_eps: f64,
    pub e_sigma: f64,
    pub grad_e: f64,
    pub div_e_eps_m1: f64,
    pub total: f64,
}

/// Per-element divergence `∇·v` (constant on P1 elements).
fn element_divergence(mesh: &Mesh, v: &VectorField, elem: usize) -> f64 {
    let t = mesh.triangles()[elem];
    let g = &mesh.geometry()[elem];
    (0..3)
        .map(|n| {
            let val = v.node(t[n]);
            val[0] * g.grads[n][0] + val[1] * g.grads[n][1]
        })
        .sum()
}

/// `‖∇·v‖²_{ε−1}` with the centroid rule (exact for linear weight × constant).
pub fn div_norm_eps_m1(mesh: &Mesh, v: &VectorField, eps_h: &NodalScalarField) -> f64 {
    mesh.triangles()
        .iter()
        .enumerate()
        .map(|(e, t)| {
            let w = (eps_h.values[t[0]] + eps_h.values[t[1]] + eps_h.values[t[2]]) / 3.0 - 1.0;
            let d = element_divergence(mesh, v, e);
            mesh.geometry()[e].area * w * d * d
        })
        .sum()
}

fn weighted_norm(m: &DiagonalOperator, v: &[f64], mesh: &Mesh) -> f64 {
    // Boundary entries of masked operators hold 1; fields vanish there anyway.
    m.values
        .iter()
        .zip(v)
        .enumerate()
        .filter(|(d, _)| !mesh.is_boundary(d / 2))
        .map(|(_, (w, x))| w * x * x)
        .sum()
}

/// Energy functional with `∂_t E_h ≈ (E^k − E^{k−1}) / τ`.
pub fn energy_sample(state: &StepState, ops: &SchemeOperators, mesh: &Mesh) -> Result<EnergySample> {
    state.curr.check_mesh(mesh)?;
    let dt: Vec<f64> = state
        .curr
        .values
        .iter()
        .zip(&state.prev.values)
        .map(|(a, b)| (a - b) / state.tau)
        .collect();
    let dt_e_eps = weighted_norm(&ops.meps, &dt, mesh);
    let e_sigma = weighted_norm(&ops.msig, &state.curr.values, mesh);
    let grad_e = ops.stiffness.bilinear(&state.curr.values, &state.curr.values)?;
    let div_e_eps_m1 = div_norm_eps_m1(mesh, &state.curr, &ops.eps_h);
    Ok(EnergySample {
        t: state.time(),
        dt_e_eps,
        e_sigma,
        grad_e,
        div_e_eps_m1,
        total: dt_e_eps + e_sigma + grad_e + div_e_eps_m1,
    })
}

/// Observer recording one [`EnergySample`] per time level.
pub struct EnergyMonitor<'a> {
    mesh: &'a Mesh,
    pub samples: Vec<EnergySample>,
}

impl<'a> EnergyMonitor<'a> {
    pub fn new(mesh: &'a Mesh) -> Self {
        EnergyMonitor {
            mesh,
            samples: Vec::new(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.samples.iter().all(|s| s.total.is_finite())
    }

    /// Largest total over the whole trace divided by the largest over the first `window` samples.
    pub fn growth_factor(&self, window: usize) -> f64 {
        let early = self.samples.iter().take(window).map(|s| s.total).fold(0.0, f64::max);
        let all = self.samples.iter().map(|s| s.total).fold(0.0, f64::max);
        if early == 0.0 {
            if all == 0.0 {
                1.0
            } else {
                f64::INFINITY
            }
        } else {
            all / early
        }
    }
}

impl Observer for EnergyMonitor<'_> {
    fn observe(&mut self, state: &StepState, ops: &SchemeOperators) -> Result<()> {
        self.samples.push(energy_sample(state, ops, self.mesh)?);
        Ok(())
    }
}

/// Leapfrog quadratic invariant
/// `‖(E^k − E^{k−1})/τ‖²_{M_ε} + ((K + D) E^k) · E^{k−1}`.
/// Exactly conserved by the undamped, source-free scheme when `K + D` is symmetric.
pub fn leapfrog_invariant(state: &StepState, ops: &SchemeOperators) -> Result<f64> {
    let dt: Vec<f64> = state
        .curr
        .values
        .iter()
        .zip(&state.prev.values)
        .enumerate()
        .map(|(d, (a, b))| if ops.is_free(d) { (a - b) / state.tau } else { 0.0 })
        .collect();
    let kin = ops.meps.bilinear(&dt, &dt);
    let pot = ops.stiffness.bilinear(&state.prev.values, &state.curr.values)?
        + ops.stab.bilinear(&state.prev.values, &state.curr.values)?;
    Ok(kin + pot)
}

/// Observer recording [`leapfrog_invariant`] at every level.
#[derive(Debug, Default)]
pub struct InvariantMonitor {
    pub values: Vec<f64>,
}

impl InvariantMonitor {
    /// `max |Q_k − Q_0| / |Q_0|`.
    pub fn relative_drift(&self) -> f64 {
        let Some(&q0) = self.values.first() else {
            return 0.0;
        };
        let worst = self.values.iter().map(|q| (q - q0).abs()).fold(0.0, f64::max);
        if q0 == 0.0 {
            if worst == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            worst / q0.abs()
        }
    }
}

impl Observer for InvariantMonitor {
    fn observe(&mut self, state: &StepState, ops: &SchemeOperators) -> Result<()> {
        self.values.push(leapfrog_invariant(state, ops)?);
        Ok(())
    }
}

/// Norm machinery shared by the triple norm and the coercivity probe.
pub struct NormContext<'a> {
    mesh: &'a Mesh,
    eps_h: NodalScalarField,
    meps: DiagonalOperator,
    form: BilinearForm,
    /// `|∇ε_h|` per element.
    grad_eps: Vec<f64>,
}

impl<'a> NormContext<'a> {
    pub fn new(mesh: &'a Mesh, eps_h: NodalScalarField) -> Result<Self> {
        eps_h.check_mesh(mesh)?;
        let meps = crate::assembly::lumped_mass(mesh, &eps_h)?;
        let form = BilinearForm::assemble(mesh, &eps_h)?;
        let grad_eps = mesh
            .triangles()
            .iter()
            .zip(mesh.geometry())
            .map(|(t, g)| {
                let mut d = [0.0; 2];
                for n in 0..3 {
                    for i in 0..2 {
                        d[i] += eps_h.values[t[n]] * g.grads[n][i];
                    }
                }
                d[0].hypot(d[1])
            })
            .collect();
        Ok(NormContext {
            mesh,
            eps_h,
            meps,
            form,
            grad_eps,
        })
    }

    /// `|||v|||²_a = ‖v‖²_ε + ‖∇v‖² + ‖∇·v‖²_{ε−1}`.
    pub fn triple_norm_sq(&self, v: &VectorField) -> Result<f64> {
        v.check_mesh(self.mesh)?;
        Ok(weighted_norm(&self.meps, &v.values, self.mesh)
            + self.form.stiffness.bilinear(&v.values, &v.values)?
            + div_norm_eps_m1(self.mesh, v, &self.eps_h))
    }

    pub fn a(&self, u: &VectorField, v: &VectorField) -> Result<f64> {
        self.form.eval(u, v)
    }

    /// `‖v‖²_{|∇ε_h|}` (edge-midpoint rule, exact for the quadratic `|v|²`) and
    /// `‖∇·v‖²_{|∇ε_h|}`.
    pub fn gradient_weighted_norms(&self, v: &VectorField) -> (f64, f64) {
        let mut l2 = 0.0;
        let mut div = 0.0;
        for (e, t) in self.mesh.triangles().iter().enumerate() {
            let w = self.grad_eps[e];
            if w == 0.0 {
                continue;
            }
            let area = self.mesh.geometry()[e].area;
            let nodal = [v.node(t[0]), v.node(t[1]), v.node(t[2])];
            let mut sq = 0.0;
            for (a, b) in [(0, 1), (1, 2), (2, 0)] {
                for c in 0..2 {
                    let mid = 0.5 * (nodal[a][c] + nodal[b][c]);
                    sq += mid * mid / 3.0;
                }
            }
            l2 += w * area * sq;
            let d = element_divergence(self.mesh, v, e);
            div += w * area * d * d;
        }
        (l2, div)
    }

    /// `‖∇v‖² + ‖∇·v‖²_{ε−1} − ½‖v‖²_{|∇ε|} − ½‖∇·v‖²_{|∇ε|}`.
    pub fn intermediate_lower_bound(&self, v: &VectorField) -> Result<f64> {
        let grad = self.form.stiffness.bilinear(&v.values, &v.values)?;
        let div = div_norm_eps_m1(self.mesh, v, &self.eps_h);
        let (l2w, divw) = self.gradient_weighted_norms(v);
        Ok(grad + div - 0.5 * l2w - 0.5 * divw)
    }
}

/// `|||v|||²_a` for a boundary-constrained field.
pub fn triple_norm_a(v: &VectorField, eps_h: &NodalScalarField, mesh: &Mesh) -> Result<f64> {
    NormContext::new(mesh, eps_h.clone())?.triple_norm_sq(v)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub samples: usize,
    /// Smallest `(a(v,v) − bound) / |||v|||²_a` over the samples.
    pub min_relative_slack: f64,
    /// Fraction of samples with `a(v,v) ≥ ½ |||v|||²_a`.
    pub half_norm_bound_fraction: f64,
    /// Largest sampled `|a(u,v)| / (|||u|||_a |||v|||_a)`.
    pub continuity_estimate: f64,
}

impl ProbeReport {
    pub fn intermediate_bound_holds(&self, tol: f64) -> bool {
        self.min_relative_slack >= -tol
    }
}

/// Evaluate the coercivity bounds on seeded random fields normalised in `|||·|||_a`.
pub fn coercivity_probe(mesh: &Mesh, field: &CoefficientField, n_samples: usize, seed: u64) -> Result<ProbeReport> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("coercivity probe needs at least one sample".into()));
    }
    let ctx = NormContext::new(mesh, field.sample_nodal(mesh, Coefficient::Epsilon))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut min_slack = f64::INFINITY;
    let mut half_ok = 0usize;
    let mut continuity = 0.0f64;
    let mut previous: Option<VectorField> = None;
    for _ in 0..n_samples {
        let mut v = VectorField {
            values: (0..mesh.num_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        };
        v.apply_dirichlet(mesh);
        let norm = ctx.triple_norm_sq(&v)?.sqrt();
        v.scale(1.0 / norm);

        let avv = ctx.a(&v, &v)?;
        let tn = ctx.triple_norm_sq(&v)?;
        let bound = ctx.intermediate_lower_bound(&v)?;
        min_slack = min_slack.min((avv - bound) / tn);
        if avv >= 0.5 * tn {
            half_ok += 1;
        }
        if let Some(u) = &previous {
            let q = ctx.a(u, &v)?.abs() / (ctx.triple_norm_sq(u)?.sqrt() * tn.sqrt());
            continuity = continuity.max(q);
        }
        previous = Some(v);
    }
    Ok(ProbeReport {
        samples: n_samples,
        min_relative_slack: min_slack,
        half_norm_bound_fraction: half_ok as f64 / n_samples as f64,
        continuity_estimate: continuity,
    })
}
