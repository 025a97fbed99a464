//! Explicit damped leapfrog for the stabilized scheme.
//!
//! With lumped masses every step is a diagonal solve per free dof:
//!
//! ```text
//! (M_ε + τ/2 M_σ) E^{k+1} = M_ε (2E^k − E^{k−1}) + τ/2 M_σ E^{k−1}
//!                           − τ² [(K + D) E^k + M_1 j^k]
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::{self, ApplyDirichlet, VectorField};
use crate::coefficients::{Coefficient, CoefficientField, NodalScalarField};
use crate::error::{Error, Result};
use crate::manufactured::ExactSolution;
use crate::mesh::Mesh;
use crate::sparse::{CsrMatrix, DiagonalOperator};

pub const DEFAULT_CFL_C: f64 = 2.0;

/// `τ_max = h / (C √(1 + 3 ‖ε − 1‖_∞))`.
pub fn cfl_max_tau(mesh: &Mesh, field: &CoefficientField, c: f64) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::InvalidArgument(format!("CFL constant must be positive, got {c}")));
    }
    let sup = field.sup_eps_minus_one().value;
    Ok(mesh.h() / (c * (1.0 + 3.0 * sup).sqrt()))
}

/// Two consecutive time levels `E^{k−1}`, `E^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepState {
    pub k: usize,
    pub tau: f64,
    pub prev: VectorField,
    pub curr: VectorField,
}

impl StepState {
    pub fn time(&self) -> f64 {
        self.k as f64 * self.tau
    }
}

/// `E^0 = f0`, `E^1 = f0 + τ f1`.
pub fn init_state(f0: &VectorField, f1: &VectorField, tau: f64) -> Result<StepState> {
    if f0.values.len() != f1.values.len() {
        return Err(Error::DimensionMismatch {
            expected: f0.values.len(),
            got: f1.values.len(),
        });
    }
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {tau}")));
    }
    let mut curr = f0.clone();
    curr.axpy(tau, f1);
    Ok(StepState {
        k: 1,
        tau,
        prev: f0.clone(),
        curr,
    })
}

/// Masked operators of one scheme instance (fixed `τ`).
#[derive(Debug, Clone)]
pub struct SchemeOperators {
    pub tau: f64,
    pub meps: DiagonalOperator,
    pub msig: DiagonalOperator,
    pub mlhs: DiagonalOperator,
    pub m1: DiagonalOperator,
    pub stiffness: CsrMatrix,
    pub stab: CsrMatrix,
    pub eps_h: NodalScalarField,
    pub sigma_h: NodalScalarField,
    combined: CsrMatrix,
    free: Vec<bool>,
}

impl SchemeOperators {
    pub fn assemble(mesh: &Mesh, field: &CoefficientField, tau: f64) -> Result<Self> {
        let eps_h = field.sample_nodal(mesh, Coefficient::Epsilon);
        let sigma_h = field.sample_nodal(mesh, Coefficient::Sigma);
        let ones = NodalScalarField::constant(mesh, 1.0);

        let mut meps = assembly::lumped_mass(mesh, &eps_h)?;
        let mut m1 = assembly::lumped_mass(mesh, &ones)?;
        // σ may vanish, so its mass is not subject to the positivity check.
        let mut msig = DiagonalOperator {
            values: m1
                .values
                .iter()
                .enumerate()
                .map(|(d, m)| m * sigma_h.values[d / 2])
                .collect(),
        };
        let mut stiffness = assembly::stiffness(mesh);
        let mut stab = assembly::divdiv_stab(mesh, &eps_h)?;

        meps.apply_dirichlet(mesh);
        m1.apply_dirichlet(mesh);
        msig.apply_dirichlet(mesh);
        stiffness.apply_dirichlet(mesh);
        stab.apply_dirichlet(mesh);

        let mlhs = DiagonalOperator {
            values: meps
                .values
                .iter()
                .zip(&msig.values)
                .map(|(e, s)| e + 0.5 * tau * s)
                .collect(),
        };
        let combined = stiffness.add(&stab)?;
        let free = assembly::dirichlet_mask(mesh).into_iter().map(|b| !b).collect();

        Ok(SchemeOperators {
            tau,
            meps,
            msig,
            mlhs,
            m1,
            stiffness,
            stab,
            eps_h,
            sigma_h,
            combined,
            free,
        })
    }

    /// Replace the stabilization operator (used for fault injection).
    pub fn with_stab(mut self, stab: CsrMatrix) -> Result<Self> {
        self.combined = self.stiffness.add(&stab)?;
        self.stab = stab;
        Ok(self)
    }

    /// `(K + D) x`.
    pub fn apply_operator(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.combined.mul_vec_into(x, out)
    }

    pub fn is_free(&self, dof: usize) -> bool {
        self.free[dof]
    }
}

/// Nodal source `j^k` provider.
pub trait SourceProvider {
    fn source(&mut self, k: usize, t: f64, out: &mut VectorField);
}

pub struct ZeroSource;

impl SourceProvider for ZeroSource {
    fn source(&mut self, _k: usize, _t: f64, out: &mut VectorField) {
        out.values.iter_mut().for_each(|v| *v = 0.0);
    }
}

/// `j = −f` for the manufactured solution, from cached nodal time coefficients.
pub struct ManufacturedSource {
    steady: VectorField,
    linear: VectorField,
    quadratic: VectorField,
}

impl ManufacturedSource {
    pub fn new(exact: &ExactSolution, mesh: &Mesh) -> Self {
        let mut steady = VectorField::zeros(mesh);
        let mut linear = VectorField::zeros(mesh);
        let mut quadratic = VectorField::zeros(mesh);
        for (i, &p) in mesh.vertices().iter().enumerate() {
            let s = exact.source_terms_unchecked(p);
            for c in 0..2 {
                steady.values[2 * i + c] = -s.steady[c];
                linear.values[2 * i + c] = -s.linear[c];
                quadratic.values[2 * i + c] = -s.quadratic[c];
            }
        }
        for v in [&mut steady, &mut linear, &mut quadratic] {
            v.apply_dirichlet(mesh);
        }
        ManufacturedSource {
            steady,
            linear,
            quadratic,
        }
    }
}

impl SourceProvider for ManufacturedSource {
    fn source(&mut self, _k: usize, t: f64, out: &mut VectorField) {
        let t2 = t * t;
        for (d, o) in out.values.iter_mut().enumerate() {
            *o = self.steady.values[d] + t * self.linear.values[d] + t2 * self.quadratic.values[d];
        }
    }
}

/// Per-step callback; receives the state after initialisation and after every step.
pub trait Observer {
    fn observe(&mut self, state: &StepState, ops: &SchemeOperators) -> Result<()>;
}

/// Reusable buffers for [`step`].
#[derive(Debug, Clone)]
pub struct StepWorkspace {
    applied: Vec<f64>,
    next: Vec<f64>,
}

impl StepWorkspace {
    pub fn new(ndofs: usize) -> Self {
        StepWorkspace {
            applied: vec![0.0; ndofs],
            next: vec![0.0; ndofs],
        }
    }
}

/// Advance `state` from level `k` to `k + 1` with the source `j^k`.
pub fn step(
    state: &mut StepState,
    ops: &SchemeOperators,
    j: &VectorField,
    work: &mut StepWorkspace,
) -> Result<()> {
    let tau = ops.tau;
    let tau2 = tau * tau;
    ops.apply_operator(&state.curr.values, &mut work.applied)?;
    let prev = &state.prev.values;
    let curr = &state.curr.values;
    let mut finite = true;
    for d in 0..work.next.len() {
        if !ops.free[d] {
            work.next[d] = 0.0;
            continue;
        }
        let rhs = ops.meps.values[d] * (2.0 * curr[d] - prev[d])
            + 0.5 * tau * ops.msig.values[d] * prev[d]
            - tau2 * (work.applied[d] + ops.m1.values[d] * j.values[d]);
        let v = rhs / ops.mlhs.values[d];
        finite &= v.is_finite();
        work.next[d] = v;
    }
    if !finite {
        return Err(Error::BlowUp {
            step: state.k + 1,
            last_finite: state.k,
        });
    }
    std::mem::swap(&mut state.prev.values, &mut state.curr.values);
    std::mem::swap(&mut state.curr.values, &mut work.next);
    state.k += 1;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSpec {
    pub t_final: f64,
    pub tau: f64,
    pub cfl_c: f64,
    pub cfl_override: bool,
}

impl RunSpec {
    /// Number of time levels `N = T / τ`.
    pub fn num_levels(&self) -> Result<usize> {
        if !(self.tau > 0.0) || !(self.t_final > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "need T > 0 and tau > 0, got T={} tau={}",
                self.t_final, self.tau
            )));
        }
        let n = (self.t_final / self.tau).round();
        if n < 1.0 || (n * self.tau - self.t_final).abs() > 1e-12 * self.t_final.max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "tau={} does not divide T={}",
                self.tau, self.t_final
            )));
        }
        Ok(n as usize)
    }
}

/// Run from `(f0, f1)` to `E^N` at `t = T`, invoking observers at every level.
#[allow(clippy::too_many_arguments)]
pub fn run(
    mesh: &Mesh,
    field: &CoefficientField,
    f0: &VectorField,
    f1: &VectorField,
    source: &mut dyn SourceProvider,
    spec: &RunSpec,
    observers: &mut [&mut dyn Observer],
) -> Result<StepState> {
    let ops = SchemeOperators::assemble(mesh, field, spec.tau)?;
    run_with_operators(mesh, field, &ops, f0, f1, source, spec, observers)
}

#[allow(clippy::too_many_arguments)]
pub fn run_with_operators(
    mesh: &Mesh,
    field: &CoefficientField,
    ops: &SchemeOperators,
    f0: &VectorField,
    f1: &VectorField,
    source: &mut dyn SourceProvider,
    spec: &RunSpec,
    observers: &mut [&mut dyn Observer],
) -> Result<StepState> {
    let levels = spec.num_levels()?;
    f0.check_mesh(mesh)?;
    f1.check_mesh(mesh)?;
    if !spec.cfl_override {
        let bound = cfl_max_tau(mesh, field, spec.cfl_c)?;
        if spec.tau > bound {
            return Err(Error::CflViolation { tau: spec.tau, bound });
        }
    }

    let mut f0 = f0.clone();
    let mut f1 = f1.clone();
    f0.apply_dirichlet(mesh);
    f1.apply_dirichlet(mesh);
    let mut state = init_state(&f0, &f1, spec.tau)?;
    for obs in observers.iter_mut() {
        obs.observe(&state, ops)?;
    }

    let mut j = VectorField::zeros(mesh);
    let mut work = StepWorkspace::new(mesh.num_dofs());
    while state.k < levels {
        source.source(state.k, state.time(), &mut j);
        step(&mut state, ops, &j, &mut work)?;
        for obs in observers.iter_mut() {
            obs.observe(&state, ops)?;
        }
    }
    Ok(state)
}

/// Parameters of the empirical stability bisection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdProbe {
    pub steps: usize,
    pub growth_limit: f64,
    pub rel_width: f64,
    pub tau_min: f64,
    pub seed: u64,
}

impl Default for ThresholdProbe {
    fn default() -> Self {
        ThresholdProbe {
            steps: 200,
            growth_limit: 1e3,
            rel_width: 1e-2,
            tau_min: 1e-5,
            seed: 0,
        }
    }
}

/// Random combination of low sine modes, zero on `∂Ω`.
pub fn smooth_random_field(mesh: &Mesh, seed: u64) -> VectorField {
    use std::f64::consts::PI;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<[f64; 2]> = (0..9)
        .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
        .collect();
    let mut v = VectorField::from_fn(mesh, |p| {
        let mut out = [0.0; 2];
        for (n, c) in coeffs.iter().enumerate() {
            let (kx, ky) = ((n / 3 + 1) as f64, (n % 3 + 1) as f64);
            let s = (kx * PI * p[0]).sin() * (ky * PI * p[1]).sin();
            out[0] += c[0] * s;
            out[1] += c[1] * s;
        }
        out
    });
    v.apply_dirichlet(mesh);
    v
}

/// True when `steps` source-free steps at `tau` keep the field below the growth limit.
pub fn is_stable(mesh: &Mesh, field: &CoefficientField, tau: f64, probe: &ThresholdProbe) -> Result<bool> {
    let ops = SchemeOperators::assemble(mesh, field, tau)?;
    let e0 = smooth_random_field(mesh, probe.seed);
    let limit = probe.growth_limit * e0.max_abs();
    let mut state = init_state(&e0, &VectorField::zeros(mesh), tau)?;
    let zero = VectorField::zeros(mesh);
    let mut work = StepWorkspace::new(mesh.num_dofs());
    for _ in 0..probe.steps {
        match step(&mut state, &ops, &zero, &mut work) {
            Ok(()) => {}
            Err(Error::BlowUp { .. }) => return Ok(false),
            Err(e) => return Err(e),
        }
        if state.curr.max_abs() >= limit {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Bisection for the largest stable `τ` in `[tau_min, h]`.
pub fn estimate_stability_threshold(mesh: &Mesh, field: &CoefficientField, probe: &ThresholdProbe) -> Result<f64> {
    let mut lo = probe.tau_min;
    let mut hi = mesh.h();
    if is_stable(mesh, field, hi, probe)? {
        return Ok(hi);
    }
    if !is_stable(mesh, field, lo, probe)? {
        return Ok(lo);
    }
    while (hi - lo) > probe.rel_width * 0.5 * (hi + lo) {
        let mid = 0.5 * (lo + hi);
        if is_stable(mesh, field, mid, probe)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
