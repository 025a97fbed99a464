//! Numerical property checks shared by the `verify` command and the test suites.
//! Each returns a measured quantity; callers decide the threshold.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{EnergyMonitor, InvariantMonitor};
use crate::assembly::{self, ApplyDirichlet, DivDivRule, VectorField};
use crate::coefficients::{Coefficient, CoefficientField};
use crate::error::{Error, Result};
use crate::manufactured::{finite_difference, ExactSolution, OUTLINE_TOL};
use crate::mesh::{ElementGeometry, Mesh, Point};
use crate::study;
use crate::timestepper::{self, smooth_random_field, RunSpec, ZeroSource};

/// Seeded uniform points in the open unit square, kept off `∂Ω` and `∂Ω₁`.
pub fn interior_samples(field: &CoefficientField, n: usize, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = Vec::with_capacity(n);
    while pts.len() < n {
        let p = [rng.gen_range(1e-3..1.0 - 1e-3), rng.gen_range(1e-3..1.0 - 1e-3)];
        if !field.inner_box.on_outline(p, 1e3 * OUTLINE_TOL) {
            pts.push(p);
        }
    }
    pts
}

/// Max entry error of the assembled unit-triangle stiffness block against
/// `½[[2,−1,−1],[−1,1,0],[−1,0,1]]`.
pub fn stiffness_block_error() -> f64 {
    let g = ElementGeometry::from_points(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
    let k = assembly::element_stiffness(&g);
    let exact = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
    let mut worst = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            worst = worst.max((k[i][j] - exact[i][j]).abs());
        }
    }
    worst
}

/// Max entrywise difference of the div–div operator under the centroid and
/// edge-midpoint rules.
pub fn divdiv_rule_mismatch(mesh: &Mesh, field: &CoefficientField) -> Result<f64> {
    let eps = field.sample_nodal(mesh, Coefficient::Epsilon);
    let c = assembly::divdiv_stab_with_rule(mesh, &eps, DivDivRule::Centroid)?;
    let e = assembly::divdiv_stab_with_rule(mesh, &eps, DivDivRule::EdgeMidpoints)?;
    let diff = c.add(&e.scaled(-1.0))?;
    Ok(diff.values().iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

/// `(max |∇·(εE)|, scale)` over `n` seeded interior points at time `t`, where
/// `scale` is the largest `ε |∂_i E_c|` seen.
pub fn divergence_identity(field: &CoefficientField, n: usize, t: f64, seed: u64) -> Result<(f64, f64)> {
    let exact = ExactSolution::new(*field);
    let (mut worst, mut scale) = (0.0f64, 0.0f64);
    for p in interior_samples(field, n, seed) {
        worst = worst.max(exact.div_eps_e(p, t)?.abs());
        let g = exact.exact_derivatives(p, t)?.grad;
        let eps = field.epsilon_at(p);
        for row in g {
            for v in row {
                scale = scale.max(eps * v.abs());
            }
        }
    }
    Ok((worst, scale))
}

/// Largest relative closed-form vs finite-difference mismatch over `n` seeded points.
pub fn derivative_oracle(field: &CoefficientField, n: usize, t: f64, step: f64, seed: u64) -> Result<f64> {
    let exact = ExactSolution::new(*field);
    let mut worst = 0.0f64;
    for p in interior_samples(field, n, seed) {
        worst = worst.max(finite_difference::max_relative_mismatch(&exact, p, t, step)?);
    }
    Ok(worst)
}

/// Relative drift of the leapfrog invariant for `ε ≡ 1, σ ≡ 0, j ≡ 0` over `steps` steps.
/// `tau = None` uses half the CFL bound for `cfl_c`; an explicit `tau` bypasses the CFL guard.
/// A blow-up counts as infinite drift.
pub fn leapfrog_drift(level: u32, tau: Option<f64>, cfl_c: f64, steps: usize, seed: u64) -> Result<(f64, f64)> {
    let mesh = Mesh::structured(level)?;
    let field = CoefficientField::uniform();
    let tau = match tau {
        Some(t) => t,
        None => 0.5 * timestepper::cfl_max_tau(&mesh, &field, cfl_c)?,
    };
    let v = smooth_random_field(&mesh, seed);
    // `steps + 1` time levels, i.e. `steps` updates.
    let spec = RunSpec {
        t_final: (steps + 1) as f64 * tau,
        tau,
        cfl_c,
        cfl_override: true,
    };
    let mut mon = InvariantMonitor::default();
    match timestepper::run(&mesh, &field, &v, &VectorField::zeros(&mesh), &mut ZeroSource, &spec, &mut [&mut mon]) {
        Ok(_) => Ok((mon.relative_drift(), tau)),
        Err(e) if matches!(e.root(), Error::BlowUp { .. }) => Ok((f64::INFINITY, tau)),
        Err(e) => Err(e),
    }
}

/// Energy growth factor (max over the run / max over the first 10 levels) of a
/// zero-source run from smooth random data.
pub fn damped_energy_growth(
    level: u32,
    field: &CoefficientField,
    tau: f64,
    steps: usize,
    seed: u64,
    flip_stab: bool,
) -> Result<f64> {
    let mesh = Mesh::structured(level)?;
    let ops = study::scheme_operators(&mesh, field, tau, flip_stab)?;
    let v = smooth_random_field(&mesh, seed);
    let spec = RunSpec {
        t_final: (steps + 1) as f64 * tau,
        tau,
        cfl_c: timestepper::DEFAULT_CFL_C,
        cfl_override: true,
    };
    let mut mon = EnergyMonitor::new(&mesh);
    let zero = VectorField::zeros(&mesh);
    match timestepper::run_with_operators(&mesh, field, &ops, &v, &zero, &mut ZeroSource, &spec, &mut [&mut mon]) {
        Ok(_) if mon.all_finite() => Ok(mon.growth_factor(10)),
        Ok(_) => Ok(f64::INFINITY),
        Err(e) if matches!(e.root(), Error::BlowUp { .. }) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

/// Whether applying the Dirichlet mask twice equals applying it once, for the
/// stiffness, the mass and a random field.
pub fn dirichlet_idempotent(mesh: &Mesh, field: &CoefficientField, seed: u64) -> Result<bool> {
    let eps = field.sample_nodal(mesh, Coefficient::Epsilon);
    let mut k = assembly::stiffness(mesh);
    let mut m = assembly::lumped_mass(mesh, &eps)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = VectorField {
        values: (0..mesh.num_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    };
    k.apply_dirichlet(mesh);
    m.apply_dirichlet(mesh);
    v.apply_dirichlet(mesh);
    let (k1, m1, v1) = (k.clone(), m.clone(), v.clone());
    k.apply_dirichlet(mesh);
    m.apply_dirichlet(mesh);
    v.apply_dirichlet(mesh);
    Ok(k == k1 && m == m1 && v == v1 && v.is_boundary_constrained(mesh))
}

/// Structural mesh invariants: counts, positive areas summing to one, perimeter size.
pub fn mesh_invariants(level: u32) -> Result<bool> {
    let mesh = Mesh::structured(level)?;
    let n = 1usize << level;
    let area: f64 = mesh.geometry().iter().map(|g| g.area).sum();
    Ok(mesh.num_triangles() == 2 * n * n
        && mesh.num_vertices() == (n + 1) * (n + 1)
        && mesh.boundary_nodes().len() == 4 * n
        && mesh.geometry().iter().all(|g| g.area > 0.0)
        && (area - 1.0).abs() < 1e-12)
}
