//! Manufactured-solution runs, one level at a time or as a refinement sweep.

use crate::analysis::{self, ConvergenceReport, EnergyMonitor, EnergySample, ErrorPair};
use crate::assembly::VectorField;
use crate::coefficients::CoefficientField;
use crate::error::Result;
use crate::manufactured::ExactSolution;
use crate::mesh::Mesh;
use crate::timestepper::{self, ManufacturedSource, Observer, RunSpec, SchemeOperators, StepState};

/// Result of one manufactured run at one level.
#[derive(Debug, Clone)]
pub struct LevelRun {
    pub mesh: Mesh,
    pub errors: ErrorPair,
    pub final_state: StepState,
    pub energy: Vec<EnergySample>,
}

/// Operators for `field` on `mesh`, optionally with the stabilization sign flipped
/// (a deliberate fault for mutation testing).
pub fn scheme_operators(mesh: &Mesh, field: &CoefficientField, tau: f64, flip_stab: bool) -> Result<SchemeOperators> {
    let ops = SchemeOperators::assemble(mesh, field, tau)?;
    if flip_stab {
        let flipped = ops.stab.scaled(-1.0);
        ops.with_stab(flipped)
    } else {
        Ok(ops)
    }
}

/// Drive the scheme with `j = −f` from zero initial data to `T` and measure the errors.
pub fn run_manufactured_level(
    level: u32,
    field: &CoefficientField,
    spec: &RunSpec,
    flip_stab: bool,
    extra: &mut [&mut dyn Observer],
) -> Result<LevelRun> {
    let mesh = Mesh::structured(level)?;
    let exact = ExactSolution::new(*field);
    let zero = VectorField::zeros(&mesh);
    let ops = scheme_operators(&mesh, field, spec.tau, flip_stab)?;
    let mut source = ManufacturedSource::new(&exact, &mesh);
    let mut monitor = EnergyMonitor::new(&mesh);
    let final_state = {
        let mut observers: Vec<&mut dyn Observer> = Vec::with_capacity(extra.len() + 1);
        observers.push(&mut monitor);
        for o in extra.iter_mut() {
            observers.push(&mut **o);
        }
        timestepper::run_with_operators(&mesh, field, &ops, &zero, &zero, &mut source, spec, &mut observers)?
    };
    let energy = monitor.samples;
    let errors = analysis::relative_errors(&exact, &final_state.curr, &mesh, final_state.time())?;
    Ok(LevelRun {
        mesh,
        errors,
        final_state,
        energy,
    })
}

/// Errors and rates over `levels`, in order.
pub fn convergence_study(
    levels: &[u32],
    field: &CoefficientField,
    spec: &RunSpec,
    flip_stab: bool,
) -> Result<(ConvergenceReport, Vec<LevelRun>)> {
    let runs = levels
        .iter()
        .map(|&l| run_manufactured_level(l, field, spec, flip_stab, &mut []))
        .collect::<Result<Vec<_>>>()?;
    let errors: Vec<ErrorPair> = runs.iter().map(|r| r.errors).collect();
    Ok((analysis::convergence_rates(&errors)?, runs))
}
