//! C ABI over `maxwell-core`.
//!
//! Objects are opaque handles created by `*_new` and released by `*_free`.
//! Every fallible call returns an [`MxStatus`]; on failure a message is kept
//! per thread and can be read with [`mx_last_error_message`]. Panics never
//! cross the boundary; they surface as `MX_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use maxwell_core::analysis::{self, energy_sample};
use maxwell_core::assembly::{ApplyDirichlet, VectorField};
use maxwell_core::coefficients::CoefficientField;
use maxwell_core::manufactured::ExactSolution;
use maxwell_core::mesh::Mesh;
use maxwell_core::timestepper::{
    self, init_state, step, ManufacturedSource, RunSpec, SchemeOperators, SourceProvider, StepState, StepWorkspace,
    ZeroSource,
};
use maxwell_core::Error;

/// Result codes of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MxStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    BufferTooSmall = 3,
    CflViolation = 4,
    BlowUp = 5,
    Finished = 6,
    Internal = 7,
    Panic = 8,
}

/// Terms of the discrete energy functional at the current level.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MxEnergy {
    pub t: f64,
    pub dt_e_eps: f64,
    pub e_sigma: f64,
    pub grad_e: f64,
    pub div_e_eps_m1: f64,
    pub total: f64,
}

/// Structured triangulation of the unit square.
pub struct MxMesh {
    mesh: Mesh,
}

/// One time-stepping run with fixed operators.
pub struct MxSimulation {
    mesh: Mesh,
    exact: Option<ExactSolution>,
    ops: SchemeOperators,
    state: StepState,
    source: Box<dyn SourceProvider>,
    work: StepWorkspace,
    j: VectorField,
    levels: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &Error) -> MxStatus {
    match err.root() {
        Error::BlowUp { .. } => MxStatus::BlowUp,
        Error::CflViolation { .. } => MxStatus::CflViolation,
        Error::InvalidArgument(_) | Error::Config(_) | Error::OutOfRange { .. } | Error::DimensionMismatch { .. } => {
            MxStatus::InvalidArgument
        }
        _ => MxStatus::Internal,
    }
}

/// Run `f`, recording failures and trapping panics.
fn guard(f: impl FnOnce() -> Result<(), (MxStatus, String)>) -> MxStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            MxStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside maxwell-ffi");
            MxStatus::Panic
        }
    }
}

fn core<T>(r: maxwell_core::Result<T>) -> Result<T, (MxStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn invalid(msg: impl Into<String>) -> (MxStatus, String) {
    (MxStatus::InvalidArgument, msg.into())
}

fn null(what: &str) -> (MxStatus, String) {
    (MxStatus::NullPointer, format!("{what} is null"))
}

/// `m = 0` selects the uniform medium, otherwise the two-bump profile with exponent `m`.
fn field_for(m: u32) -> Result<CoefficientField, (MxStatus, String)> {
    if m == 0 {
        Ok(CoefficientField::uniform())
    } else {
        core(CoefficientField::bumps(m))
    }
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (MxStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mx_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(s) => s,
        Err(_) => panic!("version string"),
    };
    VERSION.as_ptr()
}

/// Copy the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len`). Returns the length needed including the terminator.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn mx_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len() + 1
    })
}

/// Build the level-`level` mesh (`h = 2^-level`).
///
/// # Safety
/// `out` must be a valid pointer; on success it receives a handle to free with [`mx_mesh_free`].
#[no_mangle]
pub unsafe extern "C" fn mx_mesh_new(level: u32, out: *mut *mut MxMesh) -> MxStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let mesh = core(Mesh::structured(level))?;
        *out = Box::into_raw(Box::new(MxMesh { mesh }));
        Ok(())
    })
}

/// # Safety
/// `mesh` must be null or a handle from [`mx_mesh_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mx_mesh_free(mesh: *mut MxMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// # Safety
/// `mesh` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mx_mesh_counts(
    mesh: *const MxMesh,
    num_vertices: *mut usize,
    num_triangles: *mut usize,
) -> MxStatus {
    guard(|| {
        let m = &mesh.as_ref().ok_or_else(|| null("mesh"))?.mesh;
        *out_ref(num_vertices, "num_vertices")? = m.num_vertices();
        *out_ref(num_triangles, "num_triangles")? = m.num_triangles();
        Ok(())
    })
}

/// Copy vertex coordinates as interleaved `x, y` pairs into `xy` (`len ≥ 2·num_vertices`).
///
/// # Safety
/// `mesh` must be a live handle; `xy` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mx_mesh_vertices(mesh: *const MxMesh, xy: *mut f64, len: usize) -> MxStatus {
    guard(|| {
        let m = &mesh.as_ref().ok_or_else(|| null("mesh"))?.mesh;
        if xy.is_null() {
            return Err(null("xy"));
        }
        let need = 2 * m.num_vertices();
        if len < need {
            return Err((MxStatus::BufferTooSmall, format!("need {need} doubles, got {len}")));
        }
        let dst = std::slice::from_raw_parts_mut(xy, need);
        for (i, p) in m.vertices().iter().enumerate() {
            dst[2 * i] = p[0];
            dst[2 * i + 1] = p[1];
        }
        Ok(())
    })
}

/// Formula bound on the time step for `level`, profile `m` and constant `c`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mx_cfl_max_tau(level: u32, m: u32, c: f64, out: *mut f64) -> MxStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let mesh = core(Mesh::structured(level))?;
        *out = core(timestepper::cfl_max_tau(&mesh, &field_for(m)?, c))?;
        Ok(())
    })
}

/// Create a run on the level-`level` mesh from zero initial data to `t_final`.
/// `m = 0` is the uniform medium. With `manufactured` the scheme is driven by the
/// manufactured source; otherwise the source is zero. Unless `cfl_override`, a
/// step above the CFL bound for `cfl_c` is refused with `MX_STATUS_CFL_VIOLATION`.
///
/// # Safety
/// `out` must be valid; on success it receives a handle to free with [`mx_simulation_free`].
#[no_mangle]
pub unsafe extern "C" fn mx_simulation_new(
    level: u32,
    m: u32,
    tau: f64,
    t_final: f64,
    cfl_c: f64,
    cfl_override: bool,
    manufactured: bool,
    out: *mut *mut MxSimulation,
) -> MxStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let field = field_for(m)?;
        if manufactured && m == 0 {
            return Err(invalid("the manufactured problem needs a bump profile (m > 0)"));
        }
        let spec = RunSpec {
            t_final,
            tau,
            cfl_c,
            cfl_override,
        };
        let levels = core(spec.num_levels())?;
        let mesh = core(Mesh::structured(level))?;
        if !cfl_override {
            let bound = core(timestepper::cfl_max_tau(&mesh, &field, cfl_c))?;
            if tau > bound {
                return Err(core::<()>(Err(Error::CflViolation { tau, bound })).unwrap_err());
            }
        }
        let ops = core(SchemeOperators::assemble(&mesh, &field, tau))?;
        let exact = manufactured.then(|| ExactSolution::new(field));
        let source: Box<dyn SourceProvider> = match &exact {
            Some(ex) => Box::new(ManufacturedSource::new(ex, &mesh)),
            None => Box::new(ZeroSource),
        };
        let zero = VectorField::zeros(&mesh);
        let state = core(init_state(&zero, &zero, tau))?;
        let sim = MxSimulation {
            work: StepWorkspace::new(mesh.num_dofs()),
            j: zero,
            mesh,
            exact,
            ops,
            state,
            source,
            levels,
        };
        *out = Box::into_raw(Box::new(sim));
        Ok(())
    })
}

/// # Safety
/// `sim` must be null or a handle from [`mx_simulation_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mx_simulation_free(sim: *mut MxSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Number of degrees of freedom (`2 · num_vertices`).
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mx_simulation_num_dofs(sim: *const MxSimulation, out: *mut usize) -> MxStatus {
    guard(|| {
        let s = sim.as_ref().ok_or_else(|| null("sim"))?;
        *out_ref(out, "out")? = s.mesh.num_dofs();
        Ok(())
    })
}

/// Restart from `E^0 = f0`, `E^1 = f0 + τ f1` (node-major `E1, E2` pairs, length `num_dofs`).
/// Boundary values are zeroed.
///
/// # Safety
/// `sim` must be a live handle; `f0` and `f1` must each point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mx_simulation_set_initial(
    sim: *mut MxSimulation,
    f0: *const f64,
    f1: *const f64,
    len: usize,
) -> MxStatus {
    guard(|| {
        let s = sim.as_mut().ok_or_else(|| null("sim"))?;
        if f0.is_null() || f1.is_null() {
            return Err(null("initial data"));
        }
        if len != s.mesh.num_dofs() {
            return Err(invalid(format!("expected {} values, got {len}", s.mesh.num_dofs())));
        }
        let mut a = VectorField {
            values: std::slice::from_raw_parts(f0, len).to_vec(),
        };
        let mut b = VectorField {
            values: std::slice::from_raw_parts(f1, len).to_vec(),
        };
        if !a.is_finite() || !b.is_finite() {
            return Err(invalid("initial data must be finite"));
        }
        a.apply_dirichlet(&s.mesh);
        b.apply_dirichlet(&s.mesh);
        s.state = core(init_state(&a, &b, s.ops.tau))?;
        Ok(())
    })
}

/// Advance at most `max_steps` steps, stopping at the final time. `taken` receives
/// the number performed. Returns `MX_STATUS_FINISHED` when already at the final time.
///
/// # Safety
/// `sim` must be a live handle; `taken` may be null.
#[no_mangle]
pub unsafe extern "C" fn mx_simulation_step(sim: *mut MxSimulation, max_steps: usize, taken: *mut usize) -> MxStatus {
    let mut done = 0usize;
    let status = guard(|| {
        let s = sim.as_mut().ok_or_else(|| null("sim"))?;
        if s.state.k >= s.levels {
            return Err((MxStatus::Finished, "final time reached".into()));
        }
        while done < max_steps && s.state.k < s.levels {
            s.source.source(s.state.k, s.state.time(), &mut s.j);
            core(step(&mut s.state, &s.ops, &s.j, &mut s.work))?;
            done += 1;
        }
        Ok(())
    });
    if let Some(t) = taken.as_mut() {
        *t = done;
    }
    status
}

/// Current time `k τ` and level index `k`.
///
/// # Safety
/// `sim` must be a live handle; outputs may be null.
#[no_mangle]
pub unsafe extern "C" fn mx_simulation_time(sim: *const MxSimulation, t: *mut f64, k: *mut usize) -> MxStatus {
    guard(|| {
        let s = sim.as_ref().ok_or_else(|| null("sim"))?;
        if let Some(t) = t.as_mut() {
            *t = s.state.time();
        }
        if let Some(k) = k.as_mut() {
            *k = s.state.k;
        }
        Ok(())
    })
}

/// Copy the current field `E^k` (node-major `E1, E2` pairs) into `buf`.
///
/// # Safety
/// `sim` must be a live handle; `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mx_simulation_field(sim: *const MxSimulation, buf: *mut f64, len: usize) -> MxStatus {
    guard(|| {
        let s = sim.as_ref().ok_or_else(|| null("sim"))?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let v = &s.state.curr.values;
        if len < v.len() {
            return Err((MxStatus::BufferTooSmall, format!("need {} doubles, got {len}", v.len())));
        }
        std::slice::from_raw_parts_mut(buf, v.len()).copy_from_slice(v);
        Ok(())
    })
}

/// Relative L2 and gradient errors against the manufactured solution at the current time.
///
/// # Safety
/// `sim` must be a live handle; outputs must be valid.
#[no_mangle]
pub unsafe extern "C" fn mx_simulation_errors(sim: *const MxSimulation, theta1: *mut f64, theta2: *mut f64) -> MxStatus {
    guard(|| {
        let s = sim.as_ref().ok_or_else(|| null("sim"))?;
        let exact = s
            .exact
            .as_ref()
            .ok_or_else(|| invalid("errors need a manufactured run"))?;
        let e = core(analysis::relative_errors(exact, &s.state.curr, &s.mesh, s.state.time()))?;
        *out_ref(theta1, "theta1")? = e.theta1;
        *out_ref(theta2, "theta2")? = e.theta2;
        Ok(())
    })
}

/// Discrete energy functional at the current level.
///
/// # Safety
/// `sim` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mx_simulation_energy(sim: *const MxSimulation, out: *mut MxEnergy) -> MxStatus {
    guard(|| {
        let s = sim.as_ref().ok_or_else(|| null("sim"))?;
        let e = core(energy_sample(&s.state, &s.ops, &s.mesh))?;
        *out_ref(out, "out")? = MxEnergy {
            t: e.t,
            dt_e_eps: e.dt_e_eps,
            e_sigma: e.e_sigma,
            grad_e: e.grad_e,
            div_e_eps_m1: e.div_e_eps_m1,
            total: e.total,
        };
        Ok(())
    })
}
