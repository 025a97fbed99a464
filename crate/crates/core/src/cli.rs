//! Command implementations behind the `maxwell` binary.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::analysis::{self, ConvergenceRow, EnergySample, ReportMetadata};
use crate::assembly::VectorField;
use crate::checks;
use crate::coefficients::CoefficientField;
use crate::config::{Command, Invocation, Mutation, Problem, RunConfig};
use crate::error::{Error, Result};
use crate::manufactured::{interpolate_exact, ExactSolution};
use crate::mesh::Mesh;
use crate::quadrature::{self, TriangleRule};
use crate::study;
use crate::timestepper::{
    self, estimate_stability_threshold, is_stable, ManufacturedSource, Observer, SchemeOperators, SourceProvider,
    StepState, ThresholdProbe, ZeroSource,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PROPERTY: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BLOWUP: i32 = 3;

/// Exit status for a failed command.
pub fn exit_code(err: &Error) -> i32 {
    match err.root() {
        Error::BlowUp { .. } => EXIT_BLOWUP,
        Error::Config(_) | Error::CflViolation { .. } | Error::InvalidArgument(_) | Error::Io { .. } => EXIT_CONFIG,
        _ => EXIT_PROPERTY,
    }
}

/// Parse `args` (without the program name), run the command and return the exit status.
pub fn main_with_args<I: IntoIterator<Item = String>>(args: I, out: &mut dyn Write) -> i32 {
    let result = crate::config::parse_args(args).and_then(|inv| execute(&inv, out));
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(out, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn execute(inv: &Invocation, out: &mut dyn Write) -> Result<i32> {
    let cfg = &inv.config;
    std::fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
    match inv.command {
        Command::Convergence => cmd_convergence(cfg, out),
        Command::Solve => cmd_solve(cfg, out),
        Command::Verify => cmd_verify(cfg, out),
        Command::Cfl => cmd_cfl(cfg, out),
    }
}

fn say(out: &mut dyn Write, line: impl std::fmt::Display) -> Result<()> {
    writeln!(out, "{line}").map_err(|e| Error::io("<stdout>", e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

/// `SOURCE_DATE_EPOCH` when set (reproducible builds convention), else the wall clock,
/// as Unix seconds.
pub fn timestamp() -> String {
    if let Ok(s) = std::env::var("SOURCE_DATE_EPOCH") {
        return s;
    }
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs().to_string())
        .unwrap_or_else(|_| "0".into())
}

pub fn table_stem(cfg: &RunConfig) -> String {
    match cfg.m {
        Some(m) => format!("table_m{m}"),
        None => "table_uniform".into(),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_table_csv(rows: &[ConvergenceRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["l", "nel", "nno", "theta1", "ratio1", "r1", "theta2", "ratio2", "r2"])?;
    for r in rows {
        w.write_record([
            r.level.to_string(),
            r.nel.to_string(),
            r.nno.to_string(),
            r.theta1.to_string(),
            opt(r.ratio1),
            opt(r.r1),
            r.theta2.to_string(),
            opt(r.ratio2),
            opt(r.r2),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Markdown table in the column layout of the published tables.
pub fn table_markdown(rows: &[ConvergenceRow]) -> String {
    let f = |v: Option<f64>, prec: usize| v.map_or("-".to_string(), |x| format!("{x:.prec$}"));
    let mut s = String::from(
        "| l | nel | nno | Θ⁽¹⁾ | Θ⁽¹⁾_l/Θ⁽¹⁾_{l+1} | r⁽¹⁾ | Θ⁽²⁾ | Θ⁽²⁾_l/Θ⁽²⁾_{l+1} | r⁽²⁾ |\n\
         |---|---|---|---|---|---|---|---|---|\n",
    );
    for r in rows {
        s.push_str(&format!(
            "| {} | {} | {} | {:.6} | {} | {} | {:.6} | {} | {} |\n",
            r.level,
            r.nel,
            r.nno,
            r.theta1,
            f(r.ratio1, 6),
            f(r.r1, 2),
            r.theta2,
            f(r.ratio2, 6),
            f(r.r2, 2)
        ));
    }
    s
}

pub fn cmd_convergence(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let field = cfg.field();
    let spec = cfg.run_spec();
    let (mut report, _) = study::convergence_study(&cfg.levels, &field, &spec, false).map_err(|e| e.at_stage("convergence"))?;
    report.metadata = Some(ReportMetadata {
        m: cfg.m.unwrap_or(0),
        tau: cfg.tau,
        t_final: cfg.t_final,
        cfl_c: cfg.cfl_c,
        timestamp: timestamp(),
        config_hash: cfg.hash(),
    });
    let stem = table_stem(cfg);
    let dir = &cfg.output_dir;
    write_table_csv(&report.rows, &dir.join(format!("{stem}.csv"))).map_err(|e| e.at_stage("write table"))?;
    let md = table_markdown(&report.rows);
    let md_path = dir.join(format!("{stem}.md"));
    std::fs::write(&md_path, &md).map_err(|e| Error::io(&md_path, e))?;
    write_json(&report, &dir.join(format!("{stem}.json")))?;
    say(out, md.trim_end())?;
    Ok(EXIT_OK)
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn write_snapshot(mesh: &Mesh, e: &VectorField, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x", "y", "E1", "E2"])?;
    for (i, p) in mesh.vertices().iter().enumerate() {
        let v = e.node(i);
        w.write_record([p[0].to_string(), p[1].to_string(), v[0].to_string(), v[1].to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_energy(samples: &[EnergySample], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "dt_e_eps", "e_sigma", "grad_e", "div_e_eps_m1", "total"])?;
    for s in samples {
        w.write_record([s.t, s.dt_e_eps, s.e_sigma, s.grad_e, s.div_e_eps_m1, s.total].map(|v| v.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `snapshot_{k}.csv` every `every` levels and at the final level.
pub struct SnapshotWriter<'a> {
    pub mesh: &'a Mesh,
    pub dir: PathBuf,
    pub every: usize,
    pub last: usize,
    pub written: Vec<usize>,
}

impl Observer for SnapshotWriter<'_> {
    fn observe(&mut self, state: &StepState, _ops: &SchemeOperators) -> Result<()> {
        let k = state.k;
        if (self.every > 0 && k % self.every == 0) || k == self.last {
            write_snapshot(self.mesh, &state.curr, &self.dir.join(format!("snapshot_{k}.csv")))?;
            self.written.push(k);
        }
        Ok(())
    }
}

pub fn cmd_solve(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let [level] = cfg.levels[..] else {
        return Err(Error::Config("solve needs exactly one level in mesh.levels".into()));
    };
    let field = cfg.field();
    let spec = cfg.run_spec();
    let n = spec.num_levels()?;
    let mesh = Mesh::structured(level)?;
    let dir = &cfg.output_dir;
    mesh.save_csv(&dir.join("mesh.csv"))?;

    let ops = SchemeOperators::assemble(&mesh, &field, cfg.tau).map_err(|e| e.at_stage("assemble"))?;
    if cfg.output_operators {
        for (name, m) in [("stiffness", &ops.stiffness), ("stab", &ops.stab)] {
            let p = dir.join(format!("{name}_coo.csv"));
            let mut w = create(&p)?;
            m.write_coo(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(&p, e))?;
        }
    }

    let exact = ExactSolution::new(field);
    let mut source: Box<dyn SourceProvider> = match cfg.problem {
        Problem::Manufactured => Box::new(ManufacturedSource::new(&exact, &mesh)),
        Problem::Zero => Box::new(ZeroSource),
    };
    let zero = VectorField::zeros(&mesh);
    let mut energy = analysis::EnergyMonitor::new(&mesh);
    let mut snaps = SnapshotWriter {
        mesh: &mesh,
        dir: dir.clone(),
        every: cfg.output_every,
        last: n,
        written: Vec::new(),
    };
    let state = timestepper::run_with_operators(
        &mesh,
        &field,
        &ops,
        &zero,
        &zero,
        source.as_mut(),
        &spec,
        &mut [&mut energy, &mut snaps],
    )
    .map_err(|e| e.at_stage("time stepping"))?;
    write_energy(&energy.samples, &dir.join("energy.csv"))?;

    say(out, format!("level {level}: {} steps to t = {}", n - 1, state.time()))?;
    say(out, format!("snapshots written: {}", snaps.written.len()))?;
    say(out, format!("max |E_h| = {:.6e}", max_magnitude(&state.curr)))?;
    if cfg.problem == Problem::Manufactured {
        let e = analysis::relative_errors(&exact, &state.curr, &mesh, state.time())?;
        let ie = interpolate_exact(&exact, &mesh, state.time());
        say(out, format!("max |E_exact| (nodes) = {:.6e}", max_magnitude(&ie)))?;
        say(out, format!("theta1 = {:.6} theta2 = {:.6}", e.theta1, e.theta2))?;
    }
    Ok(EXIT_OK)
}

/// Largest pointwise magnitude `|E|` over the nodes.
pub fn max_magnitude(e: &VectorField) -> f64 {
    (0..e.num_nodes())
        .map(|i| {
            let v = e.node(i);
            v[0].hypot(v[1])
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CflRow {
    pub level: u32,
    pub h: f64,
    pub formula_bound: f64,
    pub threshold: f64,
    pub threshold_ratio: Option<f64>,
    pub tau: f64,
    pub tau_stable: bool,
}

pub fn cfl_rows(cfg: &RunConfig) -> Result<Vec<CflRow>> {
    let field = cfg.field();
    let probe = ThresholdProbe {
        seed: cfg.seed,
        ..ThresholdProbe::default()
    };
    let mut rows: Vec<CflRow> = Vec::new();
    for &level in &cfg.levels {
        let mesh = Mesh::structured(level)?;
        let threshold = estimate_stability_threshold(&mesh, &field, &probe)?;
        rows.push(CflRow {
            level,
            h: mesh.h(),
            formula_bound: timestepper::cfl_max_tau(&mesh, &field, cfg.cfl_c)?,
            threshold,
            threshold_ratio: rows.last().map(|p| threshold / p.threshold),
            tau: cfg.tau,
            tau_stable: is_stable(&mesh, &field, cfg.tau, &probe)?,
        });
    }
    Ok(rows)
}

pub fn cmd_cfl(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let rows = cfl_rows(cfg).map_err(|e| e.at_stage("cfl probe"))?;
    let path = cfg.output_dir.join("cfl.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["l", "h", "formula_bound", "threshold", "threshold_ratio", "tau", "tau_stable"])?;
    for r in &rows {
        w.write_record([
            r.level.to_string(),
            r.h.to_string(),
            r.formula_bound.to_string(),
            r.threshold.to_string(),
            opt(r.threshold_ratio),
            r.tau.to_string(),
            r.tau_stable.to_string(),
        ])?;
        say(
            out,
            format!(
                "l={} h={} bound(C={})={:.6e} threshold={:.6e} ratio={} tau={} {}",
                r.level,
                r.h,
                cfg.cfl_c,
                r.formula_bound,
                r.threshold,
                r.threshold_ratio.map_or("-".into(), |x| format!("{x:.3}")),
                r.tau,
                if r.tau_stable { "stable" } else { "UNSTABLE" }
            ),
        )?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(EXIT_OK)
}

/// One line of the verification report.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn prop(name: &'static str, passed: bool, detail: String) -> PropertyResult {
    PropertyResult { name, passed, detail }
}

/// The property suite run by `verify`.
pub fn verify_properties(cfg: &RunConfig) -> Result<Vec<PropertyResult>> {
    let field = cfg.field();
    let flip = cfg.mutation == Mutation::FlipStab;
    let mesh3 = Mesh::structured(3)?;
    let mut res = Vec::new();

    let ok = (1..=6).map(checks::mesh_invariants).collect::<Result<Vec<_>>>()?;
    res.push(prop("mesh invariants", ok.iter().all(|&b| b), "levels 1..6".into()));

    let q = [TriangleRule::degree4(), TriangleRule::degree7()]
        .iter()
        .map(quadrature::max_monomial_error)
        .fold(0.0, f64::max);
    res.push(prop("quadrature exactness", q < 1e-14, format!("max monomial error {q:.2e}")));

    let k = checks::stiffness_block_error();
    let d = checks::divdiv_rule_mismatch(&mesh3, &field)?;
    res.push(prop(
        "operator exactness",
        k < 1e-14 && d < 1e-14,
        format!("stiffness block {k:.2e}, div-div rules {d:.2e}"),
    ));

    let (div, scale) = checks::divergence_identity(&field, 10_000, 0.25, cfg.seed)?;
    res.push(prop(
        "divergence identity",
        div <= 1e-10 * scale,
        format!("max |div(eps E)| {div:.2e}, scale {scale:.3e}"),
    ));

    let fd = checks::derivative_oracle(&field, 100, 0.25, 1e-5, cfg.seed)?
        .max(checks::derivative_oracle(&CoefficientField::bumps(12)?, 100, 0.25, 1e-5, cfg.seed)?);
    res.push(prop("derivatives vs finite differences", fd < 1e-6, format!("max relative {fd:.2e}")));

    let probe = analysis::coercivity_probe(&mesh3, &field, 1000, cfg.seed)?;
    res.push(prop(
        "coercivity intermediate bound",
        probe.intermediate_bound_holds(1e-12),
        format!(
            "min slack {:.3e}, half-norm bound satisfied by {:.1}%",
            probe.min_relative_slack,
            100.0 * probe.half_norm_bound_fraction
        ),
    ));

    let tau = cfg.cfl_override.then_some(cfg.tau);
    let (drift, used) = checks::leapfrog_drift(4, tau, cfg.cfl_c, 500, cfg.seed)?;
    res.push(prop(
        "leapfrog conservation",
        drift <= 1e-8,
        format!("relative drift {drift:.2e} at tau {used:.4e}"),
    ));

    let idem = checks::dirichlet_idempotent(&mesh3, &field, cfg.seed)?;
    res.push(prop("dirichlet idempotence", idem, String::new()));

    let spec = timestepper::RunSpec {
        t_final: 0.25,
        tau: 0.0005,
        cfl_c: cfg.cfl_c,
        cfl_override: false,
    };
    let conv = match study::convergence_study(&[3, 4], &field, &spec, flip) {
        Ok((rep, _)) => {
            let r1 = rep.rows[1].r1.unwrap_or(0.0);
            let t1 = rep.rows[1].theta1;
            prop(
                "manufactured convergence",
                r1 >= 1.5 && t1 <= 0.05,
                format!("theta1(l=4) {t1:.5}, L2 rate {r1:.2}"),
            )
        }
        Err(e) if matches!(e.root(), Error::BlowUp { .. }) => prop("manufactured convergence", false, e.to_string()),
        Err(e) => return Err(e),
    };
    res.push(conv);
    Ok(res)
}

pub fn cmd_verify(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let results = verify_properties(cfg).map_err(|e| e.at_stage("verify"))?;
    for r in &results {
        say(
            out,
            format!("{} {}{}", if r.passed { "PASS" } else { "FAIL" }, r.name, if r.detail.is_empty() { String::new() } else { format!(": {}", r.detail) }),
        )?;
    }
    let failed: Vec<_> = results.iter().filter(|r| !r.passed).map(|r| r.name).collect();
    if failed.is_empty() {
        say(out, "all properties hold")?;
        Ok(EXIT_OK)
    } else {
        say(out, format!("failed: {}", failed.join(", ")))?;
        Ok(EXIT_PROPERTY)
    }
}
