use std::path::Path;
use std::process::{Command, Output};

fn maxwell(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maxwell"))
        .args(args)
        .arg("--output.dir")
        .arg(dir)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn convergence_writes_tables_deterministically() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["convergence", "--mesh.levels", "2..4", "--coeff.m", "8"];
    let o = maxwell(a.path(), &args);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert_eq!(maxwell(b.path(), &args).status.code(), Some(0));

    for f in ["table_m8.csv", "table_m8.md", "table_m8.json"] {
        assert_eq!(read(a.path(), f), read(b.path(), f), "{f} differs between runs");
    }
    let csv = read(a.path(), "table_m8.csv");
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines[0], "l,nel,nno,theta1,ratio1,r1,theta2,ratio2,r2");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("2,32,25,"));
    assert!(lines[1].ends_with(",,"));

    let json: serde_json::Value = serde_json::from_str(&read(a.path(), "table_m8.json")).unwrap();
    let meta = &json["metadata"];
    assert_eq!(meta["m"], 8);
    assert_eq!(meta["timestamp"], "1700000000");
    assert_eq!(meta["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(json["rows"].as_array().unwrap().len(), 3);
    assert!(stdout(&o).contains("| 4 | 512 | 289 |"));
}

#[test]
fn single_level_table_has_no_rates() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(maxwell(d.path(), &["convergence", "--mesh.levels", "3"]).status.code(), Some(0));
    let md = read(d.path(), "table_m6.md");
    assert_eq!(md.lines().count(), 3);
    assert!(md.lines().last().unwrap().contains("| - | - |"));
}

#[test]
fn config_file_and_overrides() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("run.cfg");
    std::fs::write(&cfg, "# sweep\ncoeff.m = 12\nmesh.levels = 2..3\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let o = maxwell(d.path(), &["convergence", "--config", cfg, "--coeff.m", "10"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(d.path().join("table_m10.csv").exists());
    assert!(!d.path().join("table_m12.csv").exists());
}

#[test]
fn solve_manufactured_outputs() {
    let d = tempfile::tempdir().unwrap();
    let o = maxwell(
        d.path(),
        &["solve", "--mesh.levels", "4", "--output.every", "100", "--output.operators", "true"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));

    // One observation per level: the initial pair plus each of the 499 steps.
    let energy = read(d.path(), "energy.csv");
    assert_eq!(energy.lines().next().unwrap(), "t,dt_e_eps,e_sigma,grad_e,div_e_eps_m1,total");
    assert_eq!(energy.lines().count(), 1 + 500);

    for k in [100, 200, 300, 400, 500] {
        assert!(d.path().join(format!("snapshot_{k}.csv")).exists(), "snapshot {k}");
    }
    let snap = read(d.path(), "snapshot_500.csv");
    assert_eq!(snap.lines().next().unwrap(), "x,y,E1,E2");
    assert_eq!(snap.lines().count(), 1 + 289);

    let text = stdout(&o);
    let grab = |key: &str| -> f64 {
        let line = text.lines().find(|l| l.starts_with(key)).unwrap();
        line.rsplit(' ').next().unwrap().parse().unwrap()
    };
    let (h, e) = (grab("max |E_h|"), grab("max |E_exact|"));
    assert!((h - e).abs() <= 0.05 * e, "{h} vs {e}");

    assert!(read(d.path(), "mesh.csv").starts_with("# vertices"));
    assert!(read(d.path(), "stiffness_coo.csv").starts_with("# 578 578 "));
    assert!(d.path().join("stab_coo.csv").exists());
}

#[test]
fn solve_zero_problem_is_zero() {
    let d = tempfile::tempdir().unwrap();
    let o = maxwell(d.path(), &["solve", "--problem", "zero", "--mesh.levels", "3", "--output.every", "250"]);
    assert_eq!(o.status.code(), Some(0));
    for k in [250, 500] {
        let snap = read(d.path(), &format!("snapshot_{k}.csv"));
        for line in snap.lines().skip(1) {
            let f: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
            assert_eq!((f[2], f[3]), (0.0, 0.0));
        }
    }
}

#[test]
fn solve_is_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["solve", "--mesh.levels", "3", "--output.every", "0"];
    maxwell(a.path(), &args);
    maxwell(b.path(), &args);
    for f in ["energy.csv", "snapshot_500.csv", "mesh.csv"] {
        assert_eq!(read(a.path(), f), read(b.path(), f), "{f}");
    }
}

#[test]
fn verify_passes_and_catches_faults() {
    let d = tempfile::tempdir().unwrap();
    let ok = maxwell(d.path(), &["verify"]);
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    assert!(!stdout(&ok).contains("FAIL"));
    assert_eq!(stdout(&ok).matches("PASS").count(), 9);

    let mutated = maxwell(d.path(), &["verify", "--verify.mutation", "flip_stab"]);
    assert_eq!(mutated.status.code(), Some(1));
    assert!(stdout(&mutated).contains("FAIL manufactured convergence"));

    let unstable = maxwell(d.path(), &["verify", "--time.cfl_override", "true", "--time.tau", "0.05"]);
    assert_eq!(unstable.status.code(), Some(1));
    assert!(stdout(&unstable).contains("FAIL leapfrog conservation"));
}

#[test]
fn cfl_report() {
    let d = tempfile::tempdir().unwrap();
    let o = maxwell(d.path(), &["cfl", "--mesh.levels", "3..4", "--coeff.m", "uniform", "--time.cfl_C", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = read(d.path(), "cfl.csv");
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][2], "0.125");
    let t3: f64 = rows[0][3].parse().unwrap();
    assert!((0.3..=1.0).contains(&(t3 / 0.125)));
    let ratio: f64 = rows[1][4].parse().unwrap();
    assert!((0.4..=0.6).contains(&ratio));
    assert!(rows.iter().all(|r| r[6] == "true"));
}

#[test]
fn exit_codes_for_bad_input_and_blow_up() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(maxwell(d.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(maxwell(d.path(), &["solve", "--time.tau", "-1"]).status.code(), Some(2));
    assert_eq!(maxwell(d.path(), &["solve", "--unknown.key", "1"]).status.code(), Some(2));
    assert_eq!(maxwell(d.path(), &["solve"]).status.code(), Some(2), "solve needs one level");
    assert_eq!(maxwell(d.path(), &["convergence", "--config", "/no/such/file"]).status.code(), Some(2));

    let refused = maxwell(d.path(), &["solve", "--mesh.levels", "4", "--time.tau", "0.05"]);
    assert_eq!(refused.status.code(), Some(2));
    assert!(stdout(&refused).contains("CFL"));

    let blown = maxwell(
        d.path(),
        &["solve", "--mesh.levels", "4", "--time.tau", "0.125", "--time.T", "125", "--time.cfl_override", "true"],
    );
    assert_eq!(blown.status.code(), Some(3), "{}", stdout(&blown));
}
