//! Compiles and runs a small C program against the generated header and the static library.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <stdlib.h>
#include "maxwell_ffi.h"

int main(void) {
    MxSimulation *sim = NULL;
    if (mx_simulation_new(3, 6, 0.0005, 0.25, 2.0, false, true, &sim) != MX_STATUS_OK) return 10;
    size_t taken = 0;
    if (mx_simulation_step(sim, (size_t)-1, &taken) != MX_STATUS_OK) return 11;
    double t1 = 0.0, t2 = 0.0;
    if (mx_simulation_errors(sim, &t1, &t2) != MX_STATUS_OK) return 12;
    mx_simulation_free(sim);

    MxMesh *mesh = NULL;
    if (mx_mesh_new(0, &mesh) != MX_STATUS_INVALID_ARGUMENT) return 13;
    char msg[128];
    if (mx_last_error_message(msg, sizeof msg) < 2) return 14;
    printf("%zu %.12e %.12e\n", taken, t1, t2);
    return 0;
}
"#;

fn target_dir() -> PathBuf {
    // .../target/<profile>/deps/c_header-<hash>
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn c_program_links_and_runs() {
    let lib = target_dir().join("libmaxwell_ffi.a");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if !lib.exists() || Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler or static library at {}", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    let exe = dir.path().join("smoke");
    std::fs::write(&src, PROGRAM).unwrap();
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let status = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&exe)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "C program exited with {:?}", out.status);
    let text = String::from_utf8(out.stdout).unwrap();
    let fields: Vec<&str> = text.split_whitespace().collect();
    assert_eq!(fields[0], "499");
    let t1: f64 = fields[1].parse().unwrap();
    assert!(t1 > 0.0 && t1 < 0.2);
}
