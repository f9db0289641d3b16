use std::path::Path;
use std::process::{Command, Output};

use multidwr_core::io::{parse_vtk, read_manifest, read_mesh_file};

fn multidwr(args: &[&str], env: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_multidwr"));
    cmd.args(args).env_remove("MULTIDWR_OUTPUT_DIR");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const SMALL_ADAPT: &str = r#"
[freestream]
mach = 0.5

[geometry]
builtin = "channel_bump"
nx = 16
ny = 4

[[targets]]
kind = "lift"
marker = "wall"

[[targets]]
kind = "drag"
marker = "wall"

[solver]
jacobian = "exact"

[adaptation]
max_iterations = 2
"#;

#[test]
fn unknown_subcommand_exits_with_usage() {
    let out = multidwr(&["frobnicate"], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn misspelled_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[freestream]\nmach = 0.5\n\n[geometry]\nbuiltin = \"channel_bump\"\nnxx = 8\n");
    let out = multidwr(&["solve", "--config", &cfg], &[]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 6") && err.contains("nxx"), "{err}");
}

#[test]
fn missing_mesh_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[freestream]\nmach = 0.5\n\n[geometry]\nmesh = \"nowhere.mesh\"\n");
    let out = multidwr(&["solve", "--config", &cfg], &[]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn freestream_on_farfield_only_mesh_needs_no_newton_step() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = "VERTICES 4\n0 0 0\n1 1 0\n2 1 1\n3 0 1\nTRIANGLES 2\n0 0 1 2\n1 0 2 3\n\
                BOUNDARY 4\n0 0 1 farfield\n1 1 2 farfield\n2 2 3 farfield\n3 3 0 farfield\n";
    write(dir.path(), "square.mesh", mesh);
    let cfg = write(
        dir.path(),
        "c.toml",
        "[freestream]\nmach = 0.7\nattack_angle = 3.0\n\n[geometry]\nmesh = \"square.mesh\"\ninitial_refinements = 2\n",
    );
    let outdir = dir.path().join("o");
    let out = multidwr(&["solve", "--config", &cfg, "--output", outdir.to_str().unwrap()], &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = read_manifest(&outdir.join("manifest.json")).unwrap();
    assert_eq!(m["newton_iterations"], 0);
    let csv = std::fs::read_to_string(outdir.join("newton_history.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    let vtk = parse_vtk(&std::fs::read_to_string(outdir.join("solution.vtk")).unwrap()).unwrap();
    assert_eq!(vtk.cells.len(), 32);
}

#[test]
fn gen_mesh_then_solve_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let gen = write(
        dir.path(),
        "g.toml",
        "[freestream]\nmach = 0.5\n\n[geometry]\nbuiltin = \"channel_bump\"\nnx = 8\nny = 4\n",
    );
    let mesh_path = dir.path().join("bump.mesh");
    let out = multidwr(&["gen-mesh", "--config", &gen, "--out", mesh_path.to_str().unwrap()], &[]);
    assert!(out.status.success());
    let root = read_mesh_file(&mesh_path).unwrap();
    assert_eq!(root.triangles.len(), 64);

    let cfg = write(dir.path(), "s.toml", "[freestream]\nmach = 0.5\n\n[geometry]\nmesh = \"bump.mesh\"\n");
    let outdir = dir.path().join("o");
    let out = multidwr(&["solve", "--config", &cfg], &[("MULTIDWR_OUTPUT_DIR", &outdir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(outdir.join("state.json").exists());

    let vtk = dir.path().join("again.vtk");
    let out = multidwr(
        &["export", "--state", outdir.join("state.json").to_str().unwrap(), "--out", vtk.to_str().unwrap()],
        &[],
    );
    assert!(out.status.success());
    let a = parse_vtk(&std::fs::read_to_string(&vtk).unwrap()).unwrap();
    let b = parse_vtk(&std::fs::read_to_string(outdir.join("solution.vtk")).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn adapt_writes_manifest_and_history() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "a.toml", SMALL_ADAPT);
    let outdir = dir.path().join("o");
    let out = multidwr(&["adapt", "--config", &cfg, "--output", outdir.to_str().unwrap(), "--seed", "7"], &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = read_manifest(&outdir.join("manifest.json")).unwrap();
    assert_eq!(m["seed"], 7);
    assert_eq!(m["history"].as_array().unwrap().len(), 2);
    let csv = std::fs::read_to_string(outdir.join("history.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "k,cells_0,cells_1,union_cells,F_0,F_1,composite,estimate_0,estimate_1,wallclock"
    );
    assert_eq!(csv.lines().count(), 3);
    for f in ["target0.vtk", "target1.vtk", "duals.vtk", "state_union.json"] {
        assert!(outdir.join(f).exists(), "{f}");
    }
}

#[test]
fn adapt_without_targets_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "a.toml", "[freestream]\nmach = 0.5\n\n[geometry]\nbuiltin = \"channel_bump\"\n");
    let outdir = dir.path().join("o");
    let out = multidwr(&["adapt", "--config", &cfg, "--output", outdir.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "toml") {
            multidwr_core::io::read_config(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            n += 1;
        }
    }
    assert!(n >= 3);
}
