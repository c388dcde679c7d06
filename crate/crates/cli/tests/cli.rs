use std::path::Path;
use std::process::{Command, Output};

use mfv_core::mesh::read_mesh;
use mfv_core::scheme::{read_solution_str, SOLUTION_HEADER};

fn mfv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mfv"))
        .args(args)
        .output()
        .expect("run mfv")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn csv_field(csv: &str, row: usize, name: &str) -> String {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == name).unwrap();
    lines
        .nth(row)
        .unwrap()
        .split(',')
        .nth(col)
        .unwrap()
        .to_string()
}

#[test]
fn mesh_gen_writes_file_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("q4.mesh");
    let out = mfv(&[
        "mesh",
        "gen",
        "squares",
        "--n",
        "40",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("cells 1600"));
    assert_eq!(read_mesh(&path).unwrap().num_cells(), 1600);

    let out = mfv(&["mesh", "gen", "squares", "--n", "2"]);
    assert!(out.status.success());
    assert!(stdout(&out).starts_with("mfv-mesh v1"));
    assert!(stderr(&out).contains("regul 8\n"), "{}", stderr(&out));
}

#[test]
fn mesh_gen_families() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&[&str], &str); 3] = [
        (
            &["triangles", "--n", "3", "--pattern", "crisscross"],
            "cells 36",
        ),
        (
            &["refined", "--n", "2", "--box", "0/0.5/0/0.5/2"],
            "cells 7",
        ),
        (
            &["distorted", "--n", "4", "--seed", "9", "--amplitude", "0.1"],
            "cells 16",
        ),
    ];
    for (i, (args, expect)) in cases.iter().enumerate() {
        let path = dir.path().join(format!("m{i}.mesh"));
        let mut full = vec!["mesh", "gen"];
        full.extend_from_slice(args);
        full.extend(["--out", path.to_str().unwrap()]);
        let out = mfv(&full);
        assert!(out.status.success(), "{args:?}: {}", stderr(&out));
        assert!(stdout(&out).contains(expect), "{args:?}: {}", stdout(&out));
        let out = mfv(&["mesh", "validate", path.to_str().unwrap()]);
        assert!(out.status.success());
        assert!(stdout(&out).starts_with("valid\n"));
    }
    // Right triangles put the circumcenter on the hypotenuse.
    let out = mfv(&[
        "mesh",
        "gen",
        "triangles",
        "--n",
        "2",
        "--xk",
        "circumcenter",
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn overlapping_cells_fail_validation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.mesh");
    std::fs::write(
        &path,
        "mfv-mesh v1\nvertices 6\n0 0 0\n1 1 0\n2 1 1\n3 0 1\n4 0.5 0\n5 0.5 1\ncells 2\n0 0 1 2 3\n1 4 1 2 5\n",
    )
    .unwrap();
    let out = mfv(&["mesh", "validate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.starts_with("error[validation]"), "{err}");
    assert!(err.contains("[0, 1]"), "{err}");

    let out = mfv(&[
        "mesh",
        "inspect",
        dir.path().join("missing.mesh").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("error[io]"));
}

#[test]
fn run_lepotier_reports_errors() {
    let out = mfv(&["run", "--case", "lepotier", "--mesh", "squares:40"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = stdout(&out);
    assert_eq!(csv_field(&csv, 0, "cells"), "1600");
    let e2: f64 = csv_field(&csv, 0, "e2_u").parse().unwrap();
    assert!((e2 / 9.12e-4 - 1.0).abs() <= 0.2, "{e2}");
}

#[test]
fn run_patch_is_exact() {
    let out = mfv(&[
        "run",
        "--case",
        "patch-affine",
        "--mesh",
        "distorted:8:seed=7",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = stdout(&out);
    for name in ["e2_u", "e2_grad"] {
        let e: f64 = csv_field(&csv, 0, name).parse().unwrap();
        assert!(e <= 1e-6, "{name} = {e}");
    }
}

#[test]
fn inconsistent_configurations_are_usage_errors() {
    let out = mfv(&[
        "run",
        "--case",
        "isotropic",
        "--mesh",
        "squares:16",
        "--nu",
        "zero",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("penalization zero requires a simplicial mesh"));

    for args in [
        &[
            "run",
            "--case",
            "isotropic",
            "--mesh",
            "squares:4",
            "--xk",
            "circumcenter",
        ][..],
        &["run", "--case", "nonesuch", "--mesh", "squares:4"],
        &["run", "--case", "isotropic", "--mesh", "hexagons:4"],
        &["run", "--case", "isotropic"],
        &[
            "run",
            "--case",
            "isotropic",
            "--mesh",
            "squares:4",
            "--nu",
            "fixed:-2",
        ],
        &[
            "convergence",
            "--case",
            "isotropic",
            "--mesh",
            "squares",
            "--levels",
            "8",
        ],
        &["preset", "no-such-preset"],
        &["frobnicate"],
    ] {
        let out = mfv(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}: {}", stderr(&out));
    }
    assert_eq!(mfv(&["--help"]).status.code(), Some(0));
}

#[test]
fn zero_penalization_on_triangles_runs() {
    let out = mfv(&[
        "run",
        "--case",
        "isotropic",
        "--mesh",
        "triangles:8",
        "--nu",
        "zero",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
}

#[test]
fn pcg_failure_is_numerical() {
    let out = mfv(&[
        "run",
        "--case",
        "lepotier",
        "--mesh",
        "squares:20",
        "--solver",
        "pcg",
        "--max-iter",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).starts_with("error[numerical]"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let csv = dir.path().join("out.csv");
    std::fs::write(
        &cfg,
        "# Le Potier, coarse\ncase = lepotier\nmesh = squares:40\nnu = power:1:-1\n",
    )
    .unwrap();
    let out = mfv(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--mesh",
        "squares:8",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).is_empty());
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(csv_field(&text, 0, "mesh"), "squares:8");
    assert_eq!(csv_field(&text, 0, "case"), "lepotier");

    std::fs::write(&cfg, "case = lepotier\nshape = round\n").unwrap();
    let out = mfv(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 2"));
}

#[test]
fn dump_round_trips_through_the_reader() {
    let dir = tempfile::tempdir().unwrap();
    let mesh_path = dir.path().join("r.mesh");
    let dump = dir.path().join("r.sol");
    let out = mfv(&[
        "mesh",
        "gen",
        "refined",
        "--n",
        "3",
        "--out",
        mesh_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let spec = format!("file:{}", mesh_path.display());
    let out = mfv(&[
        "run",
        "--case",
        "isotropic",
        "--mesh",
        &spec,
        "--dump",
        dump.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(csv_field(&stdout(&out), 0, "mesh"), "file:r.mesh");
    let text = std::fs::read_to_string(&dump).unwrap();
    assert!(text.starts_with(SOLUTION_HEADER));
    let mesh = read_mesh(Path::new(&mesh_path)).unwrap();
    let sol = read_solution_str(&mesh, &text).unwrap();
    assert_eq!(sol.u.len(), mesh.num_cells());
}

#[test]
fn convergence_orders() {
    let out = mfv(&[
        "convergence",
        "--case",
        "isotropic",
        "--mesh",
        "squares",
        "--levels",
        "8,16,32",
        "--jobs",
        "2",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = stdout(&out);
    let order: f64 = csv_field(&csv, 3, "order_u").parse().unwrap();
    assert!(order >= 1.9, "{csv}");

    let out = mfv(&[
        "convergence",
        "--case",
        "isotropic",
        "--mesh",
        "triangles:diagonal",
        "--levels",
        "8,16,32",
    ]);
    let order: f64 = csv_field(&stdout(&out), 3, "order_grad").parse().unwrap();
    assert!((0.8..=1.3).contains(&order));

    let out = mfv(&["preset", "lepotier-order"]);
    assert!(out.status.success());
    let order: f64 = csv_field(&stdout(&out), 1, "order_u").parse().unwrap();
    let expected = (9.12f64 / 1.62).ln() / 2f64.ln();
    assert!((order - expected).abs() <= 0.5, "{order} vs {expected}");
}

#[test]
fn sequential_flag_gives_identical_output() {
    let a = mfv(&["run", "--case", "lepotier", "--mesh", "distorted:12:seed=2"]);
    let b = mfv(&[
        "run",
        "--case",
        "lepotier",
        "--mesh",
        "distorted:12:seed=2",
        "--sequential",
    ]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn preset_list_names_benchmarks() {
    let out = mfv(&["preset", "--list"]);
    assert!(out.status.success());
    for name in [
        "lepotier-dq4",
        "lepotier-dq5",
        "lepotier-dq6",
        "isotropic-squares",
    ] {
        assert!(stdout(&out).contains(name));
    }
}
