use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;
use zmc_core::geometry::SurfacePatch;
use zmc_core::grid::{Grid2, GridField};
use zmc_core::io::{write_field, write_mesh};
use zmc_core::MinkowskiVec4;

fn zmc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zmc")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn data_rows(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().filter(|l| !l.starts_with('#')).count() - 1
}

/// Runs `moore` on a small grid into `<tmp>/moore`.
fn moore(tmp: &TempDir) -> std::path::PathBuf {
    moore_on(tmp, "41x41")
}

fn moore_on(tmp: &TempDir, grid: &str) -> std::path::PathBuf {
    let out = tmp.path().join(format!("moore_{grid}"));
    let o = zmc(&["moore", "--grid", grid, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    out
}

#[test]
fn moore_writes_fields_and_report() {
    let tmp = TempDir::new().unwrap();
    let out = moore(&tmp);
    for f in ["mu", "nu", "K", "kappa", "X", "Y", "mesh"] {
        assert_eq!(data_rows(&out.join(format!("{f}.csv"))), 41 * 41, "{f}");
    }
    let obj = fs::read_to_string(out.join("mesh.obj")).unwrap();
    assert_eq!(obj.lines().filter(|l| l.starts_with("f ")).count(), 40 * 40);
    let r = report(&out);
    assert_eq!(r["command"], "moore");
    for c in ["zmc_residual", "conservation", "canonical_gauge", "pde_munu", "pde_kkappa", "pde_xy"] {
        assert_eq!(r["checks"][c]["pass"], true, "{c}: {}", r["checks"][c]);
    }
    assert!(r["timing"]["seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn invalid_parameters_exit_2() {
    let tmp = TempDir::new().unwrap();
    for (body, line) in [("[moore]\nalpha = 2.0\nbeta = 2.0\n", ":3"), ("[moore]\nA = 0.0\n", ":2")] {
        let cfg = tmp.path().join("bad.toml");
        fs::write(&cfg, body).unwrap();
        let o = zmc(&["moore", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
        assert_eq!(code(&o), 2);
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains(&format!("bad.toml{line}")), "{err}");
    }
    assert_eq!(code(&zmc(&["moore", "--grid", "3x3"])), 2);
    assert_eq!(code(&zmc(&["moore", "--tol", "-1"])), 2);
}

#[test]
fn verify_accepts_a_moore_mesh() {
    let tmp = TempDir::new().unwrap();
    let src = moore(&tmp);
    let out = tmp.path().join("verify");
    let o = zmc(&["verify", src.join("mesh.csv").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let r = report(&out);
    for k in 1..=6 {
        assert_eq!(r["checks"][format!("structure_eq{k}")]["pass"], true);
    }
    assert_eq!(r["checks"]["pde_xy"]["pass"], true);
}

#[test]
fn verify_flags_a_flat_plane() {
    let tmp = TempDir::new().unwrap();
    let g = Grid2::new(11, 11, (0.0, 1.0), (0.0, 1.0)).unwrap();
    let plane = SurfacePatch::from_fn(g, |u, v| MinkowskiVec4::new(0.0, v, 0.0, u)).unwrap();
    let mesh = tmp.path().join("plane.csv");
    write_mesh(&mesh, &plane, "plane").unwrap();
    let out = tmp.path().join("out");
    let o = zmc(&["verify", mesh.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    let r = report(&out);
    assert_eq!(r["checks"]["zmc_residual"]["pass"], true);
    assert_eq!(r["checks"]["non_flat"]["pass"], false);
    assert!(r["warnings"][0].as_str().unwrap().contains("flat"));
}

#[test]
fn truncated_mesh_names_the_line() {
    let tmp = TempDir::new().unwrap();
    let src = moore(&tmp);
    let text = fs::read_to_string(src.join("mesh.csv")).unwrap();
    let cut: String = text.lines().take(50).map(|l| format!("{l}\n")).collect();
    let mesh = tmp.path().join("cut.csv");
    fs::write(&mesh, cut).unwrap();
    let o = zmc(&["verify", mesh.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("cut.csv") && err.contains("50") && err.contains("truncated"), "{err}");
}

#[test]
fn reconstruct_roundtrip() {
    let tmp = TempDir::new().unwrap();
    let src = moore_on(&tmp, "101x101");
    let out = tmp.path().join("rec");
    let (mu, nu) = (src.join("mu.csv"), src.join("nu.csv"));
    let o = zmc(&["reconstruct", mu.to_str().unwrap(), nu.to_str().unwrap(), "--path-check", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert_eq!(data_rows(&out.join("mesh.csv")), 101 * 101);
    let r = report(&out);
    for c in ["E", "G", "H", "K", "kappa", "gram_defect", "path_discrepancy"] {
        assert_eq!(r["checks"][c]["pass"], true, "{c}");
    }
    assert!(r["drift"]["path_discrepancy"].as_f64().unwrap() > 0.0);
    assert_eq!(r["drift"]["renormalized"], false);
}

#[test]
fn reconstruct_rejects_mismatched_grids() {
    let tmp = TempDir::new().unwrap();
    let a = tmp.path().join("a.csv");
    let b = tmp.path().join("b.csv");
    write_field(&a, &GridField::constant(Grid2::new(11, 11, (0.0, 1.0), (0.0, 1.0)).unwrap(), 1.0), "mu").unwrap();
    write_field(&b, &GridField::constant(Grid2::new(11, 13, (0.0, 1.0), (0.0, 1.0)).unwrap(), 1.0), "nu").unwrap();
    let out = tmp.path().join("out");
    let o = zmc(&["reconstruct", a.to_str().unwrap(), b.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(!out.join("report.json").exists());
}

#[test]
fn random_fields_warn_and_still_write_the_mesh() {
    let tmp = TempDir::new().unwrap();
    let g = Grid2::new(21, 21, (0.0, 1.0), (0.0, 1.0)).unwrap();
    let noise = |a: f64, b: f64| GridField::from_fn(g, move |u, v| 1.0 + 0.4 * (a * u + 3.1 * v).sin() * (b * v - 2.3 * u).cos());
    let (mu, nu) = (tmp.path().join("mu.csv"), tmp.path().join("nu.csv"));
    write_field(&mu, &noise(7.3, 5.9), "mu").unwrap();
    write_field(&nu, &noise(4.1, 8.7), "nu").unwrap();
    let out = tmp.path().join("out");
    let o = zmc(&["reconstruct", mu.to_str().unwrap(), nu.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(out.join("mesh.csv").exists());
    let r = report(&out);
    assert!(r["warnings"].as_array().unwrap().iter().any(|w| w.as_str().unwrap().contains("NotIntegrable")));
    assert!(r["drift"]["path_discrepancy"].as_f64().unwrap() > 0.0);
    assert!(r["drift"]["max_integrability_residual"].as_f64().unwrap() > 0.1);
}

#[test]
fn pde_recovers_moore_data() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("pde");
    let o = zmc(&["pde", "--grid", "41x61", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let r = report(&out);
    assert_eq!(r["checks"]["recovery"]["pass"], true);
    assert_eq!(data_rows(&out.join("X.csv")), 41 * 61);
}

#[test]
fn pde_cfl_violation_exits_3_with_report() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("pde");
    let o = zmc(&["pde", "--grid", "11x101", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(report(&out)["error"].as_str().unwrap().contains("CFL"));
}

#[test]
fn pde_elliptic_constant_boundary_converges() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("e.toml");
    fs::write(&cfg, "[pde]\nkind = \"euclidean_elliptic\"\nsource = \"constant\"\n[grid]\nn_u = 15\nn_v = 15\n").unwrap();
    let out = tmp.path().join("out");
    let o = zmc(&["pde", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert_eq!(report(&out)["solver"]["converged"], true);
}

#[test]
fn outputs_are_deterministic() {
    let tmp = TempDir::new().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let codes: Vec<i32> = [&a, &b].iter().map(|d| code(&zmc(&["moore", "--grid", "21x21", "--out", d.to_str().unwrap()]))).collect();
    assert_eq!(codes[0], codes[1]);
    for f in ["mesh.csv", "mu.csv", "nu.csv", "K.csv", "kappa.csv", "mesh.obj"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn export_projects_a_mesh() {
    let tmp = TempDir::new().unwrap();
    let src = moore(&tmp);
    let out = tmp.path().join("exp");
    let o = zmc(&["export", src.join("mesh.csv").to_str().unwrap(), "--project", "x4", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let obj = fs::read_to_string(out.join("mesh.obj")).unwrap();
    assert!(obj.starts_with("# projection dropping X4"));
    assert_eq!(code(&zmc(&["export", "nope.csv", "--project", "y"])), 2);
}
