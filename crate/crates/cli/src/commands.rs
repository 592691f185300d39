use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;
use zmc_core::bonnet::{build_ab, integrability_residual, integrate_frame, integrate_position, verify_reconstruction, FrameOptions};
use zmc_core::config::{Lateral, PdeSource, RunConfig};
use zmc_core::frame::{canonical_reparametrization, patch_invariants, structure_equation_residuals, InvariantField};
use zmc_core::geometry::{classify_patch, flat_point_scan, patch_geometry, DerivativeMode, NormalOrientation, PatchClass, SurfacePatch};
use zmc_core::grid::{check_same, Grid2, GridField, ResidualStats};
use zmc_core::io::{read_field, read_mesh, write_field, write_json, write_mesh, write_obj};
use zmc_core::moore::{moore_canonical_parameters, ArclengthMeridian};
use zmc_core::pde::{
    cauchy_from_fields, residual_kkappa, residual_munu, residual_xy, solve_elliptic, solve_hyperbolic, to_xy, HyperbolicConfig,
    LateralBoundary, SystemKind,
};
use zmc_core::report::{Drift, Report};
use zmc_core::{Error, MinkowskiVec4, PseudoOrthonormalFrame, Result};

fn out_dir(cfg: &RunConfig) -> Result<PathBuf> {
    fs::create_dir_all(&cfg.output.dir)?;
    Ok(cfg.output.dir.clone())
}

fn params(cfg: &RunConfig) -> serde_json::Value {
    serde_json::to_value(cfg).unwrap_or_default()
}

/// Runs `body`; numerical failures end up in the report instead of aborting.
fn run(command: &str, cfg: &RunConfig, body: impl FnOnce(&mut Report, &Path) -> Result<()>) -> Result<u8> {
    let start = Instant::now();
    let dir = out_dir(cfg)?;
    let mut report = Report::new(command, params(cfg));
    if let Err(e) = body(&mut report, &dir) {
        if e.exit_code() == 2 {
            return Err(e);
        }
        report.error = Some(e.to_string());
    }
    report.timing.seconds = start.elapsed().as_secs_f64();
    let path = dir.join("report.json");
    write_json(&path, &report)?;
    for (name, c) in &report.checks {
        println!("{:<4} {name}: {:.3e} (tol {:.1e})", if c.pass { "ok" } else { "FAIL" }, c.measured, c.tol);
    }
    for w in &report.warnings {
        println!("warning: {w}");
    }
    if let Some(e) = &report.error {
        println!("error: {e}");
    }
    println!("report: {}", path.display());
    Ok(if report.all_pass() { 0 } else { 3 })
}

/// Ring excluded from residuals of fields that were themselves derived from a
/// mesh by stencils.
const MESH_RING: usize = 2;

fn pair_stats(r: &(GridField, GridField), ring: usize) -> ResidualStats {
    let (a, b) = (r.0.stats(ring), r.1.stats(ring));
    ResidualStats { max: a.max.max(b.max), mean: 0.5 * (a.mean + b.mean), count: a.count + b.count }
}

/// Max interior `|H|` by stencils.
fn max_mean_curvature(patch: &SurfacePatch) -> Result<f64> {
    let g = *patch.grid();
    let geom = patch_geometry(patch, DerivativeMode::Stencil, NormalOrientation::Positive)?;
    Ok(g.nodes().filter(|&(i, j)| g.is_interior(i, j, 1)).map(|(i, j)| geom[g.idx(i, j)].mean_curvature().euclidean_norm()).fold(0.0, f64::max))
}

/// `max |E √(μ²+ν²) + 1|` and `max |G √(μ²+ν²) − 1|` over all nodes.
fn gauge_defect(e: &GridField, g: &GridField, mu: &GridField, nu: &GridField) -> (f64, f64) {
    (0..e.values.len()).fold((0.0_f64, 0.0_f64), |(a, b), k| {
        let s = mu.values[k].hypot(nu.values[k]);
        (a.max((e.values[k] * s + 1.0).abs()), b.max((g.values[k] * s - 1.0).abs()))
    })
}

fn pde_checks(report: &mut Report, cfg: &RunConfig, ring: usize, mu: &GridField, nu: &GridField, k: &GridField, kappa: &GridField) -> Result<()> {
    let kind = SystemKind::TimelikeHyperbolic;
    let (x, y) = to_xy(k, kappa)?;
    let tol = cfg.tolerances.pde_residual;
    for (name, r) in [
        ("pde_munu", residual_munu(mu, nu)?),
        ("pde_kkappa", residual_kkappa(k, kappa, kind)?),
        ("pde_xy", residual_xy(&x, &y, kind)?),
    ] {
        let s = pair_stats(&r, ring);
        report.residual(name, s);
        report.check(name, s.max, tol);
    }
    Ok(())
}

pub fn moore(cfg: &RunConfig) -> Result<u8> {
    cfg.moore.validate()?;
    run("moore", cfg, |report, dir| {
        let mc = moore_canonical_parameters(&cfg.moore, cfg.grid.n_u, cfg.grid.n_v, cfg.grid.v_range)?;
        report.grid = Some(*mc.grid());
        write_mesh(&dir.join("mesh.csv"), &mc.patch, "moore")?;
        write_obj(&dir.join("mesh.obj"), &mc.patch, cfg.output.project)?;
        for (name, f) in [("mu", &mc.mu), ("nu", &mc.nu), ("K", &mc.k), ("kappa", &mc.kappa), ("X", &mc.x), ("Y", &mc.y)] {
            write_field(&dir.join(format!("{name}.csv")), f, name)?;
        }
        if let Some(p) = report.params.as_object_mut() {
            p.insert("c".into(), json!(mc.c));
            p.insert("sign_flipped".into(), json!(mc.sign_flipped));
        }
        let tol = &cfg.tolerances;
        report.check("zmc_residual", max_mean_curvature(&mc.patch.stencil_only())?, tol.zmc_residual);
        let m = ArclengthMeridian::new(&cfg.moore)?;
        let conservation =
            (0..=400).map(|k| m.invariants(m.u_max * k as f64 / 400.0).conservation_defect(&cfg.moore).abs()).fold(0.0, f64::max);
        report.check("conservation", conservation, tol.conservation);
        let g = *mc.grid();
        let stencil = mc.patch.stencil_only();
        let forms: Vec<_> = g.nodes().map(|(i, j)| zmc_core::geometry::first_fundamental(&stencil, i, j, DerivativeMode::Stencil)).collect::<Result<_>>()?;
        let e = GridField::from_values(g, |k| forms[k].e);
        let gg = GridField::from_values(g, |k| forms[k].g);
        let (de, dg) = gauge_defect(&e, &gg, &mc.mu, &mc.nu);
        report.check("canonical_gauge", de.max(dg), tol.canonical_gauge);
        pde_checks(report, cfg, 1, &mc.mu, &mc.nu, &mc.k, &mc.kappa)
    })
}

fn structure_checks(report: &mut Report, cfg: &RunConfig, inv: &InvariantField) {
    for (k, r) in structure_equation_residuals(inv).iter().enumerate() {
        let name = format!("structure_eq{}", k + 1);
        let s = r.stats(MESH_RING);
        report.residual(&name, s);
        report.check(&name, s.max, cfg.tolerances.structure);
    }
}

pub fn verify(mesh: &Path, cfg: &RunConfig) -> Result<u8> {
    let patch = read_mesh(mesh)?;
    run("verify", cfg, |report, _| {
        let g = *patch.grid();
        report.grid = Some(g);
        let tol = &cfg.tolerances;
        let class = classify_patch(&patch, DerivativeMode::Stencil)?;
        if let Some(p) = report.params.as_object_mut() {
            p.insert("input".into(), json!(mesh.display().to_string()));
            p.insert("class".into(), json!(class));
        }
        report.flag("timelike", 0.0, 0.0, class == PatchClass::Timelike);
        if class != PatchClass::Timelike {
            report.warnings.push(format!("patch is {class:?}; later stages need a timelike patch"));
            return Ok(());
        }
        report.check("zmc_residual", max_mean_curvature(&patch)?, tol.zmc_residual);
        let scan = flat_point_scan(&patch, DerivativeMode::Stencil, None, tol.flat)?;
        let flat = scan.iter().filter(|r| r.is_flat && g.is_interior(r.i, r.j, 1)).count();
        report.check("non_flat", flat as f64, 1.0);
        if flat > 0 {
            report.warnings.push(format!("{flat} flat interior nodes; canonical-frame stage skipped"));
            return Ok(());
        }
        let inv = patch_invariants(&patch, DerivativeMode::Stencil, tol.frame_zmc)?;
        structure_checks(report, cfg, &inv);
        let (de, dg) = gauge_defect(&inv.e, &inv.g, &inv.mu, &inv.nu);
        let canonical = if de.max(dg) < tol.canonical_gauge {
            inv
        } else {
            match canonical_reparametrization(&patch, &inv, tol.semi_canonical, tol.frame_zmc) {
                Ok((_, c, map)) => {
                    report.warnings.push(format!(
                        "reparametrized to canonical parameters (cross-variation {:.1e} / {:.1e})",
                        map.phi_cross_variation, map.psi_cross_variation
                    ));
                    c
                }
                Err(e @ Error::NotSemiCanonical(_)) => {
                    report.flag("semi_canonical", 0.0, tol.semi_canonical, false);
                    report.warnings.push(e.to_string());
                    return Ok(());
                }
                Err(e) => return Err(e),
            }
        };
        pde_checks(report, cfg, MESH_RING, &canonical.mu, &canonical.nu, &canonical.k, &canonical.kappa)
    })
}

pub fn reconstruct(mu_path: &Path, nu_path: &Path, cfg: &RunConfig) -> Result<u8> {
    let mu = read_field(mu_path)?;
    let nu = read_field(nu_path)?;
    check_same(&mu.grid, &nu.grid)?;
    run("reconstruct", cfg, |report, dir| {
        let g = mu.grid;
        report.grid = Some(g);
        let tol = &cfg.tolerances;
        let c = build_ab(&mu, &nu)?;
        let ir = integrability_residual(&c).interior_stats();
        report.residual("integrability", ir);
        if ir.max > tol.integrability_warn {
            report.warnings.push(format!(
                "NotIntegrable: integrability residual {:.3e} exceeds {:.1e}; the fields do not describe a surface",
                ir.max, tol.integrability_warn
            ));
        }
        let b = &cfg.bonnet;
        // graded below so that the mesh is written even when the budget is blown
        let opts =
            FrameOptions { anchor: b.anchor, midpoint: b.midpoint, renormalize: b.renorm, dual_path: true, drift_budget: f64::INFINITY };
        let fs = integrate_frame(&c, &PseudoOrthonormalFrame::standard(), &opts)?;
        report.drift = Some(Drift {
            max_gram_defect: fs.max_gram_defect,
            path_discrepancy: fs.path_discrepancy,
            renormalized: b.renorm,
            max_integrability_residual: ir.max,
        });
        report.check("gram_defect", fs.max_gram_defect, b.drift_budget);
        if b.path_check {
            report.check("path_discrepancy", fs.path_discrepancy.unwrap_or(f64::NAN), tol.path);
        }
        let r = integrate_position(&fs, &c, &mu, &nu, MinkowskiVec4::ZERO)?;
        write_mesh(&dir.join("mesh.csv"), &r.patch, "reconstruction")?;
        write_obj(&dir.join("mesh.obj"), &r.patch, cfg.output.project)?;
        match verify_reconstruction(&r, &mu, &nu, &tol.verify, MESH_RING) {
            Ok(v) => {
                for ch in &v.checks {
                    report.check(&ch.name, ch.measured, ch.tol);
                }
            }
            Err(e) => {
                report.flag("verification", f64::NAN, 0.0, false);
                report.warnings.push(format!("reconstructed mesh could not be verified: {e}"));
            }
        }
        Ok(())
    })
}

fn solve_timelike(report: &mut Report, cfg: &RunConfig, dir: &Path, x: &GridField, y: &GridField) -> Result<()> {
    let g = x.grid;
    let (data, dirichlet) = cauchy_from_fields(x, y)?;
    let boundary = match cfg.pde.lateral {
        Lateral::Dirichlet => dirichlet,
        Lateral::Periodic => LateralBoundary::Periodic,
    };
    let hc = HyperbolicConfig { boundary, blowup_bound: cfg.pde.blowup_bound, forcing: None };
    let (sx, sy) = solve_hyperbolic(&data, g.n_u - 1, SystemKind::TimelikeHyperbolic, &hc)?;
    write_field(&dir.join("X.csv"), &sx, "X")?;
    write_field(&dir.join("Y.csv"), &sy, "Y")?;
    let s = pair_stats(&residual_xy(&sx, &sy, SystemKind::TimelikeHyperbolic)?, 1);
    report.residual("pde_xy", s);
    report.check("pde_xy", s.max, cfg.tolerances.pde_residual);
    let err = (0..g.len()).map(|k| (sx.values[k] - x.values[k]).abs().max((sy.values[k] - y.values[k]).abs())).fold(0.0, f64::max);
    report.check("recovery", err, cfg.tolerances.recovery);
    Ok(())
}

fn solve_elliptic_kind(report: &mut Report, cfg: &RunConfig, dir: &Path, x: &GridField, y: &GridField) -> Result<()> {
    let kind = cfg.pde.kind;
    let ec = &cfg.pde.elliptic;
    let (out, err) = match solve_elliptic(x, y, kind, ec) {
        Ok(o) => (o, None),
        Err(Error::NoConvergence(o)) => {
            let e = Error::NoConvergence(o.clone());
            (*o, Some(e))
        }
        Err(e) => return Err(e),
    };
    write_field(&dir.join("X.csv"), &out.x, "X")?;
    write_field(&dir.join("Y.csv"), &out.y, "Y")?;
    report.solver = Some(serde_json::to_value(&out.report).unwrap_or_default());
    let s = pair_stats(&residual_xy(&out.x, &out.y, kind)?, 1);
    report.residual("pde_xy", s);
    report.check("converged", out.report.final_residual, ec.tol);
    err.map_or(Ok(()), Err)
}

pub fn pde(cfg: &RunConfig) -> Result<u8> {
    let p = &cfg.pde;
    let files = || -> Result<(GridField, GridField)> {
        let need = |f: &Option<PathBuf>, k: &str| f.clone().ok_or_else(|| Error::Config(format!("pde.source = \"files\" needs pde.{k}")));
        let x = read_field(&need(&p.x, "x")?)?;
        let y = read_field(&need(&p.y, "y")?)?;
        check_same(&x.grid, &y.grid)?;
        Ok((x, y))
    };
    let timelike = p.kind == SystemKind::TimelikeHyperbolic;
    let (x, y) = match (p.source, timelike) {
        (PdeSource::Files, _) => files()?,
        (PdeSource::Moore, true) => {
            let mc = moore_canonical_parameters(&cfg.moore, cfg.grid.n_u, cfg.grid.n_v, cfg.grid.v_range)?;
            (mc.x, mc.y)
        }
        (PdeSource::Constant, false) => {
            let g = Grid2::new(cfg.grid.n_u, cfg.grid.n_v, cfg.grid.u_range, cfg.grid.v_range)?;
            (GridField::constant(g, p.boundary_x), GridField::constant(g, p.boundary_y))
        }
        (s, _) => return Err(Error::Config(format!("pde.source = {s:?} does not apply to {}", p.kind.name()))),
    };
    run("pde", cfg, |report, dir| {
        report.grid = Some(x.grid);
        if timelike {
            solve_timelike(report, cfg, dir, &x, &y)
        } else {
            solve_elliptic_kind(report, cfg, dir, &x, &y)
        }
    })
}

pub fn export(mesh: &Path, cfg: &RunConfig) -> Result<u8> {
    let patch = read_mesh(mesh)?;
    let dir = out_dir(cfg)?;
    let stem = mesh.file_stem().and_then(|s| s.to_str()).unwrap_or("mesh");
    let path = dir.join(format!("{stem}.obj"));
    write_obj(&path, &patch, cfg.output.project)?;
    println!("wrote {}", path.display());
    Ok(0)
}
