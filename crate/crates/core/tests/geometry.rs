use zmc_core::frame::{patch_invariants, structure_equation_residuals, InvariantField, ZMC_TOL};
use zmc_core::geometry::{node_geometry, DerivativeMode, NormalOrientation, SurfacePatch};
use zmc_core::minkowski::{boost, rotation};
use zmc_core::moore::{moore_invariants, zmc_moore_patch, ArclengthMeridian, MooreParams, DEFAULT_V_RANGE};
use zmc_core::MinkowskiVec4;

fn moore_invariant_field(n: usize) -> InvariantField {
    let patch = zmc_moore_patch(&MooreParams::default(), n, n, DEFAULT_V_RANGE).unwrap();
    patch_invariants(&patch, DerivativeMode::Auto, ZMC_TOL).unwrap()
}

#[test]
fn doubling_nu_and_mu_breaks_only_the_quadratic_equations() {
    let inv = moore_invariant_field(61);
    let base = structure_equation_residuals(&inv).map(|r| r.interior_stats().max);
    let mut doubled = inv.clone();
    doubled.nu = inv.nu.map(|x| 2.0 * x);
    doubled.mu = inv.mu.map(|x| 2.0 * x);
    let trap = structure_equation_residuals(&doubled).map(|r| r.interior_stats().max);
    // equations 1-4 are linear in (ν, μ), so their residuals merely double
    for k in 0..4 {
        assert!(trap[k] <= 2.0 * base[k] + 1e-12, "eq{}: {} vs {}", k + 1, trap[k], base[k]);
    }
    for k in 4..6 {
        assert!(trap[k] > 0.1, "eq{}: {}", k + 1, trap[k]);
    }
}

#[test]
fn mirrored_branch_keeps_both_curvatures() {
    let p = MooreParams::default().with_g_range(0.5, 1.0);
    let q = MooreParams { eps: -p.eps, c: -p.c, ..p };
    let (mp, mq) = (ArclengthMeridian::new(&p).unwrap(), ArclengthMeridian::new(&q).unwrap());
    for k in 0..=10 {
        let u = mp.u_max * k as f64 / 10.0;
        let (a, b) = (moore_invariants(&mp, u), moore_invariants(&mq, u));
        let (sp, sq) = (mp.sample(u), mq.sample(u));
        assert!((sp.f + sq.f).abs() < 1e-12 && (sp.g - sq.g).abs() < 1e-12);
        assert!((a.mu + b.mu).abs() < 1e-10 && (a.nu + b.nu).abs() < 1e-10);
        assert!((a.k - b.k).abs() < 1e-10);
        assert!((a.kappa - b.kappa).abs() < 1e-10);
    }
}

#[test]
fn curvatures_are_invariant_under_motions() {
    let patch = zmc_moore_patch(&MooreParams::default(), 41, 41, DEFAULT_V_RANGE).unwrap().stencil_only();
    let b = boost(1, 0.3);
    let r = rotation(0, 2, 1.1);
    let t = MinkowskiVec4::new(0.5, -0.2, 1.0, 3.0);
    let moved = SurfacePatch::from_positions(*patch.grid(), patch.positions().iter().map(|p| r(&b(p)) + t).collect()).unwrap();
    for (i, j) in [(3, 5), (20, 20), (35, 11)] {
        let a = node_geometry(&patch, i, j, DerivativeMode::Stencil, NormalOrientation::Positive).unwrap();
        let m = node_geometry(&moved, i, j, DerivativeMode::Stencil, NormalOrientation::Positive).unwrap();
        assert!((a.gauss_curvature() - m.gauss_curvature()).abs() < 1e-8);
        assert!((a.normal_curvature() - m.normal_curvature()).abs() < 1e-8);
        assert!((a.forms.e - m.forms.e).abs() < 1e-12 && (a.forms.g - m.forms.g).abs() < 1e-12);
    }
}
