use zmc_core::geometry::{node_geometry, DerivativeMode, NormalOrientation};
use zmc_core::moore::{moore_canonical_parameters, moore_invariants, zmc_moore_patch, ArclengthMeridian, MooreParams, DEFAULT_V_RANGE};
use zmc_core::pde::{cauchy_from_fields, BLOWUP_BOUND, solve_hyperbolic, HyperbolicConfig, SystemKind};

fn in_band(r: f64) -> bool {
    (3.4..4.6).contains(&r)
}

fn stencil_curvature_error(n: usize) -> f64 {
    let p = MooreParams::default();
    let patch = zmc_moore_patch(&p, n, n, DEFAULT_V_RANGE).unwrap();
    let m = ArclengthMeridian::new(&p).unwrap();
    let g = *patch.grid();
    g.nodes()
        .filter(|&(i, j)| g.is_interior(i, j, 1))
        .map(|(i, j)| {
            let geom = node_geometry(&patch, i, j, DerivativeMode::Stencil, NormalOrientation::Positive).unwrap();
            let inv = moore_invariants(&m, g.u(i));
            (geom.gauss_curvature() - inv.k).abs().max((geom.normal_curvature() - inv.kappa).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn stencil_curvatures_are_second_order() {
    let (a, b) = (stencil_curvature_error(51), stencil_curvature_error(101));
    assert!(in_band(a / b), "{a:e} {b:e}");
}

fn hyperbolic_recovery_error(n_u: usize, n_v: usize) -> f64 {
    let mc = moore_canonical_parameters(&MooreParams::default(), n_u, n_v, DEFAULT_V_RANGE).unwrap();
    let (data, boundary) = cauchy_from_fields(&mc.x, &mc.y).unwrap();
    let cfg = HyperbolicConfig { boundary, blowup_bound: BLOWUP_BOUND, forcing: None };
    let (x, y) = solve_hyperbolic(&data, n_u - 1, SystemKind::TimelikeHyperbolic, &cfg).unwrap();
    (0..x.values.len()).map(|k| (x.values[k] - mc.x.values[k]).abs().max((y.values[k] - mc.y.values[k]).abs())).fold(0.0, f64::max)
}

#[test]
fn hyperbolic_recovery_is_second_order() {
    let (a, b) = (hyperbolic_recovery_error(41, 61), hyperbolic_recovery_error(81, 121));
    assert!(a < 1e-3, "{a:e}");
    assert!(in_band(a / b), "{a:e} {b:e} ratio {}", a / b);
}
