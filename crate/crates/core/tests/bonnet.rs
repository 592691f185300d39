use zmc_core::bonnet::{
    build_ab, integrability_residual, integrate_frame, integrate_position, verify_reconstruction, FrameOptions, ReconstructedSurface,
    VerifyTolerances,
};
use zmc_core::minkowski::{boost, rotation};
use zmc_core::moore::{moore_canonical_parameters, CanonicalMooreSurface, MooreCanonical, MooreParams, DEFAULT_V_RANGE};
use zmc_core::{Grid2, GridField, MinkowskiVec4, PseudoOrthonormalFrame};

fn canonical(n: usize) -> MooreCanonical {
    moore_canonical_parameters(&MooreParams::default(), n, n, DEFAULT_V_RANGE).unwrap()
}

fn reconstruct(mc: &MooreCanonical, mu: &GridField, z0: &PseudoOrthonormalFrame, p0: MinkowskiVec4) -> ReconstructedSurface {
    let c = build_ab(mu, &mc.nu).unwrap();
    let fs = integrate_frame(&c, z0, &FrameOptions::default()).unwrap();
    integrate_position(&fs, &c, mu, &mc.nu, p0).unwrap()
}

/// Fourth-order central difference.
fn d(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    let h = 1e-3;
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

fn gamma2_beta2_errors(n: usize) -> f64 {
    let mc = canonical(n);
    let surf = CanonicalMooreSurface::new(&MooreParams::default()).unwrap();
    let w = |u: f64| {
        let s = surf.invariants(u);
        (s.mu * s.mu + s.nu * s.nu).powf(0.25)
    };
    let theta = |u: f64| {
        let s = surf.invariants(u);
        s.mu.atan2(s.nu)
    };
    let c = build_ab(&mc.mu, &mc.nu).unwrap();
    let g = *mc.grid();
    let mut worst = 0.0_f64;
    for (i, j) in g.nodes().filter(|&(i, j)| g.is_interior(i, j, 1)) {
        let u = g.u(i);
        let k = g.idx(i, j);
        worst = worst.max((c.gamma2.values[k] - d(w, u)).abs()).max((c.beta2.values[k] - w(u) * d(theta, u)).abs());
    }
    worst
}

#[test]
fn rotation_coefficients_converge_to_closed_form() {
    let (a, b) = (gamma2_beta2_errors(51), gamma2_beta2_errors(101));
    assert!(a < 1e-3, "{a:e}");
    let r = a / b;
    assert!((3.4..4.6).contains(&r), "ratio {r}");
}

#[test]
fn integrability_residual_is_second_order_inside() {
    let res = |n: usize| integrability_residual(&build_ab(&canonical(n).mu, &canonical(n).nu).unwrap()).stats(2).max;
    let (a, b) = (res(51), res(101));
    let r = a / b;
    assert!((3.4..4.6).contains(&r), "{a:e} {b:e} ratio {r}");
}

#[test]
fn constant_fields_leave_only_the_commutator() {
    let g = Grid2::new(7, 7, (0.0, 1.0), (0.0, 1.0)).unwrap();
    let one = GridField::constant(g, 1.0);
    let c = build_ab(&one, &one).unwrap();
    // μ = ν = 1: √(−E) = √G = 2^(-1/4), all rotation coefficients vanish
    let s = 2f64.powf(-0.25);
    let a = [[0.0, 0.0, s, 0.0], [0.0, 0.0, 0.0, s], [s, 0.0, 0.0, 0.0], [0.0, -s, 0.0, 0.0]];
    let b = [[0.0, 0.0, 0.0, s], [0.0, 0.0, s, 0.0], [0.0, -s, 0.0, 0.0], [s, 0.0, 0.0, 0.0]];
    let mut worst = 0.0_f64;
    for r in 0..4 {
        for col in 0..4 {
            let ab: f64 = (0..4).map(|k| a[r][k] * b[k][col] - b[r][k] * a[k][col]).sum();
            worst = worst.max(ab.abs());
        }
    }
    assert!(worst > 0.5);
    let res = integrability_residual(&c);
    for (i, j) in g.nodes().filter(|&(i, j)| g.is_interior(i, j, 1)) {
        assert!((res.at(i, j) - worst).abs() < 1e-12, "{} vs {worst}", res.at(i, j));
    }
}

#[test]
fn golden_frame_stays_pseudo_orthonormal() {
    let mc = canonical(101);
    let c = build_ab(&mc.mu, &mc.nu).unwrap();
    let fs = integrate_frame(&c, &PseudoOrthonormalFrame::standard(), &FrameOptions::default()).unwrap();
    assert!(fs.max_gram_defect < 1e-6, "{:e}", fs.max_gram_defect);
}

#[test]
fn dual_path_discrepancy_is_second_order() {
    let disc = |n: usize| {
        let mc = canonical(n);
        let c = build_ab(&mc.mu, &mc.nu).unwrap();
        integrate_frame(&c, &PseudoOrthonormalFrame::standard(), &FrameOptions::default()).unwrap().path_discrepancy.unwrap()
    };
    let (a, b) = (disc(51), disc(101));
    let r = a / b;
    assert!((3.4..4.6).contains(&r), "{a:e} {b:e} ratio {r}");
}

#[test]
fn translating_the_anchor_point_is_rigid() {
    let mc = canonical(41);
    let z0 = PseudoOrthonormalFrame::standard();
    let p0 = MinkowskiVec4::new(0.3, -1.2, 2.5, 0.7);
    let a = reconstruct(&mc, &mc.mu, &z0, MinkowskiVec4::ZERO);
    let b = reconstruct(&mc, &mc.mu, &z0, p0);
    for (x, y) in a.patch.positions().iter().zip(b.patch.positions()) {
        for k in 0..4 {
            assert!((y[k] - x[k] - p0[k]).abs() < 1e-12);
        }
    }
}

#[test]
fn congruent_anchor_frames_share_invariants() {
    let mc = canonical(61);
    let z0 = PseudoOrthonormalFrame::standard();
    let moved = z0.map(rotation(1, 2, 0.9)).map(rotation(0, 1, -0.4));
    let tol = VerifyTolerances::default();
    let a = verify_reconstruction(&reconstruct(&mc, &mc.mu, &z0, MinkowskiVec4::ZERO), &mc.mu, &mc.nu, &tol, 1).unwrap();
    let b = verify_reconstruction(&reconstruct(&mc, &mc.mu, &moved, MinkowskiVec4::ZERO), &mc.mu, &mc.nu, &tol, 1).unwrap();
    let g = *mc.grid();
    for (i, j) in g.nodes().filter(|&(i, j)| g.is_interior(i, j, 1)) {
        assert!((a.k.at(i, j) - b.k.at(i, j)).abs() < 1e-10, "{i} {j} {} {}", a.k.at(i, j), b.k.at(i, j));
        assert!((a.kappa.at(i, j) - b.kappa.at(i, j)).abs() < 1e-10);
    }
}

#[test]
fn boosted_anchor_frames_share_invariants_to_rounding() {
    let mc = canonical(61);
    let z0 = PseudoOrthonormalFrame::standard();
    let moved = z0.map(boost(0, 0.4)).map(boost(2, -0.2));
    let tol = VerifyTolerances::default();
    let a = verify_reconstruction(&reconstruct(&mc, &mc.mu, &z0, MinkowskiVec4::ZERO), &mc.mu, &mc.nu, &tol, 1).unwrap();
    let b = verify_reconstruction(&reconstruct(&mc, &mc.mu, &moved, MinkowskiVec4::ZERO), &mc.mu, &mc.nu, &tol, 1).unwrap();
    let g = *mc.grid();
    // boosts stretch coordinates, so second differences lose a few more digits
    for (i, j) in g.nodes().filter(|&(i, j)| g.is_interior(i, j, 1)) {
        for (x, y) in [(a.k.at(i, j), b.k.at(i, j)), (a.kappa.at(i, j), b.kappa.at(i, j))] {
            assert!((x - y).abs() < 1e-9 * x.abs().max(1.0), "{i} {j}: {x} vs {y}");
        }
    }
}

#[test]
fn corrupted_input_is_flagged() {
    let mc = canonical(101);
    let tol = VerifyTolerances { e: 1e-3, g: 1e-3, h: 1e-3, k: 1e-2, kappa: 1e-2 };
    let good = verify_reconstruction(&reconstruct(&mc, &mc.mu, &PseudoOrthonormalFrame::standard(), MinkowskiVec4::ZERO), &mc.mu, &mc.nu, &tol, 2)
        .unwrap();
    assert!(good.all_pass(), "{:?}", good.checks);
    let bad_mu = mc.mu.map(|m| 1.1 * m);
    let r = reconstruct(&mc, &bad_mu, &PseudoOrthonormalFrame::standard(), MinkowskiVec4::ZERO);
    let bad = verify_reconstruction(&r, &mc.mu, &mc.nu, &tol, 2).unwrap();
    assert!(!bad.check("K").unwrap().pass, "{:?}", bad.checks);
}
