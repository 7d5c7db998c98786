use std::f64::consts::PI;

use proptest::prelude::*;
use quantum_friction::forces::*;
use quantum_friction::greens::{green_derivative_at0, KernelMoments};
use quantum_friction::quadrature::{integrate_halfline, QuadratureSpec};
use quantum_friction::units::{
    CavityGeometry, InternalDissipationModel, ParticleModel, ReflectionModel,
};

fn particle(mu: [f64; 3]) -> ParticleModel {
    ParticleModel::new(
        1.0,
        1.0,
        InternalDissipationModel::new(mu[0], mu[1], mu[2]).unwrap(),
    )
    .unwrap()
}

fn iso() -> ParticleModel {
    particle([1.0; 3])
}

fn motion(v: f64) -> MotionSpec {
    MotionSpec::new(v).unwrap()
}

fn plate(r0: f64, rho: f64) -> ReflectionModel {
    ReflectionModel::new(r0, rho).unwrap()
}

fn cavity(w: f64, z: f64, p1: ReflectionModel, p2: ReflectionModel) -> CavityGeometry {
    CavityGeometry::cavity(w, z, p1, p2).unwrap()
}

fn spec() -> QuadratureSpec {
    QuadratureSpec::default()
}

fn eta_int_bound() -> f64 {
    (PI / 2.0).powi(6) / 15.0
}

fn eta_rad_bound() -> f64 {
    13249.0 / 56700.0 * (PI / 2.0).powi(8)
}

#[test]
fn single_plane_closed_forms_over_grid() {
    for z in [0.5, 1.0, 2.0] {
        for rho in [0.1, 1.0] {
            let g = CavityGeometry::single_plane(z, plate(1.0, rho)).unwrap();
            for mu in [[1.0, 1.0, 1.0], [0.3, 1.7, 0.0]] {
                let p = particle(mu);
                let r = force_cavity(&g, &p, &motion(1.3), &spec()).unwrap();
                let fi = single_plane_int_closed_form(z, rho, &p, &motion(1.3));
                let fr = single_plane_rad_closed_form(z, rho, &p, &motion(1.3));
                assert!(
                    (r.f_int / fi - 1.0).abs() < 1e-8,
                    "z {z} rho {rho}: {} vs {fi}",
                    r.f_int
                );
                assert!(
                    (r.f_rad / fr - 1.0).abs() < 1e-8,
                    "z {z} rho {rho}: {} vs {fr}",
                    r.f_rad
                );
            }
        }
    }
}

#[test]
fn single_plane_spin_suppression() {
    // Γ-moment oracle: Σ′ and s′ moments give Σ-trace 252 and spin 180 in
    // units of ρ²/(2z)¹⁰, so φ = 252/72
    let g = CavityGeometry::single_plane(0.8, plate(0.6, 0.7)).unwrap();
    let r = force_cavity(&g, &iso(), &motion(1.0), &spec()).unwrap();
    let phi = r.rad_sigma_term / r.f_rad;
    assert!((phi - 3.5).abs() < 1e-8, "phi = {phi}");
    assert!(r.rad_spin_term > 0.0 && r.rad_spin_term.abs() < r.rad_sigma_term.abs());
}

#[test]
fn velocity_enters_as_cube() {
    let g = cavity(1.0, 0.7, plate(0.9, 1.0), plate(0.5, 0.3));
    let a = force_cavity(&g, &iso(), &motion(0.3), &spec()).unwrap();
    let b = force_cavity(&g, &iso(), &motion(0.6), &spec()).unwrap();
    assert!((b.f_int / a.f_int - 8.0).abs() < 8e-12);
    assert!((b.f_rad / a.f_rad - 8.0).abs() < 8e-12);
    assert_eq!(a.eta_int, b.eta_int);
}

#[test]
fn distance_scaling_single_plane() {
    let near = CavityGeometry::single_plane(0.4, plate(1.0, 1.0)).unwrap();
    let far = CavityGeometry::single_plane(0.8, plate(1.0, 1.0)).unwrap();
    let a = force_cavity(&near, &iso(), &motion(1.0), &spec()).unwrap();
    let b = force_cavity(&far, &iso(), &motion(1.0), &spec()).unwrap();
    assert!((a.f_int / b.f_int / 2f64.powi(7) - 1.0).abs() < 1e-8);
    assert!((a.f_rad / b.f_rad / 2f64.powi(10) - 1.0).abs() < 1e-8);
}

#[test]
fn center_values() {
    let g = cavity(1.0, 1.0, plate(1.0, 1.0), plate(1.0, 1.0));
    let r = force_cavity(&g, &iso(), &motion(1.0), &spec()).unwrap();
    assert!((r.eta_int.unwrap() / eta_int_bound() - 1.0).abs() < 1e-6);
    assert!((r.eta_rad.unwrap() / eta_rad_bound() - 1.0).abs() < 1e-6);
    let single = single_plane_rad_closed_form(1.0, 1.0, &iso(), &motion(1.0));
    assert!((r.f_rad / single / (2.0 * eta_rad_bound()) - 1.0).abs() < 1e-6);
}

#[test]
fn anisotropic_center_values() {
    // exact values: (31/32)ζ(6) and ζ(6)
    let zeta6 = PI.powi(6) / 945.0;
    let g = cavity(1.0, 1.0, plate(1.0, 1.0), plate(1.0, 1.0));
    let (xy, z) = anisotropy_shift(&g, &iso(), &motion(1.0), &spec()).unwrap();
    assert!((xy / (31.0 / 32.0 * zeta6) - 1.0).abs() < 1e-7, "{xy}");
    assert!((z / zeta6 - 1.0).abs() < 1e-7, "{z}");
    assert!(xy < 1.0 && z > 1.0);
}

#[test]
fn bounds_hold_across_the_cavity() {
    let g = cavity(1.0, 1.0, plate(1.0, 1.0), plate(1.0, 1.0));
    for channel in [Channel::Intrinsic, Channel::Radiative] {
        let c = eta_curve(&g, &iso(), &motion(1.0), channel, 39, &spec()).unwrap();
        let (bound, slack) = match channel {
            Channel::Intrinsic => (eta_int_bound(), 1e-6),
            Channel::Radiative => (eta_rad_bound(), 1e-4),
        };
        for &(x, eta) in &c.points {
            assert!(
                eta > 1.0 && eta <= bound + slack,
                "{channel:?} x {x}: {eta}"
            );
        }
    }
}

#[test]
fn curve_is_mirror_symmetric() {
    let g = cavity(1.0, 1.0, plate(0.8, 0.6), plate(0.8, 0.6));
    let c = eta_curve(&g, &iso(), &motion(1.0), Channel::Radiative, 21, &spec()).unwrap();
    let n = c.points.len();
    for i in 0..n {
        assert!((c.points[i].1 - c.points[n - 1 - i].1).abs() < 1e-8);
        assert!((c.points[i].0 + c.points[n - 1 - i].0 - 2.0).abs() < 1e-12);
    }
    assert!((c.points[0].0 - PLATE_GUARD).abs() < 1e-15);
}

#[test]
fn isotropic_mu_cancels_anisotropy_term() {
    for z in [0.3, 0.7, 1.0] {
        let g = cavity(1.0, z, plate(1.0, 1.0), plate(0.7, 0.4));
        let r_term = KernelMoments::cavity_r_term_fourth_moment(&g, &spec()).unwrap();
        let total = KernelMoments::cavity(&g, &spec()).unwrap().sigma[4];
        assert!(r_term.norm() > 0.0);
        assert!(r_term.trace().abs() < 1e-12 * total.trace().abs(), "z {z}");
    }
}

#[test]
fn wide_cavity_is_additive() {
    for z in [0.3, 1.0] {
        let g = cavity(100.0 * z, z, plate(1.0, 1.0), plate(1.0, 1.0));
        let r = force_cavity(&g, &iso(), &motion(1.0), &spec()).unwrap();
        assert!((r.eta_int.unwrap() - 1.0).abs() < 1e-3);
        assert!((r.eta_rad.unwrap() - 1.0).abs() < 1e-3);
    }
}

#[test]
fn perfect_conductor_enhances_friction() {
    for r0 in [0.5, 0.9, 1.0] {
        for x in [0.1, 0.4, 0.7, 0.95] {
            let g = cavity(1.0, x, plate(r0, 1.0), ReflectionModel::perfect_conductor());
            let r = force_cavity(&g, &iso(), &motion(1.0), &spec()).unwrap();
            let single = single_plane_int_closed_form(x, 1.0, &iso(), &motion(1.0));
            assert!(r.f_int.abs() > single.abs(), "r0 {r0} z {x}");
            assert_eq!(r.f_int_additive, single);
        }
    }
}

#[test]
fn mixed_plates_peak_near_weaker_plate() {
    let g = cavity(1.0, 1.0, plate(1.0, 1.0), plate(1.0, 0.3));
    let c = eta_curve(&g, &iso(), &motion(1.0), Channel::Intrinsic, 41, &spec()).unwrap();
    let (x_max, _) = c
        .points
        .iter()
        .cloned()
        .fold((0.0, f64::MIN), |a, b| if b.1 > a.1 { b } else { a });
    assert!(x_max > 1.0, "peak at {x_max}");
}

#[test]
fn single_plane_spin_kernel_factorizes() {
    let g = CavityGeometry::single_plane(0.5, plate(1.0, 1.0)).unwrap();
    let inner = QuadratureSpec::default().with_rel_tol(1e-12);
    let s = |q: f64| green_derivative_at0(q, &g, &inner).unwrap().ds_y;
    let outer = QuadratureSpec::default()
        .with_rel_tol(1e-10)
        .with_decay_scale(0.25);
    let (lhs, rhs) = spin_factorization_check(s, &outer).unwrap();
    assert!((lhs / rhs - 1.0).abs() < 1e-8, "{lhs} vs {rhs}");
    // Γ-moment oracle: ∫₀^∞ q s′ = −(3/2)ρ/(2z)⁴ and ∫₀^∞ q³ s′ = −(45/2)ρ/(2z)⁶,
    // so the right side is 1080 ρ²/(2z)¹⁰ = 1080 here
    let m1 = integrate_halfline(|q: f64| q * s(q), &outer).unwrap().value;
    let m3 = integrate_halfline(|q: f64| q.powi(3) * s(q), &outer)
        .unwrap()
        .value;
    assert!((m1 / -1.5 - 1.0).abs() < 1e-9);
    assert!((m3 / -22.5 - 1.0).abs() < 1e-9);
    assert!((rhs / 1080.0 - 1.0).abs() < 1e-9);
}

#[test]
fn general_evaluator_on_cavity_kernel() {
    let g = cavity(1.0, 0.6, plate(0.9, 1.0), plate(0.9, 0.5));
    let inner = QuadratureSpec::default().with_rel_tol(1e-11);
    let kernel = |q: f64| green_derivative_at0(q, &g, &inner);
    let outer = spec().with_decay_scale(g.decay_scale());
    let fi = force_int_general(kernel, iso().dissipation(), &motion(1.0), &iso(), &outer).unwrap();
    let fr = force_rad_general(kernel, &motion(1.0), &iso(), &outer).unwrap();
    let fast = force_cavity(&g, &iso(), &motion(1.0), &spec()).unwrap();
    assert!((fi / fast.f_int - 1.0).abs() < 1e-7);
    assert!((fr.total / fast.f_rad - 1.0).abs() < 1e-7);
    assert!((fr.spin_term / fast.rad_spin_term - 1.0).abs() < 1e-7);
}

#[test]
fn general_evaluators_vanish_without_dissipation() {
    let g = cavity(1.0, 0.6, plate(0.9, 0.0), plate(0.9, 0.0));
    let kernel = |q: f64| green_derivative_at0(q, &g, &spec());
    let fr = force_rad_general(kernel, &motion(1.0), &iso(), &spec()).unwrap();
    assert_eq!((fr.total, fr.sigma_term, fr.spin_term), (0.0, 0.0, 0.0));
    let none = InternalDissipationModel::none();
    assert_eq!(
        force_int_general(kernel, &none, &motion(1.0), &iso(), &spec()).unwrap(),
        0.0
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn drag_and_breakdown(w in 0.5..3.0f64, x in 0.1..1.9f64, r1 in 0.0..1.0f64, r2 in 0.0..1.0f64,
                          rho1 in 0.0..2.0f64, rho2 in 0.0..2.0f64, mu in 0.0..2.0f64) {
        let g = cavity(w, x * w, plate(r1, rho1), plate(r2, rho2));
        let r = force_cavity(&g, &particle([mu, 0.5 * mu, 2.0 * mu]), &motion(0.7), &spec()).unwrap();
        prop_assert!(r.f_int <= 0.0 && r.f_rad <= 0.0);
        prop_assert!(r.rad_sigma_term <= 0.0);
        prop_assert!((r.rad_sigma_term + r.rad_spin_term - r.f_rad).abs() <= 1e-14 * r.rad_sigma_term.abs());
        if let Some(eta) = r.eta_rad {
            prop_assert_eq!(eta, r.f_rad / r.f_rad_additive);
        }
    }

    #[test]
    fn mirror_swaps_plates(w in 0.5..3.0f64, x in 0.1..1.9f64, r1 in 0.0..1.0f64, r2 in 0.0..1.0f64,
                           rho1 in 0.05..2.0f64, rho2 in 0.05..2.0f64) {
        let g = cavity(w, x * w, plate(r1, rho1), plate(r2, rho2));
        let a = force_cavity(&g, &iso(), &motion(1.0), &spec()).unwrap();
        let b = force_cavity(&g.mirrored().unwrap(), &iso(), &motion(1.0), &spec()).unwrap();
        prop_assert!((a.f_int / b.f_int - 1.0).abs() < 1e-8);
        prop_assert!((a.f_rad / b.f_rad - 1.0).abs() < 1e-8);
    }

    #[test]
    fn identical_plates_respect_bounds(x in 0.05..1.95f64, r0 in 0.3..1.0f64, rho in 0.1..3.0f64) {
        let g = cavity(1.0, x, plate(r0, rho), plate(r0, rho));
        let r = force_cavity(&g, &iso(), &motion(1.0), &spec()).unwrap();
        let (ei, er) = (r.eta_int.unwrap(), r.eta_rad.unwrap());
        prop_assert!(ei > 1.0 && ei <= eta_int_bound() + 1e-6, "eta_int {}", ei);
        prop_assert!(er > 1.0 && er <= eta_rad_bound() + 1e-4, "eta_rad {}", er);
    }

    #[test]
    fn eta_is_independent_of_rho_and_alpha(x in 0.1..1.9f64, rho in 0.1..5.0f64, alpha0 in 0.1..5.0f64) {
        let base = cavity(1.0, x, plate(1.0, 1.0), plate(1.0, 1.0));
        let scaled = cavity(1.0, x, plate(1.0, rho), plate(1.0, rho));
        let p = iso().with_alpha0(alpha0).unwrap();
        let a = force_cavity(&base, &iso(), &motion(1.0), &spec()).unwrap();
        let b = force_cavity(&scaled, &p, &motion(1.0), &spec()).unwrap();
        prop_assert!((a.eta_int.unwrap() / b.eta_int.unwrap() - 1.0).abs() < 1e-9);
        prop_assert!((a.eta_rad.unwrap() / b.eta_rad.unwrap() - 1.0).abs() < 1e-9);
    }
}
