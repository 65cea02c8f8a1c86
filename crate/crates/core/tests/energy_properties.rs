use casimir_core::baselines::{large_alpha_asymptote, pfa_bracket, pfa_concentric, PfaOrder};
use casimir_core::energy::{
    energy_concentric_accelerated, energy_difference, energy_exact, mode_energy, tilde_energy,
    tm_te_split, EnergyError,
};
use casimir_core::geometry::{Geometry, QuadratureSpec, TruncationSpec};
use casimir_core::spectral::Polarization;
use proptest::prelude::*;

fn conc(alpha: f64) -> Geometry {
    Geometry::Concentric { alpha }
}

fn ecc(alpha: f64, delta: f64) -> Geometry {
    Geometry::Eccentric { alpha, delta }
}

fn defaults() -> (TruncationSpec, QuadratureSpec) {
    (TruncationSpec::default(), QuadratureSpec::default())
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

#[test]
fn node_doubling_stays_within_error_estimate() {
    let t = TruncationSpec::fixed(48, 48);
    for alpha in [1.3, 2.0] {
        let coarse = energy_exact(&conc(alpha), &t, &QuadratureSpec::with_nodes(32)).unwrap();
        let fine = energy_exact(&conc(alpha), &t, &QuadratureSpec::with_nodes(64)).unwrap();
        let change = rel(fine.e_hat, coarse.e_hat);
        assert!(
            change < coarse.est_rel_error,
            "alpha={alpha}: {change} vs {}",
            coarse.est_rel_error
        );
    }
}

#[test]
fn truncation_beyond_adaptive_choice_changes_little() {
    let (t, q) = defaults();
    for alpha in [1.2, 1.5] {
        let r = energy_exact(&conc(alpha), &t, &q).unwrap();
        let n = (2 * r.report.n_max_final).min(512);
        let wider = energy_exact(&conc(alpha), &TruncationSpec::fixed(n, n), &q).unwrap();
        assert!(rel(wider.e_hat, r.e_hat) < t.rel_tol, "alpha={alpha}");
    }
}

#[test]
fn accelerated_matches_exact_at_one_point_one() {
    let (t, q) = defaults();
    let e = energy_exact(&conc(1.1), &t, &q).unwrap();
    let a = energy_concentric_accelerated(&conc(1.1), &t, &q).unwrap();
    assert!(rel(a.e_hat, e.e_hat) <= 1e-3);
    assert!(a.report.accelerated && !e.report.accelerated);
}

#[test]
fn accelerated_reaches_tolerance_with_quarter_truncation() {
    let (t, q) = defaults();
    let e = energy_exact(&conc(1.05), &t, &q).unwrap();
    let a = energy_concentric_accelerated(&conc(1.05), &t, &q).unwrap();
    assert!(
        4 * a.report.n_max_final <= e.report.n_max_final,
        "n_max: accelerated {} vs exact {}",
        a.report.n_max_final,
        e.report.n_max_final
    );
}

#[test]
fn accelerated_near_contact_follows_nntl() {
    // the default 1e-4 target is out of reach at alpha = 1.01 within the caps
    let t = TruncationSpec::default().with_rel_tol(1e-3);
    let q = QuadratureSpec::default();
    let a = energy_concentric_accelerated(&conc(1.01), &t, &q).unwrap();
    let ratio = a.e_hat / pfa_concentric(1.01, PfaOrder::Leading).unwrap();
    let bracket = pfa_bracket(1.01, PfaOrder::NextToNextToLeading);
    assert!((bracket - 1.00497).abs() < 5e-6);
    assert!(rel(ratio, bracket) <= 0.01, "{ratio} vs {bracket}");
}

#[test]
fn zero_mode_is_not_subtracted() {
    let q = QuadratureSpec::default();
    for pol in Polarization::BOTH {
        let m0 = mode_energy(1.05, 0, pol, &q).unwrap();
        assert!(m0 < 0.0 && m0.is_finite());
    }
    // accelerated = exact sum, which contains the n = 0 term exactly once
    let (t, q) = defaults();
    let a = energy_concentric_accelerated(&conc(1.2), &t, &q).unwrap();
    let without: f64 = a.e_hat
        - Polarization::BOTH
            .iter()
            .map(|&p| mode_energy(1.2, 0, p, &q).unwrap())
            .sum::<f64>();
    assert!((without - a.e_hat).abs() > 1e-3 * a.e_hat.abs());
}

#[test]
fn tilde_energy_positive_separation_limits() {
    for s in [1e-3, 1e-2] {
        let v = tilde_energy(1.0 + s).unwrap() * s * s * s;
        assert!(rel(v, -std::f64::consts::PI.powi(4) / 90.0) < 2.0 * s);
    }
    assert!(tilde_energy(50.0).unwrap().abs() < 1e-40);
}

#[test]
fn asymptote_at_alpha_four() {
    let (t, q) = defaults();
    let r = energy_exact(&conc(4.0), &t, &q).unwrap();
    let target = large_alpha_asymptote(4.0).unwrap();
    assert!((target + 0.02840).abs() < 5e-6);
    assert!(rel(r.e_hat, target) <= 0.25, "{} vs {target}", r.e_hat);
}

#[test]
fn asymptote_approached_from_alpha_four_to_sixteen() {
    let (t, q) = defaults();
    let dev = |alpha: f64| {
        let r = energy_exact(&conc(alpha), &t, &q).unwrap();
        rel(r.e_hat, large_alpha_asymptote(alpha).unwrap())
    };
    let (d4, d8, d16) = (dev(4.0), dev(8.0), dev(16.0));
    assert!(d16 < d8 && d8 < d4, "{d4} {d8} {d16}");
}

#[test]
fn tm_dominates_at_large_separation() {
    let (t, q) = defaults();
    let f8 = tm_te_split(&energy_exact(&conc(8.0), &t, &q).unwrap()).0;
    let f16 = tm_te_split(&energy_exact(&conc(16.0), &t, &q).unwrap()).0;
    assert!(f8 >= 0.75, "{f8}");
    assert!(f16 > f8);
}

#[test]
fn eccentric_difference_is_negative_and_grows() {
    let t = TruncationSpec::default().with_rel_tol(1e-5);
    let q = QuadratureSpec::default();
    assert_eq!(
        energy_difference(&ecc(1.6, 0.0), &conc(1.6), &t, &q).unwrap(),
        0.0
    );
    let d2 = energy_difference(&ecc(1.6, 0.2), &conc(1.6), &t, &q).unwrap();
    let d4 = energy_difference(&ecc(1.6, 0.4), &conc(1.6), &t, &q).unwrap();
    assert!(d2 < 0.0 && d4 < 0.0);
    assert!(d2.abs() < d4.abs());
}

#[test]
fn difference_rejects_mismatched_alpha() {
    let (t, q) = defaults();
    assert!(matches!(
        energy_difference(&ecc(1.6, 0.2), &conc(1.7), &t, &q),
        Err(EnergyError::InvalidArgument(_))
    ));
}

#[test]
fn eccentric_tends_to_cylinder_plane_energy() {
    // outer radius and offset grow together with the closest gap fixed
    let (t, q) = defaults();
    let h = 2.0;
    let cp = energy_exact(&Geometry::CylinderPlane { h_over_a: h }, &t, &q).unwrap();
    let ratio = 20.0;
    let delta = ratio * h;
    let e = energy_exact(&ecc(delta + h, delta), &t, &q).unwrap();
    let dev = rel(e.e_hat, cp.e_hat);
    assert!(
        dev < 0.02,
        "eccentric {} vs cylinder-plane {}: {dev}",
        e.e_hat,
        cp.e_hat
    );
}

#[test]
fn results_independent_of_thread_count() {
    let (t, q) = defaults();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| energy_exact(&ecc(1.5, 0.2), &t, &q).unwrap())
    };
    let a = run(1);
    let b = run(3);
    assert_eq!(a.e_hat.to_bits(), b.e_hat.to_bits());
    assert_eq!(a.e_tm.to_bits(), b.e_tm.to_bits());
}

#[test]
fn fixed_truncation_reports_its_settings() {
    let t = TruncationSpec::fixed(12, 12);
    let q = QuadratureSpec::with_nodes(48);
    let r = energy_exact(&conc(1.5), &t, &q).unwrap();
    assert_eq!(r.report.n_max_final, 12);
    assert_eq!(r.report.node_count_final, 48);
    assert_eq!(r.converged, r.est_rel_error <= t.rel_tol);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn energies_negative_with_consistent_split(alpha in 1.2f64..6.0) {
        let t = TruncationSpec::fixed(24, 24);
        let q = QuadratureSpec::with_nodes(48);
        let r = energy_exact(&conc(alpha), &t, &q).unwrap();
        prop_assert!(r.e_hat < 0.0 && r.e_tm < 0.0 && r.e_te < 0.0);
        prop_assert!(((r.e_tm + r.e_te) - r.e_hat).abs() <= 1e-12 * r.e_hat.abs());
        let (a, b) = tm_te_split(&r);
        prop_assert!(a > 0.0 && a < 1.0);
        prop_assert_eq!(a + b, 1.0);
    }

    #[test]
    fn energy_weakens_with_separation(alpha in 1.2f64..4.0, step in 0.05f64..1.0) {
        let t = TruncationSpec::fixed(24, 24);
        let q = QuadratureSpec::with_nodes(48);
        let near = energy_exact(&conc(alpha), &t, &q).unwrap().e_hat;
        let far = energy_exact(&conc(alpha + step), &t, &q).unwrap().e_hat;
        prop_assert!(far.abs() < near.abs());
    }

    #[test]
    fn physical_round_trip(e in -1e3f64..-1e-6, a in 1e-8f64..1e-3, l in 1e-6f64..1.0) {
        use casimir_core::geometry::{from_physical, to_physical};
        let back = from_physical(to_physical(e, a, l).unwrap(), a, l).unwrap();
        prop_assert!(((back - e) / e).abs() < 1e-14);
    }
}
