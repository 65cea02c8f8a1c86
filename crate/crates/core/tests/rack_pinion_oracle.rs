use casimir_core::geometry::{QuadratureRule, QuadratureSpec};
use casimir_core::rack_pinion::{
    energy_cyl_rack, energy_plane_rack, energy_pp, force_ratio, lateral_force_cyl_rack,
    lateral_force_plane_rack, lateral_force_pp, small_angle_integral, theta_integral,
    CorrugationSpec, ProfileJ,
};
use proptest::prelude::*;
use std::f64::consts::PI;

fn spec(a_over_d: f64) -> CorrugationSpec {
    let d = 1e-7;
    CorrugationSpec {
        h: 1e-8,
        lambda: 1e-6,
        x: 1.3e-7,
        d,
        a: a_over_d * d,
        l: 1e-4,
    }
}

fn simpson(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// `∫₀^{2π} J(d(θ)/λ) d(θ)⁻⁵ dθ` by adaptive Simpson directly in θ.
fn theta_oracle(c: &CorrugationSpec, j: &dyn Fn(f64) -> f64) -> f64 {
    let f = |th: f64| {
        let dt = c.d + c.a * (1.0 - th.cos());
        j(dt / c.lambda) * (c.d / dt).powi(5)
    };
    // the integrand is even about θ = 0; split at the peak
    let half = |a: f64, b: f64| {
        let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        simpson(&f, a, b, fa, fm, fb, whole, 1e-13, 60)
    };
    2.0 * half(0.0, PI) / c.d.powi(5)
}

fn ratio_oracle(c: &CorrugationSpec) -> f64 {
    2.0 * PI * c.d.powi(-5) / theta_oracle(c, &|_| 1.0)
}

#[test]
fn force_ratio_at_hundred() {
    let c = spec(100.0);
    let q = QuadratureSpec::default();
    let got = force_ratio(&c, &ProfileJ::default(), &q).unwrap();
    let oracle = ratio_oracle(&c);
    assert!(((got - oracle) / oracle).abs() < 1e-8, "{got} vs {oracle}");
    assert!(((got - 51.7) / 51.7).abs() <= 0.01);
    assert!(got >= 10.0);
}

#[test]
fn theta_integral_matches_oracle_for_varying_profile() {
    let q = QuadratureSpec::default();
    let table = ProfileJ::from_table_str("0.0 1.0\n0.1 0.8\n0.2 0.5\n1.0 0.1\n").unwrap();
    for a_over_d in [3.0, 100.0, 5000.0] {
        let c = spec(a_over_d);
        let interp = |r: f64| table.eval(r);
        let want = theta_oracle(&c, &interp);
        for rule in [
            QuadratureRule::TransformedGauss,
            QuadratureRule::AdaptivePanel,
        ] {
            let q = QuadratureSpec { rule, ..q };
            let got = theta_integral(&c, &table, &q).unwrap();
            assert!(
                ((got - want) / want).abs() < 1e-6,
                "a/d={a_over_d} {rule:?}: {got} vs {want}"
            );
        }
    }
}

#[test]
fn log_log_slope_is_one_half() {
    let q = QuadratureSpec::default();
    let pts: Vec<(f64, f64)> = (0..=8)
        .map(|k| {
            let r = 10f64.powf(2.0 + 2.0 * k as f64 / 8.0);
            let f = force_ratio(&spec(r), &ProfileJ::default(), &q).unwrap();
            (r.ln(), f.ln())
        })
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    assert!((slope - 0.5).abs() <= 0.02, "{slope}");
}

#[test]
fn small_angle_form_for_large_radius() {
    let q = QuadratureSpec::default();
    let c = spec(1e4);
    let full = theta_integral(&c, &ProfileJ::default(), &q).unwrap();
    let small = small_angle_integral(c.d, c.a);
    assert!(((full - small) / full).abs() < 1e-3);
}

#[test]
fn forces_are_minus_energy_gradients() {
    let q = QuadratureSpec::default();
    let j = ProfileJ::default();
    let c = spec(50.0);
    let dx = 1e-12;
    let shifted = |x: f64| CorrugationSpec { x, ..c };
    let grad = |e: &dyn Fn(&CorrugationSpec) -> f64| {
        -(e(&shifted(c.x + dx)) - e(&shifted(c.x - dx))) / (2.0 * dx)
    };
    let g_pp = grad(&|s| energy_pp(s, &j).unwrap());
    let f_pp = lateral_force_pp(&c, &j).unwrap();
    assert!(((g_pp - f_pp) / f_pp).abs() < 1e-6);
    let g_prp = grad(&|s| energy_plane_rack(s, &j, &q).unwrap());
    let f_prp = lateral_force_plane_rack(&c, &j, &q).unwrap();
    assert!(((g_prp - f_prp) / f_prp).abs() < 1e-6);
    let g_crp = grad(&|s| energy_cyl_rack(s, &j).unwrap().energy);
    let f_crp = lateral_force_cyl_rack(&c, &j).unwrap();
    assert!(((g_crp - f_crp) / f_crp).abs() < 1e-6);
}

#[test]
fn regime_warning_below_ten() {
    let j = ProfileJ::default();
    assert!(energy_cyl_rack(&spec(5.0), &j).unwrap().warning.is_some());
    assert!(energy_cyl_rack(&spec(50.0), &j).unwrap().warning.is_none());
}

#[test]
fn invalid_specs_rejected() {
    let j = ProfileJ::default();
    let mut c = spec(10.0);
    c.h = c.d;
    assert!(energy_pp(&c, &j).is_err());
    let mut c = spec(10.0);
    c.lambda = 0.0;
    assert!(energy_pp(&c, &j).is_err());
    assert!(ProfileJ::from_table_str("0.1 1\n0.1 2\n").is_err());
    assert!(ProfileJ::from_table_str("abc").is_err());
}

#[test]
fn profile_table_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("j.csv");
    std::fs::write(&p, "# d/lambda, J\n0.5, 0.2\n0.0, 1.0\n").unwrap();
    let j = ProfileJ::from_file(&p).unwrap();
    assert!((j.eval(0.25) - 0.6).abs() < 1e-15);
    assert_eq!(j.eval(-1.0), 1.0);
    assert_eq!(j.eval(2.0), 0.2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn ratio_exceeds_root_bound(la in 1.0f64..4.5) {
        let r = 10f64.powf(la);
        let f = force_ratio(&spec(r), &ProfileJ::default(), &QuadratureSpec::default()).unwrap();
        prop_assert!(f >= r.sqrt());
    }
}
