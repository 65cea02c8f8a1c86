use casimir_core::baselines::{
    accelerated_series, large_alpha_asymptote, nntl_coefficient, pfa_bracket, pfa_concentric,
    series_deficit, series_integral, series_limit, slow_series, PfaOrder,
};
use casimir_core::bessel::{log_bessel_i, log_bessel_k, BesselOrder};
use casimir_core::quadrature::adaptive_kronrod;
use proptest::prelude::*;
use std::f64::consts::PI;

fn four_decimals(v: f64) -> f64 {
    (v * 1e4).round() / 1e4
}

#[test]
fn series_values_to_four_decimals() {
    assert_eq!(four_decimals(slow_series(1000)), 5.5728);
    assert_eq!(four_decimals(slow_series(100_000)), 7.4222);
    assert_eq!(four_decimals(series_limit()), 10.5844);
    assert_eq!(four_decimals(series_deficit(10)), 0.6234);
    assert_eq!(four_decimals(series_deficit(1000)), 0.5847);
}

#[test]
fn subtraction_estimate_is_within_one_percent_at_ten_terms() {
    let est = accelerated_series(10);
    assert!(((est - series_limit()) / series_limit()).abs() < 0.01);
    // the plain partial sum is far worse even at a hundred thousand terms
    assert!(((slow_series(100_000) - series_limit()) / series_limit()).abs() > 0.25);
}

/// `2 ∫₀^∞ x K₀(x)/I₀(x) dx`, the coefficient of the large-separation
/// asymptote from the lone `n = 0` TM mode.
#[test]
fn large_separation_constant_from_zero_mode() {
    let o = BesselOrder::new(0).unwrap();
    let f = |u: f64| {
        if u <= 0.0 || u >= 1.0 {
            return 0.0;
        }
        // x = u/(1−u)
        let x = u / (1.0 - u);
        let jac = 1.0 / ((1.0 - u) * (1.0 - u));
        x * (log_bessel_k(o, x).unwrap() - log_bessel_i(o, x).unwrap()).exp() * jac
    };
    let (c, _, _) = adaptive_kronrod(f, 0.0, 1.0, 1e-12, 0.0, 200_000);
    assert!((c - 0.631_382_3).abs() < 1e-6, "{c}");
    // three significant figures
    assert_eq!((2.0 * c * 100.0).round() / 100.0, 1.26);
    let alpha: f64 = 5.0;
    let e = large_alpha_asymptote(alpha).unwrap();
    let from_length_form = -1.26 * 4.0 * PI / (8.0 * PI * alpha * alpha * alpha.ln());
    assert!((e - from_length_form).abs() < 1e-15);
}

#[test]
fn pfa_orders() {
    let s: f64 = 0.05;
    let alpha = 1.0 + s;
    let l = pfa_concentric(alpha, PfaOrder::Leading).unwrap();
    assert!((l + PI.powi(4) / (90.0 * s.powi(3))).abs() < 1e-9 * l.abs());
    let ntl = pfa_concentric(alpha, PfaOrder::NextToLeading).unwrap();
    let nntl = pfa_concentric(alpha, PfaOrder::NextToNextToLeading).unwrap();
    assert!((ntl / l - 1.025).abs() < 1e-15);
    assert!((nntl / ntl - 0.999_262).abs() < 5e-7);
    assert!((nntl_coefficient() - (2.0 / (PI * PI) + 0.1)).abs() < 1e-16);
}

#[test]
fn integral_matches_closed_form() {
    for m in [2u64, 10, 1000] {
        let f = |x: f64| x.powf(-1.1);
        let (v, _, _) = adaptive_kronrod(f, 1.0, m as f64, 1e-13, 0.0, 100_000);
        assert!((v - series_integral(m)).abs() < 1e-11);
    }
}

proptest! {
    #[test]
    fn brackets_ordered_near_contact(s in 1e-4f64..0.5) {
        let a = 1.0 + s;
        prop_assert!(pfa_bracket(a, PfaOrder::NextToLeading) > 1.0);
        prop_assert!(pfa_bracket(a, PfaOrder::NextToNextToLeading) < pfa_bracket(a, PfaOrder::NextToLeading));
        prop_assert!(pfa_concentric(a, PfaOrder::Leading).unwrap() < 0.0);
    }

    #[test]
    fn deficits_decrease_towards_limit(m in 2u64..5000) {
        let d1 = series_deficit(m);
        let d2 = series_deficit(m + 1);
        prop_assert!(d2 < d1);
        prop_assert!(d2 > series_limit() - 10.0);
    }

    #[test]
    fn asymptote_shrinks_with_alpha(alpha in 2.0f64..1e3) {
        let a = large_alpha_asymptote(alpha).unwrap();
        prop_assert!(a < 0.0);
        prop_assert!(large_alpha_asymptote(alpha * 1.1).unwrap().abs() < a.abs());
    }
}
