//! Closed-form reference energies for the concentric configuration and a
//! toy series that shows why subtracting a summable approximant helps.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BaselineError {
    #[error("domain: {0}")]
    Domain(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PfaOrder {
    Leading,
    NextToLeading,
    NextToNextToLeading,
}

/// `2/π² + 1/10`, the second-order curvature coefficient.
pub fn nntl_coefficient() -> f64 {
    2.0 / (PI * PI) + 0.1
}

/// `1`, `1 + s/2` or `1 + s/2 − (2/π² + 1/10)s²` with `s = α − 1`.
pub fn pfa_bracket(alpha: f64, order: PfaOrder) -> f64 {
    let s = alpha - 1.0;
    match order {
        PfaOrder::Leading => 1.0,
        PfaOrder::NextToLeading => 1.0 + 0.5 * s,
        PfaOrder::NextToNextToLeading => 1.0 + 0.5 * s - nntl_coefficient() * s * s,
    }
}

fn check_alpha(alpha: f64) -> Result<(), BaselineError> {
    if alpha > 1.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(BaselineError::Domain(format!(
            "alpha = {alpha} must be > 1"
        )))
    }
}

/// Proximity-force energy `−(π⁴/90)/(α−1)³` times the requested bracket.
pub fn pfa_concentric(alpha: f64, order: PfaOrder) -> Result<f64, BaselineError> {
    check_alpha(alpha)?;
    let s = alpha - 1.0;
    Ok(-PI.powi(4) / (90.0 * s * s * s) * pfa_bracket(alpha, order))
}

/// Smallest `α` accepted by [`large_alpha_asymptote`]; the leading-log
/// form only becomes accurate well above it.
pub const ASYMPTOTE_MIN_ALPHA: f64 = 2.0;

/// `−0.63/(α² ln α)`.
pub fn large_alpha_asymptote(alpha: f64) -> Result<f64, BaselineError> {
    check_alpha(alpha)?;
    if alpha < ASYMPTOTE_MIN_ALPHA {
        return Err(BaselineError::Domain(format!(
            "alpha = {alpha} is below {ASYMPTOTE_MIN_ALPHA}, where the large-separation form is meaningless"
        )));
    }
    Ok(-0.63 / (alpha * alpha * alpha.ln()))
}

const SERIES_POWER: f64 = 1.1;
/// `1/(1.1 − 1)`.
const SERIES_SCALE: f64 = 10.0;

/// `z_M = Σ_{n=1}^{M} n^{−1.1}`, summed from the small end.
pub fn slow_series(m: u64) -> f64 {
    (1..=m).rev().map(|n| (n as f64).powf(-SERIES_POWER)).sum()
}

/// `∫₁^M x^{−1.1} dx = 10(1 − M^{−0.1})`.
pub fn series_integral(m: u64) -> f64 {
    SERIES_SCALE * (1.0 - (m as f64).powf(-0.1))
}

/// `D_M = z_M − ∫₁^M x^{−1.1} dx`.
pub fn series_deficit(m: u64) -> f64 {
    slow_series(m) - series_integral(m)
}

/// `D_M + 10`, the subtraction estimate of `z_∞`.
pub fn accelerated_series(m: u64) -> f64 {
    series_deficit(m) + SERIES_SCALE
}

/// `z_∞ = ζ(1.1)`, by Euler–Maclaurin with ten explicit terms.
pub fn series_limit() -> f64 {
    let s = SERIES_POWER;
    let n = 10.0f64;
    let head: f64 = (1..10).map(|k| (k as f64).powf(-s)).sum();
    // B_2k/(2k)!
    let b = [
        1.0 / 12.0,
        -1.0 / 720.0,
        1.0 / 30240.0,
        -1.0 / 1_209_600.0,
        1.0 / 47_900_160.0,
    ];
    let mut tail = n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s);
    let mut rising = s;
    for (k, bk) in b.iter().enumerate() {
        let p = 2 * k + 1;
        tail += bk * rising * n.powf(-s - p as f64);
        rising *= (s + p as f64) * (s + p as f64 + 1.0);
    }
    head + tail
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn pfa_examples() {
        assert_relative_eq!(
            pfa_concentric(2.0, PfaOrder::Leading).unwrap(),
            -1.082_323_233_711_138,
            max_relative = 1e-14
        );
        let r = pfa_bracket(1.1, PfaOrder::NextToNextToLeading)
            / pfa_bracket(1.1, PfaOrder::NextToLeading);
        assert!((r - 0.997118).abs() < 5e-7);
        assert!((nntl_coefficient() - 0.302642).abs() < 5e-7);
        assert!(pfa_concentric(1.0, PfaOrder::Leading).is_err());
    }

    #[test]
    fn asymptote_examples() {
        assert!((large_alpha_asymptote(4.0).unwrap() + 0.028403).abs() < 5e-7);
        let e = std::f64::consts::E;
        let v = large_alpha_asymptote(e).unwrap();
        assert_relative_eq!(v, -0.63 / (e * e), max_relative = 1e-15);
        assert!((v + 0.085265).abs() < 1e-5);
        assert!(large_alpha_asymptote(1.0).is_err());
        assert!(large_alpha_asymptote(1.5).is_err());
    }

    #[test]
    fn series_small_cases() {
        assert_eq!(slow_series(1), 1.0);
        assert_eq!(series_integral(1), 0.0);
        assert_eq!(accelerated_series(1), 11.0);
    }

    #[test]
    fn euler_maclaurin_agrees_with_direct_tail() {
        // direct partial sum plus the first two Euler–Maclaurin tail terms at large M
        let m = 100_000u64;
        let mf = m as f64;
        let tail = mf.powf(-0.1) / 0.1 - 0.5 * mf.powf(-1.1);
        assert_relative_eq!(slow_series(m) + tail, series_limit(), max_relative = 1e-10);
    }
}
