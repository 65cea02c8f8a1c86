//! Proximity-level lateral Casimir interaction between sinusoidally
//! corrugated surfaces: plane–plane, a corrugated pinion over a plane rack,
//! and a pinion inside a corrugated cylindrical shell.
//!
//! The plane–plane energy per unit area is
//! `E_pp = ħc h²/d⁵ · cos(2πx/λ) · J(d/λ)` with the profile `J` injected by
//! the caller. Lengths are in meters and energies in joules.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

use crate::geometry::{QuadratureRule, QuadratureSpec, HBAR_C};
use crate::quadrature::{adaptive_kronrod, gauss_legendre};

/// Below this `a/d` the cylindrical rack formula is outside its regime.
pub const CYL_RACK_MIN_RADIUS_RATIO: f64 = 10.0;

const THETA_REL_TOL: f64 = 1e-10;
const THETA_NODE_CAP: usize = 4096;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RackError {
    #[error("invalid corrugation: {0}")]
    Invalid(String),
    #[error("profile table: {0}")]
    Table(String),
    #[error("no-convergence: angular integral changed by {rel_change:e} at {nodes} nodes")]
    NoConvergence { rel_change: f64, nodes: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrugationSpec {
    /// Corrugation amplitude.
    pub h: f64,
    /// Corrugation wavelength.
    pub lambda: f64,
    /// Lateral displacement.
    pub x: f64,
    /// Mean gap.
    pub d: f64,
    /// Pinion radius.
    pub a: f64,
    /// Cylinder length.
    pub l: f64,
}

impl CorrugationSpec {
    pub fn validate(&self) -> Result<(), RackError> {
        let all = [
            ("h", self.h),
            ("lambda", self.lambda),
            ("x", self.x),
            ("d", self.d),
            ("a", self.a),
            ("L", self.l),
        ];
        if let Some((name, v)) = all.iter().find(|(_, v)| !v.is_finite()) {
            return Err(RackError::Invalid(format!("{name} = {v} is not finite")));
        }
        for (name, v) in [("lambda", self.lambda), ("d", self.d), ("a", self.a)] {
            if v <= 0.0 {
                return Err(RackError::Invalid(format!("{name} = {v} must be > 0")));
            }
        }
        if self.l < 0.0 || self.h < 0.0 {
            return Err(RackError::Invalid("h and L must be >= 0".into()));
        }
        if self.h >= self.d {
            return Err(RackError::Invalid(format!(
                "amplitude h = {} must be below the gap d = {}",
                self.h, self.d
            )));
        }
        Ok(())
    }

    fn phase(&self) -> f64 {
        2.0 * PI * self.x / self.lambda
    }
}

/// The plane–plane profile function `J(d/λ)`.
#[derive(Clone)]
pub enum ProfileJ {
    Constant(f64),
    /// Sorted `(d/λ, J)` pairs, linearly interpolated and held flat past
    /// either end.
    Tabulated(Vec<(f64, f64)>),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl Default for ProfileJ {
    fn default() -> Self {
        ProfileJ::Constant(1.0)
    }
}

impl fmt::Debug for ProfileJ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProfileJ::Constant(c) => write!(f, "Constant({c})"),
            ProfileJ::Tabulated(t) => write!(f, "Tabulated({} points)", t.len()),
            ProfileJ::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl ProfileJ {
    /// Parses whitespace-separated two-column text. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn from_table_str(text: &str) -> Result<Self, RackError> {
        let mut pts = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .collect();
            if cols.len() != 2 {
                return Err(RackError::Table(format!(
                    "line {}: expected two columns",
                    i + 1
                )));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| RackError::Table(format!("line {}: {e}", i + 1)))
            };
            let (r, j) = (parse(cols[0])?, parse(cols[1])?);
            if !r.is_finite() || !j.is_finite() {
                return Err(RackError::Table(format!(
                    "line {}: non-finite value",
                    i + 1
                )));
            }
            pts.push((r, j));
        }
        if pts.is_empty() {
            return Err(RackError::Table("no data rows".into()));
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        if pts.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(RackError::Table("duplicate abscissa".into()));
        }
        Ok(ProfileJ::Tabulated(pts))
    }

    pub fn from_file(path: &Path) -> Result<Self, RackError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RackError::Table(format!("{}: {e}", path.display())))?;
        Self::from_table_str(&text)
    }

    pub fn eval(&self, ratio: f64) -> f64 {
        match self {
            ProfileJ::Constant(c) => *c,
            ProfileJ::Custom(f) => f(ratio),
            ProfileJ::Tabulated(pts) => {
                let first = pts[0];
                let last = pts[pts.len() - 1];
                if ratio <= first.0 {
                    return first.1;
                }
                if ratio >= last.0 {
                    return last.1;
                }
                let k = pts.partition_point(|p| p.0 <= ratio);
                let (x0, y0) = pts[k - 1];
                let (x1, y1) = pts[k];
                y0 + (y1 - y0) * (ratio - x0) / (x1 - x0)
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, ProfileJ::Constant(_))
    }

    /// Abscissae where the interpolant has a kink.
    fn kinks(&self) -> &[(f64, f64)] {
        match self {
            ProfileJ::Tabulated(pts) => pts,
            _ => &[],
        }
    }
}

/// Panel edges on `[0, π/2]` in the ψ variable at which `d(ψ)/λ` crosses a
/// table abscissa.
fn psi_breakpoints(c: &CorrugationSpec, cc: f64, j: &ProfileJ) -> Vec<f64> {
    let half_pi = 0.5 * PI;
    let mut edges = vec![0.0];
    for &(r, _) in j.kinks() {
        // d/(λ r) = w = 1 − (1 − c²) sin²ψ
        let w = c.d / (c.lambda * r);
        let s2 = (1.0 - w) / (1.0 - cc * cc);
        if s2 > 0.0 && s2 < 1.0 {
            edges.push(s2.sqrt().asin());
        }
    }
    edges.push(half_pi);
    edges.sort_by(f64::total_cmp);
    edges.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    edges
}

/// Plane–plane energy per unit area.
pub fn energy_pp(c: &CorrugationSpec, j: &ProfileJ) -> Result<f64, RackError> {
    c.validate()?;
    Ok(HBAR_C * c.h * c.h / c.d.powi(5) * c.phase().cos() * j.eval(c.d / c.lambda))
}

/// `−∂E_pp/∂x` per unit area.
pub fn lateral_force_pp(c: &CorrugationSpec, j: &ProfileJ) -> Result<f64, RackError> {
    c.validate()?;
    Ok(HBAR_C * c.h * c.h / c.d.powi(5)
        * (2.0 * PI / c.lambda)
        * c.phase().sin()
        * j.eval(c.d / c.lambda))
}

/// `∫₀^{2π} dθ J(d(θ)/λ)/d(θ)⁵` with `d(θ) = d + a(1 − cos θ)`.
///
/// With `θ = 2φ` and `tan φ = c tan ψ`, `c = √(d/(d+2a))`, the integral
/// becomes `(4c/d⁵) ∫₀^{π/2} dψ J(d(ψ)/λ) (cos²ψ + c² sin²ψ)⁴` where
/// `d(ψ) = d/(cos²ψ + c² sin²ψ)`. The sharp peak at `θ = 0` is spread over
/// the whole interval, and for constant `J` the integrand is a
/// trigonometric polynomial.
pub fn theta_integral(
    c: &CorrugationSpec,
    j: &ProfileJ,
    q: &QuadratureSpec,
) -> Result<f64, RackError> {
    c.validate()?;
    q.check().map_err(RackError::Invalid)?;
    let cc = (c.d / (c.d + 2.0 * c.a)).sqrt();
    let g = |psi: f64| {
        let (s, co) = psi.sin_cos();
        let w = co * co + cc * cc * s * s;
        j.eval(c.d / w / c.lambda) * w.powi(4)
    };
    let pre = 4.0 * cc / c.d.powi(5);
    let edges = psi_breakpoints(c, cc, j);
    let panels: Vec<(f64, f64)> = edges.windows(2).map(|w| (w[0], w[1])).collect();
    match q.rule {
        QuadratureRule::TransformedGauss => {
            let gauss = |n: usize| -> f64 {
                let r = gauss_legendre(n);
                panels
                    .iter()
                    .map(|&(lo, hi)| {
                        let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
                        r.nodes
                            .iter()
                            .zip(&r.weights)
                            .map(|(&x, &w)| w * g(mid + half * x))
                            .sum::<f64>()
                            * half
                    })
                    .sum()
            };
            let mut n = q.node_count;
            let mut prev = gauss(n);
            loop {
                let next = gauss(2 * n);
                let rel = ((next - prev) / next).abs();
                if rel <= THETA_REL_TOL || (j.is_constant() && rel <= 1e-14) {
                    return Ok(pre * next);
                }
                if 4 * n > THETA_NODE_CAP {
                    return Err(RackError::NoConvergence {
                        rel_change: rel,
                        nodes: 2 * n * panels.len(),
                    });
                }
                prev = next;
                n *= 2;
            }
        }
        QuadratureRule::AdaptivePanel => {
            let (mut v, mut err, mut evals) = (0.0, 0.0, 0);
            for &(lo, hi) in &panels {
                let (pv, pe, pn) =
                    adaptive_kronrod(&g, lo, hi, THETA_REL_TOL, 0.0, 100 * THETA_NODE_CAP);
                v += pv;
                err += pe;
                evals += pn;
            }
            if err > THETA_REL_TOL * v.abs() {
                return Err(RackError::NoConvergence {
                    rel_change: err / v.abs(),
                    nodes: evals,
                });
            }
            Ok(pre * v)
        }
    }
}

/// Small-angle form `d⁻⁵ √(2d/a) · 35π/128` of [`theta_integral`] for
/// `J ≡ 1` and `d ≪ a`.
pub fn small_angle_integral(d: f64, a: f64) -> f64 {
    d.powi(-5) * (2.0 * d / a).sqrt() * 35.0 * PI / 128.0
}

/// Energy of a corrugated pinion above a corrugated plane rack.
pub fn energy_plane_rack(
    c: &CorrugationSpec,
    j: &ProfileJ,
    q: &QuadratureSpec,
) -> Result<f64, RackError> {
    let integral = theta_integral(c, j, q)?;
    Ok(HBAR_C * c.h * c.h * c.phase().cos() * c.l * c.a * integral)
}

/// `−∂E_prp/∂x`.
pub fn lateral_force_plane_rack(
    c: &CorrugationSpec,
    j: &ProfileJ,
    q: &QuadratureSpec,
) -> Result<f64, RackError> {
    let integral = theta_integral(c, j, q)?;
    Ok(HBAR_C * c.h * c.h * (2.0 * PI / c.lambda) * c.phase().sin() * c.l * c.a * integral)
}

/// Cylindrical rack energy with a note when `a/d` is outside the regime of
/// nearly equal radii.
#[derive(Debug, Clone, PartialEq)]
pub struct CylRackEnergy {
    pub energy: f64,
    pub warning: Option<String>,
}

fn regime_warning(c: &CorrugationSpec) -> Option<String> {
    let ratio = c.a / c.d;
    (ratio < CYL_RACK_MIN_RADIUS_RATIO).then(|| {
        format!("a/d = {ratio} is below {CYL_RACK_MIN_RADIUS_RATIO}; the cylindrical rack formula assumes a much larger than d")
    })
}

/// `E_crp = 2πaL · E_pp`.
pub fn energy_cyl_rack(c: &CorrugationSpec, j: &ProfileJ) -> Result<CylRackEnergy, RackError> {
    let e = energy_pp(c, j)?;
    Ok(CylRackEnergy {
        energy: 2.0 * PI * c.a * c.l * e,
        warning: regime_warning(c),
    })
}

/// `−∂E_crp/∂x`.
pub fn lateral_force_cyl_rack(c: &CorrugationSpec, j: &ProfileJ) -> Result<f64, RackError> {
    Ok(2.0 * PI * c.a * c.l * lateral_force_pp(c, j)?)
}

/// `F_crp/F_prp = 2π J(d/λ) d⁻⁵ / ∫dθ J(d(θ)/λ) d(θ)⁻⁵`.
pub fn force_ratio(
    c: &CorrugationSpec,
    j: &ProfileJ,
    q: &QuadratureSpec,
) -> Result<f64, RackError> {
    let integral = theta_integral(c, j, q)?;
    Ok(2.0 * PI * j.eval(c.d / c.lambda) * c.d.powi(-5) / integral)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spec(d: f64, a: f64) -> CorrugationSpec {
        CorrugationSpec {
            h: 0.1 * d,
            lambda: 1e-6,
            x: 0.0,
            d,
            a,
            l: 1e-3,
        }
    }

    #[test]
    fn plane_plane_examples() {
        let j = ProfileJ::default();
        let mut c = spec(1e-7, 1e-5);
        let e0 = energy_pp(&c, &j).unwrap();
        c.x = c.lambda;
        assert_relative_eq!(energy_pp(&c, &j).unwrap(), e0, max_relative = 1e-12);
        c.x = 0.25 * c.lambda;
        assert!(energy_pp(&c, &j).unwrap().abs() < 1e-15 * e0.abs());
        c.x = 0.0;
        c.h *= 2.0;
        assert_relative_eq!(energy_pp(&c, &j).unwrap(), 4.0 * e0, max_relative = 1e-12);
    }

    #[test]
    fn validation() {
        let mut c = spec(1e-7, 1e-5);
        c.h = 2e-7;
        assert!(c.validate().is_err());
        c.h = 0.0;
        c.lambda = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn table_interpolation() {
        let j = ProfileJ::from_table_str("# d/lambda J\n0.1 1.0\n0.3 3.0\n\n0.2, 2.5\n").unwrap();
        assert_eq!(j.eval(0.0), 1.0);
        assert_eq!(j.eval(1.0), 3.0);
        assert_relative_eq!(j.eval(0.15), 1.75, max_relative = 1e-14);
        assert_relative_eq!(j.eval(0.25), 2.75, max_relative = 1e-14);
        assert!(ProfileJ::from_table_str("0.1 1 2\n").is_err());
        assert!(ProfileJ::from_table_str("# only comments\n").is_err());
        assert!(ProfileJ::from_table_str("0.1 1\n0.1 2\n").is_err());
    }

    #[test]
    fn ratio_and_limits() {
        let q = QuadratureSpec::default();
        let j = ProfileJ::default();
        let r = force_ratio(&spec(1e-8, 1e-6), &j, &q).unwrap();
        assert!((r - 51.70).abs() < 0.05, "ratio {r}");
        let c = spec(1e-8, 1e-4);
        assert_relative_eq!(
            theta_integral(&c, &j, &q).unwrap(),
            small_angle_integral(c.d, c.a),
            max_relative = 0.02
        );
        let c = spec(1e-6, 1e-12);
        assert_relative_eq!(
            theta_integral(&c, &j, &q).unwrap(),
            2.0 * PI * c.d.powi(-5),
            max_relative = 1e-5
        );
    }

    #[test]
    fn cylindrical_rack_warns_outside_regime() {
        let j = ProfileJ::default();
        let e = energy_cyl_rack(&spec(1e-7, 5e-7), &j).unwrap();
        assert!(e.warning.is_some());
        let e = energy_cyl_rack(&spec(1e-7, 1e-5), &j).unwrap();
        assert!(e.warning.is_none());
        let c = spec(1e-7, 1e-5);
        assert_relative_eq!(
            e.energy,
            2.0 * PI * c.a * c.l * energy_pp(&c, &j).unwrap(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn panel_rule_agrees() {
        let c = spec(1e-8, 1e-6);
        let j = ProfileJ::Custom(Arc::new(|r: f64| 1.0 + r));
        let g = theta_integral(&c, &j, &QuadratureSpec::default()).unwrap();
        let p = theta_integral(
            &c,
            &j,
            &QuadratureSpec {
                rule: QuadratureRule::AdaptivePanel,
                ..QuadratureSpec::default()
            },
        )
        .unwrap();
        assert_relative_eq!(g, p, max_relative = 1e-9);
    }
}
