//! Geometric data model, dimensionless conventions and the result record
//! shared by every evaluator.
//!
//! Lengths are measured in units of the inner radius `a`. Energies are
//! reported as `ê = 4πa²E/(ħcL)`; [`to_physical`] is the single place where
//! SI units enter.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// `ħc` in J·m.
pub const HBAR_C: f64 = 3.161_526_49e-26;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("overlap: delta = {delta} must be < alpha - 1 = {limit}")]
    Overlap { delta: f64, limit: f64 },
    #[error("degenerate: alpha = {alpha} must be > 1")]
    Degenerate { alpha: f64 },
    #[error("intersecting-plane: h_over_a = {h_over_a} must be > 1")]
    IntersectingPlane { h_over_a: f64 },
    #[error("negative-eccentricity: delta = {delta} must be >= 0")]
    NegativeEccentricity { delta: f64 },
    #[error("non-finite: {field} = {value}")]
    NonFinite { field: &'static str, value: f64 },
    #[error("non-positive-length: {field} = {value} must be > 0")]
    NonPositiveLength { field: &'static str, value: f64 },
}

impl GeometryError {
    /// Name of the violated constraint.
    pub fn constraint(&self) -> &'static str {
        match self {
            GeometryError::Overlap { .. } => "overlap",
            GeometryError::Degenerate { .. } => "degenerate",
            GeometryError::IntersectingPlane { .. } => "intersecting-plane",
            GeometryError::NegativeEccentricity { .. } => "negative-eccentricity",
            GeometryError::NonFinite { .. } => "non-finite",
            GeometryError::NonPositiveLength { .. } => "non-positive-length",
        }
    }
}

/// Shape parameters of the three configurations.
///
/// `alpha = b/a`, `delta = ε/a` and `h_over_a = H/a`, where `H` is the
/// distance from the cylinder axis to the plane (`H = a + d`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Geometry {
    Concentric { alpha: f64 },
    Eccentric { alpha: f64, delta: f64 },
    CylinderPlane { h_over_a: f64 },
}

impl Geometry {
    pub fn validate(&self) -> Result<(), GeometryError> {
        validate(self)
    }

    /// Smallest surface-to-surface distance in units of `a`.
    pub fn min_gap(&self) -> f64 {
        match *self {
            Geometry::Concentric { alpha } => alpha - 1.0,
            Geometry::Eccentric { alpha, delta } => alpha - 1.0 - delta,
            Geometry::CylinderPlane { h_over_a } => h_over_a - 1.0,
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            Geometry::Concentric { .. } => "concentric",
            Geometry::Eccentric { .. } => "eccentric",
            Geometry::CylinderPlane { .. } => "cylplane",
        }
    }
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Geometry::Concentric { alpha } => write!(f, "concentric(alpha={alpha})"),
            Geometry::Eccentric { alpha, delta } => {
                write!(f, "eccentric(alpha={alpha}, delta={delta})")
            }
            Geometry::CylinderPlane { h_over_a } => write!(f, "cylplane(h_over_a={h_over_a})"),
        }
    }
}

fn finite(field: &'static str, value: f64) -> Result<(), GeometryError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(GeometryError::NonFinite { field, value })
    }
}

/// Accepts exactly `{α > 1, 0 ≤ δ < α − 1}` and `{H/a > 1}`. Touching
/// configurations are rejected.
pub fn validate(g: &Geometry) -> Result<(), GeometryError> {
    match *g {
        Geometry::Concentric { alpha } => {
            finite("alpha", alpha)?;
            if alpha <= 1.0 {
                return Err(GeometryError::Degenerate { alpha });
            }
        }
        Geometry::Eccentric { alpha, delta } => {
            finite("alpha", alpha)?;
            finite("delta", delta)?;
            if alpha <= 1.0 {
                return Err(GeometryError::Degenerate { alpha });
            }
            if delta < 0.0 {
                return Err(GeometryError::NegativeEccentricity { delta });
            }
            if delta >= alpha - 1.0 {
                return Err(GeometryError::Overlap {
                    delta,
                    limit: alpha - 1.0,
                });
            }
        }
        Geometry::CylinderPlane { h_over_a } => {
            finite("h_over_a", h_over_a)?;
            if h_over_a <= 1.0 {
                return Err(GeometryError::IntersectingPlane { h_over_a });
            }
        }
    }
    Ok(())
}

fn positive_length(field: &'static str, value: f64) -> Result<(), GeometryError> {
    finite(field, value)?;
    if value > 0.0 {
        Ok(())
    } else {
        Err(GeometryError::NonPositiveLength { field, value })
    }
}

/// Interaction energy in Joules for inner radius `a` and length `l` (both
/// in meters): `E = ê ħc L / (4π a²)`.
pub fn to_physical(e_hat: f64, a: f64, l: f64) -> Result<f64, GeometryError> {
    positive_length("a", a)?;
    positive_length("L", l)?;
    Ok(e_hat * HBAR_C * l / (4.0 * PI * a * a))
}

/// Inverse of [`to_physical`].
pub fn from_physical(energy: f64, a: f64, l: f64) -> Result<f64, GeometryError> {
    positive_length("a", a)?;
    positive_length("L", l)?;
    Ok(energy * 4.0 * PI * a * a / (HBAR_C * l))
}

/// Truncation of the infinite index ranges.
///
/// Matrix indices run over `n, p ∈ [−n_max, n_max]` and inner sums over
/// `|m| ≤ m_max`. With `adapt` set these are starting values that the
/// evaluators grow until successive refinements agree to `rel_tol`;
/// otherwise they are used as given.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationSpec {
    pub n_max: usize,
    pub m_max: usize,
    pub adapt: bool,
    pub rel_tol: f64,
}

impl Default for TruncationSpec {
    fn default() -> Self {
        Self {
            n_max: 16,
            m_max: 32,
            adapt: true,
            rel_tol: 1e-4,
        }
    }
}

impl TruncationSpec {
    pub fn fixed(n_max: usize, m_max: usize) -> Self {
        Self {
            n_max,
            m_max: m_max.max(n_max),
            adapt: false,
            rel_tol: 1e-4,
        }
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn check(&self) -> Result<(), String> {
        if self.n_max == 0 {
            return Err("n_max must be positive".into());
        }
        if self.m_max < self.n_max {
            return Err(format!(
                "m_max = {} must be >= n_max = {}",
                self.m_max, self.n_max
            ));
        }
        if !(self.rel_tol > 0.0) || !self.rel_tol.is_finite() {
            return Err(format!("rel_tol = {} must be > 0", self.rel_tol));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, Hash)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureRule {
    /// Gauss–Legendre on a fixed algebraic map of `[0, ∞)` onto `[0, 1)`.
    #[default]
    TransformedGauss,
    /// Globally adaptive 7/15-point Gauss–Kronrod panels on the same map.
    AdaptivePanel,
}

/// Quadrature over the imaginary-frequency axis.
///
/// `scale` multiplies the geometry's natural decay length `1/(2·gap)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub node_count: usize,
    pub scale: f64,
    pub rule: QuadratureRule,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            node_count: 128,
            scale: 1.0,
            rule: QuadratureRule::TransformedGauss,
        }
    }
}

impl QuadratureSpec {
    pub const MIN_NODES: usize = 8;

    pub fn with_nodes(node_count: usize) -> Self {
        Self {
            node_count,
            ..Self::default()
        }
    }

    pub fn check(&self) -> Result<(), String> {
        if self.node_count < Self::MIN_NODES {
            return Err(format!(
                "node_count = {} must be >= {}",
                self.node_count,
                Self::MIN_NODES
            ));
        }
        if !(self.scale > 0.0) || !self.scale.is_finite() {
            return Err(format!("scale = {} must be > 0", self.scale));
        }
        Ok(())
    }
}

/// Convergence bookkeeping attached to every energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub n_max_final: usize,
    pub m_max_final: usize,
    pub node_count_final: usize,
    pub rel_change_last: f64,
    pub accelerated: bool,
}

/// Dimensionless interaction energy with its polarization split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyResult {
    pub e_hat: f64,
    pub e_tm: f64,
    pub e_te: f64,
    pub truncation_used: TruncationSpec,
    pub quadrature_used: QuadratureSpec,
    pub converged: bool,
    pub est_rel_error: f64,
    pub report: ConvergenceReport,
}
