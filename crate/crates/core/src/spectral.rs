//! Spectral matrices whose `ln det(I − A)`, integrated over the imaginary
//! frequency `β`, gives the interaction energy.
//!
//! For the eccentric configuration
//!
//! ```text
//! A_np = D_n · Σ_m W_m(αβ) I_{m−n}(βδ) I_{m−p}(βδ),
//! D_n  = I_n(β)/K_n(β),        W_m = K_m(αβ)/I_m(αβ)      (TM)
//! D_n  = I'_n(β)/K'_n(β),      W_m = K'_m(αβ)/I'_m(αβ)    (TE)
//! ```
//!
//! and for the cylinder–plane limit `A_np = ±D_n K_{n+p}(2βH/a)`. The
//! prefactor `D_n` makes `A` non-symmetric; the builders store the balanced
//! similarity transform `D^{1/2} S D^{1/2}`, which is symmetric, has the
//! same determinant, and keeps every entry below one in magnitude. For TE
//! both `D_n` and `W_m` are negative, so all balanced entries are positive
//! for either polarization. [`SpectralMatrix::raw_entry`] recovers `A_np`.
//!
//! Entries are assembled from log-magnitudes: the balanced matrix is
//! `Bᵀ B` with `B_mn = exp(½ ln|W_m| + ½ ln|D_n| + ln I_{m−n}(βδ))`, and
//! `B_mn² ≤ A_nn < 1` keeps every factor in range.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bessel::BesselTable;
use crate::geometry::TruncationSpec;
use crate::linalg::{cholesky_prefix_log_dets, DenseMatrix, LinalgError};

/// Hard cap on the inner-sum cutoff when adapting.
pub const M_MAX_CAP: usize = 8192;

/// Exponents below this are treated as exact zeros.
const LOG_UNDERFLOW: f64 = -708.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("non-contractive spectral matrix at beta = {beta}: {source}")]
    NonContractive { beta: f64, source: LinalgError },
    #[error(
        "truncation-insufficient: boundary terms at m_max = {m_max} contribute {ratio:e} of the entry (rel_tol {rel_tol:e})"
    )]
    TruncationInsufficient {
        m_max: usize,
        ratio: f64,
        rel_tol: f64,
    },
    #[error("invalid argument: {0}")]
    Domain(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarization {
    /// Dirichlet boundary conditions.
    TM,
    /// Neumann boundary conditions.
    TE,
}

impl Polarization {
    pub const BOTH: [Polarization; 2] = [Polarization::TM, Polarization::TE];
}

/// `ln |D_n|` for the inner cylinder at argument `β` (table at `β`).
fn log_d(pol: Polarization, t: &BesselTable, n: usize) -> f64 {
    match pol {
        Polarization::TM => t.log_i[n] - t.log_k[n],
        Polarization::TE => t.log_ip[n] - t.log_kp[n],
    }
}

/// `ln |W_m|` for the outer cylinder at argument `αβ`.
fn log_w(pol: Polarization, t: &BesselTable, m: usize) -> f64 {
    match pol {
        Polarization::TM => t.log_k[m] - t.log_i[m],
        Polarization::TE => t.log_kp[m] - t.log_ip[m],
    }
}

/// One polarization's truncated matrix at one frequency node, indices
/// `n, p ∈ [−n_max, n_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMatrix {
    pub beta: f64,
    pub pol: Polarization,
    pub n_max: usize,
    /// Inner-sum cutoff actually used (0 when there is no inner sum).
    pub m_max_used: usize,
    balanced: DenseMatrix,
    /// `ln |D_n|` for `n = −n_max..=n_max`.
    log_prefactor: Vec<f64>,
}

impl SpectralMatrix {
    pub fn dim(&self) -> usize {
        2 * self.n_max + 1
    }

    fn index(&self, n: i32) -> usize {
        assert!(
            n.unsigned_abs() as usize <= self.n_max,
            "index {n} outside ±{}",
            self.n_max
        );
        (n + self.n_max as i32) as usize
    }

    /// Balanced (symmetric) entry.
    pub fn entry(&self, n: i32, p: i32) -> f64 {
        self.balanced.get(self.index(n), self.index(p))
    }

    /// Entry `A_np` of the matrix as written with the prefactor on the row
    /// index, including its sign convention. Equal to [`Self::entry`] on the
    /// diagonal.
    pub fn raw_entry(&self, n: i32, p: i32) -> f64 {
        let (i, j) = (self.index(n), self.index(p));
        self.balanced.get(i, j) * (0.5 * (self.log_prefactor[i] - self.log_prefactor[j])).exp()
    }

    pub fn balanced(&self) -> &DenseMatrix {
        &self.balanced
    }

    pub fn is_diagonal(&self) -> bool {
        let d = self.dim();
        (0..d).all(|i| (0..d).all(|j| i == j || self.balanced.get(i, j) == 0.0))
    }

    /// `ln det(I − A)` for every truncation `n' = 0..=n_max`, from a single
    /// factorization ordered by `|n|`.
    pub fn nested_log_dets(&self) -> Result<Vec<f64>, SpectralError> {
        let n = self.n_max as i32;
        let mut order = Vec::with_capacity(self.dim());
        order.push(self.index(0));
        for k in 1..=n {
            order.push(self.index(k));
            order.push(self.index(-k));
        }
        let permuted = self.balanced.permuted(&order);
        let prefix = cholesky_prefix_log_dets(&permuted).map_err(|source| {
            SpectralError::NonContractive {
                beta: self.beta,
                source,
            }
        })?;
        Ok((0..=self.n_max).map(|k| prefix[2 * k]).collect())
    }

    /// Plain-text dump: a header line, then one row per `n`.
    pub fn dump(&self) -> String {
        let mut s = format!(
            "# beta={:.9e} pol={:?} n_max={} m_max={}\n",
            self.beta, self.pol, self.n_max, self.m_max_used
        );
        let n = self.n_max as i32;
        for i in -n..=n {
            let row: Vec<String> = (-n..=n)
                .map(|j| format!("{:.9e}", self.raw_entry(i, j)))
                .collect();
            let _ = writeln!(s, "{}", row.join(" "));
        }
        s
    }
}

/// `ln det(I − A)`.
///
/// Fails with "non-contractive" if `A` has an eigenvalue `≥ 1`, which
/// signals a touching geometry or a truncation failure.
pub fn log_det_one_minus(mat: &SpectralMatrix) -> Result<f64, SpectralError> {
    if mat.is_diagonal() {
        let mut acc = 0.0;
        for i in 0..mat.dim() {
            let a = mat.balanced.get(i, i);
            if !(a < 1.0) {
                return Err(SpectralError::NonContractive {
                    beta: mat.beta,
                    source: LinalgError::NonContractive {
                        pivot: i,
                        det_sign: 0.0,
                        log_abs: f64::NAN,
                    },
                });
            }
            acc += (-a).ln_1p();
        }
        return Ok(acc);
    }
    crate::linalg::log_det_one_minus(&mat.balanced).map_err(|source| {
        SpectralError::NonContractive {
            beta: mat.beta,
            source,
        }
    })
}

fn check_beta(beta: f64) -> Result<(), SpectralError> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(SpectralError::Domain(format!("beta = {beta} must be > 0")))
    }
}

/// Diagonal ratios `r_n(β) = D_n W_n`, `n = 0..=n_max`, of the concentric
/// configuration, kept as logarithms.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentricRatios {
    pub beta: f64,
    pub pol: Polarization,
    pub log_ratio: Vec<f64>,
}

impl ConcentricRatios {
    pub fn ratio(&self, n: i32) -> f64 {
        self.log_ratio[n.unsigned_abs() as usize].exp()
    }

    /// `ln(1 − r_n)`, accurate when `r_n` is close to one.
    pub fn log_one_minus(&self, n: i32) -> f64 {
        log_one_minus_exp(self.log_ratio[n.unsigned_abs() as usize])
    }
}

/// `ln(1 − e^x)` for `x < 0`.
#[inline]
pub fn log_one_minus_exp(x: f64) -> f64 {
    if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// Both polarizations' concentric ratios from shared Bessel tables.
pub(crate) fn concentric_log_ratios(beta: f64, alpha: f64, n_max: usize) -> (Vec<f64>, Vec<f64>) {
    let tb = BesselTable::new(beta, n_max);
    let ta = BesselTable::new(alpha * beta, n_max);
    let mut tm = Vec::with_capacity(n_max + 1);
    let mut te = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        tm.push(log_d(Polarization::TM, &tb, n) + log_w(Polarization::TM, &ta, n));
        te.push(log_d(Polarization::TE, &tb, n) + log_w(Polarization::TE, &ta, n));
    }
    (tm, te)
}

pub fn build_concentric(
    beta: f64,
    alpha: f64,
    pol: Polarization,
    n_max: usize,
) -> Result<ConcentricRatios, SpectralError> {
    check_beta(beta)?;
    if !(alpha > 1.0) || !alpha.is_finite() {
        return Err(SpectralError::Domain(format!(
            "alpha = {alpha} must be > 1"
        )));
    }
    let (tm, te) = concentric_log_ratios(beta, alpha, n_max);
    Ok(ConcentricRatios {
        beta,
        pol,
        log_ratio: match pol {
            Polarization::TM => tm,
            Polarization::TE => te,
        },
    })
}

/// `I_ν(x)` falls off like `exp(−ν²/2x)` once `ν` passes `√x`, so the
/// starting cutoff grows with `√(βδ)` rather than `βδ`.
fn floor_m_max(n_max: usize, beta: f64, delta: f64, t: &TruncationSpec) -> usize {
    let x = beta * delta;
    let width = (4.0 * x).min(12.0 * x.sqrt() + 16.0);
    t.m_max.max(n_max + width.ceil() as usize)
}

/// Builds the eccentric matrix for each requested polarization from one set
/// of Bessel tables.
pub(crate) fn build_eccentric_multi(
    beta: f64,
    alpha: f64,
    delta: f64,
    pols: &[Polarization],
    n_max: usize,
    t: &TruncationSpec,
) -> Result<Vec<SpectralMatrix>, SpectralError> {
    check_beta(beta)?;
    if !(alpha > 1.0) || !(delta >= 0.0) || !(delta < alpha - 1.0) {
        return Err(SpectralError::Domain(format!(
            "eccentric geometry needs alpha > 1 and 0 <= delta < alpha - 1 (alpha = {alpha}, delta = {delta})"
        )));
    }
    let mut m_max = floor_m_max(n_max, beta, delta, t);
    let tb = BesselTable::new(beta, n_max);
    loop {
        let ta = BesselTable::new(alpha * beta, m_max);
        let tv = BesselTable::i_only(beta * delta, m_max + n_max);
        let mut out = Vec::with_capacity(pols.len());
        let mut worst: f64 = 0.0;
        for &pol in pols {
            let (mat, ratio) = eccentric_matrix(beta, pol, n_max, m_max, &tb, &ta, &tv);
            worst = worst.max(ratio);
            out.push(mat);
        }
        if worst <= t.rel_tol {
            return Ok(out);
        }
        if !t.adapt || m_max >= M_MAX_CAP {
            return Err(SpectralError::TruncationInsufficient {
                m_max,
                ratio: worst,
                rel_tol: t.rel_tol,
            });
        }
        m_max = (m_max + (m_max / 2).max(16)).min(M_MAX_CAP);
    }
}

/// Returns the matrix and the largest relative contribution of the two
/// boundary rows `m = ±m_max` to a diagonal entry.
fn eccentric_matrix(
    beta: f64,
    pol: Polarization,
    n_max: usize,
    m_max: usize,
    tb: &BesselTable,
    ta: &BesselTable,
    tv: &BesselTable,
) -> (SpectralMatrix, f64) {
    let dim = 2 * n_max + 1;
    let ni = n_max as i64;
    let mi = m_max as i64;
    let half_d: Vec<f64> = (-ni..=ni)
        .map(|n| 0.5 * log_d(pol, tb, n.unsigned_abs() as usize))
        .collect();
    let mut acc = vec![0.0; dim * dim];
    let mut boundary = vec![0.0; dim];
    let mut row: Vec<(usize, f64)> = Vec::with_capacity(dim);
    for m in -mi..=mi {
        let hw = 0.5 * log_w(pol, ta, m.unsigned_abs() as usize);
        row.clear();
        for (i, n) in (-ni..=ni).enumerate() {
            let e = hw + half_d[i] + tv.log_i[(m - n).unsigned_abs() as usize];
            if e > LOG_UNDERFLOW {
                row.push((i, e.exp()));
            }
        }
        for (a, &(i, bi)) in row.iter().enumerate() {
            for &(j, bj) in &row[a..] {
                acc[i * dim + j] += bi * bj;
            }
        }
        if m.unsigned_abs() as usize == m_max {
            for &(i, bi) in &row {
                boundary[i] += bi * bi;
            }
        }
    }
    for i in 0..dim {
        for j in 0..i {
            acc[i * dim + j] = acc[j * dim + i];
        }
    }
    // at zero eccentricity only m = n contributes and the sum is exact
    let ratio = if tv.x == 0.0 {
        0.0
    } else {
        (0..dim).fold(0.0f64, |w, i| {
            let d = acc[i * dim + i];
            if boundary[i] == 0.0 {
                w
            } else {
                w.max(boundary[i] / d)
            }
        })
    };
    let mat = SpectralMatrix {
        beta,
        pol,
        n_max,
        m_max_used: m_max,
        balanced: DenseMatrix::from_row_major(dim, acc).expect("square by construction"),
        log_prefactor: half_d.iter().map(|h| 2.0 * h).collect(),
    };
    (mat, ratio)
}

/// Eccentric matrix at node `β` with `n_max = t.n_max`.
pub fn build_eccentric(
    beta: f64,
    alpha: f64,
    delta: f64,
    pol: Polarization,
    t: &TruncationSpec,
) -> Result<SpectralMatrix, SpectralError> {
    Ok(build_eccentric_multi(beta, alpha, delta, &[pol], t.n_max, t)?.remove(0))
}

pub(crate) fn build_cylinder_plane_multi(
    beta: f64,
    h_over_a: f64,
    pols: &[Polarization],
    n_max: usize,
) -> Result<Vec<SpectralMatrix>, SpectralError> {
    check_beta(beta)?;
    if !(h_over_a > 1.0) || !h_over_a.is_finite() {
        return Err(SpectralError::Domain(format!(
            "h_over_a = {h_over_a} must be > 1"
        )));
    }
    let tb = BesselTable::new(beta, n_max);
    let tk = BesselTable::new(2.0 * beta * h_over_a, 2 * n_max);
    let dim = 2 * n_max + 1;
    let ni = n_max as i64;
    Ok(pols
        .iter()
        .map(|&pol| {
            let half_d: Vec<f64> = (-ni..=ni)
                .map(|n| 0.5 * log_d(pol, &tb, n.unsigned_abs() as usize))
                .collect();
            let mut acc = vec![0.0; dim * dim];
            for (i, n) in (-ni..=ni).enumerate() {
                for (j, p) in (-ni..=ni).enumerate() {
                    let e = half_d[i] + half_d[j] + tk.log_k[(n + p).unsigned_abs() as usize];
                    if e > LOG_UNDERFLOW {
                        acc[i * dim + j] = e.exp();
                    }
                }
            }
            SpectralMatrix {
                beta,
                pol,
                n_max,
                m_max_used: 0,
                balanced: DenseMatrix::from_row_major(dim, acc).expect("square by construction"),
                log_prefactor: half_d.iter().map(|h| 2.0 * h).collect(),
            }
        })
        .collect())
}

/// Cylinder–plane matrix `A_np = ±D_n K_{n+p}(2βH/a)` at node `β`.
pub fn build_cylinder_plane(
    beta: f64,
    h_over_a: f64,
    pol: Polarization,
    t: &TruncationSpec,
) -> Result<SpectralMatrix, SpectralError> {
    Ok(build_cylinder_plane_multi(beta, h_over_a, &[pol], t.n_max)?.remove(0))
}

/// Both sides of the addition-theorem asymptotics
///
/// ```text
/// Σ_m K_m(x+h)/I_m(x+h)   I_{n−m}(x) I_{p−m}(x) ≈  K_{n+p}(2h)    (TM)
/// Σ_m K'_m(x+h)/I'_m(x+h) I_{n−m}(x) I_{p−m}(x) ≈ −K_{n+p}(2h)    (TE)
/// ```
///
/// valid for `x ≫ h`. The sum runs over `|m| ≤ m_max` (raised to at least
/// `|n| + |p| + 4x`) and grows until its boundary terms fall below
/// `rel_tol`.
pub fn addition_theorem_check(
    x: f64,
    h: f64,
    n: i32,
    p: i32,
    pol: Polarization,
    m_max: usize,
    rel_tol: f64,
) -> Result<(f64, f64), SpectralError> {
    if !(x > 0.0) || !(h > 0.0) {
        return Err(SpectralError::Domain(format!(
            "x = {x} and h = {h} must be > 0"
        )));
    }
    let reach = n.unsigned_abs().max(p.unsigned_abs()) as usize;
    let mut m_max = m_max.max(2 * reach + (4.0 * x).ceil() as usize);
    let (peak, sum) = loop {
        let tw = BesselTable::new(x + h, m_max);
        let tv = BesselTable::i_only(x, m_max + reach);
        let mi = m_max as i64;
        let terms: Vec<f64> = (-mi..=mi)
            .map(|m| {
                log_w(pol, &tw, m.unsigned_abs() as usize)
                    + tv.log_i[(n as i64 - m).unsigned_abs() as usize]
                    + tv.log_i[(p as i64 - m).unsigned_abs() as usize]
            })
            .collect();
        let peak = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = terms.iter().map(|l| (l - peak).exp()).sum();
        let edge = ((terms[0] - peak).exp() + (terms[terms.len() - 1] - peak).exp()) / sum;
        if edge <= rel_tol {
            break (peak, sum);
        }
        if m_max >= M_MAX_CAP {
            return Err(SpectralError::TruncationInsufficient {
                m_max,
                ratio: edge,
                rel_tol,
            });
        }
        m_max = (m_max + m_max / 2).min(M_MAX_CAP);
    };
    let magnitude = peak.exp() * sum;
    let tk = BesselTable::new(2.0 * h, (n + p).unsigned_abs() as usize);
    let k = tk.log_k[(n + p).unsigned_abs() as usize].exp();
    Ok(match pol {
        Polarization::TM => (magnitude, k),
        Polarization::TE => (-magnitude, -k),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bessel::{bessel_i, bessel_k, BesselOrder};
    use approx::assert_relative_eq;

    fn ord(n: i32) -> BesselOrder {
        BesselOrder::new(n).unwrap()
    }

    #[test]
    fn concentric_ratio_value() {
        let r = build_concentric(1.0, 2.0, Polarization::TM, 4).unwrap();
        let by_hand = bessel_i(ord(0), 1.0).unwrap() * bessel_k(ord(0), 2.0).unwrap()
            / (bessel_i(ord(0), 2.0).unwrap() * bessel_k(ord(0), 1.0).unwrap());
        assert_relative_eq!(r.ratio(0), by_hand, max_relative = 1e-13);
        assert_relative_eq!(r.ratio(0), 0.15024, max_relative = 1e-4);
    }

    #[test]
    fn concentric_ratios_in_unit_interval_and_decreasing() {
        for pol in Polarization::BOTH {
            for &(beta, alpha) in &[(0.1, 1.05), (1.0, 2.0), (25.0, 1.3), (3.0, 10.0)] {
                let r = build_concentric(beta, alpha, pol, 40).unwrap();
                let mut prev = 1.0;
                for n in 0..=40 {
                    let v = r.ratio(n);
                    assert!(v > 0.0 && v < 1.0, "{pol:?} r_{n}({beta},{alpha}) = {v}");
                    // TE n = 0 coincides with TM n = 1 and may sit below TE n = 1
                    if n >= 2 || pol == Polarization::TM {
                        assert!(v <= prev);
                    }
                    prev = v;
                }
                let higher = build_concentric(beta * 1.5, alpha, pol, 40).unwrap();
                for n in 0..=40 {
                    assert!(higher.ratio(n) <= r.ratio(n));
                }
            }
        }
    }

    #[test]
    fn eccentric_at_zero_delta_is_diagonal() {
        let t = TruncationSpec::fixed(6, 12);
        for pol in Polarization::BOTH {
            let m = build_eccentric(1.0, 2.0, 0.0, pol, &t).unwrap();
            assert!(m.is_diagonal());
            let r = build_concentric(1.0, 2.0, pol, 6).unwrap();
            for n in -6..=6 {
                assert_relative_eq!(m.entry(n, n), r.ratio(n), max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn eccentric_entries_symmetric() {
        let t = TruncationSpec::default();
        let m = build_eccentric(2.3, 1.8, 0.4, Polarization::TE, &t).unwrap();
        for n in -5..=5 {
            for p in -5..=5 {
                assert_relative_eq!(m.entry(n, p), m.entry(p, n), max_relative = 1e-14);
                assert!(m.entry(n, p) > 0.0);
            }
        }
        // the literal matrix carries D_n on the row only
        let ratio = m.raw_entry(1, 3) / m.raw_entry(3, 1);
        let d1 = m.raw_entry(1, 1);
        assert!(ratio.is_finite() && d1 > 0.0);
    }

    #[test]
    fn non_adaptive_truncation_is_reported() {
        let t = TruncationSpec::fixed(4, 4).with_rel_tol(1e-12);
        let e = build_eccentric(2.0, 2.0, 0.9, Polarization::TM, &t);
        assert!(
            matches!(e, Err(SpectralError::TruncationInsufficient { .. })),
            "{e:?}"
        );
        let grown = build_eccentric(
            2.0,
            2.0,
            0.9,
            Polarization::TM,
            &TruncationSpec { adapt: true, ..t },
        )
        .unwrap();
        assert!(grown.m_max_used > 4 + 8);
    }

    #[test]
    fn addition_theorem_converges_to_plane_kernel() {
        let (lhs, rhs) =
            addition_theorem_check(80.0, 1.0, 0, 0, Polarization::TM, 0, 1e-13).unwrap();
        assert!(((lhs - rhs) / rhs).abs() < 0.01);
        let (lhs, rhs) =
            addition_theorem_check(80.0, 1.0, 1, 1, Polarization::TE, 0, 1e-13).unwrap();
        assert!(lhs < 0.0 && rhs < 0.0);
        assert!(((lhs - rhs) / rhs).abs() < 0.03);
    }

    #[test]
    fn cylinder_plane_value_and_signs() {
        let t = TruncationSpec::fixed(3, 3);
        let m = build_cylinder_plane(1.0, 2.0, Polarization::TM, &t).unwrap();
        let by_hand = bessel_i(ord(0), 1.0).unwrap() / bessel_k(ord(0), 1.0).unwrap()
            * bessel_k(ord(0), 4.0).unwrap();
        assert_relative_eq!(m.raw_entry(0, 0), by_hand, max_relative = 1e-13);
        assert_relative_eq!(m.raw_entry(0, 0), 0.033558, max_relative = 1e-4);
        let te = build_cylinder_plane(1.0, 2.0, Polarization::TE, &t).unwrap();
        for n in -3..=3 {
            for p in -3..=3 {
                assert!(te.raw_entry(n, p) > 0.0);
                assert_relative_eq!(te.entry(n, p), te.entry(p, n), max_relative = 1e-14);
            }
        }
    }

    #[test]
    fn log_det_diagonal_and_nested() {
        let t = TruncationSpec::fixed(5, 5);
        let m = build_eccentric(
            0.8,
            1.5,
            0.2,
            Polarization::TM,
            &TruncationSpec { adapt: true, ..t },
        )
        .unwrap();
        let full = log_det_one_minus(&m).unwrap();
        let nested = m.nested_log_dets().unwrap();
        assert_relative_eq!(full, nested[5], max_relative = 1e-12);
        assert!(nested.windows(2).all(|w| w[1] <= w[0]));
        assert!(full < 0.0);
    }

    #[test]
    fn dump_has_one_row_per_index() {
        let t = TruncationSpec::fixed(2, 2);
        let m = build_cylinder_plane(1.0, 2.0, Polarization::TM, &t).unwrap();
        let text = m.dump();
        assert_eq!(text.lines().count(), 1 + 5);
        assert!(text.starts_with("# beta="));
    }

    #[test]
    fn log_one_minus_exp_accuracy() {
        assert_relative_eq!(
            log_one_minus_exp(-1e-10),
            (1e-10f64).ln(),
            max_relative = 1e-9
        );
        assert_relative_eq!(
            log_one_minus_exp(-30.0),
            -(-30.0f64).exp(),
            max_relative = 1e-12
        );
    }
}
