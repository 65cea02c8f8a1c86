//! Frequency integration of the spectral log-determinants.
//!
//! `ê = ∫₀^∞ dβ β [ln det(I − A^TM(β)) + ln det(I − A^TE(β))]`.
//!
//! Every frequency node grows its own angular truncation by doubling
//! `n_max` until the change is negligible for that node's share of the
//! integral. The node count is doubled until two successive rules agree.
//! The near-contact concentric evaluator subtracts
//! `ln(1 − e^{−2s√(n²+β²)})` from every `n ≥ 1` term and adds the integral
//! of the subtracted piece back in closed form ([`tilde_energy`]).

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{
    validate, ConvergenceReport, EnergyResult, Geometry, GeometryError, QuadratureRule,
    QuadratureSpec, TruncationSpec,
};
use crate::quadrature::{gauss_legendre, kronrod_panel, SemiInfiniteMap};
use crate::spectral::{
    build_cylinder_plane_multi, build_eccentric_multi, concentric_log_ratios, log_one_minus_exp,
    Polarization, SpectralError,
};

/// Largest angular truncation any node may use.
pub const N_MAX_CAP: usize = 512;
/// Largest frequency rule.
pub const NODE_CAP: usize = 4096;

/// Fraction of `rel_tol` granted to truncation error through each of its
/// two criteria.
const TRUNC_SHARE: f64 = 0.1;
/// Tighter tolerance applied to the inner `m` sums than to the energy.
const INNER_TOL_FACTOR: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnergyError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("non-contractive: {0}")]
    NonContractive(String),
    #[error("truncation-insufficient: {0}")]
    TruncationInsufficient(String),
    #[error("no-convergence: {reason}")]
    NoConvergence {
        reason: String,
        partial: Box<EnergyResult>,
    },
}

impl From<SpectralError> for EnergyError {
    fn from(e: SpectralError) -> Self {
        match e {
            SpectralError::NonContractive { .. } => EnergyError::NonContractive(e.to_string()),
            SpectralError::TruncationInsufficient { .. } => {
                EnergyError::TruncationInsufficient(e.to_string())
            }
            SpectralError::Domain(s) => EnergyError::InvalidArgument(s),
        }
    }
}

impl EnergyError {
    /// The partially converged result carried by "no-convergence".
    pub fn partial(&self) -> Option<&EnergyResult> {
        match self {
            EnergyError::NoConvergence { partial, .. } => Some(partial),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kernel {
    Concentric { alpha: f64 },
    Accelerated { alpha: f64 },
    Eccentric { alpha: f64, delta: f64 },
    CylinderPlane { h_over_a: f64 },
}

/// Every matrix entry is below `e^{−2β·gap}` times slowly varying factors;
/// past this exponent the log-determinants are zero in double precision.
const UNDERFLOW_EXPONENT: f64 = 800.0;

/// Cumulative `(TM, TE)` log-determinants for truncations `0..=n`, and the
/// inner-sum cutoff used.
type Nested = (Vec<f64>, Vec<f64>, usize);

fn fold_terms(terms: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    terms
        .enumerate()
        .map(|(n, t)| {
            acc += if n == 0 { t } else { 2.0 * t };
            acc
        })
        .collect()
}

/// `ln(1 − e^{−2s√(n²+β²)})`.
fn log_one_minus_q(s: f64, n: f64, beta: f64) -> f64 {
    log_one_minus_exp(-2.0 * s * (n * n + beta * beta).sqrt())
}

impl Kernel {
    fn nested(&self, beta: f64, n: usize, t: &TruncationSpec) -> Result<Nested, EnergyError> {
        match *self {
            Kernel::Concentric { alpha } => {
                let (tm, te) = concentric_log_ratios(beta, alpha, n);
                Ok((
                    fold_terms(tm.iter().map(|&l| log_one_minus_exp(l))),
                    fold_terms(te.iter().map(|&l| log_one_minus_exp(l))),
                    0,
                ))
            }
            Kernel::Accelerated { alpha } => {
                let s = alpha - 1.0;
                let (tm, te) = concentric_log_ratios(beta, alpha, n);
                let sub = |k: usize| {
                    if k == 0 {
                        0.0
                    } else {
                        log_one_minus_q(s, k as f64, beta)
                    }
                };
                Ok((
                    fold_terms(
                        tm.iter()
                            .enumerate()
                            .map(|(k, &l)| log_one_minus_exp(l) - sub(k)),
                    ),
                    fold_terms(
                        te.iter()
                            .enumerate()
                            .map(|(k, &l)| log_one_minus_exp(l) - sub(k)),
                    ),
                    0,
                ))
            }
            Kernel::Eccentric { alpha, delta }
                if 2.0 * beta * (alpha - 1.0 - delta) > UNDERFLOW_EXPONENT =>
            {
                Ok((vec![0.0; n + 1], vec![0.0; n + 1], 0))
            }
            Kernel::CylinderPlane { h_over_a }
                if 2.0 * beta * (h_over_a - 1.0) > UNDERFLOW_EXPONENT =>
            {
                Ok((vec![0.0; n + 1], vec![0.0; n + 1], 0))
            }
            Kernel::Eccentric { alpha, delta } => {
                let inner = TruncationSpec {
                    rel_tol: t.rel_tol * INNER_TOL_FACTOR,
                    ..*t
                };
                let mats =
                    build_eccentric_multi(beta, alpha, delta, &Polarization::BOTH, n, &inner)?;
                Ok((
                    mats[0].nested_log_dets()?,
                    mats[1].nested_log_dets()?,
                    mats[0].m_max_used,
                ))
            }
            Kernel::CylinderPlane { h_over_a } => {
                let mats = build_cylinder_plane_multi(beta, h_over_a, &Polarization::BOTH, n)?;
                Ok((mats[0].nested_log_dets()?, mats[1].nested_log_dets()?, 0))
            }
        }
    }

    /// Magnitude of the full (unsubtracted) integrand at `β`, used to scale
    /// relative tolerances of the accelerated kernel.
    fn scale_hint(&self, beta: f64, value: f64) -> f64 {
        match *self {
            Kernel::Accelerated { alpha } => {
                let s = alpha - 1.0;
                let mut sum = 0.0;
                let mut n = 1.0;
                loop {
                    let v = log_one_minus_q(s, n, beta);
                    sum += v;
                    if v.abs() <= 1e-17 * sum.abs() || n > 1e7 {
                        break;
                    }
                    n += 1.0;
                }
                (value + 4.0 * sum).abs()
            }
            _ => value.abs(),
        }
    }
}

/// One frequency node of a rule on `u ∈ (0, 1)`: `β = β(u)`,
/// `weight = w_u · dβ/du`.
#[derive(Debug, Clone, Copy)]
struct Node {
    beta: f64,
    weight: f64,
    jac: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct NodeEval {
    tm: f64,
    te: f64,
    /// Absolute change of `tm + te` in the last truncation doubling.
    delta: f64,
    n_used: usize,
    m_used: usize,
    capped: bool,
}

#[derive(Debug, Clone, Copy)]
struct Budget {
    rel_tol: f64,
    e_ref: f64,
}

impl Budget {
    /// Absolute tolerance on a node's log-determinant sum: either a small
    /// relative change, or a small share of the integral in `u` space.
    fn tolerance(&self, node: &Node, scale: f64) -> f64 {
        let rel = TRUNC_SHARE * self.rel_tol * scale;
        let share = TRUNC_SHARE * self.rel_tol * self.e_ref / (node.jac * node.beta);
        rel.max(share)
    }
}

fn eval_node(
    kernel: &Kernel,
    node: &Node,
    t: &TruncationSpec,
    budget: Option<&Budget>,
) -> Result<NodeEval, EnergyError> {
    let beta = node.beta;
    match budget {
        None => {
            let n = t.n_max;
            let (tm, te, m_used) = kernel.nested(beta, n, t)?;
            let h = n / 2;
            Ok(NodeEval {
                tm: tm[n],
                te: te[n],
                delta: (tm[n] + te[n] - tm[h] - te[h]).abs(),
                n_used: n,
                m_used,
                capped: false,
            })
        }
        Some(b) => {
            let mut n = t.n_max.min(N_MAX_CAP / 2);
            loop {
                let k = (2 * n).min(N_MAX_CAP);
                let (tm, te, m_used) = kernel.nested(beta, k, t)?;
                let h = k / 2;
                let total = tm[k] + te[k];
                let delta = (total - tm[h] - te[h]).abs();
                let tol = b.tolerance(node, kernel.scale_hint(beta, total));
                let ok = delta <= tol;
                if ok || k == N_MAX_CAP {
                    return Ok(NodeEval {
                        tm: tm[k],
                        te: te[k],
                        delta,
                        n_used: k,
                        m_used,
                        capped: !ok,
                    });
                }
                n = k;
            }
        }
    }
}

fn eval_nodes(
    kernel: &Kernel,
    nodes: &[Node],
    t: &TruncationSpec,
    budget: Option<&Budget>,
) -> Result<Vec<NodeEval>, EnergyError> {
    nodes
        .par_iter()
        .map(|nd| eval_node(kernel, nd, t, budget))
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

fn gauss_nodes(map: SemiInfiniteMap, n: usize) -> Vec<Node> {
    let rule = gauss_legendre(n);
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&x, &w)| {
            let u = 0.5 * (x + 1.0);
            let jac = map.jacobian(u);
            Node {
                beta: map.beta(u),
                weight: 0.5 * w * jac,
                jac,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default)]
struct Pass {
    e_tm: f64,
    e_te: f64,
    trunc_abs: f64,
    n_max: usize,
    m_max: usize,
    capped: usize,
    nodes: usize,
}

impl Pass {
    fn total(&self) -> f64 {
        self.e_tm + self.e_te
    }

    fn absorb(&mut self, nd: &Node, ev: &NodeEval, w: f64) {
        let wb = w * nd.beta;
        self.e_tm += wb * ev.tm;
        self.e_te += wb * ev.te;
        self.trunc_abs += nd.weight * nd.beta * ev.delta;
        self.n_max = self.n_max.max(ev.n_used);
        self.m_max = self.m_max.max(ev.m_used);
        self.capped += ev.capped as usize;
    }
}

fn gauss_pass(
    kernel: &Kernel,
    map: SemiInfiniteMap,
    n: usize,
    t: &TruncationSpec,
    budget: Option<&Budget>,
) -> Result<Pass, EnergyError> {
    let nodes = gauss_nodes(map, n);
    let evals = eval_nodes(kernel, &nodes, t, budget)?;
    let mut p = Pass {
        nodes: n,
        ..Pass::default()
    };
    for (nd, ev) in nodes.iter().zip(&evals) {
        p.absorb(nd, ev, nd.weight);
    }
    Ok(p)
}

/// Rough energy scale from a small rule at the starting truncation.
fn reference_energy(
    kernel: &Kernel,
    map: SemiInfiniteMap,
    t: &TruncationSpec,
) -> Result<f64, EnergyError> {
    let start = TruncationSpec {
        n_max: (2 * t.n_max).min(N_MAX_CAP),
        adapt: t.adapt,
        ..*t
    };
    Ok(gauss_pass(kernel, map, 32, &start, None)?.total().abs())
}

struct Outcome {
    pass: Pass,
    est_quad: f64,
    quad_converged: bool,
}

fn integrate_gauss(
    kernel: &Kernel,
    map: SemiInfiniteMap,
    t: &TruncationSpec,
    q: &QuadratureSpec,
) -> Result<Outcome, EnergyError> {
    if !t.adapt {
        let coarse = gauss_pass(kernel, map, q.node_count / 2, t, None)?;
        let fine = gauss_pass(kernel, map, q.node_count, t, None)?;
        let est_quad = ((fine.total() - coarse.total()) / fine.total()).abs();
        return Ok(Outcome {
            pass: fine,
            est_quad,
            quad_converged: est_quad <= t.rel_tol,
        });
    }
    let budget = Budget {
        rel_tol: t.rel_tol,
        e_ref: reference_energy(kernel, map, t)?,
    };
    let mut n = q.node_count.min(NODE_CAP);
    let mut coarse = gauss_pass(kernel, map, n / 2, t, Some(&budget))?;
    loop {
        let fine = gauss_pass(kernel, map, n, t, Some(&budget))?;
        let est_quad = ((fine.total() - coarse.total()) / fine.total()).abs();
        if est_quad <= t.rel_tol || 2 * n > NODE_CAP {
            return Ok(Outcome {
                pass: fine,
                est_quad,
                quad_converged: est_quad <= t.rel_tol,
            });
        }
        coarse = fine;
        n *= 2;
    }
}

fn integrate_panels(
    kernel: &Kernel,
    map: SemiInfiniteMap,
    t: &TruncationSpec,
    q: &QuadratureSpec,
) -> Result<Outcome, EnergyError> {
    let budget = Budget {
        rel_tol: t.rel_tol,
        e_ref: reference_energy(kernel, map, t)?,
    };
    let b = if t.adapt { Some(&budget) } else { None };
    struct Panel {
        lo: f64,
        hi: f64,
        kron: Pass,
        err: f64,
    }
    let make = |lo: f64, hi: f64| -> Result<Panel, EnergyError> {
        let pts = kronrod_panel(lo, hi);
        let nodes: Vec<Node> = pts
            .iter()
            .map(|&(u, wk, _)| {
                let jac = map.jacobian(u);
                Node {
                    beta: map.beta(u),
                    weight: wk * jac,
                    jac,
                }
            })
            .collect();
        let evals = eval_nodes(kernel, &nodes, t, b)?;
        let mut kron = Pass {
            nodes: 15,
            ..Pass::default()
        };
        let mut gauss = 0.0;
        for ((nd, ev), &(_, _, wg)) in nodes.iter().zip(&evals).zip(&pts) {
            kron.absorb(nd, ev, nd.weight);
            gauss += wg * nd.jac * nd.beta * (ev.tm + ev.te);
        }
        let err = (kron.total() - gauss).abs();
        Ok(Panel { lo, hi, kron, err })
    };
    let initial = (q.node_count / 15).max(1);
    let mut panels = (0..initial)
        .map(|i| make(i as f64 / initial as f64, (i + 1) as f64 / initial as f64))
        .collect::<Result<Vec<_>, _>>()?;
    loop {
        let mut pass = Pass::default();
        let mut err = 0.0;
        for p in &panels {
            pass.e_tm += p.kron.e_tm;
            pass.e_te += p.kron.e_te;
            pass.trunc_abs += p.kron.trunc_abs;
            pass.n_max = pass.n_max.max(p.kron.n_max);
            pass.m_max = pass.m_max.max(p.kron.m_max);
            pass.capped += p.kron.capped;
            pass.nodes += 15;
            err += p.err;
        }
        let est_quad = err / pass.total().abs();
        if est_quad <= t.rel_tol || !t.adapt || pass.nodes + 30 > NODE_CAP {
            return Ok(Outcome {
                pass,
                est_quad,
                quad_converged: est_quad <= t.rel_tol,
            });
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.err.total_cmp(&b.1.err))
            .map(|(i, _)| i)
            .unwrap();
        let p = panels.remove(worst);
        let mid = 0.5 * (p.lo + p.hi);
        panels.insert(worst, make(mid, p.hi)?);
        panels.insert(worst, make(p.lo, mid)?);
    }
}

fn check_specs(t: &TruncationSpec, q: &QuadratureSpec) -> Result<(), EnergyError> {
    t.check().map_err(EnergyError::InvalidArgument)?;
    q.check().map_err(EnergyError::InvalidArgument)?;
    if t.n_max > N_MAX_CAP {
        return Err(EnergyError::InvalidArgument(format!(
            "n_max = {} exceeds the cap {N_MAX_CAP}",
            t.n_max
        )));
    }
    if q.node_count > NODE_CAP {
        return Err(EnergyError::InvalidArgument(format!(
            "node_count = {} exceeds the cap {NODE_CAP}",
            q.node_count
        )));
    }
    Ok(())
}

fn run(
    kernel: Kernel,
    gap: f64,
    t: &TruncationSpec,
    q: &QuadratureSpec,
    closed_form: f64,
) -> Result<EnergyResult, EnergyError> {
    check_specs(t, q)?;
    let map = SemiInfiniteMap::new(q.scale / (2.0 * gap));
    let out = match q.rule {
        QuadratureRule::TransformedGauss => integrate_gauss(&kernel, map, t, q)?,
        QuadratureRule::AdaptivePanel => integrate_panels(&kernel, map, t, q)?,
    };
    let p = out.pass;
    let e_tm = p.e_tm + 0.5 * closed_form;
    let e_te = p.e_te + 0.5 * closed_form;
    let e_hat = e_tm + e_te;
    let est_trunc = p.trunc_abs / e_hat.abs();
    let est = out.est_quad.max(est_trunc);
    let converged = out.quad_converged && est <= t.rel_tol;
    let result = EnergyResult {
        e_hat,
        e_tm,
        e_te,
        truncation_used: TruncationSpec {
            n_max: p.n_max,
            m_max: p.m_max.max(p.n_max),
            ..*t
        },
        quadrature_used: QuadratureSpec {
            node_count: p.nodes,
            ..*q
        },
        converged,
        est_rel_error: est,
        report: ConvergenceReport {
            n_max_final: p.n_max,
            m_max_final: p.m_max,
            node_count_final: p.nodes,
            rel_change_last: est,
            accelerated: matches!(kernel, Kernel::Accelerated { .. }),
        },
    };
    if t.adapt && !converged {
        let reason = if p.capped > 0 {
            format!(
                "{} frequency nodes still changing at n_max = {N_MAX_CAP} (estimated error {est:.3e})",
                p.capped
            )
        } else if !out.quad_converged {
            format!(
                "quadrature change {:.3e} above rel_tol {:.3e} at {} nodes",
                out.est_quad, t.rel_tol, p.nodes
            )
        } else {
            format!("estimated error {est:.3e} above rel_tol {:.3e}", t.rel_tol)
        };
        return Err(EnergyError::NoConvergence {
            reason,
            partial: Box::new(result),
        });
    }
    Ok(result)
}

/// Exact energy of any validated geometry.
///
/// With `t.adapt` set, `t.n_max` and `q.node_count` are starting values and
/// failure to reach `t.rel_tol` within the caps is "no-convergence". With it
/// cleared, both are used as given and the result carries `converged` and
/// `est_rel_error` for inspection.
pub fn energy_exact(
    g: &Geometry,
    t: &TruncationSpec,
    q: &QuadratureSpec,
) -> Result<EnergyResult, EnergyError> {
    validate(g)?;
    let kernel = match *g {
        Geometry::Concentric { alpha } => Kernel::Concentric { alpha },
        Geometry::Eccentric { alpha, delta } => Kernel::Eccentric { alpha, delta },
        Geometry::CylinderPlane { h_over_a } => Kernel::CylinderPlane { h_over_a },
    };
    run(kernel, g.min_gap(), t, q, 0.0)
}

/// Subtraction-accelerated concentric energy: `(E − Ẽ) + Ẽ`.
pub fn energy_concentric_accelerated(
    g: &Geometry,
    t: &TruncationSpec,
    q: &QuadratureSpec,
) -> Result<EnergyResult, EnergyError> {
    validate(g)?;
    let Geometry::Concentric { alpha } = *g else {
        return Err(EnergyError::InvalidArgument(format!(
            "the accelerated evaluator handles concentric geometries only, got {g}"
        )));
    };
    run(
        Kernel::Accelerated { alpha },
        alpha - 1.0,
        t,
        q,
        tilde_energy(alpha)?,
    )
}

/// `Ẽ(α) = 4 Σ_{n≥1} ∫₀^∞ dβ β ln(1 − e^{−2(α−1)√(n²+β²)})` in closed form:
///
/// `Ẽ(1+s) = −(1/s²) Σ_{k≥1} [q_k/(k³(1−q_k)) + 2s q_k/(k²(1−q_k)²)]`,
/// `q_k = e^{−2ks}`.
pub fn tilde_energy(alpha: f64) -> Result<f64, EnergyError> {
    if !(alpha > 1.0) || !alpha.is_finite() {
        return Err(EnergyError::InvalidArgument(format!(
            "alpha = {alpha} must be > 1"
        )));
    }
    let s = alpha - 1.0;
    let mut sum = 0.0;
    let mut k = 1u64;
    loop {
        let kf = k as f64;
        let x = 2.0 * kf * s;
        let q = (-x).exp();
        if q == 0.0 {
            break;
        }
        let one_minus = -(-x).exp_m1();
        let term = q / (kf * kf * kf * one_minus) + 2.0 * s * q / (kf * kf * one_minus * one_minus);
        sum += term;
        if term <= 1e-17 * sum {
            break;
        }
        k += 1;
    }
    Ok(-sum / (s * s))
}

/// `(e_tm/ê, e_te/ê)`; the two fractions sum to one exactly.
pub fn tm_te_split(r: &EnergyResult) -> (f64, f64) {
    let f_tm = r.e_tm / r.e_hat;
    (f_tm, 1.0 - f_tm)
}

/// `ê(α, δ) − ê(α, 0)` for an eccentric geometry and the concentric one with
/// the same `α`.
pub fn energy_difference(
    eccentric: &Geometry,
    concentric: &Geometry,
    t: &TruncationSpec,
    q: &QuadratureSpec,
) -> Result<f64, EnergyError> {
    let (Geometry::Eccentric { alpha, delta }, Geometry::Concentric { alpha: alpha_c }) =
        (*eccentric, *concentric)
    else {
        return Err(EnergyError::InvalidArgument(
            "energy difference needs an eccentric and a concentric geometry".into(),
        ));
    };
    if alpha != alpha_c {
        return Err(EnergyError::InvalidArgument(format!(
            "alpha differs between the two geometries ({alpha} vs {alpha_c})"
        )));
    }
    validate(eccentric)?;
    if delta == 0.0 {
        return Ok(0.0);
    }
    let e = energy_exact(eccentric, t, q)?;
    let c = energy_exact(concentric, t, q)?;
    Ok(e.e_hat - c.e_hat)
}

/// `∫₀^∞ dβ β ln(1 − r_n(β))` for a single concentric mode, counted once.
pub fn mode_energy(
    alpha: f64,
    n: u32,
    pol: Polarization,
    q: &QuadratureSpec,
) -> Result<f64, EnergyError> {
    validate(&Geometry::Concentric { alpha })?;
    q.check().map_err(EnergyError::InvalidArgument)?;
    let map = SemiInfiniteMap::new(q.scale / (2.0 * (alpha - 1.0)));
    let nodes = gauss_nodes(map, q.node_count);
    let idx = n as usize;
    let values: Vec<f64> = nodes
        .par_iter()
        .map(|nd| {
            let (tm, te) = concentric_log_ratios(nd.beta, alpha, idx);
            let l = match pol {
                Polarization::TM => tm[idx],
                Polarization::TE => te[idx],
            };
            nd.weight * nd.beta * log_one_minus_exp(l)
        })
        .collect();
    Ok(values.iter().sum())
}
