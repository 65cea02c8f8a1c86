//! Gauss–Legendre and Gauss–Kronrod rules, and the algebraic map of the
//! imaginary-frequency axis onto the unit interval.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

/// Nodes and weights on `[−1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

fn compute_gauss_legendre(n: usize) -> GaussRule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = nf * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    GaussRule { nodes, weights }
}

/// `n`-point Gauss–Legendre rule, computed once per `n` and shared.
pub fn gauss_legendre(n: usize) -> Arc<GaussRule> {
    assert!(n >= 1, "rule needs at least one node");
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(r) = cache.lock().unwrap().get(&n) {
        return r.clone();
    }
    let rule = Arc::new(compute_gauss_legendre(n));
    cache.lock().unwrap().entry(n).or_insert(rule).clone()
}

/// `β = c · (u/(1−u))²` taking `u ∈ [0, 1)` onto `[0, ∞)`.
///
/// The quadratic power gives `β dβ ∝ u³ du` near the origin, which tames
/// the logarithmic behaviour of the low-frequency log-determinants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemiInfiniteMap {
    pub c: f64,
}

impl SemiInfiniteMap {
    pub fn new(c: f64) -> Self {
        Self { c }
    }

    pub fn beta(&self, u: f64) -> f64 {
        let r = u / (1.0 - u);
        self.c * r * r
    }

    pub fn jacobian(&self, u: f64) -> f64 {
        let v = 1.0 - u;
        2.0 * self.c * u / (v * v * v)
    }
}

/// Frequency nodes `(β_j, W_j)` with `Σ W_j f(β_j) ≈ ∫₀^∞ f(β) dβ`.
pub fn semi_infinite_nodes(map: SemiInfiniteMap, n: usize) -> Vec<(f64, f64)> {
    let rule = gauss_legendre(n);
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&x, &w)| {
            let u = 0.5 * (x + 1.0);
            (map.beta(u), 0.5 * w * map.jacobian(u))
        })
        .collect()
}

/// `∫₀^∞ f(β) dβ` with an `n`-point mapped Gauss–Legendre rule.
pub fn integrate_semi_infinite(f: impl Fn(f64) -> f64, map: SemiInfiniteMap, n: usize) -> f64 {
    semi_infinite_nodes(map, n)
        .iter()
        .map(|&(b, w)| w * f(b))
        .sum()
}

/// 15-point Kronrod abscissae on `[0, 1]` of the symmetric rule; odd
/// entries are the embedded 7-point Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// The 15 abscissae of a Kronrod panel on `[lo, hi]`, with Kronrod and
/// embedded Gauss weights (zero for the Kronrod-only points).
pub fn kronrod_panel(lo: f64, hi: f64) -> [(f64, f64, f64); 15] {
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut out = [(0.0, 0.0, 0.0); 15];
    for k in 0..7 {
        let g = if k % 2 == 1 { WG[k / 2] } else { 0.0 };
        out[2 * k] = (mid - half * XGK[k], half * WGK[k], half * g);
        out[2 * k + 1] = (mid + half * XGK[k], half * WGK[k], half * g);
    }
    out[14] = (mid, half * WGK[7], half * WG[3]);
    out
}

/// Globally adaptive Gauss–Kronrod integration of `f` over `[lo, hi]`.
/// Returns `(value, error estimate, evaluations)`; stops at `abs_tol`,
/// `rel_tol · |value|`, or after `max_evals`.
pub fn adaptive_kronrod(
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    rel_tol: f64,
    abs_tol: f64,
    max_evals: usize,
) -> (f64, f64, usize) {
    let panel = |a: f64, b: f64| {
        let (mut k, mut g) = (0.0, 0.0);
        for (x, wk, wg) in kronrod_panel(a, b) {
            let v = f(x);
            k += wk * v;
            g += wg * v;
        }
        (a, b, k, (k - g).abs())
    };
    let mut panels = vec![panel(lo, hi)];
    let mut evals = 15;
    loop {
        let value: f64 = panels.iter().map(|p| p.2).sum();
        let err: f64 = panels.iter().map(|p| p.3).sum();
        if err <= abs_tol.max(rel_tol * value.abs()) || evals + 30 > max_evals {
            return (value, err, evals);
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|a, b| a.1 .3.total_cmp(&b.1 .3))
            .map(|(i, _)| i)
            .unwrap();
        let (a, b, _, _) = panels.swap_remove(worst);
        let m = 0.5 * (a + b);
        panels.push(panel(a, m));
        panels.push(panel(m, b));
        evals += 30;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        for n in [1, 2, 5, 16, 64] {
            let r = gauss_legendre(n);
            let sum: f64 = r.weights.iter().sum();
            assert_relative_eq!(sum, 2.0, max_relative = 1e-13);
            let deg = 2 * n - 1;
            let mono: f64 = r
                .nodes
                .iter()
                .zip(&r.weights)
                .map(|(x, w)| w * x.powi(deg as i32 - 1))
                .sum();
            let expect = if (deg - 1) % 2 == 0 {
                2.0 / deg as f64
            } else {
                0.0
            };
            assert!((mono - expect).abs() < 1e-13, "n={n}");
        }
    }

    #[test]
    fn mapped_rule_integrates_decaying_functions() {
        let map = SemiInfiniteMap::new(0.5);
        let v = integrate_semi_infinite(|b| b * (-2.0 * b).exp(), map, 64);
        assert_relative_eq!(v, 0.25, max_relative = 1e-12);
        let v = integrate_semi_infinite(|b| 1.0 / (1.0 + b * b), SemiInfiniteMap::new(1.0), 256);
        assert_relative_eq!(v, PI / 2.0, max_relative = 1e-6);
    }

    #[test]
    fn kronrod_matches_closed_forms() {
        let (v, err, _) = adaptive_kronrod(|x| x.sin(), 0.0, PI, 1e-13, 0.0, 10_000);
        assert_relative_eq!(v, 2.0, max_relative = 1e-13);
        assert!(err < 1e-12);
        let (v, _, evals) = adaptive_kronrod(|x| x.sqrt(), 0.0, 1.0, 1e-10, 0.0, 10_000);
        assert_relative_eq!(v, 2.0 / 3.0, max_relative = 1e-9);
        assert!(evals > 15);
    }
}
