//! The `casimir` command line.
//!
//! Exit codes: 0 success, 1 usage or invalid geometry, 2 numerical
//! non-convergence.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{
    accelerated_series, large_alpha_asymptote, pfa_bracket, pfa_concentric, series_deficit,
    series_limit, slow_series, PfaOrder,
};
use crate::bessel::{BesselOrder, ScaledBesselPair};
use crate::energy::{energy_concentric_accelerated, energy_exact, EnergyError};
use crate::geometry::{
    to_physical, ConvergenceReport, Geometry, QuadratureRule, QuadratureSpec, TruncationSpec,
};
use crate::rack_pinion::{
    energy_cyl_rack, energy_plane_rack, energy_pp, force_ratio, lateral_force_cyl_rack,
    lateral_force_plane_rack, lateral_force_pp, CorrugationSpec, ProfileJ,
};
use crate::spectral::{
    addition_theorem_check, build_cylinder_plane, build_eccentric, Polarization,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NO_CONVERGENCE: i32 = 2;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "CASIMIR_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Evaluator {
    Exact,
    Accelerated,
    Pfa,
    Ntl,
    Nntl,
    Asymptote,
}

impl Evaluator {
    pub fn name(self) -> &'static str {
        match self {
            Evaluator::Exact => "exact",
            Evaluator::Accelerated => "accelerated",
            Evaluator::Pfa => "pfa",
            Evaluator::Ntl => "ntl",
            Evaluator::Nntl => "nntl",
            Evaluator::Asymptote => "asymptote",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    TransformedGauss,
    AdaptivePanel,
}

impl From<Rule> for QuadratureRule {
    fn from(r: Rule) -> Self {
        match r {
            Rule::TransformedGauss => QuadratureRule::TransformedGauss,
            Rule::AdaptivePanel => QuadratureRule::AdaptivePanel,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Concentric,
    Eccentric,
    Cylplane,
}

#[derive(Parser, Debug)]
#[command(
    name = "casimir",
    version,
    about = "Casimir energies of cylindrical conductors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Coaxial cylinders.
    Concentric(PointArgs),
    /// Inner cylinder displaced from the axis of the outer one.
    Eccentric(PointArgs),
    /// Cylinder in front of a plane.
    Cylplane(PointArgs),
    /// Corrugated rack-and-pinion estimates (SI units).
    Rackpinion(RackArgs),
    /// Evaluate a parameter grid.
    Sweep(SweepArgs),
    /// Run the built-in checkpoint suite.
    Selftest,
}

#[derive(Args, Debug, Default, Clone)]
struct CommonArgs {
    /// Target relative accuracy.
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Inner radius in meters; with --L-meters adds SI energies.
    #[arg(long)]
    a_meters: Option<f64>,
    /// Cylinder length in meters.
    #[arg(long = "L-meters")]
    l_meters: Option<f64>,
    /// Starting (or, with --fixed, exact) frequency node count.
    #[arg(long)]
    nodes: Option<usize>,
    /// Starting (or, with --fixed, exact) angular truncation.
    #[arg(long)]
    n_max: Option<usize>,
    /// Starting inner-sum cutoff for eccentric matrices.
    #[arg(long)]
    m_max: Option<usize>,
    #[arg(long, value_enum)]
    rule: Option<Rule>,
    /// Multiplier of the natural frequency scale 1/(2·gap).
    #[arg(long)]
    scale: Option<f64>,
    /// Use --n-max and --nodes as given, without refinement.
    #[arg(long)]
    fixed: bool,
    /// JSON file with defaults for any of these options.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args, Debug, Clone)]
struct PointArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    h_over_a: Option<f64>,
    #[arg(long, value_enum)]
    evaluator: Option<Evaluator>,
    /// Print both polarizations' spectral matrices at this frequency to
    /// stderr.
    #[arg(long, value_name = "BETA")]
    dump_matrix: Option<f64>,
}

#[derive(Args, Debug, Clone)]
struct RackArgs {
    #[arg(long)]
    h_meters: f64,
    #[arg(long)]
    lambda_meters: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    x_meters: f64,
    #[arg(long)]
    d_meters: f64,
    /// Pinion radius.
    #[arg(long)]
    a_meters: f64,
    #[arg(long = "L-meters")]
    l_meters: f64,
    /// Two-column (d/λ, J) table; J ≡ 1 otherwise.
    #[arg(long)]
    profile: Option<PathBuf>,
    #[arg(long, conflicts_with = "profile")]
    j_constant: Option<f64>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long, value_enum)]
    rule: Option<Rule>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args, Debug, Clone)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_enum)]
    family: Family,
    /// Comma list or start:stop:count.
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    h_over_a: Option<String>,
    #[arg(long, value_enum, value_delimiter = ',')]
    evaluators: Vec<Evaluator>,
    /// Write rows here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Add ratio_ntl = e_hat/e_NTL.
    #[arg(long)]
    ratio_ntl: bool,
    /// Add delta_e = e(alpha, delta) − e(alpha, 0) for eccentric rows.
    #[arg(long)]
    difference: bool,
    /// Fill the wall_ms column (makes output timing dependent).
    #[arg(long)]
    timing: bool,
}

/// Options a config file may supply; field names match the long flags.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(alias = "rel-tol")]
    pub rel_tol: Option<f64>,
    pub evaluator: Option<Evaluator>,
    pub format: Option<Format>,
    #[serde(alias = "a-meters")]
    pub a_meters: Option<f64>,
    #[serde(rename = "L_meters", alias = "L-meters")]
    pub l_meters: Option<f64>,
    pub nodes: Option<usize>,
    #[serde(alias = "n-max")]
    pub n_max: Option<usize>,
    #[serde(alias = "m-max")]
    pub m_max: Option<usize>,
    pub rule: Option<Rule>,
    pub scale: Option<f64>,
    pub fixed: Option<bool>,
    pub workers: Option<usize>,
    pub alpha: Option<f64>,
    pub delta: Option<f64>,
    #[serde(alias = "h-over-a")]
    pub h_over_a: Option<f64>,
}

pub fn load_config(path: &Path) -> Result<ConfigFile, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

/// Fully resolved numerical settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub truncation: TruncationSpec,
    pub quadrature: QuadratureSpec,
    pub format: Format,
    pub a_meters: Option<f64>,
    pub l_meters: Option<f64>,
    pub workers: usize,
}

fn resolve(common: &CommonArgs, cfg: &ConfigFile) -> Result<Settings, String> {
    let dt = TruncationSpec::default();
    let dq = QuadratureSpec::default();
    let n_max = common.n_max.or(cfg.n_max).unwrap_or(dt.n_max);
    let truncation = TruncationSpec {
        n_max,
        m_max: common.m_max.or(cfg.m_max).unwrap_or(dt.m_max).max(n_max),
        adapt: !(common.fixed || cfg.fixed.unwrap_or(false)),
        rel_tol: common.rel_tol.or(cfg.rel_tol).unwrap_or(dt.rel_tol),
    };
    truncation.check()?;
    let quadrature = QuadratureSpec {
        node_count: common.nodes.or(cfg.nodes).unwrap_or(dq.node_count),
        scale: common.scale.or(cfg.scale).unwrap_or(dq.scale),
        rule: common.rule.or(cfg.rule).map(Into::into).unwrap_or(dq.rule),
    };
    quadrature.check()?;
    let a_meters = common.a_meters.or(cfg.a_meters);
    let l_meters = common.l_meters.or(cfg.l_meters);
    for (name, v) in [("a-meters", a_meters), ("L-meters", l_meters)] {
        if let Some(v) = v {
            if !(v > 0.0) || !v.is_finite() {
                return Err(format!("--{name} = {v} must be > 0"));
            }
        }
    }
    let requested = common.workers.or(cfg.workers);
    Ok(Settings {
        truncation,
        quadrature,
        format: common.format.or(cfg.format).unwrap_or_default(),
        a_meters,
        l_meters,
        workers: worker_count(requested)?,
    })
}

/// Requested workers (default: available cores), capped by
/// `CASIMIR_THREADS` when set.
fn worker_count(requested: Option<usize>) -> Result<usize, String> {
    if requested == Some(0) {
        return Err("--workers must be positive".into());
    }
    let base = requested.unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    });
    match std::env::var(THREADS_ENV) {
        Ok(v) => {
            let cap: usize = v
                .trim()
                .parse()
                .map_err(|_| format!("{THREADS_ENV} = {v:?} is not a positive integer"))?;
            if cap == 0 {
                return Err(format!("{THREADS_ENV} must be positive"));
            }
            Ok(base.min(cap))
        }
        Err(_) => Ok(base),
    }
}

/// Nine significant digits in a fixed exponent layout.
pub fn format_sig9(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.8e}");
    let (m, e) = s.split_once('e').expect("exponent present");
    let e: i32 = e.parse().expect("integer exponent");
    format!("{m}e{}{:02}", if e < 0 { '-' } else { '+' }, e.abs())
}

/// One output row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub geometry_family: String,
    pub alpha: Option<f64>,
    pub delta_or_h: Option<f64>,
    pub evaluator: String,
    pub e_hat: Option<f64>,
    pub e_tm: Option<f64>,
    pub e_te: Option<f64>,
    pub est_rel_error: Option<f64>,
    pub n_max: Option<usize>,
    pub nodes: Option<usize>,
    pub wall_ms: Option<f64>,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<ConvergenceReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio_ntl: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_e: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e_joules: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

pub const CSV_COLUMNS: [&str; 12] = [
    "geometry_family",
    "alpha",
    "delta_or_h",
    "evaluator",
    "e_hat",
    "e_tm",
    "e_te",
    "est_rel_error",
    "n_max",
    "nodes",
    "wall_ms",
    "status",
];

#[derive(Debug, Clone, Copy, Default)]
struct Extras {
    ratio_ntl: bool,
    delta_e: bool,
    joules: bool,
}

fn csv_header(x: Extras) -> String {
    let mut cols: Vec<&str> = CSV_COLUMNS.to_vec();
    if x.ratio_ntl {
        cols.push("ratio_ntl");
    }
    if x.delta_e {
        cols.push("delta_e");
    }
    if x.joules {
        cols.push("e_joules");
    }
    cols.join(",")
}

fn csv_row(r: &Record, x: Extras) -> String {
    let f = |v: Option<f64>| v.map(format_sig9).unwrap_or_default();
    let u = |v: Option<usize>| v.map(|n| n.to_string()).unwrap_or_default();
    let mut cells = vec![
        r.geometry_family.clone(),
        f(r.alpha),
        f(r.delta_or_h),
        r.evaluator.clone(),
        f(r.e_hat),
        f(r.e_tm),
        f(r.e_te),
        f(r.est_rel_error),
        u(r.n_max),
        u(r.nodes),
        r.wall_ms.map(|w| format!("{w:.3}")).unwrap_or_default(),
        r.status.clone(),
    ];
    if x.ratio_ntl {
        cells.push(f(r.ratio_ntl));
    }
    if x.delta_e {
        cells.push(f(r.delta_e));
    }
    if x.joules {
        cells.push(f(r.e_joules));
    }
    cells.join(",")
}

fn exit_for_status(status: &str) -> i32 {
    match status {
        "ok" => EXIT_OK,
        "no-convergence" | "non-contractive" | "truncation-insufficient" => EXIT_NO_CONVERGENCE,
        _ => EXIT_USAGE,
    }
}

fn base_record(g: &Geometry, ev: Evaluator) -> Record {
    let (alpha, delta_or_h) = match *g {
        Geometry::Concentric { alpha } => (Some(alpha), Some(0.0)),
        Geometry::Eccentric { alpha, delta } => (Some(alpha), Some(delta)),
        Geometry::CylinderPlane { h_over_a } => (None, Some(h_over_a)),
    };
    Record {
        geometry_family: g.family().to_string(),
        alpha,
        delta_or_h,
        evaluator: ev.name().to_string(),
        e_hat: None,
        e_tm: None,
        e_te: None,
        est_rel_error: None,
        n_max: None,
        nodes: None,
        wall_ms: None,
        status: "ok".into(),
        converged: None,
        report: None,
        ratio_ntl: None,
        delta_e: None,
        e_joules: None,
        message: None,
    }
}

fn error_status(e: &EnergyError) -> String {
    match e {
        EnergyError::Geometry(g) => g.constraint().to_string(),
        EnergyError::InvalidArgument(_) => "invalid-argument".into(),
        EnergyError::NonContractive(_) => "non-contractive".into(),
        EnergyError::TruncationInsufficient(_) => "truncation-insufficient".into(),
        EnergyError::NoConvergence { .. } => "no-convergence".into(),
    }
}

/// Evaluates one geometry with one evaluator. Failures are folded into the
/// record's status.
pub fn evaluate(g: &Geometry, ev: Evaluator, s: &Settings, timing: bool) -> Record {
    let mut r = base_record(g, ev);
    let start = Instant::now();
    if let Err(e) = g.validate() {
        r.status = e.constraint().to_string();
        r.message = Some(e.to_string());
        return r;
    }
    let concentric_alpha = match *g {
        Geometry::Concentric { alpha } => Some(alpha),
        _ => None,
    };
    let analytic = |order: Option<PfaOrder>| -> Result<f64, String> {
        let alpha = concentric_alpha.ok_or_else(|| {
            format!(
                "the {} evaluator applies to concentric geometries only",
                ev.name()
            )
        })?;
        match order {
            Some(o) => pfa_concentric(alpha, o).map_err(|e| e.to_string()),
            None => large_alpha_asymptote(alpha).map_err(|e| e.to_string()),
        }
    };
    let numeric = match ev {
        Evaluator::Exact => Some(energy_exact(g, &s.truncation, &s.quadrature)),
        Evaluator::Accelerated => Some(energy_concentric_accelerated(
            g,
            &s.truncation,
            &s.quadrature,
        )),
        _ => None,
    };
    match numeric {
        Some(res) => {
            let (res, err) = match res {
                Ok(r) => (Some(r), None),
                Err(e) => (e.partial().copied(), Some(e)),
            };
            if let Some(x) = res {
                r.e_hat = Some(x.e_hat);
                r.e_tm = Some(x.e_tm);
                r.e_te = Some(x.e_te);
                r.est_rel_error = Some(x.est_rel_error);
                r.n_max = Some(x.report.n_max_final);
                r.nodes = Some(x.report.node_count_final);
                r.converged = Some(x.converged);
                r.report = Some(x.report);
            }
            if let Some(e) = err {
                r.status = error_status(&e);
                r.message = Some(e.to_string());
            } else if r.converged == Some(false) {
                r.status = "no-convergence".into();
                r.message = Some(format!(
                    "estimated error {:e} exceeds rel_tol {:e} at fixed truncation",
                    r.est_rel_error.unwrap_or(f64::NAN),
                    s.truncation.rel_tol
                ));
            }
        }
        None => {
            let order = match ev {
                Evaluator::Pfa => Some(PfaOrder::Leading),
                Evaluator::Ntl => Some(PfaOrder::NextToLeading),
                Evaluator::Nntl => Some(PfaOrder::NextToNextToLeading),
                _ => None,
            };
            match analytic(order) {
                Ok(v) => {
                    r.e_hat = Some(v);
                    r.est_rel_error = Some(0.0);
                }
                Err(m) => {
                    r.status = "invalid-argument".into();
                    r.message = Some(m);
                }
            }
        }
    }
    if let (Some(e), Some(alpha)) = (r.e_hat, concentric_alpha) {
        r.ratio_ntl = pfa_concentric(alpha, PfaOrder::NextToLeading)
            .ok()
            .map(|ntl| e / ntl);
    }
    if let (Some(e), Some(a), Some(l)) = (r.e_hat, s.a_meters, s.l_meters) {
        r.e_joules = to_physical(e, a, l).ok();
    }
    if timing {
        r.wall_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    r
}

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T, String> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| e.to_string())?;
    Ok(pool.install(f))
}

/// Runs the command line with explicit arguments and output streams;
/// returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    let result = match cli.command {
        Command::Concentric(a) => cmd_point(Family::Concentric, &a, out, err),
        Command::Eccentric(a) => cmd_point(Family::Eccentric, &a, out, err),
        Command::Cylplane(a) => cmd_point(Family::Cylplane, &a, out, err),
        Command::Rackpinion(a) => cmd_rackpinion(&a, out, err),
        Command::Sweep(a) => cmd_sweep(&a, out, err),
        Command::Selftest => Ok(cmd_selftest(out)),
    };
    match result {
        Ok(code) => code,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
    }
}

fn config_for(common: &CommonArgs) -> Result<ConfigFile, String> {
    match &common.config {
        Some(p) => load_config(p),
        None => Ok(ConfigFile::default()),
    }
}

fn point_geometry(family: Family, a: &PointArgs, cfg: &ConfigFile) -> Result<Geometry, String> {
    let need = |v: Option<f64>, name: &str| v.ok_or_else(|| format!("--{name} is required"));
    let alpha = a.alpha.or(cfg.alpha);
    let delta = a.delta.or(cfg.delta);
    let h = a.h_over_a.or(cfg.h_over_a);
    Ok(match family {
        Family::Concentric => Geometry::Concentric {
            alpha: need(alpha, "alpha")?,
        },
        Family::Eccentric => Geometry::Eccentric {
            alpha: need(alpha, "alpha")?,
            delta: need(delta, "delta")?,
        },
        Family::Cylplane => Geometry::CylinderPlane {
            h_over_a: need(h, "h-over-a")?,
        },
    })
}

fn dump_matrices(
    g: &Geometry,
    beta: f64,
    t: &TruncationSpec,
    err: &mut dyn Write,
) -> Result<(), String> {
    for pol in Polarization::BOTH {
        let m = match *g {
            Geometry::Eccentric { alpha, delta } => build_eccentric(beta, alpha, delta, pol, t),
            Geometry::CylinderPlane { h_over_a } => build_cylinder_plane(beta, h_over_a, pol, t),
            Geometry::Concentric { alpha } => build_eccentric(beta, alpha, 0.0, pol, t),
        }
        .map_err(|e| e.to_string())?;
        let _ = write!(err, "{}", m.dump());
    }
    Ok(())
}

fn cmd_point(
    family: Family,
    a: &PointArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, String> {
    let cfg = config_for(&a.common)?;
    let s = resolve(&a.common, &cfg)?;
    let g = point_geometry(family, a, &cfg)?;
    if let Err(e) = g.validate() {
        let _ = writeln!(err, "error: {e}");
        return Ok(EXIT_USAGE);
    }
    let ev = a.evaluator.or(cfg.evaluator).unwrap_or(Evaluator::Exact);
    if let Some(beta) = a.dump_matrix {
        dump_matrices(&g, beta, &s.truncation, err)?;
    }
    let r = with_pool(s.workers, || evaluate(&g, ev, &s, true))?;
    let extras = Extras {
        ratio_ntl: r.ratio_ntl.is_some(),
        delta_e: false,
        joules: s.a_meters.is_some() && s.l_meters.is_some(),
    };
    match s.format {
        Format::Csv => {
            let _ = writeln!(out, "{}", csv_header(extras));
            let _ = writeln!(out, "{}", csv_row(&r, extras));
        }
        Format::Json => {
            let _ = writeln!(
                out,
                "{}",
                serde_json::to_string_pretty(&r).map_err(|e| e.to_string())?
            );
        }
    }
    if let Some(m) = &r.message {
        let _ = writeln!(err, "{m}");
    }
    Ok(exit_for_status(&r.status))
}

/// Parses `v1,v2,...` or `start:stop:count` (inclusive, evenly spaced).
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, String> {
    let spec = spec.trim();
    if spec.is_empty() {
        return Ok(Vec::new());
    }
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| format!("bad number {s:?} in grid {spec:?}"))
    };
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("range grid must be start:stop:count, got {spec:?}"));
        }
        let (lo, hi) = (num(parts[0])?, num(parts[1])?);
        let count: usize = parts[2]
            .trim()
            .parse()
            .map_err(|_| format!("bad count in grid {spec:?}"))?;
        return Ok(match count {
            0 => Vec::new(),
            1 => vec![lo],
            _ => (0..count)
                .map(|i| {
                    if i == count - 1 {
                        hi
                    } else {
                        lo + (hi - lo) * i as f64 / (count - 1) as f64
                    }
                })
                .collect(),
        });
    }
    spec.split(',').map(num).collect()
}

fn sweep_geometries(a: &SweepArgs) -> Result<Vec<Geometry>, String> {
    let grid = |v: &Option<String>, name: &str| -> Result<Vec<f64>, String> {
        match v {
            Some(s) => parse_grid(s),
            None => Err(format!(
                "--{name} is required for the {:?} family",
                a.family
            )),
        }
    };
    Ok(match a.family {
        Family::Concentric => grid(&a.alpha, "alpha")?
            .into_iter()
            .map(|alpha| Geometry::Concentric { alpha })
            .collect(),
        Family::Eccentric => {
            let alphas = grid(&a.alpha, "alpha")?;
            let deltas = grid(&a.delta, "delta")?;
            alphas
                .iter()
                .flat_map(|&alpha| {
                    deltas
                        .iter()
                        .map(move |&delta| Geometry::Eccentric { alpha, delta })
                })
                .collect()
        }
        Family::Cylplane => grid(&a.h_over_a, "h-over-a")?
            .into_iter()
            .map(|h_over_a| Geometry::CylinderPlane { h_over_a })
            .collect(),
    })
}

fn cmd_sweep(a: &SweepArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, String> {
    let cfg = config_for(&a.common)?;
    let s = resolve(&a.common, &cfg)?;
    let geoms = sweep_geometries(a)?;
    let evaluators = if a.evaluators.is_empty() {
        vec![cfg.evaluator.unwrap_or(Evaluator::Exact)]
    } else {
        a.evaluators.clone()
    };
    if geoms.is_empty() {
        let _ = writeln!(err, "error: empty grid");
        return Ok(EXIT_USAGE);
    }
    if a.difference && a.family != Family::Eccentric {
        return Err("--difference applies to the eccentric family".into());
    }
    let jobs: Vec<(Geometry, Evaluator)> = geoms
        .iter()
        .flat_map(|g| evaluators.iter().map(move |&e| (*g, e)))
        .collect();
    let timing = a.timing;
    let rows = with_pool(s.workers, || {
        let mut rows: Vec<Record> = jobs
            .par_iter()
            .map(|(g, e)| evaluate(g, *e, &s, timing))
            .collect();
        if a.difference {
            let mut alphas: Vec<f64> = geoms
                .iter()
                .filter_map(|g| match *g {
                    Geometry::Eccentric { alpha, .. } => Some(alpha),
                    _ => None,
                })
                .collect();
            alphas.sort_by(f64::total_cmp);
            alphas.dedup();
            let base: Vec<(f64, Option<f64>)> = alphas
                .par_iter()
                .map(|&alpha| {
                    let c = evaluate(&Geometry::Concentric { alpha }, Evaluator::Exact, &s, false);
                    (alpha, if c.status == "ok" { c.e_hat } else { None })
                })
                .collect();
            for r in rows.iter_mut() {
                let e0 = base
                    .iter()
                    .find(|(al, _)| Some(*al) == r.alpha)
                    .and_then(|(_, e)| *e);
                r.delta_e = match (r.e_hat, e0, r.delta_or_h) {
                    (_, _, Some(d)) if d == 0.0 && r.status == "ok" => Some(0.0),
                    (Some(e), Some(e0), _) if r.status == "ok" => Some(e - e0),
                    _ => None,
                };
            }
        }
        rows
    })?;
    let extras = Extras {
        ratio_ntl: a.ratio_ntl,
        delta_e: a.difference,
        joules: s.a_meters.is_some() && s.l_meters.is_some(),
    };
    let mut text = String::new();
    match s.format {
        Format::Csv => {
            text.push_str(&csv_header(extras));
            text.push('\n');
            for r in &rows {
                text.push_str(&csv_row(r, extras));
                text.push('\n');
            }
        }
        Format::Json => {
            let mut rows = rows.clone();
            for r in rows.iter_mut() {
                if !extras.ratio_ntl {
                    r.ratio_ntl = None;
                }
            }
            text.push_str(&serde_json::to_string_pretty(&rows).map_err(|e| e.to_string())?);
            text.push('\n');
        }
    }
    match &a.output {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("{}: {e}", p.display()))?,
        None => {
            let _ = out.write_all(text.as_bytes());
        }
    }
    let code = rows
        .iter()
        .map(|r| exit_for_status(&r.status))
        .max()
        .unwrap_or(EXIT_OK);
    for r in rows.iter().filter(|r| r.status != "ok") {
        let _ = writeln!(
            err,
            "{} alpha={:?} delta_or_h={:?} {}: {}",
            r.geometry_family,
            r.alpha,
            r.delta_or_h,
            r.status,
            r.message.as_deref().unwrap_or("")
        );
    }
    Ok(code)
}

#[derive(Debug, Serialize)]
struct RackRecord {
    energy_pp: f64,
    lateral_force_pp: f64,
    energy_plane_rack: f64,
    lateral_force_plane_rack: f64,
    energy_cyl_rack: f64,
    lateral_force_cyl_rack: f64,
    force_ratio: f64,
    sqrt_a_over_d: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    warning: Option<String>,
}

fn cmd_rackpinion(a: &RackArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, String> {
    let c = CorrugationSpec {
        h: a.h_meters,
        lambda: a.lambda_meters,
        x: a.x_meters,
        d: a.d_meters,
        a: a.a_meters,
        l: a.l_meters,
    };
    if let Err(e) = c.validate() {
        let _ = writeln!(err, "error: {e}");
        return Ok(EXIT_USAGE);
    }
    let j = match (&a.profile, a.j_constant) {
        (Some(p), _) => ProfileJ::from_file(p).map_err(|e| e.to_string())?,
        (None, Some(v)) => ProfileJ::Constant(v),
        (None, None) => ProfileJ::default(),
    };
    let mut q = QuadratureSpec::default();
    if let Some(n) = a.nodes {
        q.node_count = n;
    }
    if let Some(r) = a.rule {
        q.rule = r.into();
    }
    let e = |r: Result<f64, crate::rack_pinion::RackError>| r.map_err(|e| e.to_string());
    let cyl = energy_cyl_rack(&c, &j).map_err(|e| e.to_string())?;
    let rec = RackRecord {
        energy_pp: e(energy_pp(&c, &j))?,
        lateral_force_pp: e(lateral_force_pp(&c, &j))?,
        energy_plane_rack: e(energy_plane_rack(&c, &j, &q))?,
        lateral_force_plane_rack: e(lateral_force_plane_rack(&c, &j, &q))?,
        energy_cyl_rack: cyl.energy,
        lateral_force_cyl_rack: e(lateral_force_cyl_rack(&c, &j))?,
        force_ratio: e(force_ratio(&c, &j, &q))?,
        sqrt_a_over_d: (c.a / c.d).sqrt(),
        warning: cyl.warning.clone(),
    };
    match a.format {
        Format::Csv => {
            let _ = writeln!(
                out,
                "energy_pp,lateral_force_pp,energy_plane_rack,lateral_force_plane_rack,energy_cyl_rack,lateral_force_cyl_rack,force_ratio,sqrt_a_over_d"
            );
            let vals = [
                rec.energy_pp,
                rec.lateral_force_pp,
                rec.energy_plane_rack,
                rec.lateral_force_plane_rack,
                rec.energy_cyl_rack,
                rec.lateral_force_cyl_rack,
                rec.force_ratio,
                rec.sqrt_a_over_d,
            ];
            let row: Vec<String> = vals.iter().map(|&v| format_sig9(v)).collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        Format::Json => {
            let _ = writeln!(
                out,
                "{}",
                serde_json::to_string_pretty(&rec).map_err(|e| e.to_string())?
            );
        }
    }
    if let Some(w) = &cyl.warning {
        let _ = writeln!(err, "warning: {w}");
    }
    Ok(EXIT_OK)
}

/// One row of the checkpoint table.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub target: f64,
    pub pass: bool,
}

fn rounded_eq(v: f64, target: f64, decimals: i32) -> bool {
    let s = 10f64.powi(decimals);
    (v * s).round() == (target * s).round()
}

/// The checkpoint suite behind `casimir selftest`.
pub fn selftest_checks() -> Vec<Check> {
    let mut out = Vec::new();
    let mut push = |name: &str, value: f64, target: f64, pass: bool| {
        out.push(Check {
            name: name.to_string(),
            value,
            target,
            pass,
        })
    };
    let z3 = slow_series(1000);
    push("slow_series(1000)", z3, 5.5728, rounded_eq(z3, 5.5728, 4));
    let z5 = slow_series(100_000);
    push("slow_series(100000)", z5, 7.4222, rounded_eq(z5, 7.4222, 4));
    let d10 = series_deficit(10);
    push("D_10", d10, 0.6234, rounded_eq(d10, 0.6234, 4));
    let d1000 = series_deficit(1000);
    push("D_1000", d1000, 0.5847, rounded_eq(d1000, 0.5847, 4));
    let acc = accelerated_series(10);
    push(
        "accelerated_series(10) vs z_inf",
        acc,
        10.5844,
        rounded_eq(acc, 10.6234, 4) && (acc - 10.5844).abs() < 0.04,
    );
    let zinf = series_limit();
    push("z_inf", zinf, 10.5844, rounded_eq(zinf, 10.5844, 4));

    let t = TruncationSpec::fixed(24, 24);
    let q = QuadratureSpec::with_nodes(64);
    let c = energy_exact(&Geometry::Concentric { alpha: 2.0 }, &t, &q);
    let e = energy_exact(
        &Geometry::Eccentric {
            alpha: 2.0,
            delta: 0.0,
        },
        &t,
        &q,
    );
    let rel = match (c, e) {
        (Ok(c), Ok(e)) => ((e.e_hat - c.e_hat) / c.e_hat).abs(),
        _ => f64::NAN,
    };
    push(
        "eccentric(delta=0) vs concentric, alpha=2",
        rel,
        1e-10,
        rel <= 1e-10,
    );

    let g = Geometry::Concentric { alpha: 1.05 };
    let ratio = energy_exact(&g, &TruncationSpec::default(), &QuadratureSpec::default())
        .map(|r| r.e_hat / pfa_concentric(1.05, PfaOrder::Leading).unwrap())
        .unwrap_or(f64::NAN);
    let target = pfa_bracket(1.05, PfaOrder::NextToNextToLeading);
    push(
        "e/e_PFA at alpha=1.05",
        ratio,
        target,
        ((ratio - target) / target).abs() <= 0.01,
    );

    let (lhs, rhs) = addition_theorem_check(40.0, 1.0, 0, 0, Polarization::TM, 200, 1e-12)
        .unwrap_or((f64::NAN, f64::NAN));
    let dev = lhs / rhs;
    push(
        "addition theorem TM, x=40, h=1",
        dev,
        1.0,
        (dev - 1.0).abs() <= 0.01,
    );

    let w = BesselOrder::new(2)
        .and_then(|n| ScaledBesselPair::new(n, 3.7))
        .map(|p| p.wronskian_residual())
        .unwrap_or(f64::NAN);
    push("Wronskian residual n=2, x=3.7", w, 0.0, w.abs() <= 1e-10);
    out
}

fn cmd_selftest(out: &mut dyn Write) -> i32 {
    let checks = selftest_checks();
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    let _ = writeln!(
        out,
        "{:<width$}  {:>16}  {:>16}  result",
        "check", "value", "target"
    );
    for c in &checks {
        let _ = writeln!(
            out,
            "{:<width$}  {:>16}  {:>16}  {}",
            c.name,
            format!("{:.10}", c.value),
            format!("{:.10}", c.target),
            if c.pass { "PASS" } else { "FAIL" }
        );
    }
    if checks.iter().all(|c| c.pass) {
        EXIT_OK
    } else {
        EXIT_NO_CONVERGENCE
    }
}
