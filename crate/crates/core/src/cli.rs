//! Command-line front end: argument and config-file handling, command pipelines,
//! JSON/CSV serialisation. The `opx` binary is a thin wrapper around [`dispatch`].

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::asymptotics::AsymptoticContext;
use crate::dbar_ext::{certify, knorm_estimate, ExtensionField, ExtensionKind, ExtensionSet, KnormGrid};
use crate::equilibrium::{EquilibriumMeasure, DEFAULT_QUAD_ORDER};
use crate::error::{Error, Result};
use crate::field::ExternalField;
use crate::oracle::{build_grid, first_column, log_kappa_sq, stieltjes, DEFAULT_NODES_PER_UNIT};
use crate::statphase::{decomposition_check_with, BumpChoice, PhaseFunction};
use crate::universality::{gap_convergence, KernelHandle};
use crate::C64;

#[derive(Debug, Parser)]
#[command(name = "opx", version, about = "Orthogonal polynomials with varying weights")]
pub struct Cli {
    #[command(flatten)]
    pub run: RunConfig,
    #[command(subcommand)]
    pub command: Command,
}

/// Options shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    /// Directory receiving the JSON report and CSV tables
    #[arg(long, global = true, default_value = "opx-out")]
    pub output_dir: PathBuf,
    /// Worker threads (default: OPX_THREADS, else logical cores)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Flat key=value file; keys are long option names, flags override it
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Trapezoid panels for the equilibrium solver
    #[arg(long, global = true, default_value_t = DEFAULT_QUAD_ORDER)]
    pub quad_order: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Equilibrium measure: endpoints, ℓ, condition report, ψ/θ/φ table
    Equilibrium(EquilibriumArgs),
    /// Asymptotic (A11, A21) on a bulk or edge grid
    Poly(PolyArgs),
    /// Stieltjes recurrence table for the weight e^{−N V}
    Oracle(OracleArgs),
    /// Oracle against asymptotics: bulk, edge and κ errors
    Compare(CompareArgs),
    /// Rescaled Christoffel–Darboux kernel against the sine or Airy kernel
    Kernel(KernelArgs),
    /// Gap probabilities against the limiting Fredholm determinants
    Gap(GapArgs),
    /// Grid certification of the ∂̄ extensions
    #[command(name = "dbar-certify")]
    DbarCertify(DbarCertifyArgs),
    /// Decay of the ∂̄ Cauchy-operator norm
    #[command(name = "dbar-knorm")]
    DbarKnorm(DbarKnormArgs),
    /// Stokes decomposition of ∫ e^{inθ}
    Statphase(StatphaseArgs),
}

#[derive(Debug, Clone, Args)]
pub struct EquilibriumArgs {
    #[arg(long, default_value = "gue")]
    pub field: String,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub c: f64,
    /// Points of the x table over [α−1, β+1]
    #[arg(long, default_value_t = 201)]
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Where {
    Bulk,
    Edge,
}

#[derive(Debug, Clone, Args)]
pub struct PolyArgs {
    #[arg(long, default_value = "gue")]
    pub field: String,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub c: f64,
    #[arg(long)]
    pub n: usize,
    #[arg(long = "where", value_enum, default_value = "bulk")]
    pub region: Where,
    /// lo:hi:count (x for bulk, ζ for edge)
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    /// Half-width of the Airy squares (default (β−α)/8)
    #[arg(long)]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[arg(long, default_value = "gue")]
    pub field: String,
    #[arg(long = "bigN")]
    pub big_n: usize,
    #[arg(long)]
    pub nmax: usize,
    #[arg(long, default_value_t = DEFAULT_NODES_PER_UNIT)]
    pub nodes_per_unit: usize,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[arg(long, default_value = "gue")]
    pub field: String,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub c: f64,
    /// Comma-separated degrees
    #[arg(long, value_delimiter = ',', default_value = "16,32,64")]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 0.3)]
    pub x: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub zeta: f64,
}

#[derive(Debug, Clone, Args)]
pub struct KernelArgs {
    #[arg(long, value_enum, default_value = "bulk")]
    pub mode: Where,
    #[arg(long, default_value = "gue")]
    pub field: String,
    #[arg(long = "N", default_value_t = 60)]
    pub big_n: usize,
    /// Bulk centre
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub a: f64,
    /// Half-width of the (u, v) square (default 2 bulk, 1 edge)
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long, default_value_t = 41)]
    pub points: usize,
}

#[derive(Debug, Clone, Args)]
pub struct GapArgs {
    #[arg(long, default_value = "gue")]
    pub field: String,
    #[arg(long, default_value_t = 1.0)]
    pub s: f64,
    #[arg(long = "N", value_delimiter = ',', default_value = "20,40,60")]
    pub big_n: Vec<usize>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub a: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    All,
    Theta,
    PhiAlpha,
    PhiBeta,
}

#[derive(Debug, Clone, Args)]
pub struct DbarCertifyArgs {
    #[arg(long, default_value = "gue")]
    pub field: String,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub c: f64,
    /// nx x ny
    #[arg(long, default_value = "200x50")]
    pub grid: String,
    #[arg(long, value_enum, default_value = "all")]
    pub kind: KindArg,
    #[arg(long)]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct DbarKnormArgs {
    #[arg(long, default_value = "gue")]
    pub field: String,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub c: f64,
    #[arg(long, value_delimiter = ',', default_value = "16,64,256")]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 200)]
    pub nu: usize,
    #[arg(long, default_value_t = 60)]
    pub nv: usize,
    #[arg(long, default_value_t = 25)]
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BumpArg {
    Standard,
    Composed,
}

#[derive(Debug, Clone, Args)]
pub struct StatphaseArgs {
    #[arg(long, default_value = "quad")]
    pub phase: String,
    #[arg(long, value_delimiter = ',', default_value = "100,1000,10000")]
    pub n: Vec<f64>,
    #[arg(long, value_enum, default_value = "standard")]
    pub bump: BumpArg,
}

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// Floats are written with 17 significant digits so they round-trip.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.16e}")
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: vec![] }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Int(i) => i.to_string(),
                    Cell::Float(f) => format_float(*f),
                    Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
                    Cell::Text(s) => s.clone(),
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Output of one command.
#[derive(Debug, Clone)]
pub struct Report {
    pub command: String,
    pub json: Value,
    pub tables: Vec<Table>,
}

impl Report {
    pub fn json_text(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.json).expect("report serialises");
        s.push('\n');
        s
    }

    /// Writes `<command>.json` and one `<table>.csv` per table; returns the paths.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut paths = vec![dir.join(format!("{}.json", self.command))];
        fs::write(&paths[0], self.json_text())?;
        for t in &self.tables {
            let p = dir.join(format!("{}.csv", t.name));
            fs::write(&p, t.to_csv())?;
            paths.push(p);
        }
        Ok(paths)
    }
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report serialises")
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Validation(format!("--{name} must be positive (got {v})")))
    }
}

fn solve(field: &str, c: f64, quad_order: usize) -> Result<Arc<EquilibriumMeasure>> {
    positive("c", c)?;
    let f = ExternalField::builtin(field)?;
    Ok(Arc::new(EquilibriumMeasure::solve(&f, c, quad_order)?))
}

fn big_n_for(c: f64, n: usize) -> Result<usize> {
    let v = c * n as f64;
    let r = v.round();
    if (v - r).abs() > 1e-9 || r < 1.0 {
        return Err(Error::Validation(format!("N = c·n must be a positive integer (c={c}, n={n})")));
    }
    Ok(r as usize)
}

/// Parses `lo:hi:count`.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let bad = || Error::Validation(format!("grid {text:?} is not lo:hi:count"));
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let k: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if k == 0 || !(lo.is_finite() && hi.is_finite()) || (k > 1 && hi < lo) {
        return Err(bad());
    }
    Ok(linspace(lo, hi, k))
}

fn linspace(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![lo];
    }
    (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect()
}

pub fn run_equilibrium(run: &RunConfig, a: &EquilibriumArgs) -> Result<Report> {
    if a.points < 2 {
        return Err(Error::Validation("--points must be at least 2".into()));
    }
    let eq = solve(&a.field, a.c, run.quad_order)?;
    let mut json = to_json(&eq.summary());
    json["condition_report"] = to_json(&eq.verify_conditions());
    json["psi_prime_bound"] = json!(eq.psi_prime_bound(200));
    let (lo, hi) = (eq.alpha(), eq.beta());
    let mut t = Table::new("equilibrium", &["x", "psi", "theta", "phi"]);
    for x in linspace(lo - 1.0, hi + 1.0, a.points) {
        // ψ = 0 and θ ∈ {0, 2π} off the support, φ = 0 on it
        let inside = x >= lo && x <= hi;
        let psi = if inside { eq.psi(x)? } else { 0.0 };
        let theta = if inside {
            eq.theta(x)?
        } else if x < lo {
            2.0 * std::f64::consts::PI
        } else {
            0.0
        };
        let phi = if inside { 0.0 } else { eq.phi(x)? };
        t.push(vec![x.into(), psi.into(), theta.into(), phi.into()]);
    }
    Ok(Report { command: "equilibrium".into(), json, tables: vec![t] })
}

pub fn run_poly(run: &RunConfig, a: &PolyArgs) -> Result<Report> {
    let eq = solve(&a.field, a.c, run.quad_order)?;
    let big_n = big_n_for(a.c, a.n)?;
    let ctx = match a.delta {
        Some(d) => AsymptoticContext::with_delta(eq.clone(), a.n, big_n, d)?,
        None => AsymptoticContext::new(eq.clone(), a.n, big_n)?,
    };
    let grid = match (&a.grid, a.region) {
        (Some(g), _) => parse_grid(g)?,
        (None, Where::Bulk) => {
            let m = 1.01 * ctx.delta;
            linspace(eq.alpha() + m, eq.beta() - m, 41)
        }
        (None, Where::Edge) => linspace(-2.0, 1.0, 31),
    };
    let var = if a.region == Where::Bulk { "x" } else { "zeta" };
    let mut t = Table::new("poly", &[var, "re_a11", "im_a11", "re_a21", "im_a21", "log_scale", "a21_shift"]);
    for &g in &grid {
        let v = match a.region {
            Where::Bulk => ctx.bulk_axis(g)?,
            Where::Edge => ctx.edge_poly(C64::new(g, 0.0))?,
        };
        t.push(vec![
            g.into(),
            v.a11.re.into(),
            v.a11.im.into(),
            v.a21.re.into(),
            v.a21.im.into(),
            v.log_scale.into(),
            v.a21_shift.into(),
        ]);
    }
    let (k, k1) = ctx.kappa_asymptotic();
    let json = json!({
        "field": a.field,
        "c": a.c,
        "n": a.n,
        "big_n": big_n,
        "where": a.region,
        "delta": ctx.delta,
        "delta_n": ctx.delta_n,
        "lambda_edge": ctx.lambda_edge,
        "w_beta": ctx.w_beta,
        "log_kappa_nn_sq": k,
        "log_kappa_n1n1_sq": k1,
        "points": grid.len(),
    });
    Ok(Report { command: "poly".into(), json, tables: vec![t] })
}

pub fn run_oracle(_run: &RunConfig, a: &OracleArgs) -> Result<Report> {
    let f = ExternalField::builtin(&a.field)?;
    let grid = build_grid(&f, a.big_n, a.nmax, a.nodes_per_unit)?;
    let table = stieltjes(&grid, a.nmax)?;
    let mut json = to_json(&table);
    json["truncation_radius"] = json!(grid.truncation_radius);
    json["node_count"] = json!(grid.node_count);
    json["nodes_per_unit_requested"] = json!(a.nodes_per_unit);
    json["nodes_per_unit_used"] = json!(grid.nodes_per_unit);
    let mut t = Table::new("oracle", &["k", "a_k", "b_k_plus_1", "log_kappa_sq"]);
    for k in 0..a.nmax {
        t.push(vec![k.into(), table.a[k].into(), table.b[k].into(), log_kappa_sq(&table, k).into()]);
    }
    Ok(Report { command: "oracle".into(), json, tables: vec![t] })
}

pub fn run_compare(run: &RunConfig, a: &CompareArgs) -> Result<Report> {
    if a.n.is_empty() || a.n.iter().any(|&n| n < 2) {
        return Err(Error::Validation("--n needs degrees >= 2".into()));
    }
    let eq = solve(&a.field, a.c, run.quad_order)?;
    let mut t = Table::new(
        "compare",
        &[
            "n",
            "big_n",
            "delta_n",
            "bulk_env_err_a11",
            "bulk_env_err_a21",
            "bulk_rel_err_a11",
            "bulk_rel_err_a21",
            "edge_rel_err_a11",
            "edge_rel_err_a21",
            "kappa_err",
            "kappa_prev_err",
        ],
    );
    for &n in &a.n {
        let big_n = big_n_for(a.c, n)?;
        let ctx = AsymptoticContext::new(eq.clone(), n, big_n)?;
        let f = ExternalField::builtin(&a.field)?;
        let grid = build_grid(&f, big_n, n, DEFAULT_NODES_PER_UNIT)?;
        let table = stieltjes(&grid, n)?;
        let x = C64::new(a.x, 0.0);
        let (ob, _) = first_column(&table, n, x)?;
        let ab = ctx.bulk_axis(a.x)?;
        let (e11, e21) = ab.envelope_error(&ob, ctx.a_fn(x).re);
        let (r11, r21) = ab.relative_error(&ob);
        let zeta = C64::new(a.zeta, 0.0);
        let (oe, _) = first_column(&table, n, ctx.z_of_zeta(zeta))?;
        let (q11, q21) = ctx.edge_poly(zeta)?.relative_error(&oe);
        let (k, k1) = ctx.kappa_asymptotic();
        t.push(vec![
            n.into(),
            big_n.into(),
            ctx.delta_n.into(),
            e11.into(),
            e21.into(),
            r11.into(),
            r21.into(),
            q11.into(),
            q21.into(),
            (k - log_kappa_sq(&table, n)).abs().into(),
            (k1 - log_kappa_sq(&table, n - 1)).abs().into(),
        ]);
    }
    let json = json!({ "field": a.field, "c": a.c, "x": a.x, "zeta": a.zeta, "n": a.n });
    Ok(Report { command: "compare".into(), json, tables: vec![t] })
}

pub fn run_kernel(run: &RunConfig, a: &KernelArgs) -> Result<Report> {
    if a.points < 2 {
        return Err(Error::Validation("--points must be at least 2".into()));
    }
    let eq = solve(&a.field, 1.0, run.quad_order)?;
    let table = Arc::new(
        build_grid(eq.field(), a.big_n, a.big_n, DEFAULT_NODES_PER_UNIT).and_then(|g| stieltjes(&g, a.big_n))?,
    );
    let (k, limit, r) = match a.mode {
        Where::Bulk => (KernelHandle::bulk(table, eq.clone(), a.big_n, a.a)?, KernelHandle::Sine, a.r.unwrap_or(2.0)),
        Where::Edge => (KernelHandle::edge(table, eq.clone(), a.big_n)?, KernelHandle::Airy, a.r.unwrap_or(1.0)),
    };
    positive("r", r)?;
    let grid = linspace(-r, r, a.points);
    let km = k.matrix(&grid)?;
    let lm = limit.matrix(&grid)?;
    let mut t = Table::new("kernel", &["u", "v", "finite_n", "limit", "difference"]);
    let mut sup: f64 = 0.0;
    for (i, &u) in grid.iter().enumerate() {
        for (j, &v) in grid.iter().enumerate() {
            let d = km[(i, j)] - lm[(i, j)];
            sup = sup.max(d.abs());
            t.push(vec![u.into(), v.into(), km[(i, j)].into(), lm[(i, j)].into(), d.into()]);
        }
    }
    let json = json!({
        "field": a.field,
        "mode": a.mode,
        "big_n": a.big_n,
        "a": a.a,
        "r": r,
        "points": a.points,
        "sup_deviation": sup,
        "diagonal_rule": k.diagonal_rule(),
    });
    Ok(Report { command: "kernel".into(), json, tables: vec![t] })
}

pub fn run_gap(run: &RunConfig, a: &GapArgs) -> Result<Report> {
    if a.big_n.is_empty() {
        return Err(Error::Validation("--N needs at least one size".into()));
    }
    let eq = solve(&a.field, 1.0, run.quad_order)?;
    let rep = gap_convergence(&eq, &a.big_n, a.a, a.s)?;
    let mut t = Table::new(
        "gap",
        &["big_n", "bulk_gap", "sine_det", "bulk_deviation", "edge_gap", "airy_det", "edge_deviation"],
    );
    for r in &rep.rows {
        t.push(vec![
            r.big_n.into(),
            r.bulk_gap.into(),
            rep.sine_det.into(),
            r.bulk_deviation.into(),
            r.edge_gap.into(),
            rep.airy_det.into(),
            r.edge_deviation.into(),
        ]);
    }
    Ok(Report { command: "gap".into(), json: to_json(&rep), tables: vec![t] })
}

fn parse_nxm(text: &str) -> Result<(usize, usize)> {
    let bad = || Error::Validation(format!("grid {text:?} is not NXxNY"));
    let (x, y) = text.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((x.trim().parse().map_err(|_| bad())?, y.trim().parse().map_err(|_| bad())?))
}

pub fn run_dbar_certify(run: &RunConfig, a: &DbarCertifyArgs) -> Result<Report> {
    let (nx, ny) = parse_nxm(&a.grid)?;
    let eq = solve(&a.field, a.c, run.quad_order)?;
    let kinds: Vec<ExtensionKind> = match a.kind {
        KindArg::All => vec![ExtensionKind::Theta, ExtensionKind::PhiAlpha, ExtensionKind::PhiBeta],
        KindArg::Theta => vec![ExtensionKind::Theta],
        KindArg::PhiAlpha => vec![ExtensionKind::PhiAlpha],
        KindArg::PhiBeta => vec![ExtensionKind::PhiBeta],
    };
    let mut reports = vec![];
    for kind in kinds {
        let ext = match a.delta {
            Some(d) => ExtensionField::with_delta(eq.clone(), kind, d)?,
            None => ExtensionField::new(eq.clone(), kind)?,
        };
        reports.push(certify(&ext, nx, ny)?);
    }
    let mut t = Table::new(
        "dbar_certify",
        &[
            "kind",
            "delta",
            "boundary_trace_max",
            "diagonal_identity_max",
            "big_k_fit",
            "k_fit",
            "k_fit_rectangle",
            "endpoint_linear_max",
            "fd_max",
        ],
    );
    for r in &reports {
        let kind = match r.kind {
            ExtensionKind::Theta => "theta",
            ExtensionKind::PhiAlpha => "phi_alpha",
            ExtensionKind::PhiBeta => "phi_beta",
        };
        t.push(vec![
            kind.into(),
            r.delta.into(),
            r.boundary_trace_max.into(),
            r.diagonal_identity_max.into(),
            r.big_k_fit.into(),
            r.k_fit.into(),
            r.k_fit_rectangle.unwrap_or(f64::NAN).into(),
            r.endpoint_linear_max.into(),
            r.fd_max.into(),
        ]);
    }
    let json = json!({ "field": a.field, "c": a.c, "grid": [nx, ny], "reports": reports });
    Ok(Report { command: "dbar_certify".into(), json, tables: vec![t] })
}

pub fn run_dbar_knorm(run: &RunConfig, a: &DbarKnormArgs) -> Result<Report> {
    let eq = solve(&a.field, a.c, run.quad_order)?;
    let set = ExtensionSet::new(eq)?;
    let grid = KnormGrid { nu: a.nu, nv: a.nv, points: a.points };
    let rep = knorm_estimate(&set, &a.n, &grid)?;
    let mut t = Table::new("dbar_knorm", &["n", "estimate", "argmax_x", "w_max", "rate_n13_logn"]);
    for r in &rep.rows {
        let nf = r.n as f64;
        t.push(vec![
            r.n.into(),
            r.estimate.into(),
            r.argmax_x.into(),
            r.w_max.into(),
            (nf.powf(-1.0 / 3.0) * nf.ln()).into(),
        ]);
    }
    Ok(Report { command: "dbar_knorm".into(), json: to_json(&rep), tables: vec![t] })
}

pub fn run_statphase(_run: &RunConfig, a: &StatphaseArgs) -> Result<Report> {
    let ph = PhaseFunction::by_name(&a.phase)?;
    let b = match a.bump {
        BumpArg::Standard => BumpChoice::Standard,
        BumpArg::Composed => BumpChoice::Composed,
    };
    let rep = decomposition_check_with(&ph, b, &a.n)?;
    let mut t = Table::new(
        "statphase",
        &[
            "n",
            "re_i",
            "im_i",
            "re_gaussian",
            "im_gaussian",
            "re_left",
            "im_left",
            "re_right",
            "im_right",
            "re_upper",
            "im_upper",
            "re_lower",
            "im_lower",
            "identity_residual",
            "scaled_leading_error",
        ],
    );
    for r in &rep.rows {
        let mut row: Vec<Cell> = vec![r.n.into()];
        for z in [r.i_direct, r.gaussian, r.left_segment, r.right_segment, r.upper_triangle, r.lower_triangle] {
            row.push(z.re.into());
            row.push(z.im.into());
        }
        row.push(r.residual.into());
        row.push(r.scaled_leading_error.into());
        t.push(row);
    }
    let mut s = Table::new("statphase_slopes", &["piece", "loglog_slope"]);
    for (name, v) in ["left_segment", "right_segment", "upper_triangle", "lower_triangle"].iter().zip(rep.piece_slopes)
    {
        s.push(vec![(*name).into(), v.into()]);
    }
    s.push(vec!["leading_error".into(), rep.leading_error_slope.into()]);
    Ok(Report { command: "statphase".into(), json: to_json(&rep), tables: vec![t, s] })
}

/// Runs one parsed command.
pub fn execute(run: &RunConfig, cmd: &Command) -> Result<Report> {
    match cmd {
        Command::Equilibrium(a) => run_equilibrium(run, a),
        Command::Poly(a) => run_poly(run, a),
        Command::Oracle(a) => run_oracle(run, a),
        Command::Compare(a) => run_compare(run, a),
        Command::Kernel(a) => run_kernel(run, a),
        Command::Gap(a) => run_gap(run, a),
        Command::DbarCertify(a) => run_dbar_certify(run, a),
        Command::DbarKnorm(a) => run_dbar_knorm(run, a),
        Command::Statphase(a) => run_statphase(run, a),
    }
}

/// Reads a flat key=value file. Blank lines and lines starting with '#' are skipped.
pub fn read_config(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path)?;
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Validation(format!("{}:{}: expected key=value", path.display(), i + 1)))?;
        out.insert(k.trim().replace('_', "-"), v.trim().to_string());
    }
    Ok(out)
}

/// Adds `--key value` for config entries the command accepts and the command line left unset.
fn merge_config(argv: &[String]) -> std::result::Result<Vec<String>, clap::Error> {
    let matches = Cli::command().try_get_matches_from(argv)?;
    let Some(path) = matches.get_one::<PathBuf>("config") else {
        return Ok(argv.to_vec());
    };
    let cfg = read_config(path).map_err(|e| Cli::command().error(clap::error::ErrorKind::Io, e.to_string()))?;
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let root = Cli::command();
    let sub_cmd = root.find_subcommand(name).expect("known subcommand");
    let mut extra = vec![];
    for (key, value) in &cfg {
        let on_sub = sub_cmd.get_arguments().find(|a| a.get_long() == Some(key.as_str()));
        let on_root = root.get_arguments().find(|a| a.get_long() == Some(key.as_str()));
        let from_cli = match (on_sub, on_root) {
            (Some(a), _) => sub.value_source(a.get_id().as_str()),
            (None, Some(a)) => matches.value_source(a.get_id().as_str()),
            (None, None) => {
                return Err(Cli::command().error(
                    clap::error::ErrorKind::UnknownArgument,
                    format!("config key {key:?} is not an option of {name}"),
                ))
            }
        } == Some(clap::parser::ValueSource::CommandLine);
        if !from_cli && key != "config" {
            extra.push(format!("--{key}={value}"));
        }
    }
    // insert right after the subcommand name
    let pos = argv.iter().position(|a| a == name).expect("subcommand in argv") + 1;
    let mut out = argv[..pos].to_vec();
    out.extend(extra);
    out.extend_from_slice(&argv[pos..]);
    Ok(out)
}

fn threads(run: &RunConfig) -> Result<Option<usize>> {
    let t = match run.threads {
        Some(t) => Some(t),
        None => match std::env::var("OPX_THREADS") {
            Ok(s) if !s.trim().is_empty() => {
                Some(s.trim().parse().map_err(|_| Error::Validation(format!("OPX_THREADS={s:?} is not a count")))?)
            }
            _ => None,
        },
    };
    if t == Some(0) {
        return Err(Error::Validation("thread count must be positive".into()));
    }
    Ok(t)
}

/// Full CLI contract: parse, run, write files, print the JSON report. Returns the exit code
/// (0 ok, 2 validation, 3 non-convergence, 1 I/O).
pub fn dispatch<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let parsed = merge_config(&argv).and_then(|a| {
        let m = Cli::command().try_get_matches_from(&a)?;
        Cli::from_arg_matches(&m)
    });
    let cli = match parsed {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                clap::error::ErrorKind::Io => 1,
                _ => 2,
            };
        }
    };
    let result = threads(&cli.run).and_then(|t| {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(t) = t {
            b = b.num_threads(t);
        }
        let pool = b.build().map_err(|e| Error::Validation(format!("thread pool: {e}")))?;
        pool.install(|| execute(&cli.run, &cli.command))
    });
    match result.and_then(|rep| rep.write(&cli.run.output_dir).map(|p| (rep, p))) {
        Ok((rep, paths)) => {
            print!("{}", rep.json_text());
            for p in paths {
                eprintln!("wrote {}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("opx: {e}");
            e.exit_code()
        }
    }
}
