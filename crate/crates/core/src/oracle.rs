//! Brute-force orthonormal polynomials for e^{-N V(x)} dx.
//!
//! The weight is discretised on composite Gauss-Legendre panels over [−L, L]
//! and the recurrence x p_k = b_{k+1} p_{k+1} + a_k p_k + b_k p_{k−1} is
//! obtained by Lanczos with full reorthogonalization.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::asymptotics::PolyPairEval;
use crate::error::{Error, Result};
use crate::field::ExternalField;
use crate::quad;

pub const N_MAX_CAP: usize = 128;
pub const DEFAULT_NODES_PER_UNIT: usize = 40;
const PANEL_ORDER: usize = 20;
const L_MAX: f64 = 50.0;
const TAIL_TOL: f64 = 1e-30;

#[derive(Debug, Clone, Serialize)]
pub struct QuadratureGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub truncation_radius: f64,
    pub node_count: usize,
    /// density actually used (the requested one may be refined)
    pub nodes_per_unit: usize,
    pub big_n: usize,
    pub field: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RecurrenceTable {
    pub field: String,
    pub big_n: usize,
    pub n_max: usize,
    pub m0: f64,
    /// a_0 .. a_{n_max−1}
    pub a: Vec<f64>,
    /// b_1 .. b_{n_max} (b[k−1] = b_k)
    pub b: Vec<f64>,
}

/// p_n and p_{n−1} with derivatives; true values are the fields times e^{log_scale}.
#[derive(Debug, Clone, Copy)]
pub struct PolyEval {
    pub p: C64,
    pub dp: C64,
    pub p_prev: C64,
    pub dp_prev: C64,
    pub log_scale: f64,
    /// log κ_{n,n}²
    pub log_kappa_sq: f64,
}

fn log_mass(field: &ExternalField, big_n: usize, l: f64) -> f64 {
    let q = quad::panels(-l, l, field.breakpoints(), PANEL_ORDER, 0.25);
    let vmin = q.x.iter().map(|&x| field.v(x)).fold(f64::INFINITY, f64::min);
    let n = big_n as f64;
    let s = q.sum(|x| (-n * (field.v(x) - vmin)).exp());
    s.ln() - n * vmin
}

fn grid_on(field: &ExternalField, big_n: usize, l: f64, nodes_per_unit: usize) -> QuadratureGrid {
    let width = PANEL_ORDER as f64 / nodes_per_unit as f64;
    let q = quad::panels(-l, l, field.breakpoints(), PANEL_ORDER, width);
    let n = big_n as f64;
    let mut nodes = Vec::with_capacity(q.len());
    let mut weights = Vec::with_capacity(q.len());
    for (&x, &w) in q.x.iter().zip(&q.w) {
        let wt = w * (-n * field.v(x)).exp();
        if wt > 0.0 {
            nodes.push(x);
            weights.push(wt);
        }
    }
    QuadratureGrid {
        node_count: nodes.len(),
        nodes,
        weights,
        truncation_radius: l,
        nodes_per_unit,
        big_n,
        field: field.id().to_string(),
    }
}

fn tail_ok(field: &ExternalField, big_n: usize, n_max: usize, l: f64, log_m0: f64) -> bool {
    let n = big_n as f64;
    let v = field.v(l).min(field.v(-l));
    -n * v + 2.0 * n_max as f64 * l.ln() + (2.0 * l).ln() < TAIL_TOL.ln() + log_m0
}

/// Weighted size of the highest polynomials at ±L relative to their bulk size.
fn boundary_indicator(grid: &QuadratureGrid, table: &RecurrenceTable, field: &ExternalField) -> f64 {
    let l = grid.truncation_radius;
    let n = grid.big_n as f64;
    let mut worst = f64::NEG_INFINITY;
    for x in [-l, l] {
        let ev = eval_poly(table, table.n_max, C64::new(x, 0.0)).unwrap();
        let lv = 2.0 * (ev.p.norm().ln() + ev.log_scale) - n * field.v(x);
        let lp = 2.0 * (ev.p_prev.norm().ln() + ev.log_scale) - n * field.v(x);
        worst = worst.max(lv).max(lp);
    }
    worst
}

fn validate(big_n: usize, n_max: usize, nodes_per_unit: usize) -> Result<()> {
    if big_n == 0 || n_max == 0 {
        return Err(Error::Validation("N and n_max must be positive".into()));
    }
    if n_max > N_MAX_CAP {
        return Err(Error::Validation(format!("n_max is capped at {N_MAX_CAP}")));
    }
    if nodes_per_unit < 4 {
        return Err(Error::Validation("nodes_per_unit must be at least 4".into()));
    }
    Ok(())
}

/// Composite Gauss-Legendre grid on [−L, L] at exactly the requested density.
pub fn build_grid_fixed(
    field: &ExternalField,
    big_n: usize,
    n_max: usize,
    nodes_per_unit: usize,
) -> Result<QuadratureGrid> {
    validate(big_n, n_max, nodes_per_unit)?;
    let log_m0 = log_mass(field, big_n, field.growth_hint());
    let mut l = 0.5;
    while !tail_ok(field, big_n, n_max, l, log_m0) {
        l += 0.25;
        if l > L_MAX {
            return Err(Error::Validation("tail bound unsatisfiable for L <= 50".into()));
        }
    }
    // the bound above ignores the growth of the leading coefficient; widen until the
    // weighted top polynomials are negligible at ±L
    let mut best = f64::INFINITY;
    let mut stalled = 0;
    loop {
        let grid = grid_on(field, big_n, l, nodes_per_unit);
        if grid.node_count >= 4 * n_max {
            let table = stieltjes(&grid, n_max)?;
            let bi = boundary_indicator(&grid, &table, field);
            if bi < TAIL_TOL.ln() {
                return Ok(grid);
            }
            // an under-resolved discrete measure has polynomials that never decay at ±L
            if bi < best - 1.0 {
                best = bi;
                stalled = 0;
            } else {
                stalled += 1;
                if stalled >= 4 {
                    return Err(Error::Resolution(format!(
                        "{nodes_per_unit} nodes per unit cannot resolve degree {n_max}"
                    )));
                }
            }
        } else if (-(big_n as f64) * field.v(l).min(field.v(-l))).exp() == 0.0 {
            // widening only adds underflowed nodes
            return Err(Error::Resolution(format!(
                "{nodes_per_unit} nodes per unit give too few nodes for degree {n_max}"
            )));
        }
        l += 0.25;
        if l > L_MAX {
            return Err(Error::Validation("tail bound unsatisfiable for L <= 50".into()));
        }
    }
}

fn max_rel_diff(s: &RecurrenceTable, t: &RecurrenceTable) -> f64 {
    let mut d: f64 = 0.0;
    for (x, y) in s.b.iter().zip(&t.b) {
        d = d.max((x - y).abs() / y.abs());
    }
    for (x, y) in s.a.iter().zip(&t.a) {
        d = d.max((x - y).abs() / t.b[0]);
    }
    d
}

/// Like [`build_grid_fixed`], but the density is doubled until the recurrence
/// coefficients agree with those of the next doubling to 1e-13.
pub fn build_grid(field: &ExternalField, big_n: usize, n_max: usize, nodes_per_unit: usize) -> Result<QuadratureGrid> {
    let mut d = nodes_per_unit;
    let mut grid = loop {
        match build_grid_fixed(field, big_n, n_max, d) {
            Ok(g) => break g,
            Err(Error::Resolution(_)) if d < 64 * nodes_per_unit => d *= 2,
            Err(e) => return Err(e),
        }
    };
    let mut table = stieltjes(&grid, n_max)?;
    for _ in 0..8 {
        let finer = build_grid_fixed(field, big_n, n_max, grid.nodes_per_unit * 2)?;
        let ft = stieltjes(&finer, n_max)?;
        if max_rel_diff(&table, &ft) < 1e-13 {
            return Ok(grid);
        }
        grid = finer;
        table = ft;
    }
    Err(Error::Resolution("oracle grid refinement did not converge".into()))
}

/// Discretised Stieltjes procedure (Lanczos, full reorthogonalization).
pub fn stieltjes(grid: &QuadratureGrid, n_max: usize) -> Result<RecurrenceTable> {
    let m = grid.node_count;
    if m < 4 * n_max {
        return Err(Error::Validation(format!("grid has {m} nodes, need >= {}", 4 * n_max)));
    }
    let m0: f64 = grid.weights.iter().sum();
    if !(m0 > 0.0 && m0.is_finite()) {
        return Err(Error::Validation("zero or non-finite total mass".into()));
    }
    let x = &grid.nodes;
    let mut qs: Vec<Vec<f64>> = Vec::with_capacity(n_max + 1);
    let sm = m0.sqrt();
    qs.push(grid.weights.iter().map(|w| w.sqrt() / sm).collect());
    let mut a = Vec::with_capacity(n_max);
    let mut b = Vec::with_capacity(n_max);
    for k in 0..n_max {
        let qk = &qs[k];
        let mut v: Vec<f64> = qk.iter().zip(x).map(|(q, x)| q * x).collect();
        let ak: f64 = v.iter().zip(qk).map(|(v, q)| v * q).sum();
        for (vi, qi) in v.iter_mut().zip(qk) {
            *vi -= ak * qi;
        }
        if k > 0 {
            let bk = b[k - 1];
            for (vi, qi) in v.iter_mut().zip(&qs[k - 1]) {
                *vi -= bk * qi;
            }
        }
        for _ in 0..2 {
            for q in &qs {
                let d: f64 = v.iter().zip(q).map(|(v, q)| v * q).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= d * qi;
                }
            }
        }
        let bk1 = v.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(bk1 > 1e-13) {
            return Err(Error::Resolution(format!("b_{} lost positivity; increase node density", k + 1)));
        }
        a.push(ak);
        b.push(bk1);
        qs.push(v.into_iter().map(|v| v / bk1).collect());
    }
    Ok(RecurrenceTable { field: grid.field.clone(), big_n: grid.big_n, n_max, m0, a, b })
}

/// Grid + table with the default node density.
pub fn build_table(field: &ExternalField, big_n: usize, n_max: usize) -> Result<RecurrenceTable> {
    let grid = build_grid(field, big_n, n_max, DEFAULT_NODES_PER_UNIT)?;
    stieltjes(&grid, n_max)
}

/// log κ_{n,n}².
pub fn log_kappa_sq(table: &RecurrenceTable, n: usize) -> f64 {
    -table.m0.ln() - 2.0 * table.b[..n].iter().map(|b| b.ln()).sum::<f64>()
}

/// Forward recurrence for p_n(z), p_{n−1}(z) and derivatives, rescaled to avoid overflow.
pub fn eval_poly(table: &RecurrenceTable, n: usize, z: C64) -> Result<PolyEval> {
    if n > table.n_max {
        return Err(Error::Validation(format!("n={n} exceeds n_max={}", table.n_max)));
    }
    let zero = C64::new(0.0, 0.0);
    let mut p = C64::new(1.0 / table.m0.sqrt(), 0.0);
    let mut dp = zero;
    let mut pm = zero;
    let mut dpm = zero;
    let mut log_scale = 0.0;
    for k in 0..n {
        let bk1 = table.b[k];
        let bk = if k > 0 { table.b[k - 1] } else { 0.0 };
        let t = z - table.a[k];
        let pn = (t * p - bk * pm) / bk1;
        let dpn = (t * dp + p - bk * dpm) / bk1;
        pm = p;
        dpm = dp;
        p = pn;
        dp = dpn;
        let size = p.norm().max(pm.norm()).max(dp.norm()).max(dpm.norm());
        if size > 1e150 || (size < 1e-150 && size > 0.0) {
            let s = size.ln();
            let f = (-s).exp();
            p *= f;
            dp *= f;
            pm *= f;
            dpm *= f;
            log_scale += s;
        }
    }
    Ok(PolyEval { p, dp, p_prev: pm, dp_prev: dpm, log_scale, log_kappa_sq: log_kappa_sq(table, n) })
}

fn check_kernel(table: &RecurrenceTable, field: &ExternalField, big_n: usize) -> Result<()> {
    if big_n > table.n_max {
        return Err(Error::Validation(format!("N={big_n} exceeds n_max={}", table.n_max)));
    }
    if big_n != table.big_n || field.id() != table.field {
        return Err(Error::Validation("kernel N/field must match the recurrence table".into()));
    }
    Ok(())
}

/// Exact (A₁₁, A₂₁) and their z-derivatives from the recurrence.
pub fn first_column(table: &RecurrenceTable, n: usize, z: C64) -> Result<(PolyPairEval, PolyPairEval)> {
    if n == 0 {
        return Err(Error::Validation("n must be positive".into()));
    }
    let ev = eval_poly(table, n, z)?;
    let lk1 = log_kappa_sq(table, n - 1);
    let ls = ev.log_scale - 0.5 * ev.log_kappa_sq;
    let shift = 0.5 * (ev.log_kappa_sq + lk1);
    let m = C64::new(0.0, -2.0 * std::f64::consts::PI);
    Ok((
        PolyPairEval { a11: ev.p, a21: m * ev.p_prev, log_scale: ls, a21_shift: shift },
        PolyPairEval { a11: ev.dp, a21: m * ev.dp_prev, log_scale: ls, a21_shift: shift },
    ))
}

/// K_N(x, y) by Christoffel-Darboux (derivative form on the diagonal).
pub fn cd_kernel(table: &RecurrenceTable, field: &ExternalField, big_n: usize, x: f64, y: f64) -> Result<f64> {
    check_kernel(table, field, big_n)?;
    let n = big_n as f64;
    let bn = table.b[big_n - 1];
    let ex = eval_poly(table, big_n, C64::new(x, 0.0))?;
    if x == y {
        let core = ex.dp.re * ex.p_prev.re - ex.dp_prev.re * ex.p.re;
        return Ok(bn * core * (2.0 * ex.log_scale - n * field.v(x)).exp());
    }
    let ey = eval_poly(table, big_n, C64::new(y, 0.0))?;
    let core = (ex.p.re * ey.p_prev.re - ex.p_prev.re * ey.p.re) / (x - y);
    let ls = ex.log_scale + ey.log_scale - 0.5 * n * (field.v(x) + field.v(y));
    Ok(bn * core * ls.exp())
}

/// K_N(x, y) by direct summation of p_k(x)p_k(y), k < N.
pub fn kernel_sum(table: &RecurrenceTable, field: &ExternalField, big_n: usize, x: f64, y: f64) -> Result<f64> {
    check_kernel(table, field, big_n)?;
    let n = big_n as f64;
    let (mut px, mut py) = (1.0 / table.m0.sqrt(), 1.0 / table.m0.sqrt());
    let (mut pxm, mut pym) = (0.0, 0.0);
    let wx = (-0.5 * n * field.v(x)).exp();
    let wy = (-0.5 * n * field.v(y)).exp();
    // fold the weights in from the start; fine for the moderate N used here
    px *= wx;
    py *= wy;
    let mut acc = 0.0;
    for k in 0..big_n {
        acc += px * py;
        let bk1 = table.b[k];
        let bk = if k > 0 { table.b[k - 1] } else { 0.0 };
        let nx = ((x - table.a[k]) * px - bk * pxm) / bk1;
        let ny = ((y - table.a[k]) * py - bk * pym) / bk1;
        pxm = px;
        pym = py;
        px = nx;
        py = ny;
    }
    Ok(acc)
}
