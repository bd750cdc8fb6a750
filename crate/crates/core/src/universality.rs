//! Rescaled kernels, sine/Airy limits and Fredholm gap probabilities.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::airy::airy_real;
use crate::asymptotics::AsymptoticContext;
use crate::equilibrium::EquilibriumMeasure;
use crate::error::{Error, Result};
use crate::oracle::{build_table, eval_poly, RecurrenceTable};
use crate::quad::gauss_legendre;

/// Right end used in place of +∞ for Airy-type intervals.
pub const AIRY_CUTOFF: f64 = 12.0;
/// Nyström order used by the reports.
pub const DEFAULT_QUAD_N: usize = 40;
pub const STABILITY_TOL: f64 = 1e-8;

pub fn sine_kernel(u: f64, v: f64) -> f64 {
    let d = u - v;
    if d.abs() < 1e-8 {
        1.0 - (PI * d).powi(2) / 6.0
    } else {
        (PI * d).sin() / (PI * d)
    }
}

pub fn airy_kernel(u: f64, v: f64) -> f64 {
    let (a, ap) = airy_real(u);
    if (u - v).abs() < 1e-9 {
        return ap * ap - u * a * a;
    }
    let (b, bp) = airy_real(v);
    (a * bp - ap * b) / (u - v)
}

/// Map from rescaled variable t to x = center + t·scale, with K multiplied by scale.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Scaling {
    pub center: f64,
    pub scale: f64,
}

#[derive(Debug, Clone)]
pub enum KernelHandle {
    Sine,
    Airy,
    FiniteN { table: Arc<RecurrenceTable>, eq: Arc<EquilibriumMeasure>, big_n: usize, scaling: Scaling },
}

/// Per-node data for the Christoffel-Darboux form: weighted p_N, p_{N−1} and derivatives.
#[derive(Clone, Copy)]
struct NodeVals {
    p: f64,
    pm: f64,
    dp: f64,
    dpm: f64,
}

impl KernelHandle {
    /// K_N in the bulk variable x = a + t/(Nψ(a)).
    pub fn bulk(table: Arc<RecurrenceTable>, eq: Arc<EquilibriumMeasure>, big_n: usize, a: f64) -> Result<Self> {
        check_finite(&table, &eq, big_n)?;
        let psi = eq.psi(a)?;
        if !(psi > 0.0) {
            return Err(Error::Domain(format!("psi({a}) = {psi} is not positive")));
        }
        let d = big_n as f64 * psi;
        Ok(KernelHandle::FiniteN { table, eq, big_n, scaling: Scaling { center: a, scale: 1.0 / d } })
    }

    /// K_N in the edge variable x = β + t(λN)^{−2/3}.
    pub fn edge(table: Arc<RecurrenceTable>, eq: Arc<EquilibriumMeasure>, big_n: usize) -> Result<Self> {
        check_finite(&table, &eq, big_n)?;
        let lambda = AsymptoticContext::new(eq.clone(), big_n, big_n)?.lambda_edge;
        let s = (lambda * big_n as f64).powf(-2.0 / 3.0);
        let center = eq.beta();
        Ok(KernelHandle::FiniteN { table, eq, big_n, scaling: Scaling { center, scale: s } })
    }

    /// Formula used on the diagonal.
    pub fn diagonal_rule(&self) -> &'static str {
        match self {
            KernelHandle::Sine => "K(u,u) = 1",
            KernelHandle::Airy => "K(u,u) = Ai'(u)^2 - u Ai(u)^2",
            KernelHandle::FiniteN { .. } => "K(x,x) = b_N e^{-NV(x)} (p_N'(x) p_{N-1}(x) - p_{N-1}'(x) p_N(x))",
        }
    }

    fn node_vals(&self, x: f64) -> Result<NodeVals> {
        match self {
            KernelHandle::FiniteN { table, eq, big_n, .. } => {
                let e = eval_poly(table, *big_n, C64::new(x, 0.0))?;
                let s = (e.log_scale - 0.5 * *big_n as f64 * eq.field().v(x)).exp();
                Ok(NodeVals { p: e.p.re * s, pm: e.p_prev.re * s, dp: e.dp.re * s, dpm: e.dp_prev.re * s })
            }
            _ => unreachable!(),
        }
    }

    fn finite_entry(bn: f64, scale: f64, xi: f64, xj: f64, a: &NodeVals, b: &NodeVals) -> f64 {
        let k = if xi == xj {
            // the derivative of e^{−NV/2} cancels in the antisymmetric combination
            bn * (a.dp * a.pm - a.dpm * a.p)
        } else {
            bn * (a.p * b.pm - a.pm * b.p) / (xi - xj)
        };
        k * scale
    }

    pub fn eval(&self, u: f64, v: f64) -> Result<f64> {
        match self {
            KernelHandle::Sine => Ok(sine_kernel(u, v)),
            KernelHandle::Airy => Ok(airy_kernel(u, v)),
            KernelHandle::FiniteN { table, big_n, scaling, .. } => {
                let x = scaling.center + u * scaling.scale;
                let y = scaling.center + v * scaling.scale;
                let a = self.node_vals(x)?;
                let b = if x == y { a } else { self.node_vals(y)? };
                Ok(Self::finite_entry(table.b[*big_n - 1], scaling.scale, x, y, &a, &b))
            }
        }
    }

    /// Kernel matrix on the given (rescaled) nodes.
    pub fn matrix(&self, t: &[f64]) -> Result<DMatrix<f64>> {
        let m = t.len();
        let rows: Vec<Vec<f64>> = match self {
            KernelHandle::Sine => t.par_iter().map(|&u| t.iter().map(|&v| sine_kernel(u, v)).collect()).collect(),
            KernelHandle::Airy => {
                let ai: Vec<(f64, f64)> = t.iter().map(|&u| airy_real(u)).collect();
                (0..m)
                    .into_par_iter()
                    .map(|i| {
                        (0..m)
                            .map(|j| {
                                let (a, ap) = ai[i];
                                let (b, bp) = ai[j];
                                if i == j {
                                    ap * ap - t[i] * a * a
                                } else {
                                    (a * bp - ap * b) / (t[i] - t[j])
                                }
                            })
                            .collect()
                    })
                    .collect()
            }
            KernelHandle::FiniteN { table, big_n, scaling, .. } => {
                let xs: Vec<f64> = t.iter().map(|&u| scaling.center + u * scaling.scale).collect();
                let vals = xs.iter().map(|&x| self.node_vals(x)).collect::<Result<Vec<_>>>()?;
                let bn = table.b[*big_n - 1];
                (0..m)
                    .into_par_iter()
                    .map(|i| {
                        (0..m)
                            .map(|j| Self::finite_entry(bn, scaling.scale, xs[i], xs[j], &vals[i], &vals[j]))
                            .collect()
                    })
                    .collect()
            }
        };
        Ok(DMatrix::from_fn(m, m, |i, j| rows[i][j]))
    }
}

fn check_finite(table: &RecurrenceTable, eq: &EquilibriumMeasure, big_n: usize) -> Result<()> {
    if (eq.c() - 1.0).abs() > 1e-12 {
        return Err(Error::Validation("kernels need the equilibrium measure at c = 1".into()));
    }
    if big_n == 0 || big_n > table.n_max {
        return Err(Error::Validation(format!("N={big_n} must lie in 1..={}", table.n_max)));
    }
    if table.big_n != big_n || table.field != eq.field().id() {
        return Err(Error::Validation("recurrence table does not match N/field".into()));
    }
    Ok(())
}

/// K_N(a+u/(Nψ(a)), a+v/(Nψ(a)))/(Nψ(a)).
pub fn bulk_rescaled(
    table: &Arc<RecurrenceTable>,
    eq: &Arc<EquilibriumMeasure>,
    big_n: usize,
    a: f64,
    u: f64,
    v: f64,
) -> Result<f64> {
    if a <= eq.alpha() || a >= eq.beta() {
        return Err(Error::Domain(format!("a={a} outside the support")));
    }
    KernelHandle::bulk(table.clone(), eq.clone(), big_n, a)?.eval(u, v)
}

/// (λN)^{−2/3}K_N(β+u(λN)^{−2/3}, β+v(λN)^{−2/3}).
pub fn edge_rescaled(
    table: &Arc<RecurrenceTable>,
    eq: &Arc<EquilibriumMeasure>,
    big_n: usize,
    u: f64,
    v: f64,
) -> Result<f64> {
    KernelHandle::edge(table.clone(), eq.clone(), big_n)?.eval(u, v)
}

/// Nyström approximation of det(I − K) on (a, b) with `quad_n` Gauss-Legendre nodes.
pub fn fredholm_det(kernel: &KernelHandle, interval: (f64, f64), quad_n: usize) -> Result<f64> {
    let (a, b) = interval;
    if !(a.is_finite()) || b.is_nan() || b < a {
        return Err(Error::Validation(format!("bad interval ({a}, {b})")));
    }
    let b = if b.is_infinite() {
        match kernel {
            KernelHandle::Sine => return Err(Error::Validation("sine-kernel interval must be finite".into())),
            _ => AIRY_CUTOFF.max(a),
        }
    } else {
        b
    };
    if b == a {
        return Ok(1.0);
    }
    if quad_n == 0 {
        return Err(Error::Validation("quad_n must be positive".into()));
    }
    let r = gauss_legendre(quad_n);
    let h = 0.5 * (b - a);
    let t: Vec<f64> = r.x.iter().map(|x| a + h * (x + 1.0)).collect();
    let sw: Vec<f64> = r.w.iter().map(|w| (w * h).sqrt()).collect();
    let k = kernel.matrix(&t)?;
    let g = DMatrix::from_fn(quad_n, quad_n, |i, j| if i == j { 1.0 } else { 0.0 } - sw[i] * k[(i, j)] * sw[j]);
    Ok(g.lu().determinant())
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct StableDet {
    pub value: f64,
    pub coarse: f64,
    pub quad_n: usize,
}

/// Determinant at quad_n and 2·quad_n; resolution error if they differ by more than 1e−8.
pub fn fredholm_det_stable(kernel: &KernelHandle, interval: (f64, f64), quad_n: usize) -> Result<StableDet> {
    let coarse = fredholm_det(kernel, interval, quad_n)?;
    let value = fredholm_det(kernel, interval, 2 * quad_n)?;
    if (value - coarse).abs() > STABILITY_TOL {
        return Err(Error::Resolution(format!(
            "Fredholm determinant changed by {:e} under doubling",
            (value - coarse).abs()
        )));
    }
    Ok(StableDet { value, coarse, quad_n: 2 * quad_n })
}

#[derive(Debug, Clone, Serialize)]
pub struct GapRow {
    pub big_n: usize,
    pub bulk_gap: f64,
    pub bulk_deviation: f64,
    pub edge_gap: f64,
    pub edge_deviation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GapReport {
    pub field: String,
    pub a: f64,
    pub s: f64,
    pub sine_det: f64,
    pub airy_det: f64,
    pub rows: Vec<GapRow>,
    pub bulk_decreasing: bool,
    pub edge_decreasing: bool,
}

fn decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0] || (w[0] == 0.0 && w[1] == 0.0))
}

/// Finite-N gap probabilities E(no eigenvalue in (0,s)) at the bulk point a and
/// F(s) = P(no eigenvalue beyond β + s(λN)^{−2/3}), against their limits.
pub fn gap_convergence(eq: &Arc<EquilibriumMeasure>, big_ns: &[usize], a: f64, s: f64) -> Result<GapReport> {
    if !(0.0..=AIRY_CUTOFF).contains(&s) {
        return Err(Error::Validation(format!("s must lie in [0, {AIRY_CUTOFF}]")));
    }
    let sine_det = fredholm_det_stable(&KernelHandle::Sine, (0.0, s), DEFAULT_QUAD_N)?.value;
    let airy_det = fredholm_det_stable(&KernelHandle::Airy, (s, AIRY_CUTOFF), DEFAULT_QUAD_N)?.value;
    let rows = big_ns
        .iter()
        .map(|&n| {
            let table = Arc::new(build_table(eq.field(), n, n)?);
            let bulk = KernelHandle::bulk(table.clone(), eq.clone(), n, a)?;
            let edge = KernelHandle::edge(table, eq.clone(), n)?;
            let bulk_gap = fredholm_det_stable(&bulk, (0.0, s), DEFAULT_QUAD_N)?.value;
            let edge_gap = fredholm_det_stable(&edge, (s, AIRY_CUTOFF), DEFAULT_QUAD_N)?.value;
            Ok(GapRow {
                big_n: n,
                bulk_gap,
                bulk_deviation: (bulk_gap - sine_det).abs(),
                edge_gap,
                edge_deviation: (edge_gap - airy_det).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let bd: Vec<f64> = rows.iter().map(|r| r.bulk_deviation).collect();
    let ed: Vec<f64> = rows.iter().map(|r| r.edge_deviation).collect();
    Ok(GapReport {
        field: eq.field().id().to_string(),
        a,
        s,
        sine_det,
        airy_det,
        bulk_decreasing: decreasing(&bd),
        edge_decreasing: decreasing(&ed),
        rows,
    })
}

/// sup over a (points × points) grid on [−r, r]² of |rescaled kernel − limit kernel|.
pub fn sup_deviation(kernel: &KernelHandle, limit: &KernelHandle, r: f64, points: usize) -> Result<f64> {
    let t: Vec<f64> = (0..points).map(|i| -r + 2.0 * r * i as f64 / (points - 1) as f64).collect();
    let a = kernel.matrix(&t)?;
    let b = limit.matrix(&t)?;
    Ok((a - b).abs().max())
}
