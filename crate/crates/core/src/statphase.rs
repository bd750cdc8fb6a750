//! Stationary phase through a ∂̄ extension: I(n) = ∫₋₁¹ e^{inθ(x)} dx, the extension
//! Θ = [1−B(y/x)]Θ₀ + B(y/x)·½θ″(0)(x+iy)² on the triangles A₊ = {0≤y≤x≤1} and
//! A₋ = {−1≤x≤y≤0}, and the four-term Stokes decomposition of I(n) minus the Gaussian.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::dbar_ext::{bump, bump_prime};
use crate::error::{Error, Result};
use crate::quad::adaptive_c;
use crate::C64;

const I: C64 = C64 { re: 0.0, im: 1.0 };

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// θ on [−1, 1] with three derivatives; θ(0) = θ′(0) = 0 and θ″ ≥ w_lower > 0.
#[derive(Clone)]
pub struct PhaseFunction {
    name: String,
    theta: RealFn,
    theta1: RealFn,
    theta2: RealFn,
    theta3: RealFn,
    pub w_lower: f64,
    /// half the grid minimum of Im Θ/(xy), used to truncate decaying integrands
    k_cut: f64,
}

impl fmt::Debug for PhaseFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PhaseFunction").field("name", &self.name).field("w_lower", &self.w_lower).finish()
    }
}

impl PhaseFunction {
    /// θ = x².
    pub fn quad() -> Self {
        Self::custom("quad", |x| x * x, |x| 2.0 * x, |_| 2.0, |_| 0.0).unwrap()
    }

    /// θ = x² + 0.3x³.
    pub fn cubic() -> Self {
        Self::custom("cubic", |x| x * x + 0.3 * x * x * x, |x| 2.0 * x + 0.9 * x * x, |x| 2.0 + 1.8 * x, |_| 1.8)
            .unwrap()
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "quad" => Ok(Self::quad()),
            "cubic" => Ok(Self::cubic()),
            _ => Err(Error::Validation(format!("unknown phase {name:?} (quad, cubic)"))),
        }
    }

    /// Checks θ(0) = θ′(0) = 0 and measures w_lower = min θ″ on a 2001-point grid.
    pub fn custom<T, T1, T2, T3>(name: &str, t: T, t1: T1, t2: T2, t3: T3) -> Result<Self>
    where
        T: Fn(f64) -> f64 + Send + Sync + 'static,
        T1: Fn(f64) -> f64 + Send + Sync + 'static,
        T2: Fn(f64) -> f64 + Send + Sync + 'static,
        T3: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if t(0.0).abs() > 1e-14 || t1(0.0).abs() > 1e-14 {
            return Err(Error::Validation(format!("phase {name}: need theta(0) = theta'(0) = 0")));
        }
        let w = (0..=2000).map(|i| t2(-1.0 + i as f64 / 1000.0)).fold(f64::INFINITY, f64::min);
        if !(w > 0.0) {
            return Err(Error::Validation(format!(
                "phase {name}: theta'' is not bounded below by a positive constant"
            )));
        }
        let mut ph = Self {
            name: name.into(),
            theta: Arc::new(t),
            theta1: Arc::new(t1),
            theta2: Arc::new(t2),
            theta3: Arc::new(t3),
            w_lower: w,
            k_cut: 0.0,
        };
        let k = certify_conditions(&ph, 100).k_fit;
        if !(k > 0.0) {
            return Err(Error::Validation(format!("phase {name}: Im Theta/(xy) is not positive on the triangles")));
        }
        ph.k_cut = 0.5 * k;
        Ok(ph)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn theta(&self, x: f64) -> f64 {
        (self.theta)(x)
    }

    pub fn theta1(&self, x: f64) -> f64 {
        (self.theta1)(x)
    }

    pub fn theta2(&self, x: f64) -> f64 {
        (self.theta2)(x)
    }

    pub fn theta3(&self, x: f64) -> f64 {
        (self.theta3)(x)
    }

    fn max_slope(&self) -> f64 {
        (0..=200).map(|i| self.theta1(-1.0 + i as f64 / 100.0).abs()).fold(0.0, f64::max)
    }

    fn max_curv(&self) -> f64 {
        (0..=200).map(|i| self.theta2(-1.0 + i as f64 / 100.0).abs()).fold(0.0, f64::max)
    }

    fn max_abs(&self) -> f64 {
        (0..=200).map(|i| self.theta(-1.0 + i as f64 / 100.0).abs()).fold(0.0, f64::max)
    }

    /// Absolute error per unit length below which e^{inθ} cannot be resolved in double precision.
    fn noise_floor(&self, n: f64) -> f64 {
        4.0 * f64::EPSILON * n * (self.max_abs() + 1.0)
    }
}

/// Which cut-off blends Θ₀ into the quadratic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BumpChoice {
    Standard,
    /// B∘B
    Composed,
}

impl BumpChoice {
    fn eval(self, t: f64) -> (f64, f64) {
        match self {
            BumpChoice::Standard => (bump(t), bump_prime(t)),
            BumpChoice::Composed => {
                let b = bump(t);
                (bump(b), bump_prime(b) * bump_prime(t))
            }
        }
    }
}

const MAX_EVALS: usize = 400_000_000;

fn in_triangles(x: f64, y: f64) -> bool {
    (0.0..=1.0).contains(&x) && y >= 0.0 && y <= x || (-1.0..=0.0).contains(&x) && y <= 0.0 && y >= x
}

fn raw_extension(ph: &PhaseFunction, b: BumpChoice, x: f64, y: f64) -> (C64, C64) {
    if x == 0.0 {
        return (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
    }
    let (t0, t1, t2, t3) = (ph.theta(x), ph.theta1(x), ph.theta2(x), ph.theta3(x));
    let iy = C64::new(0.0, y);
    let th0 = t0 + iy * t1 + 0.5 * iy * iy * t2;
    let z = C64::new(x, y);
    let hol = 0.5 * ph.theta2(0.0) * z * z;
    let t = y / x;
    let (bv, bp) = b.eval(t);
    let value = (1.0 - bv) * th0 + bv * hol;
    // ∂̄t = ½(−y/x² + i/x), ∂̄Θ₀ = ¼(iy)²θ‴
    let dt = 0.5 * C64::new(-y / (x * x), 1.0 / x);
    let dbar = (1.0 - bv) * 0.25 * iy * iy * t3 + bp * dt * (hol - th0);
    (value, dbar)
}

/// (Θ, ∂̄Θ) on the closed triangles.
pub fn extension_value(ph: &PhaseFunction, x: f64, y: f64) -> Result<(C64, C64)> {
    extension_value_with(ph, BumpChoice::Standard, x, y)
}

pub fn extension_value_with(ph: &PhaseFunction, b: BumpChoice, x: f64, y: f64) -> Result<(C64, C64)> {
    if !in_triangles(x, y) {
        return Err(Error::Domain(format!("({x}, {y}) is outside the closed triangles")));
    }
    Ok(raw_extension(ph, b, x, y))
}

fn resolution(what: &str, n: f64) -> Error {
    Error::Resolution(format!("{what}: tolerance not reached at n={n}"))
}

/// ∫ over [a, b] split into `panels` equal pieces, each adaptive.
fn panelled<F: Fn(f64) -> C64 + Sync>(f: F, a: f64, b: f64, panels: usize, tol: f64) -> Option<C64> {
    let w = (b - a) / panels as f64;
    let parts: Vec<Option<C64>> = (0..panels)
        .into_par_iter()
        .map(|k| {
            let p = a + w * k as f64;
            adaptive_c(&f, p, p + w, tol / panels as f64, MAX_EVALS / panels.max(1))
        })
        .collect();
    parts.into_iter().sum()
}

/// ∫₋₁¹ e^{inθ(x)} dx to absolute 1e−12.
pub fn i_direct(ph: &PhaseFunction, n: f64) -> Result<C64> {
    if !(n > 0.0 && n <= 1e6) {
        return Err(Error::Validation(format!("i_direct: n={n} outside (0, 1e6]")));
    }
    let panels = (n * ph.max_slope() / 4.0).ceil() as usize + 4;
    let tol = (0.5e-12f64).max(ph.noise_floor(n)) * 2.0;
    panelled(|x| (I * n * ph.theta(x)).exp(), -1.0, 1.0, panels, tol).ok_or_else(|| resolution("i_direct", n))
}

/// e^{iπ/4}∫_{−√2}^{√2} e^{−nθ″(0)s²/2} ds.
pub fn gaussian_term(ph: &PhaseFunction, n: f64) -> C64 {
    let a = n * ph.theta2(0.0);
    C64::from_polar(1.0, PI / 4.0) * (2.0 * PI / a).sqrt() * libm::erf(a.sqrt())
}

/// √(2π/(nθ″(0))) e^{iπ/4}.
pub fn leading_term(ph: &PhaseFunction, n: f64) -> C64 {
    C64::from_polar((2.0 * PI / (n * ph.theta2(0.0))).sqrt(), PI / 4.0)
}

/// The four right-hand terms: left and right vertical segments, then the A₊ and A₋ area terms.
pub fn pieces(ph: &PhaseFunction, b: BumpChoice, n: f64, tol: f64) -> Result<[C64; 4]> {
    let tol = tol.max(ph.noise_floor(n));
    let fl = |y: f64| (I * n * raw_extension(ph, b, -1.0, y).0).exp();
    let fr = |y: f64| (I * n * raw_extension(ph, b, 1.0, y).0).exp();
    // |e^{inΘ(±1,y)}| ≤ e^{−k n|y|}: nothing above e^{−60} is dropped
    let ycut = (CUT / (n * ph.k_cut)).min(1.0);
    let vp = (n * ycut * (ph.max_slope() + ph.max_curv()) / 4.0).ceil() as usize + 4;
    // i∫₀^{−1} e^{inΘ(−1,y)} dy and i∫₁⁰ e^{inΘ(1,y)} dy
    let left = -I * panelled(fl, -ycut, 0.0, vp, tol).ok_or_else(|| resolution("left segment", n))?;
    let right = -I * panelled(fr, 0.0, ycut, vp, tol).ok_or_else(|| resolution("right segment", n))?;
    let upper = -2.0 * n * triangle(ph, b, n, 1.0, tol)?;
    let lower = 2.0 * n * triangle(ph, b, n, -1.0, tol)?;
    Ok([left, right, upper, lower])
}

const CUT: f64 = 60.0;

/// ∬ e^{inΘ}∂̄Θ over A₊ (sign 1) or A₋ (sign −1) in polar coordinates about the origin.
/// The radial range stops where n·Im Θ ≥ 60; angular panels are graded toward the axis.
fn triangle(ph: &PhaseFunction, b: BumpChoice, n: f64, sign: f64, tol: f64) -> Result<C64> {
    let curv = ph.max_curv();
    let inner = |phi: f64| -> C64 {
        let (s, c) = phi.sin_cos();
        let rcut = (CUT / (n * ph.k_cut * s * c)).sqrt().min(1.0 / c);
        let g = |r: f64| {
            let (v, d) = raw_extension(ph, b, sign * r * c, sign * r * s);
            (I * n * v).exp() * d * r
        };
        let rp = (n * curv * rcut * rcut / 8.0).ceil() as usize + 2;
        let w = rcut / rp as f64;
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..rp {
            let p = w * k as f64;
            match adaptive_c(g, p, p + w, 0.01 * tol * w, MAX_EVALS / 64) {
                Some(v) => acc += v,
                None => return C64::new(f64::NAN, f64::NAN),
            }
        }
        acc
    };
    let mut edges = vec![0.0];
    edges.extend((0..=6).rev().map(|k| PI / 4.0 * 0.5f64.powi(k)));
    let parts: Vec<Option<C64>> = edges
        .par_windows(2)
        .map(|e| adaptive_c(inner, e[0], e[1], tol / (2.0 * n) * (e[1] - e[0]) / (PI / 4.0), MAX_EVALS))
        .collect();
    let v: Option<C64> = parts.into_iter().sum();
    match v {
        Some(v) if v.re.is_finite() && v.im.is_finite() => Ok(v),
        _ => Err(resolution("triangle", n)),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DecompositionRow {
    pub n: f64,
    pub i_direct: C64,
    pub gaussian: C64,
    pub left_segment: C64,
    pub right_segment: C64,
    pub upper_triangle: C64,
    pub lower_triangle: C64,
    /// |I − Gaussian − Σ pieces|
    pub residual: f64,
    /// n·|I − √(2π/(nθ″(0)))e^{iπ/4}|
    pub scaled_leading_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecompositionReport {
    pub phase: String,
    pub bump: BumpChoice,
    pub rows: Vec<DecompositionRow>,
    pub max_residual: f64,
    /// log-log slopes of |left|, |right|, |upper|, |lower| against n
    pub piece_slopes: [f64; 4],
    /// log-log slope of |I − leading|
    pub leading_error_slope: f64,
}

/// Least-squares slope of log y against log x.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let m = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / m, ly.iter().sum::<f64>() / m);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

pub fn decomposition_check(ph: &PhaseFunction, n_list: &[f64]) -> Result<DecompositionReport> {
    decomposition_check_with(ph, BumpChoice::Standard, n_list)
}

pub fn decomposition_check_with(ph: &PhaseFunction, b: BumpChoice, n_list: &[f64]) -> Result<DecompositionReport> {
    if n_list.is_empty() || n_list.iter().any(|&n| !(1.0..=1e5).contains(&n)) {
        return Err(Error::Validation("decomposition_check: each n must lie in [1, 1e5]".into()));
    }
    let mut rows = vec![];
    for &n in n_list {
        let i = i_direct(ph, n)?;
        let g = gaussian_term(ph, n);
        let p = pieces(ph, b, n, 1e-11)?;
        let residual = (i - g - p.iter().sum::<C64>()).norm();
        rows.push(DecompositionRow {
            n,
            i_direct: i,
            gaussian: g,
            left_segment: p[0],
            right_segment: p[1],
            upper_triangle: p[2],
            lower_triangle: p[3],
            residual,
            scaled_leading_error: n * (i - leading_term(ph, n)).norm(),
        });
    }
    let ns: Vec<f64> = rows.iter().map(|r| r.n).collect();
    let slope = |f: &dyn Fn(&DecompositionRow) -> f64| {
        if ns.len() < 2 {
            f64::NAN
        } else {
            loglog_slope(&ns, &rows.iter().map(f).collect::<Vec<_>>())
        }
    };
    let piece_slopes = [
        slope(&|r| r.left_segment.norm()),
        slope(&|r| r.right_segment.norm()),
        slope(&|r| r.upper_triangle.norm()),
        slope(&|r| r.lower_triangle.norm()),
    ];
    let leading_error_slope = slope(&|r| r.scaled_leading_error / r.n);
    Ok(DecompositionReport {
        phase: ph.name().to_string(),
        bump: b,
        max_residual: rows.iter().map(|r| r.residual).fold(0.0, f64::max),
        rows,
        piece_slopes,
        leading_error_slope,
    })
}

/// Grid certificate of (C1)–(C4) on both triangles.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub phase: String,
    /// max |Θ(x,0) − θ(x)|
    pub c1_max: f64,
    /// max |Θ(x,x) − ½θ″(0)(x+ix)²|
    pub c2_max: f64,
    /// max |∂̄Θ|/y²
    pub big_k_fit: f64,
    /// min Im Θ/(xy)
    pub k_fit: f64,
    /// max |analytic ∂̄ − centred difference|
    pub fd_max: f64,
}

pub fn certify_conditions(ph: &PhaseFunction, m: usize) -> ConditionReport {
    let b = BumpChoice::Standard;
    let (mut c1, mut c2, mut kk, mut k, mut fd): (f64, f64, f64, f64, f64) = (0.0, 0.0, 0.0, f64::INFINITY, 0.0);
    let h = 1e-5;
    for i in 1..=m {
        for sign in [1.0, -1.0] {
            let x = sign * i as f64 / m as f64;
            c1 = c1.max((raw_extension(ph, b, x, 0.0).0 - ph.theta(x)).norm());
            let z = C64::new(x, x);
            c2 = c2.max((raw_extension(ph, b, x, x).0 - 0.5 * ph.theta2(0.0) * z * z).norm());
            for j in 1..i {
                let y = sign * j as f64 / m as f64;
                let (v, d) = raw_extension(ph, b, x, y);
                kk = kk.max(d.norm() / (y * y));
                k = k.min(v.im / (x * y));
                let fx = (raw_extension(ph, b, x + h, y).0 - raw_extension(ph, b, x - h, y).0) / (2.0 * h);
                let fy = (raw_extension(ph, b, x, y + h).0 - raw_extension(ph, b, x, y - h).0) / (2.0 * h);
                fd = fd.max((0.5 * (fx + I * fy) - d).norm());
            }
        }
    }
    ConditionReport { phase: ph.name().to_string(), c1_max: c1, c2_max: c2, big_k_fit: kk, k_fit: k, fd_max: fd }
}
