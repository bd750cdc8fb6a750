//! Non-analytic extensions Θ(x,y) of θ and Φ(x,y) of φ off the real axis,
//! with closed-form ∂̄ = ½(∂ₓ + i∂ᵧ), their numerical certification, the
//! matrices W₀ and W = D̂W₀D̂⁻¹, and the Cauchy-operator norm estimate.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::asymptotics::{inverse, mat_mul, AsymptoticContext, Mat2};
use crate::equilibrium::EquilibriumMeasure;
use crate::error::{Error, Result};
use crate::quad;
use crate::C64;

const I: C64 = C64 { re: 0.0, im: 1.0 };
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Smooth step: 0 for t ≤ 0, 1 for t ≥ 1, ½ + ½tanh((t−½)/(t(1−t))) between.
pub fn bump(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        0.5 + 0.5 * ((t - 0.5) / (t * (1.0 - t))).tanh()
    }
}

/// B′(t).
pub fn bump_prime(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    let d = t * (1.0 - t);
    let s = (t - 0.5) / d;
    let e = (-2.0 * s.abs()).exp();
    // sech²s without overflow
    let sech2 = 4.0 * e / ((1.0 + e) * (1.0 + e));
    0.5 * sech2 * (t * t - t + 0.5) / (d * d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtensionKind {
    Theta,
    PhiAlpha,
    PhiBeta,
}

/// One of Θ (on α<x<β, |y|<δ), Φ on R_α or Φ on R_β.
#[derive(Clone)]
pub struct ExtensionField {
    eq: Arc<EquilibriumMeasure>,
    pub delta: f64,
    pub a_glue: f64,
    pub b_glue: f64,
    pub kind: ExtensionKind,
    hpa: f64,
    hpb: f64,
}

impl std::fmt::Debug for ExtensionField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExtensionField")
            .field("field", &self.eq.field().id())
            .field("kind", &self.kind)
            .field("delta", &self.delta)
            .finish()
    }
}

/// Weighted blend B·hol + (1−B)·base with its ∂̄, given t and ∂̄t.
fn blend(t: f64, dt: C64, hol: C64, base: impl FnOnce() -> (C64, C64)) -> (C64, C64) {
    let b = bump(t);
    if b == 1.0 {
        return (hol, ZERO);
    }
    let (v0, d0) = base();
    (b * hol + (1.0 - b) * v0, bump_prime(t) * dt * (hol - v0) + (1.0 - b) * d0)
}

impl ExtensionField {
    /// Default strip half-height δ = (β−α)/8.
    pub fn new(eq: Arc<EquilibriumMeasure>, kind: ExtensionKind) -> Result<Self> {
        let d = (eq.beta() - eq.alpha()) / 8.0;
        Self::with_delta(eq, kind, d)
    }

    pub fn with_delta(eq: Arc<EquilibriumMeasure>, kind: ExtensionKind, delta: f64) -> Result<Self> {
        let w = eq.beta() - eq.alpha();
        if !(delta > 0.0 && delta < w / 3.0) {
            return Err(Error::Validation(format!("delta={delta} must lie in (0, {})", w / 3.0)));
        }
        let hpa = eq.h_alpha_prime()?;
        let hpb = eq.h_beta_prime()?;
        Ok(Self { a_glue: eq.alpha() + w / 3.0, b_glue: eq.beta() - w / 3.0, eq, delta, kind, hpa, hpb })
    }

    pub fn equilibrium(&self) -> &EquilibriumMeasure {
        &self.eq
    }

    fn alpha(&self) -> f64 {
        self.eq.alpha()
    }

    fn beta(&self) -> f64 {
        self.eq.beta()
    }

    /// Limits of the endpoint ratios: (h_α′(α), −h_β′(β)).
    pub fn endpoint_limits(&self) -> (f64, f64) {
        (self.hpa, -self.hpb)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (a, b, d) = (self.alpha(), self.beta(), self.delta);
        match self.kind {
            ExtensionKind::Theta => x > a && x < b && y.abs() < d,
            ExtensionKind::PhiAlpha => x > a - 2.0 * d && x < a && y >= 0.0 && y < d,
            ExtensionKind::PhiBeta => x > b && x < b + 2.0 * d && y <= 0.0 && y > -d,
        }
    }

    /// (value, ∂̄ value) at (x, y).
    pub fn eval(&self, x: f64, y: f64) -> Result<(C64, C64)> {
        if !self.contains(x, y) {
            return Err(Error::Domain(format!("({x}, {y}) is outside the {:?} rectangle", self.kind)));
        }
        Ok(self.raw(x, y))
    }

    fn hb(&self, x: f64) -> (f64, f64) {
        (self.eq.h_beta(x).unwrap_or(f64::NAN), self.eq.h_beta_deriv(x).unwrap_or(f64::NAN))
    }

    fn ha(&self, x: f64) -> (f64, f64) {
        (self.eq.h_alpha(x).unwrap_or(f64::NAN), self.eq.h_alpha_deriv(x).unwrap_or(f64::NAN))
    }

    /// [h(x) + i(h(x+y) − h(x))] and ∂̄ of it.
    fn cartesian(h: impl Fn(f64) -> (f64, f64), x: f64, y: f64) -> (C64, C64) {
        let (h0, d0) = h(x);
        let (h1, d1) = h(x + y);
        (C64::new(h0, h1 - h0), 0.5 * (I - 1.0) * (d1 - d0))
    }

    fn theta_beta(&self, x: f64, y: f64) -> (C64, C64) {
        let z = C64::new(x, y);
        let r = self.beta() - z;
        let d = self.beta() - x;
        let t = y.abs() / d;
        let dt = 0.5 * C64::new(y.abs() / (d * d), y.signum() / d);
        let hol = -self.hpb * r.powf(1.5);
        blend(t, dt, hol, || {
            let s = r.sqrt();
            let (c, dc) = Self::cartesian(|u| self.hb(u), x, y);
            (s * c, s * dc)
        })
    }

    /// 2π − Θ_α and its ∂̄, without forming 2π − (2π − ·).
    fn theta_alpha_complement(&self, x: f64, y: f64) -> (C64, C64) {
        let z = C64::new(x, y);
        let r = z - self.alpha();
        let d = x - self.alpha();
        let t = y.abs() / d;
        let dt = 0.5 * C64::new(-y.abs() / (d * d), y.signum() / d);
        let hol = self.hpa * r.powf(1.5);
        blend(t, dt, hol, || {
            let s = r.sqrt();
            let (c, dc) = Self::cartesian(|u| self.ha(u), x, y);
            (s * c, s * dc)
        })
    }

    fn theta_alpha(&self, x: f64, y: f64) -> (C64, C64) {
        let (v, d) = self.theta_alpha_complement(x, y);
        (2.0 * PI - v, -d)
    }

    fn theta(&self, x: f64, y: f64) -> (C64, C64) {
        let w = self.b_glue - self.a_glue;
        let s = (x - self.a_glue) / w;
        let g = bump(s);
        if g == 0.0 {
            return self.theta_alpha(x, y);
        }
        if g == 1.0 {
            return self.theta_beta(x, y);
        }
        let (vb, db) = self.theta_beta(x, y);
        let (va, da) = self.theta_alpha(x, y);
        (g * vb + (1.0 - g) * va, 0.5 * bump_prime(s) / w * (vb - va) + g * db + (1.0 - g) * da)
    }

    fn phi_beta(&self, x: f64, y: f64) -> (C64, C64) {
        let z = C64::new(x, y);
        let r = z - self.beta();
        let d = x - self.beta();
        let t = y.abs() / d;
        let dt = 0.5 * C64::new(-y.abs() / (d * d), y.signum() / d);
        let hol = -self.hpb * r.powf(1.5);
        blend(t, dt, hol, || {
            let s = r.sqrt();
            let (c, dc) = Self::cartesian(|u| self.hb(u), x, y);
            (-s * c, -s * dc)
        })
    }

    fn phi_alpha(&self, x: f64, y: f64) -> (C64, C64) {
        let z = C64::new(x, y);
        let r = self.alpha() - z;
        let d = self.alpha() - x;
        let t = y.abs() / d;
        let dt = 0.5 * C64::new(y.abs() / (d * d), y.signum() / d);
        let hol = self.hpa * r.powf(1.5);
        blend(t, dt, hol, || {
            let s = r.sqrt();
            let (c, dc) = Self::cartesian(|u| self.ha(u), x, y);
            (-s * c, -s * dc)
        })
    }

    fn raw(&self, x: f64, y: f64) -> (C64, C64) {
        match self.kind {
            ExtensionKind::Theta => self.theta(x, y),
            ExtensionKind::PhiAlpha => self.phi_alpha(x, y),
            ExtensionKind::PhiBeta => self.phi_beta(x, y),
        }
    }

    /// G_α = (2π−Θ)/(z−α)^{3/2} left of the midpoint, G_β = Θ/(β−z)^{3/2} right of it;
    /// H_α = Φ/(α−z)^{3/2} and H_β = Φ/(z−β)^{3/2} for the Φ kinds.
    pub fn endpoint_ratio(&self, x: f64, y: f64) -> Result<C64> {
        let v = self.eval(x, y)?.0;
        Ok(self.ratio_of(v, x, y))
    }

    fn ratio_of(&self, v: C64, x: f64, y: f64) -> C64 {
        let z = C64::new(x, y);
        match self.kind {
            ExtensionKind::Theta if x > 0.5 * (self.alpha() + self.beta()) => v / (self.beta() - z).powf(1.5),
            ExtensionKind::Theta => {
                let comp = if x <= self.a_glue { self.theta_alpha_complement(x, y).0 } else { 2.0 * PI - v };
                comp / (z - self.alpha()).powf(1.5)
            }
            ExtensionKind::PhiAlpha => v / (self.alpha() - z).powf(1.5),
            ExtensionKind::PhiBeta => v / (z - self.beta()).powf(1.5),
        }
    }

    fn ratio_limit(&self, x: f64) -> (f64, f64) {
        let (a, b) = (self.alpha(), self.beta());
        match self.kind {
            ExtensionKind::Theta if x > 0.5 * (a + b) => (b, -self.hpb),
            ExtensionKind::Theta => (a, self.hpa),
            ExtensionKind::PhiAlpha => (a, self.hpa),
            ExtensionKind::PhiBeta => (b, -self.hpb),
        }
    }

    /// Centred-difference ∂̄ with step h (no domain check).
    pub fn dbar_fd(&self, x: f64, y: f64, h: f64) -> C64 {
        let fx = (self.raw(x + h, y).0 - self.raw(x - h, y).0) / (2.0 * h);
        let fy = (self.raw(x, y + h).0 - self.raw(x, y - h).0) / (2.0 * h);
        0.5 * (fx + I * fy)
    }
}

pub fn theta_extension(ext: &ExtensionField, x: f64, y: f64) -> Result<(C64, C64)> {
    if ext.kind != ExtensionKind::Theta {
        return Err(Error::Validation("theta_extension needs a Theta extension".into()));
    }
    ext.eval(x, y)
}

pub fn phi_extension(ext: &ExtensionField, x: f64, y: f64) -> Result<(C64, C64)> {
    if ext.kind == ExtensionKind::Theta {
        return Err(Error::Validation("phi_extension needs a PhiAlpha or PhiBeta extension".into()));
    }
    ext.eval(x, y)
}

/// Measured constants of one extension on an nx × ny grid.
#[derive(Debug, Clone, Serialize)]
pub struct CertifyReport {
    pub field: String,
    pub kind: ExtensionKind,
    pub delta: f64,
    pub grid: [usize; 2],
    /// max |Θ(x,0) − θ(x)| or |Φ(x,0) − φ(x)|
    pub boundary_trace_max: f64,
    /// max deviation of G or H from its endpoint limit on the diagonals
    pub diagonal_identity_max: f64,
    /// max |∂̄·|/(|y||z−α|^{1/2}|z−β|^{1/2})
    pub big_k_fit: f64,
    /// Θ: min(k_upper, k_lower); Φ: min Re Φ/|z−endpoint|^{3/2} on the lens under the contour
    pub k_fit: f64,
    pub k_fit_upper: Option<f64>,
    pub k_fit_lower: Option<f64>,
    /// Φ only: the same minimum over the whole rectangle
    pub k_fit_rectangle: Option<f64>,
    /// max |G − G(endpoint)|/|z − endpoint| for |z − endpoint| < δ
    pub endpoint_linear_max: f64,
    pub fd_step: f64,
    pub fd_max: f64,
    pub fd_points: usize,
    pub fd_excluded: usize,
}

struct Sample {
    x: f64,
    y: f64,
    v: C64,
    d: C64,
    fd: Option<C64>,
}

pub const FD_STEP: f64 = 1e-5;

/// Grid certification of Properties 1–3. Points within δ/4 of α or β are left out of the
/// finite-difference comparison.
pub fn certify(ext: &ExtensionField, nx: usize, ny: usize) -> Result<CertifyReport> {
    if nx < 50 || ny < 2 {
        return Err(Error::Validation(format!("certify needs nx >= 50 and ny >= 2 (got {nx}x{ny})")));
    }
    let (a, b, d) = (ext.alpha(), ext.beta(), ext.delta);
    let (x0, x1) = match ext.kind {
        ExtensionKind::Theta => (a, b),
        ExtensionKind::PhiAlpha => (a - 2.0 * d, a),
        ExtensionKind::PhiBeta => (b, b + 2.0 * d),
    };
    let xs: Vec<f64> = (0..nx).map(|i| x0 + (x1 - x0) * (i as f64 + 0.5) / nx as f64).collect();
    let ys: Vec<f64> = match ext.kind {
        ExtensionKind::Theta => (0..ny).map(|j| d * (2.0 * j as f64 + 1.0 - ny as f64) / ny as f64).collect(),
        ExtensionKind::PhiAlpha => (0..ny).map(|j| d * (j as f64 + 0.5) / ny as f64).collect(),
        ExtensionKind::PhiBeta => (0..ny).map(|j| -d * (j as f64 + 0.5) / ny as f64).collect(),
    };
    let excl = d / 4.0;
    let pts: Vec<(f64, f64)> = ys.iter().flat_map(|&y| xs.iter().map(move |&x| (x, y))).collect();
    let samples: Vec<Sample> = pts
        .par_iter()
        .map(|&(x, y)| {
            let (v, dv) = ext.raw(x, y);
            let z = C64::new(x, y);
            let near = (z - a).norm() < excl || (z - b).norm() < excl;
            let fd = if near { None } else { Some(ext.dbar_fd(x, y, FD_STEP)) };
            Sample { x, y, v, d: dv, fd }
        })
        .collect();

    let boundary_trace_max = xs
        .par_iter()
        .map(|&x| {
            let exact = match ext.kind {
                ExtensionKind::Theta => ext.eq.theta(x),
                _ => ext.eq.phi(x),
            }
            .unwrap_or(f64::NAN);
            let (v, dv) = ext.raw(x, 0.0);
            ((v.re - exact).abs().max(v.im.abs())).max(dv.norm())
        })
        .reduce(|| 0.0, nan_max);

    // diagonals |y| = |x − endpoint| inside the rectangle
    let m = nx / 2;
    let mut diag_pts = vec![];
    for k in 0..m {
        let r = d * (k as f64 + 0.5) / m as f64;
        match ext.kind {
            ExtensionKind::Theta => {
                diag_pts.extend([(b - r, r), (b - r, -r), (a + r, r), (a + r, -r)]);
            }
            ExtensionKind::PhiAlpha => diag_pts.push((a - r, r)),
            ExtensionKind::PhiBeta => diag_pts.push((b + r, -r)),
        }
    }
    let diagonal_identity_max = diag_pts
        .par_iter()
        .map(|&(x, y)| {
            let g = ext.ratio_of(ext.raw(x, y).0, x, y);
            (g - ext.ratio_limit(x).1).norm()
        })
        .reduce(|| 0.0, nan_max);

    let mut big_k: f64 = 0.0;
    let (mut k_up, mut k_lo, mut k_lens, mut k_rect) = (f64::INFINITY, f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut lin: f64 = 0.0;
    let (mut fd_max, mut fd_points, mut fd_excluded): (f64, usize, usize) = (0.0, 0, 0);
    for s in &samples {
        let z = C64::new(s.x, s.y);
        if s.y != 0.0 {
            let scale = s.y.abs() * ((z - a).norm() * (z - b).norm()).sqrt();
            big_k = nan_max(big_k, s.d.norm() / scale);
        }
        match ext.kind {
            ExtensionKind::Theta => {
                let q = s.v.im / s.y.abs().powf(1.5);
                if s.y > 0.0 {
                    k_up = nan_min(k_up, -q);
                } else if s.y < 0.0 {
                    k_lo = nan_min(k_lo, q);
                }
            }
            _ => {
                let (e, _) = ext.ratio_limit(s.x);
                let q = s.v.re / (z - e).norm().powf(1.5);
                k_rect = nan_min(k_rect, q);
                let dist = (s.x - e).abs();
                if s.y.abs() < dist.min(2.0 * d - dist) {
                    k_lens = nan_min(k_lens, q);
                }
            }
        }
        let (e, lim) = ext.ratio_limit(s.x);
        let r = (z - e).norm();
        if r < d {
            lin = nan_max(lin, (ext.ratio_of(s.v, s.x, s.y) - lim).norm() / r);
        }
        match s.fd {
            Some(f) => {
                fd_points += 1;
                fd_max = nan_max(fd_max, (f - s.d).norm());
            }
            None => fd_excluded += 1,
        }
    }
    let (k_fit, k_fit_upper, k_fit_lower, k_fit_rectangle) = match ext.kind {
        ExtensionKind::Theta => (k_up.min(k_lo), Some(k_up), Some(k_lo), None),
        _ => (k_lens, None, None, Some(k_rect)),
    };
    Ok(CertifyReport {
        field: ext.eq.field().id().to_string(),
        kind: ext.kind,
        delta: d,
        grid: [nx, ny],
        boundary_trace_max,
        diagonal_identity_max,
        big_k_fit: big_k,
        k_fit,
        k_fit_upper,
        k_fit_lower,
        k_fit_rectangle,
        endpoint_linear_max: lin,
        fd_step: FD_STEP,
        fd_max,
        fd_points,
        fd_excluded,
    })
}

fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

fn nan_min(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.min(b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Upper,
    Lower,
    Alpha,
    Beta,
    Outside,
}

/// Θ together with Φ on both rectangles, sharing δ.
#[derive(Debug, Clone)]
pub struct ExtensionSet {
    pub theta: ExtensionField,
    pub phi_alpha: ExtensionField,
    pub phi_beta: ExtensionField,
}

#[derive(Debug, Clone, Copy)]
pub struct WSample {
    pub region: Region,
    pub w0: Mat2,
    pub w: Mat2,
}

impl ExtensionSet {
    pub fn new(eq: Arc<EquilibriumMeasure>) -> Result<Self> {
        let d = (eq.beta() - eq.alpha()) / 8.0;
        Self::with_delta(eq, d)
    }

    pub fn with_delta(eq: Arc<EquilibriumMeasure>, delta: f64) -> Result<Self> {
        Ok(Self {
            theta: ExtensionField::with_delta(eq.clone(), ExtensionKind::Theta, delta)?,
            phi_alpha: ExtensionField::with_delta(eq.clone(), ExtensionKind::PhiAlpha, delta)?,
            phi_beta: ExtensionField::with_delta(eq, ExtensionKind::PhiBeta, delta)?,
        })
    }

    pub fn delta(&self) -> f64 {
        self.theta.delta
    }

    /// Lens regions between the real axis and the contour legs of slope ±1.
    pub fn region(&self, x: f64, y: f64) -> Region {
        let (a, b, d) = (self.theta.alpha(), self.theta.beta(), self.delta());
        if x > a && x < b {
            let h = d.min(x - a).min(b - x);
            if y > 0.0 && y < h {
                return Region::Upper;
            }
            if y < 0.0 && y > -h {
                return Region::Lower;
            }
        } else if x > a - 2.0 * d && x < a {
            if y > 0.0 && y < (a - x).min(x - a + 2.0 * d) {
                return Region::Alpha;
            }
        } else if x > b && x < b + 2.0 * d && y < 0.0 && -y < (x - b).min(b + 2.0 * d - x) {
            return Region::Beta;
        }
        Region::Outside
    }

    /// The extension used in `region` and its (value, ∂̄).
    fn ext_values(&self, region: Region, x: f64, y: f64) -> (C64, C64) {
        match region {
            Region::Upper | Region::Lower => self.theta.raw(x, y),
            Region::Alpha => self.phi_alpha.raw(x, y),
            Region::Beta => self.phi_beta.raw(x, y),
            Region::Outside => (ZERO, ZERO),
        }
    }

    /// W₀ at (x, y) for degree n; zero with `Region::Outside` off the lenses.
    pub fn w0(&self, n: usize, x: f64, y: f64) -> (Region, Mat2) {
        let r = self.region(x, y);
        let (v, dv) = self.ext_values(r, x, y);
        (r, w0_from(r, n as f64, v, dv))
    }

    /// (W₀, D̂W₀D̂⁻¹) at (x, y), with D̂ the model parametrix of `ctx`.
    pub fn w_matrices(&self, ctx: &AsymptoticContext, x: f64, y: f64) -> Result<WSample> {
        let (region, w0) = self.w0(ctx.n, x, y);
        if region == Region::Outside {
            return Ok(WSample { region, w0, w: w0 });
        }
        let dh = ctx.model_parametrix(C64::new(x, y))?;
        let w = mat_mul(&mat_mul(&dh, &w0), &inverse(&dh));
        Ok(WSample { region, w0, w })
    }
}

fn w0_from(r: Region, n: f64, v: C64, dv: C64) -> Mat2 {
    let mut m = [[ZERO; 2]; 2];
    match r {
        Region::Upper => m[1][0] = I * n * (-I * n * v).exp() * dv,
        Region::Lower => m[1][0] = I * n * (I * n * v).exp() * dv,
        Region::Alpha => m[0][1] = n * (-n * v).exp() * dv,
        Region::Beta => m[0][1] = -n * (-n * v).exp() * dv,
        Region::Outside => {}
    }
    m
}

/// Frobenius norm.
pub fn frobenius(m: &Mat2) -> f64 {
    m.iter().flatten().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Integration layout for sup_z (1/π)∬‖W(u,v)‖/|w − z| du dv.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct KnormGrid {
    /// u cells over [α−2δ, β+2δ]
    pub nu: usize,
    /// v nodes over (−δ, δ), half on each side
    pub nv: usize,
    /// evaluation points on the real axis
    pub points: usize,
}

impl Default for KnormGrid {
    fn default() -> Self {
        Self { nu: 200, nv: 60, points: 25 }
    }
}

/// Cell edges in u, graded nodes in v, and evaluation abscissae.
#[derive(Debug, Clone)]
pub struct CauchyQuadrature {
    pub u_edges: Vec<f64>,
    pub v_nodes: Vec<f64>,
    pub v_weights: Vec<f64>,
    pub eval_x: Vec<f64>,
}

impl CauchyQuadrature {
    pub fn new(set: &ExtensionSet, grid: &KnormGrid) -> Result<Self> {
        if grid.nu == 0 || grid.nu > 200 || grid.nv < 2 || grid.nv > 60 || !grid.nv.is_multiple_of(2) {
            return Err(Error::Validation(format!(
                "knorm grid {}x{} outside 1..=200 by 2..=60 (even)",
                grid.nu, grid.nv
            )));
        }
        if grid.points == 0 || grid.points > 25 {
            return Err(Error::Validation(format!("knorm evaluation points {} outside 1..=25", grid.points)));
        }
        let (a, b, d) = (set.theta.alpha(), set.theta.beta(), set.delta());
        let (u0, u1) = (a - 2.0 * d, b + 2.0 * d);
        let u_edges = (0..=grid.nu).map(|i| u0 + (u1 - u0) * i as f64 / grid.nu as f64).collect();
        // v = δs³ concentrates nodes near the axis
        let rule = quad::gauss_legendre(grid.nv / 2);
        let (mut v_nodes, mut v_weights) = (vec![], vec![]);
        for sign in [-1.0, 1.0] {
            for (&t, &w) in rule.x.iter().zip(&rule.w) {
                let s = 0.5 * (t + 1.0);
                v_nodes.push(sign * d * s * s * s);
                v_weights.push(0.5 * w * 3.0 * d * s * s);
            }
        }
        let eval_x = (0..grid.points).map(|k| u0 + (u1 - u0) * (k as f64 + 0.5) / grid.points as f64).collect();
        Ok(Self { u_edges, v_nodes, v_weights, eval_x })
    }

    pub fn cell_mid(&self, i: usize) -> f64 {
        0.5 * (self.u_edges[i] + self.u_edges[i + 1])
    }

    /// (sup, argmax x) of the Cauchy integral for cell-constant norms, indexed [j·nu + i].
    pub fn sup(&self, norms: &[f64]) -> (f64, f64) {
        let nu = self.u_edges.len() - 1;
        let vals: Vec<f64> = self
            .eval_x
            .iter()
            .map(|&x| {
                let mut acc = 0.0;
                for (j, (&v, &wv)) in self.v_nodes.iter().zip(&self.v_weights).enumerate() {
                    let av = v.abs();
                    let mut row = 0.0;
                    for i in 0..nu {
                        let nm = norms[j * nu + i];
                        if nm != 0.0 {
                            let c = ((self.u_edges[i + 1] - x) / av).asinh() - ((self.u_edges[i] - x) / av).asinh();
                            row += nm * c;
                        }
                    }
                    acc += wv * row;
                }
                acc / PI
            })
            .collect();
        let mut best = (0.0, self.eval_x[0]);
        for (k, &v) in vals.iter().enumerate() {
            if v > best.0 {
                best = (v, self.eval_x[k]);
            }
        }
        best
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct KnormRow {
    pub n: usize,
    pub estimate: f64,
    pub argmax_x: f64,
    pub w_max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct KnormReport {
    pub field: String,
    pub delta: f64,
    pub grid: KnormGrid,
    pub rows: Vec<KnormRow>,
    /// least-squares C in estimate ≈ C n^{−1/3} log n
    pub fit_c: f64,
    /// rms of estimate/(C n^{−1/3} log n) − 1
    pub fit_residual: f64,
    pub decreasing: bool,
    /// estimate(first)/estimate(last)
    pub ratio: f64,
    /// the same ratio for n^{−1/3} log n
    pub predicted_ratio: f64,
}

fn rate(n: usize) -> f64 {
    let nf = n as f64;
    nf.powf(-1.0 / 3.0) * nf.ln()
}

/// Norm estimate of the ∂̄ Cauchy operator for each n (N = c·n).
pub fn knorm_estimate(set: &ExtensionSet, n_list: &[usize], grid: &KnormGrid) -> Result<KnormReport> {
    if n_list.len() < 2 || n_list.iter().any(|&n| n < 2) {
        return Err(Error::Validation("knorm needs at least two degrees n >= 2".into()));
    }
    let cq = CauchyQuadrature::new(set, grid)?;
    let nu = grid.nu;
    let eq = set.theta.eq.clone();
    let c = eq.c();
    let cells: Vec<(usize, usize)> = (0..cq.v_nodes.len()).flat_map(|j| (0..nu).map(move |i| (j, i))).collect();
    let base: Vec<(Region, C64, C64)> = cells
        .par_iter()
        .map(|&(j, i)| {
            let (x, y) = (cq.cell_mid(i), cq.v_nodes[j]);
            let r = set.region(x, y);
            let (v, dv) = set.ext_values(r, x, y);
            (r, v, dv)
        })
        .collect();
    let mut rows = vec![];
    for &n in n_list {
        let big_n = (c * n as f64).round() as usize;
        let ctx = AsymptoticContext::new(eq.clone(), n, big_n)?;
        let norms: Vec<f64> = cells
            .par_iter()
            .zip(&base)
            .map(|(&(j, i), &(r, v, dv))| {
                if r == Region::Outside {
                    return Ok(0.0);
                }
                let w0 = w0_from(r, n as f64, v, dv);
                let dh = ctx.model_parametrix(C64::new(cq.cell_mid(i), cq.v_nodes[j]))?;
                Ok(frobenius(&mat_mul(&mat_mul(&dh, &w0), &inverse(&dh))))
            })
            .collect::<Result<_>>()?;
        let (estimate, argmax_x) = cq.sup(&norms);
        let w_max = norms.iter().cloned().fold(0.0, f64::max);
        rows.push(KnormRow { n, estimate, argmax_x, w_max });
    }
    let (num, den) = rows.iter().fold((0.0, 0.0), |(p, q), r| (p + r.estimate * rate(r.n), q + rate(r.n) * rate(r.n)));
    let fit_c = num / den;
    let fit_residual =
        (rows.iter().map(|r| (r.estimate / (fit_c * rate(r.n)) - 1.0).powi(2)).sum::<f64>() / rows.len() as f64).sqrt();
    let decreasing = rows.windows(2).all(|w| w[1].estimate < w[0].estimate);
    let (f, l) = (&rows[0], &rows[rows.len() - 1]);
    Ok(KnormReport {
        field: eq.field().id().to_string(),
        delta: set.delta(),
        grid: *grid,
        ratio: f.estimate / l.estimate,
        predicted_ratio: rate(f.n) / rate(l.n),
        rows,
        fit_c,
        fit_residual,
        decreasing,
    })
}
