//! Equilibrium measure of a convex field at ratio c = N/n (one-interval support).
//!
//! With m = (α+β)/2, r = (β−α)/2 and s = m + r cos t, the endpoints solve
//! ∫₀^π V′(s) dt = 0 and c r ∫₀^π cos t V′(s) dt = 2π. Everything else is
//! built from h(x) = (1/π)∫₀^π (V′(s) − V′(x))/(s − x) dt.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{ExternalField, Smoothness};
use crate::quad::{self, Nodes};

pub const DEFAULT_QUAD_ORDER: usize = 256;

const DQ_SWITCH: f64 = 1e-9;
const NEWTON_MAX: usize = 100;
const GL_ORDER: usize = 20;
const GRADE_LEVELS: usize = 26;

/// Side of the cut for boundary values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Auto,
    Plus,
    Minus,
}

/// ∫₀^π f(t) dt rule adapted to the breakpoints of V″ mapped through s = m + r cos t.
fn trig_rule(field: &ExternalField, mid: f64, rad: f64, order: usize) -> Nodes {
    let cuts: Vec<f64> = field
        .breakpoints()
        .iter()
        .filter(|&&b| b > mid - rad && b < mid + rad)
        .map(|&b| ((b - mid) / rad).clamp(-1.0, 1.0).acos())
        .collect();
    if cuts.is_empty() {
        let h = PI / order as f64;
        Nodes { x: (0..order).map(|k| (k as f64 + 0.5) * h).collect(), w: vec![h; order] }
    } else {
        quad::panels(0.0, PI, &cuts, 32, PI / (order as f64 / 32.0).max(4.0))
    }
}

#[inline]
fn diff_quot(field: &ExternalField, s: f64, x: f64, v1x: f64) -> f64 {
    if (s - x).abs() < DQ_SWITCH {
        field.v2(x)
    } else {
        (field.v1(s) - v1x) / (s - x)
    }
}

fn moment_residual(field: &ExternalField, c: f64, mid: f64, rad: f64, order: usize) -> ([f64; 2], [[f64; 2]; 2]) {
    let rule = trig_rule(field, mid, rad, order);
    let (mut i0, mut i1, mut d0, mut d1, mut d2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&t, &w) in rule.x.iter().zip(&rule.w) {
        let ct = t.cos();
        let s = mid + rad * ct;
        let v1 = field.v1(s);
        let v2 = field.v2(s);
        i0 += w * v1;
        i1 += w * ct * v1;
        d0 += w * v2;
        d1 += w * ct * v2;
        d2 += w * ct * ct * v2;
    }
    let f = [i0, c * rad * i1 - 2.0 * PI];
    let jac = [[d0, d1], [c * rad * d1, c * i1 + c * rad * d2]];
    (f, jac)
}

/// Solve the endpoint conditions by damped Newton in (m, r).
pub fn solve_endpoints(field: &ExternalField, c: f64, bracket: (f64, f64)) -> Result<(f64, f64)> {
    solve_endpoints_with(field, c, bracket, DEFAULT_QUAD_ORDER).map(|(a, b, _)| (a, b))
}

fn solve_endpoints_with(field: &ExternalField, c: f64, bracket: (f64, f64), order: usize) -> Result<(f64, f64, usize)> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Validation(format!("c must be positive, got {c}")));
    }
    if !(bracket.1 > bracket.0) {
        return Err(Error::Validation("bracket must satisfy lo < hi".into()));
    }
    let mut mid = 0.5 * (bracket.0 + bracket.1);
    let mut rad = 0.25 * (bracket.1 - bracket.0);
    let norm = |f: &[f64; 2]| f[0].abs().max(f[1].abs());
    let (mut f, mut jac) = moment_residual(field, c, mid, rad, order);
    for it in 0..NEWTON_MAX {
        if norm(&f) < 1e-12 {
            return Ok((mid - rad, mid + rad, it));
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det == 0.0 || !det.is_finite() {
            return Err(Error::Convergence("singular Jacobian in endpoint Newton".into()));
        }
        let dm = (f[0] * jac[1][1] - f[1] * jac[0][1]) / det;
        let dr = (jac[0][0] * f[1] - jac[1][0] * f[0]) / det;
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let (nm, nr) = (mid - step * dm, rad - step * dr);
            if nr > 0.0 {
                let (nf, nj) = moment_residual(field, c, nm, nr, order);
                if nf.iter().all(|v| v.is_finite()) && norm(&nf) < norm(&f) {
                    mid = nm;
                    rad = nr;
                    f = nf;
                    jac = nj;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            if norm(&f) < 1e-11 {
                return Ok((mid - rad, mid + rad, it));
            }
            return Err(Error::Convergence(format!("endpoint Newton stalled at residual {:.3e}", norm(&f))));
        }
    }
    if norm(&f) < 1e-11 {
        return Ok((mid - rad, mid + rad, NEWTON_MAX));
    }
    Err(Error::Convergence(format!("endpoint Newton did not converge in {NEWTON_MAX} iterations")))
}

/// Piecewise Chebyshev interpolant (second-kind points, barycentric form).
#[derive(Debug, Clone)]
struct PiecewiseCheb {
    edges: Vec<f64>,
    vals: Vec<Vec<f64>>,
    nodes: Vec<f64>,
    bw: Vec<f64>,
}

impl PiecewiseCheb {
    fn new(edges: Vec<f64>, deg: usize, f: impl Fn(f64) -> f64 + Sync) -> Self {
        use rayon::prelude::*;
        let nodes: Vec<f64> = (0..=deg).map(|j| -(PI * j as f64 / deg as f64).cos()).collect();
        let bw: Vec<f64> = (0..=deg)
            .map(|j| {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == deg {
                    0.5 * s
                } else {
                    s
                }
            })
            .collect();
        let vals = edges
            .par_windows(2)
            .map(|e| {
                let (a, b) = (e[0], e[1]);
                nodes.iter().map(|&u| f(0.5 * (a + b) + 0.5 * (b - a) * u)).collect()
            })
            .collect();
        Self { edges, vals, nodes, bw }
    }

    fn contains(&self, x: f64) -> bool {
        x >= self.edges[0] && x <= *self.edges.last().unwrap()
    }

    fn eval(&self, x: f64) -> f64 {
        let k = match self.edges.binary_search_by(|e| e.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(self.edges.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.edges.len() - 2),
        };
        let (a, b) = (self.edges[k], self.edges[k + 1]);
        let u = (2.0 * x - a - b) / (b - a);
        let vals = &self.vals[k];
        let (mut num, mut den) = (0.0, 0.0);
        for ((&node, &bw), &val) in self.nodes.iter().zip(&self.bw).zip(vals) {
            let d = u - node;
            if d == 0.0 {
                return val;
            }
            let t = bw / d;
            num += t * val;
            den += t;
        }
        num / den
    }
}

/// Condition check results with measured margins.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub condition0_smoothness: bool,
    pub condition1_support: bool,
    pub condition2_strict: bool,
    pub condition3_single_interval: bool,
    pub all_pass: bool,
    pub min_h_on_support: f64,
    pub min_h_extended: f64,
    pub min_phi_margin: f64,
    pub min_h_beta_inside: f64,
    pub max_h_beta_outside: f64,
    pub min_h_alpha_inside: f64,
    pub max_h_alpha_outside: f64,
    pub h_alpha_prime: f64,
    pub h_beta_prime: f64,
    pub mass_defect: f64,
}

/// Scalars for serialisation.
#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumSummary {
    pub field: String,
    pub c: f64,
    pub quad_order: usize,
    pub alpha: f64,
    pub beta: f64,
    pub ell: f64,
    pub ell_from_alpha: f64,
    pub h_alpha_prime: f64,
    pub h_beta_prime: f64,
    pub newton_iterations: usize,
}

#[derive(Debug, Clone)]
pub struct EquilibriumMeasure {
    field: ExternalField,
    c: f64,
    alpha: f64,
    beta: f64,
    ell: f64,
    ell_alpha: f64,
    quad_order: usize,
    rule: Nodes,
    h_nodes: Vec<(f64, f64)>,
    interp: PiecewiseCheb,
    hp_alpha: f64,
    hp_beta: f64,
    iterations: usize,
}

impl EquilibriumMeasure {
    /// Solve with the default bracket [−growth_hint, growth_hint].
    pub fn solve(field: &ExternalField, c: f64, quad_order: usize) -> Result<Self> {
        let g = field.growth_hint();
        Self::solve_in(field, c, quad_order, (-g, g))
    }

    pub fn solve_in(field: &ExternalField, c: f64, quad_order: usize, bracket: (f64, f64)) -> Result<Self> {
        if quad_order < 8 {
            return Err(Error::Validation("quad_order must be at least 8".into()));
        }
        let (alpha, beta, iterations) = solve_endpoints_with(field, c, bracket, quad_order)?;
        let mid = 0.5 * (alpha + beta);
        let rad = 0.5 * (beta - alpha);
        let rule = trig_rule(field, mid, rad, quad_order);
        let h_direct = |x: f64| -> f64 {
            let v1x = field.v1(x);
            let mut acc = 0.0;
            for (&t, &w) in rule.x.iter().zip(&rule.w) {
                acc += w * diff_quot(field, mid + rad * t.cos(), x, v1x);
            }
            acc / PI
        };
        let h_nodes: Vec<(f64, f64)> = rule.x.iter().map(|&t| (t, h_direct(mid + rad * t.cos()))).collect();

        // interpolation window [α − W, β + W], graded toward breakpoints
        let wdt = 2.0f64.max(beta - alpha);
        let (lo, hi) = (alpha - wdt, beta + wdt);
        let max_len = 0.25f64.min((beta - alpha) / 8.0);
        let mut edges = vec![lo];
        let mut cuts: Vec<f64> = field.breakpoints().iter().copied().filter(|&b| b > lo && b < hi).collect();
        cuts.push(hi);
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let is_break = |p: f64| field.breakpoints().contains(&p);
        let mut start = lo;
        for &cut in &cuts {
            let mut seg = vec![start];
            let (mut a, mut b) = (start, cut);
            let grade_l = is_break(start);
            let grade_r = is_break(cut);
            let span = cut - start;
            if grade_l {
                for k in (1..=12).rev() {
                    seg.push(start + 0.25 * span * 0.25f64.powi(k - 1) * 0.25);
                }
                a = start + 0.25 * span;
            }
            if grade_r {
                b = cut - 0.25 * span;
            }
            let k = (((b - a) / max_len).ceil() as usize).max(1);
            for j in 0..=k {
                seg.push(a + (b - a) * j as f64 / k as f64);
            }
            if grade_r {
                for k in 1..=12 {
                    seg.push(cut - 0.25 * span * 0.25f64.powi(k));
                }
                seg.push(cut);
            }
            seg.sort_by(|p, q| p.partial_cmp(q).unwrap());
            seg.dedup();
            edges.extend(seg.into_iter().skip(1));
            start = cut;
        }
        edges.dedup();
        let interp = PiecewiseCheb::new(edges, 20, h_direct);

        let mut eq = Self {
            field: field.clone(),
            c,
            alpha,
            beta,
            ell: 0.0,
            ell_alpha: 0.0,
            quad_order,
            rule,
            h_nodes,
            interp,
            hp_alpha: 0.0,
            hp_beta: 0.0,
            iterations,
        };
        let hb = eq.h(beta);
        let ha = eq.h(alpha);
        eq.hp_beta = -2.0 * c * (beta - alpha).sqrt() * hb / 3.0;
        eq.hp_alpha = 2.0 * c * (beta - alpha).sqrt() * ha / 3.0;
        let (lb, la) = eq.compute_ell();
        eq.ell = lb;
        eq.ell_alpha = la;
        if (lb - la).abs() > 1e-6 {
            return Err(Error::Resolution(format!("ell from beta ({lb}) and alpha ({la}) disagree; raise quad_order")));
        }
        Ok(eq)
    }

    pub fn field(&self) -> &ExternalField {
        &self.field
    }
    pub fn c(&self) -> f64 {
        self.c
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn mid(&self) -> f64 {
        0.5 * (self.alpha + self.beta)
    }
    pub fn rad(&self) -> f64 {
        0.5 * (self.beta - self.alpha)
    }
    pub fn quad_order(&self) -> usize {
        self.quad_order
    }
    pub fn h_nodes(&self) -> &[(f64, f64)] {
        &self.h_nodes
    }
    pub fn newton_iterations(&self) -> usize {
        self.iterations
    }

    /// ℓ computed at β.
    pub fn ell(&self) -> f64 {
        self.ell
    }

    /// ℓ computed at α (cross-check).
    pub fn ell_from_alpha(&self) -> f64 {
        self.ell_alpha
    }

    pub fn summary(&self) -> EquilibriumSummary {
        EquilibriumSummary {
            field: self.field.id().to_string(),
            c: self.c,
            quad_order: self.quad_order,
            alpha: self.alpha,
            beta: self.beta,
            ell: self.ell,
            ell_from_alpha: self.ell_alpha,
            h_alpha_prime: self.hp_alpha,
            h_beta_prime: self.hp_beta,
            newton_iterations: self.iterations,
        }
    }

    /// Residuals of the two endpoint conditions at the solved pair.
    pub fn endpoint_residuals(&self) -> [f64; 2] {
        moment_residual(&self.field, self.c, self.mid(), self.rad(), self.quad_order).0
    }

    /// h(x) by the trigonometric rule.
    pub fn h(&self, x: f64) -> f64 {
        let (mid, rad) = (self.mid(), self.rad());
        let v1x = self.field.v1(x);
        let mut acc = 0.0;
        for (&t, &w) in self.rule.x.iter().zip(&self.rule.w) {
            acc += w * diff_quot(&self.field, mid + rad * t.cos(), x, v1x);
        }
        acc / PI
    }

    /// h from the cached interpolant where available.
    #[inline]
    fn hf(&self, x: f64) -> f64 {
        if self.interp.contains(x) {
            self.interp.eval(x)
        } else {
            self.h(x)
        }
    }

    fn t_of(&self, x: f64) -> f64 {
        ((x - self.mid()) / self.rad()).clamp(-1.0, 1.0).acos()
    }

    fn t_breaks(&self, lo: f64, hi: f64) -> Vec<f64> {
        self.field
            .breakpoints()
            .iter()
            .filter(|&&b| b > self.alpha && b < self.beta)
            .map(|&b| self.t_of(b))
            .filter(|&t| t > lo && t < hi)
            .collect()
    }

    /// Equilibrium density ψ on [α, β].
    pub fn psi(&self, x: f64) -> Result<f64> {
        if !(x >= self.alpha && x <= self.beta) {
            return Err(Error::Domain(format!("psi: x={x} outside [alpha, beta]")));
        }
        Ok(self.c / (2.0 * PI) * ((x - self.alpha) * (self.beta - x)).sqrt() * self.h(x))
    }

    /// c r² ∫ sin²t h(m + r cos t) dt over [t0, t1].
    fn mass_t(&self, t0: f64, t1: f64) -> f64 {
        if t1 <= t0 {
            return 0.0;
        }
        let (mid, rad) = (self.mid(), self.rad());
        let focus = self.t_breaks(t0, t1);
        let nodes = if focus.is_empty() {
            quad::panels(t0, t1, &[], GL_ORDER, PI / 6.0)
        } else {
            quad::graded(t0, t1, &focus, GL_ORDER, 14, PI / 6.0)
        };
        self.c
            * rad
            * rad
            * nodes.sum(|t| {
                let s = t.sin();
                s * s * self.hf(mid + rad * t.cos())
            })
    }

    /// θ(x) = 2π × (mass of μ right of x).
    pub fn theta(&self, x: f64) -> Result<f64> {
        if !(x >= self.alpha && x <= self.beta) {
            return Err(Error::Domain(format!("theta: x={x} outside [alpha, beta]")));
        }
        Ok(self.mass_t(0.0, self.t_of(x)))
    }

    /// 2π − θ(x), computed directly as 2π × (mass left of x).
    pub fn theta_complement(&self, x: f64) -> Result<f64> {
        if !(x >= self.alpha && x <= self.beta) {
            return Err(Error::Domain(format!("theta: x={x} outside [alpha, beta]")));
        }
        Ok(self.mass_t(self.t_of(x), PI))
    }

    /// φ(x) ≥ 0 off the support.
    pub fn phi(&self, x: f64) -> Result<f64> {
        let (a, b, c) = (self.alpha, self.beta, self.c);
        if x > a && x < b {
            return Err(Error::Domain(format!("phi: x={x} inside the support")));
        }
        if x == a || x == b {
            return Ok(0.0);
        }
        let (base, dir, other) = if x > b { (b, 1.0, a) } else { (a, -1.0, b) };
        let d = (x - base).abs();
        let ubreaks: Vec<f64> = self
            .field
            .breakpoints()
            .iter()
            .filter(|&&p| (p - base) * dir > 0.0 && (p - base).abs() < d)
            .map(|&p| ((p - base).abs() / d).sqrt())
            .collect();
        let nodes = if ubreaks.is_empty() {
            quad::panels(0.0, 1.0, &[], GL_ORDER, 0.25)
        } else {
            quad::graded(0.0, 1.0, &ubreaks, GL_ORDER, 14, 0.25)
        };
        let val = nodes.sum(|u| {
            let s = base + dir * d * u * u;
            u * u * (dir * (s - other)).sqrt() * self.hf(s)
        });
        Ok(2.0 * c * d.powf(1.5) * val)
    }

    fn compute_ell(&self) -> (f64, f64) {
        let (mid, rad, c) = (self.mid(), self.rad(), self.c);
        let mut focus = vec![0.0, PI];
        focus.extend(self.t_breaks(0.0, PI));
        let nodes = quad::graded(0.0, PI, &focus, GL_ORDER, GRADE_LEVELS, PI / 6.0);
        let l2r = (2.0 * rad).ln();
        let (mut ib, mut ia) = (0.0, 0.0);
        for (&t, &w) in nodes.x.iter().zip(&nodes.w) {
            let s = t.sin();
            let wt = w * s * s * self.hf(mid + rad * t.cos());
            ib += wt * (l2r + 2.0 * (0.5 * t).sin().ln());
            ia += wt * (l2r + 2.0 * (0.5 * t).cos().ln());
        }
        let k = c * rad * rad / (2.0 * PI);
        (2.0 * k * ib - c * self.field.v(self.beta), 2.0 * k * ia - c * self.field.v(self.alpha))
    }

    /// g(z) = ∫ log(z − s) ψ(s) ds; real z < β needs an explicit side.
    pub fn g(&self, z: C64, side: Side) -> Result<C64> {
        if z.im == 0.0 && z.re < self.beta && side == Side::Auto {
            return Err(Error::Branch(format!("g: z={} lies on the cut; choose a side", z.re)));
        }
        let (mid, rad, c) = (self.mid(), self.rad(), self.c);
        let mut focus = self.t_breaks(0.0, PI);
        if z.im.abs() < 2.0 * rad && z.re > self.alpha - 2.0 * rad && z.re < self.beta + 2.0 * rad {
            focus.push(self.t_of(z.re));
        }
        let nodes = quad::graded(0.0, PI, &focus, GL_ORDER, GRADE_LEVELS, PI / 6.0);
        let mut acc = C64::new(0.0, 0.0);
        for (&t, &w) in nodes.x.iter().zip(&nodes.w) {
            let s = mid + rad * t.cos();
            let d = z - s;
            let lg = if d.im == 0.0 && d.re < 0.0 {
                let arg = if side == Side::Minus { -PI } else { PI };
                C64::new((-d.re).ln(), arg)
            } else {
                d.ln()
            };
            let sn = t.sin();
            acc += lg * (w * sn * sn * self.hf(s));
        }
        Ok(acc * (c * rad * rad / (2.0 * PI)))
    }

    /// h_α on (−∞, β); None outside.
    pub fn h_alpha(&self, x: f64) -> Option<f64> {
        let a = self.alpha;
        if x >= self.beta {
            None
        } else if x == a {
            Some(0.0)
        } else if x > a {
            Some(self.mass_t(self.t_of(x), PI) / (x - a).sqrt())
        } else {
            Some(-self.phi(x).ok()? / (a - x).sqrt())
        }
    }

    /// h_β on (α, ∞); None outside.
    pub fn h_beta(&self, x: f64) -> Option<f64> {
        let b = self.beta;
        if x <= self.alpha {
            None
        } else if x == b {
            Some(0.0)
        } else if x < b {
            Some(self.mass_t(0.0, self.t_of(x)) / (b - x).sqrt())
        } else {
            Some(-self.phi(x).ok()? / (x - b).sqrt())
        }
    }

    /// (h_α(x), h_β(x)) with None outside the respective windows.
    pub fn h_endpoint_functions(&self, x: f64) -> (Option<f64>, Option<f64>) {
        (self.h_alpha(x), self.h_beta(x))
    }

    /// h_α′(x) from θ′ = −2πψ and φ′.
    pub fn h_alpha_deriv(&self, x: f64) -> Option<f64> {
        let a = self.alpha;
        if (x - a).abs() < 1e-9 * (self.beta - a) {
            return Some(self.hp_alpha);
        }
        let ha = self.h_alpha(x)?;
        Some(self.c * (self.beta - x).sqrt() * self.hf(x) - ha / (2.0 * (x - a)))
    }

    /// h_β′(x) from θ′ = −2πψ and φ′.
    pub fn h_beta_deriv(&self, x: f64) -> Option<f64> {
        let b = self.beta;
        if (x - b).abs() < 1e-9 * (b - self.alpha) {
            return Some(self.hp_beta);
        }
        let hb = self.h_beta(x)?;
        Some(-self.c * (x - self.alpha).sqrt() * self.hf(x) + hb / (2.0 * (b - x)))
    }

    /// Closed-form h_β′(β) < 0.
    pub fn h_beta_prime(&self) -> Result<f64> {
        if self.hp_beta >= 0.0 {
            return Err(Error::Condition(format!("h_beta'(beta) = {} is not negative", self.hp_beta)));
        }
        Ok(self.hp_beta)
    }

    /// Closed-form h_α′(α) > 0.
    pub fn h_alpha_prime(&self) -> Result<f64> {
        if self.hp_alpha <= 0.0 {
            return Err(Error::Condition(format!("h_alpha'(alpha) = {} is not positive", self.hp_alpha)));
        }
        Ok(self.hp_alpha)
    }

    /// u_β(z) = [−h_β′(β)]^{2/3}(z − β).
    pub fn u_beta(&self, z: C64) -> C64 {
        (-self.hp_beta).powf(2.0 / 3.0) * (z - self.beta)
    }

    /// u_α(z) = [h_α′(α)]^{2/3}(α − z).
    pub fn u_alpha(&self, z: C64) -> C64 {
        self.hp_alpha.powf(2.0 / 3.0) * (self.alpha - z)
    }

    /// max over an interior grid of √((x−α)(β−x))|ψ′(x)|, ψ′ by centred differences.
    pub fn psi_prime_bound(&self, grid: usize) -> f64 {
        let (a, b) = (self.alpha, self.beta);
        let step = 1e-5 * (b - a);
        let mut best: f64 = 0.0;
        for i in 1..grid {
            let x = a + (b - a) * i as f64 / grid as f64;
            if x - step <= a || x + step >= b {
                continue;
            }
            let d = (self.psi(x + step).unwrap() - self.psi(x - step).unwrap()) / (2.0 * step);
            best = best.max(((x - a) * (b - x)).sqrt() * d.abs());
        }
        best
    }

    /// Numerical check of the one-interval regularity conditions.
    pub fn verify_conditions(&self) -> ConditionReport {
        let (a, b) = (self.alpha, self.beta);
        let n = 200;
        let mut min_h_support = f64::INFINITY;
        let mut min_hb_in = f64::INFINITY;
        let mut min_ha_in = f64::INFINITY;
        for i in 1..n {
            let x = a + (b - a) * i as f64 / n as f64;
            min_h_support = min_h_support.min(self.h(x));
            min_hb_in = min_hb_in.min(self.h_beta(x).unwrap() / (b - x));
            min_ha_in = min_ha_in.min(self.h_alpha(x).unwrap() / (x - a));
        }
        let mut min_h_ext = min_h_support;
        let mut min_phi = f64::INFINITY;
        let mut max_hb_out = f64::NEG_INFINITY;
        let mut max_ha_out = f64::NEG_INFINITY;
        for i in 1..=100 {
            let d = 2.0 * i as f64 / 100.0;
            let (xr, xl) = (b + d, a - d);
            min_h_ext = min_h_ext.min(self.h(xr)).min(self.h(xl));
            let pr = self.phi(xr).unwrap();
            let pl = self.phi(xl).unwrap();
            min_phi = min_phi.min(pr / d.powf(1.5)).min(pl / d.powf(1.5));
            max_hb_out = max_hb_out.max(-pr / d.sqrt() / d);
            max_ha_out = max_ha_out.max(-pl / d.sqrt() / d);
        }
        let mass_defect = (self.mass_t(0.0, PI) - 2.0 * PI).abs();
        let c0 = matches!(self.field.smoothness(), Smoothness::Analytic | Smoothness::C2Lipschitz);
        let c1 = min_h_support > 0.0 && min_phi > 0.0;
        let c2 = min_hb_in > 0.0
            && min_ha_in > 0.0
            && max_hb_out < 0.0
            && max_ha_out < 0.0
            && self.hp_beta < 0.0
            && self.hp_alpha > 0.0;
        let c3 = mass_defect < 1e-8 && self.endpoint_residuals().iter().all(|r| r.abs() < 1e-10);
        ConditionReport {
            condition0_smoothness: c0,
            condition1_support: c1,
            condition2_strict: c2,
            condition3_single_interval: c3,
            all_pass: c0 && c1 && c2 && c3,
            min_h_on_support: min_h_support,
            min_h_extended: min_h_ext,
            min_phi_margin: min_phi,
            min_h_beta_inside: min_hb_in,
            max_h_beta_outside: max_hb_out,
            min_h_alpha_inside: min_ha_in,
            max_h_alpha_outside: max_ha_out,
            h_alpha_prime: self.hp_alpha,
            h_beta_prime: self.hp_beta,
            mass_defect,
        }
    }
}
