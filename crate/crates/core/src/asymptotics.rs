//! Model parametrix D̂(z) and the leading-order formulas for
//! A₁₁ = p_n/κ_{n,n} and A₂₁ = −2πi κ_{n−1,n−1} p_{n−1}.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::airy::{airy_scaled, AiryScaled};
use crate::equilibrium::{EquilibriumMeasure, Side};
use crate::error::{Error, Result};

pub type Mat2 = [[C64; 2]; 2];

/// Bulk formulas switch from the two-term to the single-exponential form at y = CROSSOVER/n.
pub const CROSSOVER: f64 = 5.0;
/// Largest |ζ| accepted by the edge formulas.
pub const ZETA_MAX: f64 = 8.0;

const I: C64 = C64 { re: 0.0, im: 1.0 };

fn cis(t: f64) -> C64 {
    C64::from_polar(1.0, t)
}

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut r = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    r
}

pub fn det(a: &Mat2) -> C64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

pub fn inverse(a: &Mat2) -> Mat2 {
    let d = det(a);
    [[a[1][1] / d, -a[0][1] / d], [-a[1][0] / d, a[0][0] / d]]
}

fn diag(a: C64, b: C64) -> Mat2 {
    [[a, C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), b]]
}

fn u_matrix() -> Mat2 {
    let s = 1.0 / 2f64.sqrt();
    [[cis(-PI / 4.0) * s, cis(PI / 4.0) * s], [cis(PI / 4.0) * s, cis(-PI / 4.0) * s]]
}

/// A₁₁ and A₂₁ (or their derivatives) with the exponential size factored out:
/// A₁₁ = a11·e^{log_scale}, A₂₁ = a21·e^{log_scale + a21_shift}.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PolyPairEval {
    pub a11: C64,
    pub a21: C64,
    pub log_scale: f64,
    pub a21_shift: f64,
}

impl PolyPairEval {
    pub fn a11_value(&self) -> C64 {
        self.a11 * self.log_scale.exp()
    }
    pub fn a21_value(&self) -> C64 {
        self.a21 * (self.log_scale + self.a21_shift).exp()
    }
    pub fn a21_log_scale(&self) -> f64 {
        self.log_scale + self.a21_shift
    }

    /// (|ΔA₁₁|/|A₁₁|, |ΔA₂₁|/|A₂₁|) with `reference` as the exact pair.
    pub fn relative_error(&self, reference: &PolyPairEval) -> (f64, f64) {
        let d11 = self.a11 * (self.log_scale - reference.log_scale).exp() - reference.a11;
        let d21 = self.a21 * (self.a21_log_scale() - reference.a21_log_scale()).exp() - reference.a21;
        (d11.norm() / reference.a11.norm(), d21.norm() / reference.a21.norm())
    }

    /// Errors divided by an envelope e^{self.log_scale}·env (resp. the A₂₁ scale) instead of the value.
    pub fn envelope_error(&self, reference: &PolyPairEval, env: f64) -> (f64, f64) {
        let d11 = self.a11 - reference.a11 * (reference.log_scale - self.log_scale).exp();
        let d21 = self.a21 - reference.a21 * (reference.a21_log_scale() - self.a21_log_scale()).exp();
        (d11.norm() / env, d21.norm() / env)
    }
}

/// Per-(n, N) constants of the asymptotic formulas.
#[derive(Debug, Clone)]
pub struct AsymptoticContext {
    eq: Arc<EquilibriumMeasure>,
    pub n: usize,
    pub big_n: usize,
    pub delta: f64,
    pub lambda_edge: f64,
    pub w_beta: f64,
    pub delta_n: f64,
    hb: f64,
}

impl AsymptoticContext {
    /// Context with the default δ = (β−α)/8. Requires N = c·n.
    pub fn new(eq: Arc<EquilibriumMeasure>, n: usize, big_n: usize) -> Result<Self> {
        let delta = (eq.beta() - eq.alpha()) / 8.0;
        Self::with_delta(eq, n, big_n, delta)
    }

    pub fn with_delta(eq: Arc<EquilibriumMeasure>, n: usize, big_n: usize, delta: f64) -> Result<Self> {
        if n < 2 || big_n == 0 {
            return Err(Error::Validation("need n >= 2 and N >= 1".into()));
        }
        let width = eq.beta() - eq.alpha();
        if !(delta > 0.0 && delta < width / 3.0) {
            return Err(Error::Validation(format!("delta must lie in (0, {})", width / 3.0)));
        }
        if (eq.c() * n as f64 - big_n as f64).abs() > 1e-9 * big_n as f64 {
            return Err(Error::Validation(format!("N={big_n} does not equal c·n = {}", eq.c() * n as f64)));
        }
        let hb = -eq.h_beta_prime()?;
        eq.h_alpha_prime()?;
        let nf = n as f64;
        Ok(AsymptoticContext {
            n,
            big_n,
            delta,
            lambda_edge: 0.75 * hb,
            w_beta: (0.75 * hb).powf(1.0 / 6.0) * width.powf(0.25),
            delta_n: nf.powf(-1.0 / 3.0) * nf.ln(),
            hb,
            eq,
        })
    }

    pub fn equilibrium(&self) -> &EquilibriumMeasure {
        &self.eq
    }

    fn nf(&self) -> f64 {
        self.n as f64
    }

    fn shift(&self) -> f64 {
        -self.nf() * self.eq.ell()
    }

    /// γ(z) with γ⁴ = (z−β)/(z−α), γ → 1 at infinity.
    pub fn gamma_fn(&self, z: C64) -> Result<C64> {
        if z.im == 0.0 && z.re >= self.eq.alpha() && z.re <= self.eq.beta() {
            return Err(Error::Branch(format!("gamma: z={} is on the cut", z.re)));
        }
        Ok(((z - self.eq.beta()) / (z - self.eq.alpha())).powf(0.25))
    }

    /// a(z) = √(β−α)/((z−α)^{1/4}(β−z)^{1/4}).
    pub fn a_fn(&self, z: C64) -> C64 {
        let (a, b) = (self.eq.alpha(), self.eq.beta());
        (b - a).sqrt() / ((z - a).powf(0.25) * (b - z).powf(0.25))
    }

    /// arcsin((2z − (α+β))/(β−α)).
    pub fn phase_arcsin(&self, z: C64) -> C64 {
        let (a, b) = (self.eq.alpha(), self.eq.beta());
        ((2.0 * z - (a + b)) / (b - a)).asin()
    }

    /// w(z) = (3/4)^{1/6}[−h_β′(β)]^{1/6}(z−α)^{1/4}.
    pub fn w_fn(&self, z: C64) -> C64 {
        (0.75 * self.hb).powf(1.0 / 6.0) * (z - self.eq.alpha()).powf(0.25)
    }

    /// z = β + (λn)^{−2/3}ζ.
    pub fn z_of_zeta(&self, zeta: C64) -> C64 {
        self.eq.beta() + (self.lambda_edge * self.nf()).powf(-2.0 / 3.0) * zeta
    }

    pub fn in_square_beta(&self, z: C64) -> bool {
        (z.re - self.eq.beta()).abs() < self.delta && z.im.abs() < self.delta
    }

    pub fn in_square_alpha(&self, z: C64) -> bool {
        (z.re - self.eq.alpha()).abs() < self.delta && z.im.abs() < self.delta
    }

    /// Outer model U γ^{σ₃} U†.
    pub fn outer(&self, z: C64) -> Result<Mat2> {
        let g = self.gamma_fn(z)?;
        let p = 0.5 * (g + 1.0 / g);
        let m = (g - 1.0 / g) / (2.0 * I);
        Ok([[p, m], [-m, p]])
    }

    /// M(u)·e^{n u^{3/2} σ₃/2}, with the exponentials absorbed into the Airy values.
    fn m_scaled(&self, u: C64) -> Result<Mat2> {
        let arg = u.arg();
        let q = PI / 4.0;
        if u.norm() == 0.0 || [q, 3.0 * q, -q, -3.0 * q, PI, -PI].contains(&arg) {
            return Err(Error::Branch(format!("M(u): arg u = {arg} is on a sector boundary")));
        }
        let nf = self.nf();
        let xi = (0.75 * nf).powf(2.0 / 3.0) * u;
        let e = 0.5 * nf * u.powf(1.5);
        let w = cis(2.0 * PI / 3.0);
        let col = |a: AiryScaled, ph_d: f64, ph_v: f64, ex: C64| -> [C64; 2] {
            let (v, d) = a.times_exp(ex);
            [cis(ph_d) * d, cis(ph_v) * v]
        };
        let r0 = || airy_scaled(xi);
        let rm = || airy_scaled(xi * w.conj());
        let rp = || airy_scaled(xi * w);
        let (c1, c2) = if arg > -q && arg < 3.0 * q {
            (col(r0(), -3.0 * q, -q, e), col(rm(), 11.0 * PI / 12.0, PI / 12.0, -e))
        } else if arg > 3.0 * q {
            (col(rp(), -5.0 * PI / 12.0, -7.0 * PI / 12.0, e), col(rm(), 11.0 * PI / 12.0, PI / 12.0, -e))
        } else if arg < -3.0 * q {
            (col(rm(), 11.0 * PI / 12.0, PI / 12.0, e), col(rp(), 7.0 * PI / 12.0, 5.0 * PI / 12.0, -e))
        } else {
            (col(r0(), -3.0 * q, -q, e), col(rp(), 7.0 * PI / 12.0, 5.0 * PI / 12.0, -e))
        };
        Ok([[c1[0], c2[0]], [c1[1], c2[1]]])
    }

    /// Airy-built local model in S_β.
    pub fn local_beta(&self, z: C64) -> Result<Mat2> {
        let g = self.gamma_fn(z)?;
        let u = self.eq.u_beta(z);
        let k = (4.0 / (3.0 * self.nf())).powf(1.0 / 6.0);
        let q = u.powf(0.25);
        let left = mat_mul(&u_matrix(), &diag(k * g / q, q / (k * g)));
        let m = mat_mul(&left, &self.m_scaled(u)?);
        let s = (2.0 * PI).sqrt();
        Ok(m.map(|r| r.map(|v| v * s)))
    }

    /// Airy-built local model in S_α.
    pub fn local_alpha(&self, z: C64) -> Result<Mat2> {
        let g = self.gamma_fn(z)?;
        let u = self.eq.u_alpha(z);
        let k = (0.75 * self.nf()).powf(1.0 / 6.0);
        let q = u.powf(0.25);
        let sigma2: Mat2 = [[C64::new(0.0, 0.0), -I], [I, C64::new(0.0, 0.0)]];
        let left = mat_mul(&u_matrix(), &diag(k * g * q, 1.0 / (k * g * q)));
        let mut ms = self.m_scaled(u)?;
        // σ₃ between M and the exponential flips the second column
        ms[0][1] = -ms[0][1];
        ms[1][1] = -ms[1][1];
        let m = mat_mul(&mat_mul(&left, &sigma2), &ms);
        let s = -(2.0 * PI).sqrt();
        Ok(m.map(|r| r.map(|v| v * s)))
    }

    /// D̂(z): local models in the squares of half-width δ, outer formula elsewhere.
    pub fn model_parametrix(&self, z: C64) -> Result<Mat2> {
        if self.in_square_beta(z) {
            self.local_beta(z)
        } else if self.in_square_alpha(z) {
            self.local_alpha(z)
        } else {
            self.outer(z)
        }
    }

    /// (log κ²_{n,n}, log κ²_{n−1,n−1}) from the leading-order formulas.
    pub fn kappa_asymptotic(&self) -> (f64, f64) {
        let w = self.eq.beta() - self.eq.alpha();
        let nl = self.nf() * self.eq.ell();
        ((2.0 / (w * PI)).ln() - nl, (w / (8.0 * PI)).ln() - nl)
    }

    fn check_bulk(&self, x: f64) -> Result<()> {
        let (a, b) = (self.eq.alpha(), self.eq.beta());
        if x < a + self.delta || x > b - self.delta {
            return Err(Error::Domain(format!(
                "x={x} outside the bulk window [{}, {}]",
                a + self.delta,
                b - self.delta
            )));
        }
        Ok(())
    }

    /// Leading terms on the real axis inside the bulk.
    pub fn bulk_axis(&self, x: f64) -> Result<PolyPairEval> {
        self.check_bulk(x)?;
        let nf = self.nf();
        let c = self.eq.c();
        let theta = self.eq.theta(x)?;
        let xr = C64::new(x, 0.0);
        let a = self.a_fn(xr).re;
        let ph = self.phase_arcsin(xr).re;
        Ok(PolyPairEval {
            a11: C64::new(a * (0.5 * (nf * theta - ph)).cos(), 0.0),
            a21: -I * a * (0.5 * (nf * theta + ph)).sin(),
            log_scale: 0.5 * nf * (c * self.eq.field().v(x) + self.eq.ell()),
            a21_shift: self.shift(),
        })
    }

    /// Leading terms at z = x + iy in the upper lens.
    pub fn bulk_upper(&self, z: C64) -> Result<PolyPairEval> {
        self.check_bulk(z.re)?;
        if !(z.im > 0.0 && z.im < self.delta) {
            return Err(Error::Domain(format!("Im z = {} outside (0, {})", z.im, self.delta)));
        }
        let nf = self.nf();
        let g = self.eq.g(z, Side::Auto)?;
        if z.im >= CROSSOVER / nf {
            let a = self.a_fn(z);
            let ph = self.phase_arcsin(z);
            let rot = cis(nf * g.im);
            return Ok(PolyPairEval {
                a11: 0.5 * a * (-I * ph / 2.0).exp() * rot,
                a21: -0.5 * a * (I * ph / 2.0).exp() * rot,
                log_scale: nf * g.re,
                a21_shift: self.shift(),
            });
        }
        let (x, y) = (z.re, z.im);
        let theta = self.eq.theta(x)?;
        let dtheta = -2.0 * PI * self.eq.psi(x)?;
        let xr = C64::new(x, 0.0);
        let a = self.a_fn(xr).re;
        let ph = self.phase_arcsin(xr).re;
        let big = C64::new(nf * theta, nf * dtheta * y);
        let rot = cis(nf * (g.im - theta / 2.0));
        Ok(PolyPairEval {
            a11: rot * a * (0.5 * (big - ph)).cos(),
            a21: -I * rot * a * (0.5 * (big + ph)).sin(),
            log_scale: nf * (g.re + dtheta * y / 2.0),
            a21_shift: self.shift(),
        })
    }

    fn check_edge(&self, zeta: C64) -> Result<()> {
        if zeta.norm() > ZETA_MAX {
            return Err(Error::Domain(format!("|zeta|={} exceeds {ZETA_MAX}; use the bulk formulas", zeta.norm())));
        }
        if zeta.im < 0.0 {
            return Err(Error::Domain("edge formulas need Im zeta >= 0".into()));
        }
        Ok(())
    }

    /// n^{1/3} c V′(β) λ^{−2/3}/2
    fn edge_rate(&self) -> f64 {
        let c = self.eq.c();
        0.5 * self.nf().powf(1.0 / 3.0) * c * self.eq.field().v1(self.eq.beta()) * self.lambda_edge.powf(-2.0 / 3.0)
    }

    fn edge_base(&self, zeta: C64) -> (C64, f64, f64) {
        let nf = self.nf();
        let c = self.eq.c();
        let k = self.edge_rate();
        let log_scale = 0.5 * nf * (c * self.eq.field().v(self.eq.beta()) + self.eq.ell()) + k * zeta.re;
        let common = nf.powf(1.0 / 6.0) * PI.sqrt() * self.w_beta * cis(k * zeta.im);
        (common, log_scale, k)
    }

    /// Airy form at z = β + (λn)^{−2/3}ζ.
    pub fn edge_poly(&self, zeta: C64) -> Result<PolyPairEval> {
        self.check_edge(zeta)?;
        let (common, log_scale, _) = self.edge_base(zeta);
        let (ai, _, ls) = airy_scaled(zeta).split();
        let v = common * ai;
        Ok(PolyPairEval { a11: v, a21: -I * v, log_scale: log_scale + ls, a21_shift: self.shift() })
    }

    /// d/dx of the bulk axis leading terms.
    pub fn bulk_derivative_axis(&self, x: f64) -> Result<PolyPairEval> {
        self.check_bulk(x)?;
        let (a0, b0) = (self.eq.alpha(), self.eq.beta());
        let nf = self.nf();
        let c = self.eq.c();
        let theta = self.eq.theta(x)?;
        let dtheta = -2.0 * PI * self.eq.psi(x)?;
        let xr = C64::new(x, 0.0);
        let a = self.a_fn(xr).re;
        let da = -0.25 * a * (1.0 / (x - a0) - 1.0 / (b0 - x));
        let ph = self.phase_arcsin(xr).re;
        let dph = 1.0 / ((x - a0) * (b0 - x)).sqrt();
        let dl = 0.5 * nf * c * self.eq.field().v1(x);
        let p11 = 0.5 * (nf * theta - ph);
        let p21 = 0.5 * (nf * theta + ph);
        let d11 = (dl * a + da) * p11.cos() - a * 0.5 * (nf * dtheta - dph) * p11.sin();
        let d21 = (dl * a + da) * p21.sin() + a * 0.5 * (nf * dtheta + dph) * p21.cos();
        Ok(PolyPairEval {
            a11: C64::new(d11, 0.0),
            a21: -I * d21,
            log_scale: 0.5 * nf * (c * self.eq.field().v(x) + self.eq.ell()),
            a21_shift: self.shift(),
        })
    }

    /// d/dζ of the edge leading terms (real ζ).
    pub fn edge_derivative(&self, zeta: f64) -> Result<PolyPairEval> {
        let z = C64::new(zeta, 0.0);
        self.check_edge(z)?;
        let (common, log_scale, k) = self.edge_base(z);
        let (ai, aip, ls) = airy_scaled(z).split();
        let v = common * (k * ai + aip);
        Ok(PolyPairEval { a11: v, a21: -I * v, log_scale: log_scale + ls, a21_shift: self.shift() })
    }
}
