//! Airy function Ai and its derivative for complex arguments.
//!
//! |ξ| ≤ 3: Maclaurin series. |ξ| ≥ 12: asymptotic expansion, with the
//! identity Ai(z) + ωAi(ωz) + ω²Ai(ω²z) = 0 for |arg ξ| > 2π/3. In between,
//! Taylor steps of Ai″ = ξAi along the ray through ξ, started from whichever
//! end keeps the recessive direction stable.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

/// Ai(0)
pub const AI0: f64 = 0.355_028_053_887_817_2;
/// Ai′(0)
pub const AIP0: f64 = -0.258_819_403_792_806_8;

const R_SERIES: f64 = 3.0;
const R_ASYM: f64 = 12.0;
const MAX_STEP: f64 = 0.5;

/// Value pair carried as (ai, ai_prime)·e^{exponent}.
#[derive(Debug, Clone, Copy)]
pub struct AiryScaled {
    pub ai: C64,
    pub ai_prime: C64,
    pub exponent: C64,
}

impl AiryScaled {
    pub fn unscaled(&self) -> (C64, C64) {
        let e = self.exponent.exp();
        (self.ai * e, self.ai_prime * e)
    }

    /// (Ai, Ai′)·e^{extra}, combining exponents before exponentiating.
    pub fn times_exp(&self, extra: C64) -> (C64, C64) {
        let e = (self.exponent + extra).exp();
        (self.ai * e, self.ai_prime * e)
    }

    /// Real part of the exponent moved into a separate log scale.
    pub fn split(&self) -> (C64, C64, f64) {
        let ph = C64::new(0.0, self.exponent.im).exp();
        (self.ai * ph, self.ai_prime * ph, self.exponent.re)
    }
}

fn series(z: C64) -> (C64, C64) {
    let mut c = [C64::new(AI0, 0.0), C64::new(AIP0, 0.0), C64::new(0.0, 0.0)];
    let mut zp = C64::new(1.0, 0.0); // z^k
    let mut zpm1 = C64::new(0.0, 0.0); // z^{k-1}
    let mut ai = C64::new(0.0, 0.0);
    let mut aip = C64::new(0.0, 0.0);
    let mut recent = [f64::INFINITY; 3];
    for k in 0..600usize {
        let ck = c[k % 3];
        let t = ck * zp;
        let tp = ck * (k as f64) * zpm1;
        ai += t;
        aip += tp;
        recent[k % 3] = t.norm() + tp.norm();
        c[k % 3] = ck / (((k + 3) * (k + 2)) as f64);
        zpm1 = zp;
        zp *= z;
        if k > 6 && recent.iter().all(|&r| r < 1e-18 * (ai.norm() + aip.norm() + 1e-300)) {
            break;
        }
    }
    (ai, aip)
}

fn zeta_of(xi: C64) -> C64 {
    xi.powf(1.5) * (2.0 / 3.0)
}

/// Asymptotic expansion, |arg ξ| ≤ 2π/3, returned with exponent −ζ.
fn asymptotic(xi: C64) -> AiryScaled {
    let zeta = zeta_of(xi);
    let inv = 1.0 / zeta;
    let mut u = 1.0f64;
    let mut su = C64::new(1.0, 0.0);
    let mut sv = C64::new(1.0, 0.0);
    let mut p = C64::new(1.0, 0.0);
    let mut last = f64::INFINITY;
    for k in 1..=24usize {
        let kf = k as f64;
        u *= (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0) / ((2.0 * kf - 1.0) * 216.0 * kf);
        let v = -(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * u;
        p *= -inv;
        let tu = p * u;
        let size = tu.norm();
        if size > last {
            break;
        }
        su += tu;
        sv += p * v;
        last = size;
        if size < 1e-17 {
            break;
        }
    }
    let q = xi.powf(0.25);
    let k = 0.5 / PI.sqrt();
    AiryScaled { ai: su * k / q, ai_prime: -sv * k * q, exponent: -zeta }
}

fn far(xi: C64) -> AiryScaled {
    if xi.arg().abs() <= 2.0 * PI / 3.0 {
        return asymptotic(xi);
    }
    let w = C64::from_polar(1.0, 2.0 * PI / 3.0);
    let w2 = w * w;
    let a = asymptotic(w * xi);
    let b = asymptotic(w2 * xi);
    let e = if a.exponent.re >= b.exponent.re { a.exponent } else { b.exponent };
    let fa = (a.exponent - e).exp();
    let fb = (b.exponent - e).exp();
    AiryScaled {
        ai: -(w * a.ai * fa + w2 * b.ai * fb),
        ai_prime: -(w2 * a.ai_prime * fa + w * b.ai_prime * fb),
        exponent: e,
    }
}

/// One Taylor step of y″ = z y from z0 to z0 + h.
fn taylor_step(z0: C64, y: C64, yp: C64, h: C64) -> (C64, C64) {
    let (mut cm1, mut c0, mut c1) = (C64::new(0.0, 0.0), y, yp);
    let mut hp = C64::new(1.0, 0.0); // h^k
    let mut s = C64::new(0.0, 0.0);
    let mut sp = C64::new(0.0, 0.0);
    let scale = y.norm() + yp.norm() * h.norm() + 1e-300;
    let mut small = 0;
    for k in 0..200usize {
        // c0 = c_k, c1 = c_{k+1}
        s += c0 * hp;
        sp += c1 * ((k + 1) as f64) * hp;
        let c2 = (z0 * c0 + cm1) / (((k + 2) * (k + 1)) as f64);
        cm1 = c0;
        c0 = c1;
        c1 = c2;
        hp *= h;
        if (c0 * hp).norm() < 1e-18 * scale {
            small += 1;
            if small > 3 {
                break;
            }
        } else {
            small = 0;
        }
    }
    (s, sp)
}

fn march(from: C64, to: C64, y: C64, yp: C64) -> (C64, C64) {
    let d = to - from;
    let steps = ((d.norm() / MAX_STEP).ceil() as usize).max(1);
    let h = d / steps as f64;
    let (mut y, mut yp) = (y, yp);
    let mut z = from;
    for _ in 0..steps {
        let (a, b) = taylor_step(z, y, yp, h);
        y = a;
        yp = b;
        z += h;
    }
    (y, yp)
}

/// Ai and Ai′ with the exponential factor kept separate.
pub fn airy_scaled(xi: C64) -> AiryScaled {
    let r = xi.norm();
    let zero = C64::new(0.0, 0.0);
    if r <= R_SERIES {
        let (a, b) = series(xi);
        return AiryScaled { ai: a, ai_prime: b, exponent: zero };
    }
    if r >= R_ASYM {
        return far(xi);
    }
    let dir = xi / r;
    let phi = xi.arg();
    if phi.abs() <= PI / 3.0 {
        let start = dir * R_ASYM;
        let s = asymptotic(start);
        let (a, b) = march(start, xi, s.ai, s.ai_prime);
        AiryScaled { ai: a, ai_prime: b, exponent: s.exponent }
    } else {
        let start = dir * R_SERIES;
        let (a0, b0) = series(start);
        let (a, b) = march(start, xi, a0, b0);
        AiryScaled { ai: a, ai_prime: b, exponent: zero }
    }
}

/// (Ai(ξ), Ai′(ξ)).
pub fn airy(xi: C64) -> (C64, C64) {
    airy_scaled(xi).unscaled()
}

/// Real-argument convenience.
pub fn airy_real(x: f64) -> (f64, f64) {
    let (a, b) = airy(C64::new(x, 0.0));
    (a.re, b.re)
}
