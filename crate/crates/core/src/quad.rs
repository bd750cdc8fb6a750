//! Gauss-Legendre rules and composite panel builders.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct Rule {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
}

fn compute(n: usize) -> Rule {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    Rule { x, w }
}

/// Cached n-point Gauss-Legendre rule.
pub fn gauss_legendre(n: usize) -> Arc<Rule> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Rule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard.entry(n).or_insert_with(|| Arc::new(compute(n))).clone()
}

/// Node/weight list for a composite rule.
#[derive(Debug, Clone, Default)]
pub struct Nodes {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
}

impl Nodes {
    pub fn push_panel(&mut self, a: f64, b: f64, rule: &Rule) {
        if b <= a {
            return;
        }
        let h = 0.5 * (b - a);
        let c = 0.5 * (a + b);
        for (xi, wi) in rule.x.iter().zip(&rule.w) {
            self.x.push(c + h * xi);
            self.w.push(h * wi);
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn sum<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.x.iter().zip(&self.w).map(|(&x, &w)| w * f(x)).sum()
    }
}

fn sorted_cuts(a: f64, b: f64, breaks: &[f64]) -> Vec<f64> {
    let mut cuts = vec![a];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&t| t > a && t < b).collect();
    inner.sort_by(|p, q| p.partial_cmp(q).unwrap());
    cuts.extend(inner);
    cuts.push(b);
    cuts
}

/// Composite rule on [a,b] split at `breaks`, panels no longer than `max_len`.
pub fn panels(a: f64, b: f64, breaks: &[f64], order: usize, max_len: f64) -> Nodes {
    let rule = gauss_legendre(order);
    let mut out = Nodes::default();
    let cuts = sorted_cuts(a, b, breaks);
    for win in cuts.windows(2) {
        let len = win[1] - win[0];
        let k = ((len / max_len).ceil() as usize).max(1);
        for j in 0..k {
            let p = win[0] + len * j as f64 / k as f64;
            let q = win[0] + len * (j + 1) as f64 / k as f64;
            out.push_panel(p, q, &rule);
        }
    }
    out
}

/// Composite rule on [a,b] refined geometrically (ratio 1/4, `levels` levels) toward every
/// point of `focus`; windows between cuts with no focus end get panels of length <= `max_len`.
/// Handles log and power-type behaviour at the focus points.
pub fn graded(a: f64, b: f64, focus: &[f64], order: usize, levels: usize, max_len: f64) -> Nodes {
    let rule = gauss_legendre(order);
    let mut out = Nodes::default();
    let tol = 1e-14 * (1.0 + a.abs().max(b.abs()));
    let fpts: Vec<f64> = focus.iter().copied().filter(|&p| p >= a - tol && p <= b + tol).collect();
    let is_focus = |p: f64| fpts.iter().any(|&f| (f - p).abs() <= tol);
    let mut cuts = sorted_cuts(a, b, &fpts);
    cuts.dedup_by(|p, q| (*p - *q).abs() <= tol);
    for win in cuts.windows(2) {
        let (p, q) = (win[0], win[1]);
        if q <= p {
            continue;
        }
        let (fp, fq) = (is_focus(p), is_focus(q));
        let mut edges = Vec::new();
        let (lo, hi) = match (fp, fq) {
            (true, true) => (p + 0.25 * (q - p), q - 0.25 * (q - p)),
            (true, false) => (p + 0.25 * (q - p), q),
            (false, true) => (p, q - 0.25 * (q - p)),
            (false, false) => (p, q),
        };
        if fp {
            edges.push(p);
            for k in (1..=levels).rev() {
                edges.push(p + (lo - p) * 0.25f64.powi(k as i32 - 1));
            }
        }
        let k = (((hi - lo) / max_len).ceil() as usize).max(1);
        for j in 0..=k {
            edges.push(lo + (hi - lo) * j as f64 / k as f64);
        }
        if fq {
            for k in 1..=levels {
                edges.push(q - (q - hi) * 0.25f64.powi(k as i32 - 1));
            }
            edges.push(q);
        }
        edges.dedup();
        for e in edges.windows(2) {
            out.push_panel(e[0], e[1], &rule);
        }
    }
    out
}

/// Adaptive complex integral over [a, b]: a 16-point panel is split until it agrees with
/// its two halves to `tol · width/(b−a)`. Returns None when `max_evals` is exceeded.
pub fn adaptive_c<F: FnMut(f64) -> crate::C64>(
    mut f: F,
    a: f64,
    b: f64,
    tol: f64,
    max_evals: usize,
) -> Option<crate::C64> {
    let rule = gauss_legendre(16);
    let mut evals = 0usize;
    let mut panel = |p: f64, q: f64, evals: &mut usize| {
        let h = 0.5 * (q - p);
        let c = 0.5 * (p + q);
        *evals += rule.x.len();
        rule.x.iter().zip(&rule.w).map(|(&x, &w)| f(c + h * x) * (w * h)).sum::<crate::C64>()
    };
    let total = b - a;
    if total == 0.0 {
        return Some(crate::C64::new(0.0, 0.0));
    }
    let mut acc = crate::C64::new(0.0, 0.0);
    let whole = panel(a, b, &mut evals);
    let mut stack = vec![(a, b, whole)];
    while let Some((p, q, est)) = stack.pop() {
        let m = 0.5 * (p + q);
        let l = panel(p, m, &mut evals);
        let r = panel(m, q, &mut evals);
        if evals > max_evals {
            return None;
        }
        if (l + r - est).norm() <= tol * (q - p) / total || q - p < 1e-14 * total {
            acc += l + r;
        } else {
            stack.push((m, q, r));
            stack.push((p, m, l));
        }
    }
    Some(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        for n in [1, 2, 5, 20, 64, 128] {
            let r = gauss_legendre(n);
            for k in 0..(2 * n) {
                let s: f64 = r.x.iter().zip(&r.w).map(|(x, w)| w * x.powi(k as i32)).sum();
                let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                assert!((s - exact).abs() < 1e-13, "n={n} k={k} {s} {exact}");
            }
        }
    }

    #[test]
    fn graded_handles_log() {
        // int_0^1 log t dt = -1
        let q = graded(0.0, 1.0, &[0.0], 12, 30, 0.5);
        let s = q.sum(|t| t.ln());
        assert!((s + 1.0).abs() < 1e-13, "{s}");
    }
}
