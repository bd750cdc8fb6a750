// frozen reference digits are kept at full length
#![allow(clippy::excessive_precision, clippy::approx_constant)]

use std::f64::consts::{PI, SQRT_2};
use std::sync::OnceLock;

use opx::equilibrium::*;
use opx::field::{ExternalField, Smoothness};
use opx::quad;
use opx::{Error, C64};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// 20-digit mpmath values: endpoint moment equations solved with findroot, h, ψ, ℓ,
// φ (via the log potential) and h′ at the endpoints from the trigonometric integrals.
const C2_ALPHA: f64 = -2.1182798162936088781;
const C2_BETA: f64 = 0.9829070084249322953;
const C2_ELL: f64 = -1.4297585888312774853;
const C2_H0: f64 = 1.7295678771056208988;
const C2_PSI_03: f64 = 0.45242846331704133901;
const C2_THETA_03: f64 = 1.7268908563350878961;
const C2_HBP: f64 = -4.3738502584489959076;
const C2_HAP: f64 = 1.4002617724162502756;
const C2_PHI_B_HALF: f64 = 1.9484990592807596817;
// active-set minimisation of the discretised energy (400 cells on [−3, 2])
const C2_ELL_ENERGY: f64 = -1.4297602871277881;

const Q0_BETA: f64 = 1.0745699318235419196;
const Q0_ELL: f64 = -1.7424533248940001551;
const Q0_H0: f64 = 2.309401076758503058;
const Q0_PSI_03: f64 = 0.43837693895525700302;
const Q0_HBP: f64 = -6.7711385372873437053;
const Q0_PHI_B_HALF: f64 = 3.6776819018340331534;

fn solve(id: &str, c: f64) -> EquilibriumMeasure {
    EquilibriumMeasure::solve(&ExternalField::builtin(id).unwrap(), c, DEFAULT_QUAD_ORDER).unwrap()
}

fn gue() -> &'static EquilibriumMeasure {
    static E: OnceLock<EquilibriumMeasure> = OnceLock::new();
    E.get_or_init(|| solve("gue", 1.0))
}

fn c2lip() -> &'static EquilibriumMeasure {
    static E: OnceLock<EquilibriumMeasure> = OnceLock::new();
    E.get_or_init(|| solve("c2lip(0,1)", 1.0))
}

fn quartic0() -> &'static EquilibriumMeasure {
    static E: OnceLock<EquilibriumMeasure> = OnceLock::new();
    E.get_or_init(|| solve("quartic(0)", 1.0))
}

#[test]
fn semicircle() {
    let eq = gue();
    assert!((eq.alpha() + SQRT_2).abs() < 1e-10);
    assert!((eq.beta() - SQRT_2).abs() < 1e-10);
    assert!((eq.psi(0.0).unwrap() - 0.45015816).abs() < 1e-8);
    assert!((eq.psi(0.0).unwrap() - SQRT_2 / PI).abs() < 1e-10);
    assert!((eq.psi(1.0).unwrap() - 1.0 / PI).abs() < 1e-10);
    assert!(eq.psi(eq.beta()).unwrap().abs() < 1e-12);
    assert!((eq.ell() + 1.0 + 2f64.ln()).abs() < 1e-8);
    assert!((eq.ell() - eq.ell_from_alpha()).abs() < 1e-8);
    for i in 0..100 {
        let x = -4.0 + 8.0 * i as f64 / 99.0;
        assert!((eq.h(x) - 2.0).abs() < 1e-9);
    }
    // 2√2 − 2 ln(1+√2)
    assert!((eq.phi(2.0).unwrap() - 1.0656799507071040471).abs() < 1e-10);
    assert_eq!(eq.phi(eq.beta()).unwrap(), 0.0);
    assert!((eq.theta(0.0).unwrap() - PI).abs() < 1e-10);
    assert!(eq.theta(eq.beta()).unwrap().abs() < 1e-12);
    assert!((eq.theta(eq.alpha()).unwrap() - 2.0 * PI).abs() < 1e-9);
    assert!((eq.h_beta_prime().unwrap() + 4.0 / 3.0 * 2f64.powf(0.75)).abs() < 1e-10);
    assert!((eq.h_alpha_prime().unwrap() - 4.0 / 3.0 * 2f64.powf(0.75)).abs() < 1e-10);
}

#[test]
fn scaling_in_c() {
    let f = ExternalField::builtin("gue").unwrap();
    for c in [0.5, 1.0, 2.0, 4.0] {
        let (a, b) = solve_endpoints(&f, c, (-8.0, 8.0)).unwrap();
        let r = (2.0 / c).sqrt();
        assert!((b - r).abs() < 1e-10 && (a + r).abs() < 1e-10, "c={c}: ({a}, {b})");
    }
    let (a, b) = solve_endpoints(&f, 4.0, (-8.0, 8.0)).unwrap();
    assert!((a + 0.70710678).abs() < 1e-8 && (b - 0.70710678).abs() < 1e-8);
}

#[test]
fn c2lip_against_oracle() {
    let eq = c2lip();
    assert!((eq.alpha() - C2_ALPHA).abs() < 1e-10);
    assert!((eq.beta() - C2_BETA).abs() < 1e-10);
    assert!((eq.alpha() + eq.beta()).abs() > 0.5);
    assert!((eq.ell() - C2_ELL).abs() < 1e-8);
    assert!((eq.ell() - eq.ell_from_alpha()).abs() < 1e-8);
    assert!((eq.ell() - C2_ELL_ENERGY).abs() < 1e-3);
    assert!((eq.h(0.0) - C2_H0).abs() < 1e-9);
    assert!((eq.psi(0.3).unwrap() - C2_PSI_03).abs() < 1e-9);
    assert!((eq.theta(0.3).unwrap() - C2_THETA_03).abs() < 1e-9);
    assert!((eq.h_beta_prime().unwrap() - C2_HBP).abs() < 1e-7);
    assert!((eq.h_alpha_prime().unwrap() - C2_HAP).abs() < 1e-7);
    assert!((eq.phi(C2_BETA + 0.5).unwrap() - C2_PHI_B_HALF).abs() < 1e-6);
    let [r1, r2] = eq.endpoint_residuals();
    assert!(r1.abs() < 1e-11 && r2.abs() < 1e-11);
}

#[test]
fn quartic_against_oracle() {
    let eq = quartic0();
    assert!((eq.beta() - Q0_BETA).abs() < 1e-10);
    assert!((eq.alpha() + Q0_BETA).abs() < 1e-10);
    assert!((eq.ell() - Q0_ELL).abs() < 1e-8);
    assert!((eq.h(0.0) - Q0_H0).abs() < 1e-8);
    assert!((eq.psi(0.3).unwrap() - Q0_PSI_03).abs() < 1e-9);
    assert!((eq.phi(Q0_BETA + 0.5).unwrap() - Q0_PHI_B_HALF).abs() < 1e-6);
    let hbp = eq.h_beta_prime().unwrap();
    assert!((hbp - Q0_HBP).abs() < 1e-7);
    assert!((eq.h_alpha_prime().unwrap() + hbp).abs() < 1e-9);
    // one-sided difference of h_β at β
    let b = eq.beta();
    let fd = (eq.h_beta(b).unwrap() - eq.h_beta(b - 1e-6).unwrap()) / 1e-6;
    assert!((fd - hbp).abs() < 1e-4 * hbp.abs(), "fd {fd} vs {hbp}");
}

#[test]
fn endpoint_derivative_matches_differences() {
    for eq in [gue(), c2lip(), quartic0()] {
        let b = eq.beta();
        let a = eq.alpha();
        let w = b - a;
        let h = 1e-4 * w;
        // second-order one-sided difference through both sides of β
        let fd = (eq.h_beta(b + h).unwrap() - eq.h_beta(b - h).unwrap()) / (2.0 * h);
        assert!((fd - eq.h_beta_prime().unwrap()).abs() < 1e-6 * eq.h_beta_prime().unwrap().abs().max(1.0) * 10.0);
        let fd = (eq.h_alpha(a + h).unwrap() - eq.h_alpha(a - h).unwrap()) / (2.0 * h);
        assert!((fd - eq.h_alpha_prime().unwrap()).abs() < 1e-5 * eq.h_alpha_prime().unwrap().abs().max(1.0));
    }
}

#[test]
fn measure_invariants() {
    for eq in [gue(), c2lip(), quartic0()] {
        let (a, b) = (eq.alpha(), eq.beta());
        // s = m + r cos t removes the square-root endpoints
        let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
        let tb: Vec<f64> = eq.field().breakpoints().iter().map(|&p| ((p - m) / r).clamp(-1.0, 1.0).acos()).collect();
        let nodes = quad::panels(0.0, PI, &tb, 32, PI / 8.0);
        let mass = nodes.sum(|t| r * t.sin() * eq.psi((m + r * t.cos()).clamp(a, b)).unwrap());
        assert!((mass - 1.0).abs() < 1e-10, "{}: mass {mass}", eq.field().id());
        let mut prev = f64::INFINITY;
        for i in 1..200 {
            let x = a + (b - a) * i as f64 / 200.0;
            assert!(eq.psi(x).unwrap() > 0.0);
            let t = eq.theta(x).unwrap();
            assert!(t <= prev);
            prev = t;
        }
        assert!(eq.psi(a).unwrap().abs() < 1e-8 && eq.psi(b).unwrap().abs() < 1e-8);
        for d in [0.01, 0.5, 2.0] {
            assert!(eq.phi(b + d).unwrap() > 0.0 && eq.phi(a - d).unwrap() > 0.0);
            assert!(eq.h(b + d) > 0.0 && eq.h(a - d) > 0.0);
        }
        assert!(eq.psi_prime_bound(200).is_finite());
    }
}

#[test]
fn theta_derivative_is_density() {
    for eq in [gue(), c2lip()] {
        let (a, b) = (eq.alpha(), eq.beta());
        let h = 1e-5;
        for i in 1..20 {
            let x = a + (b - a) * i as f64 / 20.0;
            let d = (eq.theta(x + h).unwrap() - eq.theta(x - h).unwrap()) / (2.0 * h);
            assert!((d + 2.0 * PI * eq.psi(x).unwrap()).abs() < 1e-7, "x={x}");
        }
    }
}

#[test]
fn euler_lagrange_on_support() {
    // 2∫log|x−s|ψ(s)ds − cV(x) = ℓ by direct singular quadrature
    for eq in [gue(), c2lip()] {
        let (a, b) = (eq.alpha(), eq.beta());
        let f = eq.field();
        for x in [a + 0.2 * (b - a), 0.5 * (a + b), b - 0.1 * (b - a)] {
            let mut focus = vec![a, x, b];
            focus.extend_from_slice(f.breakpoints());
            let nodes = quad::graded(a, b, &focus, 32, 20, (b - a) / 8.0);
            let u = nodes.sum(|s| (x - s).abs().ln() * eq.psi(s).unwrap());
            assert!((2.0 * u - f.v(x) - eq.ell()).abs() < 1e-8, "{} x={x}: {:e}", f.id(), 2.0 * u - f.v(x) - eq.ell());
        }
    }
}

// discretised log energy −Σ K_ij m_i m_j + c Σ V_i m_i with exact cell-averaged log kernel
fn energy(eq: &EquilibriumMeasure, m: &[f64], edges: &[f64]) -> f64 {
    let w = edges[1] - edges[0];
    let f2 = |t: f64| {
        let t = t.abs();
        if t == 0.0 {
            0.0
        } else {
            0.5 * t * t * t.ln() - 0.75 * t * t
        }
    };
    let k = m.len();
    let mut e = 0.0;
    for i in 0..k {
        let xi = 0.5 * (edges[i] + edges[i + 1]);
        for j in 0..k {
            let xj = 0.5 * (edges[j] + edges[j + 1]);
            let d = xi - xj;
            e -= m[i] * m[j] * (f2(d + w) - 2.0 * f2(d) + f2(d - w)) / (w * w);
        }
        e += eq.c() * m[i] * eq.field().v(xi);
    }
    e
}

#[test]
fn energy_is_minimal_against_perturbations() {
    let eq = c2lip();
    let (a, b) = (eq.alpha(), eq.beta());
    let k = 150;
    let edges: Vec<f64> = (0..=k).map(|i| a + (b - a) * i as f64 / k as f64).collect();
    let m: Vec<f64> =
        edges.windows(2).map(|e| quad::panels(e[0], e[1], &[], 16, 1.0).sum(|x| eq.psi(x).unwrap())).collect();
    let e0 = energy(eq, &m, &edges);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let mut p: Vec<f64> = m.iter().map(|&mi| mi * (1.0 + 0.3 * (rng.gen::<f64>() - 0.5))).collect();
        let s: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= s);
        assert!(energy(eq, &p, &edges) >= e0);
    }
}

#[test]
fn g_function() {
    let eq = gue();
    let z = C64::new(1e6, 0.0);
    assert!((eq.g(z, Side::Auto).unwrap() - z.ln()).norm() < 2e-6);
    let gp = eq.g(C64::new(0.0, 0.0), Side::Plus).unwrap();
    let gm = eq.g(C64::new(0.0, 0.0), Side::Minus).unwrap();
    assert!(((gp - gm) - C64::new(0.0, PI)).norm() < 1e-8);
    assert!((2.0 * gp.re - eq.field().v(0.0) - eq.ell()).abs() < 1e-8);
    let x = 0.7;
    let jump = eq.g(C64::new(x, 0.0), Side::Plus).unwrap() - eq.g(C64::new(x, 0.0), Side::Minus).unwrap();
    assert!((jump.im - eq.theta(x).unwrap()).abs() < 1e-8);
    assert!(matches!(eq.g(C64::new(0.3, 0.0), Side::Auto), Err(Error::Branch(_))));
}

#[test]
fn local_expansion_at_beta() {
    // g(z) + ½u_β^{3/2} − (cV(β)+ℓ)/2 − (cV′(β)/2)(z−β) = O(δ²)
    for eq in [gue(), c2lip()] {
        let b = eq.beta();
        let f = eq.field();
        let mut ratios = vec![];
        for d in [1e-2, 1e-3] {
            let z = C64::new(b + d, 0.0);
            let u = eq.u_beta(z);
            let r = eq.g(z, Side::Auto).unwrap() + 0.5 * u.powf(1.5)
                - 0.5 * (eq.c() * f.v(b) + eq.ell())
                - 0.5 * eq.c() * f.v1(b) * (z - b);
            ratios.push(r.norm() / (d * d));
        }
        assert!(ratios.iter().all(|r| r.is_finite() && *r < 10.0), "{ratios:?}");
    }
}

#[test]
fn conditions_report() {
    assert!(gue().verify_conditions().all_pass);
    let r = c2lip().verify_conditions();
    assert!(r.all_pass, "{r:?}");
    assert!(r.min_h_on_support > 0.0 && r.h_beta_prime < 0.0 && r.h_alpha_prime > 0.0);
    // V = x⁴ − 3x² has a two-interval support at c = 1
    let bad = ExternalField::custom(
        "double_well",
        |x| x.powi(4) - 3.0 * x * x,
        |x| 4.0 * x.powi(3) - 6.0 * x,
        |x| 12.0 * x * x - 6.0,
        false,
        Smoothness::Analytic,
        4.0,
        vec![],
    );
    match EquilibriumMeasure::solve(&bad, 1.0, DEFAULT_QUAD_ORDER) {
        Ok(eq) => assert!(!eq.verify_conditions().all_pass),
        Err(e) => assert!(e.exit_code() != 0),
    }
}

#[test]
fn quadrature_doubling() {
    for (id, tol) in [("gue", 1e-9), ("quartic(0)", 1e-9), ("c2lip(0,1)", 1e-6)] {
        let f = ExternalField::builtin(id).unwrap();
        let e1 = EquilibriumMeasure::solve(&f, 1.0, 128).unwrap();
        let e2 = EquilibriumMeasure::solve(&f, 1.0, 256).unwrap();
        assert!((e1.alpha() - e2.alpha()).abs() < tol);
        assert!((e1.beta() - e2.beta()).abs() < tol);
        assert!((e1.ell() - e2.ell()).abs() < tol);
        assert!((e1.psi(0.2).unwrap() - e2.psi(0.2).unwrap()).abs() < tol);
    }
}

#[test]
fn domain_and_validation() {
    let eq = gue();
    assert!(matches!(eq.psi(1.5), Err(Error::Domain(_))));
    assert!(matches!(eq.theta(-1.5), Err(Error::Domain(_))));
    assert!(matches!(eq.phi(0.0), Err(Error::Domain(_))));
    assert!(eq.h_alpha(2.0).is_none() && eq.h_beta(-2.0).is_none());
    let f = ExternalField::builtin("gue").unwrap();
    assert!(matches!(EquilibriumMeasure::solve(&f, 1.0, 4), Err(Error::Validation(_))));
    assert!(EquilibriumMeasure::solve(&f, -1.0, 256).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gue_density_closed_form(x in -1.414f64..1.414) {
        let eq = gue();
        let exact = (2.0 - x * x).sqrt() / PI;
        prop_assert!((eq.psi(x).unwrap() - exact).abs() < 1e-10);
    }

    #[test]
    fn h_functions_signs(t in 0.01f64..0.99) {
        let eq = c2lip();
        let (a, b) = (eq.alpha(), eq.beta());
        let x = a + (b - a) * t;
        prop_assert!(eq.h_beta(x).unwrap() > 0.0);
        prop_assert!(eq.h_alpha(x).unwrap() > 0.0);
        prop_assert!(eq.h_beta(b + 2.0 * t).unwrap() < 0.0);
        prop_assert!(eq.h_alpha(a - 2.0 * t).unwrap() < 0.0);
    }

    #[test]
    fn scaling_covariance(c in 0.5f64..4.0) {
        let f = ExternalField::builtin("gue").unwrap();
        let (a, b) = solve_endpoints(&f, c, (-8.0, 8.0)).unwrap();
        prop_assert!((b - (2.0 / c).sqrt()).abs() < 1e-10);
        prop_assert!((a + b).abs() < 1e-10);
    }
}
