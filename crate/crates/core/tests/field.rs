use opx::field::{ExternalField, Smoothness};
use opx::Error;
use proptest::prelude::*;

#[test]
fn catalog_values() {
    let g = ExternalField::builtin("gue").unwrap();
    assert_eq!(g.v(2.0), 4.0);
    assert_eq!(g.growth_hint(), 8.0);
    assert!(g.is_convex() && g.is_even());
    let c = ExternalField::builtin("c2lip(0,1)").unwrap();
    assert_eq!(c.v2(-1.0), 1.0);
    assert_eq!(c.v2(1.0), 7.0);
    assert_eq!(c.smoothness(), Smoothness::C2Lipschitz);
    assert_eq!(c.breakpoints(), &[0.0]);
    assert!(!c.is_even());
    let q = ExternalField::builtin("quartic(1)").unwrap();
    assert_eq!(q.v1(1.0), 2.0);
    assert_eq!(q.growth_hint(), 4.0);
    assert!(!q.is_convex());
    assert!(ExternalField::builtin("quartic(-1)").unwrap().is_convex());
    assert_eq!(ExternalField::builtin(" c2lip(0.5, 2) ").unwrap().id(), "c2lip(0.5, 2)");
}

#[test]
fn catalog_errors() {
    assert!(matches!(ExternalField::builtin("cosh"), Err(Error::Catalog(_))));
    assert!(matches!(ExternalField::builtin("c2lip(0,-1)"), Err(Error::Validation(_))));
    assert!(matches!(ExternalField::builtin("c2lip(0)"), Err(Error::Validation(_))));
    assert!(matches!(ExternalField::builtin("quartic(2)"), Err(Error::Validation(_))));
    assert!(matches!(ExternalField::builtin("quartic(a)"), Err(Error::Validation(_))));
    assert!(matches!(ExternalField::builtin("quartic(inf)"), Err(Error::Validation(_))));
}

#[test]
fn c2lip_with_zero_cubic_is_smooth() {
    let f = ExternalField::builtin("c2lip(0,0)").unwrap();
    assert_eq!(f.smoothness(), Smoothness::Analytic);
    assert!(f.breakpoints().is_empty());
    assert!(f.is_even());
}

#[test]
fn custom_field() {
    let f = ExternalField::custom("cosh", f64::cosh, f64::sinh, f64::cosh, true, Smoothness::Analytic, 6.0, vec![]);
    assert_eq!(f.id(), "cosh");
    assert_eq!(f.v(0.0), 1.0);
    assert_eq!(f.v1(0.0), 0.0);
    assert_eq!(f.growth_hint(), 6.0);
    assert!(!f.is_even());
}

fn fd_consistent(f: &ExternalField, x: f64) -> (f64, f64) {
    let h = 1e-5;
    let d1 = (f.v(x + h) - f.v(x - h)) / (2.0 * h);
    let d2 = (f.v1(x + h) - f.v1(x - h)) / (2.0 * h);
    ((d1 - f.v1(x)).abs(), (d2 - f.v2(x)).abs())
}

proptest! {
    #[test]
    fn derivatives_consistent(x in -3.0f64..3.0, a in -1.0f64..1.0, c0 in 0.0f64..3.0, g in -2.0f64..1.9) {
        for id in [format!("c2lip({a},{c0})"), format!("quartic({g})"), "gue".to_string()] {
            let f = ExternalField::builtin(&id).unwrap();
            if (x - a).abs() < 1e-4 && id.starts_with("c2lip") {
                continue;
            }
            let (e1, e2) = fd_consistent(&f, x);
            let scale = 1.0 + f.v2(x).abs() + f.v1(x).abs();
            prop_assert!(e1 < 1e-7 * scale, "{id} x={x} e1={e1}");
            prop_assert!(e2 < 1e-6 * scale, "{id} x={x} e2={e2}");
        }
    }

    #[test]
    fn convex_catalog_has_positive_curvature(x in -5.0f64..5.0, a in -1.0f64..1.0, c0 in 0.0f64..3.0) {
        let f = ExternalField::builtin(&format!("c2lip({a},{c0})")).unwrap();
        prop_assert!(f.v2(x) >= 1.0);
        prop_assert!(ExternalField::builtin("gue").unwrap().v2(x) > 0.0);
    }

    #[test]
    fn even_fields_are_even(x in -3.0f64..3.0, g in -2.0f64..1.9) {
        let f = ExternalField::builtin(&format!("quartic({g})")).unwrap();
        prop_assert_eq!(f.v(x), f.v(-x));
        prop_assert_eq!(f.v1(x), -f.v1(-x));
    }
}
