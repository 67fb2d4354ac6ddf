use indefspec::critical::WeightFunction;
use indefspec::eigen::{EigenCase, K_MAX};
use indefspec::infzone::{Gap, ZoneSpec};
use indefspec::measure::{AtomFamily, PointClass, Violation};
use indefspec::{SpectralMeasure, SpectralPair, WeylCoefficient, C64};
use proptest::prelude::*;

fn lambda() -> impl Strategy<Value = C64> {
    (-8.0..8.0f64, 0.01..5.0f64, any::<bool>()).prop_map(|(re, im, up)| C64::new(re, if up { im } else { -im }))
}

/// Integer atoms plus up to four extra atoms at half-integers.
fn measure() -> impl Strategy<Value = SpectralMeasure> {
    (prop::collection::btree_map(-6i32..6, 0.01..10.0f64, 0..4), 0.1..3.0f64).prop_map(|(extra, w)| {
        let fam = AtomFamily::parse("k", &format!("{w}"), None, None, 0.0, None).unwrap();
        extra
            .into_iter()
            .fold(SpectralMeasure::new().with_family(fam), |m, (k, w)| m.with_atom(k as f64 + 0.5, w))
    })
}

fn weyl() -> impl Strategy<Value = WeylCoefficient> {
    (measure(), -3.0..3.0f64).prop_map(|(m, c)| WeylCoefficient::new(m, c))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weyl_coefficients_are_herglotz(wc in weyl(), l in lambda()) {
        let v = wc.eval(l).unwrap();
        prop_assert!(l.im * v.im >= -1e-10);
        let vc = wc.eval(l.conj()).unwrap();
        prop_assert!((vc - v.conj()).norm() <= 1e-10 * (1.0 + v.norm()));
    }

    #[test]
    fn phi_is_the_difference(p in weyl(), m in weyl(), l in lambda()) {
        let pair = SpectralPair::new(p.clone(), m.clone());
        let phi = pair.phi.eval(l).unwrap();
        let diff = p.eval(l).unwrap() - m.eval(l).unwrap();
        prop_assert!((phi - diff).norm() <= 1e-12 * (1.0 + diff.norm()));
    }

    #[test]
    fn atoms_are_ap_and_validate_clean(m in measure(), k in -6i32..6) {
        prop_assert!(m.validate().is_empty());
        prop_assert_eq!(m.classify_point(C64::new(k as f64, 0.0)), PointClass::Ap);
        let off = C64::new(k as f64 + 0.25, 0.0);
        prop_assert_ne!(m.classify_point(off), PointClass::Ap);
    }

    #[test]
    fn negative_weights_are_flagged(m in measure(), w in -5.0..0.0f64) {
        let v = m.with_atom(0.75, w).validate();
        let flagged = v.iter().any(|v| matches!(v, Violation::NonPositiveWeight { .. }));
        prop_assert!(flagged);
    }

    #[test]
    fn eigen_report_invariants(p in weyl(), m in weyl(), k in -4i32..4, half in any::<bool>()) {
        let pair = SpectralPair::new(p, m);
        prop_assume!(!pair.degenerate_check());
        let l = C64::new(k as f64 + if half { 0.5 } else { 0.0 }, 0.0);
        let rep = pair.classify_eigenvalue(l, K_MAX).unwrap();
        if matches!(rep.case, EigenCase::A0Side | EigenCase::Mixed) {
            prop_assert!(!rep.is_eigenvalue);
        }
        prop_assert_eq!(rep.geometric, usize::from(rep.is_eigenvalue));
        prop_assert_eq!(rep.is_eigenvalue, rep.algebraic.is_some());
    }
}

fn zone() -> impl Strategy<Value = ZoneSpec> {
    let gap = (0.2..3.0f64, 0.0..1.0f64, 0.0..=1.0f64, any::<bool>(), any::<bool>());
    (-3.0..0.0f64, prop::collection::vec(gap, 1..12)).prop_map(|(mu0r, raw)| {
        let mut top = mu0r;
        let gaps = raw
            .into_iter()
            .map(|(step, len, frac, collapse, up)| {
                top += step;
                let mul = top;
                if !collapse {
                    top += len + 0.01;
                }
                Gap {
                    mul,
                    mur: top,
                    xi: mul + frac * (top - mul),
                    eps: if up { 1.0 } else { -1.0 },
                }
            })
            .collect();
        ZoneSpec::new(mu0r, gaps).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn zone_identity_holds(z in zone(), pts in prop::collection::vec(lambda(), 1..8)) {
        let r = z.identity_residual(&pts, 64).unwrap();
        prop_assert!(r < 1e-10, "residual {}", r);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn critical_verdict_is_scale_invariant(alpha in -2.9..-1.1f64, c in 0.1..10.0f64) {
        // stay clear of the -5/3 threshold
        prop_assume!((alpha + 5.0 / 3.0).abs() > 0.05);
        let w = WeightFunction::power(alpha);
        let a = w.critical_verdict().unwrap();
        let b = w.scaled(c).critical_verdict().unwrap();
        prop_assert_eq!(a.zero_is_eigenvalue, b.zero_is_eigenvalue);
        prop_assert_eq!(a.eigenvector_neutral, b.eigenvector_neutral);
        prop_assert_eq!(a.zero_simple, b.zero_simple);
        prop_assert_eq!(a.singular_critical_point, b.singular_critical_point);
        if a.singular_critical_point == Some(true) {
            prop_assert!(a.zero_is_eigenvalue && a.eigenvector_neutral && a.zero_simple == Some(true));
        }
    }
}
