use proptest::prelude::*;
use qthermo::qfun::{log_q, QParam};
use qthermo::ruelle::classical_pressure;
use qthermo::variational::{entropy_affinity_report, entropy_surface, q_pressure_objective, q_pressure_scan};
use qthermo::Potential;

fn memory_two() -> impl Strategy<Value = Potential> {
    proptest::collection::vec(-1.0f64..1.0, 4).prop_map(|v| Potential::new(2, 2, v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn scan_value_is_reevaluated(a in memory_two(), q in 0.3f64..1.7) {
        let q = QParam::of(q);
        let s = q_pressure_scan(&a, q, 60).unwrap();
        prop_assert!((s.value - q_pressure_objective(&a, q, &s.argmax).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn scan_exceeds_classical_pressure_below_one(a in memory_two(), q in 0.1f64..0.9) {
        let s = q_pressure_scan(&a, QParam::of(q), 80).unwrap();
        prop_assert!(s.value >= classical_pressure(&a).unwrap() - 1e-9);
    }

    #[test]
    fn scan_translation(a in memory_two(), c in -2.0f64..2.0) {
        let q = QParam::of(0.5);
        let s0 = q_pressure_scan(&a, q, 60).unwrap().value;
        let s1 = q_pressure_scan(&a.map(|v| v + c).unwrap(), q, 60).unwrap().value;
        prop_assert!((s1 - s0 - c).abs() <= 1e-6);
    }

    #[test]
    fn scan_monotone(a in memory_two(), bump in proptest::collection::vec(0.0f64..1.0, 4)) {
        let q = QParam::of(1.5);
        let b = a.add(&Potential::new(2, 2, bump).unwrap()).unwrap();
        let (sa, sb) = (q_pressure_scan(&a, q, 60).unwrap().value, q_pressure_scan(&b, q, 60).unwrap().value);
        prop_assert!(sb >= sa - 1e-6);
    }

    #[test]
    fn scan_coboundary_invariance(a in memory_two(), f in proptest::collection::vec(-1.0f64..1.0, 2)) {
        let q = QParam::of(0.5);
        let cob = Potential::coboundary(&Potential::new(2, 1, f).unwrap()).unwrap();
        let s0 = q_pressure_scan(&a, q, 100).unwrap().value;
        let s1 = q_pressure_scan(&a.add(&cob).unwrap(), q, 100).unwrap().value;
        prop_assert!((s0 - s1).abs() <= 1e-3);
    }
}

#[test]
fn surface_maximum_at_uniform_chain() {
    for qv in [0.5, 0.9, 1.0, 1.5] {
        let q = QParam::of(qv);
        let s = entropy_surface(q, 100).unwrap();
        assert_eq!((s.max.p12, s.max.p21), (0.5, 0.5));
        assert!((s.max.h_q - log_q(2.0, q).unwrap()).abs() <= 1e-12);
        assert_eq!(s.midpoint.tests, 1000);
        assert_eq!(s.to_csv().lines().count(), 99 * 99 + 1);
    }
}

#[test]
fn surface_is_not_concave_in_transition_coordinates() {
    let s = entropy_surface(QParam::of(0.9), 200).unwrap();
    assert!(s.midpoint.failures > 0);
    assert!(s.midpoint.worst_defect < -1e-4);
}

#[test]
fn affinity_defects_respect_concavity() {
    let r = entropy_affinity_report(QParam::of(0.5), 40, 9).unwrap();
    assert!(r.min_defect >= -1e-6, "{}", r.min_defect);
    assert_eq!(r.defects.len(), 40);
}
