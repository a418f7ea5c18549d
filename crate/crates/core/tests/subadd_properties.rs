use proptest::prelude::*;
use qthermo::qfun::QParam;
use qthermo::staticq::ProbVector;
use qthermo::subadd::{
    asymptotic_pressure, frak_l_n, frak_l_n_enumerate, kingman_mean, shifted_sequence_comparison,
    subadditivity_slack, variational_scan_subadd, weak_subadditivity_excess,
};
use qthermo::{Potential, Word};

fn nonnegative(memory: usize) -> impl Strategy<Value = Potential> {
    proptest::collection::vec(0.0f64..2.0, 1 << memory).prop_map(move |v| Potential::new(2, memory, v).unwrap())
}

fn lattice(memory: usize) -> impl Strategy<Value = Potential> {
    proptest::collection::vec(0u8..5, 1 << memory)
        .prop_map(move |v| Potential::new(2, memory, v.iter().map(|&x| 0.5 * x as f64).collect()).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn phi_is_subadditive(a in nonnegative(2), w in proptest::collection::vec(1u8..3, 2..60), split in 1usize..59, q in 0.05f64..0.95) {
        let n = split.min(w.len() - 1);
        let w = Word::new(2, w).unwrap();
        let tail = Word::parse(2, "2").unwrap();
        prop_assert!(subadditivity_slack(&a, QParam::of(q), &w, n, &tail).unwrap() >= -1e-12);
    }

    #[test]
    fn buckets_match_enumeration(a in nonnegative(2), n in 0usize..=14, x0 in prop::sample::select(vec!["1", "2"])) {
        let q = QParam::of(0.5);
        let x0 = Word::parse(2, x0).unwrap();
        let dp = frak_l_n(&a, q, &x0, n).unwrap().ln;
        let en = frak_l_n_enumerate(&a, q, &x0, n).unwrap().ln;
        prop_assert!((dp - en).abs() <= 1e-12, "{dp} vs {en}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn log_l_is_weakly_subadditive_and_settles(a in lattice(2)) {
        let r = asymptotic_pressure(&a, QParam::of(0.5), &Word::parse(2, "1").unwrap(), 400).unwrap();
        prop_assert!(weak_subadditivity_excess(&r.sequence, 200) <= 10.0);
        prop_assert!(r.tail_oscillation() < 0.01, "{}", r.tail_oscillation());
    }
}

#[test]
fn enumeration_agrees_up_to_twenty() {
    let q = QParam::of(0.5);
    let a = Potential::new(2, 2, vec![0.0, 0.5, 1.0, 0.25]).unwrap();
    let x0 = Word::parse(2, "2").unwrap();
    for n in [16, 18, 20] {
        let dp = frak_l_n(&a, q, &x0, n).unwrap().ln;
        let en = frak_l_n_enumerate(&a, q, &x0, n).unwrap().ln;
        assert!((dp - en).abs() <= 1e-12, "{n}: {dp} vs {en}");
    }
}

#[test]
fn kingman_average_vanishes() {
    let a = Potential::new(2, 2, vec![0.2, 1.0, 0.7, 1.5]).unwrap();
    let m = kingman_mean(&a, QParam::of(0.5), &ProbVector::uniform(2), 1000, 10_000, 3).unwrap();
    assert!(m.abs() <= 0.05, "{m}");
}

#[test]
fn shifted_sequence_stays_within_bound() {
    let a = Potential::new(2, 1, vec![-0.1, 1.0]).unwrap();
    for n in [10, 100, 1000] {
        let r = shifted_sequence_comparison(&a, QParam::of(0.5), n, 2000, n as u64).unwrap();
        assert!(r.in_domain_fraction > 0.99);
        assert!(r.max_ratio <= r.bound, "{n}: {r:?}");
    }
}

#[test]
fn subadditive_scan_is_log_two() {
    for v in [vec![1.0, 1.0], vec![0.0, 1.0]] {
        let a = Potential::new(2, 1, v).unwrap();
        let s = variational_scan_subadd(&a, QParam::of(0.5), 101).unwrap();
        assert!((s.value - 2f64.ln()).abs() < 1e-6, "{}", s.value);
    }
}

#[test]
fn subadditive_scan_matches_asymptotic_pressure() {
    let a = Potential::new(2, 2, vec![0.5, 0.0, 1.0, 1.5]).unwrap();
    let q = QParam::of(0.5);
    let s = variational_scan_subadd(&a, q, 101).unwrap();
    let r = asymptotic_pressure(&a, q, &Word::parse(2, "1").unwrap(), 1000).unwrap();
    assert!((s.value - r.estimate).abs() <= 0.02, "{} vs {}", s.value, r.estimate);
}
