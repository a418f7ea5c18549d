use proptest::prelude::*;
use qthermo::qfun::QParam;
use qthermo::ruelle::{
    classical_pressure, equilibrium_markov, ks_entropy, leading_eig, normalize, q_entropy_markov, transfer_matrix,
    Jacobian, MarkovMeasure, EIG_TOL,
};
use qthermo::Potential;

fn potential() -> impl Strategy<Value = Potential> {
    (2usize..4, 1usize..4).prop_flat_map(|(d, m)| {
        proptest::collection::vec(-2.0f64..2.0, d.pow(m as u32)).prop_map(move |v| Potential::new(d, m, v).unwrap())
    })
}

fn two_state() -> impl Strategy<Value = MarkovMeasure> {
    (0.01f64..0.99, 0.01f64..0.99).prop_map(|(a, b)| MarkovMeasure::two_state(a, b).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn perron_data_is_positive(a in potential()) {
        let e = leading_eig(&transfer_matrix(&a).unwrap(), EIG_TOL).unwrap();
        prop_assert!(e.lambda > 0.0);
        prop_assert!(e.h.iter().all(|&v| v > 0.0));
        prop_assert!(e.nu.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn normalized_rows_sum_to_one(a in potential()) {
        let nz = normalize(&a).unwrap();
        let j = Jacobian::from_log(&nz.log_j).unwrap();
        prop_assert!(j.max_row_defect() <= 1e-10);
    }

    #[test]
    fn rokhlin_consistency(a in potential()) {
        let nz = normalize(&a).unwrap();
        let j = Jacobian::from_log(&nz.log_j).unwrap();
        let mu = equilibrium_markov(&j).unwrap();
        let total = ks_entropy(&mu) + mu.integrate(&nz.log_j).unwrap();
        prop_assert!(total.abs() <= 1e-10, "{total}");
        prop_assert!(classical_pressure(&nz.log_j).unwrap().abs() <= 1e-10);
    }

    #[test]
    fn pressure_is_coboundary_invariant(a in potential(), f in proptest::collection::vec(-2.0f64..2.0, 3)) {
        let f = Potential::new(a.d(), 1, f[..a.d()].to_vec()).unwrap();
        let cob = Potential::coboundary(&f).unwrap();
        let m = a.memory().max(cob.memory());
        let shifted = a.with_memory(m).unwrap().add(&cob.with_memory(m).unwrap()).unwrap();
        let (p0, p1) = (classical_pressure(&a).unwrap(), classical_pressure(&shifted).unwrap());
        prop_assert!((p0 - p1).abs() <= 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn q_entropy_dominates_ks_entropy_below_one(mu in two_state(), q in 0.01f64..0.99) {
        prop_assert!(q_entropy_markov(&mu, QParam::of(q)) >= ks_entropy(&mu) - 1e-12);
    }

    #[test]
    fn ks_entropy_dominates_q_entropy_above_one(mu in two_state(), q in 1.01f64..3.0) {
        prop_assert!(ks_entropy(&mu) >= q_entropy_markov(&mu, QParam::of(q)) - 1e-12);
    }
}
