use proptest::prelude::*;
use qthermo::qfun::{exp_q, log_q, QParam};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn exp_inverts_log(q in 0.05f64..3.0, x in 0.01f64..100.0) {
        let q = QParam::of(q);
        let y = exp_q(log_q(x, q).unwrap(), q).unwrap();
        prop_assert!((y - x).abs() <= 1e-12 * x.max(1.0), "{y} vs {x}");
    }

    #[test]
    fn log_inverts_exp(q in 0.05f64..3.0, u in -3.0f64..3.0) {
        let q = QParam::of(q);
        if let Ok(e) = exp_q(u, q) {
            prop_assert!(rel(log_q(e, q).unwrap(), u) <= 1e-12);
        }
    }

    #[test]
    fn log_is_increasing(q in 0.05f64..3.0, mut xs in proptest::collection::vec(0.01f64..50.0, 2..20)) {
        let q = QParam::of(q);
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let ys: Vec<f64> = xs.iter().map(|&x| log_q(x, q).unwrap()).collect();
        prop_assert!(ys.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn exp_is_increasing(q in 0.05f64..3.0, mut us in proptest::collection::vec(-2.0f64..2.0, 2..20)) {
        let q = QParam::of(q);
        us.sort_by(f64::total_cmp);
        us.dedup();
        let ys: Vec<f64> = us.iter().filter_map(|&u| exp_q(u, q).ok()).collect();
        prop_assert!(ys.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn classical_limit_is_first_order(dq in -1e-6f64..1e-6, x in 0.1f64..10.0) {
        let l = x.ln();
        let gap = (log_q(x, QParam::of(1.0 + dq)).unwrap() - l).abs();
        prop_assert!(gap <= 0.51 * dq.abs() * l * l + 1e-15, "gap {gap}");
    }

    #[test]
    fn pseudo_additivity(q in 0.05f64..3.0, a in 0.01f64..100.0, b in 0.01f64..100.0) {
        let q = QParam::of(q);
        let (la, lb) = (log_q(a, q).unwrap(), log_q(b, q).unwrap());
        let lhs = log_q(a * b, q).unwrap();
        let rhs = la + lb + (1.0 - q.value()) * la * lb;
        prop_assert!(rel(lhs, rhs) <= 1e-10, "{lhs} vs {rhs}");
    }

    #[test]
    fn exp_is_midpoint_convex(q in 0.05f64..3.0, u in -1.5f64..1.5, v in -1.5f64..1.5) {
        let q = QParam::of(q);
        if let (Ok(a), Ok(b), Ok(m)) = (exp_q(u, q), exp_q(v, q), exp_q(0.5 * (u + v), q)) {
            prop_assert!(m <= 0.5 * (a + b) + 1e-12 * (a + b));
        }
    }
}
