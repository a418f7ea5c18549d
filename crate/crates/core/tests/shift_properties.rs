use std::collections::HashSet;

use proptest::prelude::*;
use qthermo::shift::{distance, preimages, Potential};

fn potential() -> impl Strategy<Value = Potential> {
    (2usize..4, 1usize..4).prop_flat_map(|(d, m)| {
        proptest::collection::vec(-3.0f64..3.0, d.pow(m as u32))
            .prop_map(move |v| Potential::new(d, m, v).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn lipschitz_bound_holds(a in potential(), seed in any::<u64>()) {
        let d = a.d() as u64;
        let len = a.memory() + 3;
        let mut s = seed;
        let mut next = || { s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407); (s >> 33) % d + 1 };
        let x: Vec<u8> = (0..len).map(|_| next() as u8).collect();
        let mut y = x.clone();
        let k = (next() as usize) % len;
        for v in y.iter_mut().skip(k) {
            *v = next() as u8;
        }
        let diff = (a.eval_symbols(&x).unwrap() - a.eval_symbols(&y).unwrap()).abs();
        prop_assert!(diff <= a.lipschitz_bound() * distance(&x, &y) + 1e-12);
    }

    #[test]
    fn birkhoff_sum_matches_naive(a in potential(), w in proptest::collection::vec(1u8..3, 1..30)) {
        let d = a.d();
        let w = qthermo::Word::new(d, w).unwrap();
        let tail = qthermo::Word::new(d, vec![1; a.memory() - 1]).unwrap();
        let fast = a.birkhoff_sum(&w, &tail).unwrap();
        let slow = a.birkhoff_sum_naive(&w, &tail).unwrap();
        prop_assert!((fast - slow).abs() <= 1e-12 * slow.abs().max(1.0));
    }
}

#[test]
fn preimages_are_exhaustive_and_distinct() {
    for d in 2..=3 {
        for n in 0..=(if d == 2 { 12 } else { 7 }) {
            let words: Vec<Vec<u8>> = preimages(d, n).map(|w| w.symbols().to_vec()).collect();
            assert_eq!(words.len(), d.pow(n as u32));
            let set: HashSet<Vec<u8>> = words.iter().cloned().collect();
            assert_eq!(set.len(), words.len());
            assert!(words.iter().all(|w| w.len() == n && w.iter().all(|&s| (1..=d as u8).contains(&s))));
        }
    }
}
