mod common;

use std::collections::BTreeSet;

use common::{compare_partitions, principal_conditions};
use hauptmodul_traces::forms::{self, Mat2};
use hauptmodul_traces::TraceEngine;
use proptest::prelude::*;

#[test]
fn coset_classes_match_brute_force_orbits() {
    for p in [2u32, 3, 5] {
        for d in 1..=100 {
            if forms::discriminant_ok(d, p) {
                compare_partitions(d, p).unwrap();
            }
        }
    }
}

#[test]
fn principal_form_conditions_agree() {
    let mut hits = 0;
    for d in 1..=200 {
        if !forms::discriminant_ok(d, 3) {
            continue;
        }
        for class in forms::gamma0_classes_all(d, 3).unwrap() {
            let (a, b, c) = principal_conditions(&class.representative);
            assert!(a == b && b == c, "d={d} {}: {a} {b} {c}", class.representative);
            hits += a as usize;
        }
    }
    assert!(hits > 0);
}

#[test]
fn unstarred_traces_do_not_depend_on_beta() {
    for p in [2u32, 3, 5] {
        let engine = TraceEngine::new(p, 2).unwrap();
        for d in 1..=100 {
            let betas = forms::betas(d, p);
            if betas.len() < 2 {
                continue;
            }
            for m in [1u32, 2] {
                let values: BTreeSet<_> = betas
                    .iter()
                    .map(|&b| engine.trace_beta(m, d, b).unwrap().value)
                    .collect();
                assert_eq!(values.len(), 1, "p={p} m={m} d={d}: {values:?}");
            }
        }
    }
}

fn gamma0_word(p: i64, steps: &[(bool, i64)]) -> Mat2 {
    steps.iter().fold(Mat2::IDENTITY, |acc, &(upper, k)| {
        let g = if upper { Mat2::new(1, k, 0, 1) } else { Mat2::new(1, 0, p * k, 1) };
        acc.mul(&g)
    })
}

fn level() -> impl Strategy<Value = u32> {
    prop_oneof![Just(2u32), Just(3), Just(5)]
}

proptest! {
    #[test]
    fn reduction_is_a_class_invariant(
        d in 3i64..400,
        steps in prop::collection::vec((any::<bool>(), -3i64..=3), 0..6),
    ) {
        let classes = forms::enumerate_sl2_classes(d);
        prop_assume!(!classes.is_empty());
        let q = classes[(d as usize * 7) % classes.len()];
        let moved = q.compose(&gamma0_word(1, &steps));
        prop_assert_eq!(moved.discriminant(), q.discriminant());
        prop_assert_eq!(forms::sl2_reduce(&moved).unwrap(), q);
    }

    #[test]
    fn labels_are_gamma0_invariant(
        p in level(),
        d in 3i64..300,
        pick in 0usize..64,
        steps in prop::collection::vec((any::<bool>(), -2i64..=2), 0..6),
    ) {
        prop_assume!(forms::discriminant_ok(d, p));
        let classes = forms::gamma0_classes_all(d, p).unwrap();
        let q = classes[pick % classes.len()].representative;
        let moved = q.compose(&gamma0_word(p as i64, &steps));
        prop_assert_eq!(moved.a % p as i64, 0);
        prop_assert_eq!(forms::class_label(&moved, p).unwrap(), forms::class_label(&q, p).unwrap());
        let w = forms::fricke_action(&q, p).unwrap();
        prop_assert_eq!(forms::star_label(&w, p).unwrap(), forms::star_label(&q, p).unwrap());
    }

    #[test]
    fn min_rep_stays_in_its_class(p in level(), d in 3i64..300, pick in 0usize..64) {
        prop_assume!(forms::discriminant_ok(d, p));
        let classes = forms::gamma0_classes_all(d, p).unwrap();
        let q = classes[pick % classes.len()].representative;
        let r = forms::min_rep_gamma0(&q, p).unwrap();
        prop_assert!(r.a <= q.a);
        prop_assert_eq!(forms::class_label(&r, p).unwrap(), forms::class_label(&q, p).unwrap());
    }
}
