use std::f64::consts::PI;

use oddgon::derivation::{
    compare_with_ksl, derivability_closure, derive_via_diagrams, ksl, random_walk, sandwiched, ClosureStatus, Pipeline, Topology, Word,
};
use oddgon::flow::{normalize_direction, random_trajectory};
use oddgon::geometry::Point;
use oddgon::torus::{derived_between, torus_derive_geometric, torus_derive_rule, torus_trace};
use oddgon::trig::{identity_sum, telescoping_identity};
use oddgon::{build_surface, Tolerance};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn word_strategy(max_letter: usize, max_len: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1..=max_letter, 0..=max_len)
}

fn odd_n() -> impl Strategy<Value = usize> {
    prop::sample::select(vec![5usize, 7, 9, 11])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn trig_identities_hold(theta in 0.01f64..PI - 0.01, k in 1usize..=12) {
        let (a, b) = telescoping_identity(theta, k).unwrap();
        let (c, d) = identity_sum(theta, k).unwrap();
        prop_assert!((a - b).abs() < 1e-10);
        prop_assert!((c - d).abs() < 1e-10);
    }

    #[test]
    fn window_ksl_keeps_exactly_the_sandwiched_letters(w in word_strategy(4, 20)) {
        let idx = sandwiched(&w, Topology::Window);
        let out = ksl(&Word::window(w.clone()));
        prop_assert_eq!(out.letters, idx.iter().map(|&i| w[i]).collect::<Vec<_>>());
        for &i in &idx {
            prop_assert!(i > 0 && i + 1 < w.len() && w[i - 1] == w[i + 1]);
        }
    }

    #[test]
    fn cyclic_ksl_is_rotation_invariant(w in word_strategy(4, 16), r in 0usize..16) {
        prop_assume!(!w.is_empty());
        let mut rotated = w.clone();
        rotated.rotate_left(r % w.len());
        prop_assert_eq!(ksl(&Word::cyclic(w)), ksl(&Word::cyclic(rotated)));
    }

    #[test]
    fn ksl_commutes_with_relabelling(w in word_strategy(5, 16), perm in Just((1..=5usize).collect::<Vec<_>>()).prop_shuffle()) {
        let relabel = |v: &[usize]| v.iter().map(|&k| perm[k - 1]).collect::<Vec<_>>();
        for topo in [Topology::Window, Topology::Cyclic] {
            let word = Word { letters: w.clone(), topology: topo };
            let a = ksl(&word.map(|&k| perm[k - 1]));
            let b = ksl(&word);
            prop_assert_eq!(a, Word { letters: relabel(&b.letters), topology: topo });
        }
    }

    #[test]
    fn closure_ends_fixed_or_empty(w in word_strategy(3, 12)) {
        prop_assume!(!w.is_empty());
        let c = derivability_closure(&Word::cyclic(w), 64);
        match c.status {
            ClosureStatus::Fixed => {
                let last = c.orbit.last().unwrap();
                prop_assert_eq!(&ksl(last), last);
            }
            ClosureStatus::Empty => prop_assert!(c.orbit.last().unwrap().is_empty()),
            other => prop_assert!(false, "unexpected status {:?}", other),
        }
        for pair in c.orbit.windows(2) {
            prop_assert!(pair[1].len() <= pair[0].len());
        }
    }

    #[test]
    fn sector_map_is_a_relabelling(n in odd_n(), theta in -10.0f64..10.0) {
        let s = build_surface(n).unwrap();
        let m = normalize_direction(theta, &s);
        prop_assert!(m.theta >= 0.0 && m.theta < PI / n as f64);
        let mut sorted = m.perm.clone();
        sorted.sort_unstable();
        prop_assert_eq!(sorted, (1..=n).collect::<Vec<_>>());
        let inv = m.inverse_perm();
        for k in 1..=n {
            prop_assert_eq!(inv[m.perm[k - 1] - 1], k);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn traced_sequences_are_diagram_walks(n in prop::sample::select(vec![5usize, 7, 9]), seed in any::<u64>()) {
        let s = build_surface(n).unwrap();
        let p = Pipeline::new(&s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tr = random_trajectory(&s, &mut rng, 30, Tolerance::default());
        let l = tr.letters();
        for w in l.windows(2) {
            prop_assert!(p.has_transition(w[0], w[1]));
        }
        for (a, b) in tr.crossings.iter().zip(tr.crossings.iter().skip(1)) {
            prop_assert_ne!(a.polygon, b.polygon);
        }
        if let Some(period) = tr.period() {
            prop_assert_eq!(period % 2, 0);
        }
    }

    #[test]
    fn diagram_derivation_matches_ksl_on_random_walks(n in prop::sample::select(vec![5usize, 7, 9]), seed in any::<u64>(), len in 3usize..=30) {
        let s = build_surface(n).unwrap();
        let p = Pipeline::new(&s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = random_walk(&p, &mut rng, len);
        prop_assert_eq!(compare_with_ksl(&p, &w, Topology::Window).unwrap(), None);
        let cyclic = Word::cyclic(w.clone());
        if p.has_transition(w[len - 1], w[0]) {
            prop_assert_eq!(derive_via_diagrams(&cyclic, &p).unwrap(), ksl(&cyclic));
        }
    }

    #[test]
    fn torus_rule_matches_geometry(theta in 0.01f64..PI / 4.0 - 0.01, x in 0.05f64..0.95, y in 0.05f64..0.95) {
        let tr = match torus_trace(Point::new(x, y), theta, 60, 1e-12) {
            Ok(t) => t,
            Err(_) => return Ok(()),
        };
        let d = torus_derive_geometric(&tr, 1e-12);
        prop_assume!(d.is_ok());
        let got = derived_between(&tr, &d.unwrap(), 1e-12);
        prop_assert_eq!(got, torus_derive_rule(&tr.window()).letters);
    }
}
