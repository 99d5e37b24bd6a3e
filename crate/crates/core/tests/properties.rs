use num_traits::{One, Zero};
use proptest::prelude::*;

use tfun_core::behavior::{check_no_signalling, TfDistribution};
use tfun_core::quantum::{self, SettingAngles};
use tfun_core::rational::{ratio, Rational};
use tfun_core::scenario::{detect_backward_causality, ChainedScenario, Relay};
use tfun_core::spacetime::{
    boost, classify_interval, classify_interval_with, minimal_pigeonhole_n, BoostedConfiguration,
    Event, DEFAULT_NULL_EPSILON,
};
use tfun_core::tf::{
    classify_signalling, format_tf, parse_tf, ExperimentShape, PartySpec, TransferFunction,
};

#[test]
fn state_vector_matches_closed_form_over_a_sweep() {
    for k in 0..1000 {
        let a = -7.0 + 0.014 * k as f64;
        let b = 2.5 - 0.0071 * k as f64;
        let sv = quantum::joint_probabilities(a, b);
        let cf = quantum::closed_form(a - b);
        for (x, y) in sv.iter().zip(&cf) {
            assert!((x - y).abs() < 1e-12, "angles {a} {b}: {sv:?} vs {cf:?}");
        }
        assert!((sv.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

proptest! {
    #[test]
    fn rationalized_singlet_is_exactly_no_signalling(theta in proptest::collection::vec(-6.3f64..6.3, 1..=3)) {
        let angles = SettingAngles::new(theta).unwrap();
        let b = quantum::singlet_behavior(&angles, quantum::DEFAULT_DENOMINATOR_BOUND).unwrap();
        prop_assert!(check_no_signalling(&b).is_null());
    }

    #[test]
    fn exact_mode_agrees_with_floats(sixths in proptest::collection::vec(-12i64..=12, 1..=3)) {
        let b = match quantum::singlet_behavior_exact(&sixths) {
            Ok(b) => b,
            Err(quantum::QuantumError::NotExact(_)) => return Ok(()),
            Err(e) => panic!("{e}"),
        };
        let theta: Vec<f64> = sixths.iter().map(|&k| k as f64 * std::f64::consts::PI / 6.0).collect();
        let floats = quantum::singlet_probabilities(&SettingAngles::new(theta).unwrap());
        for (i, row) in floats.iter().enumerate() {
            for (j, &p) in row.iter().enumerate() {
                let exact = tfun_core::rational::to_f64(b.prob(i, j));
                prop_assert!((exact - p).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn boosts_preserve_interval_class(
        a in proptest::array::uniform4(-10.0f64..10.0),
        b in proptest::array::uniform4(-10.0f64..10.0),
        r in -4.0f64..4.0,
    ) {
        let ea = Event::new(a[0], a[1], a[2], a[3]).unwrap();
        let eb = Event::new(b[0], b[1], b[2], b[3]).unwrap();
        if let Ok(before) = classify_interval_with(&ea, &eb, 1e-4) {
            prop_assert_eq!(classify_interval(&boost(&ea, r), &boost(&eb, r)), Ok(before));
        }
    }

    #[test]
    fn configurations_chain_for_valid_parameters(
        n in 1usize..=4,
        l in 0.1f64..10.0,
        phi in 0.05f64..1.5,
        frac in 0.001f64..0.999,
    ) {
        let tau = l * phi.sinh().min(1.0) * frac;
        let c = BoostedConfiguration::generate(n, l, phi, Some(tau)).unwrap();
        for r in c.all_relations(DEFAULT_NULL_EPSILON).unwrap() {
            prop_assert!(r.is_ordered(), "{:?}", r);
            if frac <= 0.01 {
                prop_assert!(r.carries_chain(), "{:?}", r);
            }
        }
        prop_assert!(c.sides_spacelike(DEFAULT_NULL_EPSILON).unwrap());
    }

    #[test]
    fn minimal_n_is_least(num in 1i64..=60, den in 1i64..=60) {
        prop_assume!(num <= den);
        let p = ratio(num, den);
        let n = minimal_pigeonhole_n(&p).unwrap() as i64;
        prop_assert!(p > ratio(1, 2 * n + 1));
        prop_assert!(n == 1 || p <= ratio(1, 2 * n - 1));
    }

    #[test]
    fn text_form_round_trips(
        parties in proptest::collection::vec((1usize..=3, 1usize..=3), 2..=3),
        seed in any::<u64>(),
    ) {
        let shape = ExperimentShape::new(parties.iter().map(|&(i, o)| PartySpec::new(i, o)).collect()).unwrap();
        let mut state = seed;
        let table: Vec<usize> = (0..shape.joint_inputs())
            .map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (state >> 33) as usize % shape.joint_outputs()
            })
            .collect();
        let f = TransferFunction::new(shape.clone(), table).unwrap();
        let text = format_tf(&f);
        prop_assert_eq!(parse_tf(&shape, &text).unwrap(), f);
    }
}

/// Small pool on the 2x2:2x2 shape mixing every signalling class.
fn pool() -> Vec<TransferFunction> {
    let s = ExperimentShape::bipartite_binary(2);
    vec![
        parse_tf(&s, "[++,++]").unwrap(),
        parse_tf(&s, "[+-,-+]").unwrap(),
        TransferFunction::from_fn(s.clone(), |x| vec![x[1], 0]).unwrap(),
        TransferFunction::from_fn(s.clone(), |x| vec![0, x[0]]).unwrap(),
        TransferFunction::from_fn(s.clone(), |x| vec![x[1], x[0]]).unwrap(),
        TransferFunction::from_fn(s.clone(), |x| vec![x[0] & x[1], 1 - x[0]]).unwrap(),
        TransferFunction::from_fn(s, |x| vec![x[0], x[0] ^ x[1]]).unwrap(),
    ]
}

fn distribution(picks: &[(usize, i64)]) -> TfDistribution {
    let fs = pool();
    let total: i64 = picks.iter().map(|p| p.1).sum();
    let shape = fs[0].shape().clone();
    TfDistribution::new(
        shape,
        picks
            .iter()
            .map(|&(k, w)| (fs[k % fs.len()].clone(), ratio(w, total))),
    )
    .unwrap()
}

proptest! {
    #[test]
    fn witnesses_are_sound_and_complete(
        d1 in proptest::collection::vec((0usize..7, 1i64..=5), 1..=4),
        d2 in proptest::collection::vec((0usize..7, 1i64..=5), 1..=4),
        swap in any::<bool>(),
    ) {
        let relay = if swap { Relay::new([(0, 1), (1, 0)]) } else { Relay::identity(2) };
        let s = ChainedScenario::new(distribution(&d1), distribution(&d2), relay.clone()).unwrap();
        let det = detect_backward_causality(&s);
        for w in &det.witnesses {
            prop_assert!(w.verify(&relay));
        }
        // For two settings and outcomes with a bijective relay, a pair chains
        // exactly when the first atom signals B to A and the second A to B.
        let expected: Rational = s
            .atom_pairs()
            .iter()
            .filter(|(f1, f2, _)| classify_signalling(f1).signals(1, 0) && classify_signalling(f2).signals(0, 1))
            .map(|(_, _, w)| w.clone())
            .sum();
        prop_assert_eq!(&det.probability, &expected);
        prop_assert_eq!(det.probability.is_zero(), det.witnesses.is_empty());
        prop_assert!(det.probability <= Rational::one());
    }
}
