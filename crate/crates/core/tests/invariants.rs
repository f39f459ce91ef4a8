use num_complex::Complex64;
use proptest::prelude::*;

use bangoff::control::{canonicalize, enumerate_types, ControlLevel};
use bangoff::optimizer::{objective, ObjectiveKind};
use bangoff::quantum::{concurrence, evolve, fidelity, prep_initial_state, prep_target_state};
use bangoff::trajectory::sample_trajectory;
use bangoff::{BangOffControl, ControlType, TwoQubitState};

fn level() -> impl Strategy<Value = ControlLevel> {
    prop_oneof![
        Just(ControlLevel::Positive),
        Just(ControlLevel::Off),
        Just(ControlLevel::Negative)
    ]
}

/// Valid controls with up to ten segments and durations in `[0, 1.2)`.
fn control() -> impl Strategy<Value = BangOffControl> {
    (level(), proptest::collection::vec((0usize..2, 0.0f64..1.2), 0..10), 0.0f64..1.2).prop_map(
        |(first, steps, d0)| {
            let mut levels = vec![first];
            let mut durations = vec![d0];
            for (k, d) in steps {
                let prev = *levels.last().unwrap();
                let next = ControlLevel::ALL.into_iter().filter(|l| *l != prev).nth(k).unwrap();
                levels.push(next);
                durations.push(d);
            }
            BangOffControl::new(ControlType::new(levels).unwrap(), durations).unwrap()
        },
    )
}

fn state() -> impl Strategy<Value = TwoQubitState> {
    proptest::array::uniform8(-1.0f64..1.0)
        .prop_filter("non-zero", |v| v.iter().any(|x| x.abs() > 1e-3))
        .prop_map(|v| {
            let amps = [0, 1, 2, 3].map(|k| Complex64::new(v[2 * k], v[2 * k + 1]));
            TwoQubitState::normalized(amps).unwrap()
        })
}

fn prep_fidelity(c: &BangOffControl) -> f64 {
    fidelity(&evolve(prep_initial_state(), c).unwrap(), prep_target_state())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn evolution_preserves_norm(c in control(), psi in state()) {
        let out = evolve(&psi, &c).unwrap();
        prop_assert!((out.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn flip_preserves_fidelity(c in control()) {
        prop_assert!((prep_fidelity(&c) - prep_fidelity(&c.flipped())).abs() < 1e-12);
    }

    #[test]
    fn negation_preserves_concurrence_from_00(c in control()) {
        let start = TwoQubitState::zero_zero();
        let a = concurrence(&evolve(&start, &c).unwrap());
        let b = concurrence(&evolve(&start, &c.negated()).unwrap());
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn evolution_from_00_stays_in_the_triplet(c in control()) {
        for s in sample_trajectory(&TwoQubitState::zero_zero(), &c, 0.1).unwrap() {
            prop_assert!(s.bell.singlet_residual.norm() < 1e-12);
        }
    }

    #[test]
    fn canonical_form_evolves_identically(c in control(), psi in state()) {
        let canon = canonicalize(&c);
        let again = canonicalize(&canon);
        prop_assert_eq!(again.control_type(), canon.control_type());
        prop_assert!(canon.durations().iter().all(|&d| d > 0.0) || canon.levels().len() == 1);
        let a = evolve(&psi, &c).unwrap();
        let b = evolve(&psi, &canon).unwrap();
        for k in 0..4 {
            prop_assert!((a.amplitudes()[k] - b.amplitudes()[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_padding_keeps_the_cost(c in control()) {
        let mut levels = c.levels().to_vec();
        let last = *levels.last().unwrap();
        levels.push(if last == ControlLevel::Off { ControlLevel::Positive } else { ControlLevel::Off });
        let mut durations = c.durations().to_vec();
        durations.push(0.0);
        let padded = BangOffControl::new(ControlType::new(levels).unwrap(), durations).unwrap();
        for kind in [ObjectiveKind::StatePrepInfidelity, ObjectiveKind::Inconcurrence] {
            prop_assert_eq!(objective(kind, &c).unwrap(), objective(kind, &padded).unwrap());
        }
    }

    #[test]
    fn costs_lie_in_the_unit_interval(c in control()) {
        for kind in [ObjectiveKind::StatePrepInfidelity, ObjectiveKind::Inconcurrence] {
            let cost = objective(kind, &c).unwrap();
            prop_assert!((0.0..=1.0).contains(&cost));
        }
    }
}

#[test]
fn type_counts() {
    for ns in 0..=9 {
        let types = enumerate_types(ns);
        assert_eq!(types.len(), 3 << ns);
        assert!(types.windows(2).all(|w| w[0] < w[1]));
    }
}
