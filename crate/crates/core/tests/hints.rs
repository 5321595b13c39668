mod common;

use std::time::Duration;

use common::bundle;
use plantutor_core::hinter::{obscure_mask, HintConfig, HintOutcome, Hinter};
use plantutor_core::validator::{validate, validate_actions, Plan};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn half_probability_reveals_about_half() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let arity = 4;
    let mut shown = vec![0usize; arity];
    let samples = 10_000;
    for _ in 0..samples {
        for (i, v) in obscure_mask(arity, 0.5, &mut rng).into_iter().enumerate() {
            shown[i] += v as usize;
        }
    }
    for count in shown {
        let rate = count as f64 / samples as f64;
        assert!((0.48..=0.52).contains(&rate), "{rate}");
    }
}

#[test]
fn extreme_probabilities_are_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..1000 {
        assert!(obscure_mask(4, 1.0, &mut rng).iter().all(|v| *v));
        assert!(obscure_mask(4, 0.0, &mut rng).iter().all(|v| !*v));
    }
}

#[test]
fn following_hints_solves_the_task() {
    for name in ["coffee_shop", "hanoi"] {
        let env = bundle(name);
        let task = &env.base().task;
        let mut hinter = Hinter::new(HintConfig {
            rng_seed: Some(1),
            ..HintConfig::default()
        })
        .unwrap();
        let mut state = task.init().clone();
        let mut followed = Vec::new();
        loop {
            match hinter.next(task, &state, &env.semantics) {
                HintOutcome::Hint(h) => {
                    assert!(h.text.starts_with("You might want to try the action: "));
                    state = state.apply(&h.action).unwrap();
                    followed.push(h.action);
                }
                HintOutcome::AlreadySolved => break,
                other => panic!("{name}: {other:?}"),
            }
            assert!(followed.len() < 50);
        }
        assert!(validate_actions(task, &followed).goal_achieved);
    }
}

#[test]
fn hint_starts_from_the_valid_prefix() {
    let env = bundle("coffee_shop");
    let task = &env.base().task;
    let plan = Plan::parse("(move_to_counter start fetch counter)\n(place counter can_red gripper fetch)\n").unwrap();
    let report = validate(task, &plan).unwrap();
    let mut hinter = Hinter::new(HintConfig {
        reveal_probability: 1.0,
        ..HintConfig::default()
    })
    .unwrap();
    let HintOutcome::Hint(h) = hinter.next(task, report.prefix_state(), &env.semantics) else {
        panic!("expected a hint");
    };
    assert_eq!(h.action.label(), "(pick counter can_red gripper fetch)");
    assert_eq!(
        h.text,
        "You might want to try the action: Pick at location 'counter' object 'can_red' using gripper 'gripper' this robot 'fetch'"
    );
}

#[test]
fn impossible_goal_reports_unsolvable_and_tiny_budget_times_out() {
    let env = bundle("hanoi");
    let task = env.base().task.clone();
    let impossible = task.with_goal([task.parse_atom("(on d3 d1)").unwrap()]);
    let mut hinter = Hinter::new(HintConfig::default()).unwrap();
    let outcome = hinter.next(&impossible, impossible.init(), &env.semantics);
    assert_eq!(outcome, HintOutcome::Unsolvable);
    assert_eq!(outcome.code(), "unsolvable");

    let coffee = bundle("coffee_shop");
    let hard = &coffee.preset("p02_deliver_all").unwrap().task;
    let mut hurried = Hinter::new(HintConfig {
        timeout: Duration::from_nanos(1),
        ..HintConfig::default()
    })
    .unwrap();
    assert_eq!(
        hurried.next(hard, hard.init(), &coffee.semantics).code(),
        "hint-timeout"
    );
}
