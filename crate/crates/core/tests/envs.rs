//! Cross-environment contracts: oracle equivalence, purity, failure handling.

use pddm_core::dynamics::DynamicsModel;
use pddm_core::env::{make_env, oracle_model, EnvRunner, Environment, Objective, ToyValve, ENV_NAMES};
use pddm_core::planners::evaluate_candidates;
use ndarray::{Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn all_envs() -> Vec<Box<dyn Environment<f64>>> {
    ENV_NAMES.iter().map(|n| make_env::<f64>(n, &[]).unwrap()).collect()
}

fn random_action(rng: &mut ChaCha8Rng, da: usize) -> Vec<f64> {
    (0..da).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

/// A reachable state: a few random steps from a random reset.
fn random_state(env: &dyn Environment<f64>, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut s = env.initial_state(rng.random());
    for _ in 0..rng.random_range(0..30) {
        let a = random_action(rng, env.dim_a());
        let next = env.transition(&s, &a);
        if env.failure(&next) {
            break;
        }
        s = next;
    }
    s
}

#[test]
fn oracle_prediction_equals_environment_step() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for env in all_envs() {
        let oracle = oracle_model(env.as_ref());
        for _ in 0..1000 {
            let s = random_state(env.as_ref(), &mut rng);
            let a = random_action(&mut rng, env.dim_a());
            let mut runner = EnvRunner::new(env.as_ref(), 10);
            runner.reset_to(s.clone());
            let stepped = runner.step(&a).unwrap().state;
            let s2 = Array2::from_shape_vec((1, s.len()), s.clone()).unwrap();
            let a2 = Array2::from_shape_vec((1, a.len()), a.clone()).unwrap();
            let predicted = oracle.predict_next_batch(0, s2.view(), a2.view());
            let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(predicted.as_slice().unwrap()), bits(&stepped), "{}", env.name());
        }
    }
}

#[test]
fn rewards_and_transitions_are_pure() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for env in all_envs() {
        for _ in 0..200 {
            let s = random_state(env.as_ref(), &mut rng);
            let a = random_action(&mut rng, env.dim_a());
            assert_eq!(env.reward(&s, &a).to_bits(), env.reward(&s, &a).to_bits());
            assert_eq!(env.transition(&s, &a), env.transition(&s, &a));
        }
        assert_eq!(env.initial_state(77), env.initial_state(77));
    }
}

#[test]
fn oracle_mean_equals_single_member_return() {
    let env = make_env::<f64>("reacher2", &[]).unwrap();
    let oracle = oracle_model(env.as_ref());
    assert_eq!(oracle.num_members(), 1);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let actions = Array3::from_shape_fn((5, 4, 2), |_| rng.random_range(-1.0..1.0));
    let s0 = env.initial_state(4);
    let eval = evaluate_candidates(&oracle, env.as_ref(), &s0, actions.view()).unwrap();
    assert_eq!(eval.returns, eval.member_returns.row(0).to_vec());
}

#[test]
fn control_periods() {
    for env in all_envs() {
        let expected = if env.name() == "toy_valve" { 0.15 } else { 0.05 };
        assert_eq!(env.dt(), expected, "{}", env.name());
    }
}

#[test]
fn valve_reward_peaks_exactly_on_target() {
    let env = ToyValve::<f64>::default();
    let target = 0.7;
    let at = |theta: f64| env.reward(&ToyValve::observe(theta, 0.0, target), &[0.0, 0.0]);
    let peak = at(target);
    assert_eq!(peak, 11.0);
    for i in 0..=20_000 {
        let theta = -std::f64::consts::PI + i as f64 * (2.0 * std::f64::consts::PI / 20_000.0);
        if (theta - target).abs() > 1e-12 {
            assert!(at(theta) < peak, "theta {theta}");
        }
    }
}

#[test]
fn failure_always_ends_the_episode() {
    let env = make_env::<f64>("cartpole", &[]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut failures = 0;
    for _ in 0..40 {
        let mut runner = EnvRunner::new(env.as_ref(), 400);
        runner.reset(rng.random());
        let push = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        loop {
            let out = runner.step(&[push]).unwrap();
            if env.failure(&out.state) {
                assert!(out.done && out.failed);
                failures += 1;
                break;
            }
            if out.done {
                break;
            }
        }
    }
    assert!(failures > 0, "full thrust should run the cart off the track");
}

#[test]
fn runner_rejects_out_of_range_actions() {
    for env in all_envs() {
        let mut runner = EnvRunner::new(env.as_ref(), 5);
        runner.reset(0);
        let mut a = vec![0.0; env.dim_a()];
        a[0] = 1.5;
        assert!(runner.step(&a).is_err());
        a[0] = f64::NAN;
        assert!(runner.step(&a).is_err());
    }
}
