mod common;

use cmdp_core::constrained::{
    closed_loop_transition, lower_bound, policy_reward, rule_value, solve_stage, synthesize, synthesize_projected,
};
use cmdp_core::density::{expected_reward, propagate_against};
use cmdp_core::lp::SolverOptions;
use cmdp_core::rng::StreamRng;
use cmdp_core::unconstrained::backward_induction;
use cmdp_core::{ConstraintSpec, Error, Matrix, MdpModel, ModelParts, Stagewise};
use common::*;

fn random_rule(rng: &mut StreamRng, n: usize, p: usize) -> Matrix {
    let rows: Vec<Vec<f64>> = (0..n).map(|_| random_density(rng, p)).collect();
    Matrix::from_rows(&rows).unwrap()
}

#[test]
fn reward_to_go_recomputes_from_the_rules() {
    for inst in feasible_instances(3, 10, 5, 3, 5) {
        let epochs = inst.model.epochs();
        let mut u = inst.model.terminal_reward().to_vec();
        assert_eq!(inst.values.u[epochs], u);
        for t in (0..epochs).rev() {
            let (_, direct) = direct_rule_value(&inst.model, t, &inst.policy.stages[t], &u);
            for (a, b) in direct.iter().zip(&inst.values.u[t]) {
                assert!((a - b).abs() < 1e-12);
            }
            u = direct;
        }
    }
}

#[test]
fn assembled_matrices_match_plain_loops() {
    let mut rng = StreamRng::new(77, 0);
    for _ in 0..30 {
        let (n, p) = (2 + below(&mut rng, 5), 1 + below(&mut rng, 4));
        let model = random_model(&mut rng, n, p, 3, false);
        let q = random_rule(&mut rng, n, p);
        let next: Vec<f64> = (0..n).map(|_| uniform(&mut rng, -2.0, 2.0)).collect();
        let m = closed_loop_transition(&model, 0, &q).unwrap();
        let r = policy_reward(&model, 0, &q).unwrap();
        let (dm, du) = direct_rule_value(&model, 0, &q, &next);
        for j in 0..n {
            assert!((m.column_sum(j) - 1.0).abs() < 1e-12);
            for i in 0..n {
                assert!((m[(i, j)] - dm[i][j]).abs() < 1e-14);
            }
            let mut expected = 0.0;
            for a in 0..p {
                expected += model.reward(0)[(j, a)] * q[(j, a)];
            }
            assert!((r[j] - expected).abs() < 1e-14);
        }
        let u = rule_value(&model, 0, &q, &next).unwrap();
        assert!(u.iter().zip(&du).all(|(a, b)| (a - b).abs() < 1e-12));
    }
}

#[test]
fn synthesized_rules_are_stochastic_and_respect_masks() {
    for inst in feasible_instances(4, 10, 5, 3, 4) {
        inst.policy.check(&inst.model).unwrap();
        for (t, q) in inst.policy.stages.iter().enumerate() {
            let m = closed_loop_transition(&inst.model, t, q).unwrap();
            for j in 0..inst.model.n() {
                assert!((m.column_sum(j) - 1.0).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn stay_only_model_keeps_its_certificate() {
    let model = MdpModel::new(ModelParts {
        n: 3,
        p: 1,
        horizon: 4,
        transitions: Stagewise::Stationary(vec![Matrix::identity(3)]),
        rewards: Stagewise::Stationary(Matrix::from_rows(&[vec![1.0], vec![2.0], vec![3.0]]).unwrap()),
        terminal_reward: vec![0.0, 0.0, 1.0],
        action_mask: None,
        discount: 1.0,
        caps: None,
    })
    .unwrap();
    let caps = ConstraintSpec::new(vec![0.5, 0.5, 0.5]).unwrap();
    let (_, values) = synthesize(&model, &caps).unwrap();
    // three stages of reward plus terminal: u_0 = 3 r + r_N
    assert_eq!(values.u[0], vec![3.0, 6.0, 10.0]);
    // worst case puts 0.5 on state 0 and 0.5 on state 1
    assert!((values.maximin_objectives[0] - 4.5).abs() < 1e-9);
}

#[test]
fn two_state_stages_match_grid_search() {
    let mut rng = StreamRng::new(31, 0);
    let mut compared = 0;
    while compared < 15 {
        let model = random_model(&mut rng, 2, 2, 3, false);
        let caps = random_caps(&mut rng, 2);
        let Ok((_, values)) = synthesize(&model, &caps) else { continue };
        for t in 0..model.epochs() {
            let stage = solve_stage(&model, &caps, t, &values.u[t + 1], &SolverOptions::default()).unwrap();
            let coarse = grid_maximin(&model, caps.as_slice(), t, &values.u[t + 1], 0.05).unwrap();
            let fine = grid_maximin(&model, caps.as_slice(), t, &values.u[t + 1], 0.005).unwrap();
            assert!(stage.objective >= coarse - 1e-9);
            assert!(stage.objective >= fine - 1e-9);
            assert!(stage.objective - fine <= 0.02, "{} vs {fine}", stage.objective);
        }
        compared += 1;
    }
}

#[test]
fn vacuous_caps_recover_the_unconstrained_optimum() {
    let mut rng = StreamRng::new(55, 0);
    for _ in 0..10 {
        let n = 2 + below(&mut rng, 3);
        let (p, horizon) = (1 + below(&mut rng, 3), 2 + below(&mut rng, 3));
        let model = random_model(&mut rng, n, p, horizon, false);
        let caps = ConstraintSpec::vacuous(n);
        let (policy, _) = synthesize_projected(&model, &caps).unwrap();
        let (_, vf) = backward_induction(&model).unwrap();
        for _ in 0..5 {
            let x1 = random_density(&mut rng, n);
            let got = expected_reward(&model, &policy, &x1).unwrap();
            assert!((got - vf.value_at(&x1)).abs() < 1e-7);
        }
    }
}

#[test]
fn every_safe_start_stays_safe_and_meets_its_bound() {
    for (k, inst) in feasible_instances(9, 8, 5, 3, 5).iter().enumerate() {
        let (_, vf) = backward_induction(&inst.model).unwrap();
        let mut starts: Vec<Vec<f64>> = (0..50).map(|s| sample_feasible(&inst.caps, (k * 100 + s) as u64)).collect();
        starts.extend((0..inst.model.n()).filter(|&s| inst.caps.as_slice()[s] >= 1.0).map(|s| basis(inst.model.n(), s)));
        for x1 in starts {
            let traj = propagate_against(&inst.model, &inst.policy, &x1, Some(&inst.caps)).unwrap();
            assert!(traj.violations.is_empty(), "{:?}", traj.violations);
            let bound = lower_bound(&inst.values, &inst.caps, &x1).unwrap();
            let exact = direct_expected_reward(&inst.model, &inst.policy, &x1);
            assert!((exact - bound).abs() < 1e-8);
            assert!(vf.value_at(&x1) >= bound - 1e-7);
            assert!(bound >= worst_case_value(&inst.values.u[0], inst.caps.as_slice()) - 1e-9);
        }
    }
}

#[test]
fn projected_policy_is_also_certified() {
    for inst in feasible_instances(13, 6, 4, 3, 4) {
        let (policy, values) = synthesize_projected(&inst.model, &inst.caps).unwrap();
        let last = inst.model.epochs() - 1;
        assert!((values.maximin_objectives[last] - inst.values.maximin_objectives[last]).abs() < 1e-9);
        for t in 0..inst.model.epochs() {
            let stage = solve_stage(&inst.model, &inst.caps, t, &values.u[t + 1], &SolverOptions::default()).unwrap();
            assert_eq!(stage.objective, values.maximin_objectives[t]);
            let worst = worst_case_value(&values.u[t], inst.caps.as_slice());
            assert!(worst >= stage.objective - 2e-7 * (1.0 + stage.objective.abs()));
        }
        let x1 = sample_feasible(&inst.caps, 1);
        let traj = propagate_against(&inst.model, &policy, &x1, Some(&inst.caps)).unwrap();
        assert!(traj.violations.is_empty());
        let exact = expected_reward(&inst.model, &policy, &x1).unwrap();
        assert!((exact - lower_bound(&values, &inst.caps, &x1).unwrap()).abs() < 1e-8);
    }
}

#[test]
fn symmetric_instance_is_solved_deterministically() {
    let g = Matrix::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
    let model = MdpModel::new(ModelParts {
        n: 2,
        p: 2,
        horizon: 4,
        transitions: Stagewise::Stationary(vec![g.clone(), g]),
        rewards: Stagewise::Stationary(Matrix::from_fn(2, 2, |_, _| 1.0)),
        terminal_reward: vec![1.0, 1.0],
        action_mask: None,
        discount: 1.0,
        caps: None,
    })
    .unwrap();
    let caps = ConstraintSpec::new(vec![0.6, 0.6]).unwrap();
    let first = synthesize(&model, &caps).unwrap();
    for _ in 0..3 {
        assert_eq!(synthesize(&model, &caps).unwrap(), first);
    }
}

#[test]
fn infeasible_caps_name_the_stage() {
    // Both actions push all mass into state 0, which is capped at 0.5.
    let push = Matrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 0.0]]).unwrap();
    let model = MdpModel::new(ModelParts {
        n: 2,
        p: 1,
        horizon: 3,
        transitions: Stagewise::Stationary(vec![push]),
        rewards: Stagewise::Stationary(Matrix::zeros(2, 1)),
        terminal_reward: vec![0.0, 0.0],
        action_mask: None,
        discount: 1.0,
        caps: None,
    })
    .unwrap();
    let caps = ConstraintSpec::new(vec![0.5, 1.0]).unwrap();
    match synthesize(&model, &caps) {
        Err(Error::InfeasibleStage { epoch, phase_one_residual }) => {
            assert_eq!(epoch, 1);
            assert!(phase_one_residual > 0.0);
        }
        other => panic!("expected infeasibility, got {other:?}"),
    }
}

#[test]
fn start_outside_the_safe_set_is_rejected() {
    let inst = &feasible_instances(21, 1, 3, 2, 3)[0];
    let n = inst.model.n();
    let bad = (0..n).find(|&s| inst.caps.as_slice()[s] < 1.0);
    if let Some(s) = bad {
        assert!(matches!(
            lower_bound(&inst.values, &inst.caps, &basis(n, s)),
            Err(Error::OutsideSafeSet(_))
        ));
    }
}
