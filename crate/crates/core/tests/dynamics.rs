mod common;

use common::{random_controls, rng};
use contact_oed::dynamics::{contact_consistency_error, rollout, step, GRAVITY};
use contact_oed::scenarios::{make_scenario, ScenarioKind, RUBBING_ADMITTANCE, WALL_SURFACE_X};
use contact_oed::types::{ControlInput, RobotState};

#[test]
fn constant_push_settles_on_spring_force() {
    let s = make_scenario("rubbing").unwrap();
    let x0 = RobotState::at_rest(vec![WALL_SURFACE_X, 0.7]);
    let u = vec![ControlInput { command: vec![-0.5, 0.0] }; 300];
    let tr = rollout(&s, &x0, &u, &s.theta_star()).unwrap();
    let last = tr.states[tr.horizon() - 1].position[0];
    let lambda_n = tr.contacts.last().unwrap()[0].lambda_n;
    let phi = last - WALL_SURFACE_X;
    assert!(phi < 0.0);
    assert!((lambda_n - s.contact.stiffness * phi.abs()).abs() < 1e-6, "{lambda_n} vs {}", s.contact.stiffness * phi.abs());
    assert!((lambda_n - RUBBING_ADMITTANCE * 0.5).abs() < 1e-6);
}

#[test]
fn damped_hefting_loses_energy_in_persistent_contact() {
    let mut s = make_scenario("hefting").unwrap();
    s.contact.damping = 1.0;
    s.contact_model.signed_damping = true;
    let m = s.true_params[0];
    let k = s.contact.stiffness;
    let hand = s.initial_state.position[0];
    let mut x = s.initial_state.clone();
    let ball = x.object.as_mut().unwrap();
    // pressed 50% beyond equilibrium, released at rest
    ball.position = hand - 1.5 * m * GRAVITY / k;
    let energy = |x: &RobotState| {
        let b = x.object.unwrap();
        let phi = b.position - x.position[0];
        0.5 * m * b.velocity * b.velocity + m * GRAVITY * b.position + 0.5 * k * phi.min(0.0).powi(2)
    };
    let theta = s.theta_star();
    let mut prev = energy(&x);
    for _ in 0..100 {
        let (next, forces) = step(&s, &x, &ControlInput::zeros(1), &theta).unwrap();
        assert!(forces[0].lambda_n > 0.0, "ball left the hand");
        let e = energy(&next);
        assert!(e <= prev + 1e-12, "energy rose from {prev} to {e}");
        prev = e;
        x = next;
    }
}

#[test]
fn rollouts_stay_in_the_workspace() {
    let mut r = rng(3);
    for kind in ScenarioKind::ALL {
        let s = make_scenario(&kind.to_string()).unwrap();
        for _ in 0..20 {
            let u = random_controls(&mut r, &s, 40, 1.0);
            let tr = rollout(&s, &s.initial_state, &u, &s.theta_star()).unwrap();
            assert!(tr.states.iter().all(|x| s.dynamics.inside_workspace(&x.position)), "{kind}");
            assert_eq!(contact_consistency_error(&s, &tr, &s.theta_star()).unwrap(), 0.0);
        }
    }
}

#[test]
fn zero_command_is_a_fixed_point() {
    for kind in ScenarioKind::ALL {
        let s = make_scenario(&kind.to_string()).unwrap();
        if kind == ScenarioKind::Hefting {
            continue;
        }
        let x0 = s.initial_state.clone();
        let (next, _) = step(&s, &x0, &ControlInput::zeros(s.dof()), &s.theta_star()).unwrap();
        assert_eq!(next.position, x0.position, "{kind}");
    }
    let s = make_scenario("hefting").unwrap();
    let (next, forces) = step(&s, &s.initial_state, &ControlInput::zeros(1), &s.theta_star()).unwrap();
    let (a, b) = (next.object.unwrap(), s.initial_state.object.unwrap());
    assert!((a.position - b.position).abs() < 1e-12 && a.velocity.abs() < 1e-10);
    assert!((forces[0].lambda_n - s.true_params[0] * GRAVITY).abs() < 1e-9);
}

#[test]
fn commands_are_clamped_to_velocity_bounds() {
    let s = make_scenario("rubbing").unwrap();
    let x0 = RobotState::at_rest(vec![0.6, 0.7]);
    let fast = rollout(&s, &x0, &[ControlInput { command: vec![5.0, 0.0] }], &s.theta_star()).unwrap();
    let unit = rollout(&s, &x0, &[ControlInput { command: vec![1.0, 0.0] }], &s.theta_star()).unwrap();
    assert_eq!(fast.final_state().position, unit.final_state().position);
}
