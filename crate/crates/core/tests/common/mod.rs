#![allow(dead_code)]

use contact_oed::contact::{ContactModel, ContactParams, ContactState};
use contact_oed::dynamics::simulate;
use contact_oed::rng::{seeded_stream, uniform, SimRng, INIT_STREAM};
use contact_oed::scenarios::{add_noise, ScenarioSpec};
use contact_oed::types::{ControlInput, Experiment, Measurement, RobotState};
use nalgebra::DVector;

pub fn rng(seed: u64) -> SimRng {
    seeded_stream(seed, INIT_STREAM)
}

pub fn random_controls(rng: &mut SimRng, spec: &ScenarioSpec, steps: usize, scale: f64) -> Vec<ControlInput> {
    (0..steps)
        .map(|_| ControlInput {
            command: spec
                .dynamics
                .velocity_bounds
                .iter()
                .map(|b| scale * uniform(rng, b.lo, b.hi))
                .collect(),
        })
        .collect()
}

/// Rubbing start within a few centimetres of the wall.
pub fn near_wall_state(rng: &mut SimRng) -> RobotState {
    RobotState::at_rest(vec![uniform(rng, 0.36, 0.41), uniform(rng, 0.62, 0.88)])
}

/// Controls that press into the wall while sliding.
pub fn rubbing_controls(rng: &mut SimRng, steps: usize) -> Vec<ControlInput> {
    let vy = uniform(rng, 0.3, 1.0) * if uniform(rng, 0.0, 1.0) < 0.5 { -1.0 } else { 1.0 };
    (0..steps)
        .map(|_| ControlInput { command: vec![uniform(rng, -0.8, -0.1), vy + uniform(rng, -0.1, 0.1)] })
        .collect()
}

/// Light press with fast sliding: stays on the friction-cone branch for every μ in [0, 1].
pub fn sliding_controls(rng: &mut SimRng, steps: usize) -> Vec<ControlInput> {
    let vy = uniform(rng, 0.8, 1.0) * if uniform(rng, 0.0, 1.0) < 0.5 { -1.0 } else { 1.0 };
    (0..steps)
        .map(|_| ControlInput { command: vec![uniform(rng, -0.3, -0.05), vy] })
        .collect()
}

/// Rubbing start touching the wall.
pub fn wall_contact_state(rng: &mut SimRng) -> RobotState {
    RobotState::at_rest(vec![uniform(rng, 0.395, 0.405), uniform(rng, 0.62, 0.88)])
}

/// Noisy data generated under `theta`.
pub fn noisy_experiment(
    spec: &ScenarioSpec,
    x0: &RobotState,
    controls: &[ControlInput],
    theta: &DVector<f64>,
    rng: &mut SimRng,
) -> Experiment {
    let out = simulate(spec, x0, controls, theta, false).unwrap();
    Experiment {
        measurements: out
            .measurements
            .iter()
            .map(|y| Measurement { forces: add_noise(y, &spec.noise_std, rng) })
            .collect(),
        controls: controls.to_vec(),
        trajectory: out.trajectory,
        noise_std: spec.noise_std.clone(),
    }
}

/// Central-difference Jacobian of (λ_n, λ_t) w.r.t. (K, C, μ, R) and (φ, v_n, v_t).
pub fn contact_fd(model: &ContactModel, p: &ContactParams, cs: &ContactState, h: f64) -> ([[f64; 4]; 2], [[f64; 3]; 2]) {
    let f = |p: &ContactParams, cs: &ContactState| {
        let v = model.force(p, cs);
        [v.lambda_n, v.lambda_t]
    };
    let mut dp = [[0.0; 4]; 2];
    for j in 0..4 {
        let mut vals = [p.stiffness, p.damping, p.friction, p.resistance];
        let step = h * vals[j].abs().max(1.0);
        vals[j] += step;
        let plus = f(&ContactParams::new(vals[0], vals[1], vals[2], vals[3]), cs);
        vals[j] -= 2.0 * step;
        let minus = f(&ContactParams::new(vals[0], vals[1], vals[2], vals[3]), cs);
        for r in 0..2 {
            dp[r][j] = (plus[r] - minus[r]) / (2.0 * step);
        }
    }
    let mut ds = [[0.0; 3]; 2];
    for j in 0..3 {
        let mut vals = [cs.phi_n, cs.v_n, cs.v_t];
        let step = h * vals[j].abs().max(1e-3);
        vals[j] += step;
        let plus = f(p, &ContactState::new(vals[0], vals[1], vals[2]));
        vals[j] -= 2.0 * step;
        let minus = f(p, &ContactState::new(vals[0], vals[1], vals[2]));
        for r in 0..2 {
            ds[r][j] = (plus[r] - minus[r]) / (2.0 * step);
        }
    }
    (dp, ds)
}

/// True when every branch of the contact law is at least `margin` away from switching.
pub fn away_from_kinks(p: &ContactParams, cs: &ContactState, margin: f64) -> bool {
    let s = -p.stiffness * cs.phi_n - p.damping * cs.v_n.abs();
    let ln = s.max(0.0);
    s.abs() > margin
        && cs.v_n.abs() > margin
        && cs.v_t.abs() > margin
        && (p.friction * ln - p.resistance * cs.v_t.abs()).abs() > margin
}
