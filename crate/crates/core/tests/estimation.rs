mod common;

use common::*;
use contact_oed::estimation::{
    belief_update, ca_map_solve, grad_log_posterior, log_posterior, LogPosterior, MapOptions, Prior,
};
use contact_oed::fisher::FisherEngine;
use contact_oed::rng::uniform;
use contact_oed::scenarios::{make_scenario, ScenarioSpec};
use contact_oed::types::{ControlInput, Experiment, ParamVector, RobotState};
use nalgebra::{DMatrix, DVector};

fn experiment(s: &ScenarioSpec, seed: u64) -> (RobotState, Vec<ControlInput>) {
    let mut r = rng(seed);
    match s.name.to_string().as_str() {
        "rubbing" => (wall_contact_state(&mut r), sliding_controls(&mut r, 10)),
        "hefting" => (s.initial_state.clone(), random_controls(&mut r, s, 5, 0.03)),
        _ => (s.initial_state.clone(), random_controls(&mut r, s, 20, 0.3)),
    }
}

fn fd_gradient(lp: &LogPosterior<contact_oed::model::ExperimentModel<'_>>, theta: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(theta.len(), |i, _| {
        let h = 1e-6 * theta[i].abs().max(1e-2);
        let mut p = theta.clone();
        p[i] += h;
        let mut m = theta.clone();
        m[i] -= h;
        (log_posterior(lp, &p).unwrap() - log_posterior(lp, &m).unwrap()) / (2.0 * h)
    })
}

#[test]
fn gradient_matches_differences() {
    for name in ["rubbing", "hefting", "pinching", "contouring"] {
        let s = make_scenario(name).unwrap();
        let (mut checked, mut agreed) = (0, 0);
        for seed in 0..100 {
            let (x0, u) = experiment(&s, seed);
            let mut r = rng(1000 + seed);
            let data = noisy_experiment(&s, &x0, &u, &s.theta_star(), &mut r);
            let lp = LogPosterior::from_experiment(&s, &data, Prior::from_belief(&s.prior).unwrap());
            let theta = DVector::from_iterator(
                s.dim(),
                s.prior.support.iter().zip(&s.true_params).map(|(b, t)| b.clamp(t * uniform(&mut r, 0.8, 1.2))),
            );
            let g = grad_log_posterior(&lp, &theta).unwrap();
            let f = fd_gradient(&lp, &theta);
            checked += 1;
            if (&g - &f).amax() <= 1e-4 * g.amax().max(f.amax()).max(1e-6) {
                agreed += 1;
            }
        }
        // a draw may straddle a branch switch, where differences are meaningless
        assert!(agreed * 100 >= 95 * checked, "{name}: {agreed}/{checked}");
    }
}

#[test]
fn noise_free_truth_is_a_fixed_point() {
    for name in ["rubbing", "hefting", "pinching", "contouring"] {
        let s = make_scenario(name).unwrap();
        let (x0, u) = experiment(&s, 7);
        let out = contact_oed::dynamics::simulate(&s, &x0, &u, &s.theta_star(), false).unwrap();
        let data = Experiment {
            measurements: out.measurements.iter().map(|y| contact_oed::types::Measurement { forces: y.clone() }).collect(),
            controls: u,
            trajectory: out.trajectory,
            noise_std: s.noise_std.clone(),
        };
        let lp = LogPosterior::from_experiment(&s, &data, Prior::Flat);
        let start = ParamVector::new(s.theta_star(), s.param_names()).unwrap();
        let res = ca_map_solve(&lp, &start, &FisherEngine::contact_aware(), &MapOptions::default()).unwrap();
        assert!(res.converged, "{name}");
        assert_eq!(res.iterations, 0, "{name}");
        assert_eq!(res.theta.values, s.theta_star());
    }
}

#[test]
fn estimates_tighten_with_lower_noise() {
    let base = make_scenario("rubbing").unwrap();
    let mean_error = |s: &ScenarioSpec| {
        (0..20)
            .map(|seed| {
                let (x0, u) = experiment(s, 50 + seed);
                let data = noisy_experiment(s, &x0, &u, &s.theta_star(), &mut rng(500 + seed));
                let lp = LogPosterior::from_experiment(s, &data, Prior::from_belief(&s.prior).unwrap());
                let res = ca_map_solve(&lp, &s.prior.mode, &FisherEngine::contact_aware(), &MapOptions::default()).unwrap();
                (res.theta.values[0] - 0.4).abs()
            })
            .sum::<f64>()
            / 20.0
    };
    let coarse = mean_error(&base);
    let sigma = base.noise_std[0];
    let fine = mean_error(&base.clone().with_noise(0.1 * sigma));
    assert!(fine < 0.2 * coarse, "{fine} vs {coarse}");
    assert!(fine < 0.02);
}

#[test]
fn estimates_respect_the_support() {
    let s = make_scenario("rubbing").unwrap();
    let (x0, u) = experiment(&s, 3);
    let data = noisy_experiment(&s, &x0, &u, &DVector::from_vec(vec![0.99]), &mut rng(4));
    let lp = LogPosterior::from_experiment(&s, &data, Prior::Flat);
    let res = ca_map_solve(&lp, &s.prior.mode, &FisherEngine::contact_aware(), &MapOptions::default()).unwrap();
    assert!(s.prior.support[0].contains(res.theta.values[0]));
}

#[test]
fn belief_update_shrinks_and_checks_shapes() {
    let s = make_scenario("pinching").unwrap();
    let f = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.1, 2.0]);
    let post = belief_update(&s.prior, &f, &s.theta_star()).unwrap();
    assert!(post.covariance.trace() < s.prior.covariance.trace());
    assert_eq!(post.mode.values, s.theta_star());
    assert!(belief_update(&s.prior, &DMatrix::zeros(3, 3), &s.theta_star()).is_err());
    assert!(belief_update(&s.prior, &-DMatrix::identity(2, 2), &s.theta_star()).is_err());
}
