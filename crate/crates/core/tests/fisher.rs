mod common;

use common::*;
use contact_oed::fisher::{
    condition_bound_check, crlb_check, information_from_jacobians, psi, DesignMetric, EngineMode, FisherEngine, InfoMatrix,
};
use contact_oed::linalg::min_eigenvalue;
use contact_oed::model::{ExperimentModel, MeasurementModel};
use contact_oed::scenarios::{make_scenario, ScenarioKind};
use contact_oed::types::{ControlInput, RobotState};
use nalgebra::DMatrix;

#[test]
fn information_is_symmetric_psd() {
    let mut r = rng(21);
    for kind in ScenarioKind::ALL {
        let s = make_scenario(&kind.to_string()).unwrap();
        for _ in 0..10 {
            let u = random_controls(&mut r, &s, 15, 0.5);
            let model = ExperimentModel::new(&s, s.initial_state.clone(), u);
            let f = FisherEngine::contact_aware().information(&model, &s.theta_star()).unwrap();
            assert_eq!(f.matrix, f.matrix.transpose());
            assert!(min_eigenvalue(&f.matrix) >= -1e-9 * f.trace().max(1.0), "{kind}");
        }
    }
}

#[test]
fn information_adds_over_experiments() {
    let s = make_scenario("rubbing").unwrap();
    let mut r = rng(22);
    let x0 = wall_contact_state(&mut r);
    let u = sliding_controls(&mut r, 12);
    let model = ExperimentModel::new(&s, x0, u);
    let (_, g) = model.predict_with_jacobian(&s.theta_star()).unwrap();
    let whole = information_from_jacobians(&g, &s.noise_std).unwrap();
    let first = information_from_jacobians(&g[..5], &s.noise_std).unwrap();
    let rest = information_from_jacobians(&g[5..], &s.noise_std).unwrap();
    let sum = first.add(&rest);
    assert!((&sum.matrix - &whole.matrix).amax() <= 1e-12 * whole.matrix.amax());
    assert_eq!(sum.sample_count, whole.sample_count);
}

#[test]
fn extra_timesteps_never_lose_information() {
    let mut r = rng(23);
    for kind in ScenarioKind::ALL {
        let s = make_scenario(&kind.to_string()).unwrap();
        let u = random_controls(&mut r, &s, 20, 0.5);
        let mut prev = 0.0;
        for t in 1..=u.len() {
            let model = ExperimentModel::new(&s, s.initial_state.clone(), u[..t].to_vec());
            let tr = FisherEngine::contact_aware().information(&model, &s.theta_star()).unwrap().trace();
            assert!(tr >= prev, "{kind} step {t}");
            prev = tr;
        }
    }
}

#[test]
fn no_contact_means_no_information() {
    let s = make_scenario("rubbing").unwrap();
    let model = ExperimentModel::new(&s, RobotState::at_rest(vec![0.7, 0.7]), vec![ControlInput::zeros(2); 10]);
    for engine in [FisherEngine::contact_aware(), FisherEngine::baseline()] {
        assert_eq!(engine.information(&model, &s.theta_star()).unwrap().trace(), 0.0);
    }
}

#[test]
fn engines_agree_on_smooth_trajectories() {
    let s = make_scenario("hefting").unwrap();
    let mut r = rng(24);
    let u = random_controls(&mut r, &s, 5, 0.03);
    let model = ExperimentModel::new(&s, s.initial_state.clone(), u);
    let a = FisherEngine::contact_aware().information(&model, &s.theta_star()).unwrap();
    let b = FisherEngine::baseline().information(&model, &s.theta_star()).unwrap();
    assert!((&a.matrix - &b.matrix).norm() <= 1e-3 * a.matrix.norm());
}

#[test]
fn malformed_information_is_rejected() {
    let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
    let sym = InfoMatrix::new(asym, 1).unwrap().matrix;
    assert_eq!(sym[(0, 1)], 0.25);
    assert_eq!(sym, sym.transpose());
    let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    assert_eq!(InfoMatrix::new(indefinite, 1).unwrap_err().kind(), "invalid_information_matrix");
    assert!(InfoMatrix::new(DMatrix::from_element(1, 1, f64::NAN), 1).is_err());
}

#[test]
fn design_metrics() {
    let f = InfoMatrix::new(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 3.0])), 4).unwrap();
    assert_eq!(psi(DesignMetric::Trace, &f), 5.0);
    assert!((psi(DesignMetric::LogDet, &f) - 6.0f64.ln()).abs() < 1e-6);
    assert!(psi(DesignMetric::LogDet, &InfoMatrix::zeros(2)).is_finite());
}

#[test]
fn crlb_flags_overconfident_estimators() {
    let f = InfoMatrix::new(DMatrix::from_element(1, 1, 100.0), 10).unwrap();
    assert!(crlb_check(&f, &DMatrix::from_element(1, 1, 0.011)).satisfied);
    assert!(!crlb_check(&f, &DMatrix::from_element(1, 1, 0.005)).satisfied);
}

#[test]
fn condition_bound_needs_full_rank() {
    assert!(condition_bound_check(&InfoMatrix::zeros(2)).is_none());
    let f = InfoMatrix::new(DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 2.0]), 1).unwrap();
    let r = condition_bound_check(&f).unwrap();
    assert!(r.holds && r.lower <= r.middle && r.middle <= r.upper);
}

#[test]
fn engine_modes_parse() {
    assert_eq!("contact-aware".parse::<EngineMode>().unwrap(), EngineMode::ContactAware);
    assert_eq!("finite-difference".parse::<EngineMode>().unwrap(), EngineMode::Baseline);
    assert!("newton".parse::<EngineMode>().is_err());
}
