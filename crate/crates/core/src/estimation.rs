//! MAP estimation under a Gaussian force likelihood and the Gaussian belief update.
//!
//! The dynamics and contact constraints are enforced by re-simulating the
//! recorded controls (single shooting), so the posterior is a function of θ
//! alone. Ascent uses the Fisher-preconditioned step
//! `θ ← Proj_Θ(θ + η (F + Σ_θ⁻¹ + εI)⁻¹ ∇ℒ)` with Armijo backtracking.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fisher::{information_from_jacobians, FisherEngine, InfoMatrix, PSD_TOL};
use crate::linalg::{max_eigenvalue, min_eigenvalue, spd_inverse, spd_solve, symmetrize};
use crate::model::{ExperimentModel, MeasurementModel};
use crate::scenarios::ScenarioSpec;
use crate::types::{project_box, Bounds, Experiment, ParamBelief, ParamVector};

#[derive(Debug, Clone, PartialEq)]
pub enum Prior {
    Gaussian { mean: DVector<f64>, precision: DMatrix<f64> },
    Flat,
}

impl Prior {
    pub fn from_belief(belief: &ParamBelief) -> Result<Self> {
        Ok(Prior::Gaussian { mean: belief.mode.values.clone(), precision: belief.precision()? })
    }

    fn value(&self, theta: &DVector<f64>) -> f64 {
        match self {
            Prior::Gaussian { mean, precision } => {
                let r = theta - mean;
                -0.5 * r.dot(&(precision * &r))
            }
            Prior::Flat => 0.0,
        }
    }

    fn gradient(&self, theta: &DVector<f64>) -> DVector<f64> {
        match self {
            Prior::Gaussian { mean, precision } => -(precision * (theta - mean)),
            Prior::Flat => DVector::zeros(theta.len()),
        }
    }

    fn curvature(&self, d: usize) -> DMatrix<f64> {
        match self {
            Prior::Gaussian { precision, .. } => precision.clone(),
            Prior::Flat => DMatrix::zeros(d, d),
        }
    }
}

/// `ℓ(θ) = log p(𝒟 | θ) + log p(θ)` up to an additive constant.
#[derive(Debug, Clone)]
pub struct LogPosterior<M> {
    pub model: M,
    pub observations: Vec<DVector<f64>>,
    pub prior: Prior,
}

impl<'a> LogPosterior<ExperimentModel<'a>> {
    /// Posterior for recorded data, re-simulated from the experiment's first state.
    pub fn from_experiment(scenario: &'a ScenarioSpec, data: &Experiment, prior: Prior) -> Self {
        let model = ExperimentModel::new(scenario, data.trajectory.initial_state().clone(), data.controls.clone());
        Self { model, observations: data.observations(), prior }
    }
}

/// Value, gradient and data information at one θ.
#[derive(Debug, Clone)]
pub struct PosteriorEval {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub information: InfoMatrix,
}

impl<M: MeasurementModel> LogPosterior<M> {
    pub fn new(model: M, observations: Vec<DVector<f64>>, prior: Prior) -> Result<Self> {
        if model.noise_std().iter().any(|s| !(*s > 0.0)) {
            return Err(Error::Config("noise σ must be positive".into()));
        }
        Ok(Self { model, observations, prior })
    }

    pub fn support(&self) -> &[Bounds] {
        self.model.support()
    }

    /// Number of scalar measurements.
    pub fn data_count(&self) -> usize {
        self.observations.iter().map(|y| y.len()).sum()
    }

    fn check_len(&self, predicted: &[DVector<f64>]) -> Result<()> {
        if predicted.len() != self.observations.len() {
            return Err(Error::Dimension(format!(
                "{} observations but {} predictions",
                self.observations.len(),
                predicted.len()
            )));
        }
        Ok(())
    }

    fn weighted_residuals(&self, predicted: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
        self.check_len(predicted)?;
        let sigma = self.model.noise_std();
        Ok(self
            .observations
            .iter()
            .zip(predicted)
            .map(|(y, yh)| DVector::from_iterator(y.len(), (0..y.len()).map(|c| (y[c] - yh[c]) / sigma[c])))
            .collect())
    }

    pub fn value(&self, theta: &DVector<f64>) -> Result<f64> {
        let r = self.weighted_residuals(&self.model.predict(theta)?)?;
        Ok(-0.5 * r.iter().map(|v| v.norm_squared()).sum::<f64>() + self.prior.value(theta))
    }

    /// Value, gradient and information with Jacobians from `engine`.
    pub fn evaluate(&self, theta: &DVector<f64>, engine: &FisherEngine) -> Result<PosteriorEval> {
        let (yh, g) = engine.jacobians(&self.model, theta)?;
        let r = self.weighted_residuals(&yh)?;
        let sigma = self.model.noise_std();
        let mut grad = self.prior.gradient(theta);
        for (rt, gt) in r.iter().zip(&g) {
            let scaled = DVector::from_iterator(rt.len(), (0..rt.len()).map(|c| rt[c] / sigma[c]));
            grad += gt.transpose() * scaled;
        }
        let value = -0.5 * r.iter().map(|v| v.norm_squared()).sum::<f64>() + self.prior.value(theta);
        Ok(PosteriorEval { value, gradient: grad, information: information_from_jacobians(&g, sigma)? })
    }
}

pub fn log_posterior<M: MeasurementModel>(lp: &LogPosterior<M>, theta: &DVector<f64>) -> Result<f64> {
    lp.value(theta)
}

/// Analytic gradient through the sensor, contact and rollout sensitivities.
pub fn grad_log_posterior<M: MeasurementModel>(lp: &LogPosterior<M>, theta: &DVector<f64>) -> Result<DVector<f64>> {
    Ok(lp.evaluate(theta, &FisherEngine::contact_aware())?.gradient)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MapOptions {
    pub max_iters: usize,
    /// Projected-gradient tolerance per scalar measurement.
    pub tol: f64,
    pub armijo: f64,
    pub max_backtracks: usize,
}

impl Default for MapOptions {
    fn default() -> Self {
        Self { max_iters: 50, tol: 1e-6, armijo: 1e-4, max_backtracks: 40 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapResult {
    pub theta: ParamVector,
    pub iterations: usize,
    pub converged: bool,
    pub value: f64,
}

/// Zeroes gradient components that push against an active bound.
fn projected_gradient(theta: &DVector<f64>, grad: &DVector<f64>, support: &[Bounds]) -> DVector<f64> {
    DVector::from_iterator(
        theta.len(),
        (0..theta.len()).map(|i| {
            let b = support[i];
            if (theta[i] <= b.lo && grad[i] < 0.0) || (theta[i] >= b.hi && grad[i] > 0.0) {
                0.0
            } else {
                grad[i]
            }
        }),
    )
}

/// Levenberg damping `ε = 1e-6·tr(F)/d + 1e-9`.
pub fn damping(f: &DMatrix<f64>) -> f64 {
    1e-6 * f.trace() / f.nrows() as f64 + 1e-9
}

pub fn ca_map_solve<M: MeasurementModel>(
    lp: &LogPosterior<M>,
    theta0: &ParamVector,
    engine: &FisherEngine,
    opts: &MapOptions,
) -> Result<MapResult> {
    let support = lp.support().to_vec();
    let d = theta0.len();
    let tol = opts.tol * lp.data_count().max(1) as f64;
    let curvature = lp.prior.curvature(d);
    let mut theta = project_box(&theta0.values, &support);
    let mut eval = lp.evaluate(&theta, engine)?;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iters {
        let pg = projected_gradient(&theta, &eval.gradient, &support);
        if pg.norm() < tol {
            converged = true;
            break;
        }
        iterations += 1;
        let f = &eval.information.matrix;
        let mut h = f + &curvature;
        for i in 0..d {
            h[(i, i)] += damping(f);
        }
        let step = spd_solve(&h, &eval.gradient)?;
        let mut eta = 1.0;
        let mut accepted = None;
        for _ in 0..opts.max_backtracks {
            let cand = project_box(&(&theta + &step * eta), &support);
            let moved = &cand - &theta;
            if moved.norm() == 0.0 {
                break;
            }
            let value = lp.value(&cand)?;
            if value.is_finite() && value >= eval.value + opts.armijo * eval.gradient.dot(&moved) {
                accepted = Some(cand);
                break;
            }
            eta *= 0.5;
        }
        match accepted {
            Some(cand) => {
                theta = cand;
                eval = lp.evaluate(&theta, engine)?;
            }
            None => {
                // no ascent left along the preconditioned direction
                converged = eval.gradient.dot(&step).abs() < tol.max(1e-12);
                break;
            }
        }
    }
    if !converged {
        converged = projected_gradient(&theta, &eval.gradient, &support).norm() < tol;
    }
    Ok(MapResult {
        theta: ParamVector::new(theta, theta0.names.clone())?,
        iterations,
        converged,
        value: eval.value,
    })
}

/// `Σ⁺ = (F + Σ⁻¹)⁻¹` with the mode moved to `θ̂`.
pub fn belief_update(prior: &ParamBelief, fim: &DMatrix<f64>, theta_hat: &DVector<f64>) -> Result<ParamBelief> {
    let d = prior.dim();
    if fim.shape() != (d, d) || theta_hat.len() != d {
        return Err(Error::Dimension(format!("belief of dimension {d} got information {:?}", fim.shape())));
    }
    let f = symmetrize(fim);
    let lmin = min_eigenvalue(&f);
    if !lmin.is_finite() || lmin < -PSD_TOL * max_eigenvalue(&f).max(1.0) {
        return Err(Error::InvalidInformationMatrix { min_eigenvalue: lmin });
    }
    let posterior = spd_inverse(&(f + prior.precision()?))?;
    let mode = ParamVector::new(prior.project(theta_hat), prior.mode.names.clone())?;
    ParamBelief::new(mode, symmetrize(&posterior), prior.support.clone())
}
