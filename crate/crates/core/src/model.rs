//! Parametric measurement models `θ ↦ (ŷ_0, …, ŷ_{T−1})` with Gaussian noise.
//!
//! Both the Fisher engines and the MAP solver only see this trait, so the
//! closed-form linear reference problem and the simulated scenarios share
//! one code path.

use nalgebra::{DMatrix, DVector};

use crate::dynamics::simulate;
use crate::error::{Error, Result};
use crate::scenarios::ScenarioSpec;
use crate::types::{Bounds, ControlInput, RobotState};

pub trait MeasurementModel: Sync {
    fn param_dim(&self) -> usize;

    /// σ per measurement channel.
    fn noise_std(&self) -> &[f64];

    /// Box Θ the parameters live in.
    fn support(&self) -> &[Bounds];

    fn predict(&self, theta: &DVector<f64>) -> Result<Vec<DVector<f64>>>;

    /// Predictions together with `G_t = ∂ŷ_t/∂θ`.
    fn predict_with_jacobian(&self, theta: &DVector<f64>) -> Result<(Vec<DVector<f64>>, Vec<DMatrix<f64>>)>;
}

/// `ŷ_t = A_t θ`.
#[derive(Debug, Clone)]
pub struct LinearGaussianModel {
    pub regressors: Vec<DMatrix<f64>>,
    pub noise_std: Vec<f64>,
    pub support: Vec<Bounds>,
}

impl LinearGaussianModel {
    pub fn new(regressors: Vec<DMatrix<f64>>, noise_std: Vec<f64>, support: Vec<Bounds>) -> Result<Self> {
        let Some(first) = regressors.first() else {
            return Err(Error::Dimension("linear model needs at least one regressor".into()));
        };
        let (m, d) = first.shape();
        if regressors.iter().any(|a| a.shape() != (m, d)) || noise_std.len() != m || support.len() != d {
            return Err(Error::Dimension("regressor, noise and support sizes disagree".into()));
        }
        Ok(Self { regressors, noise_std, support })
    }

    /// Scalar model `ŷ_t = x_t θ`.
    pub fn scalar(inputs: &[f64], sigma: f64, support: Bounds) -> Result<Self> {
        let regs = inputs.iter().map(|x| DMatrix::from_element(1, 1, *x)).collect();
        Self::new(regs, vec![sigma], vec![support])
    }
}

impl MeasurementModel for LinearGaussianModel {
    fn param_dim(&self) -> usize {
        self.regressors[0].ncols()
    }

    fn noise_std(&self) -> &[f64] {
        &self.noise_std
    }

    fn support(&self) -> &[Bounds] {
        &self.support
    }

    fn predict(&self, theta: &DVector<f64>) -> Result<Vec<DVector<f64>>> {
        Ok(self.regressors.iter().map(|a| a * theta).collect())
    }

    fn predict_with_jacobian(&self, theta: &DVector<f64>) -> Result<(Vec<DVector<f64>>, Vec<DMatrix<f64>>)> {
        Ok((self.predict(theta)?, self.regressors.clone()))
    }
}

/// A scenario re-simulated from `x0` under recorded controls.
#[derive(Debug, Clone)]
pub struct ExperimentModel<'a> {
    pub scenario: &'a ScenarioSpec,
    pub x0: RobotState,
    pub controls: Vec<ControlInput>,
}

impl<'a> ExperimentModel<'a> {
    pub fn new(scenario: &'a ScenarioSpec, x0: RobotState, controls: Vec<ControlInput>) -> Self {
        Self { scenario, x0, controls }
    }
}

impl MeasurementModel for ExperimentModel<'_> {
    fn param_dim(&self) -> usize {
        self.scenario.dim()
    }

    fn noise_std(&self) -> &[f64] {
        &self.scenario.noise_std
    }

    fn support(&self) -> &[Bounds] {
        &self.scenario.prior.support
    }

    fn predict(&self, theta: &DVector<f64>) -> Result<Vec<DVector<f64>>> {
        Ok(simulate(self.scenario, &self.x0, &self.controls, theta, false)?.measurements)
    }

    fn predict_with_jacobian(&self, theta: &DVector<f64>) -> Result<(Vec<DVector<f64>>, Vec<DMatrix<f64>>)> {
        let out = simulate(self.scenario, &self.x0, &self.controls, theta, true)?;
        let jacs = out.jacobians.expect("requested jacobians");
        Ok((out.measurements, jacs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::make_scenario;

    #[test]
    fn linear_prediction() {
        let m = LinearGaussianModel::scalar(&[1.0, 2.0], 1.0, Bounds::new(-5.0, 5.0)).unwrap();
        let y = m.predict(&DVector::from_vec(vec![3.0])).unwrap();
        assert_eq!(y[1][0], 6.0);
    }

    #[test]
    fn rejects_mismatched_shapes() {
        let regs = vec![DMatrix::zeros(1, 2), DMatrix::zeros(2, 2)];
        assert!(LinearGaussianModel::new(regs, vec![1.0], vec![Bounds::new(0.0, 1.0); 2]).is_err());
    }

    #[test]
    fn experiment_model_lengths() {
        let s = make_scenario("rubbing").unwrap();
        let controls = vec![ControlInput { command: vec![-0.5, 0.5] }; 10];
        let m = ExperimentModel::new(&s, s.initial_state.clone(), controls);
        let (y, g) = m.predict_with_jacobian(&s.theta_star()).unwrap();
        assert_eq!(y.len(), 10);
        assert_eq!(g[0].shape(), (2, 1));
    }
}
