//! Predictive-sampling experiment design.
//!
//! Each call scores the nominal control spline and `N` Gaussian perturbations
//! of its knots by `ψ(F) − 𝒥` under the current belief mode and keeps the
//! best. Knot draws are taken sequentially from the seeded stream before the
//! candidates are rolled out in parallel, so results do not depend on thread
//! scheduling.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{simulate, DynamicsSpec};
use crate::error::{Error, Result};
use crate::fisher::{information_from_jacobians, psi, DesignMetric, FisherEngine, InfoMatrix};
use crate::model::ExperimentModel;
use crate::rng::{standard_normal, SimRng};
use crate::scenarios::ScenarioSpec;
use crate::types::{Bounds, ControlInput, Experiment, Measurement, ParamBelief, RobotState, Trajectory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    /// Steps per experiment t_H.
    pub horizon: usize,
    /// Perturbed candidates N (the nominal is scored in addition).
    pub num_samples: usize,
    /// Knot perturbation σ (m/s).
    pub sampling_std: f64,
    pub knots: usize,
    pub effort_weight: f64,
    pub boundary_weight: f64,
    /// Workspace margin as a fraction of each axis' extent.
    pub boundary_margin: f64,
    pub metric: DesignMetric,
    /// Steps executed per plan; `None` executes the whole horizon.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub execute_steps: Option<usize>,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            horizon: 10,
            num_samples: 10,
            sampling_std: 1.0,
            knots: 4,
            effort_weight: 1e-3,
            boundary_weight: 1.0,
            boundary_margin: 0.05,
            metric: DesignMetric::Trace,
            execute_steps: None,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon < 2 || self.num_samples < 1 || !(self.sampling_std > 0.0) || self.knots < 2 {
            return Err(Error::Config("planner needs horizon ≥ 2, N ≥ 1, σ > 0 and ≥ 2 knots".into()));
        }
        if self.effort_weight < 0.0 || self.boundary_weight < 0.0 || !(self.boundary_margin > 0.0 && self.boundary_margin < 0.5) {
            return Err(Error::Config("cost weights must be ≥ 0 and the margin in (0, 0.5)".into()));
        }
        if self.execute_steps.is_some_and(|k| k == 0 || k > self.horizon) {
            return Err(Error::Config("execute_steps must lie in 1..=horizon".into()));
        }
        Ok(())
    }

    pub fn steps_per_experiment(&self) -> usize {
        self.execute_steps.unwrap_or(self.horizon)
    }
}

/// Velocity spline: `knots[j][axis]` spread evenly over the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlPlan {
    pub knots: Vec<Vec<f64>>,
    pub horizon: usize,
    pub dt: f64,
    pub bounds: Vec<Bounds>,
}

impl ControlPlan {
    pub fn zeros(cfg: &PlannerConfig, dynamics: &DynamicsSpec) -> Self {
        Self {
            knots: vec![vec![0.0; dynamics.dof()]; cfg.knots],
            horizon: cfg.horizon,
            dt: dynamics.dt,
            bounds: dynamics.velocity_bounds.clone(),
        }
    }

    pub fn dof(&self) -> usize {
        self.bounds.len()
    }

    /// Knot values clamped into the velocity box.
    pub fn with_knots(&self, knots: Vec<Vec<f64>>) -> Self {
        let knots = knots
            .into_iter()
            .map(|k| k.iter().zip(&self.bounds).map(|(v, b)| b.clamp(*v)).collect())
            .collect();
        Self { knots, ..self.clone() }
    }

    pub fn controls(&self) -> Vec<ControlInput> {
        (0..self.horizon).map(|t| spline_eval(self, t)).collect()
    }

    /// Plan continuing after `steps` executed steps, for receding-horizon use.
    pub fn shifted(&self, steps: usize) -> Self {
        let k = self.knots.len();
        let span = self.horizon as f64;
        let knots = (0..k)
            .map(|j| {
                let t = steps as f64 + span * j as f64 / (k - 1) as f64;
                (0..self.dof()).map(|a| hermite(&self.knots, span, a, t.min(span))).collect()
            })
            .collect();
        self.with_knots(knots)
    }
}

/// Cubic Hermite interpolation of one axis with finite-difference tangents.
fn hermite(knots: &[Vec<f64>], span: f64, axis: usize, t: f64) -> f64 {
    let k = knots.len();
    let h = span / (k - 1) as f64;
    let p = |j: usize| knots[j][axis];
    let tangent = |j: usize| {
        if j == 0 {
            (p(1) - p(0)) / h
        } else if j == k - 1 {
            (p(k - 1) - p(k - 2)) / h
        } else {
            (p(j + 1) - p(j - 1)) / (2.0 * h)
        }
    };
    let t = t.clamp(0.0, span);
    let seg = ((t / h).floor() as usize).min(k - 2);
    let s = (t - seg as f64 * h) / h;
    let (s2, s3) = (s * s, s * s * s);
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    h00 * p(seg) + h10 * h * tangent(seg) + h01 * p(seg + 1) + h11 * h * tangent(seg + 1)
}

/// Command at step `t`, clamped to the velocity box.
pub fn spline_eval(plan: &ControlPlan, t: usize) -> ControlInput {
    let span = plan.horizon as f64;
    ControlInput {
        command: (0..plan.dof())
            .map(|a| plan.bounds[a].clamp(hermite(&plan.knots, span, a, t as f64)))
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostWeights {
    pub effort: f64,
    pub boundary: f64,
    pub margin: f64,
}

impl From<&PlannerConfig> for CostWeights {
    fn from(cfg: &PlannerConfig) -> Self {
        Self { effort: cfg.effort_weight, boundary: cfg.boundary_weight, margin: cfg.boundary_margin }
    }
}

/// `w_u Σ|u_t|² + w_b Σ (max(0, m − d)/m)²` with `d` the distance of each state to the workspace faces.
pub fn trajectory_cost(trajectory: &Trajectory, controls: &[ControlInput], workspace: &[Bounds], w: &CostWeights) -> f64 {
    let effort: f64 = controls.iter().flat_map(|u| &u.command).map(|v| v * v).sum();
    let mut boundary = 0.0;
    for x in &trajectory.states {
        for (q, b) in x.position.iter().zip(workspace) {
            let m = w.margin * b.width();
            let d = (q - b.lo).min(b.hi - q);
            boundary += ((m - d).max(0.0) / m).powi(2);
        }
    }
    w.effort * effort + w.boundary * boundary
}

#[derive(Debug, Clone)]
pub struct PlanOutcome {
    pub plan: ControlPlan,
    /// Predicted noiseless experiment under the belief mode.
    pub predicted: Experiment,
    pub trajectory: Trajectory,
    pub information: InfoMatrix,
    pub score: f64,
    pub nominal_score: f64,
}

struct Scored {
    trajectory: Trajectory,
    measurements: Vec<DVector<f64>>,
    controls: Vec<ControlInput>,
    information: InfoMatrix,
    score: f64,
}

fn score_plan(
    cfg: &PlannerConfig,
    scenario: &ScenarioSpec,
    x0: &RobotState,
    theta: &DVector<f64>,
    engine: &FisherEngine,
    plan: &ControlPlan,
) -> Result<Scored> {
    let controls = plan.controls();
    let model = ExperimentModel::new(scenario, x0.clone(), controls.clone());
    let (measurements, g) = engine.jacobians(&model, theta)?;
    let information = information_from_jacobians(&g, &scenario.noise_std)?;
    let trajectory = simulate(scenario, x0, &controls, theta, false)?.trajectory;
    let cost = trajectory_cost(&trajectory, &controls, &scenario.dynamics.workspace, &CostWeights::from(cfg));
    let score = psi(cfg.metric, &information) - cost;
    if !score.is_finite() {
        return Err(Error::DivergedRollout { step: 0 });
    }
    Ok(Scored { trajectory, measurements, controls, information, score })
}

pub fn plan_experiment(
    cfg: &PlannerConfig,
    scenario: &ScenarioSpec,
    x0: &RobotState,
    belief: &ParamBelief,
    engine: &FisherEngine,
    nominal: &ControlPlan,
    rng: &mut SimRng,
) -> Result<PlanOutcome> {
    cfg.validate()?;
    let mut candidates = vec![nominal.clone()];
    for _ in 0..cfg.num_samples {
        let knots = nominal
            .knots
            .iter()
            .map(|k| k.iter().map(|v| v + cfg.sampling_std * standard_normal(rng)).collect())
            .collect();
        candidates.push(nominal.with_knots(knots));
    }
    let theta = &belief.mode.values;
    let scored: Vec<Option<Scored>> = candidates
        .par_iter()
        .map(|p| score_plan(cfg, scenario, x0, theta, engine, p).ok())
        .collect();
    let nominal_score = scored[0].as_ref().map_or(f64::NEG_INFINITY, |s| s.score);
    let mut best: Option<usize> = None;
    for (i, s) in scored.iter().enumerate() {
        if let Some(s) = s {
            if best.is_none_or(|b| s.score > scored[b].as_ref().expect("scored").score) {
                best = Some(i);
            }
        }
    }
    let best = best.ok_or(Error::PlanningFailed)?;
    let plan = candidates.swap_remove(best);
    let win = scored.into_iter().nth(best).flatten().expect("best candidate was scored");
    let predicted = Experiment {
        measurements: win.measurements.into_iter().map(|forces| Measurement { forces }).collect(),
        controls: win.controls,
        trajectory: win.trajectory.clone(),
        noise_std: scenario.noise_std.clone(),
    };
    Ok(PlanOutcome {
        plan,
        predicted,
        trajectory: win.trajectory,
        information: win.information,
        score: win.score,
        nominal_score,
    })
}
