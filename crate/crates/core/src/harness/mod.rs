//! The closed learning loop and the studies built on it.
//!
//! Each experiment plans under the current belief, executes the plan on the
//! true system with noisy sensors, solves for the MAP estimate on the new data
//! (with the current belief as prior) and updates the belief with the Fisher
//! information at the estimate. Consecutive experiments continue from the
//! true final state of the previous one.

mod compare;
mod config;
mod io;
mod landscape;

use std::time::Instant;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use compare::{compare_baseline, sign_test_p_value, ComparisonReport, EngineSummary};
pub use config::{merge_toml, RunConfig};
pub use io::{read_experiments_csv, read_trajectory_csv, write_run, CsvTable, RecordedStep, RunFiles, RunSummary};
pub use landscape::{emit_landscape, write_landscape_csv, LandscapeAxes, LandscapeGrid};

use crate::error::{Error, Result};
use crate::estimation::{belief_update, ca_map_solve, LogPosterior, Prior};
use crate::dynamics::simulate;
use crate::model::ExperimentModel;
use crate::planner::{plan_experiment, ControlPlan};
use crate::rng::{seeded_stream, NOISE_STREAM, PLANNER_STREAM};
use crate::scenarios::{abs_error, add_noise, percent_error};
use crate::types::{Experiment, Measurement, ParamBelief};

/// Per-experiment log entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub k: usize,
    pub theta_hat: Vec<f64>,
    /// Diagonal of Σ_θ after the update.
    pub covariance_diag: Vec<f64>,
    pub trace_covariance: f64,
    /// trace(F) of the executed experiment at θ̂.
    pub trace_information: f64,
    pub percent_error: Vec<f64>,
    pub abs_error: Vec<f64>,
    pub map_iterations: usize,
    pub map_converged: bool,
    pub plan_score: f64,
    /// Executed steps with a nonzero normal force.
    pub contact_steps: usize,
}

/// Wall-clock seconds per phase of one experiment.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub plan: f64,
    pub execute: f64,
    pub estimate: f64,
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub config: RunConfig,
    pub param_names: Vec<String>,
    pub theta_star: Vec<f64>,
    pub initial_mode: Vec<f64>,
    pub initial_trace_covariance: f64,
    pub experiments: Vec<ExperimentRecord>,
    /// Executed data sets (noisy measurements, true trajectories).
    pub data: Vec<Experiment>,
    pub beliefs: Vec<ParamBelief>,
    pub timings: Vec<PhaseTimings>,
}

impl RunRecord {
    pub fn final_theta(&self) -> &[f64] {
        self.experiments.last().map_or(&self.initial_mode, |e| &e.theta_hat)
    }

    /// `‖%err‖₂` of the last estimate.
    pub fn final_error(&self) -> f64 {
        self.experiments
            .last()
            .map_or(f64::NAN, |e| e.percent_error.iter().map(|v| v * v).sum::<f64>().sqrt())
    }

    pub fn final_abs_error(&self) -> &[f64] {
        self.experiments.last().map_or(&[], |e| &e.abs_error)
    }

    pub fn cumulative_information(&self) -> f64 {
        self.experiments.iter().map(|e| e.trace_information).sum()
    }

    /// `δ_k = ‖θ̂_k − θ*‖₂` with `δ_0` the prior mode's distance.
    pub fn distance_curve(&self) -> Vec<f64> {
        let dist = |th: &[f64]| th.iter().zip(&self.theta_star).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        std::iter::once(dist(&self.initial_mode))
            .chain(self.experiments.iter().map(|e| dist(&e.theta_hat)))
            .collect()
    }
}

pub fn run_active_learning(cfg: &RunConfig) -> Result<RunRecord> {
    cfg.validate()?;
    let spec = &cfg.scenario;
    let theta_star = spec.theta_star();
    let truth = &spec.true_params;
    let mut planner_rng = seeded_stream(cfg.seed, PLANNER_STREAM);
    let mut noise_rng = seeded_stream(cfg.seed, NOISE_STREAM);
    let mut belief = spec.prior.clone();
    let mut x = spec.initial_state.clone();
    let mut nominal = ControlPlan::zeros(&cfg.planner, &spec.dynamics);
    let steps = cfg.planner.steps_per_experiment();
    let mut record = RunRecord {
        config: cfg.clone(),
        param_names: spec.param_names(),
        theta_star: truth.clone(),
        initial_mode: belief.mode.values.iter().copied().collect(),
        initial_trace_covariance: belief.covariance.trace(),
        experiments: Vec::with_capacity(cfg.k_max),
        data: Vec::with_capacity(cfg.k_max),
        beliefs: Vec::with_capacity(cfg.k_max),
        timings: Vec::with_capacity(cfg.k_max),
    };
    for k in 0..cfg.k_max {
        let wrap = |e: Error| Error::Experiment { k, source: Box::new(e) };
        let t0 = Instant::now();
        let outcome = plan_experiment(&cfg.planner, spec, &x, &belief, &cfg.engine, &nominal, &mut planner_rng)
            .map_err(wrap)?;
        let t1 = Instant::now();

        let controls = outcome.plan.controls()[..steps].to_vec();
        let executed = simulate(spec, &x, &controls, &theta_star, false).map_err(wrap)?;
        let measurements: Vec<Measurement> = executed
            .measurements
            .iter()
            .map(|y| Measurement { forces: add_noise(y, &spec.noise_std, &mut noise_rng) })
            .collect();
        let data = Experiment {
            measurements,
            controls: controls.clone(),
            trajectory: executed.trajectory,
            noise_std: spec.noise_std.clone(),
        };
        let t2 = Instant::now();

        let lp = LogPosterior::from_experiment(spec, &data, Prior::from_belief(&belief).map_err(wrap)?);
        let map = ca_map_solve(&lp, &belief.mode, &cfg.engine, &cfg.map).map_err(wrap)?;
        let model = ExperimentModel::new(spec, x.clone(), controls);
        let info = cfg.engine.information(&model, &map.theta.values).map_err(wrap)?;
        belief = belief_update(&belief, &info.matrix, &map.theta.values).map_err(wrap)?;
        let t3 = Instant::now();

        let theta_hat: Vec<f64> = belief.mode.values.iter().copied().collect();
        record.experiments.push(ExperimentRecord {
            k,
            percent_error: percent_error(&theta_hat, truth).map_err(wrap)?,
            abs_error: abs_error(&theta_hat, truth).map_err(wrap)?,
            theta_hat,
            covariance_diag: belief.covariance.diagonal().iter().copied().collect(),
            trace_covariance: belief.covariance.trace(),
            trace_information: info.trace(),
            map_iterations: map.iterations,
            map_converged: map.converged,
            plan_score: outcome.score,
            contact_steps: data
                .trajectory
                .contacts
                .iter()
                .filter(|c| c.iter().any(|f| f.lambda_n > 0.0))
                .count(),
        });
        record.timings.push(PhaseTimings {
            plan: (t1 - t0).as_secs_f64(),
            execute: (t2 - t1).as_secs_f64(),
            estimate: (t3 - t2).as_secs_f64(),
        });
        x = data.trajectory.final_state().clone();
        nominal = if steps < outcome.plan.horizon { outcome.plan.shifted(steps) } else { outcome.plan };
        record.data.push(data);
        record.beliefs.push(belief.clone());
    }
    Ok(record)
}

/// Offline recomputation of trace(F) for a logged experiment at its logged estimate.
pub fn recompute_trace_information(cfg: &RunConfig, data: &Experiment, theta_hat: &[f64]) -> Result<f64> {
    let model = ExperimentModel::new(&cfg.scenario, data.trajectory.initial_state().clone(), data.controls.clone());
    Ok(cfg.engine.information(&model, &DVector::from_column_slice(theta_hat))?.trace())
}

/// Seven prior modes: evenly spread over ±30% of θ* (clamped to the support),
/// or over [0.1, 0.9] for friction.
pub fn default_priors(cfg: &RunConfig) -> Vec<Vec<f64>> {
    let spec = &cfg.scenario;
    (0..7)
        .map(|i| {
            let s = i as f64 / 6.0;
            spec.estimated
                .iter()
                .zip(&spec.true_params)
                .zip(&spec.prior.support)
                .map(|((kind, t), b)| match kind {
                    crate::types::ParamKind::Friction => 0.1 + 0.8 * s,
                    _ => b.clamp(t * (0.7 + 0.6 * s)),
                })
                .collect()
        })
        .collect()
}

/// One run per prior mode, all with the same seed.
pub fn run_robustness_sweep(cfg: &RunConfig, priors: &[Vec<f64>]) -> Result<Vec<RunRecord>> {
    priors
        .par_iter()
        .map(|mode| {
            let mut c = cfg.clone();
            c.scenario = c.scenario.with_prior_mode(mode)?;
            run_active_learning(&c)
        })
        .collect()
}

/// Parses a priors file: one prior per line, comma separated, `#` comments.
pub fn parse_priors(text: &str, dim: usize) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Config(format!("priors line {}: {e}", n + 1)))?;
        if row.len() != dim {
            return Err(Error::Config(format!("priors line {}: expected {dim} values", n + 1)));
        }
        out.push(row);
    }
    if out.is_empty() {
        return Err(Error::Config("priors file holds no priors".into()));
    }
    Ok(out)
}
