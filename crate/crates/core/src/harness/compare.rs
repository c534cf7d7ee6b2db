//! Paired comparison of the contact-aware and finite-difference engines.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_active_learning, RunConfig, RunRecord};
use crate::error::Result;
use crate::fisher::{EngineMode, FisherEngine};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineSummary {
    pub engine: EngineMode,
    /// Per seed `‖%err‖₂` of the final estimate.
    pub final_errors: Vec<f64>,
    /// Per seed Σ_k trace(F_k).
    pub cumulative_information: Vec<f64>,
    /// Median over seeds of `‖%err‖₂` after each experiment.
    pub median_error_curve: Vec<f64>,
    /// Median over seeds of trace(F_k).
    pub median_information_curve: Vec<f64>,
    pub median_final_error: f64,
    pub median_cumulative_information: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub scenario: String,
    pub seeds: Vec<u64>,
    pub k_max: usize,
    pub contact_aware: EngineSummary,
    pub baseline: EngineSummary,
    /// Seeds where contact-aware ended with strictly smaller error.
    pub wins: usize,
    pub losses: usize,
    pub ties: usize,
    /// Two-sided sign test on final errors, ties dropped.
    pub sign_test_p: f64,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// `P(|W − n/2| ≥ |wins − n/2|)` for `W ~ Binomial(n, 1/2)`.
pub fn sign_test_p_value(wins: usize, losses: usize) -> f64 {
    let n = wins + losses;
    if n == 0 {
        return 1.0;
    }
    let k = wins.min(losses);
    // log C(n, i) accumulated incrementally
    let mut log_c = 0.0;
    let mut tail = 0.0;
    for i in 0..=k {
        if i > 0 {
            log_c += ((n - i + 1) as f64).ln() - (i as f64).ln();
        }
        tail += (log_c - n as f64 * std::f64::consts::LN_2).exp();
    }
    (2.0 * tail).min(1.0)
}

fn percent_norm(p: &[f64]) -> f64 {
    p.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn summarize(engine: EngineMode, runs: &[RunRecord]) -> EngineSummary {
    let k_max = runs.first().map_or(0, |r| r.experiments.len());
    let at = |k: usize, f: &dyn Fn(&super::ExperimentRecord) -> f64| {
        median(&runs.iter().map(|r| f(&r.experiments[k])).collect::<Vec<_>>())
    };
    let final_errors: Vec<f64> = runs.iter().map(RunRecord::final_error).collect();
    let cumulative_information: Vec<f64> = runs.iter().map(RunRecord::cumulative_information).collect();
    EngineSummary {
        engine,
        median_error_curve: (0..k_max).map(|k| at(k, &|e| percent_norm(&e.percent_error))).collect(),
        median_information_curve: (0..k_max).map(|k| at(k, &|e| e.trace_information)).collect(),
        median_final_error: median(&final_errors),
        median_cumulative_information: median(&cumulative_information),
        final_errors,
        cumulative_information,
    }
}

/// Runs both engines on every seed. Sensor noise streams are keyed by the
/// seed alone, so each pair sees the same noise sequence.
pub fn compare_baseline(cfg: &RunConfig, seeds: &[u64]) -> Result<ComparisonReport> {
    let jobs: Vec<(EngineMode, u64)> = [EngineMode::ContactAware, EngineMode::Baseline]
        .into_iter()
        .flat_map(|m| seeds.iter().map(move |s| (m, *s)))
        .collect();
    let runs: Vec<RunRecord> = jobs
        .par_iter()
        .map(|&(mode, seed)| {
            let mut c = cfg.clone();
            c.seed = seed;
            c.engine = FisherEngine { mode, ..cfg.engine };
            run_active_learning(&c)
        })
        .collect::<Result<_>>()?;
    let (ca, fd) = runs.split_at(seeds.len());
    let contact_aware = summarize(EngineMode::ContactAware, ca);
    let baseline = summarize(EngineMode::Baseline, fd);
    let (mut wins, mut losses, mut ties) = (0, 0, 0);
    for (a, b) in contact_aware.final_errors.iter().zip(&baseline.final_errors) {
        match a.partial_cmp(b) {
            Some(std::cmp::Ordering::Less) => wins += 1,
            Some(std::cmp::Ordering::Greater) => losses += 1,
            _ => ties += 1,
        }
    }
    Ok(ComparisonReport {
        scenario: cfg.scenario.name.to_string(),
        seeds: seeds.to_vec(),
        k_max: cfg.k_max,
        contact_aware,
        baseline,
        wins,
        losses,
        ties,
        sign_test_p: sign_test_p_value(wins, losses),
    })
}
