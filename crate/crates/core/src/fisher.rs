//! Fisher information of Gaussian force measurements.
//!
//! For `y_t ~ N(ŷ_t(θ), Σ)` the information is `F = Σ_t G_tᵀ Σ⁻¹ G_t` with
//! `G_t = ∂ŷ_t/∂θ`. The contact-aware engine obtains `G_t` from the analytic
//! contact, SDF and sensitivity chain rule; the baseline differentiates the
//! full rollout numerically.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, max_eigenvalue, min_eigenvalue, symmetrize};
use crate::model::{ExperimentModel, MeasurementModel};
use crate::scenarios::ScenarioSpec;
use crate::types::{Bounds, ControlInput, Trajectory};

/// Default finite-difference step as a fraction of each parameter's support width.
pub const DEFAULT_FD_STEP: f64 = 1e-4;
/// Regularizer inside `log det(F + εI)`.
pub const LOGDET_EPS: f64 = 1e-12;
/// Eigenvalues below this are treated as roundoff when validating `F`.
pub const PSD_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EngineMode {
    ContactAware,
    /// Central differences of the rollout measurements.
    #[serde(alias = "finite-difference")]
    Baseline,
}

impl std::str::FromStr for EngineMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "contact-aware" => Ok(EngineMode::ContactAware),
            "baseline" | "finite-difference" => Ok(EngineMode::Baseline),
            other => Err(Error::Config(format!("unknown engine '{other}'"))),
        }
    }
}

impl std::fmt::Display for EngineMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EngineMode::ContactAware => "contact-aware",
            EngineMode::Baseline => "baseline",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherEngine {
    pub mode: EngineMode,
    /// Baseline step relative to the support width of each parameter.
    pub fd_step: f64,
}

impl Default for FisherEngine {
    fn default() -> Self {
        Self::contact_aware()
    }
}

impl FisherEngine {
    pub const fn contact_aware() -> Self {
        Self { mode: EngineMode::ContactAware, fd_step: DEFAULT_FD_STEP }
    }

    pub const fn baseline() -> Self {
        Self { mode: EngineMode::Baseline, fd_step: DEFAULT_FD_STEP }
    }

    pub fn with_mode(mode: EngineMode) -> Self {
        Self { mode, fd_step: DEFAULT_FD_STEP }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fd_step > 0.0 && self.fd_step < 0.5) {
            return Err(Error::Config(format!("fd_step must lie in (0, 0.5), got {}", self.fd_step)));
        }
        Ok(())
    }

    /// Predictions and measurement Jacobians under this engine.
    pub fn jacobians<M: MeasurementModel + ?Sized>(
        &self,
        model: &M,
        theta: &DVector<f64>,
    ) -> Result<(Vec<DVector<f64>>, Vec<DMatrix<f64>>)> {
        match self.mode {
            EngineMode::ContactAware => model.predict_with_jacobian(theta),
            EngineMode::Baseline => {
                let y = model.predict(theta)?;
                let g = fd_jacobians(model, theta, self.fd_step)?;
                Ok((y, g))
            }
        }
    }

    pub fn information<M: MeasurementModel + ?Sized>(&self, model: &M, theta: &DVector<f64>) -> Result<InfoMatrix> {
        let (_, g) = self.jacobians(model, theta)?;
        information_from_jacobians(&g, model.noise_std())
    }
}

/// Central differences of the whole measurement sequence, one-sided toward the
/// interior when a central stencil would leave the support.
pub fn fd_jacobians<M: MeasurementModel + ?Sized>(
    model: &M,
    theta: &DVector<f64>,
    rel_step: f64,
) -> Result<Vec<DMatrix<f64>>> {
    let d = model.param_dim();
    let support = model.support();
    let mut columns: Vec<Vec<DVector<f64>>> = Vec::with_capacity(d);
    let mut base: Option<Vec<DVector<f64>>> = None;
    for i in 0..d {
        let b: Bounds = support[i];
        let h = rel_step * b.width();
        let at = |v: f64| -> Result<Vec<DVector<f64>>> {
            let mut th = theta.clone();
            th[i] = v;
            model.predict(&th)
        };
        let x = theta[i];
        let col = if x - h >= b.lo && x + h <= b.hi {
            let (p, m) = (at(x + h)?, at(x - h)?);
            p.iter().zip(&m).map(|(p, m)| (p - m) / (2.0 * h)).collect()
        } else {
            let y0 = match &base {
                Some(y) => y.clone(),
                None => {
                    let y = model.predict(theta)?;
                    base = Some(y.clone());
                    y
                }
            };
            let (dir, yh) = if x + h <= b.hi { (1.0, at(x + h)?) } else { (-1.0, at(x - h)?) };
            yh.iter().zip(&y0).map(|(a, b)| (a - b) * (dir / h)).collect()
        };
        columns.push(col);
    }
    let t = columns.first().map_or(0, Vec::len);
    Ok((0..t)
        .map(|step| {
            let m = columns[0][step].len();
            DMatrix::from_fn(m, d, |r, c| columns[c][step][r])
        })
        .collect())
}

/// Symmetric PSD information matrix with the number of summed measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct InfoMatrix {
    pub matrix: DMatrix<f64>,
    pub sample_count: usize,
}

impl InfoMatrix {
    pub fn zeros(d: usize) -> Self {
        Self { matrix: DMatrix::zeros(d, d), sample_count: 0 }
    }

    pub fn new(matrix: DMatrix<f64>, sample_count: usize) -> Result<Self> {
        let matrix = symmetrize(&matrix);
        let lmin = min_eigenvalue(&matrix);
        if !lmin.is_finite() || lmin < -PSD_TOL * max_eigenvalue(&matrix).max(1.0) {
            return Err(Error::InvalidInformationMatrix { min_eigenvalue: lmin });
        }
        Ok(Self { matrix, sample_count })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    pub fn add(&self, other: &InfoMatrix) -> InfoMatrix {
        InfoMatrix { matrix: &self.matrix + &other.matrix, sample_count: self.sample_count + other.sample_count }
    }
}

/// `Σ_t G_tᵀ Σ⁻¹ G_t` for a diagonal noise covariance given by per-channel σ.
pub fn information_from_jacobians(jacobians: &[DMatrix<f64>], noise_std: &[f64]) -> Result<InfoMatrix> {
    let Some(first) = jacobians.first() else {
        return Err(Error::Dimension("no measurements to compute information from".into()));
    };
    let (m, d) = first.shape();
    if noise_std.len() != m {
        return Err(Error::Dimension(format!("{m} channels but {} noise levels", noise_std.len())));
    }
    let w = DVector::from_iterator(m, noise_std.iter().map(|s| 1.0 / (s * s)));
    let mut f = DMatrix::zeros(d, d);
    for g in jacobians {
        let wg = DMatrix::from_fn(m, d, |r, c| w[r] * g[(r, c)]);
        f += g.transpose() * wg;
    }
    InfoMatrix::new(f, jacobians.len())
}

/// Information of the trajectory obtained by re-simulating `controls` from `τ`'s first state.
pub fn fim_trajectory(
    engine: &FisherEngine,
    scenario: &ScenarioSpec,
    trajectory: &Trajectory,
    controls: &[ControlInput],
    theta: &DVector<f64>,
) -> Result<InfoMatrix> {
    let model = ExperimentModel::new(scenario, trajectory.initial_state().clone(), controls.to_vec());
    engine.information(&model, theta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignMetric {
    #[default]
    Trace,
    LogDet,
}

pub fn psi(metric: DesignMetric, f: &InfoMatrix) -> f64 {
    match metric {
        DesignMetric::Trace => f.trace(),
        DesignMetric::LogDet => eigenvalues(&f.matrix).iter().map(|l| (l + LOGDET_EPS).max(f64::MIN_POSITIVE).ln()).sum(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrlbReport {
    pub satisfied: bool,
    /// Smallest eigenvalue of `cov(θ̂) − F⁻¹` on the informative subspace.
    pub margin: f64,
    pub tolerance: f64,
}

/// Relative tolerance of the Cramér–Rao check, as a fraction of the bound's largest eigenvalue.
pub const CRLB_REL_TOL: f64 = 0.1;

/// Checks `cov(θ̂) ⪰ F⁻¹` on the range of `F`; directions carrying no information bound nothing.
pub fn crlb_check(f: &InfoMatrix, sample_cov: &DMatrix<f64>) -> CrlbReport {
    crlb_check_with_tol(f, sample_cov, CRLB_REL_TOL)
}

pub fn crlb_check_with_tol(f: &InfoMatrix, sample_cov: &DMatrix<f64>, rel_tol: f64) -> CrlbReport {
    let eig = symmetrize(&f.matrix).symmetric_eigen();
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&i| lmax > 0.0 && eig.eigenvalues[i] > 1e-10 * lmax)
        .collect();
    if keep.is_empty() {
        return CrlbReport { satisfied: true, margin: 0.0, tolerance: 0.0 };
    }
    let u = DMatrix::from_fn(f.dim(), keep.len(), |r, c| eig.eigenvectors[(r, keep[c])]);
    let inv = DVector::from_iterator(keep.len(), keep.iter().map(|&i| 1.0 / eig.eigenvalues[i]));
    let projected = u.transpose() * symmetrize(sample_cov) * &u - DMatrix::from_diagonal(&inv);
    let margin = min_eigenvalue(&projected);
    let tolerance = rel_tol * inv.max();
    CrlbReport { satisfied: margin >= -tolerance, margin, tolerance }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionBoundReport {
    /// 2-norm condition number `σ_max/σ_min`.
    pub kappa: f64,
    /// `‖F‖²‖F⁻¹‖²` with `‖A‖² = tr(AᵀA)`.
    pub schur_norm_product: f64,
    /// `(κ + κ⁻¹)²`.
    pub middle: f64,
    pub upper: f64,
    pub lower: f64,
    pub holds: bool,
}

/// Relative slack allowed when a side of the inequality is attained with equality.
pub const CONDITION_BOUND_REL_TOL: f64 = 1e-9;

/// Evaluates `(N − (n−2))² ≥ (κ + κ⁻¹)² ≥ 4N/n²` (n even) or `4(N − 1)/(n² − 1)` (n odd),
/// where `N = ‖F‖²‖F⁻¹‖²`. Returns `None` for a singular matrix.
pub fn condition_bound_check(f: &InfoMatrix) -> Option<ConditionBoundReport> {
    let n = f.dim();
    let sv = f.matrix.clone().svd(false, false).singular_values;
    let (smax, smin) = (sv.max(), sv.min());
    if !(smin > 0.0) || !smin.is_finite() {
        return None;
    }
    let inv = f.matrix.clone().try_inverse()?;
    let sq = |a: &DMatrix<f64>| (a.transpose() * a).trace();
    let product = sq(&f.matrix) * sq(&inv);
    let kappa = smax / smin;
    let middle = (kappa + 1.0 / kappa).powi(2);
    let nf = n as f64;
    let upper = (product - (nf - 2.0)).powi(2);
    let lower = if n % 2 == 0 {
        4.0 * product / (nf * nf)
    } else {
        4.0 * (product - 1.0) / (nf * nf - 1.0)
    };
    let slack = CONDITION_BOUND_REL_TOL * upper.abs().max(middle).max(1.0);
    let holds = upper + slack >= middle && middle + slack >= lower;
    Some(ConditionBoundReport { kappa, schur_norm_product: product, middle, upper, lower, holds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LinearGaussianModel;

    fn info(rows: &[&[f64]]) -> InfoMatrix {
        let n = rows.len();
        InfoMatrix::new(DMatrix::from_fn(n, n, |r, c| rows[r][c]), 1).unwrap()
    }

    #[test]
    fn scalar_linear_information() {
        let xs = [1.0, 2.0, -3.0];
        let m = LinearGaussianModel::scalar(&xs, 1.0, Bounds::new(-10.0, 10.0)).unwrap();
        let f = FisherEngine::contact_aware().information(&m, &DVector::from_vec(vec![0.3])).unwrap();
        assert!((f.matrix[(0, 0)] - 14.0).abs() < 1e-12);
        assert_eq!(f.sample_count, 3);
    }

    #[test]
    fn baseline_matches_linear_model() {
        let xs = [0.5, 1.5];
        let m = LinearGaussianModel::scalar(&xs, 0.5, Bounds::new(0.0, 1.0)).unwrap();
        for th in [0.0, 0.5, 1.0] {
            let f = FisherEngine::baseline().information(&m, &DVector::from_vec(vec![th])).unwrap();
            assert!((f.matrix[(0, 0)] - 10.0).abs() < 1e-6, "{th}");
        }
    }

    #[test]
    fn psi_values() {
        let i2 = info(&[&[1.0, 0.0], &[0.0, 1.0]]);
        assert_eq!(psi(DesignMetric::Trace, &i2), 2.0);
        assert!(psi(DesignMetric::LogDet, &i2).abs() < 1e-11);
        assert_eq!(psi(DesignMetric::Trace, &info(&[&[3.0, 0.0], &[0.0, 0.0]])), 3.0);
    }

    #[test]
    fn rejects_indefinite() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(InfoMatrix::new(m, 1), Err(Error::InvalidInformationMatrix { .. })));
    }

    #[test]
    fn crlb_cases() {
        let f = InfoMatrix::zeros(2);
        assert!(crlb_check(&f, &DMatrix::zeros(2, 2)).satisfied);
        // T samples of a mean with σ=1: efficient variance 1/T
        let f = info(&[&[20.0]]);
        let r = crlb_check(&f, &DMatrix::from_element(1, 1, 0.05));
        assert!(r.satisfied && r.margin.abs() < 1e-15);
        let fake = info(&[&[2000.0]]);
        assert!(crlb_check(&fake, &DMatrix::from_element(1, 1, 0.05)).satisfied);
        let true_f = info(&[&[20.0]]);
        assert!(!crlb_check(&true_f, &DMatrix::from_element(1, 1, 0.0005)).satisfied);
    }

    #[test]
    fn condition_bound_examples() {
        let r = condition_bound_check(&info(&[&[1.0, 0.0], &[0.0, 1.0]])).unwrap();
        assert_eq!(r.kappa, 1.0);
        assert!(r.holds);
        let r = condition_bound_check(&info(&[&[1.0, 0.0], &[0.0, 10.0]])).unwrap();
        assert!((r.kappa - 10.0).abs() < 1e-12);
        // N = 101 · 1.01 = 102.01
        assert!((r.schur_norm_product - 102.01).abs() < 1e-9);
        assert!(r.holds);
        assert!(condition_bound_check(&InfoMatrix::zeros(2)).is_none());
    }
}
