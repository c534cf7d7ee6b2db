//! Shared domain types.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::contact::ContactForce;
use crate::error::{Error, Result};
use crate::linalg;

/// Closed interval `[lo, hi]`, serialized as a two-element array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Bounds {
    pub lo: f64,
    pub hi: f64,
}

impl Bounds {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_valid(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi
    }
}

impl From<[f64; 2]> for Bounds {
    fn from(v: [f64; 2]) -> Self {
        Self::new(v[0], v[1])
    }
}

impl From<Bounds> for [f64; 2] {
    fn from(b: Bounds) -> Self {
        [b.lo, b.hi]
    }
}

/// Physical quantity an estimated parameter controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamKind {
    /// Free-object mass (kg).
    Mass,
    /// Contact stiffness K (N/m).
    Stiffness,
    /// Contact damping C (N·s/m).
    Damping,
    /// Friction coefficient μ.
    Friction,
    /// Friction resistance R (N·s/m).
    Resistance,
    /// Box length l (m).
    Length,
    /// Box width w (m).
    Width,
}

impl ParamKind {
    pub fn label(self) -> &'static str {
        match self {
            ParamKind::Mass => "mass",
            ParamKind::Stiffness => "stiffness",
            ParamKind::Damping => "damping",
            ParamKind::Friction => "friction",
            ParamKind::Resistance => "resistance",
            ParamKind::Length => "length",
            ParamKind::Width => "width",
        }
    }

    /// Index into the box shape-parameter vector `(l, w)`, if this is a shape parameter.
    pub fn shape_index(self) -> Option<usize> {
        match self {
            ParamKind::Length => Some(0),
            ParamKind::Width => Some(1),
            _ => None,
        }
    }
}

/// A labelled parameter vector θ.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    pub values: DVector<f64>,
    pub names: Vec<String>,
}

impl ParamVector {
    pub fn new(values: DVector<f64>, names: Vec<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Dimension("parameter vector must have at least one entry".into()));
        }
        if values.len() != names.len() {
            return Err(Error::Dimension(format!(
                "{} values but {} names",
                values.len(),
                names.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("parameter vector has non-finite entries".into()));
        }
        Ok(Self { values, names })
    }

    pub fn from_kinds(values: &[f64], kinds: &[ParamKind]) -> Result<Self> {
        Self::new(
            DVector::from_column_slice(values),
            kinds.iter().map(|k| k.label().to_string()).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn within(&self, support: &[Bounds]) -> bool {
        support.len() == self.len() && self.values.iter().zip(support).all(|(v, b)| b.contains(*v))
    }
}

/// Gaussian belief over θ: mode θ̂, covariance Σ_θ and box support Θ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BeliefRepr", into = "BeliefRepr")]
pub struct ParamBelief {
    pub mode: ParamVector,
    pub covariance: DMatrix<f64>,
    pub support: Vec<Bounds>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct BeliefRepr {
    names: Vec<String>,
    mode: Vec<f64>,
    covariance: Vec<Vec<f64>>,
    support: Vec<Bounds>,
}

impl TryFrom<BeliefRepr> for ParamBelief {
    type Error = Error;

    fn try_from(r: BeliefRepr) -> Result<Self> {
        let mode = ParamVector::new(DVector::from_vec(r.mode), r.names)?;
        ParamBelief::new(mode, linalg::from_rows(&r.covariance)?, r.support)
    }
}

impl From<ParamBelief> for BeliefRepr {
    fn from(b: ParamBelief) -> Self {
        BeliefRepr {
            names: b.mode.names,
            mode: b.mode.values.iter().copied().collect(),
            covariance: linalg::to_rows(&b.covariance),
            support: b.support,
        }
    }
}

impl ParamBelief {
    /// Validates symmetry (1e-10 relative), positive definiteness and that the mode lies in the support.
    pub fn new(mode: ParamVector, covariance: DMatrix<f64>, support: Vec<Bounds>) -> Result<Self> {
        let d = mode.len();
        if covariance.shape() != (d, d) {
            return Err(Error::Dimension(format!(
                "covariance is {:?}, expected {d}x{d}",
                covariance.shape()
            )));
        }
        if support.len() != d || support.iter().any(|b| !b.is_valid()) {
            return Err(Error::Config("support must hold one well-ordered interval per parameter".into()));
        }
        if linalg::asymmetry(&covariance) > 1e-10 {
            return Err(Error::InvalidCovariance("covariance is not symmetric".into()));
        }
        let covariance = linalg::symmetrize(&covariance);
        if !linalg::is_spd(&covariance) {
            return Err(Error::InvalidCovariance("covariance is not positive definite".into()));
        }
        if !mode.within(&support) {
            return Err(Error::Config("belief mode lies outside its support".into()));
        }
        Ok(Self { mode, covariance, support })
    }

    pub fn dim(&self) -> usize {
        self.mode.len()
    }

    pub fn precision(&self) -> Result<DMatrix<f64>> {
        linalg::spd_inverse(&self.covariance)
    }

    pub fn with_mode(&self, values: &[f64]) -> Result<Self> {
        let mode = ParamVector::new(DVector::from_column_slice(values), self.mode.names.clone())?;
        Self::new(mode, self.covariance.clone(), self.support.clone())
    }

    /// Per-coordinate clamp onto the support box Θ.
    pub fn project(&self, theta: &DVector<f64>) -> DVector<f64> {
        project_box(theta, &self.support)
    }
}

pub fn project_box(theta: &DVector<f64>, support: &[Bounds]) -> DVector<f64> {
    DVector::from_iterator(theta.len(), theta.iter().zip(support).map(|(v, b)| b.clamp(*v)))
}

/// State of an auxiliary free body moving along a fixed world axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectState {
    /// Position along the object axis (m).
    pub position: f64,
    /// Velocity along the object axis (m/s).
    pub velocity: f64,
}

/// Task-space robot state x_t.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object: Option<ObjectState>,
}

impl RobotState {
    pub fn at_rest(position: Vec<f64>) -> Self {
        let velocity = vec![0.0; position.len()];
        Self { position, velocity, object: None }
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().chain(&self.velocity).all(|v| v.is_finite())
            && self.object.is_none_or(|o| o.position.is_finite() && o.velocity.is_finite())
    }
}

/// Task-space velocity command u_t (m/s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlInput {
    pub command: Vec<f64>,
}

impl ControlInput {
    pub fn zeros(dof: usize) -> Self {
        Self { command: vec![0.0; dof] }
    }
}

/// Sensor reading y_t (N).
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub forces: DVector<f64>,
}

/// Rolled-out states x_0..x_T and the contact forces at x_0..x_{T-1}.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<RobotState>,
    /// `contacts[t][c]` is the force at contact point `c` evaluated on `states[t]`.
    pub contacts: Vec<Vec<ContactForce>>,
    pub dt: f64,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.contacts.len()
    }

    pub fn initial_state(&self) -> &RobotState {
        &self.states[0]
    }

    pub fn final_state(&self) -> &RobotState {
        self.states.last().expect("trajectory has at least one state")
    }
}

/// One executed (or predicted) experiment 𝒟 = {(y_t, u_t)}.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub measurements: Vec<Measurement>,
    pub controls: Vec<ControlInput>,
    pub trajectory: Trajectory,
    pub noise_std: Vec<f64>,
}

impl Experiment {
    pub fn len(&self) -> usize {
        self.measurements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measurements.is_empty()
    }

    pub fn observations(&self) -> Vec<DVector<f64>> {
        self.measurements.iter().map(|m| m.forces.clone()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_belief(mode: f64, var: f64) -> Result<ParamBelief> {
        ParamBelief::new(
            ParamVector::from_kinds(&[mode], &[ParamKind::Mass])?,
            DMatrix::from_element(1, 1, var),
            vec![Bounds::new(0.0, 1.0)],
        )
    }

    #[test]
    fn belief_rejects_nonpositive_covariance() {
        assert!(scalar_belief(0.5, 0.0).is_err());
        assert!(scalar_belief(0.5, -1.0).is_err());
        assert!(scalar_belief(0.5, 1.0).is_ok());
    }

    #[test]
    fn belief_rejects_mode_outside_support() {
        assert!(scalar_belief(1.5, 1.0).is_err());
    }

    #[test]
    fn belief_serde_roundtrip() {
        let b = scalar_belief(0.25, 0.5).unwrap();
        let s = toml::to_string(&b).unwrap();
        let back: ParamBelief = toml::from_str(&s).unwrap();
        assert_eq!(b, back);
    }

    #[test]
    fn parameter_vector_needs_entries() {
        assert!(ParamVector::new(DVector::zeros(0), vec![]).is_err());
        assert!(ParamVector::new(DVector::from_vec(vec![f64::NAN]), vec!["a".into()]).is_err());
    }
}
