//! The four experiment scenarios and their sensor models.
//!
//! | scenario   | estimated θ | contact (K, C, μ, R)      | task space            |
//! |------------|-------------|---------------------------|-----------------------|
//! | hefting    | m           | 500, 0, –, –              | hand height z         |
//! | rubbing    | μ           | 100, 1, 0.4, 2.0          | wall-frame (x, y)     |
//! | pinching   | K, C        | 800, 10, –, –             | finger gap            |
//! | contouring | l, w        | 500, 0, 0, 0              | table-plane (x, y)    |

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::contact::{ContactJacobian, ContactModel, ContactParams};
use crate::dynamics::{eval_contacts, measure, DynamicsSpec, ObjectSpec, Physics, GRAVITY};
use crate::error::{Error, Result};
use crate::rng::{standard_normal, SimRng};
use crate::sdf::SignedDistanceField;
use crate::types::{Bounds, Measurement, ObjectState, ParamBelief, ParamKind, ParamVector, RobotState};

/// Default per-channel force noise σ (N).
pub const DEFAULT_NOISE_STD: f64 = 0.25;
/// Radius of the hefted tennis ball (m); only the contact plane under it is modelled.
pub const BALL_RADIUS: f64 = 0.033;
/// Radius of the pinched ball (m).
pub const PINCH_BALL_RADIUS: f64 = 0.03;
/// x-coordinate of the rubbed wall surface in the wall frame (m).
pub const WALL_SURFACE_X: f64 = 0.4;
/// End-effector admittance against the wall (N·s/m); caps a full-speed push at 5 N.
pub const RUBBING_ADMITTANCE: f64 = 5.0;
/// Center of the contoured box in the table plane (m).
pub const BOX_CENTER: [f64; 3] = [0.55, 0.0, 0.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Hefting,
    Rubbing,
    Pinching,
    Contouring,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 4] = [
        ScenarioKind::Hefting,
        ScenarioKind::Rubbing,
        ScenarioKind::Pinching,
        ScenarioKind::Contouring,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::Hefting => "hefting",
            ScenarioKind::Rubbing => "rubbing",
            ScenarioKind::Pinching => "pinching",
            ScenarioKind::Contouring => "contouring",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::UnknownScenario(s.to_string()))
    }
}

/// One sensor channel of the measurement vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Channel {
    /// λ_n at a contact point.
    NormalForce { contact: usize },
    /// Signed λ_t along the contact tangent axis.
    TangentForce { contact: usize },
    /// World component `axis` of the normal force vector λ_n·n.
    NormalForceComponent { contact: usize, axis: usize },
}

impl Channel {
    pub fn label(&self) -> String {
        match self {
            Channel::NormalForce { contact } => format!("lambda_n{contact}"),
            Channel::TangentForce { contact } => format!("lambda_t{contact}"),
            Channel::NormalForceComponent { contact, axis } => {
                format!("lambda_n{contact}_{}", ["x", "y", "z"][*axis])
            }
        }
    }
}

/// Complete definition of one task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: ScenarioKind,
    pub estimated: Vec<ParamKind>,
    /// θ*, the parameters used to simulate the real system.
    pub true_params: Vec<f64>,
    /// Nominal contact parameters; estimated entries are overridden by θ.
    pub contact: ContactParams,
    #[serde(default)]
    pub contact_model: ContactModel,
    pub prior: ParamBelief,
    pub dynamics: DynamicsSpec,
    /// Object geometry; moves with the free object when there is one.
    pub field: SignedDistanceField,
    /// Robot contact points (two mirrored fingers for pinching).
    pub contacts: Vec<ContactJacobian>,
    pub sensor: Vec<Channel>,
    /// σ per sensor channel (N).
    pub noise_std: Vec<f64>,
    pub initial_state: RobotState,
}

impl ScenarioSpec {
    pub fn dim(&self) -> usize {
        self.estimated.len()
    }

    pub fn dof(&self) -> usize {
        self.dynamics.dof()
    }

    pub fn channels(&self) -> usize {
        self.sensor.len()
    }

    pub fn theta_star(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.true_params)
    }

    pub fn param_names(&self) -> Vec<String> {
        self.estimated.iter().map(|k| k.label().to_string()).collect()
    }

    pub fn noise_cov_diag(&self) -> DVector<f64> {
        DVector::from_iterator(self.noise_std.len(), self.noise_std.iter().map(|s| s * s))
    }

    pub fn with_noise(mut self, sigma: f64) -> Self {
        self.noise_std = vec![sigma; self.sensor.len()];
        self
    }

    pub fn with_prior_mode(mut self, mode: &[f64]) -> Result<Self> {
        self.prior = self.prior.with_mode(mode)?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.dynamics.validate()?;
        self.field.validate()?;
        let d = self.dim();
        if d == 0 || self.true_params.len() != d || self.prior.dim() != d {
            return Err(Error::Dimension("estimated, true_params and prior must agree".into()));
        }
        if !ParamVector::from_kinds(&self.true_params, &self.estimated)?.within(&self.prior.support) {
            return Err(Error::Config("true parameters lie outside the support".into()));
        }
        if self.noise_std.len() != self.sensor.len() || self.noise_std.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::Config("need one positive noise σ per sensor channel".into()));
        }
        let normal_force_free = self
            .estimated
            .iter()
            .all(|k| matches!(k, ParamKind::Friction | ParamKind::Resistance));
        if self.dynamics.compliance.is_some() && !normal_force_free {
            return Err(Error::Config("compliance requires θ to leave the normal force unchanged".into()));
        }
        if !self.contact.is_valid() {
            return Err(Error::Config("contact parameters must be nonnegative".into()));
        }
        let dof = self.dof();
        if self.contacts.is_empty() || self.contacts.iter().any(|c| c.axes.len() != dof) {
            return Err(Error::Config("each contact Jacobian needs one axis per task coordinate".into()));
        }
        for ch in &self.sensor {
            let (Channel::NormalForce { contact }
            | Channel::TangentForce { contact }
            | Channel::NormalForceComponent { contact, .. }) = *ch;
            if contact >= self.contacts.len() {
                return Err(Error::Config(format!("sensor refers to missing contact {contact}")));
            }
        }
        let x0 = &self.initial_state;
        if x0.position.len() != dof || x0.velocity.len() != dof || !self.dynamics.inside_workspace(&x0.position) {
            return Err(Error::Config("initial state must lie in the workspace".into()));
        }
        if x0.object.is_some() != self.dynamics.object.is_some() {
            return Err(Error::Config("initial object state must match the object spec".into()));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        let spec: Self = toml::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }
}

fn belief(kinds: &[ParamKind], mode: &[f64], variances: &[f64], support: &[[f64; 2]]) -> ParamBelief {
    ParamBelief::new(
        ParamVector::from_kinds(mode, kinds).expect("static prior"),
        DMatrix::from_diagonal(&DVector::from_column_slice(variances)),
        support.iter().map(|b| Bounds::from(*b)).collect(),
    )
    .expect("static prior is valid")
}

fn hefting() -> ScenarioSpec {
    let kinds = vec![ParamKind::Mass];
    let mass = 0.05;
    let contact = ContactParams::new(500.0, 0.0, 0.0, 0.0);
    let hand = 0.2;
    // ball resting in the palm at force balance
    let rest_penetration = mass * GRAVITY / contact.stiffness;
    ScenarioSpec {
        name: ScenarioKind::Hefting,
        estimated: kinds.clone(),
        true_params: vec![mass],
        contact,
        contact_model: ContactModel::default(),
        prior: belief(&kinds, &[0.15], &[10.0], &[[0.01, 0.5]]),
        dynamics: DynamicsSpec {
            dt: 0.02,
            substeps: 10,
            workspace: vec![Bounds::new(0.0, 0.6)],
            velocity_bounds: vec![Bounds::new(-1.0, 1.0)],
            object: Some(ObjectSpec { mass, gravity: GRAVITY, axis: [0.0, 0.0, 1.0] }),
            compliance: None,
        },
        // contact plane under the ball; its origin tracks the ball's lowest point
        field: SignedDistanceField::half_space([0.0, 0.0, -1.0], [0.0; 3]),
        contacts: vec![ContactJacobian {
            origin: [0.0; 3],
            axes: vec![[0.0, 0.0, 1.0]],
            plane_normal: [0.0, 1.0, 0.0],
        }],
        sensor: vec![Channel::NormalForce { contact: 0 }],
        noise_std: vec![DEFAULT_NOISE_STD],
        initial_state: RobotState {
            position: vec![hand],
            velocity: vec![0.0],
            object: Some(ObjectState { position: hand - rest_penetration, velocity: 0.0 }),
        },
    }
}

fn rubbing() -> ScenarioSpec {
    let kinds = vec![ParamKind::Friction];
    ScenarioSpec {
        name: ScenarioKind::Rubbing,
        estimated: kinds.clone(),
        true_params: vec![0.4],
        contact: ContactParams::new(100.0, 1.0, 0.4, 2.0),
        contact_model: ContactModel::default(),
        prior: belief(&kinds, &[0.6], &[1.0], &[[0.0, 1.0]]),
        dynamics: DynamicsSpec {
            dt: 0.02,
            substeps: 1,
            workspace: vec![Bounds::new(0.0, 1.0), Bounds::new(0.5, 1.0)],
            velocity_bounds: vec![Bounds::new(-1.0, 1.0), Bounds::new(-1.0, 1.0)],
            object: None,
            compliance: Some(RUBBING_ADMITTANCE),
        },
        field: SignedDistanceField::half_space([1.0, 0.0, 0.0], [WALL_SURFACE_X, 0.0, 0.0]),
        contacts: vec![ContactJacobian {
            origin: [0.0; 3],
            axes: vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            plane_normal: [0.0, 0.0, 1.0],
        }],
        sensor: vec![Channel::NormalForce { contact: 0 }, Channel::TangentForce { contact: 0 }],
        noise_std: vec![DEFAULT_NOISE_STD; 2],
        initial_state: RobotState::at_rest(vec![0.5, 0.8]),
    }
}

fn pinching() -> ScenarioSpec {
    let kinds = vec![ParamKind::Stiffness, ParamKind::Damping];
    let r = PINCH_BALL_RADIUS;
    ScenarioSpec {
        name: ScenarioKind::Pinching,
        estimated: kinds.clone(),
        true_params: vec![800.0, 10.0],
        contact: ContactParams::new(800.0, 10.0, 0.0, 0.0),
        contact_model: ContactModel::default(),
        prior: belief(&kinds, &[700.0, 8.0], &[100.0, 10.0], &[[100.0, 2000.0], [0.0, 50.0]]),
        dynamics: DynamicsSpec {
            dt: 0.02,
            substeps: 1,
            // finger gap to the ball surface; negative squeezes the ball
            workspace: vec![Bounds::new(-0.01, 0.02)],
            velocity_bounds: vec![Bounds::new(-0.1, 0.1)],
            object: None,
            compliance: None,
        },
        field: SignedDistanceField::sphere(r, [0.0; 3]),
        contacts: vec![
            ContactJacobian { origin: [r, 0.0, 0.0], axes: vec![[1.0, 0.0, 0.0]], plane_normal: [0.0, 0.0, 1.0] },
            ContactJacobian { origin: [-r, 0.0, 0.0], axes: vec![[-1.0, 0.0, 0.0]], plane_normal: [0.0, 0.0, 1.0] },
        ],
        sensor: vec![Channel::NormalForce { contact: 0 }, Channel::NormalForce { contact: 1 }],
        noise_std: vec![DEFAULT_NOISE_STD; 2],
        initial_state: RobotState::at_rest(vec![0.004]),
    }
}

fn contouring() -> ScenarioSpec {
    let kinds = vec![ParamKind::Length, ParamKind::Width];
    let (l, w) = (0.126, 0.05);
    ScenarioSpec {
        name: ScenarioKind::Contouring,
        estimated: kinds.clone(),
        true_params: vec![l, w],
        contact: ContactParams::new(500.0, 0.0, 0.0, 0.0),
        contact_model: ContactModel::default(),
        // 10 cm² = 1e-3 m²
        prior: belief(&kinds, &[0.15, 0.04], &[1e-3, 1e-3], &[[0.02, 0.3], [0.01, 0.2]]),
        dynamics: DynamicsSpec {
            dt: 0.02,
            substeps: 1,
            workspace: vec![Bounds::new(0.3, 0.8), Bounds::new(-0.15, 0.15)],
            velocity_bounds: vec![Bounds::new(-0.5, 0.5), Bounds::new(-0.5, 0.5)],
            object: None,
            compliance: None,
        },
        field: SignedDistanceField::cuboid(l, w, BOX_CENTER),
        contacts: vec![ContactJacobian {
            origin: [0.0; 3],
            axes: vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            plane_normal: [0.0, 0.0, 1.0],
        }],
        sensor: vec![
            Channel::NormalForce { contact: 0 },
            Channel::NormalForceComponent { contact: 0, axis: 0 },
            Channel::NormalForceComponent { contact: 0, axis: 1 },
        ],
        noise_std: vec![DEFAULT_NOISE_STD; 3],
        initial_state: RobotState::at_rest(vec![0.5, -0.1]),
    }
}

pub fn make_scenario(name: &str) -> Result<ScenarioSpec> {
    Ok(scenario(name.parse()?))
}

pub fn scenario(kind: ScenarioKind) -> ScenarioSpec {
    match kind {
        ScenarioKind::Hefting => hefting(),
        ScenarioKind::Rubbing => rubbing(),
        ScenarioKind::Pinching => pinching(),
        ScenarioKind::Contouring => contouring(),
    }
}

/// Noiseless measurement `g_θ(x)`.
pub fn sensor_eval(spec: &ScenarioSpec, x: &RobotState, theta: &DVector<f64>) -> Result<Measurement> {
    let physics = Physics::resolve(spec, theta)?;
    let contacts = eval_contacts(spec, &physics, &x.position, &x.velocity, x.object.as_ref(), None)?;
    Ok(Measurement { forces: measure(&spec.sensor, &contacts) })
}

/// Adds i.i.d. zero-mean Gaussian noise with per-channel σ.
pub fn add_noise(forces: &DVector<f64>, sigma: &[f64], rng: &mut SimRng) -> DVector<f64> {
    DVector::from_iterator(
        forces.len(),
        forces.iter().zip(sigma).map(|(f, s)| f + s * standard_normal(rng)),
    )
}

pub fn sensor_sample(
    spec: &ScenarioSpec,
    x: &RobotState,
    theta: &DVector<f64>,
    sigma: &[f64],
    rng: &mut SimRng,
) -> Result<Measurement> {
    let clean = sensor_eval(spec, x, theta)?;
    Ok(Measurement { forces: add_noise(&clean.forces, sigma, rng) })
}

/// `100 (θ̂ − θ*) / θ*` elementwise.
pub fn percent_error(estimate: &[f64], truth: &[f64]) -> Result<Vec<f64>> {
    if estimate.len() != truth.len() {
        return Err(Error::Dimension("estimate and truth lengths differ".into()));
    }
    estimate
        .iter()
        .zip(truth)
        .enumerate()
        .map(|(i, (e, t))| {
            if *t == 0.0 {
                Err(Error::ZeroReference(i))
            } else {
                Ok(100.0 * (e - t) / t)
            }
        })
        .collect()
}

/// `|θ̂ − θ*|` elementwise.
pub fn abs_error(estimate: &[f64], truth: &[f64]) -> Result<Vec<f64>> {
    if estimate.len() != truth.len() {
        return Err(Error::Dimension("estimate and truth lengths differ".into()));
    }
    Ok(estimate.iter().zip(truth).map(|(e, t)| (e - t).abs()).collect())
}
