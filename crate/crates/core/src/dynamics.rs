//! Discrete-time scenario dynamics `x_{t+1} = f_θ(x_t, u_t, λ_t)`.
//!
//! The robot is a kinematic point driven by a clamped velocity command and
//! confined to its workspace box. Scenarios with a free object (the hefted
//! ball) integrate `m v̇ = F_contact − m g` with semi-implicit Euler over
//! `substeps` sub-intervals per control step.
//!
//! Rollouts optionally propagate forward sensitivities `∂(object state)/∂θ`
//! alongside the state, which gives the measurement Jacobians `∂y_t/∂θ`
//! analytically through the contact and SDF derivatives.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::contact::{contact_state_at, ContactForce, ContactFrame, ContactParams, ContactState};
use crate::error::{Error, Result};
use crate::scenarios::{Channel, ScenarioSpec};
use crate::sdf::SignedDistanceField;
use crate::types::{Bounds, ControlInput, ObjectState, ParamKind, RobotState, Trajectory};

pub const GRAVITY: f64 = 9.81;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    /// Nominal mass (kg); replaced by θ when mass is estimated.
    pub mass: f64,
    /// Gravitational acceleration (m/s²), acting along −z.
    pub gravity: f64,
    /// World axis the object translates along; the contact field moves with it.
    pub axis: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsSpec {
    /// Control period (s).
    pub dt: f64,
    /// Semi-implicit Euler sub-steps per control period for the free object.
    pub substeps: usize,
    /// Position box 𝒲 per task axis (m).
    pub workspace: Vec<Bounds>,
    /// Velocity command box per task axis (m/s).
    pub velocity_bounds: Vec<Bounds>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object: Option<ObjectSpec>,
    /// Admittance D (N·s/m) of the end effector along contact normals: the
    /// commanded velocity is offset by `λ_n n / D`, so a steady push settles
    /// at `λ_n = D |u_n|`. Only allowed when θ does not enter λ_n.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compliance: Option<f64>,
}

impl DynamicsSpec {
    pub fn dof(&self) -> usize {
        self.workspace.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if self.substeps == 0 {
            return Err(Error::Config("substeps must be at least 1".into()));
        }
        if self.workspace.is_empty() || self.workspace.len() != self.velocity_bounds.len() {
            return Err(Error::Config("workspace and velocity bounds must share the task dimension".into()));
        }
        if self.workspace.iter().chain(&self.velocity_bounds).any(|b| !b.is_valid()) {
            return Err(Error::Config("bounds must be finite and well-ordered".into()));
        }
        if self.compliance.is_some_and(|c| !(c > 0.0 && c.is_finite())) {
            return Err(Error::Config("compliance must be positive".into()));
        }
        if self.compliance.is_some() && self.object.is_some() {
            return Err(Error::Config("compliance is not supported with a free object".into()));
        }
        Ok(())
    }

    pub fn clamp_command(&self, u: &[f64]) -> Vec<f64> {
        u.iter().zip(&self.velocity_bounds).map(|(v, b)| b.clamp(*v)).collect()
    }

    pub fn inside_workspace(&self, q: &[f64]) -> bool {
        q.iter().zip(&self.workspace).all(|(v, b)| b.contains(*v))
    }
}

/// Physical configuration with the estimated entries of θ substituted.
#[derive(Debug, Clone)]
pub struct Physics {
    pub contact: ContactParams,
    pub mass: Option<f64>,
    pub field: SignedDistanceField,
}

impl Physics {
    pub fn resolve(scenario: &ScenarioSpec, theta: &DVector<f64>) -> Result<Self> {
        if theta.len() != scenario.estimated.len() {
            return Err(Error::Dimension(format!(
                "θ has {} entries, scenario estimates {}",
                theta.len(),
                scenario.estimated.len()
            )));
        }
        let mut contact = scenario.contact;
        let mut mass = scenario.dynamics.object.as_ref().map(|o| o.mass);
        let mut dims = match scenario.field.shape {
            crate::sdf::Shape::Box { length, width } => Some([length, width]),
            _ => None,
        };
        for (kind, &v) in scenario.estimated.iter().zip(theta.iter()) {
            if !v.is_finite() {
                return Err(Error::Config(format!("non-finite {}", kind.label())));
            }
            match kind {
                ParamKind::Mass => match mass.as_mut() {
                    Some(m) if v > 0.0 => *m = v,
                    Some(_) => return Err(Error::Config(format!("nonpositive mass {v}"))),
                    None => return Err(Error::Config("mass estimated without a free object".into())),
                },
                ParamKind::Stiffness => contact.stiffness = v,
                ParamKind::Damping => contact.damping = v,
                ParamKind::Friction => contact.friction = v,
                ParamKind::Resistance => contact.resistance = v,
                ParamKind::Length | ParamKind::Width => match dims.as_mut() {
                    Some(d) => d[kind.shape_index().unwrap()] = v,
                    None => return Err(Error::Config("shape estimated on a non-box field".into())),
                },
            }
        }
        let field = match dims {
            Some([l, w]) => scenario.field.with_box_dims(l, w),
            None => scenario.field.clone(),
        };
        field.validate()?;
        Ok(Self { contact, mass, field })
    }
}

/// `∂(object position, object velocity)/∂θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectSensitivity {
    pub position: DVector<f64>,
    pub velocity: DVector<f64>,
}

impl ObjectSensitivity {
    pub fn zeros(d: usize) -> Self {
        Self { position: DVector::zeros(d), velocity: DVector::zeros(d) }
    }
}

/// One evaluated contact point, with θ-derivatives when requested.
#[derive(Debug, Clone)]
pub struct ContactEval {
    pub state: ContactState,
    pub frame: ContactFrame,
    pub force: ContactForce,
    /// `(∂λ_n/∂θ_j, ∂λ_t/∂θ_j)` per parameter.
    pub dforce: Vec<[f64; 2]>,
    /// `∂n/∂θ_j`.
    pub dnormal: Vec<Vector3<f64>>,
    /// `∂t/∂θ_j`.
    pub dtangent: Vec<Vector3<f64>>,
}

fn object_axis(scenario: &ScenarioSpec) -> Vector3<f64> {
    scenario
        .dynamics
        .object
        .as_ref()
        .map_or_else(Vector3::zeros, |o| Vector3::from(o.axis))
}

fn param_direction(kind: ParamKind) -> Vector4<f64> {
    match kind {
        ParamKind::Stiffness => Vector4::new(1.0, 0.0, 0.0, 0.0),
        ParamKind::Damping => Vector4::new(0.0, 1.0, 0.0, 0.0),
        ParamKind::Friction => Vector4::new(0.0, 0.0, 1.0, 0.0),
        ParamKind::Resistance => Vector4::new(0.0, 0.0, 0.0, 1.0),
        _ => Vector4::zeros(),
    }
}

/// Evaluates every contact point at robot configuration `(q, q̇)` and object state.
pub fn eval_contacts(
    scenario: &ScenarioSpec,
    physics: &Physics,
    position: &[f64],
    velocity: &[f64],
    object: Option<&ObjectState>,
    sensitivity: Option<&ObjectSensitivity>,
) -> Result<Vec<ContactEval>> {
    let axis = object_axis(scenario);
    let (obj_pos, obj_vel) = object.map_or((0.0, 0.0), |o| (o.position, o.velocity));
    let field = if object.is_some() {
        physics.field.translated(&(axis * obj_pos))
    } else {
        physics.field.clone()
    };
    let d = scenario.estimated.len();

    scenario
        .contacts
        .iter()
        .map(|jac| {
            let eval = field.eval(&jac.point(position))?;
            let plane_normal = Vector3::from(jac.plane_normal);
            let w = jac.velocity(velocity) - axis * obj_vel;
            let (state, frame) = contact_state_at(&eval, &w, &plane_normal);
            let force = scenario.contact_model.force(&physics.contact, &state);

            let mut out = ContactEval {
                state,
                frame,
                force,
                dforce: Vec::new(),
                dnormal: Vec::new(),
                dtangent: Vec::new(),
            };
            let Some(sens) = sensitivity else {
                return Ok(out);
            };
            let blocks = scenario.contact_model.force_grad(&physics.contact, &state);
            let n = frame.normal;
            let t = frame.tangent;
            let hn_axis = eval.normal_jacobian * axis;
            for (j, kind) in scenario.estimated.iter().enumerate().take(d) {
                let dz = sens.position[j];
                let dv = sens.velocity[j];
                // moving the field by +δ along the axis shifts the query by −δ
                let mut dphi = -n.dot(&axis) * dz;
                let mut dn = -hn_axis * dz;
                if let Some(k) = kind.shape_index() {
                    if let (Some(dp), Some(dnk)) = (eval.dphi_dshape.get(k), eval.dnormal_dshape.get(k)) {
                        dphi += dp;
                        dn += dnk;
                    }
                }
                let dw = -axis * dv;
                let dvn = dn.dot(&w) + n.dot(&dw);
                let dt = if frame.tangent_scale > 0.0 {
                    (Matrix3::identity() - t * t.transpose()) * plane_normal.cross(&dn) / frame.tangent_scale
                } else {
                    Vector3::zeros()
                };
                let dvt = dt.dot(&w) + t.dot(&dw);
                let dl = blocks.wrt_state * Vector3::new(dphi, dvn, dvt)
                    + blocks.wrt_params * param_direction(*kind);
                out.dforce.push([dl[0], dl[1]]);
                out.dnormal.push(dn);
                out.dtangent.push(dt);
            }
            Ok(out)
        })
        .collect()
}

/// Measurement `y = g_θ(x)` built from evaluated contacts.
pub fn measure(channels: &[Channel], contacts: &[ContactEval]) -> DVector<f64> {
    DVector::from_iterator(
        channels.len(),
        channels.iter().map(|ch| match *ch {
            Channel::NormalForce { contact } => contacts[contact].force.lambda_n,
            Channel::TangentForce { contact } => contacts[contact].force.lambda_t,
            Channel::NormalForceComponent { contact, axis } => {
                contacts[contact].force.lambda_n * contacts[contact].frame.normal[axis]
            }
        }),
    )
}

/// `∂y/∂θ` (channels × d) from contacts evaluated with sensitivities.
pub fn measure_jacobian(channels: &[Channel], contacts: &[ContactEval], d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(channels.len(), d, |i, j| match channels[i] {
        Channel::NormalForce { contact } => contacts[contact].dforce[j][0],
        Channel::TangentForce { contact } => contacts[contact].dforce[j][1],
        Channel::NormalForceComponent { contact, axis } => {
            let c = &contacts[contact];
            c.dforce[j][0] * c.frame.normal[axis] + c.force.lambda_n * c.dnormal[j][axis]
        }
    })
}

/// Net contact force on the free object along its axis, and its θ-derivative.
fn object_force(contacts: &[ContactEval], axis: &Vector3<f64>, d: usize, with_grad: bool) -> (f64, DVector<f64>) {
    let mut f = 0.0;
    let mut df = DVector::zeros(if with_grad { d } else { 0 });
    for c in contacts {
        let na = c.frame.normal.dot(axis);
        let ta = c.frame.tangent.dot(axis);
        f -= c.force.lambda_n * na + c.force.lambda_t * ta;
        if with_grad {
            for j in 0..d {
                df[j] -= c.dforce[j][0] * na
                    + c.force.lambda_n * c.dnormal[j].dot(axis)
                    + c.dforce[j][1] * ta
                    + c.force.lambda_t * c.dtangent[j].dot(axis);
            }
        }
    }
    (f, df)
}

fn check_finite(x: &RobotState, sens: Option<&ObjectSensitivity>, step: usize) -> Result<()> {
    let sens_ok = sens.is_none_or(|s| s.position.iter().chain(s.velocity.iter()).all(|v| v.is_finite()));
    if x.is_finite() && sens_ok {
        Ok(())
    } else {
        Err(Error::DivergedRollout { step })
    }
}

/// Advances one control period; returns the next state and its object sensitivity.
fn advance(
    scenario: &ScenarioSpec,
    physics: &Physics,
    x: &RobotState,
    u: &ControlInput,
    sensitivity: Option<&ObjectSensitivity>,
    step_index: usize,
) -> Result<(RobotState, Option<ObjectSensitivity>)> {
    let dynamics = &scenario.dynamics;
    if u.command.len() != dynamics.dof() || x.position.len() != dynamics.dof() {
        return Err(Error::Dimension(format!(
            "command/state dimension does not match task dimension {}",
            dynamics.dof()
        )));
    }
    let dt = dynamics.dt;
    let mut command = dynamics.clamp_command(&u.command);
    if let Some(admittance) = dynamics.compliance {
        let contacts = eval_contacts(scenario, physics, &x.position, &x.velocity, x.object.as_ref(), None)?;
        for (c, jac) in contacts.iter().zip(&scenario.contacts) {
            for (v, a) in command.iter_mut().zip(&jac.axes) {
                *v += c.force.lambda_n * c.frame.normal.dot(&Vector3::from(*a)) / admittance;
            }
        }
    }
    let next_position: Vec<f64> = x
        .position
        .iter()
        .zip(&command)
        .zip(&dynamics.workspace)
        .map(|((q, v), b)| b.clamp(q + dt * v))
        .collect();
    let effective_velocity: Vec<f64> = next_position
        .iter()
        .zip(&x.position)
        .map(|(q1, q0)| (q1 - q0) / dt)
        .collect();

    let d = scenario.estimated.len();
    let mut object = x.object;
    let mut sens = sensitivity.cloned();
    if let (Some(obj), Some(spec)) = (object.as_mut(), dynamics.object.as_ref()) {
        let axis = Vector3::from(spec.axis);
        let mass = physics.mass.unwrap_or(spec.mass);
        let gravity_along = -spec.gravity * axis.z;
        let dmass = DVector::from_iterator(
            d,
            scenario.estimated.iter().map(|k| if *k == ParamKind::Mass { 1.0 } else { 0.0 }),
        );
        let h = dt / dynamics.substeps as f64;
        for s in 0..dynamics.substeps {
            let frac = s as f64 * h;
            let q: Vec<f64> = x
                .position
                .iter()
                .zip(&effective_velocity)
                .map(|(q0, v)| q0 + frac * v)
                .collect();
            let contacts = eval_contacts(scenario, physics, &q, &effective_velocity, Some(obj), sens.as_ref())?;
            let (force, dforce) = object_force(&contacts, &axis, d, sens.is_some());
            let accel = force / mass + gravity_along;
            obj.velocity += h * accel;
            obj.position += h * obj.velocity;
            if let Some(sv) = sens.as_mut() {
                let daccel = dforce / mass - &dmass * (force / (mass * mass));
                sv.velocity += daccel * h;
                sv.position += &sv.velocity * h;
            }
        }
    }
    let next = RobotState { position: next_position, velocity: effective_velocity, object };
    check_finite(&next, sens.as_ref(), step_index)?;
    Ok((next, sens))
}

fn forces_of(contacts: &[ContactEval]) -> Vec<ContactForce> {
    contacts.iter().map(|c| c.force).collect()
}

/// One control step: returns `x_{t+1}` and the contact forces at the pre-step state `x_t`.
pub fn step(
    scenario: &ScenarioSpec,
    x: &RobotState,
    u: &ControlInput,
    theta: &DVector<f64>,
) -> Result<(RobotState, Vec<ContactForce>)> {
    let physics = Physics::resolve(scenario, theta)?;
    check_finite(x, None, 0)?;
    let contacts = eval_contacts(scenario, &physics, &x.position, &x.velocity, x.object.as_ref(), None)?;
    let (next, _) = advance(scenario, &physics, x, u, None, 0)?;
    Ok((next, forces_of(&contacts)))
}

/// Rollout plus noiseless measurements and (optionally) their θ-Jacobians.
#[derive(Debug, Clone)]
pub struct RolloutOutput {
    pub trajectory: Trajectory,
    pub measurements: Vec<DVector<f64>>,
    pub jacobians: Option<Vec<DMatrix<f64>>>,
}

pub fn simulate(
    scenario: &ScenarioSpec,
    x0: &RobotState,
    controls: &[ControlInput],
    theta: &DVector<f64>,
    with_jacobians: bool,
) -> Result<RolloutOutput> {
    if controls.is_empty() {
        return Err(Error::Config("rollout needs at least one control".into()));
    }
    let physics = Physics::resolve(scenario, theta)?;
    check_finite(x0, None, 0)?;
    let d = scenario.estimated.len();
    let mut sens = with_jacobians.then(|| ObjectSensitivity::zeros(d));
    let mut states = Vec::with_capacity(controls.len() + 1);
    let mut contacts = Vec::with_capacity(controls.len());
    let mut measurements = Vec::with_capacity(controls.len());
    let mut jacobians = with_jacobians.then(|| Vec::with_capacity(controls.len()));
    let mut x = x0.clone();
    for (t, u) in controls.iter().enumerate() {
        let evals = eval_contacts(scenario, &physics, &x.position, &x.velocity, x.object.as_ref(), sens.as_ref())?;
        measurements.push(measure(&scenario.sensor, &evals));
        if let Some(js) = jacobians.as_mut() {
            js.push(measure_jacobian(&scenario.sensor, &evals, d));
        }
        contacts.push(forces_of(&evals));
        let (next, next_sens) = advance(scenario, &physics, &x, u, sens.as_ref(), t)?;
        states.push(std::mem::replace(&mut x, next));
        sens = next_sens;
    }
    states.push(x);
    Ok(RolloutOutput {
        trajectory: Trajectory { states, contacts, dt: scenario.dynamics.dt },
        measurements,
        jacobians,
    })
}

pub fn rollout(
    scenario: &ScenarioSpec,
    x0: &RobotState,
    controls: &[ControlInput],
    theta: &DVector<f64>,
) -> Result<Trajectory> {
    Ok(simulate(scenario, x0, controls, theta, false)?.trajectory)
}

/// Largest absolute deviation between stored contact forces and a re-evaluation on the stored states.
pub fn contact_consistency_error(
    scenario: &ScenarioSpec,
    trajectory: &Trajectory,
    theta: &DVector<f64>,
) -> Result<f64> {
    let physics = Physics::resolve(scenario, theta)?;
    let mut worst: f64 = 0.0;
    for (x, stored) in trajectory.states.iter().zip(&trajectory.contacts) {
        let evals = eval_contacts(scenario, &physics, &x.position, &x.velocity, x.object.as_ref(), None)?;
        for (e, s) in evals.iter().zip(stored) {
            worst = worst
                .max((e.force.lambda_n - s.lambda_n).abs())
                .max((e.force.lambda_t - s.lambda_t).abs());
        }
    }
    Ok(worst)
}

/// Information lookahead used by the landscapes: the measurement Jacobian at `x`
/// with object sensitivities taken from one step of `u` started from zero sensitivity.
pub fn one_step_measurement_jacobian(
    scenario: &ScenarioSpec,
    x: &RobotState,
    u: &ControlInput,
    theta: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    let physics = Physics::resolve(scenario, theta)?;
    let d = scenario.estimated.len();
    let zero = ObjectSensitivity::zeros(d);
    let (_, sens) = advance(scenario, &physics, x, u, Some(&zero), 0)?;
    let sens = sens.unwrap_or(zero);
    let evals = eval_contacts(scenario, &physics, &x.position, &x.velocity, x.object.as_ref(), Some(&sens))?;
    Ok(measure_jacobian(&scenario.sensor, &evals, d))
}
