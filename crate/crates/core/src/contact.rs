//! Soft contact model and its analytic derivatives.
//!
//! ```text
//! λ_n = max(0, −K φ_n − C |v_n|)
//! λ_t = v̂_t · max(−μ λ_n, −R |v_t|)
//! ```
//!
//! Every scenario moves in a plane (or along a line), so the tangent space at
//! a contact is one-dimensional: `v_t` and `λ_t` are signed coordinates along
//! the contact frame's tangent axis and `v̂_t ∈ {−1, 0, +1}`.
//!
//! Derivatives at the max-kinks are taken from the zero branch, so grazing
//! contact contributes no information.

use nalgebra::{Matrix2x3, Matrix2x4, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::sdf::{SdfEval, SignedDistanceField};

/// Material parameters K, C, μ, R.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactParams {
    /// K (N/m)
    pub stiffness: f64,
    /// C (N·s/m)
    pub damping: f64,
    /// μ
    pub friction: f64,
    /// R (N·s/m)
    pub resistance: f64,
}

impl ContactParams {
    pub const fn new(stiffness: f64, damping: f64, friction: f64, resistance: f64) -> Self {
        Self { stiffness, damping, friction, resistance }
    }

    pub fn is_valid(&self) -> bool {
        [self.stiffness, self.damping, self.friction, self.resistance]
            .iter()
            .all(|v| v.is_finite() && *v >= 0.0)
    }
}

/// Variants of the normal-force law.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ContactModel {
    /// Replace `max(0, ·)` in λ_n with a softplus of this sharpness (landscape rendering only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub softplus_sharpness: Option<f64>,
    /// Damp with `C v_n` instead of `C |v_n|`, so retreat reduces and approach increases force.
    #[serde(default)]
    pub signed_damping: bool,
}

/// Contact-frame kinematics at one timestep.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ContactState {
    /// φ_n (m), negative under penetration.
    pub phi_n: f64,
    /// Normal velocity (m/s), negative when approaching.
    pub v_n: f64,
    /// Signed tangential velocity along the frame tangent axis (m/s).
    pub v_t: f64,
}

impl ContactState {
    pub const fn new(phi_n: f64, v_n: f64, v_t: f64) -> Self {
        Self { phi_n, v_n, v_t }
    }

    /// Sliding direction v̂_t; zero at rest.
    pub fn tangent_dir(&self) -> f64 {
        if self.v_t > 0.0 {
            1.0
        } else if self.v_t < 0.0 {
            -1.0
        } else {
            0.0
        }
    }

    pub fn is_finite(&self) -> bool {
        self.phi_n.is_finite() && self.v_n.is_finite() && self.v_t.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ContactForce {
    pub lambda_n: f64,
    pub lambda_t: f64,
}

/// Which block of the contact Jacobian to return.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradWrt {
    /// Columns (K, C, μ, R).
    Params,
    /// Columns (φ_n, v_n, v_t).
    State,
}

/// Jacobian of `[λ_n; λ_t]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactJacobianBlocks {
    pub wrt_state: Matrix2x3<f64>,
    pub wrt_params: Matrix2x4<f64>,
}

fn softplus(x: f64, beta: f64) -> f64 {
    let z = beta * x;
    if z > 30.0 {
        x
    } else {
        z.exp().ln_1p() / beta
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn sgn0(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl ContactModel {
    /// Argument of the normal-force max and its partials w.r.t. (φ, v_n, K, C).
    fn normal_argument(&self, p: &ContactParams, cs: &ContactState) -> (f64, [f64; 4]) {
        let (damp, d_dvn) = if self.signed_damping {
            (cs.v_n, 1.0)
        } else {
            (cs.v_n.abs(), sgn0(cs.v_n))
        };
        let s = -p.stiffness * cs.phi_n - p.damping * damp;
        (s, [-p.stiffness, -p.damping * d_dvn, -cs.phi_n, -damp])
    }

    pub fn force(&self, p: &ContactParams, cs: &ContactState) -> ContactForce {
        let (s, _) = self.normal_argument(p, cs);
        let lambda_n = match self.softplus_sharpness {
            Some(beta) => softplus(s, beta),
            None => s.max(0.0),
        };
        let vt = cs.v_t;
        let lambda_t = if vt == 0.0 {
            0.0
        } else {
            sgn0(vt) * (-p.friction * lambda_n).max(-p.resistance * vt.abs())
        };
        ContactForce { lambda_n, lambda_t }
    }

    pub fn force_grad(&self, p: &ContactParams, cs: &ContactState) -> ContactJacobianBlocks {
        let (s, ds) = self.normal_argument(p, cs);
        let (lambda_n, slope) = match self.softplus_sharpness {
            Some(beta) => (softplus(s, beta), sigmoid(beta * s)),
            // kink at s = 0 takes the zero branch
            None if s > 0.0 => (s, 1.0),
            None => (0.0, 0.0),
        };
        // d λ_n / d (φ, v_n, v_t) and d λ_n / d (K, C, μ, R)
        let dn_state = [slope * ds[0], slope * ds[1], 0.0];
        let dn_params = [slope * ds[2], slope * ds[3], 0.0, 0.0];

        let mut dt_state = [0.0; 3];
        let mut dt_params = [0.0; 4];
        let vt = cs.v_t;
        if vt != 0.0 {
            let dir = sgn0(vt);
            let cone = p.friction * lambda_n;
            let resist = p.resistance * vt.abs();
            if cone <= resist {
                // λ_t = −v̂_t μ λ_n
                for i in 0..3 {
                    dt_state[i] = -dir * p.friction * dn_state[i];
                }
                dt_params[0] = -dir * p.friction * dn_params[0];
                dt_params[1] = -dir * p.friction * dn_params[1];
                dt_params[2] = -dir * lambda_n;
            } else {
                // λ_t = −R v_t
                dt_state[2] = -p.resistance;
                dt_params[3] = -vt;
            }
        }
        ContactJacobianBlocks {
            wrt_state: Matrix2x3::new(
                dn_state[0], dn_state[1], dn_state[2], dt_state[0], dt_state[1], dt_state[2],
            ),
            wrt_params: Matrix2x4::new(
                dn_params[0],
                dn_params[1],
                dn_params[2],
                dn_params[3],
                dt_params[0],
                dt_params[1],
                dt_params[2],
                dt_params[3],
            ),
        }
    }
}

/// The soft contact law with the exact `max` nonlinearity.
pub fn contact_force(params: &ContactParams, cs: &ContactState) -> ContactForce {
    ContactModel::default().force(params, cs)
}

/// Piecewise-analytic Jacobian of `[λ_n; λ_t]` as a 2×4 (params) or 2×3 (state) matrix.
pub fn contact_force_grad(
    params: &ContactParams,
    cs: &ContactState,
    wrt: GradWrt,
) -> nalgebra::DMatrix<f64> {
    let blocks = ContactModel::default().force_grad(params, cs);
    match wrt {
        GradWrt::Params => nalgebra::DMatrix::from_iterator(2, 4, blocks.wrt_params.iter().copied()),
        GradWrt::State => nalgebra::DMatrix::from_iterator(2, 3, blocks.wrt_state.iter().copied()),
    }
}

/// Affine map from task-space coordinates q to a world-frame contact point,
/// `p = origin + Σ_i q_i axes_i`; its linear part is the contact Jacobian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactJacobian {
    pub origin: [f64; 3],
    pub axes: Vec<[f64; 3]>,
    /// Normal of the plane of motion; the tangent axis is `plane_normal × n`.
    pub plane_normal: [f64; 3],
}

impl ContactJacobian {
    pub fn point(&self, q: &[f64]) -> Vector3<f64> {
        self.axes
            .iter()
            .zip(q)
            .fold(Vector3::from(self.origin), |p, (a, qi)| p + Vector3::from(*a) * *qi)
    }

    pub fn velocity(&self, qdot: &[f64]) -> Vector3<f64> {
        self.axes
            .iter()
            .zip(qdot)
            .fold(Vector3::zeros(), |v, (a, qi)| v + Vector3::from(*a) * *qi)
    }
}

/// Contact-frame basis at the closest point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactFrame {
    pub normal: Vector3<f64>,
    pub tangent: Vector3<f64>,
    /// |plane_normal × n|, needed to differentiate the tangent axis.
    pub tangent_scale: f64,
}

pub fn tangent_axis(plane_normal: &Vector3<f64>, normal: &Vector3<f64>) -> (Vector3<f64>, f64) {
    let m = plane_normal.cross(normal);
    let len = m.norm();
    if len > 1e-12 {
        (m / len, len)
    } else {
        // Motion along the normal only; any perpendicular works.
        let fallback = if normal.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
        let t = (fallback - normal * normal.dot(&fallback)).normalize();
        (t, 0.0)
    }
}

/// Contact state from a point and its velocity relative to the field.
pub fn contact_state_at(
    eval: &SdfEval,
    relative_velocity: &Vector3<f64>,
    plane_normal: &Vector3<f64>,
) -> (ContactState, ContactFrame) {
    let (tangent, tangent_scale) = tangent_axis(plane_normal, &eval.normal);
    let state = ContactState::new(
        eval.phi,
        eval.normal.dot(relative_velocity),
        tangent.dot(relative_velocity),
    );
    (state, ContactFrame { normal: eval.normal, tangent, tangent_scale })
}

/// φ_n from the field and `(v_n, v_t) = J_c(q) q̇` projected onto the contact frame,
/// for a static field.
pub fn contact_state_from(
    position: &[f64],
    velocity: &[f64],
    field: &SignedDistanceField,
    jacobian: &ContactJacobian,
) -> Result<(ContactState, ContactFrame)> {
    let eval = field.eval(&jacobian.point(position))?;
    Ok(contact_state_at(
        &eval,
        &jacobian.velocity(velocity),
        &Vector3::from(jacobian.plane_normal),
    ))
}
