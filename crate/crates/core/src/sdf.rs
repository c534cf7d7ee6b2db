//! Signed distance fields for the contact geometry.
//!
//! Each field reports the distance `phi` (negative inside), the outward unit
//! normal (spatial gradient of `phi`), the spatial Jacobian of that normal and
//! the derivatives of `phi` and the normal with respect to the shape
//! parameters. Only boxes carry shape parameters `(l, w)`.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    /// Half-space whose boundary plane passes through the field center.
    HalfSpace { normal: [f64; 3] },
    /// Rectangle in the xy-plane extruded along z: `length` along x, `width` along y.
    Box { length: f64, width: f64 },
    Sphere { radius: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignedDistanceField {
    pub shape: Shape,
    /// World-frame placement of the shape origin (m).
    pub center: [f64; 3],
}

/// Result of evaluating a field at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct SdfEval {
    pub phi: f64,
    pub normal: Vector3<f64>,
    /// ∂n/∂p.
    pub normal_jacobian: Matrix3<f64>,
    /// ∂φ/∂(l, w) for boxes, empty otherwise.
    pub dphi_dshape: Vec<f64>,
    /// ∂n/∂(l, w) for boxes, empty otherwise.
    pub dnormal_dshape: Vec<Vector3<f64>>,
}

impl SignedDistanceField {
    pub fn half_space(normal: [f64; 3], center: [f64; 3]) -> Self {
        Self { shape: Shape::HalfSpace { normal }, center }
    }

    pub fn cuboid(length: f64, width: f64, center: [f64; 3]) -> Self {
        Self { shape: Shape::Box { length, width }, center }
    }

    pub fn sphere(radius: f64, center: [f64; 3]) -> Self {
        Self { shape: Shape::Sphere { radius }, center }
    }

    pub fn validate(&self) -> Result<()> {
        match self.shape {
            Shape::HalfSpace { normal } => {
                if Vector3::from(normal).norm() <= 0.0 {
                    return Err(Error::NonpositiveShape("half-space normal has zero length".into()));
                }
            }
            Shape::Box { length, width } => {
                if !(length > 0.0 && width > 0.0) {
                    return Err(Error::NonpositiveShape(format!(
                        "box dimensions l={length}, w={width}"
                    )));
                }
            }
            Shape::Sphere { radius } => {
                if !(radius > 0.0) {
                    return Err(Error::NonpositiveShape(format!("sphere radius {radius}")));
                }
            }
        }
        Ok(())
    }

    pub fn shape_param_count(&self) -> usize {
        match self.shape {
            Shape::Box { .. } => 2,
            _ => 0,
        }
    }

    /// Copy with the box dimensions replaced; other shapes ignore the call.
    pub fn with_box_dims(&self, length: f64, width: f64) -> Self {
        match self.shape {
            Shape::Box { .. } => Self { shape: Shape::Box { length, width }, center: self.center },
            _ => self.clone(),
        }
    }

    /// Copy translated by `offset`.
    pub fn translated(&self, offset: &Vector3<f64>) -> Self {
        let c = Vector3::from(self.center) + offset;
        Self { shape: self.shape.clone(), center: [c.x, c.y, c.z] }
    }

    pub fn eval(&self, point: &Vector3<f64>) -> Result<SdfEval> {
        self.validate()?;
        if !point.iter().all(|v| v.is_finite()) {
            return Err(Error::Dimension("query point is not finite".into()));
        }
        let d = point - Vector3::from(self.center);
        Ok(match self.shape {
            Shape::HalfSpace { normal } => {
                let n = Vector3::from(normal).normalize();
                SdfEval {
                    phi: n.dot(&d),
                    normal: n,
                    normal_jacobian: Matrix3::zeros(),
                    dphi_dshape: Vec::new(),
                    dnormal_dshape: Vec::new(),
                }
            }
            Shape::Sphere { radius } => {
                let r = d.norm();
                let (normal, normal_jacobian) = if r > 0.0 {
                    let n = d / r;
                    (n, (Matrix3::identity() - n * n.transpose()) / r)
                } else {
                    (Vector3::x(), Matrix3::zeros())
                };
                SdfEval {
                    phi: r - radius,
                    normal,
                    normal_jacobian,
                    dphi_dshape: Vec::new(),
                    dnormal_dshape: Vec::new(),
                }
            }
            Shape::Box { length, width } => box_eval(&d, length, width),
        })
    }
}

pub fn sdf_eval(field: &SignedDistanceField, point: &Vector3<f64>) -> Result<SdfEval> {
    field.eval(point)
}

fn sign(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

fn box_eval(d: &Vector3<f64>, length: f64, width: f64) -> SdfEval {
    let (sx, sy) = (sign(d.x), sign(d.y));
    let qx = d.x.abs() - 0.5 * length;
    let qy = d.y.abs() - 0.5 * width;

    if qx > 0.0 && qy > 0.0 {
        // Outside, nearest feature is a corner edge.
        let r = qx.hypot(qy);
        let (ux, uy) = (qx / r, qy / r);
        // (I - q̂q̂ᵀ) / r in the plane
        let p = nalgebra::Matrix2::new(1.0 - ux * ux, -ux * uy, -ux * uy, 1.0 - uy * uy) / r;
        let s = nalgebra::Matrix2::new(sx, 0.0, 0.0, sy);
        let spatial = s * p * s;
        let mut normal_jacobian = Matrix3::zeros();
        normal_jacobian.fixed_view_mut::<2, 2>(0, 0).copy_from(&spatial);
        // ∂q/∂l = (-1/2, 0), ∂q/∂w = (0, -1/2)
        let dl = s * p * nalgebra::Vector2::new(-0.5, 0.0);
        let dw = s * p * nalgebra::Vector2::new(0.0, -0.5);
        SdfEval {
            phi: r,
            normal: Vector3::new(sx * ux, sy * uy, 0.0),
            normal_jacobian,
            dphi_dshape: vec![-0.5 * ux, -0.5 * uy],
            dnormal_dshape: vec![Vector3::new(dl.x, dl.y, 0.0), Vector3::new(dw.x, dw.y, 0.0)],
        }
    } else {
        // Single active face; inside ties go to the x face.
        let x_face = if qx > 0.0 {
            true
        } else if qy > 0.0 {
            false
        } else {
            qx >= qy
        };
        let (phi, normal, dphi_dshape) = if x_face {
            (qx, Vector3::new(sx, 0.0, 0.0), vec![-0.5, 0.0])
        } else {
            (qy, Vector3::new(0.0, sy, 0.0), vec![0.0, -0.5])
        };
        SdfEval {
            phi,
            normal,
            normal_jacobian: Matrix3::zeros(),
            dphi_dshape,
            dnormal_dshape: vec![Vector3::zeros(), Vector3::zeros()],
        }
    }
}
