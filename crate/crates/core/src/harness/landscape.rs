//! Single-step information landscapes over contact-state grids.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::dynamics::one_step_measurement_jacobian;
use crate::error::{Error, Result};
use crate::fisher::information_from_jacobians;
use crate::scenarios::{ScenarioKind, ScenarioSpec, WALL_SURFACE_X};
use crate::sdf::Shape;
use crate::types::{ControlInput, RobotState};

/// Penetration at which the rubbing velocity grid is evaluated (m).
pub const RUBBING_FIXED_PHI: f64 = -0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LandscapeAxes {
    /// Signed distance × normal velocity.
    PhiVn,
    /// Normal × tangential velocity at fixed penetration.
    VnVt,
    /// Signed distance × its rate.
    PhiDphi,
}

impl FromStr for LandscapeAxes {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "phi-vn" => Ok(Self::PhiVn),
            "vn-vt" => Ok(Self::VnVt),
            "phi-dphi" => Ok(Self::PhiDphi),
            other => Err(Error::Config(format!("unknown landscape axes `{other}`"))),
        }
    }
}

impl LandscapeAxes {
    pub fn labels(self) -> (&'static str, &'static str) {
        match self {
            Self::PhiVn => ("phi_n", "v_n"),
            Self::VnVt => ("v_n", "v_t"),
            Self::PhiDphi => ("phi_n", "dphi_n"),
        }
    }

    /// Axes shown by default for each scenario.
    pub fn default_for(kind: ScenarioKind) -> Self {
        match kind {
            ScenarioKind::Rubbing => Self::VnVt,
            ScenarioKind::Pinching => Self::PhiDphi,
            ScenarioKind::Hefting | ScenarioKind::Contouring => Self::PhiVn,
        }
    }
}

/// `values[i][j]` is trace(F) at `(x[i], y[j])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeGrid {
    pub scenario: ScenarioKind,
    pub axes: LandscapeAxes,
    pub theta: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl LandscapeGrid {
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = (0, 0);
        for (i, row) in self.values.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if *v > self.values[best.0][best.1] {
                    best = (i, j);
                }
            }
        }
        best
    }

    pub fn max(&self) -> f64 {
        let (i, j) = self.argmax();
        self.values[i][j]
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

type StateMap = Box<dyn Fn(f64, f64) -> RobotState>;

fn grid_setup(spec: &ScenarioSpec, axes: LandscapeAxes, theta: &[f64]) -> Result<((f64, f64), (f64, f64), StateMap)> {
    let vb = &spec.dynamics.velocity_bounds;
    let unsupported = || Error::Config(format!("axes {:?} are not defined for {}", axes, spec.name));
    match (spec.name, axes) {
        (ScenarioKind::Hefting, LandscapeAxes::PhiVn | LandscapeAxes::PhiDphi) => {
            let object = spec.initial_state.object.ok_or_else(unsupported)?;
            let zb = object.position;
            let sign = if axes == LandscapeAxes::PhiVn { -1.0 } else { 1.0 };
            // contact normal points down: φ = z_ball − z_hand, v_n = −ż_hand
            let map = move |phi: f64, rate: f64| RobotState {
                position: vec![zb - phi],
                velocity: vec![sign * rate],
                object: Some(object),
            };
            Ok(((-0.005, 0.005), (vb[0].lo, vb[0].hi), Box::new(map)))
        }
        (ScenarioKind::Rubbing, LandscapeAxes::VnVt) => {
            let map = |vn: f64, vt: f64| RobotState {
                position: vec![WALL_SURFACE_X + RUBBING_FIXED_PHI, 0.8],
                velocity: vec![vn, vt],
                object: None,
            };
            Ok(((vb[0].lo, vb[0].hi), (vb[1].lo, vb[1].hi), Box::new(map)))
        }
        (ScenarioKind::Rubbing, LandscapeAxes::PhiVn | LandscapeAxes::PhiDphi) => {
            let map = |phi: f64, vn: f64| RobotState {
                position: vec![WALL_SURFACE_X + phi, 0.8],
                velocity: vec![vn, 0.5],
                object: None,
            };
            Ok(((-0.1, 0.1), (vb[0].lo, vb[0].hi), Box::new(map)))
        }
        (ScenarioKind::Pinching, LandscapeAxes::PhiVn | LandscapeAxes::PhiDphi) => {
            let ws = spec.dynamics.workspace[0];
            let map = |phi: f64, rate: f64| RobotState { position: vec![phi], velocity: vec![rate], object: None };
            Ok(((ws.lo, ws.hi), (vb[0].lo, vb[0].hi), Box::new(map)))
        }
        (ScenarioKind::Contouring, LandscapeAxes::PhiVn | LandscapeAxes::PhiDphi) => {
            let Shape::Box { .. } = spec.field.shape else { return Err(unsupported()) };
            let c = spec.field.center;
            let half_w = 0.5 * theta.get(1).copied().ok_or_else(unsupported)?;
            let sign = if axes == LandscapeAxes::PhiVn { -1.0 } else { 1.0 };
            // approach the −y face at its midpoint: v_n = −ẏ
            let map = move |phi: f64, rate: f64| RobotState {
                position: vec![c[0], c[1] - half_w - phi],
                velocity: vec![0.0, sign * rate],
                object: None,
            };
            Ok(((-0.01, 0.01), (vb[1].lo, vb[1].hi), Box::new(map)))
        }
        _ => Err(unsupported()),
    }
}

/// trace(F) of a single measurement at each grid cell, with object
/// sensitivities from one step that keeps the cell's velocity.
pub fn emit_landscape(
    spec: &ScenarioSpec,
    axes: LandscapeAxes,
    resolution: usize,
    theta: Option<&[f64]>,
) -> Result<LandscapeGrid> {
    if resolution < 2 {
        return Err(Error::Config("landscape resolution must be at least 2".into()));
    }
    let theta: Vec<f64> = match theta {
        Some(t) => t.to_vec(),
        None => spec.prior.mode.values.iter().copied().collect(),
    };
    let th = DVector::from_column_slice(&theta);
    let ((xlo, xhi), (ylo, yhi), map) = grid_setup(spec, axes, &theta)?;
    let (x, y) = (linspace(xlo, xhi, resolution), linspace(ylo, yhi, resolution));
    let mut values = vec![vec![0.0; resolution]; resolution];
    for (i, a) in x.iter().enumerate() {
        for (j, b) in y.iter().enumerate() {
            let state = map(*a, *b);
            let u = ControlInput { command: state.velocity.clone() };
            let g = one_step_measurement_jacobian(spec, &state, &u, &th)?;
            values[i][j] = information_from_jacobians(&[g], &spec.noise_std)?.trace();
        }
    }
    Ok(LandscapeGrid { scenario: spec.name, axes, theta, x, y, values })
}

pub fn write_landscape_csv(grid: &LandscapeGrid, path: &Path) -> Result<()> {
    let (xl, yl) = grid.axes.labels();
    let mut out = format!("{xl},{yl},trace_f\n");
    for (i, a) in grid.x.iter().enumerate() {
        for (j, b) in grid.y.iter().enumerate() {
            out.push_str(&format!("{a},{b},{}\n", grid.values[i][j]));
        }
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, out)?;
    Ok(())
}
