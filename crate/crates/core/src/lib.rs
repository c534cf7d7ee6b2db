//! Contact-aware optimal experimental design for robot parameter learning.
//!
//! A robot simulator whose planner maximizes the Fisher information of
//! contact-force measurements, coupled with a maximum a-posteriori estimator
//! that recovers physical parameters (mass, friction, stiffness/damping,
//! shape) from the collected data.
//!
//! Module map:
//! - [`types`], [`rng`]: shared domain types and deterministic random streams
//! - [`sdf`], [`contact`]: signed distance fields and the soft contact law
//! - [`dynamics`]: scenario dynamics, rollouts and forward sensitivities
//! - [`scenarios`]: the four task definitions and their sensor models
//! - [`fisher`]: information matrices, design metrics and diagnostics
//! - [`estimation`]: log posterior, natural-gradient MAP and belief update
//! - [`planner`]: predictive-sampling experiment design
//! - [`harness`]: the closed learning loop, sweeps, landscapes and outputs

pub mod contact;
pub mod dynamics;
pub mod error;
pub mod estimation;
pub mod fisher;
pub mod harness;
pub mod linalg;
pub mod model;
pub mod planner;
pub mod rng;
pub mod scenarios;
pub mod sdf;
pub mod types;

pub use error::{Error, Result};
