//! Learning path and velocity preferences from demonstrated trajectories and
//! planning trajectories that follow them.
//!
//! The pipeline: demonstrations and plans are reduced to feature counts
//! ([`features`]), human reward weights move toward the demonstrated counts
//! ([`learning`]), and a two-stage optimizer plans the path and then the
//! timing along it ([`planner`]). [`sim`] provides a simulated demonstrator,
//! brute-force oracles and a DMP baseline; [`io`] holds the document formats.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod features;
pub mod io;
pub mod learning;
pub mod metrics;
pub mod planner;
pub mod sim;
pub mod trajectory;

pub use config::{Config, PlannerSettings};
pub use error::{Error, Result};
pub use learning::{FeedbackMode, Session, WeightState};
pub use planner::{plan, PlanResult};
pub use trajectory::{Context, DiscreteTrajectory, Sample, Vec3};
