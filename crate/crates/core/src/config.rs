use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{PathFeatureParams, RobotObjectiveParams, VelocityFeatureParams};
use crate::trajectory::Context;

/// Sampling and optimizer settings shared by both planning stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerSettings {
    /// Samples per trajectory.
    pub n_samples: usize,
    /// Velocity segments per trajectory.
    pub n_segments: usize,
    /// Nominal duration used while optimizing the path shape, s.
    pub t_goal: f64,
    /// Grid points per axis for the path seeding scan.
    pub grid: usize,
    /// Number of best grid cells refined by local search.
    pub seeds: usize,
    /// Local-search tolerance on the waypoint, m.
    pub tolerance: f64,
    /// Evaluation budget for the path stage (grid included).
    pub max_path_evals: usize,
    /// Evaluation budget for the velocity stage.
    pub max_velocity_evals: usize,
    /// Total-duration bound as a multiple of length / v_robot.
    pub t_upp_factor: f64,
}

impl Default for PlannerSettings {
    fn default() -> Self {
        Self {
            n_samples: 80,
            n_segments: 10,
            t_goal: 5.0,
            grid: 9,
            seeds: 5,
            tolerance: 1e-4,
            max_path_evals: 4000,
            max_velocity_evals: 20000,
            t_upp_factor: 2.0,
        }
    }
}

impl PlannerSettings {
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.n_samples < 3 {
            out.push("planner.n_samples: need at least 3 samples".into());
        }
        if self.n_segments < 2 || self.n_segments >= self.n_samples {
            out.push("planner.n_segments: need 2 <= n_segments < n_samples".into());
        }
        if !(self.t_goal > 0.0 && self.t_goal.is_finite()) {
            out.push("planner.t_goal: must be positive".into());
        }
        if self.grid < 2 {
            out.push("planner.grid: need at least 2 points per axis".into());
        }
        if self.seeds == 0 {
            out.push("planner.seeds: need at least one seed".into());
        }
        if !(self.tolerance > 0.0) {
            out.push("planner.tolerance: must be positive".into());
        }
        if self.max_path_evals < self.grid.pow(3) {
            out.push("planner.max_path_evals: smaller than the seeding grid".into());
        }
        if self.max_velocity_evals == 0 {
            out.push("planner.max_velocity_evals: must be positive".into());
        }
        if !(self.t_upp_factor >= 1.0 && self.t_upp_factor.is_finite()) {
            out.push("planner.t_upp_factor: must be at least 1".into());
        }
        out
    }
}

/// Everything except the scene and the learned weights.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub path_features: PathFeatureParams,
    #[serde(default)]
    pub velocity_features: VelocityFeatureParams,
    #[serde(default)]
    pub robot: RobotObjectiveParams,
    #[serde(default)]
    pub planner: PlannerSettings,
}

impl Config {
    pub fn problems(&self, ctx: Option<&Context>) -> Vec<String> {
        let mut out = self.path_features.problems();
        out.extend(self.velocity_features.problems());
        out.extend(self.robot.problems(ctx));
        out.extend(self.planner.problems());
        out
    }

    pub fn validate(&self, ctx: Option<&Context>) -> Result<()> {
        let problems = self.problems(ctx);
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Schema(problems))
        }
    }

    /// Length of the velocity weight vector (close ++ far).
    pub fn velocity_dim(&self) -> usize {
        2 * self.velocity_features.n
    }
}
