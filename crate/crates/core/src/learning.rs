//! Coactive weight learning: after each plan, the human's demonstration is
//! compared with the plan in feature space and the human weights move toward
//! the demonstrated feature counts.

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::features::{matched_velocity_counts, path_feature_count, velocity_bins};
use crate::planner::{self, PlanResult};
use crate::trajectory::{segment, Context, DiscreteTrajectory, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeedbackMode {
    Path,
    Velocity,
    Both,
}

impl FeedbackMode {
    pub fn updates_path(self) -> bool {
        matches!(self, FeedbackMode::Path | FeedbackMode::Both)
    }

    pub fn updates_velocity(self) -> bool {
        matches!(self, FeedbackMode::Velocity | FeedbackMode::Both)
    }
}

impl std::str::FromStr for FeedbackMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "path" => Ok(FeedbackMode::Path),
            "velocity" => Ok(FeedbackMode::Velocity),
            "both" => Ok(FeedbackMode::Both),
            other => Err(Error::InvalidParams(format!(
                "unknown feedback mode '{other}' (expected path, velocity or both)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightState {
    pub theta_hp: Vec3,
    /// Close-bin weights followed by far-bin weights.
    pub theta_hv: Vec<f64>,
    pub alpha: f64,
    pub iteration: usize,
    /// Optional symmetric bound applied after every update.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clamp: Option<f64>,
}

impl WeightState {
    pub fn zeros(velocity_dim: usize, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self {
            theta_hp: Vec3::zeros(),
            theta_hv: vec![0.0; velocity_dim],
            alpha,
            iteration: 0,
            clamp: None,
        })
    }

    pub fn validate(&self, velocity_dim: usize) -> Result<()> {
        check_alpha(self.alpha)?;
        if self.theta_hv.len() != velocity_dim {
            return Err(Error::DimensionMismatch { expected: velocity_dim, actual: self.theta_hv.len() });
        }
        if self.theta_hp.iter().chain(&self.theta_hv).any(|w| !w.is_finite()) {
            return Err(Error::InvalidParams("weights must be finite".into()));
        }
        if let Some(c) = self.clamp {
            if !(c > 0.0) {
                return Err(Error::InvalidParams("weight clamp must be positive".into()));
            }
        }
        Ok(())
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("learning rate must lie in (0, 1], got {alpha}")))
    }
}

/// `theta + alpha * (phi_human - phi_robot)`.
pub fn update_weights(theta: &[f64], phi_human: &[f64], phi_robot: &[f64], alpha: f64) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    for other in [phi_human, phi_robot] {
        if other.len() != theta.len() {
            return Err(Error::DimensionMismatch { expected: theta.len(), actual: other.len() });
        }
    }
    Ok(theta
        .iter()
        .zip(phi_human.iter().zip(phi_robot))
        .map(|(t, (h, r))| t + alpha * (h - r))
        .collect())
}

/// Feature-count differences human minus robot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feedback {
    pub delta_path: Vec3,
    pub delta_velocity: Vec<f64>,
}

impl Feedback {
    /// Path deltas divided by the sample count, velocity deltas by the
    /// segment count.
    pub fn normalized(&self, n_samples: usize, n_segments: usize) -> Feedback {
        Feedback {
            delta_path: self.delta_path / n_samples as f64,
            delta_velocity: self.delta_velocity.iter().map(|d| d / n_segments as f64).collect(),
        }
    }
}

pub fn compute_feedback(
    demo: &DiscreteTrajectory,
    plan: &DiscreteTrajectory,
    ctx: &Context,
    config: &Config,
) -> Result<Feedback> {
    if demo.len() != plan.len() {
        return Err(Error::Incomparable(format!(
            "demonstration has {} samples, plan has {}",
            demo.len(),
            plan.len()
        )));
    }
    let m = config.planner.n_segments;
    let demo_segs = segment(demo, m, ctx)?;
    let plan_segs = segment(plan, m, ctx)?;
    let params = &config.path_features;
    let delta_path = path_feature_count(demo, ctx, params) - path_feature_count(plan, ctx, params);
    let (human_v, robot_v) = matched_velocity_counts(
        &velocity_bins(&demo_segs, &config.velocity_features),
        &velocity_bins(&plan_segs, &config.velocity_features),
    )?;
    let delta_velocity = human_v.iter().zip(&robot_v).map(|(h, r)| h - r).collect();
    Ok(Feedback { delta_path, delta_velocity })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub mode: FeedbackMode,
    pub demonstration: DiscreteTrajectory,
    pub plan: PlanResult,
    /// Normalized feature differences applied in this update.
    pub feedback: Feedback,
    pub weights: WeightState,
}

/// One learning run in one context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Session {
    pub context: Context,
    pub config: Config,
    pub initial_weights: WeightState,
    pub iterations: Vec<IterationRecord>,
    pub current_plan: Option<PlanResult>,
}

impl Session {
    pub fn new(context: Context, config: Config, alpha: f64) -> Result<Self> {
        context.validate()?;
        config.validate(Some(&context))?;
        let initial_weights = WeightState::zeros(config.velocity_dim(), alpha)?;
        Ok(Self { context, config, initial_weights, iterations: Vec::new(), current_plan: None })
    }

    pub fn weights(&self) -> &WeightState {
        self.iterations.last().map(|r| &r.weights).unwrap_or(&self.initial_weights)
    }

    pub fn weight_history(&self) -> impl Iterator<Item = &WeightState> + '_ {
        std::iter::once(&self.initial_weights).chain(self.iterations.iter().map(|r| &r.weights))
    }

    pub fn set_plan(&mut self, plan: PlanResult) {
        self.current_plan = Some(plan);
    }

    /// Plans with the current weights and stores the result as the current plan.
    pub fn replan(&mut self) -> Result<&PlanResult> {
        self.replan_with_progress(&|_| {})
    }

    pub fn replan_with_progress(&mut self, progress: &(dyn Fn(f64) + Sync)) -> Result<&PlanResult> {
        let plan = planner::plan_with_progress(self.weights(), &self.context, &self.config, progress)?;
        Ok(self.current_plan.insert(plan))
    }

    /// Applies one coactive update from `demo` against the current plan.
    /// The plan is consumed; call [`Session::replan`] before the next step.
    pub fn step(&mut self, demo: &DiscreteTrajectory, mode: FeedbackMode) -> Result<&IterationRecord> {
        let plan = self.current_plan.as_ref().ok_or(Error::NoCurrentPlan)?;
        let settings = &self.config.planner;
        let feedback = compute_feedback(demo, &plan.trajectory, &self.context, &self.config)?
            .normalized(settings.n_samples, settings.n_segments);

        let current = self.weights().clone();
        let mut next = current.clone();
        if mode.updates_path() {
            let updated = update_weights(
                current.theta_hp.as_slice(),
                feedback.delta_path.as_slice(),
                &[0.0; 3],
                current.alpha,
            )?;
            next.theta_hp = Vec3::from_column_slice(&updated);
        }
        if mode.updates_velocity() {
            let zeros = vec![0.0; feedback.delta_velocity.len()];
            next.theta_hv = update_weights(&current.theta_hv, &feedback.delta_velocity, &zeros, current.alpha)?;
        }
        if let Some(bound) = current.clamp {
            next.theta_hp.iter_mut().chain(next.theta_hv.iter_mut()).for_each(|w| *w = w.clamp(-bound, bound));
        }
        next.iteration = current.iteration + 1;

        let plan = self.current_plan.take().ok_or(Error::NoCurrentPlan)?;
        self.iterations.push(IterationRecord {
            iteration: next.iteration,
            mode,
            demonstration: demo.clone(),
            plan,
            feedback,
            weights: next,
        });
        Ok(self.iterations.last().expect("just pushed"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn update_rule_basics() {
        let theta = [0.3, -0.2];
        assert_eq!(update_weights(&theta, &[1.0, 2.0], &[1.0, 2.0], 0.5).unwrap(), theta.to_vec());
        assert_eq!(update_weights(&[0.0, 0.0], &[1.5, -2.0], &[0.0, 0.0], 1.0).unwrap(), vec![1.5, -2.0]);
        assert!(matches!(
            update_weights(&theta, &[1.0], &[1.0, 2.0], 0.5),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(update_weights(&theta, &theta, &theta, 0.0).is_err());
        assert!(update_weights(&theta, &theta, &theta, 1.5).is_err());
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("path".parse::<FeedbackMode>().unwrap(), FeedbackMode::Path);
        assert_eq!("both".parse::<FeedbackMode>().unwrap(), FeedbackMode::Both);
        assert!("sideways".parse::<FeedbackMode>().is_err());
        assert!(FeedbackMode::Velocity.updates_velocity() && !FeedbackMode::Velocity.updates_path());
    }

    #[test]
    fn feedback_normalization() {
        let f = Feedback { delta_path: Vec3::new(8.0, 16.0, -4.0), delta_velocity: vec![5.0, -10.0] };
        let n = f.normalized(8, 5);
        assert_eq!(n.delta_path, Vec3::new(1.0, 2.0, -0.5));
        assert_eq!(n.delta_velocity, vec![1.0, -2.0]);
    }
}
