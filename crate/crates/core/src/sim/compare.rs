//! Coactive planner against the DMP baseline on relocated scenes.

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::learning::WeightState;
use crate::metrics::{bin_mean_speeds, feature_errors, normalized_distance, FeatureErrors};
use crate::planner::plan;
use crate::trajectory::{Context, DiscreteTrajectory};

use super::dmp::{dmp_fit, dmp_rollout, dmp_rollout_dense, reproduction_quality, DmpConfig};
use super::{oracle_demonstration, run_closed_loop, GroundTruthUser, LoopSettings};

/// Required relative slowdown of the close bin against the far bin.
pub const SLOWDOWN_MARGIN: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contender {
    pub errors: FeatureErrors,
    pub normalized_distance: f64,
    pub close_speed: Option<f64>,
    pub far_speed: Option<f64>,
    pub slows_near_obstacle: bool,
    pub min_obstacle_distance: f64,
    pub trajectory: DiscreteTrajectory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonEntry {
    pub context: Context,
    pub reference: DiscreteTrajectory,
    pub coactive: Contender,
    pub dmp: Contender,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub user: GroundTruthUser,
    pub settings: LoopSettings,
    pub dmp_config: DmpConfig,
    pub learned: WeightState,
    /// DMP rollout against the training demonstration, without obstacle.
    pub reproduction_rmse: f64,
    pub reproduction_speed_correlation: f64,
    pub entries: Vec<ComparisonEntry>,
}

fn contender(traj: DiscreteTrajectory, reference: &DiscreteTrajectory, ctx: &Context, config: &Config) -> Result<Contender> {
    let n = config.planner.n_samples;
    let traj = if traj.len() == n { traj } else { traj.resample_linear(n)? };
    let (close_speed, far_speed) = bin_mean_speeds(&traj, ctx, config)?;
    Ok(Contender {
        errors: feature_errors(&traj, reference, ctx, config)?,
        normalized_distance: normalized_distance(&traj, reference, ctx, n)?,
        close_speed,
        far_speed,
        slows_near_obstacle: matches!((close_speed, far_speed), (Some(c), Some(f)) if c <= (1.0 - SLOWDOWN_MARGIN) * f),
        min_obstacle_distance: traj.min_distance_to(&ctx.obstacle_center),
        trajectory: traj,
    })
}

/// Trains both methods on `training` from the user's noiseless demonstration
/// and scores them in every scene of `tests`.
pub fn compare_with_dmp(
    user: &GroundTruthUser,
    training: &Context,
    tests: &[Context],
    settings: &LoopSettings,
    config: &Config,
    dmp_config: &DmpConfig,
) -> Result<Comparison> {
    if tests.is_empty() {
        return Err(Error::InvalidParams("the comparison needs at least one test scene".into()));
    }
    let report = run_closed_loop(user, std::slice::from_ref(training), settings, config)?;
    let learned = report.weights.last().cloned().expect("history starts with the initial weights");

    let demo = oracle_demonstration(user, training, config)?;
    let model = dmp_fit(&demo, dmp_config)?;
    let (reproduction_rmse, reproduction_speed_correlation) =
        reproduction_quality(&dmp_rollout_dense(&model, None)?, &demo);

    let entries = tests
        .iter()
        .map(|ctx| {
            let reference = oracle_demonstration(user, ctx, config)?;
            let coactive = plan(&learned, ctx, config)?.trajectory;
            let dmp = dmp_rollout(&model, Some(ctx))?;
            Ok(ComparisonEntry {
                context: ctx.clone(),
                coactive: contender(coactive, &reference, ctx, config)?,
                dmp: contender(dmp, &reference, ctx, config)?,
                reference,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(Comparison {
        user: user.clone(),
        settings: settings.clone(),
        dmp_config: dmp_config.clone(),
        learned,
        reproduction_rmse,
        reproduction_speed_correlation,
        entries,
    })
}
