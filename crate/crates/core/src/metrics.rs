//! Trajectory comparison metrics used by evaluation and the experiments.

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::features::{matched_velocity_counts, path_feature_count, velocity_bins};
use crate::trajectory::{segment, Context, DiscreteTrajectory, Sample, Vec3};

/// Absolute feature-count differences between a trajectory and a reference.
/// Path entries are divided by the sample count, the velocity entry by the
/// segment count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureErrors {
    pub height: f64,
    pub distance: f64,
    pub side: f64,
    pub velocity: f64,
}

impl FeatureErrors {
    pub fn path_total(&self) -> f64 {
        self.height + self.distance + self.side
    }

    pub fn total(&self) -> f64 {
        self.path_total() + self.velocity
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.height, self.distance, self.side, self.velocity]
    }
}

pub fn feature_errors(
    traj: &DiscreteTrajectory,
    reference: &DiscreteTrajectory,
    ctx: &Context,
    config: &Config,
) -> Result<FeatureErrors> {
    let n = config.planner.n_samples;
    let m = config.planner.n_segments;
    let traj = traj.resample_linear(n)?;
    let reference = reference.resample_linear(n)?;
    let dp = (path_feature_count(&traj, ctx, &config.path_features)
        - path_feature_count(&reference, ctx, &config.path_features))
        / n as f64;
    let (a, b) = matched_velocity_counts(
        &velocity_bins(&segment(&traj, m, ctx)?, &config.velocity_features),
        &velocity_bins(&segment(&reference, m, ctx)?, &config.velocity_features),
    )?;
    let velocity = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / m as f64;
    Ok(FeatureErrors { height: dp.x.abs(), distance: dp.y.abs(), side: dp.z.abs(), velocity })
}

/// Mean distance between index-paired samples after resampling both to `n`,
/// divided by the start-goal distance of `ctx`.
pub fn normalized_distance(
    traj: &DiscreteTrajectory,
    reference: &DiscreteTrajectory,
    ctx: &Context,
    n: usize,
) -> Result<f64> {
    let scale = ctx.start_goal_distance();
    if !(scale > 0.0) {
        return Err(Error::DegenerateContext("start and goal coincide".into()));
    }
    let a = traj.resample_linear(n)?;
    let b = reference.resample_linear(n)?;
    let total: f64 = a.positions().zip(b.positions()).map(|(x, y)| (x - y).norm()).sum();
    Ok(total / n as f64 / scale)
}

/// Sample-wise mean of several trajectories, each first resampled to `n`.
pub fn mean_trajectory(set: &[DiscreteTrajectory], n: usize) -> Result<DiscreteTrajectory> {
    let first = set.first().ok_or_else(|| Error::InvalidParams("empty reference set".into()))?;
    let resampled: Vec<DiscreteTrajectory> = set.iter().map(|t| t.resample_linear(n)).collect::<Result<_>>()?;
    if resampled.len() == 1 {
        return Ok(resampled.into_iter().next().expect("one element"));
    }
    let k = resampled.len() as f64;
    let duration = resampled.iter().map(|t| t.duration()).sum::<f64>() / k;
    let t0 = first.first().t;
    let samples = (0..n)
        .map(|i| {
            let mut x = Vec3::zeros();
            let mut v = Vec3::zeros();
            for t in &resampled {
                x += t.samples()[i].x;
                v += t.samples()[i].v;
            }
            Sample { t: t0 + duration * i as f64 / (n - 1) as f64, x: x / k, v: v / k }
        })
        .collect();
    DiscreteTrajectory::new(samples)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub normalized_distance: f64,
    pub errors: FeatureErrors,
    /// Number of reference trajectories averaged into the reference.
    pub references: usize,
}

/// Scores `traj` against one reference or against the sample-wise mean of
/// several.
pub fn evaluate(
    traj: &DiscreteTrajectory,
    references: &[DiscreteTrajectory],
    ctx: &Context,
    config: &Config,
) -> Result<Evaluation> {
    let n = config.planner.n_samples;
    let reference = mean_trajectory(references, n)?;
    Ok(Evaluation {
        normalized_distance: normalized_distance(traj, &reference, ctx, n)?,
        errors: feature_errors(traj, &reference, ctx, config)?,
        references: references.len(),
    })
}

/// Mean segment speed in the close and far bins; `None` for an empty bin.
pub fn bin_mean_speeds(traj: &DiscreteTrajectory, ctx: &Context, config: &Config) -> Result<(Option<f64>, Option<f64>)> {
    let segs = segment(traj, config.planner.n_segments, ctx)?;
    let d_c = config.velocity_features.d_c;
    let mean = |close: bool| {
        let speeds: Vec<f64> = segs
            .segments
            .iter()
            .filter(|s| (s.obstacle_distance < d_c) == close)
            .map(|s| s.mean_speed)
            .collect();
        (!speeds.is_empty()).then(|| speeds.iter().sum::<f64>() / speeds.len() as f64)
    };
    Ok((mean(true), mean(false)))
}

/// Whether the close bin is at least `margin` slower than the far bin.
pub fn slows_near_obstacle(traj: &DiscreteTrajectory, ctx: &Context, config: &Config, margin: f64) -> Result<bool> {
    Ok(match bin_mean_speeds(traj, ctx, config)? {
        (Some(close), Some(far)) => close <= (1.0 - margin) * far,
        _ => false,
    })
}
