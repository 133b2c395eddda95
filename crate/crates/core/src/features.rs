//! Reward features. Three path preferences (height above the table, distance
//! to the obstacle, obstacle side) are summed over samples; the velocity
//! preference maps segment mean speeds onto radial basis functions, split
//! into a "close" and a "far" bin by obstacle distance. The robot's own
//! objectives (path length, collision cost, carrying speed) are kept apart
//! because their weights are fixed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::{path_length, Context, DiscreteTrajectory, SegmentSet, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathFeatureParams {
    /// Sigmoid steepness, 1/m.
    pub lambda: f64,
    /// Signed sigmoid offset: the height feature is 0.5 at `h = -sigmoid_center`.
    pub sigmoid_center: f64,
    /// Obstacle-distance decay, 1/m^2.
    pub beta: f64,
    /// Obstacle-side steepness, 1/m.
    pub gamma: f64,
    /// Overrides the side plane normal derived from the context.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side_plane_normal: Option<Vec3>,
}

impl Default for PathFeatureParams {
    fn default() -> Self {
        Self {
            lambda: 10.0,
            sigmoid_center: -0.20,
            beta: 50.0,
            gamma: 5.0,
            side_plane_normal: None,
        }
    }
}

impl PathFeatureParams {
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, v) in [("lambda", self.lambda), ("beta", self.beta), ("gamma", self.gamma)] {
            if !(v > 0.0 && v.is_finite()) {
                out.push(format!("path_features.{name}: must be positive"));
            }
        }
        if !self.sigmoid_center.is_finite() {
            out.push("path_features.sigmoid_center: non-finite".into());
        }
        if let Some(n) = &self.side_plane_normal {
            if (n.norm() - 1.0).abs() > 1e-9 || n.z.abs() > 1e-12 {
                out.push("path_features.side_plane_normal: must be a horizontal unit vector".into());
            }
        }
        out
    }

    pub fn side_normal(&self, ctx: &Context) -> Vec3 {
        self.side_plane_normal.unwrap_or_else(|| ctx.side_plane_normal())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VelocityFeatureParams {
    /// Number of radial basis functions per bin.
    pub n: usize,
    pub epsilon: f64,
    pub v_min: f64,
    pub v_max: f64,
    /// Close/far threshold on segment obstacle distance, m.
    pub d_c: f64,
}

impl Default for VelocityFeatureParams {
    fn default() -> Self {
        Self { n: 9, epsilon: 10.0, v_min: 0.05, v_max: 0.60, d_c: 0.225 }
    }
}

impl VelocityFeatureParams {
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.n < 2 {
            out.push("velocity_features.n: need at least 2 basis functions".into());
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            out.push("velocity_features.epsilon: must be positive".into());
        }
        if !(self.v_min > 0.0 && self.v_min < self.v_max && self.v_max.is_finite()) {
            out.push("velocity_features.v_min: need 0 < v_min < v_max".into());
        }
        if !(self.d_c > 0.0 && self.d_c.is_finite()) {
            out.push("velocity_features.d_c: must be positive".into());
        }
        out
    }

    /// Centers spread uniformly over `[epsilon * v_min, epsilon * v_max]`.
    pub fn centers(&self) -> Vec<f64> {
        let lo = self.epsilon * self.v_min;
        let hi = self.epsilon * self.v_max;
        (0..self.n)
            .map(|j| lo + (hi - lo) * j as f64 / (self.n - 1) as f64)
            .collect()
    }

    /// Speeds at which each basis function peaks.
    pub fn center_speeds(&self) -> Vec<f64> {
        self.centers().into_iter().map(|c| c / self.epsilon).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobotObjectiveParams {
    /// Weights on the path-efficiency and collision-avoidance rewards.
    pub theta_rp: [f64; 2],
    pub theta_rv: f64,
    pub v_robot: f64,
    /// Collision threshold; defaults to obstacle radius + 0.10 m.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_safe: Option<f64>,
    pub kappa: f64,
}

impl Default for RobotObjectiveParams {
    fn default() -> Self {
        Self {
            theta_rp: [20.0, 1.0],
            theta_rv: 0.1,
            v_robot: 0.15,
            d_safe: None,
            kappa: 20.0,
        }
    }
}

impl RobotObjectiveParams {
    pub fn d_safe(&self, ctx: &Context) -> f64 {
        self.d_safe.unwrap_or(ctx.obstacle_radius + 0.10)
    }

    pub fn problems(&self, ctx: Option<&Context>) -> Vec<String> {
        let mut out = Vec::new();
        if self.theta_rp.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            out.push("robot.theta_rp: weights must be non-negative".into());
        }
        if !(self.theta_rv >= 0.0 && self.theta_rv.is_finite()) {
            out.push("robot.theta_rv: must be non-negative".into());
        }
        if !(self.v_robot > 0.0 && self.v_robot.is_finite()) {
            out.push("robot.v_robot: must be positive".into());
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            out.push("robot.kappa: must be positive".into());
        }
        if let (Some(d), Some(ctx)) = (self.d_safe, ctx) {
            if !(d > ctx.obstacle_radius) {
                out.push("robot.d_safe: must exceed the obstacle radius".into());
            }
        }
        out
    }
}

pub fn height_feature(x: &Vec3, ctx: &Context, params: &PathFeatureParams) -> f64 {
    let h = x.z - ctx.table_height;
    1.0 / (1.0 + (-params.lambda * (h + params.sigmoid_center)).exp())
}

pub fn obstacle_distance_feature(x: &Vec3, ctx: &Context, params: &PathFeatureParams) -> f64 {
    let d2 = (x - ctx.obstacle_center).norm_squared();
    (-params.beta * d2).exp()
}

/// Signed lateral offset of `x` from the vertical plane through the obstacle.
pub fn side_offset(x: &Vec3, ctx: &Context, params: &PathFeatureParams) -> f64 {
    params.side_normal(ctx).dot(&(x - ctx.obstacle_center))
}

pub fn obstacle_side_feature(x: &Vec3, ctx: &Context, params: &PathFeatureParams) -> f64 {
    side_value(side_offset(x, ctx, params), params.gamma)
}

fn side_value(offset: f64, gamma: f64) -> f64 {
    // 2/(1+e^{g s}) - 1 == -tanh(g s / 2), which stays finite for large |s|.
    -(0.5 * gamma * offset).tanh()
}

pub fn path_features(x: &Vec3, ctx: &Context, params: &PathFeatureParams) -> Vec3 {
    Vec3::new(
        height_feature(x, ctx, params),
        obstacle_distance_feature(x, ctx, params),
        obstacle_side_feature(x, ctx, params),
    )
}

pub fn velocity_rbf(speed: f64, params: &VelocityFeatureParams) -> Vec<f64> {
    let scaled = params.epsilon * speed;
    params
        .centers()
        .into_iter()
        .map(|c| (-(scaled - c).powi(2)).exp())
        .collect()
}

/// Summed path features over all samples: (height, distance, side).
pub fn path_feature_count(traj: &DiscreteTrajectory, ctx: &Context, params: &PathFeatureParams) -> Vec3 {
    let normal = params.side_normal(ctx);
    traj.positions().fold(Vec3::zeros(), |acc, x| {
        let h = x.z - ctx.table_height;
        let rel = x - ctx.obstacle_center;
        acc + Vec3::new(
            1.0 / (1.0 + (-params.lambda * (h + params.sigmoid_center)).exp()),
            (-params.beta * rel.norm_squared()).exp(),
            side_value(normal.dot(&rel), params.gamma),
        )
    })
}

/// Path and velocity feature counts of one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureCount {
    /// Height, distance and side totals.
    pub phi_p: Vec3,
    /// Close bin (segment obstacle distance below `d_c`).
    pub phi_v1: Vec<f64>,
    /// Far bin.
    pub phi_v2: Vec<f64>,
    pub count_v1: usize,
    pub count_v2: usize,
}

/// Per-bin velocity totals before any imputation.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityBins {
    pub close: Vec<f64>,
    pub far: Vec<f64>,
    pub count_close: usize,
    pub count_far: usize,
}

impl VelocityBins {
    fn bin(&self, close: bool) -> (&[f64], usize) {
        if close {
            (&self.close, self.count_close)
        } else {
            (&self.far, self.count_far)
        }
    }

    /// Per-segment mean vector of a bin; an empty bin borrows the mean of the
    /// other bin.
    fn mean(&self, close: bool) -> Vec<f64> {
        let (total, count) = self.bin(close);
        let (total, count) = if count > 0 { (total, count) } else { self.bin(!close) };
        total.iter().map(|v| v / count.max(1) as f64).collect()
    }

    /// Bin totals padded to `count` segments with the bin's mean vector.
    pub fn padded(&self, close: bool, count: usize) -> Vec<f64> {
        let (total, own) = self.bin(close);
        if own >= count {
            return total.to_vec();
        }
        let extra = (count - own) as f64;
        total
            .iter()
            .zip(self.mean(close))
            .map(|(t, m)| t + extra * m)
            .collect()
    }
}

/// Raw close/far RBF totals over segments.
pub fn velocity_bins(segs: &SegmentSet, params: &VelocityFeatureParams) -> VelocityBins {
    let mut bins = VelocityBins {
        close: vec![0.0; params.n],
        far: vec![0.0; params.n],
        count_close: 0,
        count_far: 0,
    };
    for seg in &segs.segments {
        let psi = velocity_rbf(seg.mean_speed, params);
        let (target, count) = if seg.obstacle_distance < params.d_c {
            (&mut bins.close, &mut bins.count_close)
        } else {
            (&mut bins.far, &mut bins.count_far)
        };
        target.iter_mut().zip(&psi).for_each(|(t, p)| *t += p);
        *count += 1;
    }
    bins
}

/// Velocity part of the feature count. An empty bin keeps count 0 and holds
/// the per-segment mean vector of the occupied bin.
pub fn velocity_feature_count(segs: &SegmentSet, params: &VelocityFeatureParams) -> (Vec<f64>, Vec<f64>, usize, usize) {
    let bins = velocity_bins(segs, params);
    let close = if bins.count_close == 0 { bins.mean(true) } else { bins.close.clone() };
    let far = if bins.count_far == 0 { bins.mean(false) } else { bins.far.clone() };
    (close, far, bins.count_close, bins.count_far)
}

pub fn feature_count(
    traj: &DiscreteTrajectory,
    segs: &SegmentSet,
    ctx: &Context,
    path: &PathFeatureParams,
    velocity: &VelocityFeatureParams,
) -> FeatureCount {
    let (phi_v1, phi_v2, count_v1, count_v2) = velocity_feature_count(segs, velocity);
    FeatureCount {
        phi_p: path_feature_count(traj, ctx, path),
        phi_v1,
        phi_v2,
        count_v1,
        count_v2,
    }
}

/// Velocity vectors (close ++ far) of two trajectories with bins padded to
/// equal segment counts.
pub fn matched_velocity_counts(a: &VelocityBins, b: &VelocityBins) -> Result<(Vec<f64>, Vec<f64>)> {
    if a.close.len() != b.close.len() {
        return Err(Error::DimensionMismatch { expected: a.close.len(), actual: b.close.len() });
    }
    let close = a.count_close.max(b.count_close);
    let far = a.count_far.max(b.count_far);
    let join = |bins: &VelocityBins| {
        let mut v = bins.padded(true, close);
        v.extend(bins.padded(false, far));
        v
    };
    Ok((join(a), join(b)))
}

/// Zero beyond `d_safe`, growing exponentially inside it.
pub fn collision_cost(x: &Vec3, ctx: &Context, robot: &RobotObjectiveParams) -> f64 {
    let d = (x - ctx.obstacle_center).norm();
    let d_safe = robot.d_safe(ctx);
    if d >= d_safe {
        0.0
    } else {
        (robot.kappa * (d_safe - d)).exp() - 1.0
    }
}

/// Robot path reward: weighted negative length and negative collision cost.
pub fn robot_path_objective(traj: &DiscreteTrajectory, ctx: &Context, robot: &RobotObjectiveParams) -> f64 {
    let collision: f64 = traj.positions().map(|x| collision_cost(x, ctx, robot)).sum();
    -robot.theta_rp[0] * path_length(traj) - robot.theta_rp[1] * collision
}

pub fn robot_speed_reward(speed: f64, velocity: &VelocityFeatureParams, robot: &RobotObjectiveParams) -> f64 {
    let e = velocity.epsilon;
    (-(e * speed - e * robot.v_robot).powi(2)).exp()
}

pub fn robot_velocity_objective(segs: &SegmentSet, velocity: &VelocityFeatureParams, robot: &RobotObjectiveParams) -> f64 {
    if robot.theta_rv == 0.0 {
        return 0.0;
    }
    robot.theta_rv
        * segs
            .segments
            .iter()
            .map(|s| robot_speed_reward(s.mean_speed, velocity, robot))
            .sum::<f64>()
}
