//! Discrete dynamic movement primitive baseline with a repulsive obstacle
//! coupling term.
//!
//! Per axis, with phase `s`:
//!
//! ```text
//! tau * dz = alpha_z * (beta_z * (g - y) - z) + f(s) + tau * c
//! tau * dy = z
//! tau * ds = -alpha_s * s
//! f(s)     = s * sum_i(psi_i(s) w_i) / sum_i(psi_i(s))
//! ```
//!
//! The forcing term is not scaled by `g - y0`, which would vanish on any
//! axis where start and goal agree.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::{interpolate, Context, DiscreteTrajectory, Sample, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DmpConfig {
    pub basis: usize,
    pub alpha_z: f64,
    pub beta_z: f64,
    pub alpha_s: f64,
    /// Ridge term of the forcing-weight fit.
    pub regularization: f64,
    /// Integration steps per unit of `tau`.
    pub steps_per_tau: usize,
    /// Gain of the repulsive coupling.
    pub repulsion: f64,
    /// Distance beyond the obstacle surface where the coupling vanishes, m.
    pub influence: f64,
    /// Goal tolerance that ends a rollout, m.
    pub goal_tolerance: f64,
    /// Rollouts longer than this multiple of `tau` are reported as diverged.
    pub max_duration_factor: f64,
    /// Samples in the returned trajectory.
    pub n_samples: usize,
}

impl Default for DmpConfig {
    fn default() -> Self {
        Self {
            basis: 25,
            alpha_z: 25.0,
            beta_z: 6.25,
            alpha_s: 4.0,
            regularization: 1e-8,
            steps_per_tau: 4000,
            repulsion: 2.0,
            influence: 0.08,
            goal_tolerance: 1e-3,
            max_duration_factor: 5.0,
            n_samples: 80,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmpModel {
    pub config: DmpConfig,
    pub tau: f64,
    pub start: Vec3,
    pub goal: Vec3,
    /// Velocity at the first demonstrated sample; rollouts start with it.
    pub initial_velocity: Vec3,
    pub centers: Vec<f64>,
    pub widths: Vec<f64>,
    /// Forcing weights, one row per axis.
    pub weights: [Vec<f64>; 3],
}

fn basis(config: &DmpConfig) -> (Vec<f64>, Vec<f64>) {
    let k = config.basis;
    let centers: Vec<f64> = (0..k)
        .map(|i| (-config.alpha_s * i as f64 / (k - 1) as f64).exp())
        .collect();
    let widths = (0..k)
        .map(|i| {
            let gap = if i + 1 < k { centers[i] - centers[i + 1] } else { centers[i - 1] - centers[i] };
            1.0 / (gap * gap)
        })
        .collect();
    (centers, widths)
}

impl DmpModel {
    fn activations(&self, s: f64) -> Vec<f64> {
        let psi: Vec<f64> = self
            .centers
            .iter()
            .zip(&self.widths)
            .map(|(c, h)| (-h * (s - c).powi(2)).exp())
            .collect();
        let total: f64 = psi.iter().sum::<f64>().max(1e-300);
        psi.iter().map(|p| s * p / total).collect()
    }

    fn forcing(&self, s: f64) -> Vec3 {
        let a = self.activations(s);
        Vec3::from_fn(|axis, _| a.iter().zip(&self.weights[axis]).map(|(p, w)| p * w).sum())
    }
}

pub fn dmp_fit(demo: &DiscreteTrajectory, config: &DmpConfig) -> Result<DmpModel> {
    if demo.len() < 20 {
        return Err(Error::InvalidWaypoints(format!("DMP fit needs at least 20 samples, got {}", demo.len())));
    }
    if config.basis < 2 || config.steps_per_tau == 0 || config.n_samples < 2 {
        return Err(Error::InvalidParams("DMP basis, step count and sample count are too small".into()));
    }
    let t0 = demo.first().t;
    let tau = demo.duration();
    let start = demo.first().x;
    let goal = demo.last().x;
    if (goal - start).norm() < 1e-9 && demo.positions().all(|x| (x - start).norm() < 1e-9) {
        return Err(Error::DegenerateContext("demonstration does not move".into()));
    }
    let spline = interpolate(&demo.samples().iter().map(|s| (s.x, s.t - t0)).collect::<Vec<_>>())?;
    let (centers, widths) = basis(config);
    let mut model = DmpModel {
        config: config.clone(),
        tau,
        start,
        goal,
        initial_velocity: spline.velocity(0.0),
        centers,
        widths,
        weights: [vec![], vec![], vec![]],
    };

    let rows = 10 * demo.len();
    let k = config.basis;
    let mut design = DMatrix::<f64>::zeros(rows, k);
    let mut targets = [DVector::<f64>::zeros(rows), DVector::<f64>::zeros(rows), DVector::<f64>::zeros(rows)];
    for i in 0..rows {
        let t = tau * i as f64 / (rows - 1) as f64;
        let s = (-config.alpha_s * t / tau).exp();
        for (j, a) in model.activations(s).into_iter().enumerate() {
            design[(i, j)] = a;
        }
        let (y, dy, ddy) = (spline.position(t), spline.velocity(t), spline.acceleration(t));
        for axis in 0..3 {
            targets[axis][i] = tau * tau * ddy[axis]
                - config.alpha_z * (config.beta_z * (goal[axis] - y[axis]) - tau * dy[axis]);
        }
    }
    let gram = design.transpose() * &design + DMatrix::<f64>::identity(k, k) * config.regularization;
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::InvalidParams("DMP normal equations are singular".into()))?;
    for (weights, target) in model.weights.iter_mut().zip(&targets) {
        let rhs = design.transpose() * target;
        *weights = chol.solve(&rhs).iter().copied().collect();
    }
    Ok(model)
}

fn coupling(y: &Vec3, v: &Vec3, ctx: Option<&Context>, config: &DmpConfig) -> Vec3 {
    let Some(ctx) = ctx else { return Vec3::zeros() };
    let offset = y - ctx.obstacle_center;
    let dist = offset.norm();
    let clearance = (dist - ctx.obstacle_radius).max(1e-4);
    if clearance >= config.influence || dist == 0.0 {
        return Vec3::zeros();
    }
    let normal = offset / dist;
    let speed = v.norm();
    let strength = config.repulsion * (1.0 / clearance - 1.0 / config.influence) * speed;
    // Sideways part of the push steers around the obstacle instead of only
    // braking in front of it.
    let mut push = normal;
    if speed > 1e-9 {
        let heading = v / speed;
        let lateral = normal - heading * normal.dot(&heading);
        if lateral.norm() < 1e-6 {
            let up = Vec3::z();
            push += (up - heading * up.dot(&heading)).normalize();
        } else {
            push += lateral.normalize();
        }
    }
    push * strength
}

/// Integrates the DMP from `ctx.start` to `ctx.goal`, avoiding the context's
/// obstacle. Without a context, the trained start and goal are used and no
/// obstacle is present.
pub fn dmp_rollout(model: &DmpModel, ctx: Option<&Context>) -> Result<DiscreteTrajectory> {
    let dense = dmp_rollout_dense(model, ctx)?;
    dense.resample_linear(model.config.n_samples)
}

/// The rollout at every integration step.
pub fn dmp_rollout_dense(model: &DmpModel, ctx: Option<&Context>) -> Result<DiscreteTrajectory> {
    let config = &model.config;
    let (start, goal) = match ctx {
        Some(c) => (c.start, c.goal),
        None => (model.start, model.goal),
    };
    let tau = model.tau;
    let dt = tau / config.steps_per_tau as f64;
    let max_steps = (config.max_duration_factor * config.steps_per_tau as f64).ceil() as usize;
    let mut y = start;
    let mut z = model.initial_velocity * tau;
    let mut s = 1.0;
    let mut samples = vec![Sample { t: 0.0, x: y, v: model.initial_velocity }];
    for step in 1..=max_steps {
        let v = z / tau;
        let accel = (config.alpha_z * (config.beta_z * (goal - y) - z) + model.forcing(s)) / tau
            + coupling(&y, &v, ctx, config);
        z += accel * dt;
        y += z / tau * dt;
        s += -config.alpha_s * s / tau * dt;
        let t = step as f64 * dt;
        if !y.iter().chain(z.iter()).all(|c| c.is_finite()) || (y - start).norm() > 1e3 {
            return Err(Error::Diverged { time: t, position: [y.x, y.y, y.z], velocity: [v.x, v.y, v.z] });
        }
        samples.push(Sample { t, x: y, v: z / tau });
        if t >= tau && (y - goal).norm() <= config.goal_tolerance {
            return DiscreteTrajectory::new(samples);
        }
    }
    let v = z / tau;
    Err(Error::Diverged { time: max_steps as f64 * dt, position: [y.x, y.y, y.z], velocity: [v.x, v.y, v.z] })
}

/// Root-mean-square position error and Pearson correlation of speeds,
/// comparing the rollout with `reference` at the reference's sample times.
pub fn reproduction_quality(rollout: &DiscreteTrajectory, reference: &DiscreteTrajectory) -> (f64, f64) {
    let t0 = reference.first().t;
    let mut sq = 0.0;
    let mut a = Vec::with_capacity(reference.len());
    let mut b = Vec::with_capacity(reference.len());
    for s in reference.samples() {
        let state = rollout.state_at(s.t - t0 + rollout.first().t);
        sq += (state.x - s.x).norm_squared();
        a.push(state.v.norm());
        b.push(s.v.norm());
    }
    (
        (sq / reference.len() as f64).sqrt(),
        pearson(&a, &b),
    )
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    if va == 0.0 || vb == 0.0 {
        return 0.0;
    }
    cov / (va * vb).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pearson_of_affine_copy_is_one() {
        let a = [1.0, 2.0, 4.0, 3.0];
        let b: Vec<f64> = a.iter().map(|x| 2.0 * x + 1.0).collect();
        assert!((pearson(&a, &b) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_forcing_moves_to_goal() {
        let config = DmpConfig::default();
        let (centers, widths) = basis(&config);
        let model = DmpModel {
            tau: 2.0,
            start: Vec3::zeros(),
            goal: Vec3::new(0.3, -0.2, 0.1),
            initial_velocity: Vec3::zeros(),
            centers,
            widths,
            weights: [vec![0.0; 25], vec![0.0; 25], vec![0.0; 25]],
            config,
        };
        let out = dmp_rollout(&model, None).unwrap();
        assert!((out.last().x - model.goal).norm() <= 1e-3);
        // straight line: every sample is on the start-goal segment
        let dir = model.goal.normalize();
        for x in out.positions() {
            assert!((x - dir * x.dot(&dir)).norm() < 1e-9);
        }
    }
}
