//! Simulated demonstrator with known reward weights, reference solvers, the
//! DMP baseline and the closed-loop experiments built on them.

pub mod compare;
pub mod dmp;
pub mod oracle;
pub mod presets;

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::features::{path_feature_count, robot_path_objective, velocity_bins};
use crate::learning::{FeedbackMode, Session, WeightState};
use crate::metrics::{feature_errors, normalized_distance, FeatureErrors};
use crate::planner::{assemble, optimize_velocity, path_trajectory, plan, PlanResult, VelocityProblem};
use crate::trajectory::{segment, Context, DiscreteTrajectory, Vec3};

pub use oracle::{brute_force_path, brute_force_velocity};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTruthUser {
    pub theta_true_p: Vec3,
    pub theta_true_v: Vec<f64>,
    /// Standard deviation of the middle-waypoint perturbation, m.
    pub noise_sigma_pos: f64,
    /// Standard deviation of the log-duration perturbation.
    pub noise_sigma_dur: f64,
    pub seed: u64,
}

impl GroundTruthUser {
    pub fn validate(&self, config: &Config) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.noise_sigma_pos >= 0.0 && self.noise_sigma_pos.is_finite()) {
            problems.push("noise_sigma_pos: must be non-negative".to_string());
        }
        if !(self.noise_sigma_dur >= 0.0 && self.noise_sigma_dur.is_finite()) {
            problems.push("noise_sigma_dur: must be non-negative".to_string());
        }
        if self.theta_true_v.len() != config.velocity_dim() {
            problems.push(format!(
                "theta_true_v: expected {} entries, got {}",
                config.velocity_dim(),
                self.theta_true_v.len()
            ));
        }
        if self.theta_true_p.iter().chain(&self.theta_true_v).any(|w| !w.is_finite()) {
            problems.push("theta_true: weights must be finite".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Schema(problems))
        }
    }

    pub fn weights(&self) -> WeightState {
        WeightState {
            theta_hp: self.theta_true_p,
            theta_hv: self.theta_true_v.clone(),
            alpha: 1.0,
            iteration: 0,
            clamp: None,
        }
    }

    pub fn noiseless(&self) -> bool {
        self.noise_sigma_pos == 0.0 && self.noise_sigma_dur == 0.0
    }

    /// The same user with one path weight negated.
    pub fn flipped(&self, index: usize) -> GroundTruthUser {
        let mut out = self.clone();
        out.theta_true_p[index] = -out.theta_true_p[index];
        out
    }

    /// Total reward of a trajectory under the true weights plus the robot's
    /// own objective terms.
    pub fn true_reward(&self, traj: &DiscreteTrajectory, ctx: &Context, config: &Config) -> Result<f64> {
        let traj = traj.resample_linear(config.planner.n_samples)?;
        let segs = segment(&traj, config.planner.n_segments, ctx)?;
        let path = self.theta_true_p.dot(&path_feature_count(&traj, ctx, &config.path_features))
            + robot_path_objective(&traj, ctx, &config.robot);
        let bins = velocity_bins(&segs, &config.velocity_features);
        let n = config.velocity_features.n;
        let velocity: f64 = self.theta_true_v[..n].iter().zip(&bins.close).map(|(w, p)| w * p).sum::<f64>()
            + self.theta_true_v[n..].iter().zip(&bins.far).map(|(w, p)| w * p).sum::<f64>()
            + crate::features::robot_velocity_objective(&segs, &config.velocity_features, &config.robot);
        Ok(path + velocity)
    }
}

/// Produces demonstrations for one user, drawing noise from a generator
/// seeded with the user's seed.
#[derive(Debug, Clone)]
pub struct Demonstrator {
    user: GroundTruthUser,
    rng: ChaCha8Rng,
}

impl Demonstrator {
    pub fn new(user: GroundTruthUser) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(user.seed);
        Self { user, rng }
    }

    pub fn user(&self) -> &GroundTruthUser {
        &self.user
    }

    /// Plans with the true weights, then perturbs the middle waypoint and
    /// the segment durations.
    pub fn demonstrate(&mut self, ctx: &Context, config: &Config) -> Result<DiscreteTrajectory> {
        self.user.validate(config)?;
        let optimum = plan(&self.user.weights(), ctx, config)?;
        self.perturb(&optimum, ctx, config)
    }

    pub fn perturb(&mut self, optimum: &PlanResult, ctx: &Context, config: &Config) -> Result<DiscreteTrajectory> {
        if self.user.noiseless() {
            return Ok(optimum.trajectory.clone());
        }
        let settings = &config.planner;
        let mut middle = optimum.middle_waypoint;
        for i in 0..3 {
            let z: f64 = StandardNormal.sample(&mut self.rng);
            middle[i] = (middle[i] + self.user.noise_sigma_pos * z).clamp(ctx.workspace_low[i], ctx.workspace_upp[i]);
        }
        let path = path_trajectory(ctx, &middle, settings.t_goal, settings.n_samples)?;
        let segs = segment(&path, settings.n_segments, ctx)?;
        let problem = VelocityProblem::from_segments(&segs, &self.user.theta_true_v, config)?;
        // The user times the perturbed path optimally, up to duration noise.
        let timing = optimize_velocity(&problem, &|_| {})?;
        let durations: Vec<f64> = timing
            .durations
            .iter()
            .map(|d| {
                let z: f64 = StandardNormal.sample(&mut self.rng);
                d * (self.user.noise_sigma_dur * z).exp()
            })
            .collect();
        let durations = problem.project(&durations);
        let waypoints: Vec<Vec3> = segs.segments.iter().map(|s| s.end_waypoint).collect();
        let timestamps = crate::planner::velocity::timestamps_from_durations(&durations);
        assemble(&ctx.start, &waypoints, &timestamps, settings.n_samples)
    }
}

/// Noise-free demonstration of `user` in `ctx`.
pub fn oracle_demonstration(user: &GroundTruthUser, ctx: &Context, config: &Config) -> Result<DiscreteTrajectory> {
    user.validate(config)?;
    Ok(plan(&user.weights(), ctx, config)?.trajectory)
}

/// Two trajectories that each break one taught path preference: the first
/// plans with the height weight negated, the second with the side weight
/// negated.
pub fn make_dummies(user: &GroundTruthUser, ctx: &Context, config: &Config) -> Result<[PlanResult; 2]> {
    user.validate(config)?;
    Ok([plan(&user.flipped(0).weights(), ctx, config)?, plan(&user.flipped(2).weights(), ctx, config)?])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopSettings {
    pub max_iters: usize,
    pub alpha: f64,
    /// Training stops once the total feature error of the plan drops below
    /// this value.
    pub tolerance: f64,
}

impl Default for LoopSettings {
    fn default() -> Self {
        Self { max_iters: 10, alpha: 0.1, tolerance: 1e-3 }
    }
}

/// Scores of one trajectory against the noiseless demonstration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub errors: FeatureErrors,
    pub normalized_distance: f64,
    pub collision: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub index: usize,
    pub context: Context,
    pub plan: Score,
    pub dummy_height: Score,
    pub dummy_side: Score,
    pub planned: DiscreteTrajectory,
    pub reference: DiscreteTrajectory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub user: GroundTruthUser,
    pub settings: LoopSettings,
    /// Feature errors of the plan before each update; entry `k` follows `k`
    /// updates.
    pub errors: Vec<FeatureErrors>,
    /// True reward of the noiseless demonstration minus that of the plan.
    pub regret: Vec<f64>,
    pub weights: Vec<WeightState>,
    pub training: ScenarioReport,
    pub generalization: Vec<ScenarioReport>,
    /// Wall-clock seconds per training iteration; left out of documents so
    /// repeated runs serialize identically.
    #[serde(skip)]
    pub iteration_seconds: Vec<f64>,
    #[serde(skip)]
    pub total_seconds: f64,
}

impl ExperimentReport {
    pub fn totals(&self) -> Vec<f64> {
        self.errors.iter().map(|e| e.total()).collect()
    }

    /// Number of updates performed during training.
    pub fn updates(&self) -> usize {
        self.errors.len() - 1
    }
}

fn score(traj: &PlanResult, reference: &DiscreteTrajectory, ctx: &Context, config: &Config) -> Result<Score> {
    Ok(Score {
        errors: feature_errors(&traj.trajectory, reference, ctx, config)?,
        normalized_distance: normalized_distance(&traj.trajectory, reference, ctx, config.planner.n_samples)?,
        collision: traj.diagnostics.collision,
    })
}

fn scenario_report(
    index: usize,
    user: &GroundTruthUser,
    weights: &WeightState,
    ctx: &Context,
    config: &Config,
) -> Result<ScenarioReport> {
    let reference = oracle_demonstration(user, ctx, config)?;
    let planned = plan(weights, ctx, config)?;
    let [height, side] = make_dummies(user, ctx, config)?;
    Ok(ScenarioReport {
        index,
        context: ctx.clone(),
        plan: score(&planned, &reference, ctx, config)?,
        dummy_height: score(&height, &reference, ctx, config)?,
        dummy_side: score(&side, &reference, ctx, config)?,
        planned: planned.trajectory,
        reference,
    })
}

/// Trains a session on the first scenario with demonstrations from `user`,
/// then plans the remaining scenarios with the learned weights.
pub fn run_closed_loop(
    user: &GroundTruthUser,
    scenarios: &[Context],
    settings: &LoopSettings,
    config: &Config,
) -> Result<ExperimentReport> {
    let started = Instant::now();
    let training_ctx = scenarios
        .first()
        .ok_or_else(|| Error::InvalidParams("the experiment needs at least one scenario".into()))?;
    user.validate(config)?;
    let optimum = plan(&user.weights(), training_ctx, config)?;
    let reference = optimum.trajectory.clone();
    let true_best = user.true_reward(&reference, training_ctx, config)?;

    let mut session = Session::new(training_ctx.clone(), config.clone(), settings.alpha)?;
    let mut demonstrator = Demonstrator::new(user.clone());
    let mut errors = Vec::new();
    let mut regret = Vec::new();
    let mut iteration_seconds = Vec::new();
    loop {
        let tick = Instant::now();
        let planned = session.replan()?.clone();
        let e = feature_errors(&planned.trajectory, &reference, training_ctx, config)?;
        errors.push(e);
        regret.push(true_best - user.true_reward(&planned.trajectory, training_ctx, config)?);
        if e.total() < settings.tolerance || errors.len() > settings.max_iters {
            iteration_seconds.push(tick.elapsed().as_secs_f64());
            break;
        }
        let demo = if user.noiseless() {
            reference.clone()
        } else {
            demonstrator.perturb(&optimum, training_ctx, config)?
        };
        session.step(&demo, FeedbackMode::Both)?;
        iteration_seconds.push(tick.elapsed().as_secs_f64());
    }

    let learned = session.weights().clone();
    let training = scenario_report(0, user, &learned, training_ctx, config)?;
    let generalization = scenarios
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, ctx)| scenario_report(i, user, &learned, ctx, config))
        .collect::<Result<Vec<_>>>()?;

    Ok(ExperimentReport {
        user: user.clone(),
        settings: settings.clone(),
        errors,
        regret,
        weights: session.weight_history().cloned().collect(),
        training,
        generalization,
        iteration_seconds,
        total_seconds: started.elapsed().as_secs_f64(),
    })
}
