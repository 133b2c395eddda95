//! Two-stage trajectory optimization.
//!
//! The path stage searches for the middle waypoint of a start/middle/goal
//! spline that maximizes human path reward plus the robot's path objective.
//! The velocity stage then keeps the resulting path and chooses segment
//! durations. The final plan is a spline through the segment end points at
//! the optimized times.

pub mod search;
pub mod velocity;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::features::{path_feature_count, robot_path_objective};
use crate::learning::WeightState;
use crate::trajectory::{
    interpolate, path_length, path_time_vector, resample, segment, Context, DiscreteTrajectory, Vec3,
};

pub use velocity::{optimize_velocity, velocity_objective, VelocityProblem, VelocitySolution};

/// Path-stage problem: everything needed to score a middle waypoint.
#[derive(Debug, Clone)]
pub struct PathProblem<'a> {
    pub ctx: &'a Context,
    pub theta_hp: Vec3,
    pub config: &'a Config,
}

/// Objective value of one candidate, with the path length used for ties.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub middle: Vec3,
    pub objective: f64,
    pub length: f64,
}

impl Candidate {
    /// Higher objective, then shorter path, then lexicographically smaller
    /// waypoint.
    pub fn better_than(&self, other: &Candidate) -> bool {
        if self.objective != other.objective {
            return self.objective > other.objective;
        }
        if self.length != other.length {
            return self.length < other.length;
        }
        for i in 0..3 {
            if self.middle[i] != other.middle[i] {
                return self.middle[i] < other.middle[i];
            }
        }
        false
    }
}

impl<'a> PathProblem<'a> {
    pub fn new(ctx: &'a Context, theta_hp: Vec3, config: &'a Config) -> Self {
        Self { ctx, theta_hp, config }
    }

    pub fn in_bounds(&self, middle: &Vec3) -> bool {
        self.ctx.contains(middle)
    }

    /// The resampled spline through start, `middle` and goal.
    pub fn trajectory(&self, middle: &Vec3) -> Result<DiscreteTrajectory> {
        path_trajectory(self.ctx, middle, self.config.planner.t_goal, self.config.planner.n_samples)
    }

    pub fn candidate(&self, middle: &Vec3) -> Result<Candidate> {
        let traj = self.trajectory(middle)?;
        let human = self.theta_hp.dot(&path_feature_count(&traj, self.ctx, &self.config.path_features));
        let robot = robot_path_objective(&traj, self.ctx, &self.config.robot);
        Ok(Candidate { middle: *middle, objective: human + robot, length: path_length(&traj) })
    }

    /// Like [`PathProblem::candidate`], with failures scored as the worst value.
    pub fn score(&self, middle: &Vec3) -> Candidate {
        self.candidate(middle).unwrap_or(Candidate {
            middle: *middle,
            objective: f64::NEG_INFINITY,
            length: f64::INFINITY,
        })
    }
}

pub fn path_trajectory(ctx: &Context, middle: &Vec3, t_goal: f64, n: usize) -> Result<DiscreteTrajectory> {
    let times = path_time_vector(&ctx.start, middle, &ctx.goal, t_goal)?;
    let spline = interpolate(&[(ctx.start, times[0]), (*middle, times[1]), (ctx.goal, times[2])])?;
    resample(&spline, n)
}

/// Human path reward plus robot path objective for a middle waypoint.
pub fn path_objective(middle: &Vec3, problem: &PathProblem) -> Result<f64> {
    if !problem.in_bounds(middle) {
        return Err(Error::OutOfBounds([middle.x, middle.y, middle.z]));
    }
    Ok(problem.candidate(middle)?.objective)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSolution {
    pub waypoints: [Vec3; 3],
    pub objective: f64,
    pub length: f64,
    pub evaluations: usize,
    pub restarts: usize,
    pub converged: bool,
    /// Best objective found by the seeding grid alone.
    pub grid_best: f64,
}

impl PathSolution {
    pub fn middle(&self) -> Vec3 {
        self.waypoints[1]
    }
}

/// Grid points per axis spanning the workspace box, bounds included.
pub fn grid_axis(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| if i + 1 == count { hi } else { lo + (hi - lo) * i as f64 / (count - 1) as f64 })
        .collect()
}

/// All grid points of the workspace box with `count` points per axis, in
/// x-major order.
pub fn grid_points(ctx: &Context, count: usize) -> Vec<Vec3> {
    let axes: Vec<Vec<f64>> = (0..3)
        .map(|i| grid_axis(ctx.workspace_low[i], ctx.workspace_upp[i], count))
        .collect();
    let mut points = Vec::with_capacity(count * count * count);
    for x in &axes[0] {
        for y in &axes[1] {
            for z in &axes[2] {
                points.push(Vec3::new(*x, *y, *z));
            }
        }
    }
    points
}

/// Coarse grid scan over the workspace box, then Nelder-Mead refinement of
/// the best few cells; returns the best candidate seen.
pub fn optimize_path(problem: &PathProblem, progress: &dyn Fn(f64)) -> Result<PathSolution> {
    let settings = &problem.config.planner;
    let ctx = problem.ctx;
    let points = grid_points(ctx, settings.grid);
    let mut scored: Vec<Candidate> = points.par_iter().map(|p| problem.score(p)).collect();
    let mut evaluations = scored.len();
    progress(evaluations as f64 / settings.max_path_evals as f64);

    scored.sort_by(|a, b| {
        if a.better_than(b) {
            std::cmp::Ordering::Less
        } else if b.better_than(a) {
            std::cmp::Ordering::Greater
        } else {
            std::cmp::Ordering::Equal
        }
    });
    let grid_best = scored[0].objective;
    let mut best = scored[0];

    let lo: Vec<f64> = ctx.workspace_low.iter().copied().collect();
    let hi: Vec<f64> = ctx.workspace_upp.iter().copied().collect();
    let step: Vec<f64> = (0..3).map(|i| 0.5 * (hi[i] - lo[i]) / (settings.grid - 1) as f64).collect();
    let seeds: Vec<Candidate> = scored.into_iter().take(settings.seeds).collect();
    let remaining = settings.max_path_evals.saturating_sub(evaluations);
    let per_seed = (remaining / seeds.len().max(1)).max(1);
    let mut all_converged = true;
    for seed in &seeds {
        let mut local_best = *seed;
        let result = search::nelder_mead(
            |x| {
                let c = problem.score(&Vec3::new(x[0], x[1], x[2]));
                if c.better_than(&local_best) {
                    local_best = c;
                }
                c.objective
            },
            seed.middle.as_slice(),
            &step,
            &lo,
            &hi,
            settings.tolerance,
            per_seed,
        );
        evaluations += result.evaluations;
        all_converged &= result.converged;
        if local_best.better_than(&best) {
            best = local_best;
        }
        progress((evaluations as f64 / settings.max_path_evals as f64).min(1.0));
    }

    Ok(PathSolution {
        waypoints: [ctx.start, best.middle, ctx.goal],
        objective: best.objective,
        length: best.length,
        evaluations,
        restarts: seeds.len(),
        converged: all_converged,
        grid_best,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanDiagnostics {
    pub path_evaluations: usize,
    pub velocity_evaluations: usize,
    pub restarts: usize,
    pub path_converged: bool,
    pub velocity_converged: bool,
    /// Some sample lies inside the obstacle.
    pub collision: bool,
    pub min_obstacle_distance: f64,
    /// Samples outside the workspace box.
    pub outside_workspace: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub trajectory: DiscreteTrajectory,
    pub path: DiscreteTrajectory,
    pub middle_waypoint: Vec3,
    /// End points of the velocity segments, p_1..p_M.
    pub segment_waypoints: Vec<Vec3>,
    /// Segment end times t_1..t_M.
    pub timestamps: Vec<f64>,
    pub durations: Vec<f64>,
    pub path_objective: f64,
    pub velocity_objective: f64,
    pub diagnostics: PlanDiagnostics,
}

/// Spline through the start and the segment end points at the given times,
/// resampled to `n` samples.
pub fn assemble(start: &Vec3, waypoints: &[Vec3], timestamps: &[f64], n: usize) -> Result<DiscreteTrajectory> {
    if waypoints.len() != timestamps.len() {
        return Err(Error::DimensionMismatch { expected: waypoints.len(), actual: timestamps.len() });
    }
    let knots: Vec<(Vec3, f64)> = std::iter::once((*start, 0.0))
        .chain(waypoints.iter().copied().zip(timestamps.iter().copied()))
        .collect();
    resample(&interpolate(&knots)?, n)
}

pub fn plan(weights: &WeightState, ctx: &Context, config: &Config) -> Result<PlanResult> {
    plan_with_progress(weights, ctx, config, &|_| {})
}

/// Path stage, segmentation, velocity stage and assembly. `progress` receives
/// the consumed fraction of the evaluation budget.
pub fn plan_with_progress(
    weights: &WeightState,
    ctx: &Context,
    config: &Config,
    progress: &(dyn Fn(f64) + Sync),
) -> Result<PlanResult> {
    ctx.validate()?;
    config.validate(Some(ctx))?;
    weights.validate(config.velocity_dim())?;
    let settings = &config.planner;
    let budget = (settings.max_path_evals + settings.max_velocity_evals) as f64;
    let path_share = settings.max_path_evals as f64 / budget;

    let problem = PathProblem::new(ctx, weights.theta_hp, config);
    let path_solution = optimize_path(&problem, &|f| progress(f * path_share))?;
    let path = problem.trajectory(&path_solution.middle())?;
    let segs = segment(&path, settings.n_segments, ctx)?;

    let velocity_problem = VelocityProblem::from_segments(&segs, &weights.theta_hv, config)?;
    let velocity_solution =
        optimize_velocity(&velocity_problem, &|f| progress(path_share + f * (1.0 - path_share)))?;

    let segment_waypoints: Vec<Vec3> = segs.segments.iter().map(|s| s.end_waypoint).collect();
    let trajectory = assemble(&ctx.start, &segment_waypoints, &velocity_solution.timestamps, settings.n_samples)?;
    let min_obstacle_distance = trajectory.min_distance_to(&ctx.obstacle_center);
    let diagnostics = PlanDiagnostics {
        path_evaluations: path_solution.evaluations,
        velocity_evaluations: velocity_solution.evaluations,
        restarts: path_solution.restarts,
        path_converged: path_solution.converged,
        velocity_converged: velocity_solution.converged,
        collision: min_obstacle_distance < ctx.obstacle_radius,
        min_obstacle_distance,
        outside_workspace: trajectory.positions().filter(|x| !ctx.contains(x)).count(),
    };
    progress(1.0);
    Ok(PlanResult {
        trajectory,
        path,
        middle_waypoint: path_solution.middle(),
        segment_waypoints,
        timestamps: velocity_solution.timestamps,
        durations: velocity_solution.durations,
        path_objective: path_solution.objective,
        velocity_objective: velocity_solution.objective,
        diagnostics,
    })
}
