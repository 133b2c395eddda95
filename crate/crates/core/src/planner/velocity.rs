//! Velocity stage: with the path fixed, choose how long each segment takes.
//!
//! Decision variables are segment durations rather than timestamps, so the
//! speed limits become per-segment boxes and the total-time bound is a single
//! sum constraint.

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::features::{robot_speed_reward, velocity_rbf, RobotObjectiveParams, VelocityFeatureParams};
use crate::trajectory::SegmentSet;

// Keeps speeds and the total duration strictly inside their limits after the
// durations are accumulated into timestamps.
const MARGIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct VelocityProblem {
    pub lengths: Vec<f64>,
    /// Whether each segment falls in the close bin.
    pub close: Vec<bool>,
    pub theta_hv: Vec<f64>,
    pub velocity: VelocityFeatureParams,
    pub robot: RobotObjectiveParams,
    pub t_upp: f64,
    pub max_evals: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocitySolution {
    pub durations: Vec<f64>,
    /// Cumulative end times t_1..t_M (t_0 = 0).
    pub timestamps: Vec<f64>,
    pub objective: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl VelocityProblem {
    /// Builds the problem from a segmented path; `t_upp` defaults to
    /// `t_upp_factor * length / v_robot`.
    pub fn from_segments(segs: &SegmentSet, theta_hv: &[f64], config: &Config) -> Result<Self> {
        let velocity = config.velocity_features.clone();
        if theta_hv.len() != 2 * velocity.n {
            return Err(Error::DimensionMismatch { expected: 2 * velocity.n, actual: theta_hv.len() });
        }
        let lengths: Vec<f64> = segs.segments.iter().map(|s| s.arc_length).collect();
        let close = segs.segments.iter().map(|s| s.obstacle_distance < velocity.d_c).collect();
        let total: f64 = lengths.iter().sum();
        let problem = Self {
            t_upp: config.planner.t_upp_factor * total / config.robot.v_robot,
            lengths,
            close,
            theta_hv: theta_hv.to_vec(),
            velocity,
            robot: config.robot.clone(),
            max_evals: config.planner.max_velocity_evals,
        };
        problem.check()?;
        Ok(problem)
    }

    pub fn check(&self) -> Result<()> {
        if self.lengths.is_empty() || self.lengths.len() != self.close.len() {
            return Err(Error::InfeasibleTiming("segment data is inconsistent".into()));
        }
        if let Some(r) = self.lengths.iter().position(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(Error::InfeasibleTiming(format!("segment {r} has zero length")));
        }
        if self.theta_hv.len() != 2 * self.velocity.n {
            return Err(Error::DimensionMismatch { expected: 2 * self.velocity.n, actual: self.theta_hv.len() });
        }
        let fastest: f64 = self.lengths.iter().sum::<f64>() / self.velocity.v_max;
        if !(self.t_upp >= fastest) {
            return Err(Error::InfeasibleTiming(format!(
                "duration bound {:.4} s is below the fastest feasible duration {:.4} s",
                self.t_upp, fastest
            )));
        }
        Ok(())
    }

    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let lo = self.lengths.iter().map(|l| l / self.velocity.v_max * (1.0 + MARGIN)).collect();
        let hi = self.lengths.iter().map(|l| l / self.velocity.v_min * (1.0 - MARGIN)).collect();
        (lo, hi)
    }

    pub fn time_budget(&self) -> f64 {
        self.t_upp * (1.0 - MARGIN)
    }

    fn weights(&self, close: bool) -> &[f64] {
        let n = self.velocity.n;
        if close {
            &self.theta_hv[..n]
        } else {
            &self.theta_hv[n..]
        }
    }

    /// Human plus robot reward of segment `r` travelled at `speed`.
    pub fn segment_reward(&self, r: usize, speed: f64) -> f64 {
        let human: f64 = self
            .weights(self.close[r])
            .iter()
            .zip(velocity_rbf(speed, &self.velocity))
            .map(|(w, psi)| w * psi)
            .sum();
        human + self.robot.theta_rv * robot_speed_reward(speed, &self.velocity, &self.robot)
    }

    pub fn objective_for_durations(&self, durations: &[f64]) -> f64 {
        durations
            .iter()
            .enumerate()
            .map(|(r, d)| self.segment_reward(r, self.lengths[r] / d))
            .sum()
    }

    /// Euclidean projection onto the duration box intersected with the
    /// total-time constraint.
    pub fn project(&self, durations: &[f64]) -> Vec<f64> {
        let (lo, hi) = self.bounds();
        let budget = self.time_budget();
        let shifted = |mu: f64| -> Vec<f64> {
            durations
                .iter()
                .enumerate()
                .map(|(r, d)| (d - mu).clamp(lo[r], hi[r]))
                .collect()
        };
        let clamped = shifted(0.0);
        if clamped.iter().sum::<f64>() <= budget {
            return clamped;
        }
        let (mut a, mut b) = (0.0, durations.iter().zip(&lo).map(|(d, l)| d - l).fold(0.0, f64::max));
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if shifted(mid).iter().sum::<f64>() > budget {
                a = mid;
            } else {
                b = mid;
            }
        }
        shifted(b)
    }

    fn feasible(&self, durations: &[f64], lo: &[f64], hi: &[f64]) -> bool {
        durations.iter().enumerate().all(|(r, d)| *d >= lo[r] && *d <= hi[r])
            && durations.iter().sum::<f64>() <= self.time_budget()
    }
}

/// Objective for segment end timestamps `t_1..t_M` (start at t = 0).
pub fn velocity_objective(timestamps: &[f64], problem: &VelocityProblem) -> Result<f64> {
    if timestamps.len() != problem.lengths.len() {
        return Err(Error::DimensionMismatch { expected: problem.lengths.len(), actual: timestamps.len() });
    }
    let mut durations = Vec::with_capacity(timestamps.len());
    let mut prev = 0.0;
    for (r, t) in timestamps.iter().enumerate() {
        let d = t - prev;
        if !(d > 0.0) {
            return Err(Error::InfeasibleTiming(format!("timestamp {r} does not increase")));
        }
        let speed = problem.lengths[r] / d;
        if speed < problem.velocity.v_min || speed > problem.velocity.v_max {
            return Err(Error::InfeasibleTiming(format!("segment {r} speed {speed:.4} m/s outside limits")));
        }
        durations.push(d);
        prev = *t;
    }
    if prev > problem.t_upp {
        return Err(Error::InfeasibleTiming(format!("total duration {prev:.4} s exceeds {:.4} s", problem.t_upp)));
    }
    Ok(problem.objective_for_durations(&durations))
}

pub fn timestamps_from_durations(durations: &[f64]) -> Vec<f64> {
    durations
        .iter()
        .scan(0.0, |acc, d| {
            *acc += d;
            Some(*acc)
        })
        .collect()
}

/// Seeds each segment at its best basis-function center speed, improves the
/// seed by coordinate moves over center speeds, then refines continuously
/// with a compass search that also shifts time between segment pairs.
pub fn optimize_velocity(problem: &VelocityProblem, progress: &dyn Fn(f64)) -> Result<VelocitySolution> {
    problem.check()?;
    let m = problem.lengths.len();
    let (lo, hi) = problem.bounds();
    let budget = problem.time_budget();
    let levels = problem.velocity.center_speeds();
    let mut evals = 0usize;
    let report = |evals: usize| progress((evals as f64 / problem.max_evals as f64).min(1.0));

    let level_duration = |r: usize, speed: f64| (problem.lengths[r] / speed).clamp(lo[r], hi[r]);
    let mut rewards = vec![0.0; m];
    let mut durations: Vec<f64> = (0..m)
        .map(|r| {
            let (best, value) = levels
                .iter()
                .map(|s| {
                    let d = level_duration(r, *s);
                    (d, problem.segment_reward(r, problem.lengths[r] / d))
                })
                .fold((f64::NAN, f64::NEG_INFINITY), |acc, c| if c.1 > acc.1 { c } else { acc });
            evals += levels.len();
            rewards[r] = value;
            best
        })
        .collect();
    if durations.iter().sum::<f64>() > budget {
        durations = problem.project(&durations);
        for r in 0..m {
            rewards[r] = problem.segment_reward(r, problem.lengths[r] / durations[r]);
        }
        evals += 1;

        // Coordinate moves over center speeds that keep the budget.
        let mut improved = true;
        while improved && evals < problem.max_evals {
            improved = false;
            for r in 0..m {
                for s in &levels {
                    let d = level_duration(r, *s);
                    let total: f64 = (0..m).map(|k| if k == r { d } else { durations[k] }).sum();
                    if total > budget {
                        continue;
                    }
                    let v = problem.segment_reward(r, problem.lengths[r] / d);
                    evals += 1;
                    if v > rewards[r] + 1e-15 {
                        durations[r] = d;
                        rewards[r] = v;
                        improved = true;
                    }
                }
            }
        }
    }
    report(evals);

    let mut step = 0.25;
    let min_step = 1e-9;
    let width: Vec<f64> = (0..m).map(|r| hi[r] - lo[r]).collect();
    let min_width = width.iter().cloned().fold(f64::INFINITY, f64::min);
    let reward = |r: usize, d: f64| problem.segment_reward(r, problem.lengths[r] / d);
    let mut converged = false;
    while evals < problem.max_evals {
        let mut moved = false;
        for r in 0..m {
            for sign in [1.0, -1.0] {
                let d = durations[r] + sign * step * width[r];
                if d < lo[r] || d > hi[r] {
                    continue;
                }
                let total: f64 = (0..m).map(|k| if k == r { d } else { durations[k] }).sum();
                if total > budget {
                    continue;
                }
                let v = reward(r, d);
                evals += 1;
                if v > rewards[r] {
                    durations[r] = d;
                    rewards[r] = v;
                    moved = true;
                }
            }
        }
        if !moved {
            // Shift time between two segments, keeping the total fixed.
            let delta = step * min_width;
            'pairs: for a in 0..m {
                for b in 0..m {
                    if a == b {
                        continue;
                    }
                    let (da, db) = (durations[a] + delta, durations[b] - delta);
                    if da > hi[a] || db < lo[b] {
                        continue;
                    }
                    // rounding can move the total by a few ulps
                    let total: f64 = (0..m)
                        .map(|r| if r == a { da } else if r == b { db } else { durations[r] })
                        .sum();
                    if total > budget {
                        continue;
                    }
                    let (va, vb) = (reward(a, da), reward(b, db));
                    evals += 2;
                    if va + vb > rewards[a] + rewards[b] {
                        durations[a] = da;
                        durations[b] = db;
                        rewards[a] = va;
                        rewards[b] = vb;
                        moved = true;
                        break 'pairs;
                    }
                }
            }
        }
        if !moved {
            step *= 0.5;
            if step < min_step {
                converged = true;
                break;
            }
        }
        if evals % 512 < 2 * m {
            report(evals);
        }
    }
    report(problem.max_evals);

    debug_assert!(problem.feasible(&durations, &lo, &hi));
    let objective = problem.objective_for_durations(&durations);
    Ok(VelocitySolution {
        timestamps: timestamps_from_durations(&durations),
        durations,
        objective,
        evaluations: evals,
        converged,
    })
}
