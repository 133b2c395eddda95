//! Exhaustive reference solvers for both planning stages.

use rayon::prelude::*;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::planner::velocity::timestamps_from_durations;
use crate::planner::{grid_points, Candidate, PathProblem, VelocityProblem};
use crate::trajectory::{Context, Vec3};

/// Best middle waypoint on a `resolution`³ grid over the workspace box.
pub fn brute_force_path(theta_hp: &Vec3, ctx: &Context, config: &Config, resolution: usize) -> Result<(Vec3, f64)> {
    if resolution < 11 {
        return Err(Error::InvalidParams(format!("oracle resolution {resolution} is below 11")));
    }
    let problem = PathProblem::new(ctx, *theta_hp, config);
    let best = grid_points(ctx, resolution)
        .par_iter()
        .map(|p| problem.score(p))
        .reduce_with(|a: Candidate, b: Candidate| if b.better_than(&a) { b } else { a })
        .expect("grid is not empty");
    Ok((best.middle, best.objective))
}

/// Best assignment of discrete speeds to segments, each assignment projected
/// onto the timing constraints before scoring. Exhaustive for up to eight
/// segments, coordinate descent to a fixpoint beyond that.
///
/// Returns segment end times and the objective.
pub fn brute_force_velocity(problem: &VelocityProblem, levels: &[f64]) -> Result<(Vec<f64>, f64)> {
    problem.check()?;
    if levels.is_empty() || levels.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidParams("speed levels must be positive".into()));
    }
    let m = problem.lengths.len();
    let score = |assignment: &[usize]| {
        let durations: Vec<f64> = assignment
            .iter()
            .enumerate()
            .map(|(r, i)| problem.lengths[r] / levels[*i])
            .collect();
        let projected = problem.project(&durations);
        let value = problem.objective_for_durations(&projected);
        (projected, value)
    };
    let (durations, value) = if m <= 8 {
        exhaustive(m, levels.len(), &score)
    } else {
        coordinate_descent(m, levels.len(), &score)
    };
    Ok((timestamps_from_durations(&durations), value))
}

fn decode(mut index: usize, m: usize, k: usize) -> Vec<usize> {
    let mut out = vec![0; m];
    for slot in out.iter_mut().rev() {
        *slot = index % k;
        index /= k;
    }
    out
}

fn exhaustive<F>(m: usize, k: usize, score: &F) -> (Vec<f64>, f64)
where
    F: Fn(&[usize]) -> (Vec<f64>, f64) + Sync,
{
    let total = k.pow(m as u32);
    let (_, (durations, value)) = (0..total)
        .into_par_iter()
        .map(|i| (i, score(&decode(i, m, k))))
        .reduce_with(|a, b| if b.1 .1 > a.1 .1 || (b.1 .1 == a.1 .1 && b.0 < a.0) { b } else { a })
        .expect("at least one assignment");
    (durations, value)
}

/// Coordinate descent over level assignments, started from every uniform
/// assignment; the best fixpoint wins.
pub fn coordinate_descent<F>(m: usize, k: usize, score: &F) -> (Vec<f64>, f64)
where
    F: Fn(&[usize]) -> (Vec<f64>, f64) + Sync,
{
    (0..k)
        .into_par_iter()
        .map(|start| {
            let mut assignment = vec![start; m];
            let mut best = score(&assignment);
            loop {
                let mut improved = false;
                for r in 0..m {
                    let keep = assignment[r];
                    let mut choice = keep;
                    for level in (0..k).filter(|l| *l != keep) {
                        assignment[r] = level;
                        let candidate = score(&assignment);
                        if candidate.1 > best.1 {
                            best = candidate;
                            choice = level;
                            improved = true;
                        }
                    }
                    assignment[r] = choice;
                }
                if !improved {
                    break;
                }
            }
            (start, best)
        })
        .reduce_with(|a, b| if b.1 .1 > a.1 .1 || (b.1 .1 == a.1 .1 && b.0 < a.0) { b } else { a })
        .map(|(_, best)| best)
        .expect("at least one level")
}
