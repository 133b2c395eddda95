//! Fixture scenes and users shared by the experiments, tests and CLI.

use crate::trajectory::{Context, Vec3};

use super::GroundTruthUser;

fn workspace(start: Vec3, goal: Vec3, obstacle: Vec3, radius: f64) -> Context {
    Context {
        start,
        goal,
        obstacle_center: obstacle,
        obstacle_radius: radius,
        table_height: 0.0,
        workspace_low: Vec3::new(0.05, -0.8, 0.02),
        workspace_upp: Vec3::new(0.9, 0.8, 0.6),
        robot_base: Vec3::zeros(),
    }
}

/// Training scene: a sweep across the table with the obstacle near the
/// middle of the straight line.
pub fn scenario_1() -> Context {
    workspace(Vec3::new(0.40, 0.50, 0.10), Vec3::new(0.40, -0.55, 0.10), Vec3::new(0.37, 0.03, 0.10), 0.05)
}

pub fn scenario_2() -> Context {
    workspace(Vec3::new(0.55, 0.35, 0.10), Vec3::new(0.30, -0.35, 0.10), Vec3::new(0.40, 0.0, 0.12), 0.05)
}

pub fn scenario_3() -> Context {
    workspace(Vec3::new(0.30, 0.45, 0.10), Vec3::new(0.60, -0.35, 0.15), Vec3::new(0.50, 0.05, 0.10), 0.05)
}

pub fn scenarios() -> Vec<Context> {
    vec![scenario_1(), scenario_2(), scenario_3()]
}

/// The training scene with the obstacle moved along the sweep.
pub fn relocated_obstacle() -> Context {
    let mut ctx = scenario_1();
    ctx.obstacle_center = Vec3::new(0.40, -0.25, 0.10);
    ctx
}

/// Prefers passing on the robot side of the obstacle, carrying the object
/// high, moving slowly near the obstacle and briskly elsewhere. Indifferent
/// to the distance feature.
pub fn reference_user(seed: u64) -> GroundTruthUser {
    GroundTruthUser {
        theta_true_p: Vec3::new(0.10, 0.0, 0.05),
        theta_true_v: vec![
            0.3, 0.5, 0.3, 0.0, -0.2, -0.3, -0.3, -0.3, -0.3, //
            -0.2, -0.1, 0.1, 0.3, 0.5, 0.3, 0.1, -0.1, -0.2,
        ],
        noise_sigma_pos: 0.0,
        noise_sigma_dur: 0.0,
        seed,
    }
}
