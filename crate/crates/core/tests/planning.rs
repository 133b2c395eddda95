use prefplan::features::path_feature_count;
use prefplan::metrics::{evaluate, feature_errors, normalized_distance};
use prefplan::planner::{optimize_velocity, plan_with_progress, VelocityProblem};
use prefplan::sim::dmp::{dmp_fit, dmp_rollout, dmp_rollout_dense, reproduction_quality, DmpConfig};
use prefplan::sim::{brute_force_path, brute_force_velocity, oracle_demonstration, presets, Demonstrator};
use prefplan::trajectory::segment;
use prefplan::{plan, Config, Context, Error, FeedbackMode, Session, Vec3, WeightState};

fn empty_scene() -> Context {
    let mut ctx = presets::scenario_1();
    ctx.obstacle_center = Vec3::new(0.85, 0.75, 0.55);
    ctx.obstacle_radius = 0.02;
    ctx
}

#[test]
fn zero_weights_in_empty_scene_plan_a_near_straight_line() {
    let config = Config::default();
    let ctx = empty_scene();
    let weights = WeightState::zeros(config.velocity_dim(), 0.1).unwrap();
    let result = plan(&weights, &ctx, &config).unwrap();
    let dir = (ctx.goal - ctx.start).normalize();
    let deviation = result
        .trajectory
        .positions()
        .map(|x| {
            let rel = x - ctx.start;
            (rel - dir * rel.dot(&dir)).norm()
        })
        .fold(0.0, f64::max);
    assert!(deviation < 1e-3, "deviation {deviation}");
    // any middle waypoint on the segment gives the same path, so compare
    // objectives rather than waypoints
    let (_, best) = brute_force_path(&Vec3::zeros(), &ctx, &config, 41).unwrap();
    assert!(result.path_objective >= best - 1e-9, "{} vs {best}", result.path_objective);
    assert!(!result.diagnostics.collision);
    assert_eq!(result.trajectory.len(), 80);
    assert_eq!(result.timestamps.len(), 10);
}

#[test]
fn planning_is_deterministic_and_reports_progress() {
    let config = Config::default();
    let ctx = presets::scenario_2();
    let weights = presets::reference_user(0).weights();
    let seen = std::sync::Mutex::new(Vec::new());
    let a = plan_with_progress(&weights, &ctx, &config, &|f| seen.lock().unwrap().push(f)).unwrap();
    let b = plan(&weights, &ctx, &config).unwrap();
    assert_eq!(a, b);
    let seen = seen.into_inner().unwrap();
    assert!(!seen.is_empty());
    assert!(seen.iter().all(|f| (0.0..=1.0).contains(f)));
    assert_eq!(*seen.last().unwrap(), 1.0);
}

#[test]
fn velocity_stage_matches_the_level_oracle_on_a_planned_path() {
    let config = Config::default();
    let ctx = presets::scenario_1();
    let user = presets::reference_user(0);
    let result = plan(&user.weights(), &ctx, &config).unwrap();
    let segs = segment(&result.path, config.planner.n_segments, &ctx).unwrap();
    let problem = VelocityProblem::from_segments(&segs, &user.theta_true_v, &config).unwrap();
    let found = optimize_velocity(&problem, &|_| {}).unwrap();
    let (_, best) = brute_force_velocity(&problem, &config.velocity_features.center_speeds()).unwrap();
    assert!(found.objective >= best - 0.02 * best.abs(), "{} vs {}", found.objective, best);
}

#[test]
fn session_step_with_current_plan_is_a_zero_step() {
    let config = Config::default();
    let mut session = Session::new(presets::scenario_1(), config, 0.3).unwrap();
    assert_eq!(session.step(&presets_plan(), FeedbackMode::Both).unwrap_err(), Error::NoCurrentPlan);
    for _ in 0..2 {
        let current = session.replan().unwrap().trajectory.clone();
        let before = session.weights().clone();
        let after = session.step(&current, FeedbackMode::Both).unwrap().weights.clone();
        assert_eq!(after.theta_hp, before.theta_hp);
        assert_eq!(after.theta_hv, before.theta_hv);
        assert_eq!(after.iteration, before.iteration + 1);
    }
    assert_eq!(session.weight_history().count(), 3);
    assert!(session.current_plan.is_none());
}

fn presets_plan() -> prefplan::DiscreteTrajectory {
    plan(&presets::reference_user(0).weights(), &presets::scenario_1(), &Config::default()).unwrap().trajectory
}

#[test]
fn a_step_moves_weights_toward_the_demonstration() {
    let config = Config::default();
    let ctx = presets::scenario_1();
    let mut session = Session::new(ctx.clone(), config.clone(), 0.1).unwrap();
    let robot = session.replan().unwrap().trajectory.clone();
    let demo = presets_plan();
    let w = session.step(&demo, FeedbackMode::Path).unwrap().weights.clone();
    let diff = path_feature_count(&demo, &ctx, &config.path_features)
        - path_feature_count(&robot, &ctx, &config.path_features);
    assert!((w.theta_hp - diff * (0.1 / 80.0)).amax() < 1e-12);
    assert!(w.theta_hv.iter().all(|x| *x == 0.0));
}

#[test]
fn noisy_demonstrator_is_seeded() {
    let config = Config::default();
    let ctx = presets::scenario_1();
    let mut user = presets::reference_user(42);
    user.noise_sigma_pos = 0.02;
    user.noise_sigma_dur = 0.1;
    let optimum = plan(&user.weights(), &ctx, &config).unwrap();
    let run = || {
        let mut d = Demonstrator::new(user.clone());
        (0..3).map(|_| d.perturb(&optimum, &ctx, &config).unwrap()).collect::<Vec<_>>()
    };
    let (a, b) = (run(), run());
    assert_eq!(a, b);
    assert_ne!(a[0], a[1]);
    for traj in &a {
        assert!(traj.positions().all(|x| ctx.contains(x) || (x - ctx.start).norm() < 1e-9));
    }
}

#[test]
fn evaluation_of_a_demo_against_itself_is_zero() {
    let config = Config::default();
    let ctx = presets::scenario_2();
    let demo = oracle_demonstration(&presets::reference_user(0), &ctx, &config).unwrap();
    let e = evaluate(&demo, std::slice::from_ref(&demo), &ctx, &config).unwrap();
    assert_eq!(e.normalized_distance, 0.0);
    assert_eq!(e.errors.total(), 0.0);
    let shifted = demo.translated(&Vec3::new(0.0, 0.0, 0.05));
    let d = normalized_distance(&shifted, &demo, &ctx, 80).unwrap();
    assert!((d - 0.05 / ctx.start_goal_distance()).abs() < 1e-12);
    // mean of two symmetric offsets is the original
    let up = demo.translated(&Vec3::new(0.0, 0.0, 0.03));
    let down = demo.translated(&Vec3::new(0.0, 0.0, -0.03));
    let e = evaluate(&demo, &[up, down], &ctx, &config).unwrap();
    assert!(e.normalized_distance < 1e-12);
    assert_eq!(e.references, 2);
    assert!(feature_errors(&shifted, &demo, &ctx, &config).unwrap().height > 0.0);
}

#[test]
fn dmp_reproduces_its_demonstration() {
    let config = Config::default();
    let ctx = presets::scenario_1();
    let demo = oracle_demonstration(&presets::reference_user(0), &ctx, &config).unwrap();
    let model = dmp_fit(&demo, &DmpConfig::default()).unwrap();
    let (rmse, corr) = reproduction_quality(&dmp_rollout_dense(&model, None).unwrap(), &demo);
    assert!(rmse <= 0.02, "rmse {rmse}");
    assert!(corr >= 0.9, "correlation {corr}");

    let moved = ctx.translated(&Vec3::new(0.1, 0.0, 0.05));
    let out = dmp_rollout(&model, Some(&moved)).unwrap();
    assert_eq!(out.len(), 80);
    assert!((out.last().x - moved.goal).norm() <= 1e-3);
    assert!(out.min_distance_to(&moved.obstacle_center) > moved.obstacle_radius);
}

#[test]
fn dmp_reports_divergence_and_short_demos() {
    let config = Config::default();
    let ctx = presets::scenario_1();
    let demo = oracle_demonstration(&presets::reference_user(0), &ctx, &config).unwrap();
    let coarse = DmpConfig { steps_per_tau: 2, ..DmpConfig::default() };
    let model = dmp_fit(&demo, &coarse).unwrap();
    assert!(matches!(dmp_rollout(&model, None), Err(Error::Diverged { .. })));
    let short = demo.resample_linear(10).unwrap();
    assert!(dmp_fit(&short, &DmpConfig::default()).is_err());
}
