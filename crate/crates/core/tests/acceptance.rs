//! Acceptance suite: one PASS/FAIL line per criterion. Runs as a plain
//! binary (`harness = false`) and exits non-zero if any criterion fails.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use prefplan::features::{
    collision_cost, height_feature, obstacle_distance_feature, obstacle_side_feature, side_offset, velocity_rbf,
    PathFeatureParams, RobotObjectiveParams, VelocityFeatureParams,
};
use prefplan::io::{self, Document, DemonstrationDocument, PlanDocument, ReportDocument, ScenarioDocument, SessionDocument};
use prefplan::learning::update_weights;
use prefplan::planner::velocity::velocity_objective;
use prefplan::planner::{optimize_path, optimize_velocity, PathProblem, VelocityProblem};
use prefplan::sim::compare::compare_with_dmp;
use prefplan::sim::dmp::DmpConfig;
use prefplan::sim::{brute_force_path, brute_force_velocity, presets, run_closed_loop, LoopSettings};
use prefplan::{plan, Config, Context, FeedbackMode, Session, Vec3, WeightState};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// `value` within 2% of `best`, measured on the magnitude of `best`.
fn near_best(value: f64, best: f64) -> bool {
    value >= best - 0.02 * best.abs()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12
}

fn criterion_1() -> Outcome {
    let ctx = presets::scenario_1();
    let p = PathFeatureParams::default();
    let v = VelocityFeatureParams::default();
    let robot = RobotObjectiveParams::default();
    let at_height = |h: f64| Vec3::new(0.4, 0.2, ctx.table_height + h);

    ensure(close(height_feature(&at_height(-p.sigmoid_center), &ctx, &p), 0.5), || "sigmoid center".into())?;
    ensure(close(obstacle_distance_feature(&ctx.obstacle_center, &ctx, &p), 1.0), || "distance at center".into())?;
    let normal = p.side_normal(&ctx);
    for s in [0.01, 0.05, 0.3] {
        let a = obstacle_side_feature(&(ctx.obstacle_center + normal * s), &ctx, &p);
        let b = obstacle_side_feature(&(ctx.obstacle_center - normal * s), &ctx, &p);
        ensure(close(a, -b), || format!("side symmetry at {s}"))?;
    }
    ensure(close(obstacle_side_feature(&ctx.obstacle_center, &ctx, &p), 0.0), || "side at plane".into())?;
    for (j, c) in v.center_speeds().iter().enumerate() {
        ensure(close(velocity_rbf(*c, &v)[j], 1.0), || format!("rbf {j} peak"))?;
    }
    let d_safe = robot.d_safe(&ctx);
    let on_sphere = ctx.obstacle_center + Vec3::new(0.0, 0.0, d_safe);
    ensure(close(collision_cost(&on_sphere, &ctx, &robot), 0.0), || "collision at d_safe".into())?;

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let dir = Vec3::new(0.3, -0.8, 0.5).normalize();
    for _ in 0..1000 {
        let (a, b) = (rng.random_range(-0.5..0.8), rng.random_range(-0.5..0.8));
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        if hi - lo < 1e-9 {
            continue;
        }
        ensure(height_feature(&at_height(lo), &ctx, &p) < height_feature(&at_height(hi), &ctx, &p), || {
            format!("height not increasing on [{lo}, {hi}]")
        })?;
        let (dl, dh) = (lo.abs() * 0.5, hi.abs() * 0.5);
        let (near, far) = if dl < dh { (dl, dh) } else { (dh, dl) };
        if far - near > 1e-6 {
            ensure(
                obstacle_distance_feature(&(ctx.obstacle_center + dir * near), &ctx, &p)
                    > obstacle_distance_feature(&(ctx.obstacle_center + dir * far), &ctx, &p),
                || format!("distance feature not decreasing at {near}, {far}"),
            )?;
        }
        let (sl, sh) = (ctx.obstacle_center + normal * lo, ctx.obstacle_center + normal * hi);
        ensure(
            side_offset(&sl, &ctx, &p) < side_offset(&sh, &ctx, &p)
                && obstacle_side_feature(&sl, &ctx, &p) > obstacle_side_feature(&sh, &ctx, &p),
            || format!("side feature not decreasing on [{lo}, {hi}]"),
        )?;
        let (cn, cf) = (near.min(d_safe), far.min(d_safe));
        if cf - cn > 1e-6 {
            ensure(
                collision_cost(&(ctx.obstacle_center + dir * cn), &ctx, &robot)
                    > collision_cost(&(ctx.obstacle_center + dir * cf), &ctx, &robot),
                || format!("collision cost not decreasing at {cn}, {cf}"),
            )?;
        }
    }
    Ok("closed forms to 1e-12, monotone on 1000 random pairs".into())
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-2.0..2.0)).collect()
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..1000 {
        let n = rng.random_range(1..20);
        let theta = random_vec(&mut rng, n);
        let h = random_vec(&mut rng, n);
        let r = random_vec(&mut rng, n);
        let h2 = random_vec(&mut rng, n);
        let alpha = rng.random_range(0.01..=1.0);
        let same = update_weights(&theta, &h, &h, alpha).map_err(|e| e.to_string())?;
        ensure(same == theta, || "equal counts changed the weights".into())?;
        let out = update_weights(&theta, &h, &r, alpha).map_err(|e| e.to_string())?;
        for i in 0..n {
            let expected = theta[i] + alpha * (h[i] - r[i]);
            ensure((out[i] - expected).abs() <= 1e-12, || "update formula".into())?;
        }
        // linear in the difference
        let zeros = vec![0.0; n];
        let a = update_weights(&zeros, &h, &r, alpha).map_err(|e| e.to_string())?;
        let b = update_weights(&zeros, &h2, &r, alpha).map_err(|e| e.to_string())?;
        let sum: Vec<f64> = h.iter().zip(&h2).map(|(x, y)| x + y).collect();
        let r2: Vec<f64> = r.iter().map(|x| 2.0 * x).collect();
        let ab = update_weights(&zeros, &sum, &r2, alpha).map_err(|e| e.to_string())?;
        for i in 0..n {
            ensure((ab[i] - a[i] - b[i]).abs() <= 1e-12, || "additivity".into())?;
        }
    }

    let config = Config::default();
    let ctx = presets::scenario_1();
    let base = Session::new(ctx.clone(), config.clone(), 0.1).map_err(|e| e.to_string())?;
    let mut probe = base.clone();
    let current = probe.replan().map_err(|e| e.to_string())?.clone();
    let mut demo_weights = WeightState::zeros(config.velocity_dim(), 0.1).map_err(|e| e.to_string())?;
    demo_weights.theta_hp = Vec3::new(0.2, -0.1, 0.1);
    demo_weights.theta_hv = (0..config.velocity_dim()).map(|i| if i % 2 == 0 { 0.5 } else { -0.5 }).collect();
    let demo = plan(&demo_weights, &ctx, &config).map_err(|e| e.to_string())?.trajectory;
    for mode in [FeedbackMode::Path, FeedbackMode::Velocity, FeedbackMode::Both] {
        let mut s = base.clone();
        s.set_plan(current.clone());
        let w = s.step(&demo, mode).map_err(|e| e.to_string())?.weights.clone();
        ensure(mode.updates_path() == (w.theta_hp != Vec3::zeros()), || format!("{mode:?} path gating"))?;
        ensure(mode.updates_velocity() == w.theta_hv.iter().any(|x| *x != 0.0), || format!("{mode:?} velocity gating"))?;
    }
    Ok("1000 random vectors, gating exact in all three modes".into())
}

fn random_theta_p(rng: &mut ChaCha8Rng) -> Vec3 {
    Vec3::new(rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2))
}

fn criterion_3() -> Outcome {
    let config = Config::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for (s, ctx) in presets::scenarios().iter().enumerate() {
        for draw in 0..10 {
            let theta = random_theta_p(&mut rng);
            let found = optimize_path(&PathProblem::new(ctx, theta, &config), &|_| {}).map_err(|e| e.to_string())?;
            let (_, best) = brute_force_path(&theta, ctx, &config, 41).map_err(|e| e.to_string())?;
            worst = worst.max((best - found.objective) / best.abs());
            ensure(near_best(found.objective, best), || {
                format!("scenario {} draw {draw}: {:.6} vs oracle {:.6}", s + 1, found.objective, best)
            })?;
        }
    }
    Ok(format!("30 draws, worst shortfall {:.3}% of oracle", 100.0 * worst.max(0.0)))
}

fn random_velocity_problem(rng: &mut ChaCha8Rng, config: &Config) -> VelocityProblem {
    let lengths: Vec<f64> = (0..4).map(|_| rng.random_range(0.05..0.3)).collect();
    let total: f64 = lengths.iter().sum();
    VelocityProblem {
        close: (0..4).map(|_| rng.random_bool(0.5)).collect(),
        theta_hv: (0..config.velocity_dim()).map(|_| rng.random_range(-1.0..1.0)).collect(),
        velocity: config.velocity_features.clone(),
        robot: config.robot.clone(),
        t_upp: rng.random_range(1.0..2.5) * total / config.robot.v_robot,
        max_evals: config.planner.max_velocity_evals,
        lengths,
    }
}

fn criterion_4() -> Outcome {
    let config = Config::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let levels = config.velocity_features.center_speeds();
    for draw in 0..10 {
        let problem = random_velocity_problem(&mut rng, &config);
        let found = optimize_velocity(&problem, &|_| {}).map_err(|e| e.to_string())?;
        let (_, best) = brute_force_velocity(&problem, &levels).map_err(|e| e.to_string())?;
        ensure(near_best(found.objective, best), || format!("draw {draw}: {:.6} vs oracle {:.6}", found.objective, best))?;
        let v = &problem.velocity;
        let mut prev = 0.0;
        for (r, t) in found.timestamps.iter().enumerate() {
            let speed = problem.lengths[r] / (t - prev);
            ensure(speed >= v.v_min && speed <= v.v_max, || format!("draw {draw}: segment {r} speed {speed}"))?;
            prev = *t;
        }
        ensure(prev <= problem.t_upp, || format!("draw {draw}: total time {prev} above {}", problem.t_upp))?;
        velocity_objective(&found.timestamps, &problem).map_err(|e| format!("draw {draw}: {e}"))?;
    }
    Ok("10 draws with M = 4 at or above 98% of the 9^4 oracle, all feasible".into())
}

fn criterion_5() -> Outcome {
    let config = Config::default();
    let settings = LoopSettings { max_iters: 8, alpha: 0.1, tolerance: 0.0 };
    let scenes = [presets::scenario_1()];
    let report = run_closed_loop(&presets::reference_user(0), &scenes, &settings, &config).map_err(|e| e.to_string())?;
    let e = report.totals();
    ensure(e[0] > e[1] && e[1] > e[2] && e[2] > e[3], || format!("noiseless errors not decreasing: {:?}", &e[..4]))?;
    ensure(e[1..=5].iter().any(|x| *x < 0.1 * e[0]), || format!("noiseless errors {e:?}"))?;
    let mut detail = format!("noiseless {:.3}", e[5] / e[0]);
    for seed in [11, 12, 13] {
        let mut user = presets::reference_user(seed);
        user.noise_sigma_pos = 0.02;
        let report = run_closed_loop(&user, &scenes, &settings, &config).map_err(|e| e.to_string())?;
        let e = report.totals();
        ensure(e[1..=8].iter().any(|x| *x < 0.2 * e[0]), || format!("seed {seed}: errors {e:?}"))?;
        detail += &format!(", seed {seed} {:.3}", e[1..=8].iter().fold(f64::INFINITY, |a, b| a.min(*b)) / e[0]);
    }
    Ok(format!("relative error: {detail}"))
}

fn criterion_6() -> Outcome {
    let config = Config::default();
    let settings = LoopSettings { max_iters: 8, alpha: 0.1, tolerance: 1e-3 };
    let report =
        run_closed_loop(&presets::reference_user(0), &presets::scenarios(), &settings, &config).map_err(|e| e.to_string())?;
    let mut detail = Vec::new();
    for s in &report.generalization {
        let (p, h, d) = (&s.plan, &s.dummy_height, &s.dummy_side);
        ensure(p.errors.total() < h.errors.total() && p.errors.total() < d.errors.total(), || {
            format!("scenario {}: plan {:.4}, dummies {:.4} {:.4}", s.index + 1, p.errors.total(), h.errors.total(), d.errors.total())
        })?;
        ensure(p.normalized_distance < h.normalized_distance && p.normalized_distance < d.normalized_distance, || {
            format!(
                "scenario {}: distance {:.4}, dummies {:.4} {:.4}",
                s.index + 1,
                p.normalized_distance,
                h.normalized_distance,
                d.normalized_distance
            )
        })?;
        detail.push(format!(
            "scenario {} error {:.3} vs {:.3}/{:.3}",
            s.index + 1,
            p.errors.total(),
            h.errors.total(),
            d.errors.total()
        ));
    }
    ensure(report.generalization.len() == 2, || "expected two unseen scenarios".into())?;
    Ok(detail.join(", "))
}

fn criterion_7() -> Outcome {
    let config = Config::default();
    let settings = LoopSettings { max_iters: 8, alpha: 0.1, tolerance: 1e-3 };
    let cmp = compare_with_dmp(
        &presets::reference_user(0),
        &presets::scenario_1(),
        &[presets::relocated_obstacle()],
        &settings,
        &config,
        &DmpConfig::default(),
    )
    .map_err(|e| e.to_string())?;
    ensure(cmp.reproduction_rmse <= 0.02, || format!("reproduction rmse {:.4}", cmp.reproduction_rmse))?;
    ensure(cmp.reproduction_speed_correlation >= 0.9, || {
        format!("speed correlation {:.4}", cmp.reproduction_speed_correlation)
    })?;
    let e = &cmp.entries[0];
    let ctx = &e.context;
    let p = &config.path_features;
    let mean_side = |t: &prefplan::DiscreteTrajectory| {
        t.positions().map(|x| obstacle_side_feature(x, ctx, p)).sum::<f64>()
    };
    ensure(mean_side(&e.coactive.trajectory).signum() == mean_side(&e.reference).signum(), || {
        "coactive plan passes on the other side".into()
    })?;
    ensure(e.dmp.errors.side > e.coactive.errors.side, || {
        format!("side error dmp {:.4} vs coactive {:.4}", e.dmp.errors.side, e.coactive.errors.side)
    })?;
    ensure(e.coactive.slows_near_obstacle, || format!("coactive speeds {:?} {:?}", e.coactive.close_speed, e.coactive.far_speed))?;
    ensure(!e.dmp.slows_near_obstacle, || format!("dmp speeds {:?} {:?}", e.dmp.close_speed, e.dmp.far_speed))?;
    Ok(format!(
        "rmse {:.4} m, corr {:.3}; side error dmp {:.3} vs {:.3}",
        cmp.reproduction_rmse, cmp.reproduction_speed_correlation, e.dmp.errors.side, e.coactive.errors.side
    ))
}

fn round_trip<D: Document + PartialEq + std::fmt::Debug>(doc: &D, what: &str) -> Result<(), String> {
    let text = io::to_string(doc).map_err(|e| e.to_string())?;
    let back: D = io::from_str(&text).map_err(|e| format!("{what}: {e}"))?;
    ensure(&back == doc, || format!("{what}: value changed"))?;
    let again = io::to_string(&back).map_err(|e| e.to_string())?;
    ensure(again == text, || format!("{what}: text changed"))
}

fn criterion_8() -> Outcome {
    let config = Config::default();
    let settings = LoopSettings { max_iters: 3, alpha: 0.1, tolerance: 1e-3 };
    let mut user = presets::reference_user(5);
    user.noise_sigma_pos = 0.02;
    let scenes = presets::scenarios();
    let run = || -> Result<String, String> {
        let report = run_closed_loop(&user, &scenes, &settings, &config).map_err(|e| e.to_string())?;
        io::to_string(&ReportDocument::new(report)).map_err(|e| e.to_string())
    };
    let first = run()?;
    ensure(first == run()?, || "simulate reports differ".into())?;

    let ctx = presets::scenario_2();
    round_trip(&ScenarioDocument::new(Some("two".into()), &ctx, &config), "scenario")?;
    let mut session = Session::new(ctx.clone(), config.clone(), 0.2).map_err(|e| e.to_string())?;
    let planned = session.replan().map_err(|e| e.to_string())?.clone();
    round_trip(&PlanDocument::new(session.weights().clone(), planned.clone()), "plan")?;
    round_trip(&DemonstrationDocument::from_trajectory(&planned.trajectory, Some(FeedbackMode::Both)), "demonstration")?;
    let demo = plan(&presets::reference_user(0).weights(), &ctx, &config).map_err(|e| e.to_string())?.trajectory;
    session.step(&demo, FeedbackMode::Both).map_err(|e| e.to_string())?;
    session.replan().map_err(|e| e.to_string())?;
    round_trip(&SessionDocument::new(session), "session")?;
    let report: ReportDocument = io::from_str(&first).map_err(|e| e.to_string())?;
    round_trip(&report, "report")?;

    let weights = presets::reference_user(0).weights();
    let offset = Vec3::new(0.13, -0.07, 0.05);
    let moved: Context = ctx.translated(&offset);
    let a = plan(&weights, &ctx, &config).map_err(|e| e.to_string())?.trajectory;
    let b = plan(&weights, &moved, &config).map_err(|e| e.to_string())?.trajectory;
    let shift = a
        .positions()
        .zip(b.positions())
        .map(|(x, y)| (y - x - offset).norm())
        .fold(0.0, f64::max);
    ensure(shift <= 1e-3, || format!("translated plan deviates by {shift:.2e} m"))?;
    Ok(format!("reports identical, 5 document round-trips, translation deviation {shift:.1e} m"))
}

type Criterion = (&'static str, fn() -> Outcome, u64);

fn main() {
    let criteria: [Criterion; 8] = [
        ("feature closed forms", criterion_1, 1),
        ("update-rule algebra", criterion_2, 1),
        ("path optimizer vs oracle", criterion_3, 60),
        ("velocity optimizer vs oracle", criterion_4, 30),
        ("closed-loop convergence", criterion_5, 120),
        ("generalization", criterion_6, 120),
        ("dmp comparison", criterion_7, 60),
        ("determinism and io", criterion_8, 120),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let mut failed = 0;
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        if only.is_some_and(|k| k != i + 1) {
            continue;
        }
        let started = Instant::now();
        let outcome = run();
        let elapsed = started.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > Duration::from_secs(*limit) => {
                Err(format!("{detail}; took {:.1} s, limit {limit} s", elapsed.as_secs_f64()))
            }
            other => other,
        };
        match outcome {
            Ok(detail) => println!("criterion {} PASS  {name} ({:.2} s): {detail}", i + 1, elapsed.as_secs_f64()),
            Err(why) => {
                failed += 1;
                println!("criterion {} FAIL  {name} ({:.2} s): {why}", i + 1, elapsed.as_secs_f64());
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
