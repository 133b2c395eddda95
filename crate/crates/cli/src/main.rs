use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _, Result};
use clap::{Args, Parser, Subcommand};

use prefplan::io::{
    self, preprocess_demo, ComparisonDocument, DemonstrationDocument, Document, EvaluationDocument, PlanDocument,
    ReportDocument, ScenarioDocument, SessionDocument,
};
use prefplan::metrics::evaluate;
use prefplan::sim::compare::compare_with_dmp;
use prefplan::sim::dmp::DmpConfig;
use prefplan::sim::{presets, run_closed_loop, LoopSettings};
use prefplan::{plan, Config, Context, DiscreteTrajectory, FeedbackMode, Session, WeightState};
use prefplan_service::ServiceConfig;

#[derive(Parser)]
#[command(name = "prefplan", version, about = "Learn path and velocity preferences from demonstrations")]
struct Cli {
    /// Directory searched for relative document paths that do not exist in
    /// the working directory.
    #[arg(long, global = true, env = "PREFPLAN_CONFIG_DIR")]
    config_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan in a scene with the weights of a session (zero weights without one).
    Plan {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        session: Option<PathBuf>,
        #[command(flatten)]
        out: Out,
    },
    /// Apply demonstrations to a session and plan with the updated weights.
    Train {
        #[arg(long)]
        scenario: PathBuf,
        /// Created when missing.
        #[arg(long)]
        session: PathBuf,
        #[arg(long = "demo", required = true)]
        demos: Vec<PathBuf>,
        /// Overrides the mode tag of the demonstration documents.
        #[arg(long)]
        mode: Option<FeedbackMode>,
        /// Learning rate of a new session.
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
        #[command(flatten)]
        out: Out,
    },
    /// Score a trajectory against one reference demonstration or the mean of several.
    Eval {
        #[arg(long)]
        scenario: PathBuf,
        /// Plan or demonstration document to score.
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long = "demo", required = true)]
        demos: Vec<PathBuf>,
        #[command(flatten)]
        out: Out,
    },
    /// Closed-loop experiment with a simulated user.
    Simulate {
        #[command(flatten)]
        experiment: Experiment,
        #[command(flatten)]
        out: Out,
    },
    /// Coactive learning against the DMP baseline.
    Compare {
        #[command(flatten)]
        experiment: Experiment,
        #[command(flatten)]
        out: Out,
    },
    /// Write the built-in scenes as scenario documents.
    Presets {
        #[arg(long, default_value = ".")]
        dir: PathBuf,
    },
    /// Start the HTTP service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        #[arg(long, default_value_t = 2)]
        workers: usize,
        /// Origin allowed by CORS; any origin when omitted.
        #[arg(long)]
        cors_origin: Option<String>,
    },
}

#[derive(Args)]
struct Out {
    /// Output document; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Experiment {
    /// Scenes; the first one is used for training. Built-in scenes when omitted.
    #[arg(long = "scenario")]
    scenarios: Vec<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Maximum number of updates.
    #[arg(long, default_value_t = 10)]
    iters: usize,
    /// Standard deviation of the demonstrator's waypoint noise, m.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
}

fn resolve(path: &Path, dir: Option<&Path>) -> PathBuf {
    match dir {
        Some(d) if path.is_relative() && !path.exists() => d.join(path),
        _ => path.to_path_buf(),
    }
}

fn emit<D: Document>(doc: &D, out: &Out) -> Result<()> {
    match &out.out {
        Some(path) => io::save(doc, path).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{}", io::to_string(doc)?);
            Ok(())
        }
    }
}

fn load<D: Document>(path: &Path, dir: Option<&Path>) -> Result<D> {
    let path = resolve(path, dir);
    io::load(&path).with_context(|| format!("loading {}", path.display()))
}

fn scenario(path: &Path, dir: Option<&Path>) -> Result<(Context, Config)> {
    let doc: ScenarioDocument = load(path, dir)?;
    Ok((doc.context(), doc.config()))
}

/// A plan document or a demonstration document, as a trajectory, with the
/// demonstration's mode tag.
fn trajectory(path: &Path, dir: Option<&Path>, config: &Config) -> Result<(DiscreteTrajectory, Option<FeedbackMode>)> {
    let path = resolve(path, dir);
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    match io::from_str::<PlanDocument>(&text) {
        Ok(doc) => Ok((doc.plan.trajectory, None)),
        Err(_) => {
            let doc: DemonstrationDocument =
                io::from_str(&text).with_context(|| format!("{} is neither a plan nor a demonstration", path.display()))?;
            Ok((preprocess_demo(&doc, config)?, doc.mode))
        }
    }
}

fn experiment_scenes(e: &Experiment, dir: Option<&Path>) -> Result<(Vec<Context>, Config)> {
    if e.scenarios.is_empty() {
        return Ok((presets::scenarios(), Config::default()));
    }
    let mut scenes = Vec::new();
    let mut config = None;
    for path in &e.scenarios {
        let (ctx, c) = scenario(path, dir)?;
        config.get_or_insert(c);
        scenes.push(ctx);
    }
    Ok((scenes, config.expect("at least one scene")))
}

fn user_and_settings(e: &Experiment) -> (prefplan::sim::GroundTruthUser, LoopSettings) {
    let mut user = presets::reference_user(e.seed);
    user.noise_sigma_pos = e.noise;
    (user, LoopSettings { max_iters: e.iters, alpha: e.alpha, ..LoopSettings::default() })
}

fn run(cli: Cli) -> Result<()> {
    let dir = cli.config_dir.as_deref();
    match cli.command {
        Command::Plan { scenario: path, session, out } => {
            let (ctx, config) = scenario(&path, dir)?;
            let weights = match session {
                Some(s) => load::<SessionDocument>(&s, dir)?.session.weights().clone(),
                None => WeightState::zeros(config.velocity_dim(), 0.1)?,
            };
            let result = plan(&weights, &ctx, &config)?;
            emit(&PlanDocument::new(weights, result), &out)
        }
        Command::Train { scenario: path, session: session_path, demos, mode, alpha, out } => {
            let (ctx, config) = scenario(&path, dir)?;
            let session_path = resolve(&session_path, dir);
            let mut session = if session_path.exists() {
                let doc: SessionDocument = load(&session_path, None)?;
                if doc.session.context != ctx || doc.session.config != config {
                    bail!("{} was created for a different scenario", session_path.display());
                }
                doc.session
            } else {
                Session::new(ctx, config, alpha)?
            };
            for demo_path in &demos {
                let (demo, tag) = trajectory(demo_path, dir, &session.config)?;
                if session.current_plan.is_none() {
                    session.replan()?;
                }
                let mode = mode.or(tag).unwrap_or(FeedbackMode::Both);
                session.step(&demo, mode)?;
            }
            let result = session.replan()?.clone();
            let weights = session.weights().clone();
            io::save(&SessionDocument::new(session), &session_path)
                .with_context(|| format!("writing {}", session_path.display()))?;
            emit(&PlanDocument::new(weights, result), &out)
        }
        Command::Eval { scenario: path, trajectory: traj_path, demos, out } => {
            let (ctx, config) = scenario(&path, dir)?;
            let (traj, _) = trajectory(&traj_path, dir, &config)?;
            let references =
                demos.iter().map(|d| Ok(trajectory(d, dir, &config)?.0)).collect::<Result<Vec<_>>>()?;
            emit(&EvaluationDocument::new(evaluate(&traj, &references, &ctx, &config)?), &out)
        }
        Command::Simulate { experiment, out } => {
            let (scenes, config) = experiment_scenes(&experiment, dir)?;
            let (user, settings) = user_and_settings(&experiment);
            let report = run_closed_loop(&user, &scenes, &settings, &config)?;
            eprintln!(
                "{} updates in {:.2} s, final error {:.4} (initial {:.4})",
                report.updates(),
                report.total_seconds,
                report.totals().last().copied().unwrap_or(f64::NAN),
                report.totals()[0]
            );
            emit(&ReportDocument::new(report), &out)
        }
        Command::Compare { experiment, out } => {
            let (mut scenes, config) = experiment_scenes(&experiment, dir)?;
            if experiment.scenarios.is_empty() {
                scenes.insert(1, presets::relocated_obstacle());
            }
            if scenes.len() < 2 {
                bail!("compare needs a training scene and at least one test scene");
            }
            let (user, settings) = user_and_settings(&experiment);
            let cmp = compare_with_dmp(&user, &scenes[0], &scenes[1..], &settings, &config, &DmpConfig::default())?;
            emit(&ComparisonDocument::new(cmp), &out)
        }
        Command::Presets { dir: out_dir } => {
            std::fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
            let config = Config::default();
            let named = presets::scenarios()
                .into_iter()
                .enumerate()
                .map(|(i, ctx)| (format!("scenario-{}", i + 1), ctx))
                .chain([("relocated".to_string(), presets::relocated_obstacle())]);
            for (name, ctx) in named {
                let path = out_dir.join(format!("{name}.json"));
                io::save(&ScenarioDocument::new(Some(name), &ctx, &config), &path)?;
                println!("{}", path.display());
            }
            Ok(())
        }
        Command::Serve { port, host, workers, cors_origin } => {
            tracing_subscriber::fmt()
                .with_env_filter(
                    tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
                )
                .init();
            let config = ServiceConfig { workers, allowed_origin: cors_origin };
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(prefplan_service::serve(SocketAddr::new(host, port), config))?;
            Ok(())
        }
    }
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
