//! Versioned JSON documents for scenes, demonstrations, sessions and results.
//!
//! Loading runs three passes: the version tag, a structural check that lists
//! every offending field, and typed deserialization followed by the domain
//! checks of the loaded value. Saving writes a temporary file next to the
//! target and renames it over the target.

mod preprocess;
pub mod schema;

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::{Config, PlannerSettings};
use crate::error::{Error, Result};
use crate::features::{PathFeatureParams, RobotObjectiveParams, VelocityFeatureParams};
use crate::learning::{FeedbackMode, Session, WeightState};
use crate::metrics::Evaluation;
use crate::planner::PlanResult;
use crate::sim::compare::Comparison;
use crate::sim::ExperimentReport;
use crate::trajectory::{Context, DiscreteTrajectory, Vec3};

pub use preprocess::{moving_average, preprocess_demo, SMOOTHING_WINDOW};

pub const FORMAT_VERSION: u64 = 1;

pub trait Document: Serialize + DeserializeOwned {
    /// Structural schema, for documents written by hand.
    fn schema() -> Option<&'static [schema::Field]> {
        None
    }

    /// Domain checks on the typed value.
    fn validate(&self) -> Result<()>;
}

/// Parses and validates a document.
pub fn from_str<D: Document>(text: &str) -> Result<D> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Schema(vec![format!("not valid JSON: {e}")]))?;
    match value.get("format_version") {
        None => return Err(Error::Schema(vec!["format_version: missing required field".into()])),
        Some(v) => match v.as_u64() {
            Some(FORMAT_VERSION) => {}
            Some(found) => return Err(Error::UnsupportedVersion { found, expected: FORMAT_VERSION }),
            None => return Err(Error::Schema(vec!["format_version: expected a non-negative integer".into()])),
        },
    }
    if let Some(fields) = D::schema() {
        let problems = schema::problems(&value, fields);
        if !problems.is_empty() {
            return Err(Error::Schema(problems));
        }
    }
    let doc: D = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        Error::Schema(vec![format!("{path}: {}", e.into_inner())])
    })?;
    doc.validate()?;
    Ok(doc)
}

/// Pretty JSON with a trailing newline.
pub fn to_string<D: Document>(doc: &D) -> Result<String> {
    let mut text = serde_json::to_string_pretty(doc).map_err(|e| Error::InvalidParams(format!("serialization failed: {e}")))?;
    text.push('\n');
    Ok(text)
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io { path: path.display().to_string(), message: e.to_string() }
}

pub fn load<D: Document>(path: impl AsRef<Path>) -> Result<D> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    from_str(&text).map_err(|e| match e {
        Error::Schema(problems) => {
            Error::Schema(problems.into_iter().map(|p| format!("{}: {p}", path.display())).collect())
        }
        other => other,
    })
}

/// Validates and writes `doc` atomically.
pub fn save<D: Document>(doc: &D, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    doc.validate()?;
    let text = to_string(doc)?;
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_error(path, e))?;
    std::io::Write::write_all(&mut tmp, text.as_bytes()).map_err(|e| io_error(path, e))?;
    tmp.as_file().sync_all().map_err(|e| io_error(path, e))?;
    tmp.persist(path).map_err(|e| io_error(path, e.error))?;
    Ok(())
}

fn check_version(found: u64) -> Result<()> {
    if found == FORMAT_VERSION {
        Ok(())
    } else {
        Err(Error::UnsupportedVersion { found, expected: FORMAT_VERSION })
    }
}

/// A scene plus the parameters used to plan in it. Parameter sections may be
/// omitted or partial; missing values take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDocument {
    pub format_version: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub start: Vec3,
    pub goal: Vec3,
    pub obstacle_center: Vec3,
    pub obstacle_radius: f64,
    pub table_height: f64,
    pub workspace_low: Vec3,
    pub workspace_upp: Vec3,
    #[serde(default)]
    pub robot_base: Vec3,
    #[serde(default)]
    pub path_features: PathFeatureParams,
    #[serde(default)]
    pub velocity_features: VelocityFeatureParams,
    #[serde(default)]
    pub robot: RobotObjectiveParams,
    #[serde(default)]
    pub planner: PlannerSettings,
}

impl ScenarioDocument {
    pub fn new(name: Option<String>, ctx: &Context, config: &Config) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            name,
            start: ctx.start,
            goal: ctx.goal,
            obstacle_center: ctx.obstacle_center,
            obstacle_radius: ctx.obstacle_radius,
            table_height: ctx.table_height,
            workspace_low: ctx.workspace_low,
            workspace_upp: ctx.workspace_upp,
            robot_base: ctx.robot_base,
            path_features: config.path_features.clone(),
            velocity_features: config.velocity_features.clone(),
            robot: config.robot.clone(),
            planner: config.planner.clone(),
        }
    }

    pub fn context(&self) -> Context {
        Context {
            start: self.start,
            goal: self.goal,
            obstacle_center: self.obstacle_center,
            obstacle_radius: self.obstacle_radius,
            table_height: self.table_height,
            workspace_low: self.workspace_low,
            workspace_upp: self.workspace_upp,
            robot_base: self.robot_base,
        }
    }

    pub fn config(&self) -> Config {
        Config {
            path_features: self.path_features.clone(),
            velocity_features: self.velocity_features.clone(),
            robot: self.robot.clone(),
            planner: self.planner.clone(),
        }
    }
}

impl Document for ScenarioDocument {
    fn schema() -> Option<&'static [schema::Field]> {
        Some(schema::SCENARIO)
    }

    fn validate(&self) -> Result<()> {
        check_version(self.format_version)?;
        let ctx = self.context();
        let mut problems = match ctx.validate() {
            Err(Error::Schema(p)) => p,
            Err(e) => vec![e.to_string()],
            Ok(()) => Vec::new(),
        };
        problems.extend(self.config().problems(Some(&ctx)));
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Schema(problems))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemoSample {
    pub t: f64,
    pub x: Vec3,
    /// Measured velocity; when every sample carries one, no differentiation
    /// is done.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<Vec3>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemonstrationDocument {
    pub format_version: u64,
    pub samples: Vec<DemoSample>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<FeedbackMode>,
}

impl DemonstrationDocument {
    /// Exports a trajectory with its velocities, so feeding it back is
    /// lossless.
    pub fn from_trajectory(traj: &DiscreteTrajectory, mode: Option<FeedbackMode>) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            samples: traj.samples().iter().map(|s| DemoSample { t: s.t, x: s.x, v: Some(s.v) }).collect(),
            mode,
        }
    }
}

impl Document for DemonstrationDocument {
    fn schema() -> Option<&'static [schema::Field]> {
        Some(schema::DEMONSTRATION)
    }

    fn validate(&self) -> Result<()> {
        check_version(self.format_version)?;
        let mut problems = Vec::new();
        if self.samples.len() < 2 {
            problems.push(format!("samples: need at least 2 samples, got {}", self.samples.len()));
        }
        for (k, s) in self.samples.iter().enumerate() {
            let finite = s.t.is_finite() && s.x.iter().chain(s.v.iter().flatten()).all(|c| c.is_finite());
            if !finite {
                problems.push(format!("samples[{k}]: non-finite value"));
            }
        }
        for (k, w) in self.samples.windows(2).enumerate() {
            if !(w[1].t > w[0].t) {
                problems.push(format!("samples[{}].t: time must increase strictly", k + 1));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Schema(problems))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionDocument {
    pub format_version: u64,
    pub session: Session,
}

impl SessionDocument {
    pub fn new(session: Session) -> Self {
        Self { format_version: FORMAT_VERSION, session }
    }
}

impl Document for SessionDocument {
    fn validate(&self) -> Result<()> {
        check_version(self.format_version)?;
        let s = &self.session;
        s.context.validate()?;
        s.config.validate(Some(&s.context))?;
        let dim = s.config.velocity_dim();
        for w in s.weight_history() {
            w.validate(dim)?;
        }
        for (k, record) in s.iterations.iter().enumerate() {
            if record.iteration != k + 1 || record.weights.iteration != k + 1 {
                return Err(Error::Schema(vec![format!("session.iterations[{k}].iteration: expected {}", k + 1)]));
            }
        }
        Ok(())
    }
}

/// Planned trajectory with the weights that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanDocument {
    pub format_version: u64,
    pub weights: WeightState,
    pub plan: PlanResult,
}

impl PlanDocument {
    pub fn new(weights: WeightState, plan: PlanResult) -> Self {
        Self { format_version: FORMAT_VERSION, weights, plan }
    }
}

impl Document for PlanDocument {
    fn validate(&self) -> Result<()> {
        check_version(self.format_version)?;
        self.weights.validate(self.weights.theta_hv.len())?;
        if self.plan.timestamps.len() != self.plan.segment_waypoints.len() {
            return Err(Error::Schema(vec!["plan.timestamps: one entry per segment waypoint expected".into()]));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportDocument {
    pub format_version: u64,
    pub report: ExperimentReport,
}

impl ReportDocument {
    pub fn new(report: ExperimentReport) -> Self {
        Self { format_version: FORMAT_VERSION, report }
    }
}

impl Document for ReportDocument {
    fn validate(&self) -> Result<()> {
        check_version(self.format_version)?;
        let r = &self.report;
        if r.errors.is_empty() || r.errors.len() != r.regret.len() || r.weights.len() != r.errors.len() {
            return Err(Error::Schema(vec!["report: errors, regret and weights must have matching lengths".into()]));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonDocument {
    pub format_version: u64,
    pub comparison: Comparison,
}

impl ComparisonDocument {
    pub fn new(comparison: Comparison) -> Self {
        Self { format_version: FORMAT_VERSION, comparison }
    }
}

impl Document for ComparisonDocument {
    fn validate(&self) -> Result<()> {
        check_version(self.format_version)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationDocument {
    pub format_version: u64,
    pub evaluation: Evaluation,
}

impl EvaluationDocument {
    pub fn new(evaluation: Evaluation) -> Self {
        Self { format_version: FORMAT_VERSION, evaluation }
    }
}

impl Document for EvaluationDocument {
    fn validate(&self) -> Result<()> {
        check_version(self.format_version)
    }
}
