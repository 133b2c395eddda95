use serde::{Deserialize, Serialize};

use prefplan::io::PlanDocument;

/// Ordered: a job only ever moves to a later state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanJob {
    pub id: u64,
    pub session_id: u64,
    pub state: JobState,
    /// Fraction of the optimizer evaluation budget consumed.
    pub progress: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<PlanDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl PlanJob {
    pub fn new(id: u64, session_id: u64) -> Self {
        Self { id, session_id, state: JobState::Queued, progress: 0.0, result: None, error: None }
    }

    pub fn finished(&self) -> bool {
        matches!(self.state, JobState::Done | JobState::Failed)
    }

    pub(crate) fn start(&mut self) {
        if self.state == JobState::Queued {
            self.state = JobState::Running;
        }
    }

    pub(crate) fn report(&mut self, fraction: f64) {
        if self.state == JobState::Running {
            self.progress = self.progress.max(fraction.clamp(0.0, 1.0));
        }
    }

    pub(crate) fn finish(&mut self, outcome: Result<PlanDocument, String>) {
        if self.finished() {
            return;
        }
        match outcome {
            Ok(doc) => {
                self.state = JobState::Done;
                self.progress = 1.0;
                self.result = Some(doc);
            }
            Err(e) => {
                self.state = JobState::Failed;
                self.error = Some(e);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_only_moves_forward() {
        let mut job = PlanJob::new(1, 1);
        job.report(0.5);
        assert_eq!(job.progress, 0.0);
        job.start();
        job.report(0.5);
        job.report(0.2);
        assert_eq!(job.progress, 0.5);
        job.finish(Err("boom".into()));
        job.start();
        job.finish(Err("again".into()));
        assert_eq!(job.state, JobState::Failed);
        assert_eq!(job.error.as_deref(), Some("boom"));
    }
}
