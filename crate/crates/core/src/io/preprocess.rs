use crate::config::Config;
use crate::error::Result;
use crate::trajectory::{DiscreteTrajectory, Sample, Vec3};

use super::{Document, DemonstrationDocument};

pub const SMOOTHING_WINDOW: usize = 5;

/// Centered moving average. The window shrinks symmetrically near the ends,
/// so the first and last values are kept.
pub fn moving_average(values: &[Vec3], window: usize) -> Vec<Vec3> {
    let half = window / 2;
    let n = values.len();
    (0..n)
        .map(|i| {
            let h = half.min(i).min(n - 1 - i);
            let slice = &values[i - h..=i + h];
            slice.iter().sum::<Vec3>() / slice.len() as f64
        })
        .collect()
}

fn central_differences(t: &[f64], x: &[Vec3]) -> Vec<Vec3> {
    let n = x.len();
    (0..n)
        .map(|i| {
            let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
            (x[b] - x[a]) / (t[b] - t[a])
        })
        .collect()
}

/// Turns a recorded demonstration into a trajectory of `n_samples` states
/// starting at t = 0.
///
/// Positions are smoothed, velocities come from central differences of the
/// smoothed positions and are smoothed in turn, and the result is resampled
/// at uniform times. Documents that carry a velocity on every sample skip
/// smoothing and differentiation.
pub fn preprocess_demo(doc: &DemonstrationDocument, config: &Config) -> Result<DiscreteTrajectory> {
    doc.validate()?;
    let t0 = doc.samples[0].t;
    let t: Vec<f64> = doc.samples.iter().map(|s| s.t - t0).collect();
    let samples: Vec<Sample> = if doc.samples.iter().all(|s| s.v.is_some()) {
        doc.samples
            .iter()
            .zip(&t)
            .map(|(s, &t)| Sample { t, x: s.x, v: s.v.unwrap_or_default() })
            .collect()
    } else {
        let raw: Vec<Vec3> = doc.samples.iter().map(|s| s.x).collect();
        let x = moving_average(&raw, SMOOTHING_WINDOW);
        let v = moving_average(&central_differences(&t, &x), SMOOTHING_WINDOW);
        t.iter().zip(x).zip(v).map(|((&t, x), v)| Sample { t, x, v }).collect()
    };
    let traj = DiscreteTrajectory::new(samples)?;
    let n = config.planner.n_samples;
    if traj.len() == n && on_uniform_grid(&traj) {
        return Ok(traj);
    }
    traj.resample_linear(n)
}

fn on_uniform_grid(traj: &DiscreteTrajectory) -> bool {
    let n = traj.len();
    let (t0, t1) = (traj.first().t, traj.last().t);
    traj.samples()
        .iter()
        .enumerate()
        .all(|(k, s)| k + 1 == n || s.t == t0 + (t1 - t0) * k as f64 / (n - 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moving_average_keeps_endpoints_and_lines() {
        let line: Vec<Vec3> = (0..7).map(|i| Vec3::new(i as f64, 2.0 * i as f64, 0.0)).collect();
        assert_eq!(moving_average(&line, 5), line);
        let bump = vec![Vec3::zeros(), Vec3::zeros(), Vec3::new(5.0, 0.0, 0.0), Vec3::zeros(), Vec3::zeros()];
        let out = moving_average(&bump, 5);
        assert_eq!(out[0], Vec3::zeros());
        assert_eq!(out[2], Vec3::new(1.0, 0.0, 0.0));
    }
}
