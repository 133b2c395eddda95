//! Trajectory representation: minimum-acceleration interpolation through
//! waypoints, uniform resampling, and segmentation into equal sample ranges.
//!
//! Every planned or demonstrated motion ends up as a [`DiscreteTrajectory`]
//! of a fixed number of samples, so feature counts of different trajectories
//! are comparable.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Scene description that parameterizes every feature: start, goal, a single
/// spherical obstacle, the table plane and the reachable workspace box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Context {
    pub start: Vec3,
    pub goal: Vec3,
    pub obstacle_center: Vec3,
    pub obstacle_radius: f64,
    pub table_height: f64,
    pub workspace_low: Vec3,
    pub workspace_upp: Vec3,
    /// Horizontal position of the robot base; decides which side of the
    /// obstacle counts as the "close" side.
    #[serde(default)]
    pub robot_base: Vec3,
}

impl Context {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        let finite = |v: &Vec3| v.iter().all(|c| c.is_finite());
        for (name, v) in [
            ("start", &self.start),
            ("goal", &self.goal),
            ("obstacle_center", &self.obstacle_center),
            ("workspace_low", &self.workspace_low),
            ("workspace_upp", &self.workspace_upp),
            ("robot_base", &self.robot_base),
        ] {
            if !finite(v) {
                problems.push(format!("context.{name}: non-finite component"));
            }
        }
        if (0..3).any(|i| self.workspace_low[i] >= self.workspace_upp[i]) {
            problems.push("context.workspace_low: must be below workspace_upp on every axis".into());
        }
        if (self.goal - self.start).norm() <= 1e-9 {
            problems.push("context.goal: coincides with start".into());
        }
        if !(self.obstacle_radius > 0.0) || !self.obstacle_radius.is_finite() {
            problems.push("context.obstacle_radius: must be positive".into());
        }
        if !self.table_height.is_finite() {
            problems.push("context.table_height: non-finite".into());
        }
        if !self.contains(&self.start) {
            problems.push("context.start: outside the workspace box".into());
        }
        if !self.contains(&self.goal) {
            problems.push("context.goal: outside the workspace box".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Schema(problems))
        }
    }

    pub fn contains(&self, x: &Vec3) -> bool {
        (0..3).all(|i| x[i] >= self.workspace_low[i] && x[i] <= self.workspace_upp[i])
    }

    /// Rigid translation of every positional quantity, including the table.
    pub fn translated(&self, offset: &Vec3) -> Context {
        Context {
            start: self.start + offset,
            goal: self.goal + offset,
            obstacle_center: self.obstacle_center + offset,
            obstacle_radius: self.obstacle_radius,
            table_height: self.table_height + offset.z,
            workspace_low: self.workspace_low + offset,
            workspace_upp: self.workspace_upp + offset,
            robot_base: self.robot_base + offset,
        }
    }

    pub fn start_goal_distance(&self) -> f64 {
        (self.goal - self.start).norm()
    }

    /// Unit normal of the vertical plane through the obstacle center that
    /// contains the horizontal start-to-goal direction. Points away from the
    /// robot base, so samples between base and obstacle have negative offset.
    pub fn side_plane_normal(&self) -> Vec3 {
        let dir = Vec3::new(self.goal.x - self.start.x, self.goal.y - self.start.y, 0.0);
        let mut normal = if dir.norm() > 1e-9 {
            Vec3::new(-dir.y, dir.x, 0.0).normalize()
        } else {
            Vec3::x()
        };
        let to_obstacle = self.obstacle_center - self.robot_base;
        if normal.dot(&Vec3::new(to_obstacle.x, to_obstacle.y, 0.0)) < 0.0 {
            normal = -normal;
        }
        normal
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub x: Vec3,
    pub v: Vec3,
}

/// Timestamped position/velocity states, strictly increasing in time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Sample>", into = "Vec<Sample>")]
pub struct DiscreteTrajectory {
    samples: Vec<Sample>,
}

impl TryFrom<Vec<Sample>> for DiscreteTrajectory {
    type Error = Error;

    fn try_from(samples: Vec<Sample>) -> Result<Self> {
        DiscreteTrajectory::new(samples)
    }
}

impl From<DiscreteTrajectory> for Vec<Sample> {
    fn from(traj: DiscreteTrajectory) -> Self {
        traj.samples
    }
}

impl DiscreteTrajectory {
    pub fn new(samples: Vec<Sample>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidWaypoints(format!(
                "a trajectory needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        for (k, s) in samples.iter().enumerate() {
            if !s.t.is_finite() || s.x.iter().chain(s.v.iter()).any(|c| !c.is_finite()) {
                return Err(Error::InvalidWaypoints(format!("sample {k} is not finite")));
            }
        }
        if let Some(k) = samples.windows(2).position(|w| w[1].t <= w[0].t) {
            return Err(Error::InvalidWaypoints(format!(
                "timestamps must increase strictly (sample {})",
                k + 1
            )));
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn positions(&self) -> impl Iterator<Item = &Vec3> + '_ {
        self.samples.iter().map(|s| &s.x)
    }

    pub fn first(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample {
        &self.samples[self.samples.len() - 1]
    }

    pub fn duration(&self) -> f64 {
        self.last().t - self.first().t
    }

    pub fn translated(&self, offset: &Vec3) -> DiscreteTrajectory {
        let samples = self
            .samples
            .iter()
            .map(|s| Sample { t: s.t, x: s.x + offset, v: s.v })
            .collect();
        DiscreteTrajectory { samples }
    }

    pub fn reversed(&self) -> DiscreteTrajectory {
        let t_end = self.last().t;
        let samples = self
            .samples
            .iter()
            .rev()
            .map(|s| Sample { t: t_end - s.t, x: s.x, v: -s.v })
            .collect();
        DiscreteTrajectory { samples }
    }

    pub fn min_distance_to(&self, point: &Vec3) -> f64 {
        self.positions()
            .map(|x| (x - point).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Uniform-time resampling by linear interpolation of the stored states.
    pub fn resample_linear(&self, n: usize) -> Result<DiscreteTrajectory> {
        if n < 2 {
            return Err(Error::InvalidParams(format!("cannot resample to {n} samples")));
        }
        let (t0, t1) = (self.first().t, self.last().t);
        let mut out = Vec::with_capacity(n);
        let mut seg = 0;
        for k in 0..n {
            let t = uniform_time(t0, t1, k, n);
            while seg + 2 < self.samples.len() && self.samples[seg + 1].t < t {
                seg += 1;
            }
            let (a, b) = (&self.samples[seg], &self.samples[seg + 1]);
            let w = ((t - a.t) / (b.t - a.t)).clamp(0.0, 1.0);
            out.push(Sample {
                t,
                x: a.x.lerp(&b.x, w),
                v: a.v.lerp(&b.v, w),
            });
        }
        DiscreteTrajectory::new(out)
    }

    /// Linearly interpolated state at time `t`, held constant outside the
    /// sampled interval.
    pub fn state_at(&self, t: f64) -> Sample {
        let k = self.samples.partition_point(|s| s.t <= t);
        if k == 0 {
            return Sample { t, ..self.samples[0] };
        }
        if k == self.samples.len() {
            return Sample { t, ..*self.last() };
        }
        let (a, b) = (&self.samples[k - 1], &self.samples[k]);
        let w = (t - a.t) / (b.t - a.t);
        Sample { t, x: a.x.lerp(&b.x, w), v: a.v.lerp(&b.v, w) }
    }
}

fn uniform_time(t0: f64, t1: f64, k: usize, n: usize) -> f64 {
    if k + 1 == n {
        t1
    } else {
        t0 + (t1 - t0) * k as f64 / (n - 1) as f64
    }
}

/// Natural cubic spline through timed waypoints, independently per axis.
///
/// Stored as knot values plus second derivatives at the knots; the second
/// derivative vanishes at both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousTrajectory {
    times: Vec<f64>,
    points: Vec<Vec3>,
    second: Vec<Vec3>,
}

impl ContinuousTrajectory {
    pub fn start_time(&self) -> f64 {
        self.times[0]
    }

    pub fn end_time(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn knot_times(&self) -> &[f64] {
        &self.times
    }

    pub fn knot_points(&self) -> &[Vec3] {
        &self.points
    }

    fn piece(&self, t: f64) -> usize {
        let last = self.times.len() - 2;
        self.times[1..=last].partition_point(|&k| k <= t).min(last)
    }

    fn eval_piece(&self, i: usize, t: f64) -> (Vec3, Vec3, Vec3) {
        let h = self.times[i + 1] - self.times[i];
        let a = (self.times[i + 1] - t) / h;
        let b = (t - self.times[i]) / h;
        let (y0, y1) = (&self.points[i], &self.points[i + 1]);
        let (m0, m1) = (&self.second[i], &self.second[i + 1]);
        let pos = y0 * a + y1 * b + (m0 * (a * a * a - a) + m1 * (b * b * b - b)) * (h * h / 6.0);
        let vel = (y1 - y0) / h - m0 * ((3.0 * a * a - 1.0) * h / 6.0)
            + m1 * ((3.0 * b * b - 1.0) * h / 6.0);
        let acc = m0 * a + m1 * b;
        (pos, vel, acc)
    }

    pub fn position(&self, t: f64) -> Vec3 {
        self.eval_piece(self.piece(t), t).0
    }

    pub fn velocity(&self, t: f64) -> Vec3 {
        self.eval_piece(self.piece(t), t).1
    }

    pub fn acceleration(&self, t: f64) -> Vec3 {
        self.eval_piece(self.piece(t), t).2
    }

    /// Exact integral of |acceleration|^2 over the domain (acceleration is
    /// piecewise linear).
    pub fn integrated_squared_acceleration(&self) -> f64 {
        (0..self.times.len() - 1)
            .map(|i| {
                let h = self.times[i + 1] - self.times[i];
                let (a, b) = (&self.second[i], &self.second[i + 1]);
                h * (a.norm_squared() + a.dot(b) + b.norm_squared()) / 3.0
            })
            .sum()
    }
}

/// Minimum-acceleration (natural cubic spline) interpolation.
pub fn interpolate(waypoints: &[(Vec3, f64)]) -> Result<ContinuousTrajectory> {
    let n = waypoints.len();
    if n < 2 {
        return Err(Error::InvalidWaypoints(format!("need at least 2 waypoints, got {n}")));
    }
    if waypoints
        .iter()
        .any(|(p, t)| !t.is_finite() || p.iter().any(|c| !c.is_finite()))
    {
        return Err(Error::InvalidWaypoints("non-finite waypoint".into()));
    }
    if let Some(k) = waypoints.windows(2).position(|w| w[1].1 <= w[0].1) {
        return Err(Error::InvalidWaypoints(format!(
            "waypoint times must increase strictly (waypoint {})",
            k + 1
        )));
    }
    let times: Vec<f64> = waypoints.iter().map(|w| w.1).collect();
    let points: Vec<Vec3> = waypoints.iter().map(|w| w.0).collect();
    let mut second = vec![Vec3::zeros(); n];

    if n > 2 {
        // Thomas algorithm on the interior second derivatives.
        let m = n - 2;
        let h: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
        let mut diag = vec![0.0; m];
        let mut upper = vec![0.0; m];
        let mut rhs = vec![Vec3::zeros(); m];
        for j in 0..m {
            let i = j + 1;
            diag[j] = 2.0 * (h[i - 1] + h[i]);
            upper[j] = h[i];
            rhs[j] = ((points[i + 1] - points[i]) / h[i] - (points[i] - points[i - 1]) / h[i - 1]) * 6.0;
        }
        for j in 1..m {
            let lower = h[j];
            let w = lower / diag[j - 1];
            diag[j] -= w * upper[j - 1];
            let prev = rhs[j - 1];
            rhs[j] -= prev * w;
        }
        second[m] = rhs[m - 1] / diag[m - 1];
        for j in (0..m - 1).rev() {
            second[j + 1] = (rhs[j] - second[j + 2] * upper[j]) / diag[j];
        }
    }

    Ok(ContinuousTrajectory { times, points, second })
}

/// `n` samples at uniform time steps; velocities from the analytic derivative.
pub fn resample(traj: &ContinuousTrajectory, n: usize) -> Result<DiscreteTrajectory> {
    if n < 2 {
        return Err(Error::InvalidParams(format!("cannot resample to {n} samples")));
    }
    let (t0, t1) = (traj.start_time(), traj.end_time());
    let mut samples = Vec::with_capacity(n);
    let mut piece = 0;
    let last_piece = traj.times.len() - 2;
    for k in 0..n {
        let t = uniform_time(t0, t1, k, n);
        while piece < last_piece && traj.times[piece + 1] <= t {
            piece += 1;
        }
        let (x, v, _) = traj.eval_piece(piece, t);
        samples.push(Sample { t, x, v });
    }
    DiscreteTrajectory::new(samples)
}

/// Times for the start, middle and goal waypoints that make the path
/// parameterization approximately constant-speed.
pub fn path_time_vector(start: &Vec3, middle: &Vec3, goal: &Vec3, t_goal: f64) -> Result<[f64; 3]> {
    let total = (goal - start).norm();
    if total <= 1e-12 {
        return Err(Error::DegenerateContext("start and goal coincide".into()));
    }
    if !(t_goal > 0.0) {
        return Err(Error::InvalidParams(format!("goal time must be positive, got {t_goal}")));
    }
    let ratio = (middle - start).norm() / total;
    let t_mid = (t_goal * ratio).clamp(0.02 * t_goal, 0.98 * t_goal);
    Ok([0.0, t_mid, t_goal])
}

pub fn path_length(traj: &DiscreteTrajectory) -> f64 {
    traj.samples
        .windows(2)
        .map(|w| (w[1].x - w[0].x).norm())
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    /// First sample index (inclusive).
    pub first: usize,
    /// One past the last sample index.
    pub end: usize,
    pub mean_position: Vec3,
    /// Mean of the per-sample speed norms.
    pub mean_speed: f64,
    pub obstacle_distance: f64,
    /// Polyline length from this segment's first sample to the next segment's
    /// first sample (or the final sample).
    pub arc_length: f64,
    pub end_waypoint: Vec3,
    pub end_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentSet {
    pub segments: Vec<Segment>,
}

impl SegmentSet {
    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn total_length(&self) -> f64 {
        self.segments.iter().map(|s| s.arc_length).sum()
    }
}

/// Splits `traj` into `m` equal sample ranges; the remainder of an uneven
/// split goes to the last range.
pub fn segment(traj: &DiscreteTrajectory, m: usize, ctx: &Context) -> Result<SegmentSet> {
    let n = traj.len();
    if m < 2 || m >= n {
        return Err(Error::InvalidSegmentation { segments: m, samples: n });
    }
    let base = n / m;
    let samples = traj.samples();
    let segments = (0..m)
        .map(|r| {
            let first = r * base;
            let end = if r + 1 == m { n } else { first + base };
            let boundary = if r + 1 == m { n - 1 } else { end };
            let count = (end - first) as f64;
            let mean_position = samples[first..end].iter().map(|s| s.x).sum::<Vec3>() / count;
            let mean_speed = samples[first..end].iter().map(|s| s.v.norm()).sum::<f64>() / count;
            let arc_length = samples[first..=boundary]
                .windows(2)
                .map(|w| (w[1].x - w[0].x).norm())
                .sum();
            Segment {
                first,
                end,
                mean_position,
                mean_speed,
                obstacle_distance: (mean_position - ctx.obstacle_center).norm(),
                arc_length,
                end_waypoint: samples[boundary].x,
                end_time: samples[boundary].t,
            }
        })
        .collect();
    Ok(SegmentSet { segments })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    pub(crate) fn test_context() -> Context {
        Context {
            start: Vec3::new(0.4, 0.5, 0.1),
            goal: Vec3::new(0.4, -0.55, 0.1),
            obstacle_center: Vec3::new(0.45, 0.0, 0.1),
            obstacle_radius: 0.05,
            table_height: 0.0,
            workspace_low: Vec3::new(0.05, -0.8, 0.02),
            workspace_upp: Vec3::new(0.9, 0.8, 0.6),
            robot_base: Vec3::zeros(),
        }
    }

    fn line(n: usize, speed: f64) -> DiscreteTrajectory {
        let samples = (0..n)
            .map(|k| {
                let t = k as f64 * 0.1;
                Sample { t, x: Vec3::new(speed * t, 0.0, 0.0), v: Vec3::new(speed, 0.0, 0.0) }
            })
            .collect();
        DiscreteTrajectory::new(samples).unwrap()
    }

    #[test]
    fn two_point_spline_is_linear() {
        let s = interpolate(&[(Vec3::zeros(), 0.0), (Vec3::new(1.0, 0.0, 0.0), 1.0)]).unwrap();
        assert_abs_diff_eq!(s.position(0.5), Vec3::new(0.5, 0.0, 0.0), epsilon = 1e-15);
        assert_abs_diff_eq!(s.integrated_squared_acceleration(), 0.0);
    }

    #[test]
    fn collinear_three_points_stay_on_line() {
        let s = interpolate(&[
            (Vec3::zeros(), 0.0),
            (Vec3::new(0.5, 0.0, 0.0), 0.5),
            (Vec3::new(1.0, 0.0, 0.0), 1.0),
        ])
        .unwrap();
        assert_abs_diff_eq!(s.position(0.5), Vec3::new(0.5, 0.0, 0.0), epsilon = 1e-15);
        assert_abs_diff_eq!(s.position(0.25), Vec3::new(0.25, 0.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn rejects_bad_times() {
        let p = Vec3::zeros();
        assert!(matches!(interpolate(&[(p, 0.0), (p, 0.0)]), Err(Error::InvalidWaypoints(_))));
        assert!(matches!(interpolate(&[(p, 1.0), (p, 0.5)]), Err(Error::InvalidWaypoints(_))));
        assert!(matches!(interpolate(&[(p, 1.0)]), Err(Error::InvalidWaypoints(_))));
    }

    #[test]
    fn time_vector_cases() {
        let s = Vec3::zeros();
        let g = Vec3::new(1.0, 0.0, 0.0);
        let t = path_time_vector(&s, &Vec3::new(0.4, 0.0, 0.0), &g, 5.0).unwrap();
        assert_abs_diff_eq!(t[1], 2.0, epsilon = 1e-12);
        assert_eq!([t[0], t[2]], [0.0, 5.0]);
        let t = path_time_vector(&s, &Vec3::new(0.5, 0.0, 0.0), &g, 4.0).unwrap();
        assert_abs_diff_eq!(t[1], 2.0, epsilon = 1e-12);
        let t = path_time_vector(&s, &s, &g, 5.0).unwrap();
        assert_abs_diff_eq!(t[1], 0.1, epsilon = 1e-12);
        assert!(matches!(path_time_vector(&s, &g, &s, 5.0), Err(Error::DegenerateContext(_))));
    }

    #[test]
    fn segment_constant_speed() {
        let traj = line(80, 0.2);
        let segs = segment(&traj, 10, &test_context()).unwrap();
        assert_eq!(segs.len(), 10);
        for s in &segs.segments {
            assert_eq!(s.end - s.first, 8);
            assert_abs_diff_eq!(s.mean_speed, 0.2, epsilon = 1e-9);
        }
        assert_abs_diff_eq!(segs.total_length(), path_length(&traj), epsilon = 1e-12);
    }

    #[test]
    fn uneven_partition_goes_to_last_segment() {
        let segs = segment(&line(83, 0.1), 10, &test_context()).unwrap();
        assert_eq!(segs.segments[9].end - segs.segments[9].first, 11);
        assert_eq!(segs.segments[9].end, 83);
    }

    #[test]
    fn segmentation_bounds() {
        let traj = line(10, 0.1);
        assert!(matches!(
            segment(&traj, 10, &test_context()),
            Err(Error::InvalidSegmentation { .. })
        ));
        assert!(segment(&traj, 1, &test_context()).is_err());
    }

    #[test]
    fn padded_point_has_zero_length() {
        let samples = (0..5)
            .map(|k| Sample { t: k as f64, x: Vec3::new(0.3, 0.2, 0.1), v: Vec3::zeros() })
            .collect();
        assert_eq!(path_length(&DiscreteTrajectory::new(samples).unwrap()), 0.0);
    }

    #[test]
    fn straight_line_length() {
        let ctx = test_context();
        let s = interpolate(&[(ctx.start, 0.0), (ctx.goal, 5.0)]).unwrap();
        let traj = resample(&s, 80).unwrap();
        assert_abs_diff_eq!(path_length(&traj), ctx.start_goal_distance(), epsilon = 1e-12);
    }

    #[test]
    fn side_normal_points_away_from_base() {
        let ctx = test_context();
        let n = ctx.side_plane_normal();
        assert_abs_diff_eq!(n, Vec3::x(), epsilon = 1e-12);
        let moved = ctx.translated(&Vec3::new(-3.0, 1.0, 0.5));
        assert_abs_diff_eq!(moved.side_plane_normal(), n, epsilon = 1e-12);
    }

    #[test]
    fn context_validation_reports_each_problem() {
        let mut ctx = test_context();
        ctx.obstacle_radius = 0.0;
        ctx.goal = ctx.start;
        match ctx.validate() {
            Err(Error::Schema(list)) => assert_eq!(list.len(), 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
