//! Time-parameterized SE(2) trajectories under differential-drive kinematics.
//!
//! A trajectory is a list of samples `(t, pose, v, omega)` where the control
//! of sample k is held constant on `[t_k, t_{k+1})`. Poses are generated by
//! exact constant-twist integration, so re-integrating the controls
//! reproduces the stored poses.

use crate::geom::{wrap_angle, Pose2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

const OMEGA_EPS: f64 = 1e-9;

/// Exact constant-twist advance of a unicycle pose over `dt` seconds.
///
/// Straight-line advance when `|omega| < 1e-9`, closed-form circular arc
/// otherwise.
pub fn integrate_unicycle(pose: &Pose2, v: f64, omega: f64, dt: f64) -> Pose2 {
    if omega.abs() < OMEGA_EPS {
        let (s, c) = pose.theta.sin_cos();
        Pose2 {
            x: pose.x + v * dt * c,
            y: pose.y + v * dt * s,
            theta: pose.theta,
        }
    } else {
        let radius = v / omega;
        let theta_next = pose.theta + omega * dt;
        Pose2 {
            x: pose.x + radius * (theta_next.sin() - pose.theta.sin()),
            y: pose.y - radius * (theta_next.cos() - pose.theta.cos()),
            theta: wrap_angle(theta_next),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub pose: Pose2,
    pub v: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub duration: f64,
}

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("trajectory invariant violated: {0}")]
    Invariant(String),
    #[error("trajectory dump parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Trajectory {
    /// A stationary trajectory: one sample, zero duration.
    pub fn stationary(pose: Pose2) -> Trajectory {
        Trajectory {
            samples: vec![TrajectorySample {
                t: 0.0,
                pose,
                v: 0.0,
                omega: 0.0,
            }],
            duration: 0.0,
        }
    }

    /// Builds a trajectory from a start pose and a sequence of constant
    /// twists `(v, omega, dt)`. Poses are derived by exact integration.
    pub fn from_twists(start: Pose2, twists: &[(f64, f64, f64)]) -> Trajectory {
        let mut samples = Vec::with_capacity(twists.len() + 1);
        let mut pose = start;
        let mut t = 0.0;
        for &(v, omega, dt) in twists {
            samples.push(TrajectorySample { t, pose, v, omega });
            pose = integrate_unicycle(&pose, v, omega, dt);
            t += dt;
        }
        samples.push(TrajectorySample {
            t,
            pose,
            v: 0.0,
            omega: 0.0,
        });
        Trajectory {
            samples,
            duration: t,
        }
    }

    pub fn start_pose(&self) -> Pose2 {
        self.samples.first().expect("non-empty trajectory").pose
    }

    pub fn end_pose(&self) -> Pose2 {
        self.samples.last().expect("non-empty trajectory").pose
    }

    pub fn is_stationary(&self) -> bool {
        self.duration == 0.0
    }

    /// Pose and control at time `t` (clamped to `[0, duration]`), obtained
    /// by exact integration within the active segment.
    pub fn state_at(&self, t: f64) -> (Pose2, f64, f64) {
        let t = t.clamp(0.0, self.duration);
        let last = self.samples.last().expect("non-empty trajectory");
        if t >= last.t {
            return (last.pose, last.v, last.omega);
        }
        let idx = match self
            .samples
            .binary_search_by(|s| s.t.partial_cmp(&t).expect("finite times"))
        {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        let s = &self.samples[idx];
        let pose = integrate_unicycle(&s.pose, s.v, s.omega, t - s.t);
        (pose, s.v, s.omega)
    }

    /// Path length integrated from the control sequence.
    pub fn path_length(&self) -> f64 {
        self.samples
            .windows(2)
            .map(|w| w[0].v.abs() * (w[1].t - w[0].t))
            .sum()
    }

    /// Poses spaced at most `ds` meters apart along the path (plus every
    /// stored sample), for dense collision re-checks.
    pub fn resample_by_distance(&self, ds: f64) -> Vec<Pose2> {
        let mut out = Vec::new();
        for w in self.samples.windows(2) {
            let seg_len = w[0].v.abs() * (w[1].t - w[0].t);
            let arc_steps = (seg_len / ds).ceil().max(1.0) as usize;
            // in-place rotations still get checked at intermediate headings
            let rot = (w[0].omega * (w[1].t - w[0].t)).abs();
            let steps = arc_steps.max((rot / 0.1).ceil() as usize).max(1);
            let dt = (w[1].t - w[0].t) / steps as f64;
            for k in 0..steps {
                out.push(integrate_unicycle(&w[0].pose, w[0].v, w[0].omega, dt * k as f64));
            }
        }
        out.push(self.end_pose());
        out
    }

    /// Validates sample ordering, kinematic consistency, and velocity limits.
    pub fn validate(&self, v_max: f64, omega_max: f64, tol: f64) -> Result<(), TrajectoryError> {
        if self.samples.is_empty() {
            return Err(TrajectoryError::Invariant("no samples".into()));
        }
        if self.samples[0].t != 0.0 {
            return Err(TrajectoryError::Invariant("first sample not at t=0".into()));
        }
        let last_t = self.samples.last().unwrap().t;
        if (last_t - self.duration).abs() > 1e-9 {
            return Err(TrajectoryError::Invariant(format!(
                "duration {} does not match last sample time {last_t}",
                self.duration
            )));
        }
        for (i, s) in self.samples.iter().enumerate() {
            if s.v.abs() > v_max + 1e-9 || s.omega.abs() > omega_max + 1e-9 {
                return Err(TrajectoryError::Invariant(format!(
                    "sample {i} exceeds velocity limits"
                )));
            }
        }
        for (i, w) in self.samples.windows(2).enumerate() {
            if w[1].t <= w[0].t {
                return Err(TrajectoryError::Invariant(format!(
                    "non-increasing time at sample {}",
                    i + 1
                )));
            }
            let predicted = integrate_unicycle(&w[0].pose, w[0].v, w[0].omega, w[1].t - w[0].t);
            let pos_err = predicted.distance(&w[1].pose);
            let ang_err = predicted.heading_dist(&w[1].pose);
            if pos_err > tol || ang_err > tol {
                return Err(TrajectoryError::Invariant(format!(
                    "kinematic inconsistency at sample {} (pos {pos_err:.2e}, ang {ang_err:.2e})",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    /// Plain-text dump: header line then `t x y theta v omega` per sample.
    pub fn dump(&self) -> String {
        let mut out = String::from("# trajectory v1\n");
        for s in &self.samples {
            out.push_str(&format!(
                "{:.6} {:.6} {:.6} {:.6} {:.6} {:.6}\n",
                s.t, s.pose.x, s.pose.y, s.pose.theta, s.v, s.omega
            ));
        }
        out
    }

    pub fn parse_dump(text: &str) -> Result<Trajectory, TrajectoryError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == "# trajectory v1" => {}
            _ => {
                return Err(TrajectoryError::Parse {
                    line: 1,
                    reason: "missing `# trajectory v1` header".into(),
                })
            }
        }
        let mut samples = Vec::new();
        for (i, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<f64> = line
                .split_whitespace()
                .map(|f| f.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| TrajectoryError::Parse {
                    line: i + 1,
                    reason: e.to_string(),
                })?;
            if fields.len() != 6 {
                return Err(TrajectoryError::Parse {
                    line: i + 1,
                    reason: format!("expected 6 fields, got {}", fields.len()),
                });
            }
            samples.push(TrajectorySample {
                t: fields[0],
                pose: Pose2::new(fields[1], fields[2], fields[3]),
                v: fields[4],
                omega: fields[5],
            });
        }
        if samples.is_empty() {
            return Err(TrajectoryError::Parse {
                line: 1,
                reason: "no samples".into(),
            });
        }
        let duration = samples.last().unwrap().t;
        Ok(Trajectory { samples, duration })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn straight_advance() {
        let p = integrate_unicycle(&Pose2::identity(), 1.0, 0.0, 1.0);
        assert!((p.x - 1.0).abs() < 1e-12);
        assert!(p.y.abs() < 1e-12);
        assert!(p.theta.abs() < 1e-12);
    }

    #[test]
    fn pure_rotation() {
        let p = integrate_unicycle(&Pose2::identity(), 0.0, PI / 2.0, 1.0);
        assert!(p.x.abs() < 1e-12);
        assert!(p.y.abs() < 1e-12);
        assert!((p.theta - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn quarter_arc() {
        // closed form: x = (v/w) sin(wt), y = (v/w)(1 - cos(wt))
        let p = integrate_unicycle(&Pose2::identity(), 1.0, 1.0, PI / 2.0);
        assert!((p.x - 1.0).abs() < 1e-12);
        assert!((p.y - 1.0).abs() < 1e-12);
        assert!((p.theta - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn constant_twist_reversibility() {
        let start = Pose2::new(0.4, -0.8, 0.3);
        let mid = integrate_unicycle(&start, 0.7, -0.9, 1.3);
        let back = integrate_unicycle(&mid, -0.7, 0.9, 1.3);
        assert!(back.distance(&start) < 1e-9);
        assert!(back.heading_dist(&start) < 1e-9);
    }

    #[test]
    fn from_twists_is_consistent() {
        let traj = Trajectory::from_twists(
            Pose2::identity(),
            &[(1.0, 0.0, 0.5), (1.0, 0.5, 1.0), (-0.5, -1.0, 0.8)],
        );
        traj.validate(1.0, 1.0, 1e-9).unwrap();
        assert!((traj.duration - 2.3).abs() < 1e-12);
    }

    #[test]
    fn state_at_interpolates_exactly() {
        let traj = Trajectory::from_twists(Pose2::identity(), &[(1.0, 0.2, 2.0)]);
        let (pose, v, _) = traj.state_at(1.0);
        let expect = integrate_unicycle(&Pose2::identity(), 1.0, 0.2, 1.0);
        assert!(pose.distance(&expect) < 1e-12);
        assert_eq!(v, 1.0);
    }

    #[test]
    fn dump_round_trip() {
        let traj = Trajectory::from_twists(Pose2::identity(), &[(1.0, 0.0, 0.5), (0.5, 0.3, 0.7)]);
        let text = traj.dump();
        assert!(text.starts_with("# trajectory v1\n"));
        let parsed = Trajectory::parse_dump(&text).unwrap();
        assert_eq!(parsed.samples.len(), traj.samples.len());
        for (a, b) in parsed.samples.iter().zip(&traj.samples) {
            assert!((a.t - b.t).abs() < 1e-6);
            assert!(a.pose.distance(&b.pose) < 1e-5);
        }
    }

    #[test]
    fn rejects_missing_header() {
        assert!(Trajectory::parse_dump("0 0 0 0 0 0\n").is_err());
    }
}
