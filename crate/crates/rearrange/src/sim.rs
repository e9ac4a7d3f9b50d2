//! Closed-loop kinematic execution of task plans.
//!
//! A pose-feedback tracking controller follows planned trajectories, a
//! calibrated noise layer perturbs the commanded velocities, and a
//! grasp/release state machine sequences tasks, checks collisions on every
//! control step, and scores the episode.

use crate::geom::{angle_dist, Pose2};
use crate::occupancy::{collision_check, update_map, CollisionModel, OccupancyMap, Phase};
use crate::scenario::{MotionLimits, Scenario};
use crate::task_plan::TaskPlan;
use crate::trajectory::{integrate_unicycle, Trajectory};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Success thresholds: position below 0.3 m and heading below 45 degrees.
pub const SUCCESS_POS_THRESHOLD: f64 = 0.3;
pub const SUCCESS_ANG_THRESHOLD: f64 = std::f64::consts::FRAC_PI_4;

/// Object roll/pitch magnitude beyond which an episode terminates.
pub const TIP_THRESHOLD: f64 = 0.8;

/// Cross-track error at which the controller is declared lost.
pub const DIVERGENCE_LIMIT: f64 = 1.0;

/// True when a released object counts as successfully placed.
pub fn is_success(pos_error: f64, heading_error: f64) -> bool {
    pos_error < SUCCESS_POS_THRESHOLD && heading_error < SUCCESS_ANG_THRESHOLD
}

/// Episode termination rule: excessive object roll/pitch or lost grasp.
pub fn check_termination(roll: f64, pitch: f64, gripper_contact: bool) -> bool {
    roll.abs() > TIP_THRESHOLD || pitch.abs() > TIP_THRESHOLD || !gripper_contact
}

/// Velocity-noise calibration. The per-axis deviation is derived from the
/// target mean absolute error through the half-normal identity
/// `E|N(0, s)| = s * sqrt(2/pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Target mean absolute error of linear velocity, m/s.
    pub mae_v: f64,
    /// Target mean absolute error of yaw rate, rad/s.
    pub mae_omega: f64,
    /// Reported standard deviation of the tracking error (informational;
    /// the sampler matches the MAE, not the SD).
    pub sd_v: f64,
    pub seed: u64,
}

impl NoiseModel {
    /// Velocity-tracking error statistics of the reference system.
    pub fn calibrated(seed: u64) -> NoiseModel {
        NoiseModel {
            mae_v: 0.0486,
            mae_omega: 0.0486,
            sd_v: 0.0319,
            seed,
        }
    }

    pub fn noiseless(seed: u64) -> NoiseModel {
        NoiseModel {
            mae_v: 0.0,
            mae_omega: 0.0,
            sd_v: 0.0,
            seed,
        }
    }

    pub fn with_mae(mae: f64, seed: u64) -> NoiseModel {
        NoiseModel {
            mae_v: mae,
            mae_omega: mae,
            sd_v: 0.0,
            seed,
        }
    }

    pub fn sigma_v(&self) -> f64 {
        self.mae_v * (std::f64::consts::PI / 2.0).sqrt()
    }

    pub fn sigma_omega(&self) -> f64 {
        self.mae_omega * (std::f64::consts::PI / 2.0).sqrt()
    }

    pub fn stream(&self) -> NoiseStream {
        NoiseStream {
            rng: ChaCha8Rng::seed_from_u64(self.seed),
            sigma_v: self.sigma_v(),
            sigma_omega: self.sigma_omega(),
        }
    }
}

/// Deterministic noise sequence; the same seed yields the same draws.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    rng: ChaCha8Rng,
    sigma_v: f64,
    sigma_omega: f64,
}

impl NoiseStream {
    /// Adds zero-mean per-axis noise to a velocity command
    /// `(v_x, v_y, omega_z)`. Three draws are consumed per call regardless
    /// of the magnitudes, keeping call indices aligned.
    pub fn apply(&mut self, command: (f64, f64, f64)) -> (f64, f64, f64) {
        let zx: f64 = StandardNormal.sample(&mut self.rng);
        let zy: f64 = StandardNormal.sample(&mut self.rng);
        let zw: f64 = StandardNormal.sample(&mut self.rng);
        (
            command.0 + self.sigma_v * zx,
            command.1 + self.sigma_v * zy,
            command.2 + self.sigma_omega * zw,
        )
    }
}

/// Pose-feedback tracking gains and loop rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackerConfig {
    pub k_x: f64,
    pub k_y: f64,
    pub k_theta: f64,
    /// Reference lookahead distance, meters.
    pub lookahead: f64,
    /// Control rate, Hz.
    pub control_rate: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            k_x: 1.0,
            k_y: 4.0,
            k_theta: 2.0,
            lookahead: 0.0,
            control_rate: 50.0,
        }
    }
}

/// Episode-level execution parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeConfig {
    pub tracker: TrackerConfig,
    /// Dwell added to completion time for each grasp / release maneuver.
    pub grasp_dwell: f64,
    pub release_dwell: f64,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            tracker: TrackerConfig::default(),
            grasp_dwell: 3.0,
            release_dwell: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExecutedSample {
    pub t: f64,
    pub pose: Pose2,
    pub v: f64,
    pub omega: f64,
}

/// Outcome of tracking one trajectory.
#[derive(Debug, Clone)]
pub struct TrackResult {
    pub executed: Vec<ExecutedSample>,
    pub completion_time: f64,
    pub max_error: f64,
    pub mean_error: f64,
    pub error_samples: usize,
    pub distance: f64,
    pub end_pose: Pose2,
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("tracking diverged: cross-track error {error:.3} m at t={t:.2} s")]
    Divergence { t: f64, error: f64 },
    #[error("collision at t={t:.2} s, pose ({x:.2}, {y:.2})")]
    Collision { t: f64, x: f64, y: f64 },
    #[error("episode aborted on collision during task {task_index} at ({x:.2}, {y:.2})")]
    CollisionAbort {
        task_index: usize,
        x: f64,
        y: f64,
        partial: Box<EpisodeResult>,
    },
    #[error("episode diverged during task {task_index}")]
    DivergenceAbort {
        task_index: usize,
        partial: Box<EpisodeResult>,
    },
}

/// Optional collision context checked at every control step.
pub struct CollisionGuard<'a> {
    pub model: &'a CollisionModel,
    pub map: &'a OccupancyMap,
}

// endpoint capture tolerances for the settle phase after the reference
// ends; kept above the stationary error floor of the calibrated noise so
// noisy runs still capture promptly
const CAPTURE_POS: f64 = 0.02;
const CAPTURE_ANG: f64 = 0.02;

/// Follows `traj` from `start` with pose feedback in the robot frame:
/// `v = v_ref cos(e_th) + k_x e_x`, `w = w_ref + k_y v_ref e_y + k_th sin(e_th)`.
/// Commands are saturated to the limits, perturbed by the noise stream, and
/// integrated with the exact unicycle model. The commanded lateral velocity
/// is always zero; the plant has no lateral degree of freedom.
pub fn track_trajectory(
    traj: &Trajectory,
    start: &Pose2,
    tracker: &TrackerConfig,
    noise: &mut NoiseStream,
    limits: &MotionLimits,
    guard: Option<&CollisionGuard>,
) -> Result<TrackResult, SimError> {
    let mut executed = vec![ExecutedSample {
        t: 0.0,
        pose: *start,
        v: 0.0,
        omega: 0.0,
    }];
    if traj.is_stationary() {
        return Ok(TrackResult {
            executed,
            completion_time: 0.0,
            max_error: 0.0,
            mean_error: 0.0,
            error_samples: 0,
            distance: 0.0,
            end_pose: *start,
        });
    }
    let dt = 1.0 / tracker.control_rate;
    let settle_limit = traj.duration + (0.25 * traj.duration).max(2.0);
    let goal = traj.end_pose();
    let mut pose = *start;
    let mut max_error: f64 = 0.0;
    let mut sum_error = 0.0;
    let mut error_samples = 0usize;
    let mut distance = 0.0;
    let mut step: u64 = 0;
    loop {
        let t = step as f64 * dt;
        let tracking_phase = t <= traj.duration;
        if !tracking_phase {
            let captured = pose.distance(&goal) < CAPTURE_POS
                && pose.heading_dist(&goal) < CAPTURE_ANG;
            if captured || t >= settle_limit {
                return Ok(TrackResult {
                    executed,
                    completion_time: t,
                    max_error,
                    mean_error: sum_error / error_samples.max(1) as f64,
                    error_samples,
                    distance,
                    end_pose: pose,
                });
            }
        }
        let ref_t = if tracker.lookahead > 0.0 {
            let (_, v_here, _) = traj.state_at(t.min(traj.duration));
            t + tracker.lookahead / v_here.abs().max(0.2)
        } else {
            t
        };
        let (ref_pose, v_ref, omega_ref) = traj.state_at(ref_t.min(traj.duration));
        let err = pose.distance(&ref_pose);
        if tracking_phase {
            max_error = max_error.max(err);
            sum_error += err;
            error_samples += 1;
            if err > DIVERGENCE_LIMIT {
                return Err(SimError::Divergence { t, error: err });
            }
        }
        let (s, c) = pose.theta.sin_cos();
        let dx = ref_pose.x - pose.x;
        let dy = ref_pose.y - pose.y;
        let e_x = c * dx + s * dy;
        let e_y = -s * dx + c * dy;
        let e_theta = crate::geom::wrap_angle(ref_pose.theta - pose.theta);
        let (v_ref, omega_ref) = if tracking_phase {
            (v_ref, omega_ref)
        } else {
            (0.0, 0.0)
        };
        let v_cmd = (v_ref * e_theta.cos() + tracker.k_x * e_x).clamp(-limits.v_max, limits.v_max);
        let omega_cmd = (omega_ref + tracker.k_y * v_ref * e_y + tracker.k_theta * e_theta.sin())
            .clamp(-limits.omega_max, limits.omega_max);
        let (v_act, _, omega_act) = noise.apply((v_cmd, 0.0, omega_cmd));
        pose = integrate_unicycle(&pose, v_act, omega_act, dt);
        distance += v_act.abs() * dt;
        step += 1;
        executed.push(ExecutedSample {
            t: step as f64 * dt,
            pose,
            v: v_act,
            omega: omega_act,
        });
        if let Some(g) = guard {
            if collision_check(&pose, g.model, g.map) {
                return Err(SimError::Collision {
                    t: step as f64 * dt,
                    x: pose.x,
                    y: pose.y,
                });
            }
        }
    }
}

/// Placement outcome for one object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectOutcome {
    pub object_id: String,
    pub pos_error: f64,
    pub heading_error: f64,
    pub success: bool,
}

/// Executed path of one tracked segment, for dump output.
#[derive(Debug, Clone)]
pub struct ExecutedSegment {
    pub task_index: usize,
    pub label: String,
    pub samples: Vec<ExecutedSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub per_object: Vec<ObjectOutcome>,
    pub completion_time: f64,
    pub total_distance: f64,
    pub collision_events: usize,
    pub max_tracking_error: f64,
    pub mean_tracking_error: f64,
}

impl EpisodeResult {
    pub fn successes(&self) -> usize {
        self.per_object.iter().filter(|o| o.success).count()
    }
}

/// Full episode output: scores plus the executed paths.
#[derive(Debug, Clone)]
pub struct EpisodeTrace {
    pub result: EpisodeResult,
    pub segments: Vec<ExecutedSegment>,
}

/// Executes a realized plan task by task: track the approach, grasp (the
/// object attaches rigidly at the grasp offset and the map frees it), track
/// the transfer, release (the object detaches and becomes an obstacle at
/// its released pose). Collision checks run on every control step with the
/// phase-appropriate footprint.
pub fn run_episode(
    scenario: &Scenario,
    plan: &TaskPlan,
    config: &EpisodeConfig,
    noise: &NoiseModel,
) -> Result<EpisodeTrace, SimError> {
    let mut stream = noise.stream();
    let robot_model = CollisionModel::robot_only(&scenario.footprint);
    let mut object_poses: Vec<Pose2> =
        scenario.objects.iter().map(|o| o.initial_pose).collect();
    let mut robot = scenario.robot_start;
    let mut completion_time = 0.0;
    let mut total_distance = 0.0;
    let mut max_err: f64 = 0.0;
    let mut err_sum = 0.0;
    let mut err_samples = 0usize;
    let mut per_object: Vec<ObjectOutcome> = Vec::new();
    let mut segments = Vec::new();

    macro_rules! snapshot {
        ($collisions:expr) => {
            EpisodeResult {
                per_object: per_object.clone(),
                completion_time,
                total_distance,
                collision_events: $collisions,
                max_tracking_error: max_err,
                mean_tracking_error: err_sum / err_samples.max(1) as f64,
            }
        };
    }

    for (k, task) in plan.tasks.iter().enumerate() {
        let object = &scenario.objects[task.object_index];
        let current_map = {
            let mut m = OccupancyMap::from_scenario(scenario);
            for (idx, pose) in object_poses.iter().enumerate() {
                m = m
                    .with_object_moved(&scenario.objects[idx].id, pose)
                    .expect("object exists");
            }
            m
        };

        // approach
        let pre_map = update_map(&current_map, None, Phase::PreGrasp).expect("valid phase");
        let guard = CollisionGuard {
            model: &robot_model,
            map: &pre_map,
        };
        let pre = match track_trajectory(
            &task.pre,
            &robot,
            &config.tracker,
            &mut stream,
            &scenario.limits,
            Some(&guard),
        ) {
            Ok(r) => r,
            Err(SimError::Collision { x, y, .. }) => {
                return Err(SimError::CollisionAbort {
                    task_index: k,
                    x,
                    y,
                    partial: Box::new(snapshot!(1)),
                })
            }
            Err(SimError::Divergence { .. }) => {
                return Err(SimError::DivergenceAbort {
                    task_index: k,
                    partial: Box::new(snapshot!(0)),
                })
            }
            Err(e) => return Err(e),
        };
        robot = pre.end_pose;
        completion_time += pre.completion_time + config.grasp_dwell;
        total_distance += pre.distance;
        max_err = max_err.max(pre.max_error);
        err_sum += pre.mean_error * pre.error_samples as f64;
        err_samples += pre.error_samples;
        segments.push(ExecutedSegment {
            task_index: k,
            label: format!("task{:02}_pre", k + 1),
            samples: pre.executed,
        });

        // grasp: rigid attachment at the grasp offset
        let attach = object.grasp_offset.inverse();
        object_poses[task.object_index] = robot.compose(&attach);

        // transfer
        let post_map =
            update_map(&current_map, Some(&object.id), Phase::PostGrasp).expect("valid phase");
        let coupled_model = CollisionModel::robot_with_object(
            &scenario.footprint,
            (attach.x, attach.y),
            object.collision_radius,
        );
        let guard = CollisionGuard {
            model: &coupled_model,
            map: &post_map,
        };
        let post = match track_trajectory(
            &task.post,
            &robot,
            &config.tracker,
            &mut stream,
            &scenario.limits,
            Some(&guard),
        ) {
            Ok(r) => r,
            Err(SimError::Collision { x, y, .. }) => {
                return Err(SimError::CollisionAbort {
                    task_index: k,
                    x,
                    y,
                    partial: Box::new(snapshot!(1)),
                })
            }
            Err(SimError::Divergence { .. }) => {
                return Err(SimError::DivergenceAbort {
                    task_index: k,
                    partial: Box::new(snapshot!(0)),
                })
            }
            Err(e) => return Err(e),
        };
        robot = post.end_pose;
        completion_time += post.completion_time + config.release_dwell;
        total_distance += post.distance;
        max_err = max_err.max(post.max_error);
        err_sum += post.mean_error * post.error_samples as f64;
        err_samples += post.error_samples;
        segments.push(ExecutedSegment {
            task_index: k,
            label: format!("task{:02}_post", k + 1),
            samples: post.executed,
        });

        // release at the current coupled pose
        let released = robot.compose(&attach);
        object_poses[task.object_index] = released;
        let target = scenario.targets[task.target_index];
        let pos_error = released.distance(&target);
        let heading_error = angle_dist(released.theta, target.theta);
        per_object.push(ObjectOutcome {
            object_id: object.id.clone(),
            pos_error,
            heading_error,
            success: is_success(pos_error, heading_error),
        });
    }

    Ok(EpisodeTrace {
        result: snapshot!(0),
        segments,
    })
}

/// Gerono-lemniscate figure-eight reference fitted to a bounding box of
/// `length x width` meters, arc-length parameterized at constant `speed`,
/// discretized as constant twists every `dt` seconds.
pub fn figure_eight_trajectory(length: f64, width: f64, speed: f64, dt: f64) -> Trajectory {
    let a = length / 2.0;
    let b = width / 2.0;
    let param_speed =
        |t: f64| -> f64 { ((a * t.sin()).powi(2) + (2.0 * b * (2.0 * t).cos()).powi(2)).sqrt() };
    let curvature = |t: f64| -> f64 {
        let sp = param_speed(t);
        let num =
            4.0 * a * b * t.sin() * (2.0 * t).sin() + 2.0 * a * b * t.cos() * (2.0 * t).cos();
        num / sp.powi(3)
    };
    let total = figure_eight_arc_length(length, width);
    let mut twists = Vec::new();
    let mut t_param = 0.0_f64;
    let mut s = 0.0_f64;
    while s < total - 1e-12 {
        let step_s = (speed * dt).min(total - s);
        let step_dt = step_s / speed;
        let t_half = t_param + 0.5 * step_s / param_speed(t_param).max(1e-9);
        twists.push((speed, speed * curvature(t_half), step_dt));
        t_param += step_s / param_speed(t_half).max(1e-9);
        s += step_s;
    }
    let start = Pose2::new(a, 0.0, std::f64::consts::FRAC_PI_2);
    Trajectory::from_twists(start, &twists)
}

/// Arc length of the fitted lemniscate by fine trapezoidal quadrature.
pub fn figure_eight_arc_length(length: f64, width: f64) -> f64 {
    let a = length / 2.0;
    let b = width / 2.0;
    let n = 200_000;
    let h = 2.0 * std::f64::consts::PI / n as f64;
    let f = |t: f64| ((a * t.sin()).powi(2) + (2.0 * b * (2.0 * t).cos()).powi(2)).sqrt();
    let mut sum = 0.5 * (f(0.0) + f(2.0 * std::f64::consts::PI));
    for k in 1..n {
        sum += f(k as f64 * h);
    }
    sum * h
}

/// Metrics file header shared by the simulate and benchmark commands.
pub const METRICS_HEADER: &str =
    "scenario,method,seed,completion_time_s,total_distance_m,collisions,max_err_m,mean_err_m,successes";

/// Formats one metrics row.
pub fn metrics_row(scenario: &str, method: &str, seed: u64, result: &EpisodeResult) -> String {
    format!(
        "{},{},{},{:.6},{:.6},{},{:.6},{:.6},{}",
        scenario,
        method,
        seed,
        result.completion_time,
        result.total_distance,
        result.collision_events,
        result.max_tracking_error,
        result.mean_tracking_error,
        result.successes()
    )
}
