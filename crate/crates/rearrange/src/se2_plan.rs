//! Collision-free SE(2) trajectory planning for a differential-drive base.
//!
//! The planner runs a best-first lattice search over (x, y, heading) using
//! constant-twist motion primitives (straight, arcs at half/full yaw rate,
//! optional backward variants, in-place rotation) under an admissible
//! straight-line-time heuristic. Endpoints are closed exactly with an
//! analytic rotate-translate-rotate connection, so returned trajectories
//! terminate on the goal pose rather than a lattice cell.

use crate::geom::{angle_dist, wrap_angle, Pose2};
use crate::occupancy::{collision_check_inflated, update_map, CollisionModel, OccupancyMap, Phase};
use crate::scenario::MotionLimits;
use crate::trajectory::{integrate_unicycle, Trajectory};
use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use thiserror::Error;

/// Detection range of the coarse-to-fine replanning trigger, meters.
pub const DETECTION_RANGE: f64 = 5.0;

/// Endpoint tolerance of [`Se2Planner::plan`], meters / radians.
pub const ENDPOINT_POS_TOL: f64 = 0.05;
pub const ENDPOINT_ANG_TOL: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlanError {
    #[error("goal pose is in collision")]
    GoalInCollision,
    #[error("start pose is in collision")]
    StartInCollision,
    #[error("no collision-free path found")]
    NoPathFound,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannerConfig {
    /// Lattice cell size in x and y, meters.
    pub xy_resolution: f64,
    /// Number of discrete headings per full turn.
    pub heading_count: usize,
    /// Arc length of one translating motion primitive, meters.
    pub step_length: f64,
    /// Whether backward primitives are generated.
    pub allow_backward: bool,
    /// Distance below which every expansion attempts the analytic connect.
    pub analytic_radius: f64,
    /// Every n-th expansion also attempts the analytic connect.
    pub analytic_period: usize,
    /// Extra clearance applied during search so that poses between
    /// collision samples stay clear at the nominal margin.
    pub safety_inflation: f64,
    /// Expansion budget before giving up.
    pub max_expansions: usize,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            xy_resolution: 0.1,
            heading_count: 16,
            step_length: 0.2,
            allow_backward: true,
            analytic_radius: 3.0,
            analytic_period: 8,
            safety_inflation: 0.10,
            max_expansions: 400_000,
        }
    }
}

/// Abstract planning interface consumed by the task planner, so cost-matrix
/// construction can be backed by any trajectory source.
pub trait TrajectoryPlanner: Sync {
    fn plan(
        &self,
        start: &Pose2,
        goal: &Pose2,
        model: &CollisionModel,
        map: &OccupancyMap,
        limits: &MotionLimits,
    ) -> Result<Trajectory, PlanError>;
}

/// Lattice planner with analytic endpoint closure.
#[derive(Debug, Clone, Default)]
pub struct Se2Planner {
    pub config: PlannerConfig,
}

impl Se2Planner {
    pub fn new(config: PlannerConfig) -> Self {
        Self { config }
    }
}

impl TrajectoryPlanner for Se2Planner {
    fn plan(
        &self,
        start: &Pose2,
        goal: &Pose2,
        model: &CollisionModel,
        map: &OccupancyMap,
        limits: &MotionLimits,
    ) -> Result<Trajectory, PlanError> {
        plan_se2(start, goal, model, map, limits, &self.config)
    }
}

/// Composes the object pose with the object-frame grasp offset, yielding the
/// robot's pre-grasp pose.
pub fn pre_grasp_pose(object_pose: &Pose2, grasp_offset: &Pose2) -> Pose2 {
    object_pose.compose(grasp_offset)
}

struct PathChecker<'a> {
    model: &'a CollisionModel,
    map: &'a OccupancyMap,
    inflation: f64,
    /// Arc-length spacing between collision samples such that the inflation
    /// covers the worst-case footprint motion between samples.
    check_ds: f64,
    check_dtheta: f64,
}

impl<'a> PathChecker<'a> {
    fn new(
        model: &'a CollisionModel,
        map: &'a OccupancyMap,
        limits: &MotionLimits,
        inflation: f64,
    ) -> Self {
        let lever = model.max_offset().max(1e-6);
        // between samples ds apart the footprint centers move by at most
        // ds * (1 + lever * omega_max / v_max); keep half of that below the
        // inflation so intermediate poses stay clear at the nominal margin
        let ratio = 1.0 + lever * limits.omega_max / limits.v_max.max(1e-9);
        let check_ds = (2.0 * inflation / ratio).clamp(0.005, 0.1);
        let check_dtheta = (2.0 * inflation / lever).clamp(0.005, 0.2);
        Self {
            model,
            map,
            inflation,
            check_ds,
            check_dtheta,
        }
    }

    fn pose_clear(&self, pose: &Pose2) -> bool {
        !collision_check_inflated(pose, self.model, self.map, self.inflation)
    }

    /// Checks the constant twist from `pose` over `dt`, excluding the start
    /// pose (assumed already checked) but including the endpoint.
    fn twist_clear(&self, pose: &Pose2, v: f64, omega: f64, dt: f64) -> bool {
        let arc = v.abs() * dt;
        let rot = omega.abs() * dt;
        let steps = ((arc / self.check_ds).ceil())
            .max((rot / self.check_dtheta).ceil())
            .max(1.0) as usize;
        let sub = dt / steps as f64;
        for k in 1..=steps {
            let p = integrate_unicycle(pose, v, omega, sub * k as f64);
            if !self.pose_clear(&p) {
                return false;
            }
        }
        true
    }

    fn twists_clear(&self, start: &Pose2, twists: &[(f64, f64, f64)]) -> bool {
        let mut pose = *start;
        for &(v, omega, dt) in twists {
            if !self.twist_clear(&pose, v, omega, dt) {
                return false;
            }
            pose = integrate_unicycle(&pose, v, omega, dt);
        }
        true
    }
}

/// Exact rotate-translate-rotate twist sequence from `from` to `to`.
/// Returns the cheaper of the forward and (when allowed) backward variant.
fn rtr_twists(
    from: &Pose2,
    to: &Pose2,
    limits: &MotionLimits,
    allow_backward: bool,
) -> Vec<(f64, f64, f64)> {
    let d = from.distance(to);
    let mut best: Option<(f64, Vec<(f64, f64, f64)>)> = None;
    let mut consider = |twists: Vec<(f64, f64, f64)>| {
        let total: f64 = twists.iter().map(|t| t.2).sum();
        if best.as_ref().map_or(true, |(t, _)| total < *t) {
            best = Some((total, twists));
        }
    };
    let rotation = |a: f64, b: f64| -> Option<(f64, f64, f64)> {
        let delta = wrap_angle(b - a);
        if delta.abs() < 1e-12 {
            None
        } else {
            Some((0.0, limits.omega_max.copysign(delta), delta.abs() / limits.omega_max))
        }
    };
    if d < 1e-9 {
        let twists: Vec<_> = rotation(from.theta, to.theta).into_iter().collect();
        consider(twists);
    } else {
        let bearing = (to.y - from.y).atan2(to.x - from.x);
        let mut forward = Vec::new();
        forward.extend(rotation(from.theta, bearing));
        forward.push((limits.v_max, 0.0, d / limits.v_max));
        forward.extend(rotation(bearing, to.theta));
        consider(forward);
        if allow_backward {
            let back_bearing = wrap_angle(bearing + std::f64::consts::PI);
            let mut backward = Vec::new();
            backward.extend(rotation(from.theta, back_bearing));
            backward.push((-limits.v_max, 0.0, d / limits.v_max));
            backward.extend(rotation(back_bearing, to.theta));
            consider(backward);
        }
    }
    best.map(|(_, t)| t).unwrap_or_default()
}

#[derive(Clone, Copy)]
struct Node {
    pose: Pose2,
    g: f64,
    parent: usize,
    twist: (f64, f64, f64),
}

struct HeapEntry {
    f: f64,
    seq: u64,
    idx: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.f == other.f && self.seq == other.seq
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (f, seq) through BinaryHeap's max ordering
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

fn heuristic(pose: &Pose2, goal: &Pose2, limits: &MotionLimits) -> f64 {
    let travel = pose.distance(goal) / limits.v_max;
    let turn = angle_dist(pose.theta, goal.theta) / limits.omega_max;
    travel.max(turn)
}

/// Plans a collision-free trajectory from `start` to `goal`.
///
/// The returned trajectory starts exactly at `start`, ends exactly at
/// `goal` (analytic closure), never exceeds the motion limits, and every
/// pose along it passes [`crate::occupancy::collision_check`].
pub fn plan_se2(
    start: &Pose2,
    goal: &Pose2,
    model: &CollisionModel,
    map: &OccupancyMap,
    limits: &MotionLimits,
    config: &PlannerConfig,
) -> Result<Trajectory, PlanError> {
    let checker = PathChecker::new(model, map, limits, config.safety_inflation);
    // connects fall back to half inflation so tight endpoint approaches
    // stay reachable while keeping slack for execution noise
    let half = PathChecker::new(model, map, limits, 0.5 * config.safety_inflation);
    let plain = PathChecker::new(model, map, limits, 0.0);
    if !plain.pose_clear(goal) {
        return Err(PlanError::GoalInCollision);
    }
    if !plain.pose_clear(start) {
        return Err(PlanError::StartInCollision);
    }
    if start.distance(goal) < 1e-12 && start.heading_dist(goal) < 1e-12 {
        return Ok(Trajectory::stationary(*start));
    }

    let try_connect = |pose: &Pose2| -> Option<Vec<(f64, f64, f64)>> {
        let twists = rtr_twists(pose, goal, limits, config.allow_backward);
        if twists.is_empty() {
            return None;
        }
        if checker.twists_clear(pose, &twists) || half.twists_clear(pose, &twists) {
            Some(twists)
        } else {
            None
        }
    };

    let bucket = |pose: &Pose2| -> (i64, i64, i64) {
        let h = (wrap_angle(pose.theta) + std::f64::consts::PI)
            / (2.0 * std::f64::consts::PI / config.heading_count as f64);
        (
            (pose.x / config.xy_resolution).round() as i64,
            (pose.y / config.xy_resolution).round() as i64,
            (h.round() as i64).rem_euclid(config.heading_count as i64),
        )
    };

    let mut primitives: Vec<(f64, f64, f64)> = Vec::new();
    let dt_arc = config.step_length / limits.v_max;
    for omega in [
        0.0,
        limits.omega_max,
        -limits.omega_max,
        0.5 * limits.omega_max,
        -0.5 * limits.omega_max,
    ] {
        primitives.push((limits.v_max, omega, dt_arc));
        if config.allow_backward {
            primitives.push((-limits.v_max, omega, dt_arc));
        }
    }
    let dtheta = 2.0 * std::f64::consts::PI / config.heading_count as f64;
    primitives.push((0.0, limits.omega_max, dtheta / limits.omega_max));
    primitives.push((0.0, -limits.omega_max, dtheta / limits.omega_max));

    let mut arena: Vec<Node> = vec![Node {
        pose: *start,
        g: 0.0,
        parent: usize::MAX,
        twist: (0.0, 0.0, 0.0),
    }];
    let mut open = BinaryHeap::new();
    let mut best_g: HashMap<(i64, i64, i64), f64> = HashMap::new();
    let mut seq: u64 = 0;
    open.push(HeapEntry {
        f: heuristic(start, goal, limits),
        seq,
        idx: 0,
    });
    best_g.insert(bucket(start), 0.0);

    let assemble = |arena: &[Node], idx: usize, tail: Vec<(f64, f64, f64)>| -> Trajectory {
        let mut twists = Vec::new();
        let mut cur = idx;
        while cur != 0 {
            twists.push(arena[cur].twist);
            cur = arena[cur].parent;
        }
        twists.reverse();
        twists.extend(tail);
        Trajectory::from_twists(*start, &twists)
    };

    let mut expansions: usize = 0;
    while let Some(entry) = open.pop() {
        let node = arena[entry.idx];
        let b = bucket(&node.pose);
        if let Some(&g) = best_g.get(&b) {
            if node.g > g + 1e-12 {
                continue; // stale heap entry
            }
        }
        expansions += 1;
        if expansions > config.max_expansions {
            return Err(PlanError::NoPathFound);
        }

        let near = node.pose.distance(goal) <= config.analytic_radius;
        if near || expansions == 1 || expansions % config.analytic_period == 0 {
            if let Some(tail) = try_connect(&node.pose) {
                return Ok(assemble(&arena, entry.idx, tail));
            }
        }

        for &(v, omega, dt) in &primitives {
            if !checker.twist_clear(&node.pose, v, omega, dt) {
                continue;
            }
            let pose = integrate_unicycle(&node.pose, v, omega, dt);
            let nb = bucket(&pose);
            let g = node.g + dt;
            match best_g.get(&nb) {
                Some(&prev) if prev <= g + 1e-12 => continue,
                _ => {}
            }
            best_g.insert(nb, g);
            arena.push(Node {
                pose,
                g,
                parent: entry.idx,
                twist: (v, omega, dt),
            });
            seq += 1;
            open.push(HeapEntry {
                f: g + heuristic(&pose, goal, limits),
                seq,
                idx: arena.len() - 1,
            });
        }
    }
    Err(PlanError::NoPathFound)
}

/// Result of the two-stage approach plan: the truncated coarse trajectory
/// (ending at the trigger), the fine replanned trajectory, and the pose at
/// which detection triggers.
#[derive(Debug, Clone)]
pub struct CoarseToFine {
    pub coarse: Trajectory,
    pub fine: Trajectory,
    pub trigger_pose: Pose2,
}

/// Plans an approach to an approximately-known object, then replans from the
/// first pose within [`DETECTION_RANGE`] of the estimate to the pre-grasp
/// pose of the true object location.
pub fn coarse_to_fine(
    robot: &Pose2,
    approx_object_pose: &Pose2,
    true_object_pose: &Pose2,
    grasp_offset: &Pose2,
    map: &OccupancyMap,
    model: &CollisionModel,
    limits: &MotionLimits,
    config: &PlannerConfig,
) -> Result<CoarseToFine, PlanError> {
    let map = update_map(map, None, Phase::PreGrasp).expect("phase update without object");
    let to_approx = ((robot.x - approx_object_pose.x).powi(2)
        + (robot.y - approx_object_pose.y).powi(2))
    .sqrt();
    let (coarse, trigger_pose) = if to_approx <= DETECTION_RANGE {
        (Trajectory::stationary(*robot), *robot)
    } else {
        let approach = plan_se2(
            robot,
            &pre_grasp_pose(approx_object_pose, grasp_offset),
            model,
            &map,
            limits,
            config,
        )?;
        // walk the dense path until the detection range is first entered
        let mut trigger_t = approach.duration;
        let steps = (approach.duration / 0.02).ceil().max(1.0) as usize;
        'scan: for k in 0..=steps {
            let t = approach.duration * k as f64 / steps as f64;
            let (pose, _, _) = approach.state_at(t);
            let d = ((pose.x - approx_object_pose.x).powi(2)
                + (pose.y - approx_object_pose.y).powi(2))
            .sqrt();
            if d <= DETECTION_RANGE {
                trigger_t = t;
                break 'scan;
            }
        }
        truncate_at(&approach, trigger_t)
    };
    let fine = plan_se2(
        &trigger_pose,
        &pre_grasp_pose(true_object_pose, grasp_offset),
        model,
        &map,
        limits,
        config,
    )?;
    Ok(CoarseToFine {
        coarse,
        fine,
        trigger_pose,
    })
}

/// Cuts a trajectory at time `t`, returning the head and its end pose.
fn truncate_at(traj: &Trajectory, t: f64) -> (Trajectory, Pose2) {
    let (pose, _, _) = traj.state_at(t);
    let mut twists = Vec::new();
    for w in traj.samples.windows(2) {
        if w[1].t <= t {
            twists.push((w[0].v, w[0].omega, w[1].t - w[0].t));
        } else if w[0].t < t {
            twists.push((w[0].v, w[0].omega, t - w[0].t));
            break;
        }
    }
    (Trajectory::from_twists(traj.start_pose(), &twists), pose)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Circle, Rect};
    use crate::occupancy::{ObjectObstacle, ObjectStatus};
    use crate::scenario::default_footprint;
    use std::collections::BTreeMap;

    fn open_map(extent: f64) -> OccupancyMap {
        OccupancyMap {
            static_obstacles: vec![],
            object_obstacles: BTreeMap::new(),
            bounds: Rect::new(-extent, -extent, extent, extent),
            clearance_margin: 0.05,
        }
    }

    fn robot_model() -> CollisionModel {
        CollisionModel::robot_only(&default_footprint())
    }

    fn limits() -> MotionLimits {
        MotionLimits {
            v_max: 1.0,
            omega_max: 1.0,
        }
    }

    #[test]
    fn start_equals_goal_is_stationary() {
        let map = open_map(20.0);
        let traj = plan_se2(
            &Pose2::identity(),
            &Pose2::identity(),
            &robot_model(),
            &map,
            &limits(),
            &PlannerConfig::default(),
        )
        .unwrap();
        assert_eq!(traj.duration, 0.0);
        assert_eq!(traj.samples.len(), 1);
    }

    #[test]
    fn straight_five_meters_near_optimal() {
        let map = open_map(20.0);
        let goal = Pose2::new(5.0, 0.0, 0.0);
        let traj = plan_se2(
            &Pose2::identity(),
            &goal,
            &robot_model(),
            &map,
            &limits(),
            &PlannerConfig::default(),
        )
        .unwrap();
        assert!(traj.duration >= 5.0 - 1e-9, "duration {}", traj.duration);
        assert!(traj.duration <= 5.0 * 1.25, "duration {}", traj.duration);
        assert!(traj.end_pose().distance(&goal) < ENDPOINT_POS_TOL);
        assert!(traj.end_pose().heading_dist(&goal) < ENDPOINT_ANG_TOL);
        traj.validate(1.0, 1.0, 1e-6).unwrap();
    }

    #[test]
    fn goal_in_obstacle_is_reported() {
        let mut map = open_map(20.0);
        map.static_obstacles.push(Circle::new(5.0, 0.0, 1.0));
        let err = plan_se2(
            &Pose2::identity(),
            &Pose2::new(5.0, 0.0, 0.0),
            &robot_model(),
            &map,
            &limits(),
            &PlannerConfig::default(),
        )
        .unwrap_err();
        assert_eq!(err, PlanError::GoalInCollision);
    }

    #[test]
    fn plans_around_an_obstacle() {
        let mut map = open_map(20.0);
        map.static_obstacles.push(Circle::new(3.0, 0.0, 1.0));
        let goal = Pose2::new(6.0, 0.0, 0.0);
        let traj = plan_se2(
            &Pose2::identity(),
            &goal,
            &robot_model(),
            &map,
            &limits(),
            &PlannerConfig::default(),
        )
        .unwrap();
        assert!(traj.end_pose().distance(&goal) < 1e-6);
        assert!(traj.duration >= 6.0);
        for pose in traj.resample_by_distance(0.05) {
            assert!(
                !crate::occupancy::collision_check(&pose, &robot_model(), &map),
                "collision at ({:.2}, {:.2})",
                pose.x,
                pose.y
            );
        }
    }

    #[test]
    fn pre_grasp_examples() {
        let p = pre_grasp_pose(&Pose2::new(2.0, 0.0, 0.0), &Pose2::new(-0.6, 0.0, 0.0));
        assert!(p.distance(&Pose2::new(1.4, 0.0, 0.0)) < 1e-12);

        let p = pre_grasp_pose(
            &Pose2::new(0.0, 0.0, std::f64::consts::FRAC_PI_2),
            &Pose2::new(-0.6, 0.0, 0.0),
        );
        assert!(p.distance(&Pose2::new(0.0, -0.6, 0.0)) < 1e-12);
        assert!((p.theta - std::f64::consts::FRAC_PI_2).abs() < 1e-12);

        let object = Pose2::new(1.0, 2.0, 0.3);
        let p = pre_grasp_pose(&object, &Pose2::identity());
        assert!(p.distance(&object) < 1e-12);
        assert!(p.heading_dist(&object) < 1e-12);
    }

    #[test]
    fn coarse_to_fine_triggers_inside_detection_range() {
        let mut map = open_map(30.0);
        let object_true = Pose2::new(12.0, 0.5, 0.0);
        let object_approx = Pose2::new(12.05, 0.42, 0.0);
        map.object_obstacles.insert(
            "bin_1".into(),
            ObjectObstacle {
                circle: Circle::new(object_true.x, object_true.y, 0.3),
                status: ObjectStatus::Obstacle,
            },
        );
        let offset = Pose2::new(-1.4, 0.0, 0.0);
        let out = coarse_to_fine(
            &Pose2::identity(),
            &object_approx,
            &object_true,
            &offset,
            &map,
            &robot_model(),
            &limits(),
            &PlannerConfig::default(),
        )
        .unwrap();
        let d = ((out.trigger_pose.x - object_approx.x).powi(2)
            + (out.trigger_pose.y - object_approx.y).powi(2))
        .sqrt();
        assert!(d <= DETECTION_RANGE + 1e-9, "trigger at {d:.3} m");
        assert!(!out.coarse.is_stationary());
        let want = pre_grasp_pose(&object_true, &offset);
        assert!(out.fine.end_pose().distance(&want) < ENDPOINT_POS_TOL);
        assert!(out.fine.end_pose().heading_dist(&want) < ENDPOINT_ANG_TOL);
    }

    #[test]
    fn coarse_to_fine_close_start_skips_coarse() {
        let map = open_map(30.0);
        let object = Pose2::new(3.0, 0.0, 0.0);
        let offset = Pose2::new(-1.4, 0.0, 0.0);
        let out = coarse_to_fine(
            &Pose2::identity(),
            &object,
            &object,
            &offset,
            &map,
            &robot_model(),
            &limits(),
            &PlannerConfig::default(),
        )
        .unwrap();
        assert!(out.coarse.is_stationary());
        assert!(out.trigger_pose.distance(&Pose2::identity()) < 1e-12);
    }
}
