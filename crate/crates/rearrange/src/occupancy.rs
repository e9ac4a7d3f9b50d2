//! Circle-based occupancy map and robot/robot-object collision models.
//!
//! Maps are immutable snapshots: [`update_map`] returns a new map with the
//! requested object statuses instead of mutating in place.

use crate::geom::{Circle, Pose2, Rect};
use crate::scenario::{FootprintCircle, Scenario};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectStatus {
    Obstacle,
    Free,
}

/// Manipulation phase used by [`update_map`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    PreGrasp,
    PostGrasp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectObstacle {
    pub circle: Circle,
    pub status: ObjectStatus,
}

/// World obstacles: static circles plus per-object circles whose status
/// tracks the manipulation phase. At most one object may be `Free`.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyMap {
    pub static_obstacles: Vec<Circle>,
    pub object_obstacles: BTreeMap<String, ObjectObstacle>,
    pub bounds: Rect,
    pub clearance_margin: f64,
}

#[derive(Debug, Error)]
pub enum MapError {
    #[error("unknown object id `{0}`")]
    UnknownObject(String),
}

impl OccupancyMap {
    /// Builds the map from a scenario, all objects at their initial poses
    /// with obstacle status.
    pub fn from_scenario(scenario: &Scenario) -> OccupancyMap {
        let mut object_obstacles = BTreeMap::new();
        for o in &scenario.objects {
            object_obstacles.insert(
                o.id.clone(),
                ObjectObstacle {
                    circle: o.circle_at(&o.initial_pose),
                    status: ObjectStatus::Obstacle,
                },
            );
        }
        OccupancyMap {
            static_obstacles: scenario.static_obstacles.clone(),
            object_obstacles,
            bounds: scenario.world_bounds,
            clearance_margin: scenario.clearance_margin,
        }
    }

    /// Moves an object's circle (e.g. after a release) without changing status.
    pub fn with_object_moved(&self, id: &str, pose: &Pose2) -> Result<OccupancyMap, MapError> {
        let mut next = self.clone();
        let entry = next
            .object_obstacles
            .get_mut(id)
            .ok_or_else(|| MapError::UnknownObject(id.to_string()))?;
        entry.circle = Circle::new(pose.x, pose.y, entry.circle.radius);
        Ok(next)
    }

    pub fn free_object_count(&self) -> usize {
        self.object_obstacles
            .values()
            .filter(|o| o.status == ObjectStatus::Free)
            .count()
    }

    fn active_obstacles(&self) -> impl Iterator<Item = &Circle> {
        self.static_obstacles.iter().chain(
            self.object_obstacles
                .values()
                .filter(|o| o.status == ObjectStatus::Obstacle)
                .map(|o| &o.circle),
        )
    }
}

/// Returns a map with object statuses set for the given phase: pre-grasp
/// keeps every object as an obstacle; post-grasp frees only the active one.
pub fn update_map(
    map: &OccupancyMap,
    active_object: Option<&str>,
    phase: Phase,
) -> Result<OccupancyMap, MapError> {
    if let Some(id) = active_object {
        if !map.object_obstacles.contains_key(id) {
            return Err(MapError::UnknownObject(id.to_string()));
        }
    }
    let mut next = map.clone();
    for (id, entry) in next.object_obstacles.iter_mut() {
        entry.status = match (phase, active_object) {
            (Phase::PostGrasp, Some(active)) if id == active => ObjectStatus::Free,
            _ => ObjectStatus::Obstacle,
        };
    }
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FootprintMode {
    RobotOnly,
    RobotWithObject,
}

/// Body-frame circle cover of the robot, optionally extended with a circle
/// at the grasped object's geometric center.
#[derive(Debug, Clone, PartialEq)]
pub struct CollisionModel {
    pub circles: Vec<FootprintCircle>,
    pub mode: FootprintMode,
}

impl CollisionModel {
    pub fn robot_only(footprint: &[FootprintCircle]) -> CollisionModel {
        CollisionModel {
            circles: footprint.to_vec(),
            mode: FootprintMode::RobotOnly,
        }
    }

    /// Extends the robot footprint with the grasped object's circle.
    /// `object_in_body` is the object center expressed in the robot frame
    /// (the translation part of the inverse grasp offset).
    pub fn robot_with_object(
        footprint: &[FootprintCircle],
        object_in_body: (f64, f64),
        object_radius: f64,
    ) -> CollisionModel {
        let mut circles = footprint.to_vec();
        circles.push(FootprintCircle {
            x: object_in_body.0,
            y: object_in_body.1,
            radius: object_radius,
        });
        CollisionModel {
            circles,
            mode: FootprintMode::RobotWithObject,
        }
    }

    /// Largest body-frame lever arm of any footprint circle center.
    pub fn max_offset(&self) -> f64 {
        self.circles
            .iter()
            .map(|c| (c.x * c.x + c.y * c.y).sqrt())
            .fold(0.0_f64, f64::max)
    }

    pub fn world_circles(&self, pose: &Pose2) -> Vec<Circle> {
        let (s, c) = pose.theta.sin_cos();
        self.circles
            .iter()
            .map(|fc| {
                Circle::new(
                    pose.x + c * fc.x - s * fc.y,
                    pose.y + s * fc.x + c * fc.y,
                    fc.radius,
                )
            })
            .collect()
    }
}

/// True when any footprint circle at `pose` touches an active obstacle
/// (center distance <= r1 + r2 + margin + inflation) or leaves the bounds.
pub fn collision_check_inflated(
    pose: &Pose2,
    model: &CollisionModel,
    map: &OccupancyMap,
    inflation: f64,
) -> bool {
    let (s, c) = pose.theta.sin_cos();
    for fc in &model.circles {
        let cx = pose.x + c * fc.x - s * fc.y;
        let cy = pose.y + s * fc.x + c * fc.y;
        let world = Circle::new(cx, cy, fc.radius);
        if !map.bounds.contains_circle(&world) {
            return true;
        }
        for obs in map.active_obstacles() {
            let limit = fc.radius + obs.radius + map.clearance_margin + inflation;
            if world.center_dist(obs) <= limit {
                return true;
            }
        }
    }
    false
}

/// Collision test at the configured clearance margin.
pub fn collision_check(pose: &Pose2, model: &CollisionModel, map: &OccupancyMap) -> bool {
    collision_check_inflated(pose, model, map, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn empty_map() -> OccupancyMap {
        OccupancyMap {
            static_obstacles: vec![],
            object_obstacles: BTreeMap::new(),
            bounds: Rect::new(-100.0, -100.0, 100.0, 100.0),
            clearance_margin: 0.0,
        }
    }

    fn single_circle_model(radius: f64) -> CollisionModel {
        CollisionModel {
            circles: vec![FootprintCircle {
                x: 0.0,
                y: 0.0,
                radius,
            }],
            mode: FootprintMode::RobotOnly,
        }
    }

    #[test]
    fn far_obstacle_is_clear() {
        let mut map = empty_map();
        map.static_obstacles.push(Circle::new(2.0, 0.0, 0.5));
        let model = single_circle_model(0.5);
        assert!(!collision_check(&Pose2::identity(), &model, &map));
    }

    #[test]
    fn overlapping_obstacle_collides() {
        let mut map = empty_map();
        map.static_obstacles.push(Circle::new(0.9, 0.0, 0.5));
        let model = single_circle_model(0.5);
        assert!(collision_check(&Pose2::identity(), &model, &map));
    }

    #[test]
    fn touching_counts_as_collision() {
        let mut map = empty_map();
        map.static_obstacles.push(Circle::new(1.0, 0.0, 0.5));
        let model = single_circle_model(0.5);
        assert!(collision_check(&Pose2::identity(), &model, &map));
    }

    #[test]
    fn freed_object_is_ignored() {
        let mut map = empty_map();
        map.object_obstacles.insert(
            "chair_1".into(),
            ObjectObstacle {
                circle: Circle::new(0.0, 0.0, 0.5),
                status: ObjectStatus::Free,
            },
        );
        let model = single_circle_model(0.5);
        assert!(!collision_check(&Pose2::identity(), &model, &map));
    }

    #[test]
    fn leaving_bounds_collides() {
        let mut map = empty_map();
        map.bounds = Rect::new(0.0, 0.0, 2.0, 2.0);
        let model = single_circle_model(0.5);
        assert!(collision_check(&Pose2::new(0.3, 1.0, 0.0), &model, &map));
        assert!(!collision_check(&Pose2::new(1.0, 1.0, 0.0), &model, &map));
    }

    #[test]
    fn update_map_phases() {
        let mut map = empty_map();
        for id in ["chair_1", "chair_2"] {
            map.object_obstacles.insert(
                id.into(),
                ObjectObstacle {
                    circle: Circle::new(1.0, 1.0, 0.3),
                    status: ObjectStatus::Obstacle,
                },
            );
        }
        let post = update_map(&map, Some("chair_1"), Phase::PostGrasp).unwrap();
        assert_eq!(post.free_object_count(), 1);
        assert_eq!(
            post.object_obstacles["chair_1"].status,
            ObjectStatus::Free
        );
        assert_eq!(
            post.object_obstacles["chair_2"].status,
            ObjectStatus::Obstacle
        );

        let pre = update_map(&post, Some("chair_2"), Phase::PreGrasp).unwrap();
        assert_eq!(pre.free_object_count(), 0);

        let none = update_map(&post, None, Phase::PostGrasp).unwrap();
        assert_eq!(none.free_object_count(), 0);

        assert!(update_map(&map, Some("ghost"), Phase::PostGrasp).is_err());
    }
}
