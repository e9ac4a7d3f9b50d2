//! World description: robot start, objects, targets, obstacles, and limits.
//!
//! Scenario files are RON documents; [`Scenario::from_ron`] parses and
//! validates them, reporting the offending field on failure.

use crate::geom::{Circle, Pose2, Rect};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_CLEARANCE_MARGIN: f64 = 0.05;

/// Body-frame footprint circle (offset from the base plus a radius).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FootprintCircle {
    pub x: f64,
    pub y: f64,
    pub radius: f64,
}

/// Default three-circle cover of the robot body and arm.
pub fn default_footprint() -> Vec<FootprintCircle> {
    vec![
        FootprintCircle {
            x: 0.35,
            y: 0.0,
            radius: 0.45,
        },
        FootprintCircle {
            x: 0.0,
            y: 0.0,
            radius: 0.45,
        },
        FootprintCircle {
            x: -0.35,
            y: 0.0,
            radius: 0.45,
        },
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionLimits {
    /// Maximum linear speed, m/s.
    pub v_max: f64,
    /// Maximum yaw rate, rad/s.
    pub omega_max: f64,
}

impl Default for MotionLimits {
    fn default() -> Self {
        Self {
            v_max: 1.0,
            omega_max: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectCategory {
    Bin,
    Chair,
    Table,
    Custom,
}

impl std::fmt::Display for ObjectCategory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ObjectCategory::Bin => "bin",
            ObjectCategory::Chair => "chair",
            ObjectCategory::Table => "table",
            ObjectCategory::Custom => "custom",
        };
        f.write_str(s)
    }
}

/// A movable object: circle footprint plus the grasp configuration that
/// defines the robot's pre-grasp pose in the object frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub id: String,
    pub category: ObjectCategory,
    pub initial_pose: Pose2,
    pub collision_radius: f64,
    pub grasp_offset: Pose2,
    pub mass: f64,
    pub friction: f64,
}

impl ObjectSpec {
    /// Robot pose from which this object is graspable, given the object pose.
    pub fn pre_grasp_from(&self, object_pose: &Pose2) -> Pose2 {
        object_pose.compose(&self.grasp_offset)
    }

    /// Object circle at a given object pose.
    pub fn circle_at(&self, pose: &Pose2) -> Circle {
        Circle::new(pose.x, pose.y, self.collision_radius)
    }
}

/// Robot state: planar configuration plus the id of a held object, if any.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub config: Pose2,
    pub holding: Option<String>,
}

/// Optional per-scenario overrides for the trajectory planner grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct PlannerOverrides {
    pub xy_resolution: Option<f64>,
    pub allow_backward: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub seed: u64,
    pub world_bounds: Rect,
    pub static_obstacles: Vec<Circle>,
    pub clearance_margin: f64,
    pub robot_start: Pose2,
    pub limits: MotionLimits,
    pub footprint: Vec<FootprintCircle>,
    pub objects: Vec<ObjectSpec>,
    pub targets: Vec<Pose2>,
    #[serde(default)]
    pub planner: PlannerOverrides,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid scenario field `{field}`: {reason}")]
    Validation { field: String, reason: String },
}

impl Scenario {
    pub fn object_count(&self) -> usize {
        self.objects.len()
    }

    pub fn from_ron(text: &str) -> Result<Scenario, ScenarioError> {
        let file: ScenarioFile = ron::from_str(text).map_err(|e| {
            ScenarioError::Parse(format!("{} at {}", e.code, e.position))
        })?;
        let scenario = file.into_scenario();
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_ron(&self) -> String {
        let file = ScenarioFile::from_scenario(self);
        ron::ser::to_string_pretty(&file, ron::ser::PrettyConfig::default())
            .expect("scenario serialization cannot fail")
    }

    /// Checks structural invariants; returns the first violated field.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let fail = |field: &str, reason: String| {
            Err(ScenarioError::Validation {
                field: field.to_string(),
                reason,
            })
        };
        if self.objects.is_empty() {
            return fail("objects", "at least one object is required".into());
        }
        if self.objects.len() != self.targets.len() {
            return fail(
                "targets",
                format!(
                    "{} targets for {} objects; counts must match",
                    self.targets.len(),
                    self.objects.len()
                ),
            );
        }
        if self.limits.v_max <= 0.0 || self.limits.omega_max <= 0.0 {
            return fail("robot.limits", "v_max and omega_max must be positive".into());
        }
        if self.footprint.is_empty() {
            return fail("robot.footprint", "at least one footprint circle".into());
        }
        if self.clearance_margin < 0.0 {
            return fail("world.clearance_margin", "must be non-negative".into());
        }
        for (i, o) in self.objects.iter().enumerate() {
            let field = format!("objects[{i}]");
            if o.collision_radius <= 0.0 {
                return fail(&field, "collision_radius must be positive".into());
            }
            if o.mass <= 0.0 {
                return fail(&field, "mass must be positive".into());
            }
            if !(o.friction > 0.0 && o.friction <= 1.0) {
                return fail(&field, "friction must lie in (0, 1]".into());
            }
            if self.objects.iter().filter(|p| p.id == o.id).count() > 1 {
                return fail(&field, format!("duplicate object id `{}`", o.id));
            }
            if !self
                .world_bounds
                .contains_circle(&o.circle_at(&o.initial_pose))
            {
                return fail(&field, "initial pose leaves the world bounds".into());
            }
            for (k, obs) in self.static_obstacles.iter().enumerate() {
                let c = o.circle_at(&o.initial_pose);
                if c.center_dist(obs) <= c.radius + obs.radius + self.clearance_margin {
                    return fail(&field, format!("initial pose overlaps obstacle [{k}]"));
                }
            }
        }
        let max_reach = self
            .footprint
            .iter()
            .map(|c| (c.x * c.x + c.y * c.y).sqrt() + c.radius)
            .fold(0.0_f64, f64::max);
        for (label, pose) in std::iter::once(("robot.start".to_string(), self.robot_start))
            .chain(
                self.targets
                    .iter()
                    .enumerate()
                    .map(|(i, p)| (format!("targets[{i}]"), *p)),
            )
        {
            if !self.world_bounds.contains_point(pose.x, pose.y) {
                return fail(&label, "pose leaves the world bounds".into());
            }
            for (k, obs) in self.static_obstacles.iter().enumerate() {
                let d = ((pose.x - obs.x).powi(2) + (pose.y - obs.y).powi(2)).sqrt();
                if d <= obs.radius + max_reach + self.clearance_margin {
                    return fail(&label, format!("pose overlaps obstacle [{k}]"));
                }
            }
        }
        Ok(())
    }
}

// On-disk layout; kept separate from `Scenario` so the file format can
// stay stable while the in-memory type evolves.
#[derive(Debug, Serialize, Deserialize)]
struct ScenarioFile {
    seed: u64,
    world: WorldSection,
    robot: RobotSection,
    objects: Vec<ObjectSpec>,
    targets: Vec<Pose2>,
    #[serde(default)]
    planner: PlannerOverrides,
}

#[derive(Debug, Serialize, Deserialize)]
struct WorldSection {
    bounds: Rect,
    #[serde(default)]
    obstacles: Vec<Circle>,
    #[serde(default = "default_margin")]
    clearance_margin: f64,
}

fn default_margin() -> f64 {
    DEFAULT_CLEARANCE_MARGIN
}

#[derive(Debug, Serialize, Deserialize)]
struct RobotSection {
    start: Pose2,
    #[serde(default)]
    limits: MotionLimits,
    #[serde(default = "default_footprint")]
    footprint: Vec<FootprintCircle>,
}

impl ScenarioFile {
    fn into_scenario(self) -> Scenario {
        Scenario {
            seed: self.seed,
            world_bounds: self.world.bounds,
            static_obstacles: self.world.obstacles,
            clearance_margin: self.world.clearance_margin,
            robot_start: self.robot.start,
            limits: self.robot.limits,
            footprint: self.robot.footprint,
            objects: self.objects,
            targets: self.targets,
            planner: self.planner,
        }
    }

    fn from_scenario(s: &Scenario) -> ScenarioFile {
        ScenarioFile {
            seed: s.seed,
            world: WorldSection {
                bounds: s.world_bounds,
                obstacles: s.static_obstacles.clone(),
                clearance_margin: s.clearance_margin,
            },
            robot: RobotSection {
                start: s.robot_start,
                limits: s.limits,
                footprint: s.footprint.clone(),
            },
            objects: s.objects.clone(),
            targets: s.targets.clone(),
            planner: s.planner,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_ron() -> String {
        r#"(
            seed: 7,
            world: (
                bounds: (min_x: 0.0, min_y: 0.0, max_x: 10.0, max_y: 10.0),
                obstacles: [],
            ),
            robot: ( start: (x: 1.0, y: 1.0, theta: 0.0) ),
            objects: [
                (
                    id: "bin_1",
                    category: bin,
                    initial_pose: (x: 5.0, y: 5.0, theta: 0.0),
                    collision_radius: 0.3,
                    grasp_offset: (x: -1.2, y: 0.0, theta: 0.0),
                    mass: 8.0,
                    friction: 0.4,
                ),
            ],
            targets: [ (x: 8.0, y: 8.0, theta: 0.0) ],
        )"#
        .to_string()
    }

    #[test]
    fn parses_and_fills_defaults() {
        let s = Scenario::from_ron(&minimal_ron()).unwrap();
        assert_eq!(s.objects.len(), 1);
        assert_eq!(s.footprint.len(), 3);
        assert_eq!(s.clearance_margin, DEFAULT_CLEARANCE_MARGIN);
        assert_eq!(s.limits.v_max, 1.0);
    }

    #[test]
    fn round_trip_is_identical() {
        let s = Scenario::from_ron(&minimal_ron()).unwrap();
        let again = Scenario::from_ron(&s.to_ron()).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn missing_targets_is_a_parse_error() {
        let text = minimal_ron().replace("targets: [ (x: 8.0, y: 8.0, theta: 0.0) ],", "");
        let err = Scenario::from_ron(&text).unwrap_err();
        assert!(matches!(err, ScenarioError::Parse(_)), "{err}");
    }

    #[test]
    fn count_mismatch_names_the_field() {
        let text = minimal_ron().replace(
            "targets: [ (x: 8.0, y: 8.0, theta: 0.0) ],",
            "targets: [ (x: 8.0, y: 8.0, theta: 0.0), (x: 9.0, y: 9.0, theta: 0.0) ],",
        );
        let err = Scenario::from_ron(&text).unwrap_err();
        match err {
            ScenarioError::Validation { field, .. } => assert_eq!(field, "targets"),
            other => panic!("expected validation error, got {other}"),
        }
    }

    #[test]
    fn bad_friction_rejected() {
        let text = minimal_ron().replace("friction: 0.4", "friction: 1.4");
        assert!(Scenario::from_ron(&text).is_err());
    }
}
