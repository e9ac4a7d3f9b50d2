//! Multi-object rearrangement planning and simulation for a planar mobile
//! manipulator.
//!
//! The crate provides:
//! - globally optimal grasp/release task sequencing (branch and bound with
//!   Hungarian and spanning-tree lower bounds, greedy warm start),
//! - collision-free SE(2) trajectory planning for the robot and the coupled
//!   robot-object system with coarse-to-fine replanning,
//! - a noise-calibrated kinematic simulator with a grasp/release state
//!   machine and episode scoring,
//! - the interaction-graph representation with an EdgeConv forward pass,
//! - the reward stack and domain-randomization samplers used for episode
//!   scoring and as executable reference formulas.

pub mod cli;
pub mod geom;
pub mod interaction;
pub mod occupancy;
pub mod rewards;
pub mod scenario;
pub mod se2_plan;
pub mod sim;
pub mod task_plan;
pub mod trajectory;

pub use geom::{Circle, Pose2, Rect};
pub use scenario::{MotionLimits, ObjectCategory, ObjectSpec, Scenario};
pub use trajectory::{integrate_unicycle, Trajectory};
