//! Shared generators for the integration and acceptance suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rearrange::geom::{Circle, Pose2, Rect};
use rearrange::scenario::{
    default_footprint, MotionLimits, ObjectCategory, ObjectSpec, PlannerOverrides, Scenario,
};
use rearrange::se2_plan::{PlannerConfig, Se2Planner};
use std::path::PathBuf;

pub fn scenarios_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

pub fn planner_for(scenario: &Scenario) -> Se2Planner {
    let mut config = PlannerConfig::default();
    if let Some(res) = scenario.planner.xy_resolution {
        config.xy_resolution = res;
        config.step_length = 2.0 * res;
    }
    Se2Planner::new(config)
}

/// Random rearrangement scenario with `n` objects and up to two obstacles.
/// Points keep enough separation that pre-grasp and release poses stay
/// collision-free. Returns `None` when placement fails for the seed.
pub fn random_task_scenario(seed: u64, n: usize) -> Option<Scenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9).wrapping_add(n as u64));
    let size = 12.0 + 2.0 * n as f64;
    let lo = 2.5;
    let hi = size - 2.5;
    let n_obstacles = rng.gen_range(0..=2usize);
    let mut obstacles: Vec<Circle> = Vec::new();
    let mut points: Vec<(f64, f64)> = Vec::new();
    for _ in 0..500 {
        if points.len() == 2 * n {
            break;
        }
        let p = (rng.gen_range(lo..hi), rng.gen_range(lo..hi));
        let far_from_points = points
            .iter()
            .all(|q| ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt() > 3.0);
        let far_from_start = ((p.0 - 1.5).powi(2) + (p.1 - 1.5).powi(2)).sqrt() > 3.0;
        if far_from_points && far_from_start {
            points.push(p);
        }
    }
    if points.len() < 2 * n {
        return None;
    }
    for _ in 0..200 {
        if obstacles.len() == n_obstacles {
            break;
        }
        let c = Circle::new(rng.gen_range(lo..hi), rng.gen_range(lo..hi), 0.5);
        let clear = points
            .iter()
            .chain(std::iter::once(&(1.5, 1.5)))
            .all(|p| ((p.0 - c.x).powi(2) + (p.1 - c.y).powi(2)).sqrt() > 3.2);
        if clear {
            obstacles.push(c);
        }
    }
    let objects = (0..n)
        .map(|i| ObjectSpec {
            id: format!("chair_{}", i + 1),
            category: ObjectCategory::Chair,
            initial_pose: Pose2::new(points[i].0, points[i].1, rng.gen_range(-3.0..3.0)),
            collision_radius: 0.3,
            grasp_offset: Pose2::new(-1.3, 0.0, 0.0),
            mass: 8.0,
            friction: 0.3,
        })
        .collect();
    let targets = (n..2 * n)
        .map(|i| Pose2::new(points[i].0, points[i].1, rng.gen_range(-3.0..3.0)))
        .collect();
    let scenario = Scenario {
        seed,
        world_bounds: Rect::new(0.0, 0.0, size, size),
        static_obstacles: obstacles,
        clearance_margin: 0.05,
        robot_start: Pose2::new(1.5, 1.5, 0.0),
        limits: MotionLimits::default(),
        footprint: default_footprint(),
        objects,
        targets,
        planner: PlannerOverrides::default(),
    };
    scenario.validate().ok()?;
    Some(scenario)
}
