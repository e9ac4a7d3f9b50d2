//! Reward stack, estimator loss, and domain-randomization samplers.
//!
//! Pure functions over explicit state structs; the simulator uses them for
//! episode scoring and the tests treat them as the executable reference for
//! the reward formulas.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::ObjectCategory;

#[derive(Debug, Error)]
pub enum RewardError {
    #[error("unknown category `{0}` has no randomization ranges")]
    UnknownCategory(ObjectCategory),
}

/// Instantaneous state consumed by the reward terms.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardInput {
    /// Commanded / actual planar velocity, m/s.
    pub v_cmd: [f64; 2],
    pub v_actual: [f64; 2],
    /// Commanded / actual yaw rate, rad/s.
    pub omega_cmd: f64,
    pub omega_actual: f64,
    /// Object and robot yaw, radians.
    pub psi_object: f64,
    pub psi_robot: f64,
    /// End-effector-to-base longitudinal distance, meters.
    pub d_x: f64,
    /// Force vectors on undesired-contact bodies (base, calf, thigh ...).
    pub contact_forces: Vec<[f64; 3]>,
    /// Arm joint torques, N*m.
    pub joint_torques: [f64; 6],
    /// Joint angular accelerations, rad/s^2.
    pub joint_accels: [f64; 6],
    /// End-effector wrench (3 forces, 3 moments).
    pub ee_wrench: [f64; 6],
    /// Action history for the second-difference smoothness term.
    pub action_t: [f64; 9],
    pub action_t1: [f64; 9],
    pub action_t2: [f64; 9],
    /// Vertical velocity, m/s.
    pub v_z: f64,
    /// Roll/pitch rates, rad/s.
    pub omega_xy: [f64; 2],
    /// Gravity projection onto the base xy plane.
    pub gravity_xy: [f64; 2],
    /// Joint angles and their defaults.
    pub joint_angles: [f64; 6],
    pub joint_defaults: [f64; 6],
}

impl RewardInput {
    /// A state with perfect tracking and no penalty activity. The
    /// end-effector distance is held far above the threshold so the
    /// distance-keeping sigmoid underflows to exactly zero.
    pub fn ideal() -> RewardInput {
        RewardInput {
            v_cmd: [0.3, 0.0],
            v_actual: [0.3, 0.0],
            omega_cmd: 0.1,
            omega_actual: 0.1,
            psi_object: 0.4,
            psi_robot: 0.4,
            d_x: 100.0,
            contact_forces: vec![],
            joint_torques: [0.0; 6],
            joint_accels: [0.0; 6],
            ee_wrench: [0.0; 6],
            action_t: [0.0; 9],
            action_t1: [0.0; 9],
            action_t2: [0.0; 9],
            v_z: 0.0,
            omega_xy: [0.0; 2],
            gravity_xy: [0.0; 2],
            joint_angles: [0.0; 6],
            joint_defaults: [0.0; 6],
        }
    }
}

/// Reward weights and shaping constants; defaults reproduce the reference
/// configuration exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    pub w_lin_tracking: f64,
    pub w_ang_tracking: f64,
    pub w_distance: f64,
    pub w_yaw: f64,
    pub w_contact: f64,
    pub w_torque: f64,
    pub w_accel: f64,
    pub w_wrench: f64,
    pub w_action_rate: f64,
    pub w_v_z: f64,
    pub w_omega_xy: f64,
    pub w_orientation: f64,
    pub w_default_joint: f64,
    /// Safe end-effector distance threshold, meters. Left symbolic by the
    /// source material; this default sits between the body extent and the
    /// default footprint reach and is fully configurable.
    pub d_threshold: f64,
    /// Steepness of the distance-keeping sigmoid.
    pub sigmoid_steepness: f64,
    /// Contact-force norm above which a body counts as in contact, N.
    pub contact_force_threshold: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            w_lin_tracking: 5.0,
            w_ang_tracking: 5.0,
            w_distance: -10.0,
            w_yaw: 5.0,
            w_contact: -5.0,
            w_torque: -2.5e-5,
            w_accel: -2.5e-7,
            w_wrench: 1.0e-3,
            w_action_rate: -2.0e-3,
            w_v_z: -2.0,
            w_omega_xy: -0.05,
            w_orientation: -10.0,
            w_default_joint: -1.0,
            d_threshold: 0.55,
            sigmoid_steepness: 200.0,
            contact_force_threshold: 1.0,
        }
    }
}

fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Velocity-tracking reward:
/// `w_lin * exp(-4 ||v* - v||^2) + w_ang * exp(-4 (w* - w)^2)`.
pub fn tracking_reward(input: &RewardInput, cfg: &RewardConfig) -> f64 {
    let lin_err = [
        input.v_cmd[0] - input.v_actual[0],
        input.v_cmd[1] - input.v_actual[1],
    ];
    let ang_err = input.omega_cmd - input.omega_actual;
    cfg.w_lin_tracking * (-4.0 * norm_sq(&lin_err)).exp()
        + cfg.w_ang_tracking * (-4.0 * ang_err * ang_err).exp()
}

/// Analytic gradient of [`tracking_reward`] with respect to
/// `(v_actual_x, v_actual_y, omega_actual)`.
pub fn tracking_reward_grad(input: &RewardInput, cfg: &RewardConfig) -> [f64; 3] {
    let ex = input.v_cmd[0] - input.v_actual[0];
    let ey = input.v_cmd[1] - input.v_actual[1];
    let ew = input.omega_cmd - input.omega_actual;
    let lin = cfg.w_lin_tracking * (-4.0 * (ex * ex + ey * ey)).exp();
    let ang = cfg.w_ang_tracking * (-4.0 * ew * ew).exp();
    [8.0 * lin * ex, 8.0 * lin * ey, 8.0 * ang * ew]
}

/// Yaw distance wrapped to `[0, pi]`; the raw formula assumes an absolute
/// difference, which the wrap realizes on the circle.
fn yaw_distance(a: f64, b: f64) -> f64 {
    crate::geom::angle_dist(a, b)
}

/// Self-collision avoidance reward: yaw alignment, sigmoid distance
/// keeping, and the count of undesired contacts.
pub fn collision_reward(input: &RewardInput, cfg: &RewardConfig) -> f64 {
    let yaw_term = cfg.w_yaw * (-yaw_distance(input.psi_object, input.psi_robot) / std::f64::consts::PI);
    // 1 / (1 + e^{steepness (d_x - d_th)}), weighted negative: the penalty
    // saturates as the end-effector closes on the base
    let sig = 1.0 / (1.0 + (cfg.sigmoid_steepness * (input.d_x - cfg.d_threshold)).exp());
    let distance_term = -cfg.w_distance.abs() * sig;
    let contacts = input
        .contact_forces
        .iter()
        .filter(|f| norm_sq(&f[..]).sqrt() > cfg.contact_force_threshold)
        .count() as f64;
    let contact_term = cfg.w_contact * contacts;
    yaw_term + distance_term + contact_term
}

/// Hardware-safe actuation reward: quadratic penalties on joint torques and
/// accelerations plus the wrench term.
pub fn effort_reward(input: &RewardInput, cfg: &RewardConfig) -> f64 {
    cfg.w_torque * norm_sq(&input.joint_torques)
        + cfg.w_wrench * norm_sq(&input.ee_wrench)
        + cfg.w_accel * norm_sq(&input.joint_accels)
}

/// Analytic gradient of [`effort_reward`] with respect to the joint
/// torques.
pub fn effort_reward_torque_grad(input: &RewardInput, cfg: &RewardConfig) -> [f64; 6] {
    let mut g = [0.0; 6];
    for (gi, t) in g.iter_mut().zip(&input.joint_torques) {
        *gi = 2.0 * cfg.w_torque * t;
    }
    g
}

/// Smoothness and pose regularization: action second difference, vertical
/// velocity, roll/pitch rates, base orientation, and default-joint posture.
pub fn smoothness_pose_reward(input: &RewardInput, cfg: &RewardConfig) -> f64 {
    let mut second_diff = [0.0; 9];
    for k in 0..9 {
        second_diff[k] = input.action_t[k] - 2.0 * input.action_t1[k] + input.action_t2[k];
    }
    let mut joint_dev = 0.0;
    for k in 0..6 {
        let d = input.joint_angles[k] - input.joint_defaults[k];
        joint_dev += d * d;
    }
    cfg.w_action_rate * norm_sq(&second_diff)
        + cfg.w_v_z * input.v_z * input.v_z
        + cfg.w_omega_xy * norm_sq(&input.omega_xy)
        + cfg.w_orientation * norm_sq(&input.gravity_xy)
        + cfg.w_default_joint * joint_dev
}

/// Per-term reward values, one per table row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub lin_vel_tracking: f64,
    pub ang_vel_tracking: f64,
    pub distance_keeping: f64,
    pub yaw_alignment: f64,
    pub contact_penalty: f64,
    pub joint_torque: f64,
    pub joint_accel: f64,
    pub ee_wrench: f64,
    pub action_rate: f64,
    pub lin_vel_z: f64,
    pub ang_vel_xy: f64,
    pub orientation: f64,
    pub default_joint: f64,
}

impl RewardBreakdown {
    pub fn rows(&self) -> [(&'static str, f64); 13] {
        [
            ("lin_vel_tracking", self.lin_vel_tracking),
            ("ang_vel_tracking", self.ang_vel_tracking),
            ("distance_keeping", self.distance_keeping),
            ("yaw_alignment", self.yaw_alignment),
            ("contact_penalty", self.contact_penalty),
            ("joint_torque", self.joint_torque),
            ("joint_accel", self.joint_accel),
            ("ee_wrench", self.ee_wrench),
            ("action_rate", self.action_rate),
            ("lin_vel_z", self.lin_vel_z),
            ("ang_vel_xy", self.ang_vel_xy),
            ("orientation", self.orientation),
            ("default_joint", self.default_joint),
        ]
    }

    pub fn sum(&self) -> f64 {
        self.rows().iter().map(|(_, v)| v).sum()
    }
}

/// Total reward and its per-row breakdown; the total is the exact sum of
/// the rows.
pub fn total_reward(input: &RewardInput, cfg: &RewardConfig) -> (f64, RewardBreakdown) {
    let lin_err = [
        input.v_cmd[0] - input.v_actual[0],
        input.v_cmd[1] - input.v_actual[1],
    ];
    let ang_err = input.omega_cmd - input.omega_actual;
    let sig = 1.0 / (1.0 + (cfg.sigmoid_steepness * (input.d_x - cfg.d_threshold)).exp());
    let contacts = input
        .contact_forces
        .iter()
        .filter(|f| norm_sq(&f[..]).sqrt() > cfg.contact_force_threshold)
        .count() as f64;
    let mut second_diff = [0.0; 9];
    for k in 0..9 {
        second_diff[k] = input.action_t[k] - 2.0 * input.action_t1[k] + input.action_t2[k];
    }
    let mut joint_dev = 0.0;
    for k in 0..6 {
        let d = input.joint_angles[k] - input.joint_defaults[k];
        joint_dev += d * d;
    }
    let breakdown = RewardBreakdown {
        lin_vel_tracking: cfg.w_lin_tracking * (-4.0 * norm_sq(&lin_err)).exp(),
        ang_vel_tracking: cfg.w_ang_tracking * (-4.0 * ang_err * ang_err).exp(),
        distance_keeping: -cfg.w_distance.abs() * sig,
        yaw_alignment: cfg.w_yaw
            * (-yaw_distance(input.psi_object, input.psi_robot) / std::f64::consts::PI),
        contact_penalty: cfg.w_contact * contacts,
        joint_torque: cfg.w_torque * norm_sq(&input.joint_torques),
        joint_accel: cfg.w_accel * norm_sq(&input.joint_accels),
        ee_wrench: cfg.w_wrench * norm_sq(&input.ee_wrench),
        action_rate: cfg.w_action_rate * norm_sq(&second_diff),
        lin_vel_z: cfg.w_v_z * input.v_z * input.v_z,
        ang_vel_xy: cfg.w_omega_xy * norm_sq(&input.omega_xy),
        orientation: cfg.w_orientation * norm_sq(&input.gravity_xy),
        default_joint: cfg.w_default_joint * joint_dev,
    };
    (breakdown.sum(), breakdown)
}

/// Squared L2 error between the estimated and true object velocity.
pub fn estimator_loss(estimated: &[f64; 3], actual: &[f64; 3]) -> f64 {
    estimated
        .iter()
        .zip(actual)
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

/// One domain-randomization draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomizationSample {
    /// Grasp-point perturbation along the graspable edge, meters.
    pub grasp_perturbation: f64,
    pub friction: f64,
    pub mass: f64,
    /// Commanded object linear velocity, m/s.
    pub lin_vel_cmd: f64,
    /// Commanded object yaw rate, rad/s.
    pub ang_vel_cmd: f64,
}

/// Per-category grasp-perturbation half-range, meters.
pub fn grasp_perturbation_range(category: ObjectCategory) -> Result<f64, RewardError> {
    match category {
        ObjectCategory::Chair => Ok(0.10),
        ObjectCategory::Table => Ok(0.20),
        ObjectCategory::Bin => Ok(0.15),
        ObjectCategory::Custom => Err(RewardError::UnknownCategory(category)),
    }
}

pub const FRICTION_RANGE: (f64, f64) = (0.1, 0.6);
pub const MASS_RANGE: (f64, f64) = (5.0, 15.0);
pub const LIN_VEL_CMD_RANGE: (f64, f64) = (-0.5, 0.5);
pub const ANG_VEL_CMD_RANGE: (f64, f64) = (-0.5, 0.5);

/// Uniform domain-randomization draw for an object category, deterministic
/// per seed. Draw order: grasp perturbation, friction, mass, linear
/// command, angular command.
pub fn sample_randomization(
    category: ObjectCategory,
    seed: u64,
) -> Result<RandomizationSample, RewardError> {
    let half = grasp_perturbation_range(category)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(RandomizationSample {
        grasp_perturbation: rng.gen_range(-half..=half),
        friction: rng.gen_range(FRICTION_RANGE.0..=FRICTION_RANGE.1),
        mass: rng.gen_range(MASS_RANGE.0..=MASS_RANGE.1),
        lin_vel_cmd: rng.gen_range(LIN_VEL_CMD_RANGE.0..=LIN_VEL_CMD_RANGE.1),
        ang_vel_cmd: rng.gen_range(ANG_VEL_CMD_RANGE.0..=ANG_VEL_CMD_RANGE.1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_tracking_scores_ten() {
        let (total, breakdown) = total_reward(&RewardInput::ideal(), &RewardConfig::default());
        assert_eq!(total, 10.0);
        assert_eq!(breakdown.lin_vel_tracking, 5.0);
        assert_eq!(breakdown.ang_vel_tracking, 5.0);
        for (name, v) in breakdown.rows().iter().skip(2) {
            assert_eq!(*v, 0.0, "penalty row {name} must be exactly zero");
        }
    }

    #[test]
    fn tracking_half_meter_error() {
        let mut input = RewardInput::ideal();
        input.v_actual = [input.v_cmd[0] - 0.5, input.v_cmd[1]];
        let r = tracking_reward(&input, &RewardConfig::default());
        // 5 e^{-1} + 5
        assert!((r - (5.0 * (-1.0_f64).exp() + 5.0)).abs() < 1e-12);
        assert!((r - 6.839397).abs() < 1e-6);
    }

    #[test]
    fn tracking_decays_monotonically() {
        let cfg = RewardConfig::default();
        let mut last = f64::INFINITY;
        for k in 0..60 {
            let mut input = RewardInput::ideal();
            input.v_actual[0] = input.v_cmd[0] - 0.1 * k as f64;
            input.omega_actual = input.omega_cmd - 0.1 * k as f64;
            let r = tracking_reward(&input, &cfg);
            assert!(r < last);
            assert!(r > 0.0);
            last = r;
        }
        assert!(last < 1e-9);
    }

    #[test]
    fn sigmoid_midpoint_is_half_weight() {
        let cfg = RewardConfig::default();
        let mut input = RewardInput::ideal();
        input.d_x = cfg.d_threshold;
        let (_, breakdown) = total_reward(&input, &cfg);
        assert_eq!(breakdown.distance_keeping, -5.0);
    }

    #[test]
    fn aligned_yaw_has_no_penalty() {
        let cfg = RewardConfig::default();
        let input = RewardInput::ideal();
        let (_, breakdown) = total_reward(&input, &cfg);
        assert_eq!(breakdown.yaw_alignment, 0.0);
    }

    #[test]
    fn yaw_uses_circular_distance() {
        let cfg = RewardConfig::default();
        let mut input = RewardInput::ideal();
        input.psi_object = 3.0;
        input.psi_robot = -3.0;
        // shortest distance is 2pi - 6, not 6
        let expect = 5.0 * (-(2.0 * std::f64::consts::PI - 6.0) / std::f64::consts::PI);
        let (_, b) = total_reward(&input, &cfg);
        assert!((b.yaw_alignment - expect).abs() < 1e-12);
    }

    #[test]
    fn contact_above_threshold_penalized() {
        let cfg = RewardConfig::default();
        let mut input = RewardInput::ideal();
        input.contact_forces = vec![[2.0, 0.0, 0.0]];
        let (_, b) = total_reward(&input, &cfg);
        assert_eq!(b.contact_penalty, -5.0);
        // at exactly the threshold the indicator stays off
        input.contact_forces = vec![[1.0, 0.0, 0.0]];
        let (_, b) = total_reward(&input, &cfg);
        assert_eq!(b.contact_penalty, 0.0);
    }

    #[test]
    fn effort_examples() {
        let cfg = RewardConfig::default();
        let zero = RewardInput::ideal();
        assert_eq!(effort_reward(&zero, &cfg), 0.0);

        let mut input = RewardInput::ideal();
        input.joint_torques = [10.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        assert!((effort_reward(&input, &cfg) + 2.5e-3).abs() < 1e-15);

        let mut doubled = input.clone();
        doubled.joint_torques = [20.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        assert!(
            (effort_reward(&doubled, &cfg) - 4.0 * effort_reward(&input, &cfg)).abs() < 1e-15
        );
    }

    #[test]
    fn smoothness_examples() {
        let cfg = RewardConfig::default();
        // constant action history has zero second difference
        let mut input = RewardInput::ideal();
        input.action_t = [0.3; 9];
        input.action_t1 = [0.3; 9];
        input.action_t2 = [0.3; 9];
        assert_eq!(smoothness_pose_reward(&input, &cfg), 0.0);

        let mut vz = RewardInput::ideal();
        vz.v_z = 0.5;
        assert!((smoothness_pose_reward(&vz, &cfg) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn breakdown_sums_to_total() {
        let cfg = RewardConfig::default();
        let mut input = RewardInput::ideal();
        input.v_actual = [0.1, -0.2];
        input.omega_actual = -0.3;
        input.psi_object = 1.0;
        input.d_x = 0.5;
        input.contact_forces = vec![[3.0, 0.0, 0.0], [0.1, 0.0, 0.0]];
        input.joint_torques = [5.0, -3.0, 2.0, 1.0, 0.5, -0.5];
        input.joint_accels = [10.0, 0.0, -20.0, 5.0, 1.0, 0.0];
        input.ee_wrench = [1.0, 2.0, 3.0, 0.1, 0.2, 0.3];
        input.action_t = [0.5; 9];
        input.v_z = 0.2;
        input.omega_xy = [0.1, -0.3];
        input.gravity_xy = [0.05, 0.01];
        input.joint_angles = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        let (total, breakdown) = total_reward(&input, &cfg);
        assert!((total - breakdown.sum()).abs() < 1e-12);
        // redundant single-expression oracle
        let oracle = tracking_reward(&input, &cfg)
            + collision_reward(&input, &cfg)
            + effort_reward(&input, &cfg)
            + smoothness_pose_reward(&input, &cfg);
        assert!((total - oracle).abs() < 1e-12);
    }

    #[test]
    fn estimator_loss_examples() {
        assert_eq!(estimator_loss(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), 0.0);
        assert_eq!(estimator_loss(&[1.0, 0.0, 0.0], &[0.0, 0.0, 0.0]), 1.0);
        let a = [0.3, -0.7, 1.1];
        let b = [-0.2, 0.4, 0.9];
        let manual: f64 = (0..3).map(|k| (a[k] - b[k]) * (a[k] - b[k])).sum();
        assert!((estimator_loss(&a, &b) - manual).abs() < 1e-15);
    }

    #[test]
    fn randomization_ranges_hold() {
        for seed in 0..2000u64 {
            let s = sample_randomization(ObjectCategory::Chair, seed).unwrap();
            assert!(s.grasp_perturbation.abs() <= 0.10);
            assert!((0.1..=0.6).contains(&s.friction));
            assert!((5.0..=15.0).contains(&s.mass));
            assert!(s.lin_vel_cmd.abs() <= 0.5);
            assert!(s.ang_vel_cmd.abs() <= 0.5);
            let t = sample_randomization(ObjectCategory::Table, seed).unwrap();
            assert!(t.grasp_perturbation.abs() <= 0.20);
            let b = sample_randomization(ObjectCategory::Bin, seed).unwrap();
            assert!(b.grasp_perturbation.abs() <= 0.15);
        }
    }

    #[test]
    fn mass_mean_matches_uniform_center() {
        let n = 100_000u64;
        let mean: f64 = (0..n)
            .map(|seed| sample_randomization(ObjectCategory::Bin, seed).unwrap().mass)
            .sum::<f64>()
            / n as f64;
        assert!((mean - 10.0).abs() / 10.0 < 0.01, "mean mass {mean:.4}");
    }

    #[test]
    fn custom_category_is_rejected() {
        assert!(sample_randomization(ObjectCategory::Custom, 0).is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_randomization(ObjectCategory::Chair, 99).unwrap();
        let b = sample_randomization(ObjectCategory::Chair, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn finite_difference_gradients() {
        let cfg = RewardConfig::default();
        let mut input = RewardInput::ideal();
        input.v_actual = [0.1, -0.15];
        input.omega_actual = 0.25;
        input.joint_torques = [4.0, -2.0, 1.0, 0.5, -0.25, 3.0];
        let h = 1e-6;

        let grad = tracking_reward_grad(&input, &cfg);
        for axis in 0..3 {
            let mut plus = input.clone();
            let mut minus = input.clone();
            match axis {
                0 => {
                    plus.v_actual[0] += h;
                    minus.v_actual[0] -= h;
                }
                1 => {
                    plus.v_actual[1] += h;
                    minus.v_actual[1] -= h;
                }
                _ => {
                    plus.omega_actual += h;
                    minus.omega_actual -= h;
                }
            }
            let numeric =
                (tracking_reward(&plus, &cfg) - tracking_reward(&minus, &cfg)) / (2.0 * h);
            let rel = (numeric - grad[axis]).abs() / grad[axis].abs().max(1e-9);
            assert!(rel < 1e-4, "axis {axis}: numeric {numeric} vs {}", grad[axis]);
        }

        let tg = effort_reward_torque_grad(&input, &cfg);
        for j in 0..6 {
            let mut plus = input.clone();
            let mut minus = input.clone();
            plus.joint_torques[j] += h;
            minus.joint_torques[j] -= h;
            let numeric = (effort_reward(&plus, &cfg) - effort_reward(&minus, &cfg)) / (2.0 * h);
            let rel = (numeric - tg[j]).abs() / tg[j].abs().max(1e-12);
            assert!(rel < 1e-4, "torque {j}: numeric {numeric} vs {}", tg[j]);
        }
    }

    #[test]
    fn term_bounds() {
        let cfg = RewardConfig::default();
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        use rand::Rng;
        for _ in 0..500 {
            let mut input = RewardInput::ideal();
            input.v_actual = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            input.omega_actual = rng.gen_range(-2.0..2.0);
            input.psi_object = rng.gen_range(-3.2..3.2);
            input.psi_robot = rng.gen_range(-3.2..3.2);
            input.d_x = rng.gen_range(-1.0..2.0);
            let (_, b) = total_reward(&input, &cfg);
            assert!(b.lin_vel_tracking > 0.0 && b.lin_vel_tracking <= 5.0);
            assert!(b.ang_vel_tracking > 0.0 && b.ang_vel_tracking <= 5.0);
            assert!((-5.0..=0.0).contains(&b.yaw_alignment));
            // the true sigmoid stays inside (-10, 0); in f64 it saturates
            // to the endpoints once the exponent under/overflows
            assert!((-10.0..=0.0).contains(&b.distance_keeping));
        }
    }
}
