use rearrange::sim::*;
use rearrange::scenario::MotionLimits;

fn main() {
    let arc = figure_eight_arc_length(12.0, 6.0);
    println!("arc length = {arc:.3} m, nominal duration = {:.1} s", arc / 0.3);
    let traj = figure_eight_trajectory(12.0, 6.0, 0.3, 0.02);
    let limits = MotionLimits { v_max: 1.0, omega_max: 1.0 };
    for seed in 0..5u64 {
        let model = NoiseModel::calibrated(seed);
        let mut stream = model.stream();
        let start = std::time::Instant::now();
        let out = track_trajectory(&traj, &traj.start_pose(), &TrackerConfig::default(), &mut stream, &limits, None).unwrap();
        println!(
            "seed {seed}: mean_err={:.4} max_err={:.4} completion={:.1} ({:.1}% of nominal) wall={:?}",
            out.mean_error, out.max_error, out.completion_time,
            100.0 * out.completion_time / (arc / 0.3), start.elapsed()
        );
    }
}
