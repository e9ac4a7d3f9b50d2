//! Command-line entry points: planning, simulation, and benchmarking.
//!
//! Exit codes: 0 success, 2 scenario/plan parse error, 3 planning
//! infeasible, 4 collision abort during simulation, 1 harness error.

use crate::scenario::Scenario;
use crate::se2_plan::{PlannerConfig, Se2Planner};
use crate::sim::{
    metrics_row, run_episode, EpisodeConfig, EpisodeResult, NoiseModel, SimError, METRICS_HEADER,
};
use crate::task_plan::{
    branch_and_bound, build_cost_matrices, greedy_plan, realize_plan, BoundMode, TaskPlan,
};
use crate::trajectory::Trajectory;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_HARNESS: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_COLLISION: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "rearrange",
    about = "Multi-object rearrangement planning and kinematic simulation"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute a task plan for a scenario and dump it with its trajectories.
    Plan(PlanArgs),
    /// Execute a dumped plan closed-loop and append a metrics row.
    Simulate(SimulateArgs),
    /// Cross-product run over scenarios, methods, and seeds.
    Benchmark(BenchmarkArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Greedy,
    Bnb,
}

impl MethodArg {
    fn name(self) -> &'static str {
        match self {
            MethodArg::Greedy => "greedy",
            MethodArg::Bnb => "bnb",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundArg {
    Assignment,
    Rowmin,
    Mst,
}

impl From<BoundArg> for BoundMode {
    fn from(b: BoundArg) -> BoundMode {
        match b {
            BoundArg::Assignment => BoundMode::Assignment,
            BoundArg::Rowmin => BoundMode::AssignmentRowMin,
            BoundArg::Mst => BoundMode::AssignmentMst,
        }
    }
}

#[derive(Debug, Args)]
struct PlanArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, value_enum, default_value = "bnb")]
    method: MethodArg,
    #[arg(long, value_enum, default_value = "mst")]
    bound: BoundArg,
    /// Output directory for the plan dump and trajectory files.
    #[arg(long)]
    out: PathBuf,
    /// Cross-check every bound against brute force (small N only).
    #[arg(long, default_value_t = false)]
    verify_bounds: bool,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    plan: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Mean absolute velocity error of the noise layer.
    #[arg(long, default_value_t = 0.0486)]
    noise_mae: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct BenchmarkArgs {
    /// Scenario files; `*` globs are expanded against the parent directory.
    #[arg(long, required = true, num_args = 1..)]
    scenario: Vec<String>,
    /// Comma-separated methods to run.
    #[arg(long, default_value = "greedy,bnb")]
    methods: String,
    /// Number of seeds (0..N) per scenario and method.
    #[arg(long, default_value_t = 20)]
    seeds: u64,
    #[arg(long, value_enum, default_value = "mst")]
    bound: BoundArg,
    #[arg(long, default_value_t = 0.0486)]
    noise_mae: f64,
    /// Report path (CSV).
    #[arg(long)]
    out: PathBuf,
}

/// On-disk plan dump; trajectory files live next to it.
#[derive(Debug, Serialize, Deserialize)]
pub struct PlanFile {
    pub method: String,
    pub bound: String,
    /// Cost of (order, assignment) under the precomputed cost matrices.
    pub cost_s: f64,
    /// Duration sum of the dumped (execution-replanned) trajectories.
    pub realized_cost_s: f64,
    pub expansions: usize,
    pub tasks: Vec<PlanFileTask>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PlanFileTask {
    pub object_id: String,
    pub object_index: usize,
    pub target_index: usize,
    pub pre: String,
    pub post: String,
}

pub fn run() -> i32 {
    let cli = Cli::parse();
    match cli.command {
        Command::Plan(args) => cmd_plan(&args),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Benchmark(args) => cmd_benchmark(&args),
    }
}

fn load_scenario(path: &Path) -> Result<Scenario, i32> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return Err(EXIT_PARSE);
        }
    };
    match Scenario::from_ron(&text) {
        Ok(s) => Ok(s),
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            Err(EXIT_PARSE)
        }
    }
}

fn planner_for(scenario: &Scenario) -> Se2Planner {
    let mut config = PlannerConfig::default();
    if let Some(res) = scenario.planner.xy_resolution {
        config.xy_resolution = res;
        config.step_length = 2.0 * res;
    }
    if let Some(b) = scenario.planner.allow_backward {
        config.allow_backward = b;
    }
    Se2Planner::new(config)
}

/// Plans a scenario with the requested method. Returns the matrix-model
/// plan, its search cost, and the expansion count.
fn plan_with_method(
    scenario: &Scenario,
    planner: &Se2Planner,
    method: MethodArg,
    bound: BoundMode,
    verify: bool,
) -> Result<(TaskPlan, usize), crate::task_plan::TaskError> {
    let costs = build_cost_matrices(scenario, planner)?;
    let warm = greedy_plan(&costs)?;
    match method {
        MethodArg::Greedy => Ok((warm, 0)),
        MethodArg::Bnb => {
            let out = branch_and_bound(&costs, &warm, bound, verify)?;
            Ok((out.plan, out.expansions))
        }
    }
}

fn cmd_plan(args: &PlanArgs) -> i32 {
    let scenario = match load_scenario(&args.scenario) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let planner = planner_for(&scenario);
    let (plan, expansions) = match plan_with_method(
        &scenario,
        &planner,
        args.method,
        args.bound.into(),
        args.verify_bounds,
    ) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INFEASIBLE;
        }
    };
    let realized = match realize_plan(&scenario, &plan.order, &plan.assignment, &planner) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INFEASIBLE;
        }
    };
    if let Err(e) = std::fs::create_dir_all(&args.out) {
        eprintln!("error: cannot create {}: {e}", args.out.display());
        return EXIT_HARNESS;
    }
    let mut tasks = Vec::new();
    for (k, task) in realized.tasks.iter().enumerate() {
        let pre_name = format!("task{:02}_pre.traj", k + 1);
        let post_name = format!("task{:02}_post.traj", k + 1);
        for (name, traj) in [(&pre_name, &task.pre), (&post_name, &task.post)] {
            if let Err(e) = std::fs::write(args.out.join(name), traj.dump()) {
                eprintln!("error: cannot write {name}: {e}");
                return EXIT_HARNESS;
            }
        }
        tasks.push(PlanFileTask {
            object_id: scenario.objects[task.object_index].id.clone(),
            object_index: task.object_index,
            target_index: task.target_index,
            pre: pre_name,
            post: post_name,
        });
    }
    let bound_name = match args.bound {
        BoundArg::Assignment => "assignment",
        BoundArg::Rowmin => "rowmin",
        BoundArg::Mst => "mst",
    };
    let file = PlanFile {
        method: args.method.name().to_string(),
        bound: bound_name.to_string(),
        cost_s: plan.total_cost,
        realized_cost_s: realized.total_cost,
        expansions,
        tasks,
    };
    let text = ron::ser::to_string_pretty(&file, ron::ser::PrettyConfig::default())
        .expect("plan serialization cannot fail");
    if let Err(e) = std::fs::write(args.out.join("plan.ron"), text) {
        eprintln!("error: cannot write plan.ron: {e}");
        return EXIT_HARNESS;
    }
    println!(
        "method={} cost_s={:.6} expansions={}",
        args.method.name(),
        plan.total_cost,
        expansions
    );
    EXIT_OK
}

/// Loads a dumped plan and its trajectory files back into a `TaskPlan`.
pub fn load_plan(path: &Path, scenario: &Scenario) -> Result<(PlanFile, TaskPlan), String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read plan: {e}"))?;
    let file: PlanFile =
        ron::from_str(&text).map_err(|e| format!("plan parse error: {} at {}", e.code, e.position))?;
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let n = scenario.objects.len();
    if file.tasks.len() != n {
        return Err(format!(
            "plan has {} tasks for {} objects",
            file.tasks.len(),
            n
        ));
    }
    let mut order = Vec::new();
    let mut assignment = vec![usize::MAX; n];
    let mut tasks = Vec::new();
    for t in &file.tasks {
        if t.object_index >= n || t.target_index >= n {
            return Err(format!(
                "task references object {} / target {} outside the scenario",
                t.object_index, t.target_index
            ));
        }
        if scenario.objects[t.object_index].id != t.object_id {
            return Err(format!(
                "object id `{}` does not match scenario index {}",
                t.object_id, t.object_index
            ));
        }
        let pre = Trajectory::parse_dump(
            &std::fs::read_to_string(dir.join(&t.pre))
                .map_err(|e| format!("cannot read {}: {e}", t.pre))?,
        )
        .map_err(|e| e.to_string())?;
        let post = Trajectory::parse_dump(
            &std::fs::read_to_string(dir.join(&t.post))
                .map_err(|e| format!("cannot read {}: {e}", t.post))?,
        )
        .map_err(|e| e.to_string())?;
        order.push(t.object_index);
        assignment[t.object_index] = t.target_index;
        tasks.push(crate::task_plan::TaskTrajectories {
            object_index: t.object_index,
            target_index: t.target_index,
            pre,
            post,
        });
    }
    if assignment.iter().any(|&a| a == usize::MAX) {
        return Err("plan does not cover every object".into());
    }
    let total_cost = tasks
        .iter()
        .map(|t: &crate::task_plan::TaskTrajectories| t.pre.duration + t.post.duration)
        .sum();
    Ok((
        file,
        TaskPlan {
            order,
            assignment,
            tasks,
            total_cost,
        },
    ))
}

fn cmd_simulate(args: &SimulateArgs) -> i32 {
    let scenario = match load_scenario(&args.scenario) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let (file, plan) = match load_plan(&args.plan, &scenario) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_PARSE;
        }
    };
    let noise = NoiseModel::with_mae(args.noise_mae, args.seed);
    let config = EpisodeConfig::default();
    let scenario_name = stem(&args.scenario);
    if let Err(e) = std::fs::create_dir_all(&args.out) {
        eprintln!("error: cannot create {}: {e}", args.out.display());
        return EXIT_HARNESS;
    }
    let (row, segments, code) = match run_episode(&scenario, &plan, &config, &noise) {
        Ok(trace) => (
            metrics_row(&scenario_name, &file.method, args.seed, &trace.result),
            trace.segments,
            EXIT_OK,
        ),
        Err(SimError::CollisionAbort { partial, .. }) => (
            metrics_row(&scenario_name, &file.method, args.seed, &partial),
            vec![],
            EXIT_COLLISION,
        ),
        Err(SimError::DivergenceAbort { partial, .. }) => (
            metrics_row(&scenario_name, &file.method, args.seed, &partial),
            vec![],
            EXIT_HARNESS,
        ),
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_HARNESS;
        }
    };
    for seg in &segments {
        let mut text = String::from("# trajectory v1\n");
        for s in &seg.samples {
            text.push_str(&format!(
                "{:.6} {:.6} {:.6} {:.6} {:.6} {:.6}\n",
                s.t, s.pose.x, s.pose.y, s.pose.theta, s.v, s.omega
            ));
        }
        let name = format!("executed_{}.traj", seg.label);
        if let Err(e) = std::fs::write(args.out.join(&name), text) {
            eprintln!("error: cannot write {name}: {e}");
            return EXIT_HARNESS;
        }
    }
    let metrics = format!("{METRICS_HEADER}\n{row}\n");
    if let Err(e) = std::fs::write(args.out.join("metrics.csv"), metrics) {
        eprintln!("error: cannot write metrics.csv: {e}");
        return EXIT_HARNESS;
    }
    println!("{row}");
    code
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Expands `*` patterns against the parent directory; plain paths pass
/// through.
fn expand_patterns(patterns: &[String]) -> Result<Vec<PathBuf>, String> {
    let mut out = Vec::new();
    for p in patterns {
        if let Some(star) = p.find('*') {
            let (dir_part, file_part) = match p[..star].rfind('/') {
                Some(slash) => (&p[..slash], &p[slash + 1..]),
                None => (".", &p[..]),
            };
            let (prefix, suffix) = match file_part.find('*') {
                Some(s) => (&file_part[..s], &file_part[s + 1..]),
                None => (file_part, ""),
            };
            let mut matches: Vec<PathBuf> = std::fs::read_dir(dir_part)
                .map_err(|e| format!("cannot list {dir_part}: {e}"))?
                .filter_map(|entry| entry.ok().map(|e| e.path()))
                .filter(|path| {
                    path.file_name()
                        .map(|n| {
                            let n = n.to_string_lossy();
                            n.starts_with(prefix) && n.ends_with(suffix)
                        })
                        .unwrap_or(false)
                })
                .collect();
            matches.sort();
            if matches.is_empty() {
                return Err(format!("pattern `{p}` matched no files"));
            }
            out.extend(matches);
        } else {
            out.push(PathBuf::from(p));
        }
    }
    Ok(out)
}

struct BenchRow {
    scenario: String,
    method: String,
    seed: u64,
    result: EpisodeResult,
    plan_cost: f64,
}

fn cmd_benchmark(args: &BenchmarkArgs) -> i32 {
    let paths = match expand_patterns(&args.scenario) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_HARNESS;
        }
    };
    let methods: Vec<MethodArg> = match args
        .methods
        .split(',')
        .map(|m| match m.trim() {
            "greedy" => Ok(MethodArg::Greedy),
            "bnb" => Ok(MethodArg::Bnb),
            other => Err(format!("unknown method `{other}`")),
        })
        .collect()
    {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_HARNESS;
        }
    };

    // plan each scenario once per method, then fan episodes out over seeds
    let mut planned: Vec<(String, MethodArg, TaskPlan, f64, Scenario)> = Vec::new();
    for path in &paths {
        let scenario = match load_scenario(path) {
            Ok(s) => s,
            Err(code) => return code,
        };
        let planner = planner_for(&scenario);
        for &method in &methods {
            let (plan, _) =
                match plan_with_method(&scenario, &planner, method, args.bound.into(), false) {
                    Ok(p) => p,
                    Err(e) => {
                        eprintln!("error: planning {} with {}: {e}", stem(path), method.name());
                        return EXIT_INFEASIBLE;
                    }
                };
            let realized = match realize_plan(&scenario, &plan.order, &plan.assignment, &planner) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: realizing {} with {}: {e}", stem(path), method.name());
                    return EXIT_INFEASIBLE;
                }
            };
            planned.push((stem(path), method, realized, plan.total_cost, scenario.clone()));
        }
    }

    let jobs: Vec<(usize, u64)> = (0..planned.len())
        .flat_map(|i| (0..args.seeds).map(move |s| (i, s)))
        .collect();
    let mut rows: Vec<BenchRow> = jobs
        .par_iter()
        .map(|&(i, seed)| {
            let (name, method, plan, plan_cost, scenario) = &planned[i];
            let noise = NoiseModel::with_mae(args.noise_mae, seed);
            let config = EpisodeConfig::default();
            let result = match run_episode(scenario, plan, &config, &noise) {
                Ok(trace) => trace.result,
                Err(SimError::CollisionAbort { partial, .. })
                | Err(SimError::DivergenceAbort { partial, .. }) => *partial,
                Err(_) => EpisodeResult {
                    per_object: vec![],
                    completion_time: f64::NAN,
                    total_distance: f64::NAN,
                    collision_events: 0,
                    max_tracking_error: f64::NAN,
                    mean_tracking_error: f64::NAN,
                },
            };
            BenchRow {
                scenario: name.clone(),
                method: method.name().to_string(),
                seed,
                result,
                plan_cost: *plan_cost,
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        (&a.scenario, &a.method, a.seed).cmp(&(&b.scenario, &b.method, b.seed))
    });

    let mut out = String::new();
    out.push_str(METRICS_HEADER);
    out.push('\n');
    for row in &rows {
        out.push_str(&metrics_row(
            &row.scenario,
            &row.method,
            row.seed,
            &row.result,
        ));
        out.push('\n');
    }

    // aggregates and the ordering check, as trailing comment lines
    let mut keys: Vec<(String, String)> = rows
        .iter()
        .map(|r| (r.scenario.clone(), r.method.clone()))
        .collect();
    keys.sort();
    keys.dedup();
    let stats = |scenario: &str, method: &str| -> (f64, f64, f64, f64, f64) {
        let times: Vec<f64> = rows
            .iter()
            .filter(|r| r.scenario == scenario && r.method == method)
            .map(|r| r.result.completion_time)
            .collect();
        let dists: Vec<f64> = rows
            .iter()
            .filter(|r| r.scenario == scenario && r.method == method)
            .map(|r| r.result.total_distance)
            .collect();
        let plan_cost = rows
            .iter()
            .find(|r| r.scenario == scenario && r.method == method)
            .map(|r| r.plan_cost)
            .unwrap_or(f64::NAN);
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
        let sd = |v: &[f64], m: f64| {
            (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len().max(1) as f64).sqrt()
        };
        let mt = mean(&times);
        let md = mean(&dists);
        (mt, sd(&times, mt), md, sd(&dists, md), plan_cost)
    };
    for (scenario, method) in &keys {
        let (mt, st, md, sd_d, plan_cost) = stats(scenario, method);
        out.push_str(&format!(
            "# aggregate scenario={scenario} method={method} mean_time_s={mt:.6} sd_time_s={st:.6} mean_dist_m={md:.6} sd_dist_m={sd_d:.6} plan_cost_s={plan_cost:.6}\n"
        ));
    }
    let mut violations = 0usize;
    let scenarios: Vec<String> = {
        let mut s: Vec<String> = rows.iter().map(|r| r.scenario.clone()).collect();
        s.sort();
        s.dedup();
        s
    };
    if methods.contains(&MethodArg::Greedy) && methods.contains(&MethodArg::Bnb) {
        for scenario in &scenarios {
            let (bnb_mean, _, _, _, _) = stats(scenario, "bnb");
            let (greedy_mean, _, _, _, _) = stats(scenario, "greedy");
            let ok = bnb_mean <= greedy_mean + 1e-9;
            if !ok {
                violations += 1;
                eprintln!(
                    "warning: scenario {scenario}: mean bnb time {bnb_mean:.3} exceeds greedy {greedy_mean:.3}"
                );
            }
            out.push_str(&format!(
                "# ordering scenario={scenario} bnb_mean_le_greedy_mean={}\n",
                if ok { "ok" } else { "VIOLATED" }
            ));
        }
    }

    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            if let Err(e) = std::fs::create_dir_all(parent) {
                eprintln!("error: cannot create {}: {e}", parent.display());
                return EXIT_HARNESS;
            }
        }
    }
    if let Err(e) = std::fs::write(&args.out, out) {
        eprintln!("error: cannot write {}: {e}", args.out.display());
        return EXIT_HARNESS;
    }
    println!(
        "rows={} scenarios={} methods={} seeds={} violations={violations}",
        rows.len(),
        scenarios.len(),
        methods.len(),
        args.seeds
    );
    EXIT_OK
}
