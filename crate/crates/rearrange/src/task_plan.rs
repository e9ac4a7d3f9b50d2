//! Joint optimization of the object visitation order and the
//! object-to-target assignment.
//!
//! The search minimizes summed trajectory durations over all (order,
//! assignment) pairs via best-first branch and bound, warm-started by a
//! greedy plan and pruned with admissible lower bounds: a Hungarian
//! assignment bound over the remaining manipulation legs plus an optional
//! travel bound (per-object row minima or a Prim spanning tree).
//!
//! Costs are evaluated against matrices precomputed from the initial world
//! configuration; execution-time realization replans each leg against the
//! evolving configuration.

use crate::geom::Pose2;
use crate::occupancy::{update_map, CollisionModel, OccupancyMap, Phase};
use crate::scenario::Scenario;
use crate::se2_plan::{pre_grasp_pose, TrajectoryPlanner};
use crate::trajectory::Trajectory;
use rayon::prelude::*;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TaskError {
    #[error("planning infeasible: {0}")]
    PlanningInfeasible(String),
    #[error("no finite-cost assignment exists")]
    InfeasibleAssignment,
    #[error("bound violation: {0}")]
    BoundViolation(String),
}

/// Travel-bound selection for the branch-and-bound search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundMode {
    /// Hungarian assignment bound only.
    Assignment,
    /// Assignment bound plus per-object minimum travel entries.
    AssignmentRowMin,
    /// Assignment bound plus the spanning-tree travel bound.
    AssignmentMst,
}

/// Travel and manipulation durations for every (departure, object) and
/// (object, target) pair, with the planned trajectories memoized alongside.
///
/// Row 0 of `travel` departs from the robot start; row `l + 1` departs from
/// the release pose at target `l`. Infeasible pairs carry `f64::INFINITY`.
#[derive(Debug, Clone)]
pub struct CostMatrices {
    pub travel: Vec<Vec<f64>>,
    pub manipulate: Vec<Vec<f64>>,
    travel_trajectories: Option<Vec<Vec<Option<Trajectory>>>>,
    manipulate_trajectories: Option<Vec<Vec<Option<Trajectory>>>>,
    /// Straight-line lower-bound times between pre-grasp locations, used by
    /// the spanning-tree bound; zero when no geometry is attached.
    object_direct_lb: Vec<Vec<f64>>,
    /// Straight-line lower-bound times from each departure row to each
    /// pre-grasp location.
    row_direct_lb: Vec<Vec<f64>>,
}

impl CostMatrices {
    pub fn object_count(&self) -> usize {
        self.manipulate.len()
    }

    /// Builds matrices from raw values without geometry; straight-line
    /// fallbacks degrade to zero (weakest admissible choice).
    pub fn from_values(travel: Vec<Vec<f64>>, manipulate: Vec<Vec<f64>>) -> CostMatrices {
        let n = manipulate.len();
        assert_eq!(travel.len(), n + 1, "travel must have N+1 rows");
        assert!(travel.iter().all(|r| r.len() == n));
        assert!(manipulate.iter().all(|r| r.len() == n));
        CostMatrices {
            object_direct_lb: vec![vec![0.0; n]; n],
            row_direct_lb: vec![vec![0.0; n]; n + 1],
            travel,
            manipulate,
            travel_trajectories: None,
            manipulate_trajectories: None,
        }
    }

    pub fn has_trajectories(&self) -> bool {
        self.travel_trajectories.is_some() && self.manipulate_trajectories.is_some()
    }

    pub fn travel_trajectory(&self, row: usize, object: usize) -> Option<&Trajectory> {
        self.travel_trajectories.as_ref()?[row][object].as_ref()
    }

    pub fn manipulate_trajectory(&self, object: usize, target: usize) -> Option<&Trajectory> {
        self.manipulate_trajectories.as_ref()?[object][target].as_ref()
    }
}

/// One grasp-and-release task: the robot-only approach and the coupled
/// robot-object transfer.
#[derive(Debug, Clone)]
pub struct TaskTrajectories {
    pub object_index: usize,
    pub target_index: usize,
    pub pre: Trajectory,
    pub post: Trajectory,
}

/// A complete rearrangement plan: visitation order, assignment, per-task
/// trajectories (when realized), and the summed cost in seconds.
#[derive(Debug, Clone)]
pub struct TaskPlan {
    /// Object indices in visit order.
    pub order: Vec<usize>,
    /// `assignment[object_index] = target_index`.
    pub assignment: Vec<usize>,
    pub tasks: Vec<TaskTrajectories>,
    pub total_cost: f64,
}

/// Sum of task trajectory durations.
pub fn plan_cost(plan: &TaskPlan) -> f64 {
    plan.tasks
        .iter()
        .map(|t| t.pre.duration + t.post.duration)
        .sum()
}

/// Departure robot pose after a release at target `l`. Uses the grasp
/// offset of the same-index object; exact whenever objects share one offset.
pub fn departure_pose(scenario: &Scenario, target_index: usize) -> Pose2 {
    scenario.targets[target_index].compose(&scenario.objects[target_index].grasp_offset)
}

fn with_object_model(scenario: &Scenario, object_index: usize) -> CollisionModel {
    let inv = scenario.objects[object_index].grasp_offset.inverse();
    CollisionModel::robot_with_object(
        &scenario.footprint,
        (inv.x, inv.y),
        scenario.objects[object_index].collision_radius,
    )
}

/// Plans every travel and manipulation leg against the initial world
/// configuration and memoizes durations plus trajectories.
///
/// Travel rows use the pre-grasp map (all objects are obstacles); the
/// manipulation row of object `j` uses the post-grasp map with `j` freed.
pub fn build_cost_matrices(
    scenario: &Scenario,
    planner: &dyn TrajectoryPlanner,
) -> Result<CostMatrices, TaskError> {
    let n = scenario.objects.len();
    let base = OccupancyMap::from_scenario(scenario);
    let robot_model = CollisionModel::robot_only(&scenario.footprint);
    let pre_map = update_map(&base, None, Phase::PreGrasp).expect("valid phase");

    let departures: Vec<Pose2> = std::iter::once(scenario.robot_start)
        .chain((0..n).map(|l| departure_pose(scenario, l)))
        .collect();
    let pre_grasps: Vec<Pose2> = scenario
        .objects
        .iter()
        .map(|o| o.pre_grasp_from(&o.initial_pose))
        .collect();

    let travel_cells: Vec<(usize, usize)> = (0..=n)
        .flat_map(|r| (0..n).map(move |j| (r, j)))
        .collect();
    let travel_results: Vec<Option<Trajectory>> = travel_cells
        .par_iter()
        .map(|&(r, j)| {
            planner
                .plan(
                    &departures[r],
                    &pre_grasps[j],
                    &robot_model,
                    &pre_map,
                    &scenario.limits,
                )
                .ok()
        })
        .collect();

    let manip_cells: Vec<(usize, usize)> = (0..n)
        .flat_map(|j| (0..n).map(move |l| (j, l)))
        .collect();
    let manip_results: Vec<Option<Trajectory>> = manip_cells
        .par_iter()
        .map(|&(j, l)| {
            let map = update_map(&base, Some(&scenario.objects[j].id), Phase::PostGrasp)
                .expect("object exists");
            let model = with_object_model(scenario, j);
            let goal = scenario.targets[l].compose(&scenario.objects[j].grasp_offset);
            planner
                .plan(&pre_grasps[j], &goal, &model, &map, &scenario.limits)
                .ok()
        })
        .collect();

    let mut travel = vec![vec![f64::INFINITY; n]; n + 1];
    let mut travel_trajs = vec![vec![None; n]; n + 1];
    for (&(r, j), traj) in travel_cells.iter().zip(travel_results) {
        if let Some(t) = traj {
            travel[r][j] = t.duration;
            travel_trajs[r][j] = Some(t);
        }
    }
    let mut manipulate = vec![vec![f64::INFINITY; n]; n];
    let mut manip_trajs = vec![vec![None; n]; n];
    for (&(j, l), traj) in manip_cells.iter().zip(manip_results) {
        if let Some(t) = traj {
            manipulate[j][l] = t.duration;
            manip_trajs[j][l] = Some(t);
        }
    }

    for j in 0..n {
        if (0..=n).all(|r| travel[r][j].is_infinite()) {
            return Err(TaskError::PlanningInfeasible(format!(
                "object {} is unreachable from every departure location",
                scenario.objects[j].id
            )));
        }
        if manipulate[j].iter().all(|c| c.is_infinite()) {
            return Err(TaskError::PlanningInfeasible(format!(
                "object {} cannot reach any target",
                scenario.objects[j].id
            )));
        }
    }
    for l in 0..n {
        if (0..n).all(|j| manipulate[j][l].is_infinite()) {
            return Err(TaskError::PlanningInfeasible(format!(
                "target {l} is unreachable for every object"
            )));
        }
    }

    let v = scenario.limits.v_max;
    let object_direct_lb = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| pre_grasps[a].distance(&pre_grasps[b]) / v)
                .collect()
        })
        .collect();
    let row_direct_lb = (0..=n)
        .map(|r| {
            (0..n)
                .map(|j| departures[r].distance(&pre_grasps[j]) / v)
                .collect()
        })
        .collect();

    Ok(CostMatrices {
        travel,
        manipulate,
        travel_trajectories: Some(travel_trajs),
        manipulate_trajectories: Some(manip_trajs),
        object_direct_lb,
        row_direct_lb,
    })
}

fn assemble_plan(costs: &CostMatrices, order: Vec<usize>, targets_in_order: Vec<usize>) -> TaskPlan {
    let n = costs.object_count();
    let mut assignment = vec![0usize; n];
    for (k, &j) in order.iter().enumerate() {
        assignment[j] = targets_in_order[k];
    }
    let mut tasks = Vec::new();
    if costs.has_trajectories() {
        let mut row = 0usize;
        for (k, &j) in order.iter().enumerate() {
            let l = targets_in_order[k];
            let (pre, post) = match (
                costs.travel_trajectory(row, j),
                costs.manipulate_trajectory(j, l),
            ) {
                (Some(a), Some(b)) => (a.clone(), b.clone()),
                _ => {
                    tasks.clear();
                    break;
                }
            };
            tasks.push(TaskTrajectories {
                object_index: j,
                target_index: l,
                pre,
                post,
            });
            row = l + 1;
        }
    }
    let total_cost = sequence_cost(costs, &order, &targets_in_order);
    TaskPlan {
        order,
        assignment,
        tasks,
        total_cost,
    }
}

/// Charged cost of a full (order, targets-in-order) sequence on the matrices.
fn sequence_cost(costs: &CostMatrices, order: &[usize], targets_in_order: &[usize]) -> f64 {
    let mut row = 0usize;
    let mut total = 0.0;
    for (&j, &l) in order.iter().zip(targets_in_order) {
        total += costs.travel[row][j] + costs.manipulate[j][l];
        row = l + 1;
    }
    total
}

/// Nearest-next greedy baseline: repeatedly picks the object with minimum
/// travel cost from the current location, then the cheapest unassigned
/// target for it. Ties break toward the lowest index.
pub fn greedy_plan(costs: &CostMatrices) -> Result<TaskPlan, TaskError> {
    let n = costs.object_count();
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut unassigned: Vec<usize> = (0..n).collect();
    let mut order = Vec::with_capacity(n);
    let mut targets_in_order = Vec::with_capacity(n);
    let mut row = 0usize;
    for _ in 0..n {
        let mut best_obj: Option<(f64, usize)> = None;
        for &j in &remaining {
            let c = costs.travel[row][j];
            if c.is_finite() && best_obj.map_or(true, |(bc, _)| c < bc) {
                best_obj = Some((c, j));
            }
        }
        let (_, j) = best_obj.ok_or_else(|| {
            TaskError::PlanningInfeasible("greedy: no reachable object remains".into())
        })?;
        let mut best_tgt: Option<(f64, usize)> = None;
        for &l in &unassigned {
            let c = costs.manipulate[j][l];
            if c.is_finite() && best_tgt.map_or(true, |(bc, _)| c < bc) {
                best_tgt = Some((c, l));
            }
        }
        let (_, l) = best_tgt.ok_or_else(|| {
            TaskError::PlanningInfeasible("greedy: no feasible target remains".into())
        })?;
        remaining.retain(|&x| x != j);
        unassigned.retain(|&x| x != l);
        order.push(j);
        targets_in_order.push(l);
        row = l + 1;
    }
    Ok(assemble_plan(costs, order, targets_in_order))
}

/// Minimum-cost assignment on a square matrix (entries >= 0 or infinite).
/// Returns the row-to-column assignment and its total cost.
pub fn hungarian_assign(cost: &[Vec<f64>]) -> Result<(Vec<usize>, f64), TaskError> {
    let n = cost.len();
    if n == 0 {
        return Ok((vec![], 0.0));
    }
    assert!(cost.iter().all(|r| r.len() == n), "matrix must be square");
    const BIG: f64 = 1e15;
    let lookup = |r: usize, c: usize| -> f64 {
        let v = cost[r][c];
        if v.is_finite() {
            v
        } else {
            BIG
        }
    };

    // Jonker-Volgenant style shortest augmenting paths with potentials.
    let mut job = vec![usize::MAX; n + 1];
    let mut ys = vec![0.0; n];
    let mut yt = vec![0.0; n + 1];
    for row in 0..n {
        let mut w_cur = n;
        job[w_cur] = row;
        let mut min_to = vec![f64::INFINITY; n + 1];
        let mut prv = vec![usize::MAX; n + 1];
        let mut in_z = vec![false; n + 1];
        while job[w_cur] != usize::MAX {
            in_z[w_cur] = true;
            let j = job[w_cur];
            let mut delta = f64::INFINITY;
            let mut w_next = 0;
            for w in 0..n {
                if !in_z[w] {
                    let diff = lookup(j, w) - ys[j] - yt[w];
                    if diff < min_to[w] {
                        min_to[w] = diff;
                        prv[w] = w_cur;
                    }
                    if min_to[w] < delta {
                        delta = min_to[w];
                        w_next = w;
                    }
                }
            }
            for w in 0..=n {
                if in_z[w] {
                    ys[job[w]] += delta;
                    yt[w] -= delta;
                } else {
                    min_to[w] -= delta;
                }
            }
            w_cur = w_next;
        }
        let mut w = w_cur;
        while w != n {
            let p = prv[w];
            job[w] = job[p];
            w = p;
        }
    }

    let mut assignment = vec![usize::MAX; n];
    for w in 0..n {
        if job[w] != usize::MAX {
            assignment[job[w]] = w;
        }
    }
    let mut total = 0.0;
    for (r, &c) in assignment.iter().enumerate() {
        let v = cost[r][c];
        if !v.is_finite() {
            return Err(TaskError::InfeasibleAssignment);
        }
        total += v;
        if total >= BIG / 2.0 {
            return Err(TaskError::InfeasibleAssignment);
        }
    }
    Ok((assignment, total))
}

/// Prim's minimum spanning tree weight over a symmetric weight matrix.
pub fn prim_mst(weights: &[Vec<f64>]) -> f64 {
    let n = weights.len();
    if n <= 1 {
        return 0.0;
    }
    let mut in_tree = vec![false; n];
    let mut dist = weights[0].clone();
    in_tree[0] = true;
    let mut total = 0.0;
    for _ in 1..n {
        let mut best = usize::MAX;
        for v in 0..n {
            if !in_tree[v] && (best == usize::MAX || dist[v] < dist[best]) {
                best = v;
            }
        }
        total += dist[best];
        in_tree[best] = true;
        for v in 0..n {
            if !in_tree[v] && weights[best][v] < dist[v] {
                dist[v] = weights[best][v];
            }
        }
    }
    total
}

/// Cheapest possible cost of the travel leg that enters object `j`, given
/// the current departure row and the set of still-unassigned targets.
///
/// With a single remaining object the leg must depart from the current row;
/// otherwise it may depart from any target released along the way.
fn entry_cost(costs: &CostMatrices, current_row: usize, remaining: &[usize], j: usize,
              unassigned: &[usize]) -> f64 {
    let mut best = costs.travel[current_row][j];
    if remaining.len() >= 2 {
        for &t in unassigned {
            let c = costs.travel[t + 1][j];
            if c < best {
                best = c;
            }
        }
    }
    best
}

/// Sum of per-object minimum travel entries; admissible for any completion.
pub fn row_min_travel_bound(
    costs: &CostMatrices,
    current_row: usize,
    remaining: &[usize],
    unassigned: &[usize],
) -> f64 {
    remaining
        .iter()
        .map(|&j| entry_cost(costs, current_row, remaining, j, unassigned))
        .sum()
}

/// Spanning-tree travel bound over the current location and the remaining
/// pre-grasp locations.
///
/// Edge weights start from the travel matrix (straight-line time where no
/// matrix entry applies) and are additionally capped by the entry cost of
/// either endpoint, which keeps the tree weight below the travel cost of
/// every feasible completion even when an unassigned target sits next to a
/// remaining object.
pub fn mst_travel_bound(
    costs: &CostMatrices,
    current_row: usize,
    remaining: &[usize],
    unassigned: &[usize],
) -> f64 {
    if remaining.is_empty() {
        return 0.0;
    }
    if remaining.len() == 1 {
        return costs.travel[current_row][remaining[0]];
    }
    let m = remaining.len() + 1; // node 0 = current location
    let entry: Vec<f64> = remaining
        .iter()
        .map(|&j| entry_cost(costs, current_row, remaining, j, unassigned))
        .collect();
    let mut w = vec![vec![f64::INFINITY; m]; m];
    for (a_idx, &a) in remaining.iter().enumerate() {
        let travel = costs.travel[current_row][a];
        let base = if travel.is_finite() {
            travel
        } else {
            costs.row_direct_lb[current_row][a]
        };
        let capped = base.min(entry[a_idx]);
        w[0][a_idx + 1] = capped;
        w[a_idx + 1][0] = capped;
        for (b_idx, &b) in remaining.iter().enumerate().skip(a_idx + 1) {
            let capped = costs.object_direct_lb[a][b]
                .min(entry[a_idx])
                .min(entry[b_idx]);
            w[a_idx + 1][b_idx + 1] = capped;
            w[b_idx + 1][a_idx + 1] = capped;
        }
    }
    prim_mst(&w)
}

/// Lower bound on the completion cost of a partial sequence.
fn completion_bound(
    costs: &CostMatrices,
    mode: BoundMode,
    current_row: usize,
    remaining: &[usize],
    unassigned: &[usize],
) -> f64 {
    if remaining.is_empty() {
        return 0.0;
    }
    let sub: Vec<Vec<f64>> = remaining
        .iter()
        .map(|&j| unassigned.iter().map(|&l| costs.manipulate[j][l]).collect())
        .collect();
    let manip = match hungarian_assign(&sub) {
        Ok((_, c)) => c,
        Err(_) => return f64::INFINITY,
    };
    let travel = match mode {
        BoundMode::Assignment => 0.0,
        BoundMode::AssignmentRowMin => {
            row_min_travel_bound(costs, current_row, remaining, unassigned)
        }
        BoundMode::AssignmentMst => mst_travel_bound(costs, current_row, remaining, unassigned),
    };
    manip + travel
}

#[derive(Debug, Clone)]
struct SearchNode {
    order: Vec<usize>,
    targets: Vec<usize>,
    row: usize,
    g: f64,
    lb: f64,
}

struct NodeEntry(SearchNode);

impl PartialEq for NodeEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for NodeEntry {}
impl PartialOrd for NodeEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for NodeEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (lb, shallower-last, lexicographic path); independent
        // of bound mode so expansion counts are comparable across modes
        other
            .0
            .lb
            .total_cmp(&self.0.lb)
            .then_with(|| self.0.order.len().cmp(&other.0.order.len()))
            .then_with(|| other.0.order.cmp(&self.0.order))
            .then_with(|| other.0.targets.cmp(&self.0.targets))
    }
}

/// Branch-and-bound outcome with search statistics.
#[derive(Debug, Clone)]
pub struct BnbOutcome {
    pub plan: TaskPlan,
    /// Nodes expanded (popped and branched).
    pub expansions: usize,
    /// Nodes discarded because their bound met the incumbent.
    pub pruned: usize,
}

/// Exhaustive minimum over all (order, assignment) pairs. Returns the best
/// order, targets-in-order, and cost; `None` when nothing feasible exists.
pub fn brute_force_optimal(costs: &CostMatrices) -> Option<(Vec<usize>, Vec<usize>, f64)> {
    let n = costs.object_count();
    let mut best: Option<(Vec<usize>, Vec<usize>, f64)> = None;
    let objects: Vec<usize> = (0..n).collect();
    let targets: Vec<usize> = (0..n).collect();
    for_each_permutation(&objects, &mut |order| {
        for_each_permutation(&targets, &mut |tgt| {
            let c = sequence_cost(costs, order, tgt);
            if c.is_finite() && best.as_ref().map_or(true, |(_, _, bc)| c < *bc) {
                best = Some((order.to_vec(), tgt.to_vec(), c));
            }
        });
    });
    best
}

/// Minimum completion cost from a partial state, by brute force. Used by
/// the bound verification mode and the test oracles.
fn brute_force_completion(
    costs: &CostMatrices,
    row: usize,
    remaining: &[usize],
    unassigned: &[usize],
) -> f64 {
    let mut best = f64::INFINITY;
    for_each_permutation(remaining, &mut |order| {
        for_each_permutation(unassigned, &mut |tgt| {
            let mut r = row;
            let mut total = 0.0;
            for (&j, &l) in order.iter().zip(tgt.iter()) {
                total += costs.travel[r][j] + costs.manipulate[j][l];
                r = l + 1;
            }
            if total < best {
                best = total;
            }
        });
    });
    best
}

/// Calls `f` on every permutation of `items` (Heap's algorithm).
pub fn for_each_permutation(items: &[usize], f: &mut dyn FnMut(&[usize])) {
    let mut a = items.to_vec();
    let n = a.len();
    if n == 0 {
        f(&a);
        return;
    }
    let mut c = vec![0usize; n];
    f(&a);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            f(&a);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Globally optimal plan over the fixed cost matrices.
///
/// Best-first search on the lower bound; a branch is pruned iff its bound
/// meets the incumbent, which the warm start initializes. With
/// `verify_bounds` every expanded node's bound and every pruned branch is
/// cross-checked against brute-force completion costs.
pub fn branch_and_bound(
    costs: &CostMatrices,
    warm_start: &TaskPlan,
    mode: BoundMode,
    verify_bounds: bool,
) -> Result<BnbOutcome, TaskError> {
    let n = costs.object_count();
    let mut incumbent_cost = warm_start.total_cost;
    let mut incumbent: Option<(Vec<usize>, Vec<usize>)> = None;
    let mut expansions = 0usize;
    let mut pruned_count = 0usize;
    let mut pruned_nodes: Vec<SearchNode> = Vec::new();

    let root = SearchNode {
        order: vec![],
        targets: vec![],
        row: 0,
        g: 0.0,
        lb: completion_bound(costs, mode, 0, &(0..n).collect::<Vec<_>>(), &(0..n).collect::<Vec<_>>()),
    };
    let mut open = BinaryHeap::new();
    open.push(NodeEntry(root));

    while let Some(NodeEntry(node)) = open.pop() {
        let remaining: Vec<usize> = (0..n).filter(|j| !node.order.contains(j)).collect();
        let unassigned: Vec<usize> = (0..n).filter(|l| !node.targets.contains(l)).collect();
        if node.lb >= incumbent_cost {
            pruned_count += 1;
            if verify_bounds {
                pruned_nodes.push(node);
            }
            continue;
        }
        if remaining.is_empty() {
            // complete plan strictly better than the incumbent
            incumbent_cost = node.g;
            incumbent = Some((node.order.clone(), node.targets.clone()));
            continue;
        }
        expansions += 1;
        if verify_bounds {
            let min_completion = brute_force_completion(costs, node.row, &remaining, &unassigned);
            if node.lb > node.g + min_completion + 1e-9 {
                return Err(TaskError::BoundViolation(format!(
                    "expanded node bound {:.12} exceeds true completion {:.12} (order {:?})",
                    node.lb,
                    node.g + min_completion,
                    node.order
                )));
            }
        }
        for &j in &remaining {
            let travel = costs.travel[node.row][j];
            if !travel.is_finite() {
                continue;
            }
            for &l in &unassigned {
                let manip = costs.manipulate[j][l];
                if !manip.is_finite() {
                    continue;
                }
                let mut order = node.order.clone();
                order.push(j);
                let mut targets = node.targets.clone();
                targets.push(l);
                let g = node.g + travel + manip;
                let rem: Vec<usize> = remaining.iter().copied().filter(|&x| x != j).collect();
                let una: Vec<usize> = unassigned.iter().copied().filter(|&x| x != l).collect();
                let lb = g + completion_bound(costs, mode, l + 1, &rem, &una);
                let child = SearchNode {
                    order,
                    targets,
                    row: l + 1,
                    g,
                    lb,
                };
                if child.lb >= incumbent_cost {
                    pruned_count += 1;
                    if verify_bounds {
                        pruned_nodes.push(child);
                    }
                } else {
                    open.push(NodeEntry(child));
                }
            }
        }
    }

    if verify_bounds {
        for node in &pruned_nodes {
            let remaining: Vec<usize> = (0..n).filter(|j| !node.order.contains(j)).collect();
            let unassigned: Vec<usize> = (0..n).filter(|l| !node.targets.contains(l)).collect();
            let min_completion = if remaining.is_empty() {
                0.0
            } else {
                brute_force_completion(costs, node.row, &remaining, &unassigned)
            };
            if node.g + min_completion < incumbent_cost - 1e-9 {
                return Err(TaskError::BoundViolation(format!(
                    "pruned branch {:?} completes at {:.12}, below the returned cost {:.12}",
                    node.order,
                    node.g + min_completion,
                    incumbent_cost
                )));
            }
        }
    }

    let plan = match incumbent {
        Some((order, targets)) => assemble_plan(costs, order, targets),
        None => {
            // nothing beat the warm start; it is optimal
            if !warm_start.total_cost.is_finite() {
                return Err(TaskError::PlanningInfeasible(
                    "warm start is infeasible and no better plan exists".into(),
                ));
            }
            warm_start.clone()
        }
    };
    Ok(BnbOutcome {
        plan,
        expansions,
        pruned: pruned_count,
    })
}

/// Replans every leg of `(order, assignment)` against the evolving world
/// configuration (already-moved objects sit at their targets) and returns an
/// executable chained plan whose cost is the realized duration sum.
pub fn realize_plan(
    scenario: &Scenario,
    order: &[usize],
    assignment: &[usize],
    planner: &dyn TrajectoryPlanner,
) -> Result<TaskPlan, TaskError> {
    let robot_model = CollisionModel::robot_only(&scenario.footprint);
    let mut object_poses: Vec<Pose2> =
        scenario.objects.iter().map(|o| o.initial_pose).collect();
    let mut chain_pose = scenario.robot_start;
    let mut tasks = Vec::with_capacity(order.len());
    for &j in order {
        let l = assignment[j];
        let object = &scenario.objects[j];
        let mut map = OccupancyMap::from_scenario(scenario);
        for (idx, pose) in object_poses.iter().enumerate() {
            map = map
                .with_object_moved(&scenario.objects[idx].id, pose)
                .expect("object exists");
        }
        let pre_map = update_map(&map, None, Phase::PreGrasp).expect("valid phase");
        let grasp_pose = pre_grasp_pose(&object_poses[j], &object.grasp_offset);
        let pre = planner
            .plan(&chain_pose, &grasp_pose, &robot_model, &pre_map, &scenario.limits)
            .map_err(|e| {
                TaskError::PlanningInfeasible(format!(
                    "approach to object {} failed: {e}",
                    object.id
                ))
            })?;
        let post_map = update_map(&map, Some(&object.id), Phase::PostGrasp).expect("valid phase");
        let model = with_object_model(scenario, j);
        let release_pose = scenario.targets[l].compose(&object.grasp_offset);
        let post = planner
            .plan(&grasp_pose, &release_pose, &model, &post_map, &scenario.limits)
            .map_err(|e| {
                TaskError::PlanningInfeasible(format!(
                    "transfer of object {} to target {l} failed: {e}",
                    object.id
                ))
            })?;
        object_poses[j] = scenario.targets[l];
        chain_pose = release_pose;
        tasks.push(TaskTrajectories {
            object_index: j,
            target_index: l,
            pre,
            post,
        });
    }
    let total_cost = tasks
        .iter()
        .map(|t| t.pre.duration + t.post.duration)
        .sum();
    Ok(TaskPlan {
        order: order.to_vec(),
        assignment: assignment.to_vec(),
        tasks,
        total_cost,
    })
}
