//! Ground truth at desk scale: a depth-first branch-and-bound solver and an
//! MPS export of the integer program for external MILP solvers.

mod mps;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

pub use mps::{build_ilp, export_mps, write_mps, ColumnKind, IlpColumn, IlpExport, IlpRow, MpsFormat, RowSense};

use crate::error::{Error, Result};
use crate::feasibility::{check_insertion, objective};
use crate::geo::TravelTimeMatrix;
use crate::model::{Instance, Schedule};
use crate::EPSILON_HOURS;

/// Desk default for the wall-clock budget.
pub const DEFAULT_TIME_BUDGET: Duration = Duration::from_secs(60);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExactStatus {
    Optimal,
    Infeasible,
    NodeLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactLimits {
    pub node_budget: Option<u64>,
    pub time_budget: Option<Duration>,
    /// Instances with more missions are refused outright.
    pub max_missions: usize,
}

impl Default for ExactLimits {
    fn default() -> Self {
        ExactLimits {
            node_budget: None,
            time_budget: Some(DEFAULT_TIME_BUDGET),
            max_missions: 64,
        }
    }
}

impl ExactLimits {
    pub fn unlimited() -> Self {
        ExactLimits {
            node_budget: None,
            time_budget: None,
            max_missions: usize::MAX,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactResult {
    pub status: ExactStatus,
    /// Best schedule found; the optimum when `status` is `Optimal`.
    pub schedule: Option<Schedule>,
    /// Objective of `schedule`, infinite when there is none.
    pub objective_hours: f64,
    pub nodes_explored: u64,
    /// Proven lower bound on the optimum.
    pub best_bound: f64,
    /// Objective of every incumbent in discovery order.
    pub incumbent_trace: Vec<f64>,
}

struct Solver<'a> {
    instance: &'a Instance,
    matrix: &'a TravelTimeMatrix,
    order: Vec<usize>,
    /// `remaining_bound[d]`: lower bound on the flight hours still to be
    /// added once the first `d` missions of `order` are placed.
    remaining_bound: Vec<f64>,
    schedule: Schedule,
    incumbent: Option<Schedule>,
    incumbent_cost: f64,
    trace: Vec<f64>,
    nodes: u64,
    node_budget: u64,
    deadline: Option<Instant>,
    aborted: bool,
    open_bound: f64,
}

/// Slack applied before pruning so that near-ties are still resolved by the
/// canonical objective sum.
const PRUNE_SLACK_H: f64 = 1e-9;

impl<'a> Solver<'a> {
    fn out_of_budget(&mut self) -> bool {
        if self.nodes >= self.node_budget {
            return true;
        }
        if let Some(deadline) = self.deadline {
            if self.nodes.is_multiple_of(256) && Instant::now() >= deadline {
                return true;
            }
        }
        false
    }

    fn dfs(&mut self, depth: usize, cost: f64) {
        if depth == self.order.len() {
            let exact = objective(self.instance, self.matrix, &self.schedule);
            if exact < self.incumbent_cost {
                self.incumbent_cost = exact;
                self.incumbent = Some(self.schedule.clone());
                self.trace.push(exact);
            }
            return;
        }

        let mission = self.order[depth];
        let mut children: Vec<(f64, u32, usize, usize)> = Vec::new();
        for (b, base) in self.instance.bases.iter().enumerate() {
            if !base.vehicle.can_serve(self.instance.missions[mission].heli_only) {
                continue;
            }
            let route = &self.schedule.routes[b];
            for pos in 0..=route.len() {
                let c = check_insertion(self.instance, self.matrix, b, route, mission, pos);
                if c.feasible {
                    children.push((c.delta_flight_hours, base.id, b, pos));
                }
            }
        }
        children.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.3.cmp(&y.3)));

        let rest = self.remaining_bound[depth + 1];
        for (delta, _, b, pos) in children {
            let bound = cost + delta + rest;
            if bound > self.incumbent_cost + PRUNE_SLACK_H {
                break;
            }
            self.nodes += 1;
            if self.out_of_budget() {
                self.aborted = true;
            }
            if self.aborted {
                // siblings are sorted, so this child carries the smallest open bound here
                self.open_bound = self.open_bound.min(bound);
                return;
            }
            self.schedule.routes[b].insert(pos, mission);
            self.dfs(depth + 1, cost + delta);
            self.schedule.routes[b].remove(pos);
            if self.aborted {
                self.open_bound = self.open_bound.min(bound);
                return;
            }
        }
    }
}

/// Per-mission lower bound on the flight hours its insertion can ever add.
///
/// Any insertion of `m` lands between a predecessor `a` and successor `s`
/// that were adjacent in some feasible route, adding
/// `d(a,m) + d(m,s) - d(a,s)`. Minimising over every time-feasible
/// `(a, s)` pair and every compatible base gives a bound that holds no
/// matter how the remaining missions are placed. `None` means no feasible
/// position exists at all.
fn insertion_lower_bound(instance: &Instance, matrix: &TravelTimeMatrix, m: usize) -> Option<f64> {
    let n = instance.missions.len();
    let eps = EPSILON_HOURS;
    let w = |x: usize| instance.missions[x].deadline_h;
    let day = instance.day_length_h;
    let mission = &instance.missions[m];
    let mut best: Option<f64> = None;

    for (b, base) in instance.bases.iter().enumerate() {
        let class = base.vehicle;
        if !class.can_serve(mission.heli_only) {
            continue;
        }
        let home = matrix.base_node(b);
        let d = |i: usize, j: usize| matrix.hours(i, j, class);
        // (node, departure clock) of feasible predecessors and successors of m
        let mut preds = Vec::new();
        if d(home, m) <= w(m) + eps {
            preds.push(home);
        }
        let mut succs = Vec::new();
        if w(m) + d(m, home) <= day + eps {
            succs.push(home);
        }
        for c in 0..n {
            if c == m || !class.can_serve(instance.missions[c].heli_only) {
                continue;
            }
            if w(c) + d(c, m) <= w(m) + eps {
                preds.push(c);
            }
            if w(m) + d(m, c) <= w(c) + eps {
                succs.push(c);
            }
        }
        for &a in &preds {
            for &s in &succs {
                let arc_ok = match (a == home, s == home) {
                    (true, true) => true,
                    (true, false) => d(home, s) <= w(s) + eps,
                    (false, true) => w(a) + d(a, home) <= day + eps,
                    (false, false) => a != s && w(a) + d(a, s) <= w(s) + eps,
                };
                if !arc_ok {
                    continue;
                }
                let removed = if a == home && s == home { 0.0 } else { d(a, s) };
                let delta = d(a, m) + d(m, s) - removed;
                if best.is_none_or(|x| delta < x) {
                    best = Some(delta);
                }
            }
        }
    }
    best
}

/// Finds a minimum flight-hour schedule by depth-first branch and bound.
///
/// Missions are branched in deadline order over every feasible `(base,
/// position)` insertion, cheapest first. With unlimited budgets the search
/// is exhaustive.
pub fn solve_exact(instance: &Instance, matrix: &TravelTimeMatrix, limits: &ExactLimits) -> Result<ExactResult> {
    let n = instance.missions.len();
    if n > limits.max_missions {
        return Err(Error::InvalidParameter(format!(
            "{n} missions exceeds the exact solver cap of {}",
            limits.max_missions
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let (ma, mb) = (&instance.missions[a], &instance.missions[b]);
        ma.deadline_h.total_cmp(&mb.deadline_h).then(ma.id.cmp(&mb.id))
    });

    let mut per_mission = Vec::with_capacity(n);
    for &m in &order {
        match insertion_lower_bound(instance, matrix, m) {
            Some(lb) => per_mission.push(lb.max(0.0)),
            None => {
                return Ok(ExactResult {
                    status: ExactStatus::Infeasible,
                    schedule: None,
                    objective_hours: f64::INFINITY,
                    nodes_explored: 0,
                    best_bound: f64::INFINITY,
                    incumbent_trace: Vec::new(),
                })
            }
        }
    }
    let mut remaining_bound = vec![0.0; n + 1];
    for d in (0..n).rev() {
        remaining_bound[d] = remaining_bound[d + 1] + per_mission[d];
    }

    let start = Instant::now();
    let mut solver = Solver {
        instance,
        matrix,
        order,
        remaining_bound,
        schedule: Schedule::empty(instance.bases.len()),
        incumbent: None,
        incumbent_cost: f64::INFINITY,
        trace: Vec::new(),
        nodes: 0,
        node_budget: limits.node_budget.unwrap_or(u64::MAX),
        deadline: limits.time_budget.map(|t| start + t),
        aborted: false,
        open_bound: f64::INFINITY,
    };
    solver.dfs(0, 0.0);

    let status = match (solver.aborted, solver.incumbent.is_some()) {
        (true, _) => ExactStatus::NodeLimit,
        (false, true) => ExactStatus::Optimal,
        (false, false) => ExactStatus::Infeasible,
    };
    let best_bound = match status {
        ExactStatus::NodeLimit => solver.open_bound.min(solver.incumbent_cost),
        _ => solver.incumbent_cost,
    };
    log::debug!(
        "exact search: {status:?} after {} nodes in {:.3}s",
        solver.nodes,
        start.elapsed().as_secs_f64()
    );
    Ok(ExactResult {
        status,
        objective_hours: solver.incumbent_cost,
        schedule: solver.incumbent,
        nodes_explored: solver.nodes,
        best_bound,
        incumbent_trace: solver.trace,
    })
}

/// Relative gap of `schedule` against a proven optimum.
pub fn gap_to_optimum(
    instance: &Instance,
    matrix: &TravelTimeMatrix,
    schedule: &Schedule,
    oracle: &ExactResult,
) -> Result<f64> {
    if oracle.status != ExactStatus::Optimal {
        return Err(Error::OracleUnavailable(format!(
            "exact search ended with status {:?}",
            oracle.status
        )));
    }
    let value = objective(instance, matrix, schedule);
    let optimum = oracle.objective_hours;
    if optimum <= 0.0 {
        return Ok(if value <= EPSILON_HOURS { 0.0 } else { f64::INFINITY });
    }
    Ok((value - optimum) / optimum)
}

/// Solves the instance exactly and returns the gap of `schedule` to the optimum.
pub fn verify_against_oracle(
    instance: &Instance,
    matrix: &TravelTimeMatrix,
    schedule: &Schedule,
    limits: &ExactLimits,
) -> Result<f64> {
    let oracle = solve_exact(instance, matrix, limits)?;
    gap_to_optimum(instance, matrix, schedule, &oracle)
}
