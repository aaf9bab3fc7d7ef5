//! Deadline-greedy construction of a first feasible schedule.
//!
//! Helicopter-only missions are placed first, then the rest. Within each
//! phase the unassigned mission with the earliest deadline is appended to the
//! tail of the base where it adds the fewest flight hours. When no base can
//! take it, one improving relocation sweep reshuffles the partial schedule
//! and the same mission is retried once.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::feasibility::check_insertion;
use crate::geo::TravelTimeMatrix;
use crate::model::{Instance, Schedule};
use crate::search::relocation_sweep;

pub const DEFAULT_MAX_REPAIRS: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructConfig {
    /// Total repair sweeps allowed in one construction.
    pub max_repairs: usize,
    /// Evaluate candidate bases on the rayon pool.
    pub parallel_eval: bool,
}

impl Default for ConstructConfig {
    fn default() -> Self {
        ConstructConfig {
            max_repairs: DEFAULT_MAX_REPAIRS,
            parallel_eval: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    HeliOnly,
    Remaining,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructOutcome {
    pub schedule: Schedule,
    pub repair_invocations: usize,
    /// Mission indices in the order they were placed.
    pub assignment_order: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConstructError {
    #[error("mission {mission_id} fits no base and nothing is assigned yet")]
    NothingAssigned { mission_id: u32 },
    #[error("mission {mission_id} fits no base and no improving relocation exists")]
    NoRelocation { mission_id: u32 },
    #[error("mission {mission_id} still fits no base after relocation")]
    RetryFailed { mission_id: u32 },
    #[error("repair budget of {budget} sweeps exhausted at mission {mission_id}")]
    RepairBudget { mission_id: u32, budget: usize },
}

/// Earliest-deadline unassigned mission for the phase; ties go to the lowest id.
pub fn select_next_mission(instance: &Instance, unassigned: &[usize], phase: Phase) -> Option<usize> {
    unassigned
        .iter()
        .copied()
        .filter(|&m| phase == Phase::Remaining || instance.missions[m].heli_only)
        .min_by(|&a, &b| {
            let (ma, mb) = (&instance.missions[a], &instance.missions[b]);
            ma.deadline_h.total_cmp(&mb.deadline_h).then(ma.id.cmp(&mb.id))
        })
}

/// Cheapest feasible tail insertion: `(base, delta)`, ties to the lowest base id.
fn best_tail_insertion(
    instance: &Instance,
    matrix: &TravelTimeMatrix,
    schedule: &Schedule,
    mission: usize,
    parallel: bool,
) -> Option<(usize, f64)> {
    let eval = |b: usize| {
        let route = &schedule.routes[b];
        let c = check_insertion(instance, matrix, b, route, mission, route.len());
        c.feasible.then_some((b, c.delta_flight_hours))
    };
    let order = |x: &(usize, f64), y: &(usize, f64)| {
        x.1.total_cmp(&y.1)
            .then(instance.bases[x.0].id.cmp(&instance.bases[y.0].id))
    };
    let k = instance.bases.len();
    if parallel {
        (0..k).into_par_iter().filter_map(eval).min_by(order)
    } else {
        (0..k).filter_map(eval).min_by(order)
    }
}

/// Builds a feasible schedule or reports why it could not.
pub fn initialize(
    instance: &Instance,
    matrix: &TravelTimeMatrix,
    config: &ConstructConfig,
) -> Result<ConstructOutcome, ConstructError> {
    let mut schedule = Schedule::empty(instance.bases.len());
    let mut unassigned: Vec<usize> = (0..instance.missions.len()).collect();
    let mut order = Vec::with_capacity(unassigned.len());
    let mut repairs = 0;

    for phase in [Phase::HeliOnly, Phase::Remaining] {
        while let Some(mission) = select_next_mission(instance, &unassigned, phase) {
            let mission_id = instance.missions[mission].id;
            let mut slot = best_tail_insertion(instance, matrix, &schedule, mission, config.parallel_eval);
            if slot.is_none() {
                if order.is_empty() {
                    return Err(ConstructError::NothingAssigned { mission_id });
                }
                if repairs >= config.max_repairs {
                    return Err(ConstructError::RepairBudget {
                        mission_id,
                        budget: config.max_repairs,
                    });
                }
                repairs += 1;
                log::debug!("repair sweep {repairs} for mission {mission_id}");
                if relocation_sweep(instance, matrix, &mut schedule, config.parallel_eval) == 0 {
                    return Err(ConstructError::NoRelocation { mission_id });
                }
                slot = best_tail_insertion(instance, matrix, &schedule, mission, config.parallel_eval);
            }
            let Some((base, _)) = slot else {
                return Err(ConstructError::RetryFailed { mission_id });
            };
            schedule.routes[base].push(mission);
            order.push(mission);
            unassigned.retain(|&m| m != mission);
        }
    }

    Ok(ConstructOutcome {
        schedule,
        repair_invocations: repairs,
        assignment_order: order,
    })
}
