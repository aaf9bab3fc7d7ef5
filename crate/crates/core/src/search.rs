//! Relocate-neighbourhood local search and its tabu extension.
//!
//! One sweep visits every base `i` and every mission `j` on it. For each
//! `(i, j)` all other compatible bases and insertion positions are scanned
//! and the best strictly improving relocation is committed. Candidate
//! evaluation for a fixed `(i, j)` can fan out over target bases; the
//! reduction uses a total order on `(delta, base id, position)`, so the
//! parallel and sequential modes commit the same move.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feasibility::{check_insertion, check_removal, evaluate, objective};
use crate::geo::TravelTimeMatrix;
use crate::model::{Instance, Schedule};

/// A move must lower flight hours by more than this to be applied.
pub const IMPROVEMENT_THRESHOLD_H: f64 = 1e-9;

pub const DEFAULT_TABU_TENURE: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMode {
    Neighbourhood,
    Tabu,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub mode: SearchMode,
    pub tabu_tenure: usize,
    /// Visit bases and missions in a seeded random order, reshuffled every sweep.
    pub permute_scan_order: bool,
    pub rng_seed: u64,
    /// `None` runs until a sweep finds no improvement.
    pub max_sweeps: Option<usize>,
    pub parallel_eval: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            mode: SearchMode::Neighbourhood,
            tabu_tenure: DEFAULT_TABU_TENURE,
            permute_scan_order: false,
            rng_seed: 0,
            max_sweeps: None,
            parallel_eval: false,
        }
    }
}

impl SearchConfig {
    pub fn tabu() -> Self {
        SearchConfig {
            mode: SearchMode::Tabu,
            ..SearchConfig::default()
        }
    }

    fn check(&self) -> Result<()> {
        if self.mode == SearchMode::Tabu && self.tabu_tenure == 0 {
            return Err(Error::InvalidParameter("tabu tenure must be at least 1".into()));
        }
        Ok(())
    }
}

/// Relocation of one mission to another base.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Move {
    pub mission: usize,
    pub from_base: usize,
    pub from_position: usize,
    pub to_base: usize,
    pub to_position: usize,
    pub delta_hours: f64,
}

impl Move {
    /// The move that undoes this one once it has been applied.
    pub fn inverse(&self) -> Move {
        Move {
            mission: self.mission,
            from_base: self.to_base,
            from_position: self.to_position,
            to_base: self.from_base,
            to_position: self.from_position,
            delta_hours: -self.delta_hours,
        }
    }
}

/// Recently applied relocations, keyed by `(mission, target base)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TabuList {
    entries: BTreeMap<(usize, usize), usize>,
}

impl TabuList {
    pub fn new() -> Self {
        TabuList::default()
    }

    pub fn is_active(&self, mission: usize, base: usize) -> bool {
        self.entries.contains_key(&(mission, base))
    }

    pub fn remaining(&self, mission: usize, base: usize) -> Option<usize> {
        self.entries.get(&(mission, base)).copied()
    }

    /// Forbids `(mission, base)` for the next `tenure` iterations.
    pub fn add(&mut self, mission: usize, base: usize, tenure: usize) {
        if tenure > 0 {
            self.entries.insert((mission, base), tenure);
        }
    }

    /// Ends one iteration: every tenure drops by one and expired keys leave.
    pub fn tick(&mut self) {
        self.entries.retain(|_, t| {
            *t -= 1;
            *t > 0
        });
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub schedule: Schedule,
    pub objective_hours: f64,
    pub sweeps: usize,
    pub moves_applied: usize,
    /// Objective before the first sweep and after every sweep.
    pub improvement_trace: Vec<(usize, f64)>,
    /// Every applied move in order.
    pub moves: Vec<Move>,
}

struct ScanOutcome {
    best: Option<Move>,
    /// An improving candidate was skipped because its key is tabu.
    tabu_blocked: bool,
}

struct Candidate {
    delta: f64,
    base_id: u32,
    base: usize,
    position: usize,
    tabu: bool,
}

fn candidate_order(a: &Candidate, b: &Candidate) -> Ordering {
    a.delta
        .total_cmp(&b.delta)
        .then(a.base_id.cmp(&b.base_id))
        .then(a.position.cmp(&b.position))
}

/// Best strictly improving insertion of `mission` into base `target`.
#[allow(clippy::too_many_arguments)]
fn best_in_base(
    instance: &Instance,
    matrix: &TravelTimeMatrix,
    schedule: &Schedule,
    mission: usize,
    source: usize,
    target: usize,
    removal_delta: f64,
    tabu: Option<&TabuList>,
) -> Option<Candidate> {
    if target == source {
        return None;
    }
    let base = &instance.bases[target];
    if !base.vehicle.can_serve(instance.missions[mission].heli_only) {
        return None;
    }
    let route = &schedule.routes[target];
    let mut best: Option<Candidate> = None;
    for position in 0..=route.len() {
        let ins = check_insertion(instance, matrix, target, route, mission, position);
        if !ins.feasible {
            continue;
        }
        let delta = removal_delta + ins.delta_flight_hours;
        if delta >= -IMPROVEMENT_THRESHOLD_H {
            continue;
        }
        let c = Candidate {
            delta,
            base_id: base.id,
            base: target,
            position,
            tabu: false,
        };
        if best
            .as_ref()
            .is_none_or(|b| candidate_order(&c, b) == Ordering::Less)
        {
            best = Some(c);
        }
    }
    best.map(|mut c| {
        c.tabu = tabu.is_some_and(|t| t.is_active(mission, target));
        c
    })
}

fn scan(
    instance: &Instance,
    matrix: &TravelTimeMatrix,
    schedule: &Schedule,
    base: usize,
    position: usize,
    tabu: Option<&TabuList>,
    parallel: bool,
) -> ScanOutcome {
    let route = &schedule.routes[base];
    let mission = route[position];
    let removal = check_removal(instance, matrix, base, route, position);
    if !removal.feasible {
        return ScanOutcome {
            best: None,
            tabu_blocked: false,
        };
    }

    let eval = |target: usize| {
        best_in_base(
            instance,
            matrix,
            schedule,
            mission,
            base,
            target,
            removal.delta_flight_hours,
            tabu,
        )
    };
    let candidates: Vec<Candidate> = if parallel {
        (0..instance.bases.len())
            .into_par_iter()
            .filter_map(eval)
            .collect()
    } else {
        (0..instance.bases.len()).filter_map(eval).collect()
    };

    let tabu_blocked = candidates.iter().any(|c| c.tabu);
    let best = candidates
        .into_iter()
        .filter(|c| !c.tabu)
        .min_by(candidate_order)
        .map(|c| Move {
            mission,
            from_base: base,
            from_position: position,
            to_base: c.base,
            to_position: c.position,
            delta_hours: c.delta,
        });
    ScanOutcome { best, tabu_blocked }
}

/// Best strictly improving relocation of the mission at `(base, position)`.
///
/// Ties are broken by lowest target base id, then lowest position. Moves
/// whose `(mission, target base)` key is active in `tabu` are skipped.
pub fn enumerate_moves(
    instance: &Instance,
    matrix: &TravelTimeMatrix,
    schedule: &Schedule,
    base: usize,
    position: usize,
    tabu: Option<&TabuList>,
    parallel: bool,
) -> Option<Move> {
    scan(instance, matrix, schedule, base, position, tabu, parallel).best
}

/// Moves a mission between routes. Only the structure is checked here.
pub fn apply_move(schedule: &Schedule, mv: &Move) -> Result<Schedule> {
    let mut out = schedule.clone();
    apply_in_place(&mut out, mv)?;
    Ok(out)
}

fn apply_in_place(schedule: &mut Schedule, mv: &Move) -> Result<()> {
    let k = schedule.routes.len();
    if mv.from_base >= k || mv.to_base >= k {
        return Err(Error::Conflict(format!("base out of range in {mv:?}")));
    }
    if mv.from_base == mv.to_base {
        return Err(Error::Conflict("source and target base coincide".into()));
    }
    if schedule.routes[mv.from_base].get(mv.from_position) != Some(&mv.mission) {
        return Err(Error::Conflict(format!(
            "mission {} is not at position {} of base {}",
            mv.mission, mv.from_position, mv.from_base
        )));
    }
    if mv.to_position > schedule.routes[mv.to_base].len() {
        return Err(Error::Conflict(format!(
            "target position {} beyond route of base {}",
            mv.to_position, mv.to_base
        )));
    }
    schedule.routes[mv.from_base].remove(mv.from_position);
    schedule.routes[mv.to_base].insert(mv.to_position, mv.mission);
    Ok(())
}

/// SplitMix64 finaliser over `(seed, stream)`, for reproducible per-run seeds.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

struct SweepStats {
    moves: usize,
    tabu_blocked: bool,
}

fn sweep(
    instance: &Instance,
    matrix: &TravelTimeMatrix,
    schedule: &mut Schedule,
    order_rng: Option<&mut ChaCha8Rng>,
    mut tabu: Option<(&mut TabuList, usize)>,
    parallel: bool,
    log: &mut Vec<Move>,
) -> SweepStats {
    let k = schedule.routes.len();
    let mut bases: Vec<usize> = (0..k).collect();
    let mut rng = order_rng;
    if let Some(rng) = rng.as_deref_mut() {
        bases.shuffle(rng);
    }

    let mut moved = vec![false; instance.missions.len()];
    let mut stats = SweepStats {
        moves: 0,
        tabu_blocked: false,
    };
    for i in bases {
        let mut visit = schedule.routes[i].clone();
        if let Some(rng) = rng.as_deref_mut() {
            visit.shuffle(rng);
        }
        for mission in visit {
            if moved[mission] {
                continue;
            }
            let j = schedule.routes[i]
                .iter()
                .position(|&m| m == mission)
                .expect("only this loop moves missions out of base i");
            let list = tabu.as_ref().map(|(t, _)| &**t);
            let outcome = scan(instance, matrix, schedule, i, j, list, parallel);
            stats.tabu_blocked |= outcome.tabu_blocked;
            if let Some((t, _)) = tabu.as_mut() {
                t.tick();
            }
            if let Some(mv) = outcome.best {
                apply_in_place(schedule, &mv).expect("scanned move is consistent");
                moved[mission] = true;
                if let Some((t, tenure)) = tabu.as_mut() {
                    t.add(mv.mission, mv.to_base, *tenure);
                }
                log.push(mv);
                stats.moves += 1;
            }
        }
    }
    stats
}

/// One identity-order improving sweep over a possibly partial schedule.
/// Returns the number of relocations applied.
pub fn relocation_sweep(
    instance: &Instance,
    matrix: &TravelTimeMatrix,
    schedule: &mut Schedule,
    parallel: bool,
) -> usize {
    let mut log = Vec::new();
    sweep(instance, matrix, schedule, None, None, parallel, &mut log).moves
}

fn run(
    instance: &Instance,
    matrix: &TravelTimeMatrix,
    start: &Schedule,
    config: &SearchConfig,
    use_tabu: bool,
) -> Result<SearchResult> {
    config.check()?;
    let report = evaluate(instance, matrix, start);
    if !report.feasible {
        return Err(Error::InvalidArgument(format!(
            "start schedule is infeasible ({} violations)",
            report.violations.len()
        )));
    }

    let mut schedule = start.clone();
    let mut tabu = TabuList::new();
    let mut moves = Vec::new();
    let mut trace = vec![(0, report.objective_hours)];
    let mut sweeps = 0;
    loop {
        if config.max_sweeps.is_some_and(|cap| sweeps >= cap) {
            break;
        }
        let mut rng = config
            .permute_scan_order
            .then(|| ChaCha8Rng::seed_from_u64(derive_seed(config.rng_seed, sweeps as u64)));
        let stats = sweep(
            instance,
            matrix,
            &mut schedule,
            rng.as_mut(),
            use_tabu.then_some((&mut tabu, config.tabu_tenure)),
            config.parallel_eval,
            &mut moves,
        );
        sweeps += 1;
        trace.push((sweeps, objective(instance, matrix, &schedule)));
        if stats.moves == 0 && !stats.tabu_blocked {
            break;
        }
    }

    Ok(SearchResult {
        objective_hours: objective(instance, matrix, &schedule),
        schedule,
        sweeps,
        moves_applied: moves.len(),
        improvement_trace: trace,
        moves,
    })
}

/// Relocate-neighbourhood descent from a feasible start until a sweep
/// applies no move.
pub fn neighbourhood_search(
    instance: &Instance,
    matrix: &TravelTimeMatrix,
    start: &Schedule,
    config: &SearchConfig,
) -> Result<SearchResult> {
    run(instance, matrix, start, config, false)
}

/// Neighbourhood search that forbids repeating a recent `(mission, target
/// base)` relocation for `tabu_tenure` iterations. The list persists across
/// sweeps; the search stops once a sweep neither applies a move nor skips
/// an improving one.
pub fn tabu_search(
    instance: &Instance,
    matrix: &TravelTimeMatrix,
    start: &Schedule,
    config: &SearchConfig,
) -> Result<SearchResult> {
    run(instance, matrix, start, config, true)
}

/// Dispatches on `config.mode`.
pub fn search(
    instance: &Instance,
    matrix: &TravelTimeMatrix,
    start: &Schedule,
    config: &SearchConfig,
) -> Result<SearchResult> {
    match config.mode {
        SearchMode::Neighbourhood => neighbourhood_search(instance, matrix, start, config),
        SearchMode::Tabu => tabu_search(instance, matrix, start, config),
    }
}
