//! Objective and hard constraints of the scheduling model.
//!
//! A vehicle leaves its base at time 0. On reaching a mission it waits until
//! that mission's deadline before flying on, so every departure from mission
//! `m` happens exactly at `deadline(m)`. Flight hours exclude waiting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::TravelTimeMatrix;
use crate::model::{validate_schedule_shape, Instance, Schedule, VehicleClass};
use crate::EPSILON_HOURS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintTag {
    /// Mission missing, duplicated or unknown.
    Assignment,
    /// Helicopter-only mission flown by a plane.
    VehicleCompat,
    /// Arrival after the mission deadline.
    TimeWindow,
    /// Return to base after the end of the day.
    ReturnLimit,
    /// Daily flight hours exceeded.
    FlightLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub tag: ConstraintTag,
    pub base: Option<u32>,
    pub mission: Option<u32>,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub feasible: bool,
    pub objective_hours: f64,
    pub per_base_flight_hours: Vec<f64>,
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Visit {
    pub mission: usize,
    pub arrival_h: f64,
    pub departure_h: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ArrivalTrace {
    pub visits: Vec<Visit>,
    /// Arrival back at the base; `None` for an empty route.
    pub return_arrival_h: Option<f64>,
}

/// Outcome of a tentative insertion or removal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoveCheck {
    pub feasible: bool,
    pub delta_flight_hours: f64,
}

fn check_known(instance: &Instance, route: &[usize]) -> Result<()> {
    match route.iter().find(|&&m| m >= instance.missions.len()) {
        Some(m) => Err(Error::InvalidArgument(format!("unknown mission index {m}"))),
        None => Ok(()),
    }
}

fn check_base(instance: &Instance, base: usize) -> Result<()> {
    if base >= instance.bases.len() {
        return Err(Error::InvalidArgument(format!("unknown base index {base}")));
    }
    Ok(())
}

/// Walks a route, reporting violations to `sink`. Stops early when the sink
/// returns `false`. Returns the route's flight hours.
fn scan_route(
    instance: &Instance,
    matrix: &TravelTimeMatrix,
    base: usize,
    route: impl Iterator<Item = usize>,
    mut sink: impl FnMut(Violation) -> bool,
) -> Option<f64> {
    let b = &instance.bases[base];
    let class = b.vehicle;
    let home = matrix.base_node(base);

    let mut flight = 0.0;
    let mut prev = home;
    let mut clock = 0.0;
    let mut any = false;
    for m in route {
        any = true;
        let mission = &instance.missions[m];
        let leg = matrix.hours(prev, m, class);
        flight += leg;
        let arrival = clock + leg;
        if arrival > mission.deadline_h + EPSILON_HOURS
            && !sink(Violation {
                tag: ConstraintTag::TimeWindow,
                base: Some(b.id),
                mission: Some(mission.id),
                magnitude: arrival - mission.deadline_h,
            })
        {
            return None;
        }
        if !class.can_serve(mission.heli_only)
            && !sink(Violation {
                tag: ConstraintTag::VehicleCompat,
                base: Some(b.id),
                mission: Some(mission.id),
                magnitude: 1.0,
            })
        {
            return None;
        }
        clock = mission.deadline_h;
        prev = m;
    }
    if any {
        let leg = matrix.hours(prev, home, class);
        flight += leg;
        let back = clock + leg;
        if back > instance.day_length_h + EPSILON_HOURS
            && !sink(Violation {
                tag: ConstraintTag::ReturnLimit,
                base: Some(b.id),
                mission: None,
                magnitude: back - instance.day_length_h,
            })
        {
            return None;
        }
    }
    if flight > instance.flight_limit_h + EPSILON_HOURS
        && !sink(Violation {
            tag: ConstraintTag::FlightLimit,
            base: Some(b.id),
            mission: None,
            magnitude: flight - instance.flight_limit_h,
        })
    {
        return None;
    }
    Some(flight)
}

/// Total in-flight hours of a route, base to base, at the base's vehicle class.
pub fn route_flight_hours(
    instance: &Instance,
    matrix: &TravelTimeMatrix,
    base: usize,
    route: &[usize],
) -> Result<f64> {
    check_base(instance, base)?;
    check_known(instance, route)?;
    let class = instance.bases[base].vehicle;
    Ok(path_hours(matrix, base, route, class))
}

/// Sums legs in route order: base, m1, ..., mlast, base.
fn path_hours(matrix: &TravelTimeMatrix, base: usize, route: &[usize], class: VehicleClass) -> f64 {
    let home = matrix.base_node(base);
    let mut prev = home;
    let mut hours = 0.0;
    for &m in route {
        hours += matrix.hours(prev, m, class);
        prev = m;
    }
    if !route.is_empty() {
        hours += matrix.hours(prev, home, class);
    }
    hours
}

/// Arrival and departure times along a route.
pub fn route_arrival_trace(
    instance: &Instance,
    matrix: &TravelTimeMatrix,
    base: usize,
    route: &[usize],
) -> Result<ArrivalTrace> {
    check_base(instance, base)?;
    check_known(instance, route)?;
    let class = instance.bases[base].vehicle;
    let home = matrix.base_node(base);

    let mut trace = ArrivalTrace::default();
    let mut prev = home;
    let mut clock = 0.0;
    for &m in route {
        let arrival_h = clock + matrix.hours(prev, m, class);
        let departure_h = instance.missions[m].deadline_h;
        trace.visits.push(Visit {
            mission: m,
            arrival_h,
            departure_h,
        });
        clock = departure_h;
        prev = m;
    }
    if !route.is_empty() {
        trace.return_arrival_h = Some(clock + matrix.hours(prev, home, class));
    }
    Ok(trace)
}

/// All time-window, return, flight-limit and vehicle violations of one route.
pub fn check_route(
    instance: &Instance,
    matrix: &TravelTimeMatrix,
    base: usize,
    route: &[usize],
) -> Result<Vec<Violation>> {
    check_base(instance, base)?;
    check_known(instance, route)?;
    let mut out = Vec::new();
    scan_route(instance, matrix, base, route.iter().copied(), |v| {
        out.push(v);
        true
    });
    Ok(out)
}

/// Evaluates a whole schedule: assignment, per-route constraints and objective.
pub fn evaluate(instance: &Instance, matrix: &TravelTimeMatrix, schedule: &Schedule) -> EvalReport {
    let n = instance.missions.len();
    let k = instance.bases.len();
    let mut violations = Vec::new();

    if !validate_schedule_shape(instance, schedule) {
        if schedule.routes.len() != k {
            violations.push(Violation {
                tag: ConstraintTag::Assignment,
                base: None,
                mission: None,
                magnitude: (schedule.routes.len() as f64 - k as f64).abs(),
            });
        }
        let mut count = vec![0usize; n];
        for (b, route) in schedule.routes.iter().enumerate() {
            for &m in route {
                if m < n {
                    count[m] += 1;
                } else {
                    violations.push(Violation {
                        tag: ConstraintTag::Assignment,
                        base: instance.bases.get(b).map(|x| x.id),
                        mission: None,
                        magnitude: 1.0,
                    });
                }
            }
        }
        for (m, &c) in count.iter().enumerate() {
            if c != 1 {
                violations.push(Violation {
                    tag: ConstraintTag::Assignment,
                    base: None,
                    mission: Some(instance.missions[m].id),
                    magnitude: if c == 0 { 1.0 } else { (c - 1) as f64 },
                });
            }
        }
    }

    let mut per_base = Vec::with_capacity(k);
    let empty = Vec::new();
    for base in 0..k {
        let route = schedule.routes.get(base).unwrap_or(&empty);
        let known = route.iter().copied().filter(|&m| m < n);
        let flight = scan_route(instance, matrix, base, known, |v| {
            violations.push(v);
            true
        })
        .expect("sink never stops");
        per_base.push(flight);
    }

    EvalReport {
        feasible: violations.is_empty(),
        objective_hours: per_base.iter().sum(),
        per_base_flight_hours: per_base,
        violations,
    }
}

/// Objective of a schedule without constraint checks. Unknown missions are skipped.
pub fn objective(instance: &Instance, matrix: &TravelTimeMatrix, schedule: &Schedule) -> f64 {
    let n = instance.missions.len();
    schedule
        .routes
        .iter()
        .enumerate()
        .take(instance.bases.len())
        .map(|(b, route)| {
            let class = instance.bases[b].vehicle;
            if route.iter().all(|&m| m < n) {
                path_hours(matrix, b, route, class)
            } else {
                let known: Vec<usize> = route.iter().copied().filter(|&m| m < n).collect();
                path_hours(matrix, b, &known, class)
            }
        })
        .sum()
}

/// Whether `route` with `mission` inserted before `position` passes
/// [`check_route`], and the resulting change in flight hours.
///
/// Runs in one pass over the route without allocating.
pub fn check_insertion(
    instance: &Instance,
    matrix: &TravelTimeMatrix,
    base: usize,
    route: &[usize],
    mission: usize,
    position: usize,
) -> MoveCheck {
    debug_assert!(position <= route.len());
    let class = instance.bases[base].vehicle;
    let home = matrix.base_node(base);
    let prev = if position == 0 { home } else { route[position - 1] };
    let next = route.get(position).copied().unwrap_or(home);
    let removed = if route.is_empty() { 0.0 } else { matrix.hours(prev, next, class) };
    let delta = matrix.hours(prev, mission, class) + matrix.hours(mission, next, class) - removed;

    if position > route.len() || !class.can_serve(instance.missions[mission].heli_only) {
        return MoveCheck {
            feasible: false,
            delta_flight_hours: delta,
        };
    }

    let virtual_route = route[..position]
        .iter()
        .copied()
        .chain(std::iter::once(mission))
        .chain(route[position..].iter().copied());
    let feasible = scan_route(instance, matrix, base, virtual_route, |_| false).is_some();
    MoveCheck {
        feasible,
        delta_flight_hours: delta,
    }
}

/// Whether `route` minus the mission at `position` passes [`check_route`],
/// and the resulting (non-positive under the triangle inequality) change in
/// flight hours.
pub fn check_removal(
    instance: &Instance,
    matrix: &TravelTimeMatrix,
    base: usize,
    route: &[usize],
    position: usize,
) -> MoveCheck {
    debug_assert!(position < route.len());
    let class = instance.bases[base].vehicle;
    let home = matrix.base_node(base);
    let prev = if position == 0 { home } else { route[position - 1] };
    let next = route.get(position + 1).copied().unwrap_or(home);
    let m = route[position];
    let added = if route.len() == 1 { 0.0 } else { matrix.hours(prev, next, class) };
    let delta = added - matrix.hours(prev, m, class) - matrix.hours(m, next, class);

    let virtual_route = route[..position]
        .iter()
        .copied()
        .chain(route[position + 1..].iter().copied());
    let feasible = scan_route(instance, matrix, base, virtual_route, |_| false).is_some();
    MoveCheck {
        feasible,
        delta_flight_hours: delta,
    }
}
