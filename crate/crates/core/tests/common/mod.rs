//! Reference implementations used as test oracles. None of this calls into
//! the solver, search or feasibility code; only the instance types and the
//! travel-time matrix (checked separately against frozen values) are shared.
#![allow(dead_code)]

use std::collections::BTreeMap;

use airfleet::geo::{GeoPoint, TravelTimeMatrix};
use airfleet::model::{Base, Instance, Mission, Schedule, VehicleClass};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const EPS: f64 = 1e-9;

/// Random instance over a southern-Ontario sized box. Anything goes: the
/// fleet may be all planes, deadlines may be impossible.
pub fn random_instance(seed: u64, missions: usize, bases: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let point = |rng: &mut ChaCha8Rng| GeoPoint {
        lat: rng.gen_range(43.0..47.0),
        lon: rng.gen_range(-81.0..-75.0),
    };
    let bases: Vec<Base> = (0..bases)
        .map(|b| {
            let class = if rng.gen_bool(0.6) { VehicleClass::Helicopter } else { VehicleClass::Plane };
            Base::new(b as u32 + 1, class, point(&mut rng))
        })
        .collect();
    let missions: Vec<Mission> = (0..missions)
        .map(|m| Mission {
            id: m as u32 + 1,
            pickup: point(&mut rng),
            delivery: point(&mut rng),
            heli_only: rng.gen_bool(0.3),
            deadline_h: rng.gen_range(1.0..24.0),
        })
        .collect();
    Instance::new(bases, missions).expect("random instance is valid")
}

fn leg(matrix: &TravelTimeMatrix, instance: &Instance, from: usize, to: usize, base: usize) -> f64 {
    matrix.hours(from, to, instance.bases[base].vehicle)
}

/// Flight hours of a route if it is feasible, by direct simulation.
pub fn simulate_route(instance: &Instance, matrix: &TravelTimeMatrix, base: usize, route: &[usize]) -> Option<f64> {
    let home = instance.missions.len() + base;
    let plane = instance.bases[base].vehicle == VehicleClass::Plane;
    let mut at = home;
    let mut clock = 0.0;
    let mut flown = 0.0;
    for &m in route {
        if plane && instance.missions[m].heli_only {
            return None;
        }
        let d = leg(matrix, instance, at, m, base);
        if clock + d > instance.missions[m].deadline_h + EPS {
            return None;
        }
        flown += d;
        clock = instance.missions[m].deadline_h;
        at = m;
    }
    if route.is_empty() {
        return Some(0.0);
    }
    let d = leg(matrix, instance, at, home, base);
    if clock + d > instance.day_length_h + EPS {
        return None;
    }
    flown += d;
    if flown > instance.flight_limit_h + EPS {
        return None;
    }
    Some(flown)
}

/// Sum of per-route flight hours, routes in base order and legs in route order.
pub fn total_hours(instance: &Instance, matrix: &TravelTimeMatrix, schedule: &Schedule) -> f64 {
    let mut total = 0.0;
    for (b, route) in schedule.routes.iter().enumerate() {
        let home = instance.missions.len() + b;
        let mut at = home;
        let mut flown = 0.0;
        for &m in route {
            flown += leg(matrix, instance, at, m, b);
            at = m;
        }
        if !route.is_empty() {
            flown += leg(matrix, instance, at, home, b);
        }
        total += flown;
    }
    total
}

/// Tries every ordered partition of the missions over the bases. Returns
/// the best objective, or `None` when no feasible schedule exists.
pub fn enumerate_optimum(instance: &Instance, matrix: &TravelTimeMatrix) -> Option<(f64, Schedule)> {
    fn go(
        instance: &Instance,
        matrix: &TravelTimeMatrix,
        next: usize,
        schedule: &mut Schedule,
        best: &mut Option<(f64, Schedule)>,
    ) {
        if next == instance.missions.len() {
            let feasible = schedule
                .routes
                .iter()
                .enumerate()
                .all(|(b, r)| simulate_route(instance, matrix, b, r).is_some());
            if feasible {
                let value = total_hours(instance, matrix, schedule);
                if best.as_ref().is_none_or(|(v, _)| value < *v) {
                    *best = Some((value, schedule.clone()));
                }
            }
            return;
        }
        for b in 0..schedule.routes.len() {
            for pos in 0..=schedule.routes[b].len() {
                schedule.routes[b].insert(pos, next);
                go(instance, matrix, next + 1, schedule, best);
                schedule.routes[b].remove(pos);
            }
        }
    }
    let mut best = None;
    let mut schedule = Schedule::empty(instance.bases.len());
    go(instance, matrix, 0, &mut schedule, &mut best);
    best
}

/// Binary arc variables and ordering variables of a schedule. Nodes are
/// 1-based: missions `1..=n`, base `k` (1-based) is node `n + k`.
pub struct ArcForm {
    pub n: usize,
    pub k: usize,
    /// `x[(i, j, k)]` counts, so a duplicated arc shows up as 2.
    pub x: BTreeMap<(usize, usize, usize), u32>,
    pub u: Vec<f64>,
}

pub fn to_arc_form(instance: &Instance, schedule: &Schedule) -> ArcForm {
    let n = instance.missions.len();
    let k = instance.bases.len();
    let mut x = BTreeMap::new();
    let mut u = vec![1.0; n + 1];
    for (b, route) in schedule.routes.iter().enumerate() {
        let kk = b + 1;
        let home = n + kk;
        let mut prev = home;
        for (pos, &m) in route.iter().enumerate() {
            *x.entry((prev, m + 1, kk)).or_insert(0) += 1;
            u[m + 1] = (pos + 1) as f64;
            prev = m + 1;
        }
        if !route.is_empty() {
            *x.entry((prev, home, kk)).or_insert(0) += 1;
        }
    }
    ArcForm { n, k, x, u }
}

/// Tests the integer program's constraints on `form` one by one. Returns
/// the names of the violated constraint families.
pub fn ilp_violations(instance: &Instance, matrix: &TravelTimeMatrix, form: &ArcForm) -> Vec<&'static str> {
    let (n, k) = (form.n, form.k);
    let nodes = n + k;
    let x = |i: usize, j: usize, kk: usize| f64::from(*form.x.get(&(i, j, kk)).unwrap_or(&0));
    let d = |i: usize, j: usize, kk: usize| matrix.hours(i - 1, j - 1, instance.bases[kk - 1].vehicle);
    let is_base = |v: usize| v > n;
    let w = |v: usize| instance.missions[v - 1].deadline_h;
    let mut bad = Vec::new();
    let flag = |name: &'static str, bad: &mut Vec<&'static str>| {
        if !bad.contains(&name) {
            bad.push(name);
        }
    };

    for j in 1..=n {
        let s: f64 = (1..=nodes).flat_map(|i| (1..=k).map(move |kk| (i, kk))).map(|(i, kk)| x(i, j, kk)).sum();
        if s != 1.0 {
            flag("enter-once", &mut bad);
        }
    }
    for i in 1..=n {
        let s: f64 = (1..=nodes).flat_map(|j| (1..=k).map(move |kk| (j, kk))).map(|(j, kk)| x(i, j, kk)).sum();
        if s != 1.0 {
            flag("leave-once", &mut bad);
        }
    }
    for kk in 1..=k {
        for v in 1..=nodes {
            let inflow: f64 = (1..=nodes).map(|i| x(i, v, kk)).sum();
            let outflow: f64 = (1..=nodes).map(|j| x(v, j, kk)).sum();
            if inflow != outflow {
                flag("continuity", &mut bad);
            }
            if inflow > 1.0 {
                flag("in-degree", &mut bad);
            }
            if outflow > 1.0 {
                flag("out-degree", &mut bad);
            }
        }
        let flown: f64 = (1..=nodes)
            .flat_map(|i| (1..=nodes).map(move |j| (i, j)))
            .map(|(i, j)| x(i, j, kk) * d(i, j, kk))
            .sum();
        if flown > instance.flight_limit_h + EPS {
            flag("flight-limit", &mut bad);
        }
    }
    for (&(i, j, kk), &count) in &form.x {
        if count > 1 {
            flag("binary", &mut bad);
        }
        let depart = if is_base(i) { 0.0 } else { w(i) };
        let due = if is_base(j) { instance.day_length_h } else { w(j) };
        if depart + d(i, j, kk) > due + EPS {
            flag("time-window", &mut bad);
        }
        let plane = instance.bases[kk - 1].vehicle == VehicleClass::Plane;
        let heli_only = |v: usize| !is_base(v) && instance.missions[v - 1].heli_only;
        if plane && (heli_only(i) || heli_only(j)) {
            flag("vehicle", &mut bad);
        }
        if (is_base(i) && i != n + kk) || (is_base(j) && j != n + kk) || i == j {
            flag("foreign-base", &mut bad);
        }
    }
    for kk in 1..=k {
        for i in 1..=n {
            for j in 1..=n {
                if i != j && form.u[i] - form.u[j] + n as f64 * x(i, j, kk) > n as f64 - 1.0 {
                    flag("ordering", &mut bad);
                }
            }
        }
    }
    bad
}

/// A parsed MPS model, read independently of the writer.
#[derive(Debug, Default)]
pub struct MpsModel {
    pub name: String,
    /// Row name -> sense (`N`, `E`, `L`, `G`), in file order.
    pub rows: Vec<(String, char)>,
    pub objective_row: String,
    /// Column name -> (row name -> coefficient).
    pub columns: BTreeMap<String, BTreeMap<String, f64>>,
    pub column_order: Vec<String>,
    pub integer: BTreeMap<String, bool>,
    pub rhs: BTreeMap<String, f64>,
    /// Column name -> (lower, upper).
    pub bounds: BTreeMap<String, (f64, f64)>,
}

pub fn parse_mps(text: &str) -> MpsModel {
    let mut model = MpsModel::default();
    let mut section = "";
    let mut in_int = false;
    for line in text.lines() {
        if line.trim().is_empty() || line.starts_with('*') {
            continue;
        }
        if !line.starts_with(' ') {
            let mut parts = line.split_whitespace();
            section = match parts.next().unwrap() {
                "NAME" => {
                    model.name = parts.next().unwrap_or("").to_string();
                    "NAME"
                }
                "ROWS" => "ROWS",
                "COLUMNS" => "COLUMNS",
                "RHS" => "RHS",
                "BOUNDS" => "BOUNDS",
                "ENDATA" => "END",
                other => panic!("unknown section {other}"),
            };
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        match section {
            "ROWS" => {
                let sense = f[0].chars().next().unwrap();
                if sense == 'N' {
                    model.objective_row = f[1].to_string();
                } else {
                    model.rows.push((f[1].to_string(), sense));
                }
            }
            "COLUMNS" => {
                if f.get(1) == Some(&"'MARKER'") {
                    in_int = f[2] == "'INTORG'";
                    continue;
                }
                let col = f[0].to_string();
                if !model.columns.contains_key(&col) {
                    model.column_order.push(col.clone());
                    model.integer.insert(col.clone(), in_int);
                }
                let entry = model.columns.entry(col).or_default();
                for pair in f[1..].chunks(2) {
                    entry.insert(pair[0].to_string(), pair[1].parse().unwrap());
                }
            }
            "RHS" => {
                for pair in f[1..].chunks(2) {
                    model.rhs.insert(pair[0].to_string(), pair[1].parse().unwrap());
                }
            }
            "BOUNDS" => {
                let col = f[2].to_string();
                let value = f.get(3).map(|v| v.parse::<f64>().unwrap());
                let b = model.bounds.entry(col).or_insert((0.0, f64::INFINITY));
                match f[0] {
                    "FX" => *b = (value.unwrap(), value.unwrap()),
                    "BV" => *b = (0.0, 1.0),
                    "LI" | "LO" => b.0 = value.unwrap(),
                    "UI" | "UP" => b.1 = value.unwrap(),
                    other => panic!("unsupported bound {other}"),
                }
            }
            _ => panic!("data line outside a section: {line}"),
        }
    }
    model
}

impl MpsModel {
    /// Objective value and whether every row and bound holds for `values`
    /// (missing columns read as 0).
    pub fn evaluate(&self, values: &BTreeMap<String, f64>, tol: f64) -> (f64, bool) {
        let mut lhs: BTreeMap<&str, f64> = BTreeMap::new();
        let mut objective = 0.0;
        let mut ok = true;
        for (col, entries) in &self.columns {
            let v = values.get(col).copied().unwrap_or(0.0);
            let (lo, hi) = self.bounds.get(col).copied().unwrap_or((0.0, f64::INFINITY));
            if v < lo - tol || v > hi + tol {
                ok = false;
            }
            for (row, coef) in entries {
                if *row == self.objective_row {
                    objective += coef * v;
                } else {
                    *lhs.entry(row.as_str()).or_insert(0.0) += coef * v;
                }
            }
        }
        for (row, sense) in &self.rows {
            let a = lhs.get(row.as_str()).copied().unwrap_or(0.0);
            let b = self.rhs.get(row).copied().unwrap_or(0.0);
            ok &= match sense {
                'E' => (a - b).abs() <= tol,
                'L' => a <= b + tol,
                'G' => a >= b - tol,
                _ => true,
            };
        }
        (objective, ok)
    }
}

/// Variable values of a schedule under the export's naming scheme.
pub fn schedule_values(instance: &Instance, schedule: &Schedule) -> BTreeMap<String, f64> {
    let form = to_arc_form(instance, schedule);
    let mut values = BTreeMap::new();
    for (&(i, j, k), &c) in &form.x {
        values.insert(format!("x_{i}_{j}_{k}"), f64::from(c));
    }
    for i in 1..=form.n {
        values.insert(format!("u_{i}"), form.u[i]);
    }
    values
}

/// A schedule that is feasible or broken in some way, about half each.
/// Starts from `seed_schedule` when given (typically a feasible one), else
/// from a random assignment.
pub fn mangled_schedule(instance: &Instance, seed_schedule: Option<&Schedule>, rng: &mut ChaCha8Rng) -> Schedule {
    let n = instance.missions.len();
    let k = instance.bases.len();
    let mut s = match seed_schedule {
        Some(s) => s.clone(),
        None => {
            let mut s = Schedule::empty(k);
            for m in 0..n {
                let b = rng.gen_range(0..k);
                let pos = rng.gen_range(0..=s.routes[b].len());
                s.routes[b].insert(pos, m);
            }
            s
        }
    };
    if n == 0 || rng.gen_bool(0.4) {
        return s;
    }
    match rng.gen_range(0..6) {
        0 => {
            // relocate a mission anywhere
            let m = rng.gen_range(0..n);
            for r in &mut s.routes {
                r.retain(|&x| x != m);
            }
            let b = rng.gen_range(0..k);
            let pos = rng.gen_range(0..=s.routes[b].len());
            s.routes[b].insert(pos, m);
        }
        1 => {
            // drop a mission
            let m = rng.gen_range(0..n);
            for r in &mut s.routes {
                r.retain(|&x| x != m);
            }
        }
        2 => {
            // duplicate a mission
            let m = rng.gen_range(0..n);
            let b = rng.gen_range(0..k);
            let pos = rng.gen_range(0..=s.routes[b].len());
            s.routes[b].insert(pos, m);
        }
        3 => {
            // reverse a route
            let b = rng.gen_range(0..k);
            s.routes[b].reverse();
        }
        4 => {
            // swap two routes wholesale
            let (a, b) = (rng.gen_range(0..k), rng.gen_range(0..k));
            s.routes.swap(a, b);
        }
        _ => {
            // everything onto one base
            let b = rng.gen_range(0..k);
            let mut all: Vec<usize> = s.routes.iter().flatten().copied().collect();
            all.sort_by(|&x, &y| instance.missions[x].deadline_h.total_cmp(&instance.missions[y].deadline_h));
            s = Schedule::empty(k);
            s.routes[b] = all;
        }
    }
    s
}
