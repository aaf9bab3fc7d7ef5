//! Problem instances, schedules, file formats and random mission generation.

use std::collections::HashSet;
use std::fs;
use std::io::Read;
use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::GeoPoint;

pub const HELICOPTER_SPEED_KMH: f64 = 300.0;
pub const PLANE_SPEED_KMH: f64 = 500.0;
pub const DEFAULT_FLIGHT_LIMIT_H: f64 = 10.0;
pub const DEFAULT_DAY_LENGTH_H: f64 = 24.0;

/// How many times deadlines are re-drawn before generation gives up.
pub const MAX_DEADLINE_REDRAWS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VehicleClass {
    Helicopter,
    Plane,
}

impl VehicleClass {
    pub const ALL: [VehicleClass; 2] = [VehicleClass::Helicopter, VehicleClass::Plane];
    pub const LAYERS: usize = 2;

    /// Matrix layer, also the `b_k` flag of the ILP (0 helicopter, 1 plane).
    #[inline]
    pub fn layer(self) -> usize {
        match self {
            VehicleClass::Helicopter => 0,
            VehicleClass::Plane => 1,
        }
    }

    pub fn default_speed_kmh(self) -> f64 {
        match self {
            VehicleClass::Helicopter => HELICOPTER_SPEED_KMH,
            VehicleClass::Plane => PLANE_SPEED_KMH,
        }
    }

    /// Whether this vehicle may fly a mission with the given helicopter-only flag.
    #[inline]
    pub fn can_serve(self, heli_only: bool) -> bool {
        !heli_only || self == VehicleClass::Helicopter
    }
}

impl std::fmt::Display for VehicleClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            VehicleClass::Helicopter => f.write_str("helicopter"),
            VehicleClass::Plane => f.write_str("plane"),
        }
    }
}

impl std::str::FromStr for VehicleClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "helicopter" | "heli" | "rotary" | "0" => Ok(VehicleClass::Helicopter),
            "plane" | "fixed" | "fixed-wing" | "1" => Ok(VehicleClass::Plane),
            other => Err(Error::Validation(format!("unknown vehicle class '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Base {
    pub id: u32,
    pub vehicle: VehicleClass,
    pub speed_kmh: f64,
    pub location: GeoPoint,
}

impl Base {
    pub fn new(id: u32, vehicle: VehicleClass, location: GeoPoint) -> Self {
        Base {
            id,
            vehicle,
            speed_kmh: vehicle.default_speed_kmh(),
            location,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mission {
    pub id: u32,
    pub pickup: GeoPoint,
    pub delivery: GeoPoint,
    pub heli_only: bool,
    /// Latest arrival time in hours after the start of the day.
    pub deadline_h: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub bases: Vec<Base>,
    pub missions: Vec<Mission>,
    pub flight_limit_h: f64,
    pub day_length_h: f64,
}

impl Instance {
    /// Builds and validates an instance with the default limits.
    pub fn new(bases: Vec<Base>, missions: Vec<Mission>) -> Result<Self> {
        let instance = Instance {
            bases,
            missions,
            flight_limit_h: DEFAULT_FLIGHT_LIMIT_H,
            day_length_h: DEFAULT_DAY_LENGTH_H,
        };
        instance.validate()?;
        Ok(instance)
    }

    /// Checks every hard invariant and returns the soft warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        if self.bases.is_empty() {
            return Err(Error::Validation("instance has no bases".into()));
        }
        if !(self.flight_limit_h.is_finite() && self.flight_limit_h > 0.0) {
            return Err(Error::Validation(format!(
                "flight limit must be positive, got {}",
                self.flight_limit_h
            )));
        }
        // written negated so a NaN also fails
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(self.day_length_h >= self.flight_limit_h) {
            return Err(Error::Validation(format!(
                "day length {} shorter than flight limit {}",
                self.day_length_h, self.flight_limit_h
            )));
        }

        let mut seen = HashSet::new();
        let mut layer_speed: [Option<f64>; VehicleClass::LAYERS] = [None; VehicleClass::LAYERS];
        for base in &self.bases {
            if !seen.insert(base.id) {
                return Err(Error::Validation(format!("duplicate base id {}", base.id)));
            }
            base.location
                .validate()
                .map_err(|e| Error::Validation(format!("base {}: {e}", base.id)))?;
            if !(base.speed_kmh.is_finite() && base.speed_kmh > 0.0) {
                return Err(Error::Validation(format!(
                    "base {}: speed must be positive, got {}",
                    base.id, base.speed_kmh
                )));
            }
            // one matrix layer per class, so a class has a single speed
            match layer_speed[base.vehicle.layer()] {
                Some(s) if s != base.speed_kmh => {
                    return Err(Error::Validation(format!(
                        "base {}: {} speed {} differs from {} used by other {} bases",
                        base.id, base.vehicle, base.speed_kmh, s, base.vehicle
                    )))
                }
                _ => layer_speed[base.vehicle.layer()] = Some(base.speed_kmh),
            }
        }

        let mut seen = HashSet::new();
        for m in &self.missions {
            if !seen.insert(m.id) {
                return Err(Error::Validation(format!("duplicate mission id {}", m.id)));
            }
            m.pickup
                .validate()
                .and_then(|_| m.delivery.validate())
                .map_err(|e| Error::Validation(format!("mission {}: {e}", m.id)))?;
            if !(m.deadline_h > 0.0 && m.deadline_h <= self.day_length_h) {
                return Err(Error::Validation(format!(
                    "mission {}: deadline {} outside (0, {}]",
                    m.id, m.deadline_h, self.day_length_h
                )));
            }
        }

        let mut warnings = Vec::new();
        let has_heli = self
            .bases
            .iter()
            .any(|b| b.vehicle == VehicleClass::Helicopter);
        if !has_heli {
            for m in self.missions.iter().filter(|m| m.heli_only) {
                let w = format!(
                    "mission {} is helicopter-only but the instance has no helicopter base",
                    m.id
                );
                log::warn!("{w}");
                warnings.push(w);
            }
        }
        Ok(warnings)
    }

    /// Speed of each matrix layer. Classes without a base fall back to the default speed.
    pub fn layer_speeds(&self) -> [f64; VehicleClass::LAYERS] {
        let mut speeds = [HELICOPTER_SPEED_KMH, PLANE_SPEED_KMH];
        for class in VehicleClass::ALL {
            if let Some(b) = self.bases.iter().find(|b| b.vehicle == class) {
                speeds[class.layer()] = b.speed_kmh;
            }
        }
        speeds
    }

    pub fn mission_index(&self, id: u32) -> Option<usize> {
        self.missions.iter().position(|m| m.id == id)
    }

    pub fn base_index(&self, id: u32) -> Option<usize> {
        self.bases.iter().position(|b| b.id == id)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            source_name: "instance JSON".into(),
            message: format!("line {} column {}: {e}", e.line(), e.column()),
        })?;
        file.into_instance()
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&InstanceFile::from(self)).expect("instance serializes")
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json_string()).map_err(|e| Error::io(path, e))
    }
}

/// Supported on-disk instance layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstanceFormat {
    Json,
    /// A directory holding `bases.csv` and `missions.csv`.
    CsvPair,
}

impl InstanceFormat {
    pub fn detect(path: &Path) -> Self {
        if path.is_dir() {
            InstanceFormat::CsvPair
        } else {
            InstanceFormat::Json
        }
    }
}

/// Loads and validates an instance file. The order of bases and missions follows the file.
pub fn load_instance(path: impl AsRef<Path>, format: InstanceFormat) -> Result<Instance> {
    let path = path.as_ref();
    match format {
        InstanceFormat::Json => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            Instance::from_json_str(&text).map_err(|e| match e {
                Error::Parse { message, .. } => Error::Parse {
                    source_name: path.display().to_string(),
                    message,
                },
                other => other,
            })
        }
        InstanceFormat::CsvPair => {
            let bases = path.join("bases.csv");
            let missions = path.join("missions.csv");
            let b = fs::File::open(&bases).map_err(|e| Error::io(&bases, e))?;
            let m = fs::File::open(&missions).map_err(|e| Error::io(&missions, e))?;
            load_instance_csv(b, m, DEFAULT_FLIGHT_LIMIT_H, DEFAULT_DAY_LENGTH_H)
        }
    }
}

/// Reads an instance from a `bases.csv` / `missions.csv` pair.
pub fn load_instance_csv(
    bases: impl Read,
    missions: impl Read,
    flight_limit_h: f64,
    day_length_h: f64,
) -> Result<Instance> {
    fn rows<T: serde::de::DeserializeOwned>(reader: impl Read, name: &str) -> Result<Vec<T>> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        rdr.deserialize()
            .map(|row| {
                row.map_err(|e| {
                    let line = e
                        .position()
                        .map(|p| format!("line {}: ", p.line()))
                        .unwrap_or_default();
                    Error::Parse {
                        source_name: name.to_string(),
                        message: format!("{line}{e}"),
                    }
                })
            })
            .collect()
    }

    let file = InstanceFile {
        bases: rows(bases, "bases.csv")?,
        missions: rows(missions, "missions.csv")?,
        flight_limit_h,
        day_length_h,
    };
    file.into_instance()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct BaseRecord {
    id: u32,
    vehicle: VehicleClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    speed_kmh: Option<f64>,
    lat: f64,
    lon: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MissionRecord {
    id: u32,
    pickup_lat: f64,
    pickup_lon: f64,
    delivery_lat: f64,
    delivery_lon: f64,
    heli_only: bool,
    deadline_h: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct InstanceFile {
    bases: Vec<BaseRecord>,
    #[serde(default)]
    missions: Vec<MissionRecord>,
    #[serde(default = "default_flight_limit")]
    flight_limit_h: f64,
    #[serde(default = "default_day_length")]
    day_length_h: f64,
}

fn default_flight_limit() -> f64 {
    DEFAULT_FLIGHT_LIMIT_H
}

fn default_day_length() -> f64 {
    DEFAULT_DAY_LENGTH_H
}

impl InstanceFile {
    fn into_instance(self) -> Result<Instance> {
        let instance = Instance {
            bases: self
                .bases
                .into_iter()
                .map(|b| Base {
                    id: b.id,
                    vehicle: b.vehicle,
                    speed_kmh: b.speed_kmh.unwrap_or_else(|| b.vehicle.default_speed_kmh()),
                    location: GeoPoint {
                        lat: b.lat,
                        lon: b.lon,
                    },
                })
                .collect(),
            missions: self
                .missions
                .into_iter()
                .map(|m| Mission {
                    id: m.id,
                    pickup: GeoPoint {
                        lat: m.pickup_lat,
                        lon: m.pickup_lon,
                    },
                    delivery: GeoPoint {
                        lat: m.delivery_lat,
                        lon: m.delivery_lon,
                    },
                    heli_only: m.heli_only,
                    deadline_h: m.deadline_h,
                })
                .collect(),
            flight_limit_h: self.flight_limit_h,
            day_length_h: self.day_length_h,
        };
        instance.validate()?;
        Ok(instance)
    }
}

impl From<&Instance> for InstanceFile {
    fn from(instance: &Instance) -> Self {
        InstanceFile {
            bases: instance
                .bases
                .iter()
                .map(|b| BaseRecord {
                    id: b.id,
                    vehicle: b.vehicle,
                    speed_kmh: Some(b.speed_kmh),
                    lat: b.location.lat,
                    lon: b.location.lon,
                })
                .collect(),
            missions: instance
                .missions
                .iter()
                .map(|m| MissionRecord {
                    id: m.id,
                    pickup_lat: m.pickup.lat,
                    pickup_lon: m.pickup.lon,
                    delivery_lat: m.delivery.lat,
                    delivery_lon: m.delivery.lon,
                    heli_only: m.heli_only,
                    deadline_h: m.deadline_h,
                })
                .collect(),
            flight_limit_h: instance.flight_limit_h,
            day_length_h: instance.day_length_h,
        }
    }
}

/// Mission routes, one per base in instance order.
///
/// Routes hold mission indices into [`Instance::missions`]. Each route is
/// implicitly bracketed by its base at both ends.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Schedule {
    pub routes: Vec<Vec<usize>>,
}

impl Schedule {
    pub fn empty(bases: usize) -> Self {
        Schedule {
            routes: vec![Vec::new(); bases],
        }
    }

    pub fn assigned(&self) -> usize {
        self.routes.iter().map(Vec::len).sum()
    }

    /// Finds `(base, position)` of a mission.
    pub fn locate(&self, mission: usize) -> Option<(usize, usize)> {
        self.routes.iter().enumerate().find_map(|(b, route)| {
            route.iter().position(|&m| m == mission).map(|p| (b, p))
        })
    }

    /// Id-based form used in files.
    pub fn to_file(&self, instance: &Instance) -> ScheduleFile {
        ScheduleFile {
            routes: self
                .routes
                .iter()
                .enumerate()
                .map(|(b, route)| RouteRecord {
                    base: instance.bases.get(b).map_or(b as u32, |base| base.id),
                    missions: route
                        .iter()
                        .map(|&m| instance.missions.get(m).map_or(m as u32, |x| x.id))
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn from_file(file: &ScheduleFile, instance: &Instance) -> Result<Self> {
        let mut schedule = Schedule::empty(instance.bases.len());
        for record in &file.routes {
            let b = instance.base_index(record.base).ok_or_else(|| {
                Error::InvalidArgument(format!("schedule names unknown base {}", record.base))
            })?;
            for &id in &record.missions {
                let m = instance.mission_index(id).ok_or_else(|| {
                    Error::InvalidArgument(format!("schedule names unknown mission {id}"))
                })?;
                schedule.routes[b].push(m);
            }
        }
        Ok(schedule)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouteRecord {
    pub base: u32,
    pub missions: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleFile {
    pub routes: Vec<RouteRecord>,
}

/// True iff there is one route per base, every mission appears exactly once
/// across all routes and no unknown mission index appears.
pub fn validate_schedule_shape(instance: &Instance, schedule: &Schedule) -> bool {
    if schedule.routes.len() != instance.bases.len() {
        return false;
    }
    let mut seen = vec![false; instance.missions.len()];
    for &m in schedule.routes.iter().flatten() {
        match seen.get_mut(m) {
            Some(slot) if !*slot => *slot = true,
            _ => return false,
        }
    }
    seen.into_iter().all(|s| s)
}

/// Knobs for random mission generation.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationParams {
    pub heli_only_fraction: f64,
    /// Deadlines are drawn uniformly from `[lo, hi]` hours.
    pub deadline_window_h: (f64, f64),
    pub flight_limit_h: f64,
    pub day_length_h: f64,
}

impl Default for GenerationParams {
    fn default() -> Self {
        GenerationParams {
            heli_only_fraction: 0.25,
            deadline_window_h: (2.0, 24.0),
            flight_limit_h: DEFAULT_FLIGHT_LIMIT_H,
            day_length_h: DEFAULT_DAY_LENGTH_H,
        }
    }
}

impl GenerationParams {
    fn check(&self) -> Result<()> {
        let (lo, hi) = self.deadline_window_h;
        if !(lo > 0.0 && lo <= hi && hi <= self.day_length_h) {
            return Err(Error::InvalidParameter(format!(
                "deadline window [{lo}, {hi}] must lie within (0, {}]",
                self.day_length_h
            )));
        }
        if !(0.0..=1.0).contains(&self.heli_only_fraction) {
            return Err(Error::InvalidParameter(format!(
                "helicopter-only fraction {} outside [0, 1]",
                self.heli_only_fraction
            )));
        }
        Ok(())
    }
}

/// Draws `count` missions between facilities of `facility_pool`.
///
/// Each mission picks two distinct facilities as pickup and delivery. Mission
/// ids run from 1 to `count`. The output is a pure function of the inputs and
/// `seed`.
pub fn generate_missions(
    facility_pool: &[GeoPoint],
    count: usize,
    seed: u64,
    params: &GenerationParams,
) -> Result<Vec<Mission>> {
    params.check()?;
    if count == 0 {
        return Ok(Vec::new());
    }
    if facility_pool.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "facility pool needs at least two points, got {}",
            facility_pool.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = params.deadline_window_h;
    let missions = (0..count)
        .map(|i| {
            let picks = sample(&mut rng, facility_pool.len(), 2);
            let heli_only = rng.gen_bool(params.heli_only_fraction);
            let deadline_h = rng.gen_range(lo..=hi);
            Mission {
                id: i as u32 + 1,
                pickup: facility_pool[picks.index(0)],
                delivery: facility_pool[picks.index(1)],
                heli_only,
                deadline_h,
            }
        })
        .collect();
    Ok(missions)
}

/// Generates an instance whose missions pass `accept`.
///
/// Pickups, deliveries and the helicopter-only flags are drawn once; when
/// `accept` rejects the instance its deadlines are re-drawn, up to
/// [`MAX_DEADLINE_REDRAWS`] times.
pub fn generate_instance(
    bases: &[Base],
    facility_pool: &[GeoPoint],
    count: usize,
    seed: u64,
    params: &GenerationParams,
    mut accept: impl FnMut(&Instance) -> bool,
) -> Result<Instance> {
    let missions = generate_missions(facility_pool, count, seed, params)?;
    let mut instance = Instance {
        bases: bases.to_vec(),
        missions,
        flight_limit_h: params.flight_limit_h,
        day_length_h: params.day_length_h,
    };
    instance.validate()?;

    let (lo, hi) = params.deadline_window_h;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    for attempt in 0..=MAX_DEADLINE_REDRAWS {
        if accept(&instance) {
            return Ok(instance);
        }
        if attempt < MAX_DEADLINE_REDRAWS {
            for m in &mut instance.missions {
                m.deadline_h = rng.gen_range(lo..=hi);
            }
        }
    }
    Err(Error::Generation(format!(
        "no acceptable deadlines for {count} missions after {MAX_DEADLINE_REDRAWS} redraws (seed {seed})"
    )))
}

const SAMPLE_BASES_JSON: &str = include_str!("../data/ontario_bases.json");
const SAMPLE_FACILITIES_JSON: &str = include_str!("../data/ontario_facilities.json");

/// The bundled synthetic base set: 8 helicopter and 4 plane bases at
/// Ontario-like coordinates. Not a real fleet.
pub fn sample_bases() -> Vec<Base> {
    Instance::from_json_str(SAMPLE_BASES_JSON)
        .expect("bundled base file is valid")
        .bases
}

/// The bundled synthetic pool of pickup and delivery facilities.
pub fn sample_facilities() -> Vec<GeoPoint> {
    #[derive(Deserialize)]
    struct Facility {
        lat: f64,
        lon: f64,
    }
    let list: Vec<Facility> =
        serde_json::from_str(SAMPLE_FACILITIES_JSON).expect("bundled facility file is valid");
    list.into_iter()
        .map(|f| GeoPoint {
            lat: f.lat,
            lon: f.lon,
        })
        .collect()
}
