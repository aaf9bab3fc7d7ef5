//! Great-circle distances and the per-vehicle-class travel-time matrix.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Instance, VehicleClass};

/// Mean Earth radius in kilometres.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// A geodetic position in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        let p = GeoPoint { lat, lon };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lat.is_finite() && (-90.0..=90.0).contains(&self.lat)) {
            return Err(Error::Validation(format!(
                "latitude {} outside [-90, 90]",
                self.lat
            )));
        }
        if !(self.lon.is_finite() && (-180.0..=180.0).contains(&self.lon)) {
            return Err(Error::Validation(format!(
                "longitude {} outside [-180, 180]",
                self.lon
            )));
        }
        Ok(())
    }
}

/// Haversine distance in kilometres.
pub fn haversine_km(a: GeoPoint, b: GeoPoint) -> f64 {
    let lat1 = a.lat.to_radians();
    let lat2 = b.lat.to_radians();
    let half_dlat = (b.lat - a.lat).to_radians() / 2.0;
    let half_dlon = (b.lon - a.lon).to_radians() / 2.0;

    let h = half_dlat.sin().powi(2) + lat1.cos() * lat2.cos() * half_dlon.sin().powi(2);
    // rounding can push h a hair above 1 for antipodal points
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

/// Flight time in hours between two points at `speed_kmh`.
pub fn travel_hours(a: GeoPoint, b: GeoPoint, speed_kmh: f64) -> Result<f64> {
    if !(speed_kmh.is_finite() && speed_kmh > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "speed must be positive, got {speed_kmh}"
        )));
    }
    Ok(haversine_km(a, b) / speed_kmh)
}

/// Node-to-node travel times in hours, one layer per vehicle class.
///
/// Nodes are numbered with missions first (`0..n`) and bases after them
/// (`n..n+k`), in instance order. An entry whose target is a mission
/// includes that mission's pickup-to-delivery leg, so arriving at a mission
/// node means the patient has been delivered. Entries whose origin is a
/// mission start from that mission's delivery point.
#[derive(Debug, Clone, PartialEq)]
pub struct TravelTimeMatrix {
    missions: usize,
    bases: usize,
    entries: Vec<f64>,
}

impl TravelTimeMatrix {
    pub fn missions(&self) -> usize {
        self.missions
    }

    pub fn bases(&self) -> usize {
        self.bases
    }

    /// Number of nodes, `n + k`.
    pub fn nodes(&self) -> usize {
        self.missions + self.bases
    }

    /// `(nodes, nodes, 2)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.nodes(), self.nodes(), VehicleClass::LAYERS)
    }

    #[inline]
    pub fn hours(&self, from: usize, to: usize, class: VehicleClass) -> f64 {
        let n = self.nodes();
        debug_assert!(from < n && to < n);
        self.entries[(from * n + to) * VehicleClass::LAYERS + class.layer()]
    }

    pub fn mission_node(&self, mission: usize) -> usize {
        debug_assert!(mission < self.missions);
        mission
    }

    pub fn base_node(&self, base: usize) -> usize {
        debug_assert!(base < self.bases);
        self.missions + base
    }

    /// Raw entries in `(from, to, layer)` row-major order.
    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }
}

/// Builds the travel-time matrix for an instance.
///
/// Layer 0 uses the helicopter speed and layer 1 the plane speed. When the
/// instance mixes several speeds for one class, the first base of that
/// class sets the layer speed; [`Instance::validate`] rejects such mixes.
pub fn build_matrix(instance: &Instance) -> TravelTimeMatrix {
    let speeds = instance.layer_speeds();
    let n = instance.missions.len();
    let k = instance.bases.len();
    let nodes = n + k;

    let origin = |i: usize| -> GeoPoint {
        if i < n {
            instance.missions[i].delivery
        } else {
            instance.bases[i - n].location
        }
    };

    let mut entries = vec![0.0; nodes * nodes * VehicleClass::LAYERS];
    for i in 0..nodes {
        let from = origin(i);
        for j in 0..nodes {
            if i == j {
                continue;
            }
            let km = if j < n {
                let m = &instance.missions[j];
                haversine_km(from, m.pickup) + haversine_km(m.pickup, m.delivery)
            } else {
                haversine_km(from, instance.bases[j - n].location)
            };
            for class in VehicleClass::ALL {
                entries[(i * nodes + j) * VehicleClass::LAYERS + class.layer()] =
                    km / speeds[class.layer()];
            }
        }
    }

    TravelTimeMatrix {
        missions: n,
        bases: k,
        entries,
    }
}
