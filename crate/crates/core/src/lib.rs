//! Air-ambulance fleet scheduling.
//!
//! Missions (a patient pickup followed by a delivery) are assigned to
//! vehicle-occupied bases so that every vehicle leaves its base, serves an
//! ordered list of missions and returns home. The crate provides:
//!
//! * [`geo`]: great-circle travel-time matrices,
//! * [`model`]: instances, schedules, file formats and benchmark generators,
//! * [`feasibility`]: the objective and every hard constraint,
//! * [`construct`]: the deadline-greedy initial schedule,
//! * [`search`]: relocate neighbourhood search and tabu search,
//! * [`exact`]: a branch-and-bound oracle and an MPS export of the ILP,
//! * [`bench`]: multi-seed experiment runs and U/L/A reporting.

pub mod bench;
pub mod construct;
pub mod error;
pub mod exact;
pub mod feasibility;
pub mod geo;
pub mod model;
pub mod search;

pub use error::{Error, Result};

/// Tolerance, in hours, applied to every `<=` comparison against a limit.
pub const EPSILON_HOURS: f64 = 1e-9;
