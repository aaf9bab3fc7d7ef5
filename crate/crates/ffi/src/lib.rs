//! C interface to the airfleet scheduler.
//!
//! Instances and schedules cross the boundary as opaque handles owned by
//! the caller and released with the matching `*_free` function. Every call
//! returns an [`AfStatus`]; on failure [`af_last_error`] describes what went
//! wrong on the calling thread. Panics are caught and reported as
//! [`AfStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;
use std::time::Duration;

use airfleet::construct::{self, ConstructConfig};
use airfleet::exact::{self, ExactLimits, ExactStatus, MpsFormat};
use airfleet::feasibility;
use airfleet::geo::{build_matrix, TravelTimeMatrix};
use airfleet::model::{self, Instance, InstanceFormat, Schedule};
use airfleet::search::{self, SearchConfig, SearchMode};
use airfleet::Error;

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Validation = 4,
    /// No feasible schedule exists or construction failed.
    Infeasible = 5,
    /// Exact search stopped on its budget; any schedule returned is the best found.
    BudgetExhausted = 6,
    Io = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AfSearchMode {
    Neighbourhood = 0,
    Tabu = 1,
}

/// Search options. Obtain defaults from [`af_search_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct AfSearchOptions {
    pub mode: AfSearchMode,
    pub tabu_tenure: u32,
    pub seed: u64,
    pub permute_scan_order: bool,
    pub parallel_eval: bool,
}

/// An instance with its travel-time matrix.
pub struct AfInstance {
    instance: Instance,
    matrix: TravelTimeMatrix,
}

pub struct AfSchedule {
    schedule: Schedule,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(text));
}

struct Failure(AfStatus, String);

fn status_of(e: &Error) -> AfStatus {
    match e {
        Error::InvalidParameter(_) | Error::InvalidArgument(_) | Error::Conflict(_) => AfStatus::InvalidArgument,
        Error::Parse { .. } => AfStatus::Parse,
        Error::Validation(_) => AfStatus::Validation,
        Error::Generation(_) | Error::Construct(_) | Error::OracleUnavailable(_) => AfStatus::Infeasible,
        Error::Io { .. } => AfStatus::Io,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn guard(body: impl FnOnce() -> Result<AfStatus, Failure>) -> AfStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(status)) => status,
        Ok(Err(Failure(status, message))) => {
            set_last_error(&message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("internal panic: {message}"));
            AfStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(AfStatus::NullPointer, format!("{what} is null"))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_slot<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(AfStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

fn boxed_instance(instance: Instance) -> *mut AfInstance {
    let matrix = build_matrix(&instance);
    Box::into_raw(Box::new(AfInstance { instance, matrix }))
}

fn boxed_schedule(schedule: Schedule) -> *mut AfSchedule {
    Box::into_raw(Box::new(AfSchedule { schedule }))
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn af_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn af_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads an instance from a JSON file or a CSV directory.
///
/// # Safety
/// `path` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn af_instance_load(path: *const c_char, out: *mut *mut AfInstance) -> AfStatus {
    guard(|| {
        let out = out_slot(out, "out")?;
        *out = ptr::null_mut();
        let path = PathBuf::from(text(path, "path")?);
        let instance = model::load_instance(&path, InstanceFormat::detect(&path))?;
        *out = boxed_instance(instance);
        Ok(AfStatus::Ok)
    })
}

/// Parses an instance from JSON text.
///
/// # Safety
/// `json` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn af_instance_from_json(json: *const c_char, out: *mut *mut AfInstance) -> AfStatus {
    guard(|| {
        let out = out_slot(out, "out")?;
        *out = ptr::null_mut();
        let instance = Instance::from_json_str(text(json, "json")?)?;
        *out = boxed_instance(instance);
        Ok(AfStatus::Ok)
    })
}

/// # Safety
/// `instance` must come from this library and not be freed twice; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn af_instance_free(instance: *mut AfInstance) {
    if !instance.is_null() {
        drop(Box::from_raw(instance));
    }
}

/// # Safety
/// `instance` must be a live handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn af_instance_size(
    instance: *const AfInstance,
    missions: *mut usize,
    bases: *mut usize,
) -> AfStatus {
    guard(|| {
        let inst = &borrow(instance, "instance")?.instance;
        *out_slot(missions, "missions")? = inst.missions.len();
        *out_slot(bases, "bases")? = inst.bases.len();
        Ok(AfStatus::Ok)
    })
}

/// Builds a feasible start schedule. Returns `Infeasible` when construction fails.
///
/// # Safety
/// `instance` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn af_construct(instance: *const AfInstance, out: *mut *mut AfSchedule) -> AfStatus {
    guard(|| {
        let out = out_slot(out, "out")?;
        *out = ptr::null_mut();
        let h = borrow(instance, "instance")?;
        let outcome = construct::initialize(&h.instance, &h.matrix, &ConstructConfig::default())
            .map_err(|e| Failure(AfStatus::Infeasible, e.to_string()))?;
        *out = boxed_schedule(outcome.schedule);
        Ok(AfStatus::Ok)
    })
}

#[no_mangle]
pub extern "C" fn af_search_options_default() -> AfSearchOptions {
    let d = SearchConfig::tabu();
    AfSearchOptions {
        mode: AfSearchMode::Tabu,
        tabu_tenure: d.tabu_tenure as u32,
        seed: d.rng_seed,
        permute_scan_order: d.permute_scan_order,
        parallel_eval: d.parallel_eval,
    }
}

/// Improves a feasible `start` schedule by local search into a new handle.
///
/// # Safety
/// `instance` and `start` must be live handles; `options` may be null for
/// defaults; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn af_search(
    instance: *const AfInstance,
    start: *const AfSchedule,
    options: *const AfSearchOptions,
    out: *mut *mut AfSchedule,
) -> AfStatus {
    guard(|| {
        let out = out_slot(out, "out")?;
        *out = ptr::null_mut();
        let h = borrow(instance, "instance")?;
        let start = &borrow(start, "start")?.schedule;
        let o = options.as_ref().copied().unwrap_or_else(|| af_search_options_default());
        let config = SearchConfig {
            mode: match o.mode {
                AfSearchMode::Neighbourhood => SearchMode::Neighbourhood,
                AfSearchMode::Tabu => SearchMode::Tabu,
            },
            tabu_tenure: o.tabu_tenure as usize,
            permute_scan_order: o.permute_scan_order,
            rng_seed: o.seed,
            max_sweeps: None,
            parallel_eval: o.parallel_eval,
        };
        let result = search::search(&h.instance, &h.matrix, start, &config)?;
        *out = boxed_schedule(result.schedule);
        Ok(AfStatus::Ok)
    })
}

/// Exact branch and bound.
///
/// `time_budget_seconds <= 0` means no time limit and `node_budget == 0`
/// means no node limit. Returns `Ok` with the optimum, `Infeasible` with a
/// null schedule, or `BudgetExhausted` with the best schedule found (null
/// if none).
///
/// # Safety
/// `instance` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn af_solve_exact(
    instance: *const AfInstance,
    time_budget_seconds: f64,
    node_budget: u64,
    out: *mut *mut AfSchedule,
) -> AfStatus {
    guard(|| {
        let out = out_slot(out, "out")?;
        *out = ptr::null_mut();
        let h = borrow(instance, "instance")?;
        let time_budget = if time_budget_seconds > 0.0 {
            Some(Duration::try_from_secs_f64(time_budget_seconds).map_err(|_| {
                Failure(AfStatus::InvalidArgument, format!("time budget {time_budget_seconds} is not a valid duration"))
            })?)
        } else {
            None
        };
        let limits = ExactLimits {
            time_budget,
            node_budget: (node_budget > 0).then_some(node_budget),
            ..ExactLimits::default()
        };
        let result = exact::solve_exact(&h.instance, &h.matrix, &limits)?;
        if let Some(s) = result.schedule {
            *out = boxed_schedule(s);
        }
        Ok(match result.status {
            ExactStatus::Optimal => AfStatus::Ok,
            ExactStatus::Infeasible => {
                set_last_error("no feasible schedule exists");
                AfStatus::Infeasible
            }
            ExactStatus::NodeLimit => {
                set_last_error("exact search budget exhausted");
                AfStatus::BudgetExhausted
            }
        })
    })
}

/// Total flight hours of a schedule.
///
/// # Safety
/// Handles must be live; `hours` must be writable.
#[no_mangle]
pub unsafe extern "C" fn af_schedule_objective(
    instance: *const AfInstance,
    schedule: *const AfSchedule,
    hours: *mut f64,
) -> AfStatus {
    guard(|| {
        let h = borrow(instance, "instance")?;
        let s = &borrow(schedule, "schedule")?.schedule;
        if !model::validate_schedule_shape(&h.instance, s) {
            return Err(Failure(AfStatus::InvalidArgument, "schedule does not belong to this instance".into()));
        }
        *out_slot(hours, "hours")? = feasibility::objective(&h.instance, &h.matrix, s);
        Ok(AfStatus::Ok)
    })
}

/// Whether a schedule satisfies every constraint.
///
/// # Safety
/// Handles must be live; `feasible` must be writable.
#[no_mangle]
pub unsafe extern "C" fn af_schedule_is_feasible(
    instance: *const AfInstance,
    schedule: *const AfSchedule,
    feasible: *mut bool,
) -> AfStatus {
    guard(|| {
        let h = borrow(instance, "instance")?;
        let s = &borrow(schedule, "schedule")?.schedule;
        *out_slot(feasible, "feasible")? = feasibility::evaluate(&h.instance, &h.matrix, s).feasible;
        Ok(AfStatus::Ok)
    })
}

/// Schedule as JSON routes keyed by base and mission ids. Release the
/// string with [`af_string_free`].
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn af_schedule_to_json(
    instance: *const AfInstance,
    schedule: *const AfSchedule,
    out: *mut *mut c_char,
) -> AfStatus {
    guard(|| {
        let out = out_slot(out, "out")?;
        *out = ptr::null_mut();
        let h = borrow(instance, "instance")?;
        let s = &borrow(schedule, "schedule")?.schedule;
        let json = serde_json::to_string(&s.to_file(&h.instance)).expect("schedule serialises");
        *out = CString::new(json).expect("json has no nul bytes").into_raw();
        Ok(AfStatus::Ok)
    })
}

/// # Safety
/// `s` must come from this library; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn af_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `schedule` must come from this library and not be freed twice; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn af_schedule_free(schedule: *mut AfSchedule) {
    if !schedule.is_null() {
        drop(Box::from_raw(schedule));
    }
}

/// Writes the instance's integer program as MPS. Fixed format fails with
/// `InvalidArgument` once a name exceeds 8 characters.
///
/// # Safety
/// `instance` must be a live handle; `path` must be a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn af_export_mps(instance: *const AfInstance, path: *const c_char, free_format: bool) -> AfStatus {
    guard(|| {
        let h = borrow(instance, "instance")?;
        let path = text(path, "path")?;
        let format = if free_format { MpsFormat::Free } else { MpsFormat::Fixed };
        exact::export_mps(&h.instance, &h.matrix, path, format)?;
        Ok(AfStatus::Ok)
    })
}
