//! C ABI over `dbs_uplink`.
//!
//! Every fallible call returns a [`DbsStatus`]; on failure the message is
//! available from [`dbs_last_error`] on the same thread. Handles are
//! opaque and owned by the caller, who releases them with the matching
//! `*_free` function. Strings returned by the library are released with
//! [`dbs_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dbs_uplink::error::SolveError;
use dbs_uplink::placement::SearchOptions;
use dbs_uplink::report::SolutionReport;
use dbs_uplink::scenario::{load_scenario, parse_scenario, Scenario, ScenarioConfig};
use dbs_uplink::solver::{solve, Algorithm};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DbsStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidScenario = 3,
    CapsExceeded = 4,
    SolveFailed = 5,
    OutOfRange = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DbsAlgorithm {
    AaBud = 0,
    HdDbs = 1,
    SMbs = 2,
    ExactBud = 3,
}

impl From<DbsAlgorithm> for Algorithm {
    fn from(a: DbsAlgorithm) -> Self {
        match a {
            DbsAlgorithm::AaBud => Algorithm::AaBud,
            DbsAlgorithm::HdDbs => Algorithm::HdDbs,
            DbsAlgorithm::SMbs => Algorithm::SMbs,
            DbsAlgorithm::ExactBud => Algorithm::ExactBud,
        }
    }
}

/// Opaque network scenario.
pub struct DbsScenario(Scenario);

/// Opaque solver output.
pub struct DbsSolution(SolutionReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl ToString) {
    let text = message.to_string().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn fail(status: DbsStatus, message: impl ToString) -> DbsStatus {
    set_error(message);
    status
}

fn guard(f: impl FnOnce() -> DbsStatus) -> DbsStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(DbsStatus::Panic, "internal panic"))
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, DbsStatus> {
    if s.is_null() {
        return Err(fail(DbsStatus::NullArgument, "null string argument"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|e| fail(DbsStatus::InvalidUtf8, e))
}

unsafe fn put<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call into the library on this thread.
#[no_mangle]
pub extern "C" fn dbs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses a scenario from a NUL-terminated JSON document.
///
/// # Safety
/// `json` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dbs_scenario_from_json(json: *const c_char, out: *mut *mut DbsScenario) -> DbsStatus {
    guard(|| {
        if out.is_null() {
            return fail(DbsStatus::NullArgument, "null output pointer");
        }
        let text = match read_str(json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match parse_scenario(text) {
            Ok((s, _)) => {
                put(out, DbsScenario(s));
                DbsStatus::Ok
            }
            Err(e) => fail(DbsStatus::InvalidScenario, e),
        }
    })
}

/// Loads a scenario file.
///
/// # Safety
/// `path` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dbs_scenario_load(path: *const c_char, out: *mut *mut DbsScenario) -> DbsStatus {
    guard(|| {
        if out.is_null() {
            return fail(DbsStatus::NullArgument, "null output pointer");
        }
        let path = match read_str(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match load_scenario(path) {
            Ok(s) => {
                put(out, DbsScenario(s));
                DbsStatus::Ok
            }
            Err(e) => fail(DbsStatus::InvalidScenario, e),
        }
    })
}

/// Generates a scenario with default parameters and the given sizes.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dbs_scenario_generate(
    seed: u64,
    ue_count: usize,
    drone_count: usize,
    grid_sites: usize,
    out: *mut *mut DbsScenario,
) -> DbsStatus {
    guard(|| {
        if out.is_null() {
            return fail(DbsStatus::NullArgument, "null output pointer");
        }
        let config = ScenarioConfig {
            ue_count,
            drone_count,
            grid_sites,
            ..Default::default()
        };
        match config.build(seed) {
            Ok(s) => {
                put(out, DbsScenario(s));
                DbsStatus::Ok
            }
            Err(e) => fail(DbsStatus::InvalidScenario, e),
        }
    })
}

/// Number of UEs, or 0 for NULL.
///
/// # Safety
/// `scenario` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dbs_scenario_ue_count(scenario: *const DbsScenario) -> usize {
    scenario.as_ref().map_or(0, |s| s.0.ues.len())
}

/// Number of drones, or 0 for NULL.
///
/// # Safety
/// `scenario` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dbs_scenario_drone_count(scenario: *const DbsScenario) -> usize {
    scenario.as_ref().map_or(0, |s| s.0.drone_count())
}

/// # Safety
/// `scenario` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dbs_scenario_free(scenario: *mut DbsScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Runs `algorithm` on `scenario`.
///
/// # Safety
/// `scenario` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dbs_solve(
    scenario: *const DbsScenario,
    algorithm: DbsAlgorithm,
    out: *mut *mut DbsSolution,
) -> DbsStatus {
    guard(|| {
        let Some(s) = scenario.as_ref() else {
            return fail(DbsStatus::NullArgument, "null scenario");
        };
        if out.is_null() {
            return fail(DbsStatus::NullArgument, "null output pointer");
        }
        let algorithm = Algorithm::from(algorithm);
        match solve(&s.0, algorithm, SearchOptions::default()) {
            Ok(r) => {
                put(out, DbsSolution(SolutionReport::new(&s.0, algorithm, &r.solution, r.evaluations)));
                DbsStatus::Ok
            }
            Err(e @ SolveError::CapsExceeded(_)) => fail(DbsStatus::CapsExceeded, e),
            Err(e) => fail(DbsStatus::SolveFailed, e),
        }
    })
}

/// Total served throughput in bit/s, or 0 for NULL.
///
/// # Safety
/// `solution` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dbs_solution_throughput_bps(solution: *const DbsSolution) -> f64 {
    solution.as_ref().map_or(0.0, |s| s.0.total_throughput_bps)
}

/// Blocked share of the total demand, or 0 for NULL.
///
/// # Safety
/// `solution` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dbs_solution_block_ratio(solution: *const DbsSolution) -> f64 {
    solution.as_ref().map_or(0.0, |s| s.0.block_ratio)
}

/// Number of placed drones, or 0 for NULL.
///
/// # Safety
/// `solution` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dbs_solution_drone_count(solution: *const DbsSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.0.placements.len())
}

/// Writes the position of drone `index` to `xyz[0..3]` in meters.
///
/// # Safety
/// `solution` must be a live handle and `xyz` point to three doubles.
#[no_mangle]
pub unsafe extern "C" fn dbs_solution_drone_position(
    solution: *const DbsSolution,
    index: usize,
    xyz: *mut f64,
) -> DbsStatus {
    guard(|| {
        let Some(s) = solution.as_ref() else {
            return fail(DbsStatus::NullArgument, "null solution");
        };
        if xyz.is_null() {
            return fail(DbsStatus::NullArgument, "null output pointer");
        }
        let Some(p) = s.0.placements.get(index) else {
            return fail(DbsStatus::OutOfRange, format!("drone index {index} out of range"));
        };
        *xyz = p.x;
        *xyz.add(1) = p.y;
        *xyz.add(2) = p.z;
        DbsStatus::Ok
    })
}

/// Serving station id of UE `index`, -1 when blocked.
///
/// # Safety
/// `solution` must be a live handle and `station_id` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dbs_solution_ue_station(
    solution: *const DbsSolution,
    index: usize,
    station_id: *mut i64,
) -> DbsStatus {
    guard(|| {
        let Some(s) = solution.as_ref() else {
            return fail(DbsStatus::NullArgument, "null solution");
        };
        if station_id.is_null() {
            return fail(DbsStatus::NullArgument, "null output pointer");
        }
        let Some(ue) = s.0.ues.get(index) else {
            return fail(DbsStatus::OutOfRange, format!("UE index {index} out of range"));
        };
        *station_id = ue.station_id.map_or(-1, i64::from);
        DbsStatus::Ok
    })
}

/// Full report as JSON; release with [`dbs_string_free`].
///
/// # Safety
/// `solution` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dbs_solution_to_json(solution: *const DbsSolution, out: *mut *mut c_char) -> DbsStatus {
    guard(|| {
        let Some(s) = solution.as_ref() else {
            return fail(DbsStatus::NullArgument, "null solution");
        };
        if out.is_null() {
            return fail(DbsStatus::NullArgument, "null output pointer");
        }
        match serde_json::to_string(&s.0) {
            Ok(text) => {
                // serde_json escapes control characters, so no interior NUL
                *out = CString::new(text).expect("JSON without NUL").into_raw();
                DbsStatus::Ok
            }
            Err(e) => fail(DbsStatus::SolveFailed, e),
        }
    })
}

/// # Safety
/// `solution` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dbs_solution_free(solution: *mut DbsSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// # Safety
/// `s` must be NULL or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dbs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
