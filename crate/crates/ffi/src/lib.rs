//! C ABI over `anosov_lab`.
//!
//! Configs and outcomes cross the boundary as opaque handles. Every call
//! returns an [`AlStatus`]; on failure `al_last_error()` holds a message
//! for the calling thread. Strings returned by the library are freed with
//! `al_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use anosov_lab::config::ExperimentConfig;
use anosov_lab::lie::{cartan_projection, GroupElement};
use anosov_lab::linalg::Mat;
use anosov_lab::output::Outcome;
use anosov_lab::run::{run, Command, RunOptions};
use anosov_lab::LabError;

/// Status codes; 2, 3 and 4 match the command-line exit codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlStatus {
    Ok = 0,
    /// Invalid config, unknown name or bad argument value.
    Config = 2,
    /// A numerical routine failed.
    Numeric = 3,
    /// An enumeration or dimension budget was exceeded.
    Budget = 4,
    NullPointer = 5,
    InvalidUtf8 = 6,
    NotFound = 7,
    /// A Rust panic was caught at the boundary.
    Panic = 8,
}

/// Parsed experiment config.
pub struct AlConfig(ExperimentConfig);

/// Result of one subcommand.
pub struct AlOutcome(Outcome);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: AlStatus, msg: &str) -> AlStatus {
    set_error(msg);
    status
}

fn from_lab(e: LabError) -> AlStatus {
    let status = match e.exit_code() {
        2 => AlStatus::Config,
        4 => AlStatus::Budget,
        _ => AlStatus::Numeric,
    };
    fail(status, &format!("{}: {e}", e.kind()))
}

fn guard(f: impl FnOnce() -> AlStatus) -> AlStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(AlStatus::Panic, "panic in anosov_lab"))
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, AlStatus> {
    if s.is_null() {
        return Err(fail(AlStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(AlStatus::InvalidUtf8, "string argument is not UTF-8"))
}

fn command(name: &str) -> Option<Command> {
    Some(match name {
        "group" => Command::Group,
        "kappa" => Command::Kappa,
        "exponent" => Command::Exponent,
        "poincare" => Command::Poincare,
        "measure" => Command::Measure,
        "cusp" => Command::Cusp,
        "integral" => Command::Integral,
        "cone" => Command::Cone,
        "report" => Command::Report,
        _ => return None,
    })
}

/// Message for the last failure on this thread; empty when none. Valid
/// until the next call on the same thread.
#[no_mangle]
pub extern "C" fn al_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn al_config_parse(toml: *const c_char, out: *mut *mut AlConfig) -> AlStatus {
    guard(|| {
        if out.is_null() {
            return fail(AlStatus::NullPointer, "null output pointer");
        }
        let s = match read_str(toml) {
            Ok(s) => s,
            Err(st) => return st,
        };
        match ExperimentConfig::from_toml_str(s) {
            Ok(c) => {
                *out = Box::into_raw(Box::new(AlConfig(c)));
                AlStatus::Ok
            }
            Err(e) => from_lab(e),
        }
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn al_config_load(path: *const c_char, out: *mut *mut AlConfig) -> AlStatus {
    guard(|| {
        if out.is_null() {
            return fail(AlStatus::NullPointer, "null output pointer");
        }
        let p = match read_str(path) {
            Ok(s) => s,
            Err(st) => return st,
        };
        match ExperimentConfig::load(std::path::Path::new(p)) {
            Ok(c) => {
                *out = Box::into_raw(Box::new(AlConfig(c)));
                AlStatus::Ok
            }
            Err(e) => from_lab(e),
        }
    })
}

/// # Safety
/// `config` must come from `al_config_parse` or `al_config_load` and not
/// have been freed; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn al_config_free(config: *mut AlConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Runs a subcommand (`"group"`, `"kappa"`, `"exponent"`, `"poincare"`,
/// `"measure"`, `"cusp"`, `"integral"`, `"cone"` or `"report"`).
/// A negative `radius` keeps the config value, as does `has_seed = false`
/// for the seed; `phi` may be null.
///
/// # Safety
/// `config` must be a live handle, `name` a NUL-terminated string, `phi`
/// null or NUL-terminated, and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn al_run(
    config: *const AlConfig,
    name: *const c_char,
    radius: i64,
    has_seed: bool,
    seed: u64,
    phi: *const c_char,
    out: *mut *mut AlOutcome,
) -> AlStatus {
    guard(|| {
        if config.is_null() || out.is_null() {
            return fail(AlStatus::NullPointer, "null handle or output pointer");
        }
        let cmd = match read_str(name) {
            Ok(s) => match command(s) {
                Some(c) => c,
                None => return fail(AlStatus::Config, &format!("unknown command `{s}`")),
            },
            Err(st) => return st,
        };
        let phi = if phi.is_null() {
            None
        } else {
            match read_str(phi) {
                Ok(s) => Some(s.to_string()),
                Err(st) => return st,
            }
        };
        let opts = RunOptions {
            radius: usize::try_from(radius).ok(),
            seed: has_seed.then_some(seed),
            phi,
        };
        match run(cmd, &(*config).0, &opts) {
            Ok(o) => {
                *out = Box::into_raw(Box::new(AlOutcome(o)));
                AlStatus::Ok
            }
            Err(e) => from_lab(e),
        }
    })
}

/// # Safety
/// `outcome` must come from `al_run` and not have been freed; null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn al_outcome_free(outcome: *mut AlOutcome) {
    if !outcome.is_null() {
        drop(Box::from_raw(outcome));
    }
}

/// # Safety
/// `outcome` must be a live handle, `name` NUL-terminated and `value` a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn al_outcome_metric(outcome: *const AlOutcome, name: *const c_char, value: *mut f64) -> AlStatus {
    guard(|| {
        if outcome.is_null() || value.is_null() {
            return fail(AlStatus::NullPointer, "null handle or output pointer");
        }
        let key = match read_str(name) {
            Ok(s) => s,
            Err(st) => return st,
        };
        match (*outcome).0.metrics.get(key) {
            Some(v) => {
                *value = *v;
                AlStatus::Ok
            }
            None => fail(AlStatus::NotFound, &format!("no metric `{key}`")),
        }
    })
}

/// Number of checks that failed, or -1 when the outcome has none.
///
/// # Safety
/// `outcome` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn al_outcome_failed_checks(outcome: *const AlOutcome) -> i64 {
    if outcome.is_null() {
        return -1;
    }
    let o = &(*outcome).0;
    if o.checks.is_empty() {
        -1
    } else {
        o.checks.iter().filter(|c| !c.pass).count() as i64
    }
}

/// The outcome as a JSON document, or null on failure. Free with
/// `al_string_free`.
///
/// # Safety
/// `outcome` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn al_outcome_json(outcome: *const AlOutcome) -> *mut c_char {
    if outcome.is_null() {
        set_error("null handle");
        return ptr::null_mut();
    }
    match (*outcome).0.to_json() {
        Ok(s) => CString::new(s).map_or(ptr::null_mut(), CString::into_raw),
        Err(e) => {
            from_lab(e);
            ptr::null_mut()
        }
    }
}

/// # Safety
/// `s` must come from this library and not have been freed; null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn al_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Cartan projection of one `d × d` matrix given row-major: writes the
/// `d` sorted log singular values to `out`. With `projective`, the matrix
/// is taken in `PSL(d)`; `|det|` must be 1 within the library tolerance.
///
/// # Safety
/// `rows` must point to `d·d` doubles and `out` to room for `d` doubles.
#[no_mangle]
pub unsafe extern "C" fn al_cartan_projection(rows: *const f64, d: usize, projective: bool, out: *mut f64) -> AlStatus {
    guard(|| {
        if rows.is_null() || out.is_null() {
            return fail(AlStatus::NullPointer, "null matrix or output pointer");
        }
        if d == 0 {
            return fail(AlStatus::Config, "dimension must be positive");
        }
        let entries = std::slice::from_raw_parts(rows, d * d);
        let g = match GroupElement::new(vec![Mat::from_row_slice(d, d, entries)], vec![projective]) {
            Ok(g) => g,
            Err(e) => return from_lab(e),
        };
        match cartan_projection(&g) {
            Ok(k) => {
                std::slice::from_raw_parts_mut(out, d).copy_from_slice(k.factor(0));
                AlStatus::Ok
            }
            Err(e) => from_lab(e),
        }
    })
}
