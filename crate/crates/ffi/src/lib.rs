//! C ABI for fibervm.
//!
//! Programs and results are opaque handles created and freed by this
//! library. Every fallible call returns an `FvmStatus`; on failure the
//! message is available from `fvm_last_error_message` on the same thread.
//! Strings returned by a result accessor live as long as the result.
//! Handles must stay on the thread that created them.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{self, AssertUnwindSafe};
use std::ptr;

use fibervm::{
    ContinuationMode, Outcome, RunOptions, RunResult, RuntimeConfig, SourceProgram, Value,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FvmStatus {
    Ok = 0,
    NullArg = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    NotAnInt = 4,
    UnknownKey = 5,
    InvalidOptions = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FvmMode {
    OneShot = 0,
    MultiShot = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FvmOutcome {
    Done = 0,
    Fatal = 1,
    StepBudgetExceeded = 2,
}

/// Run options. Start from `fvm_options_default` and change fields.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FvmOptions {
    pub mode: FvmMode,
    pub opt_exn: bool,
    pub backtrace_on_error: bool,
    pub max_steps: u64,
    pub initial_words: u64,
    pub red_zone_words: u64,
    pub frame_words: u64,
    pub cache_capacity: usize,
}

/// A parsed program.
pub struct FvmProgram {
    program: SourceProgram,
}

/// The result of one run.
pub struct FvmResult {
    result: RunResult,
    value: Option<CString>,
    fatal: Option<CString>,
    output: Vec<CString>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(status: FvmStatus, message: impl Into<String>) -> FvmStatus {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
    status
}

fn guard(f: impl FnOnce() -> FvmStatus) -> FvmStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => set_error(FvmStatus::Panic, "internal panic"),
    }
}

fn c_string(s: String) -> CString {
    CString::new(s.replace('\0', " ")).unwrap()
}

impl From<&RunOptions> for FvmOptions {
    fn from(o: &RunOptions) -> Self {
        FvmOptions {
            mode: match o.runtime.mode {
                ContinuationMode::OneShot => FvmMode::OneShot,
                ContinuationMode::MultiShot => FvmMode::MultiShot,
            },
            opt_exn: o.opt_exn,
            backtrace_on_error: o.backtrace_on_error,
            max_steps: o.max_steps,
            initial_words: o.runtime.initial_words,
            red_zone_words: o.runtime.red_zone_words,
            frame_words: o.runtime.frame_words,
            cache_capacity: o.runtime.cache_capacity,
        }
    }
}

impl From<&FvmOptions> for RunOptions {
    fn from(o: &FvmOptions) -> Self {
        RunOptions {
            runtime: RuntimeConfig {
                initial_words: o.initial_words,
                red_zone_words: o.red_zone_words,
                frame_words: o.frame_words,
                cache_capacity: o.cache_capacity,
                mode: match o.mode {
                    FvmMode::OneShot => ContinuationMode::OneShot,
                    FvmMode::MultiShot => ContinuationMode::MultiShot,
                },
            },
            opt_exn: o.opt_exn,
            backtrace_on_error: o.backtrace_on_error,
            max_steps: o.max_steps,
            ..RunOptions::default()
        }
    }
}

/// Default run options: one-shot continuations, exception fast path on.
#[no_mangle]
pub extern "C" fn fvm_options_default() -> FvmOptions {
    FvmOptions::from(&RunOptions::default())
}

/// Parses NUL-terminated program text. On success `*out` owns a new
/// program, to be released with `fvm_program_free`.
///
/// # Safety
/// `source` must be NULL or a valid C string; `out` must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn fvm_program_parse(
    source: *const c_char,
    out: *mut *mut FvmProgram,
) -> FvmStatus {
    guard(|| {
        if source.is_null() || out.is_null() {
            return set_error(FvmStatus::NullArg, "null argument");
        }
        *out = ptr::null_mut();
        let text = match CStr::from_ptr(source).to_str() {
            Ok(t) => t,
            Err(e) => return set_error(FvmStatus::InvalidUtf8, e.to_string()),
        };
        match SourceProgram::from_source("<ffi>", text) {
            Ok(program) => {
                *out = Box::into_raw(Box::new(FvmProgram { program }));
                FvmStatus::Ok
            }
            Err(e) => set_error(FvmStatus::ParseError, e.to_string()),
        }
    })
}

/// # Safety
/// `program` must be NULL or come from `fvm_program_parse`, freed once.
#[no_mangle]
pub unsafe extern "C" fn fvm_program_free(program: *mut FvmProgram) {
    if !program.is_null() {
        drop(Box::from_raw(program));
    }
}

/// Runs a program. `options` may be NULL for the defaults. On success
/// `*out` owns a new result, to be released with `fvm_result_free`.
/// A fatal outcome is still `FVM_STATUS_OK`; inspect `fvm_result_outcome`.
///
/// # Safety
/// `program` must be a live program; `options` NULL or valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fvm_run(
    program: *const FvmProgram,
    options: *const FvmOptions,
    out: *mut *mut FvmResult,
) -> FvmStatus {
    guard(|| {
        let (Some(program), false) = (program.as_ref(), out.is_null()) else {
            return set_error(FvmStatus::NullArg, "null argument");
        };
        *out = ptr::null_mut();
        let options = match options.as_ref() {
            Some(o) => RunOptions::from(o),
            None => RunOptions::default(),
        };
        if let Err(e) = options.runtime.validate() {
            return set_error(FvmStatus::InvalidOptions, e.to_string());
        }
        if options.max_steps == 0 {
            return set_error(FvmStatus::InvalidOptions, "max_steps must be at least 1");
        }
        let result = fibervm::run(&program.program, &options);
        let value = result.outcome.value().map(|v| c_string(v.to_string()));
        let fatal = match &result.outcome {
            Outcome::Fatal { kind, .. } => Some(c_string(kind.to_string())),
            _ => None,
        };
        let output = result
            .output
            .iter()
            .map(|e| c_string(e.to_string()))
            .collect();
        *out = Box::into_raw(Box::new(FvmResult {
            result,
            value,
            fatal,
            output,
        }));
        FvmStatus::Ok
    })
}

/// # Safety
/// `result` must be NULL or come from `fvm_run`, freed once.
#[no_mangle]
pub unsafe extern "C" fn fvm_result_free(result: *mut FvmResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// How the run ended. NULL reads as fatal.
///
/// # Safety
/// `result` must be NULL or a live result.
#[no_mangle]
pub unsafe extern "C" fn fvm_result_outcome(result: *const FvmResult) -> FvmOutcome {
    match result.as_ref().map(|r| &r.result.outcome) {
        Some(Outcome::Done(_)) => FvmOutcome::Done,
        Some(Outcome::StepBudgetExceeded) => FvmOutcome::StepBudgetExceeded,
        Some(Outcome::Fatal { .. }) | None => FvmOutcome::Fatal,
    }
}

/// Stores the final value in `*out` when it is an integer.
///
/// # Safety
/// `result` must be NULL or live; `out` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn fvm_result_int(result: *const FvmResult, out: *mut i64) -> FvmStatus {
    guard(|| {
        let (Some(r), false) = (result.as_ref(), out.is_null()) else {
            return set_error(FvmStatus::NullArg, "null argument");
        };
        match r.result.outcome.value() {
            Some(Value::Int(n)) => {
                *out = *n;
                FvmStatus::Ok
            }
            Some(v) => set_error(FvmStatus::NotAnInt, format!("value {v} is not an integer")),
            None => set_error(FvmStatus::NotAnInt, "run did not finish with a value"),
        }
    })
}

/// The printed final value, or NULL if the run did not finish.
///
/// # Safety
/// `result` must be NULL or a live result.
#[no_mangle]
pub unsafe extern "C" fn fvm_result_value(result: *const FvmResult) -> *const c_char {
    result
        .as_ref()
        .and_then(|r| r.value.as_ref())
        .map_or(ptr::null(), |s| s.as_ptr())
}

/// The fatal error description, or NULL if the run was not fatal.
///
/// # Safety
/// `result` must be NULL or a live result.
#[no_mangle]
pub unsafe extern "C" fn fvm_result_fatal(result: *const FvmResult) -> *const c_char {
    result
        .as_ref()
        .and_then(|r| r.fatal.as_ref())
        .map_or(ptr::null(), |s| s.as_ptr())
}

/// Number of lines the program printed.
///
/// # Safety
/// `result` must be NULL or a live result.
#[no_mangle]
pub unsafe extern "C" fn fvm_result_output_len(result: *const FvmResult) -> usize {
    result.as_ref().map_or(0, |r| r.output.len())
}

/// Printed line `index`, or NULL when out of range.
///
/// # Safety
/// `result` must be NULL or a live result.
#[no_mangle]
pub unsafe extern "C" fn fvm_result_output_line(
    result: *const FvmResult,
    index: usize,
) -> *const c_char {
    result
        .as_ref()
        .and_then(|r| r.output.get(index))
        .map_or(ptr::null(), |s| s.as_ptr())
}

/// Number of continuations dropped without being resumed.
///
/// # Safety
/// `result` must be NULL or a live result.
#[no_mangle]
pub unsafe extern "C" fn fvm_result_leak_count(result: *const FvmResult) -> usize {
    result.as_ref().map_or(0, |r| r.result.leaks.len())
}

/// Looks up a metric by its flat key, e.g. `steps_total` or `rule.EffHn`.
///
/// # Safety
/// `result` live or NULL; `key` a C string or NULL; `out` writable or NULL.
#[no_mangle]
pub unsafe extern "C" fn fvm_result_metric(
    result: *const FvmResult,
    key: *const c_char,
    out: *mut u64,
) -> FvmStatus {
    guard(|| {
        let (Some(r), false, false) = (result.as_ref(), key.is_null(), out.is_null()) else {
            return set_error(FvmStatus::NullArg, "null argument");
        };
        let Ok(key) = CStr::from_ptr(key).to_str() else {
            return set_error(FvmStatus::InvalidUtf8, "key is not UTF-8");
        };
        match r.result.metrics.get(key) {
            Some(v) => {
                *out = v;
                FvmStatus::Ok
            }
            None => set_error(FvmStatus::UnknownKey, format!("unknown metric {key}")),
        }
    })
}

/// Message for the last failed call on this thread, or NULL.
/// Valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn fvm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}
