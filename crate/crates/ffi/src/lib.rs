//! C ABI over the simulator and the experiment harness.
//!
//! Objects are opaque handles created by `*_new`/`*_parse`/`*_load` and
//! released by the matching `*_free`. Every fallible call returns an
//! [`EhStatus`]; the message of the last failure on the calling thread is
//! available through [`eh_last_error`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use eh_uplink::env::{AccessAction, Environment};
use eh_uplink::harness::{load_config, run_experiment, ExperimentConfig};
use eh_uplink::Error;

/// Status codes. Values 2 to 4 match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EhStatus {
    Ok = 0,
    Failed = 1,
    ConfigError = 2,
    NumericalFault = 3,
    OracleTooLarge = 4,
    NullPointer = 5,
    InvalidArgument = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

impl From<&Error> for EhStatus {
    fn from(e: &Error) -> Self {
        match e.exit_code() {
            2 => EhStatus::ConfigError,
            3 => EhStatus::NumericalFault,
            4 => EhStatus::OracleTooLarge,
            _ => match e {
                Error::InvalidAction(_) | Error::IndexOutOfRange { .. } | Error::LengthMismatch { .. } => {
                    EhStatus::InvalidArgument
                }
                _ => EhStatus::Failed,
            },
        }
    }
}

/// Opaque experiment configuration.
pub struct EhConfig(ExperimentConfig);

/// Opaque running simulation.
pub struct EhEnv(Environment);

/// Outcome of [`eh_run_experiment`]. Absent losses are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EhRunSummary {
    pub steps: u64,
    pub final_reward: f64,
    pub final_p_loss: f64,
    pub final_train_loss: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn fail(status: EhStatus, msg: impl Into<String>) -> EhStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> Result<(), EhStatus>) -> EhStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EhStatus::Ok,
        Ok(Err(status)) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(EhStatus::Panic, format!("panic: {msg}"))
        }
    }
}

fn lib(e: Error) -> EhStatus {
    fail(EhStatus::from(&e), e.to_string())
}

fn null(what: &str) -> EhStatus {
    fail(EhStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, EhStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(EhStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, EhStatus> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn handle_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, EhStatus> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), EhStatus> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Copies `s` NUL-terminated into `buf`. `needed` receives the required size
/// including the terminator, also when the buffer is too small. Leaves the
/// last error untouched.
unsafe fn copy_out(s: &str, buf: *mut c_char, len: usize, needed: *mut usize) -> Result<(), EhStatus> {
    let size = s.len() + 1;
    if !needed.is_null() {
        *needed = size;
    }
    if buf.is_null() || len < size {
        return Err(EhStatus::BufferTooSmall);
    }
    ptr::copy_nonoverlapping(s.as_ptr(), buf.cast::<u8>(), s.len());
    *buf.add(s.len()) = 0;
    Ok(())
}

/// NUL-terminated crate version. Static storage; do not free.
#[no_mangle]
pub extern "C" fn eh_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of this thread into `buf`.
///
/// # Safety
/// `buf` must be valid for `len` bytes or null; `needed` must be null or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn eh_last_error(buf: *mut c_char, len: usize, needed: *mut usize) -> EhStatus {
    let msg = LAST_ERROR.with(|e| e.borrow().clone());
    match copy_out(&msg, buf, len, needed) {
        Ok(()) => EhStatus::Ok,
        Err(s) => s,
    }
}

/// Default configuration.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eh_config_default(out: *mut *mut EhConfig) -> EhStatus {
    guard(|| put(out, EhConfig(ExperimentConfig::default())))
}

/// Parses a `key = value` document.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eh_config_parse(text: *const c_char, out: *mut *mut EhConfig) -> EhStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        let cfg = ExperimentConfig::parse(text, Path::new("<ffi>")).map_err(lib)?;
        put(out, EhConfig(cfg))
    })
}

/// Loads a config file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eh_config_load(path: *const c_char, out: *mut *mut EhConfig) -> EhStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        put(out, EhConfig(load_config(Path::new(path)).map_err(lib)?))
    })
}

/// Serializes a config; the text parses back to an equal config.
///
/// # Safety
/// `cfg` must be a live handle; see [`eh_last_error`] for the buffer rules.
#[no_mangle]
pub unsafe extern "C" fn eh_config_to_text(
    cfg: *const EhConfig,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> EhStatus {
    guard(|| {
        copy_out(&handle(cfg, "cfg")?.0.to_text(), buf, len, needed)
            .map_err(|s| fail(s, "buffer too small for config text"))
    })
}

/// # Safety
/// `cfg` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn eh_config_free(cfg: *mut EhConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Runs the configured algorithm and writes its metric file.
///
/// # Safety
/// `cfg` must be a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn eh_run_experiment(cfg: *const EhConfig, out: *mut EhRunSummary) -> EhStatus {
    guard(|| {
        let s = run_experiment(&handle(cfg, "cfg")?.0).map_err(lib)?;
        if let Some(out) = out.as_mut() {
            *out = EhRunSummary {
                steps: s.steps,
                final_reward: s.final_reward,
                final_p_loss: s.final_p_loss.unwrap_or(f64::NAN),
                final_train_loss: s.final_train_loss.unwrap_or(f64::NAN),
            };
        }
        Ok(())
    })
}

/// Simulation of the config's scenario under `seed`.
///
/// # Safety
/// `cfg` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eh_env_new(cfg: *const EhConfig, seed: u64, out: *mut *mut EhEnv) -> EhStatus {
    guard(|| {
        let env = Environment::new(&handle(cfg, "cfg")?.0.scenario, seed).map_err(lib)?;
        put(out, EhEnv(env))
    })
}

/// # Safety
/// `env` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn eh_env_free(env: *mut EhEnv) {
    if !env.is_null() {
        drop(Box::from_raw(env));
    }
}

/// Number of UEs, or 0 for a null handle.
///
/// # Safety
/// `env` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn eh_env_n_ues(env: *const EhEnv) -> usize {
    env.as_ref().map_or(0, |e| e.0.state().n_ues())
}

/// Current slot index, or 0 for a null handle.
///
/// # Safety
/// `env` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn eh_env_time(env: *const EhEnv) -> u64 {
    env.as_ref().map_or(0, |e| e.0.state().t)
}

/// Writes the N battery levels into `out`.
///
/// # Safety
/// `env` must be a live handle; `out` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn eh_env_batteries(env: *const EhEnv, out: *mut u32, len: usize) -> EhStatus {
    guard(|| {
        let b = handle(env, "env")?.0.state().batteries();
        if out.is_null() {
            return Err(null("out"));
        }
        if len < b.len() {
            return Err(fail(EhStatus::BufferTooSmall, format!("need {} entries, have {len}", b.len())));
        }
        ptr::copy_nonoverlapping(b.as_ptr(), out, b.len());
        Ok(())
    })
}

/// Executes one slot scheduling the `k` distinct UE indices in `selected`.
///
/// # Safety
/// `env` must be a live handle; `selected` must be valid for `k` reads;
/// `sum_rate` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn eh_env_step(
    env: *mut EhEnv,
    selected: *const usize,
    k: usize,
    sum_rate: *mut f64,
) -> EhStatus {
    guard(|| {
        let env = handle_mut(env, "env")?;
        if selected.is_null() && k > 0 {
            return Err(null("selected"));
        }
        let indices = if k == 0 { Vec::new() } else { std::slice::from_raw_parts(selected, k).to_vec() };
        let n = env.0.state().n_ues();
        let action = AccessAction::new(indices, n).map_err(lib)?;
        let outcome = env.0.step(&action).map_err(lib)?;
        if let Some(out) = sum_rate.as_mut() {
            *out = outcome.sum_rate;
        }
        Ok(())
    })
}
