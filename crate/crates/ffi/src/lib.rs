//! C ABI over [`skewmix`].
//!
//! A `SkewmixLab` handle owns one experiment configuration. Every call
//! returns a [`SkewmixStatus`]; on failure `skewmix_last_error` gives a
//! message for the calling thread. Strings handed out by the library are
//! freed with `skewmix_string_free`, handles with `skewmix_lab_free`.
//!
//! Status codes 0–4 match the exit codes of the `skewmix` binary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use skewmix::lab::{dichotomy_document, dichotomy_report, run, Command, ExperimentConfig, Override, Verdict};
use skewmix::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SkewmixStatus {
    Ok = 0,
    Io = 1,
    /// Invalid configuration or input values.
    Config = 2,
    /// Preimage-tree or orbit budget exceeded.
    Budget = 3,
    /// Numerical non-convergence.
    Numerical = 4,
    NullPointer = 10,
    /// Not UTF-8, or an unknown command name.
    InvalidArgument = 11,
    /// A Rust panic was caught at the boundary.
    Panic = 12,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SkewmixVerdict {
    ExponentialMixing = 0,
    EssentialCoboundaryIntegral = 1,
    EssentialCoboundaryNonIntegral = 2,
    Inconclusive = 3,
}

impl From<Verdict> for SkewmixVerdict {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::ExponentialMixing => SkewmixVerdict::ExponentialMixing,
            Verdict::EssentialCoboundaryIntegral => SkewmixVerdict::EssentialCoboundaryIntegral,
            Verdict::EssentialCoboundaryNonIntegral => SkewmixVerdict::EssentialCoboundaryNonIntegral,
            Verdict::Inconclusive => SkewmixVerdict::Inconclusive,
        }
    }
}

/// Opaque experiment handle.
pub struct SkewmixLab {
    config: ExperimentConfig,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(SkewmixStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e.exit_code() {
            1 => SkewmixStatus::Io,
            2 => SkewmixStatus::Config,
            3 => SkewmixStatus::Budget,
            _ => SkewmixStatus::Numerical,
        };
        Failure(status, e.to_string())
    }
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', "\\0")).expect("interior NULs replaced");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SkewmixStatus {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SkewmixStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            SkewmixStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(SkewmixStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(SkewmixStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn lab_ref<'a>(lab: *const SkewmixLab) -> Result<&'a SkewmixLab, Failure> {
    lab.as_ref().ok_or(Failure(SkewmixStatus::NullPointer, "lab handle is null".into()))
}

unsafe fn lab_mut<'a>(lab: *mut SkewmixLab) -> Result<&'a mut SkewmixLab, Failure> {
    lab.as_mut().ok_or(Failure(SkewmixStatus::NullPointer, "lab handle is null".into()))
}

fn check_out<T>(out: *mut T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        Err(Failure(SkewmixStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

fn to_c(s: String) -> *mut c_char {
    CString::new(s).expect("JSON has no interior NUL").into_raw()
}

unsafe fn emit_lab(out: *mut *mut SkewmixLab, config: ExperimentConfig) {
    *out = Box::into_raw(Box::new(SkewmixLab { config }));
}

/// Message for the last failed call on this thread, or NULL. Valid until the
/// next call into the library from this thread.
#[no_mangle]
pub extern "C" fn skewmix_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn skewmix_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Build a lab from TOML text. On success `*out` receives a handle.
///
/// # Safety
/// `toml` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn skewmix_lab_from_toml(toml: *const c_char, out: *mut *mut SkewmixLab) -> SkewmixStatus {
    guard(|| {
        check_out(out, "out")?;
        let cfg = ExperimentConfig::from_toml(text(toml, "toml")?)?;
        emit_lab(out, cfg);
        Ok(())
    })
}

/// Build a lab from a TOML file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn skewmix_lab_from_file(path: *const c_char, out: *mut *mut SkewmixLab) -> SkewmixStatus {
    guard(|| {
        check_out(out, "out")?;
        let cfg = ExperimentConfig::load(Path::new(text(path, "path")?))?;
        emit_lab(out, cfg);
        Ok(())
    })
}

/// # Safety
/// `lab` must come from this library and not be used afterwards. NULL is a no-op.
#[no_mangle]
pub unsafe extern "C" fn skewmix_lab_free(lab: *mut SkewmixLab) {
    if !lab.is_null() {
        drop(Box::from_raw(lab));
    }
}

/// Apply one `KEY=VALUE` override with a dotted key, e.g. `"spectral.k=128"`.
/// The handle is unchanged if the result does not validate.
///
/// # Safety
/// `lab` must be a live handle; `assignment` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn skewmix_lab_set(lab: *mut SkewmixLab, assignment: *const c_char) -> SkewmixStatus {
    guard(|| {
        let lab = lab_mut(lab)?;
        let edit = Override::parse(text(assignment, "assignment")?)?;
        lab.config = lab.config.with_overrides(&[edit])?;
        Ok(())
    })
}

/// # Safety
/// `lab` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn skewmix_lab_set_seed(lab: *mut SkewmixLab, seed: u64) -> SkewmixStatus {
    guard(|| {
        lab_mut(lab)?.config.seed = seed;
        Ok(())
    })
}

/// Current configuration as TOML; free with `skewmix_string_free`.
///
/// # Safety
/// `lab` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn skewmix_lab_config_toml(lab: *const SkewmixLab, out: *mut *mut c_char) -> SkewmixStatus {
    guard(|| {
        check_out(out, "out")?;
        *out = to_c(lab_ref(lab)?.config.to_toml());
        Ok(())
    })
}

/// Run a subcommand (`density`, `twist-spectrum`, `symbol-bound`, `livsic`,
/// `correlate`, `dichotomy`) and return its JSON document. Nothing is
/// written to disk.
///
/// # Safety
/// `lab` must be a live handle; `command` a NUL-terminated string; `json`
/// must be writable. Free `*json` with `skewmix_string_free`.
#[no_mangle]
pub unsafe extern "C" fn skewmix_lab_run(
    lab: *const SkewmixLab,
    command: *const c_char,
    json: *mut *mut c_char,
) -> SkewmixStatus {
    guard(|| {
        check_out(json, "json")?;
        let lab = lab_ref(lab)?;
        let name = text(command, "command")?;
        let cmd = Command::from_name(name)
            .ok_or_else(|| Failure(SkewmixStatus::InvalidArgument, format!("unknown command {name:?}")))?;
        *json = to_c(run(cmd, &lab.config)?.json);
        Ok(())
    })
}

/// Run the full dichotomy and store the verdict. `json` may be NULL; if not,
/// it receives the same document as `skewmix_lab_run(lab, "dichotomy", …)`.
///
/// # Safety
/// `lab` must be a live handle; `verdict` must be writable.
#[no_mangle]
pub unsafe extern "C" fn skewmix_lab_verdict(
    lab: *const SkewmixLab,
    verdict: *mut SkewmixVerdict,
    json: *mut *mut c_char,
) -> SkewmixStatus {
    guard(|| {
        check_out(verdict, "verdict")?;
        let cfg = &lab_ref(lab)?.config;
        let report = dichotomy_report(cfg)?;
        *verdict = report.verdict.into();
        if !json.is_null() {
            *json = to_c(dichotomy_document(cfg, &report)?);
        }
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards. NULL is a no-op.
#[no_mangle]
pub unsafe extern "C" fn skewmix_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
