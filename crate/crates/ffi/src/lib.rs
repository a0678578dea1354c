//! C ABI for the teamshock pipeline.
//!
//! Conventions:
//! * Every fallible function returns a [`TsStatus`]; on failure the message is
//!   available from [`ts_last_error`] on the same thread.
//! * Objects are opaque handles created by `ts_*_new`/`ts_*_load` style
//!   functions and released with the matching `ts_*_free`. Passing NULL to a
//!   free function is a no-op.
//! * Strings returned through `char **` out-parameters are owned by the caller
//!   and released with [`ts_string_free`].

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use teamshock::counterfactual::Outcome;
use teamshock::effects::{conformal_interval, ks_two_sample};
use teamshock::pipeline::{analyze, run_pipeline, Analysis, Inputs, Manifest, PipelineConfig, PipelineError};
use teamshock::synth::{generate_synthetic, SyntheticSpec};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TsStatus {
    Ok = 0,
    /// NULL pointer, invalid UTF-8 or an out-of-range argument.
    InvalidArgument = 1,
    /// The configuration or spec was rejected before any work.
    InvalidConfig = 2,
    /// A pipeline stage failed.
    StageFailed = 3,
    /// No value for the requested key.
    NotFound = 4,
    /// A Rust panic was caught at the boundary.
    Panic = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(CString::new(msg).expect("nul bytes removed")));
}

struct Fail(TsStatus, String);

impl From<PipelineError> for Fail {
    fn from(e: PipelineError) -> Fail {
        let status = match e {
            PipelineError::Config(_) => TsStatus::InvalidConfig,
            PipelineError::Stage { .. } => TsStatus::StageFailed,
        };
        Fail(status, e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(TsStatus::InvalidArgument, msg.into())
}

/// Runs `f`, translating errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> TsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TsStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p.downcast_ref::<&str>().map(|s| s.to_string()).or_else(|| p.downcast_ref::<String>().cloned());
            set_error(format!("panic: {}", msg.unwrap_or_else(|| "unknown".into())));
            TsStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(invalid(format!("{what} is NULL")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid(format!("{what} is not UTF-8")))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| invalid(format!("{what} is NULL")))
}

unsafe fn slice_arg<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], Fail> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(invalid(format!("{what} is NULL")));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("nul bytes removed").into_raw()
}

fn outcome(code: u32) -> Result<Outcome, Fail> {
    match code {
        0 => Ok(Outcome::Productivity),
        1 => Ok(Outcome::TeamSize),
        c => Err(invalid(format!("outcome {c} (0 = productivity, 1 = team size)"))),
    }
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ts_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub extern "C" fn ts_clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn ts_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be NULL or a pointer obtained from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ts_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

// ---------------------------------------------------------------- config

/// Pipeline configuration.
pub struct TsConfig {
    inner: PipelineConfig,
}

/// Default configuration.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_config_new(out: *mut *mut TsConfig) -> TsStatus {
    guard(|| {
        *out_ptr(out, "out")? = Box::into_raw(Box::new(TsConfig { inner: PipelineConfig::default() }));
        Ok(())
    })
}

/// Configuration from TOML text. Relative paths stay relative to the process
/// working directory.
///
/// # Safety
/// `toml` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_config_from_toml(toml: *const c_char, out: *mut *mut TsConfig) -> TsStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let inner = PipelineConfig::from_toml(str_arg(toml, "toml")?)?;
        *out = Box::into_raw(Box::new(TsConfig { inner }));
        Ok(())
    })
}

/// Configuration file; relative paths resolve against its directory.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_config_load(path: *const c_char, out: *mut *mut TsConfig) -> TsStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let inner = PipelineConfig::load(&PathBuf::from(str_arg(path, "path")?))?;
        *out = Box::into_raw(Box::new(TsConfig { inner }));
        Ok(())
    })
}

/// Sets one key. `value` is a TOML value (`2019`, `0.1`, `[1, 2]`,
/// `"gbdt"`); text that does not parse as TOML is taken as a string.
///
/// # Safety
/// `cfg` must be a live handle; `key` and `value` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn ts_config_set(cfg: *mut TsConfig, key: *const c_char, value: *const c_char) -> TsStatus {
    guard(|| {
        let cfg = out_ptr(cfg, "cfg")?;
        let key = str_arg(key, "key")?;
        let value = str_arg(value, "value")?;
        let parsed: toml::Value = match toml::from_str::<toml::Table>(&format!("v = {value}")) {
            Ok(mut t) => t.remove("v").expect("key present"),
            Err(_) => toml::Value::String(value.to_string()),
        };
        let mut table = toml::Table::try_from(&cfg.inner).map_err(|e| Fail(TsStatus::InvalidConfig, e.to_string()))?;
        table.insert(key.to_string(), parsed);
        cfg.inner = table.try_into().map_err(|e: toml::de::Error| Fail(TsStatus::InvalidConfig, format!("{key}: {e}")))?;
        Ok(())
    })
}

/// Checks the configuration invariants.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ts_config_validate(cfg: *const TsConfig) -> TsStatus {
    guard(|| {
        let cfg = cfg.as_ref().ok_or_else(|| invalid("cfg is NULL"))?;
        cfg.inner.validate()?;
        Ok(())
    })
}

/// The configuration as TOML.
///
/// # Safety
/// `cfg` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_config_to_toml(cfg: *const TsConfig, out: *mut *mut c_char) -> TsStatus {
    guard(|| {
        let cfg = cfg.as_ref().ok_or_else(|| invalid("cfg is NULL"))?;
        *out_ptr(out, "out")? = owned_string(cfg.inner.to_toml());
        Ok(())
    })
}

/// # Safety
/// `cfg` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ts_config_free(cfg: *mut TsConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

// ---------------------------------------------------------------- runs

/// Manifest of a completed run.
pub struct TsManifest {
    inner: Manifest,
}

/// Runs every stage and writes the outputs and `manifest.json`.
///
/// # Safety
/// `cfg` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_run_pipeline(cfg: *const TsConfig, out: *mut *mut TsManifest) -> TsStatus {
    guard(|| {
        let cfg = cfg.as_ref().ok_or_else(|| invalid("cfg is NULL"))?;
        let out = out_ptr(out, "out")?;
        let inner = run_pipeline(cfg.inner.clone())?;
        *out = Box::into_raw(Box::new(TsManifest { inner }));
        Ok(())
    })
}

/// Number of files (inputs and outputs) recorded in the manifest.
///
/// # Safety
/// `m` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ts_manifest_file_count(m: *const TsManifest) -> usize {
    m.as_ref().map_or(0, |m| m.inner.files.len())
}

/// SHA-256 (hex) of a recorded file, by its manifest path.
///
/// # Safety
/// `m` must be a live handle; `path` NUL-terminated; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_manifest_digest(m: *const TsManifest, path: *const c_char, out: *mut *mut c_char) -> TsStatus {
    guard(|| {
        let m = m.as_ref().ok_or_else(|| invalid("manifest is NULL"))?;
        let path = str_arg(path, "path")?;
        let out = out_ptr(out, "out")?;
        let f = m.inner.file(path).ok_or_else(|| Fail(TsStatus::NotFound, format!("{path} not in manifest")))?;
        *out = owned_string(f.sha256.clone());
        Ok(())
    })
}

/// The manifest as JSON.
///
/// # Safety
/// `m` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_manifest_to_json(m: *const TsManifest, out: *mut *mut c_char) -> TsStatus {
    guard(|| {
        let m = m.as_ref().ok_or_else(|| invalid("manifest is NULL"))?;
        let json = serde_json::to_string_pretty(&m.inner).map_err(|e| Fail(TsStatus::StageFailed, e.to_string()))?;
        *out_ptr(out, "out")? = owned_string(json);
        Ok(())
    })
}

/// # Safety
/// `m` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ts_manifest_free(m: *mut TsManifest) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Result of an in-memory analysis (select through effects).
pub struct TsAnalysis {
    inner: Analysis,
}

/// Reads the configured inputs and estimates the effects without writing
/// files. The heterogeneity regressions are skipped.
///
/// # Safety
/// `cfg` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_analyze(cfg: *const TsConfig, out: *mut *mut TsAnalysis) -> TsStatus {
    guard(|| {
        let cfg = cfg.as_ref().ok_or_else(|| invalid("cfg is NULL"))?;
        let out = out_ptr(out, "out")?;
        cfg.inner.validate()?;
        let (inputs, _) = Inputs::load(&cfg.inner.events, &cfg.inner.profiles, &cfg.inner.languages)?;
        let inner = analyze(&inputs, &cfg.inner, false)?;
        *out = Box::into_raw(Box::new(TsAnalysis { inner }));
        Ok(())
    })
}

/// Average effect for an outcome (0 = productivity, 1 = team size) and month.
///
/// # Safety
/// `a` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_analysis_ate(a: *const TsAnalysis, outcome_code: u32, month: u32, out: *mut f64) -> TsStatus {
    guard(|| {
        let a = a.as_ref().ok_or_else(|| invalid("analysis is NULL"))?;
        let out = out_ptr(out, "out")?;
        let o = outcome(outcome_code)?;
        let s = a.inner.effects.summary(o, month).ok_or_else(|| Fail(TsStatus::NotFound, format!("no month {month}")))?;
        *out = s.ate;
        Ok(())
    })
}

/// KS p-value of effects vs test residuals for an outcome and month.
///
/// # Safety
/// `a` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_analysis_ks_p(a: *const TsAnalysis, outcome_code: u32, month: u32, out: *mut f64) -> TsStatus {
    guard(|| {
        let a = a.as_ref().ok_or_else(|| invalid("analysis is NULL"))?;
        let out = out_ptr(out, "out")?;
        let o = outcome(outcome_code)?;
        let s = a.inner.effects.summary(o, month).ok_or_else(|| Fail(TsStatus::NotFound, format!("no month {month}")))?;
        *out = s.distribution.ks.p_value;
        Ok(())
    })
}

/// Number of target teams with effects.
///
/// # Safety
/// `a` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ts_analysis_target_count(a: *const TsAnalysis) -> usize {
    a.as_ref().map_or(0, |a| a.inner.target.features.rows.len())
}

/// # Safety
/// `a` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ts_analysis_free(a: *mut TsAnalysis) {
    if !a.is_null() {
        drop(Box::from_raw(a));
    }
}

// ---------------------------------------------------------------- utilities

/// Writes a synthetic corpus (events, profiles, languages, ground truth) into
/// `dir`. `spec_toml` may be NULL for the default spec.
///
/// # Safety
/// `spec_toml` must be NULL or NUL-terminated; `dir` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ts_synth_write(spec_toml: *const c_char, seed: u64, dir: *const c_char) -> TsStatus {
    guard(|| {
        let spec: SyntheticSpec = if spec_toml.is_null() {
            SyntheticSpec::default()
        } else {
            toml::from_str(str_arg(spec_toml, "spec_toml")?).map_err(|e| Fail(TsStatus::InvalidConfig, e.to_string()))?
        };
        spec.validate().map_err(|e| Fail(TsStatus::InvalidConfig, e.to_string()))?;
        let dir = PathBuf::from(str_arg(dir, "dir")?);
        std::fs::create_dir_all(&dir).map_err(|e| Fail(TsStatus::StageFailed, format!("{}: {e}", dir.display())))?;
        let corpus = generate_synthetic(&spec, seed).map_err(|e| Fail(TsStatus::StageFailed, e.to_string()))?;
        corpus.write_to(&dir).map_err(|e| Fail(TsStatus::StageFailed, e.to_string()))?;
        Ok(())
    })
}

/// Split-conformal half-width `d` of `n` residuals at miscoverage `alpha`.
/// `d` is +infinity when there are too few residuals.
///
/// # Safety
/// `residuals` must point to `n` doubles; `out_d` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_conformal_halfwidth(residuals: *const f64, n: usize, alpha: f64, out_d: *mut f64) -> TsStatus {
    guard(|| {
        let r = slice_arg(residuals, n, "residuals")?;
        let out = out_ptr(out_d, "out_d")?;
        *out = conformal_interval(r, alpha).map_err(|e| invalid(e.to_string()))?.d;
        Ok(())
    })
}

/// Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
///
/// # Safety
/// `a`/`b` must point to `na`/`nb` doubles; outputs must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ts_ks_two_sample(
    a: *const f64,
    na: usize,
    b: *const f64,
    nb: usize,
    out_statistic: *mut f64,
    out_p_value: *mut f64,
) -> TsStatus {
    guard(|| {
        let a = slice_arg(a, na, "a")?;
        let b = slice_arg(b, nb, "b")?;
        let stat = out_ptr(out_statistic, "out_statistic")?;
        let p = out_ptr(out_p_value, "out_p_value")?;
        let r = ks_two_sample(a, b).map_err(|e| invalid(e.to_string()))?;
        *stat = r.statistic;
        *p = r.p_value;
        Ok(())
    })
}
