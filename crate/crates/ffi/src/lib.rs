//! C ABI over the h2grid simulator.
//!
//! Objects cross the boundary as opaque handles created by `*_new` / `*_from_*`
//! functions and released by the matching `*_free`. Every fallible call
//! returns an [`H2Status`]; on failure the message is kept per thread and
//! read with [`h2grid_last_error`]. Panics never unwind into the caller.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use chrono::NaiveDate;
use h2grid::cli::{evaluate, Experiment};
use h2grid::grid::ScenarioSeries;
use h2grid::io::{parse_timeseries_csv, RunConfig};
use h2grid::oco::bench_regret;
use h2grid::sim::{results_csv, synthetic_year, MethodKind, RolloutResult, SynthConfig};
use h2grid::Error;

/// Result of a call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum H2Status {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// An argument was out of range or not valid UTF-8.
    InvalidArgument = 2,
    /// Bad input data, configuration or file.
    Data = 3,
    /// The optimizer failed or a program was infeasible.
    Solver = 4,
    /// Internal panic; the handle involved should be freed and not reused.
    Panic = 5,
}

/// Parsed run configuration.
pub struct H2Config {
    inner: RunConfig,
}

/// Evaluation time series.
pub struct H2Scenario {
    inner: ScenarioSeries,
}

/// Outcome of a method comparison.
pub struct H2Results {
    inner: Vec<RolloutResult>,
}

/// Practical totals of one method.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct H2Summary {
    /// 0 to 4 for M0 to M4.
    pub method: u32,
    pub cost_usd: f64,
    pub diesel_mwh: f64,
    pub loss_of_load_mwh: f64,
    /// NaN for methods without a reference trajectory.
    pub rmse_pct: f64,
    pub step_ms: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct H2RegretPoint {
    pub horizon: u64,
    pub regret: f64,
    pub path_length: f64,
    pub violation: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Fail(H2Status, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match e.exit_code() {
            4 => H2Status::Solver,
            _ => H2Status::Data,
        };
        Fail(status, e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(H2Status::NullPointer, format!("`{what}` is null"))
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(H2Status::InvalidArgument, msg.into())
}

/// Runs `f`, recording its error or panic for [`h2grid_last_error`].
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> H2Status {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            clear_error();
            H2Status::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            H2Status::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid(format!("`{what}` is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message of the last failed call on this thread, or null after a
/// success. The pointer stays valid until the next call on the thread.
#[no_mangle]
pub extern "C" fn h2grid_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn h2grid_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be null or come from a function of this library documented as
/// returning an owned string, and must not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn h2grid_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Default configuration.
///
/// # Safety
/// `out` must be a valid pointer to write the handle to.
#[no_mangle]
pub unsafe extern "C" fn h2grid_config_new(out: *mut *mut H2Config) -> H2Status {
    guard(|| put(out, H2Config { inner: RunConfig::default() }))
}

/// Configuration parsed from TOML text.
///
/// # Safety
/// `toml` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn h2grid_config_from_toml(toml: *const c_char, out: *mut *mut H2Config) -> H2Status {
    guard(|| {
        let text = str_arg(toml, "toml")?;
        put(out, H2Config { inner: RunConfig::from_toml(text)? })
    })
}

/// Configuration read from a TOML file; relative paths inside resolve
/// against the file's directory.
///
/// # Safety
/// `path` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn h2grid_config_load(path: *const c_char, out: *mut *mut H2Config) -> H2Status {
    guard(|| {
        let p = str_arg(path, "path")?;
        put(out, H2Config { inner: RunConfig::load(Path::new(p))? })
    })
}

/// Sets the tracking weight and kernel bandwidth of the reference-based
/// methods.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn h2grid_config_set_tracking(config: *mut H2Config, phi: f64, sigma: f64) -> H2Status {
    guard(|| {
        let c = config.as_mut().ok_or_else(|| null("config"))?;
        if !(phi >= 0.0 && phi.is_finite() && sigma > 0.0 && sigma.is_finite()) {
            return Err(invalid("phi must be non-negative and sigma positive"));
        }
        c.inner.methods.phi = phi;
        c.inner.methods.sigma = sigma;
        Ok(())
    })
}

/// The configuration as TOML; release with [`h2grid_string_free`].
///
/// # Safety
/// `config` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn h2grid_config_to_toml(config: *const H2Config, out: *mut *mut c_char) -> H2Status {
    guard(|| {
        let c = ref_arg(config, "config")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = CString::new(c.inner.to_toml()).map_err(|e| invalid(e.to_string()))?.into_raw();
        Ok(())
    })
}

/// # Safety
/// `config` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn h2grid_config_free(config: *mut H2Config) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Synthetic hourly scenario of `days` days.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn h2grid_scenario_synthetic(seed: u64, days: u32, out: *mut *mut H2Scenario) -> H2Status {
    guard(|| {
        if days == 0 {
            return Err(invalid("days must be positive"));
        }
        let s = synthetic_year(&SynthConfig { seed, days: days as usize, ..Default::default() })?;
        put(out, H2Scenario { inner: s })
    })
}

/// Scenario read from a CSV file and resampled to `resolution_minutes`.
///
/// # Safety
/// `path` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn h2grid_scenario_from_csv(path: *const c_char, resolution_minutes: u32, out: *mut *mut H2Scenario) -> H2Status {
    guard(|| {
        let p = str_arg(path, "path")?;
        put(out, H2Scenario { inner: parse_timeseries_csv(Path::new(p), resolution_minutes)? })
    })
}

/// Hourly scenario from three arrays of `len` values in kW, starting at
/// midnight on 1 January of `year`.
///
/// # Safety
/// Each array must hold `len` readable values; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn h2grid_scenario_from_arrays(
    load_kw: *const f64,
    solar_kw: *const f64,
    wind_kw: *const f64,
    len: usize,
    year: i32,
    out: *mut *mut H2Scenario,
) -> H2Status {
    guard(|| {
        if len == 0 {
            return Err(invalid("len must be positive"));
        }
        let load = slice_arg(load_kw, len, "load_kw")?.to_vec();
        let solar = slice_arg(solar_kw, len, "solar_kw")?.to_vec();
        let wind = slice_arg(wind_kw, len, "wind_kw")?.to_vec();
        let start = NaiveDate::from_ymd_opt(year, 1, 1)
            .and_then(|d| d.and_hms_opt(0, 0, 0))
            .ok_or_else(|| invalid(format!("invalid year {year}")))?;
        let s = ScenarioSeries::hourly("arrays", start, load, solar, wind)?;
        put(out, H2Scenario { inner: s })
    })
}

/// Number of time steps.
///
/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn h2grid_scenario_len(scenario: *const H2Scenario) -> usize {
    scenario.as_ref().map_or(0, |s| s.inner.len())
}

/// # Safety
/// `scenario` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn h2grid_scenario_free(scenario: *mut H2Scenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Runs the comma-separated `methods` (null for the configuration's list)
/// on `scenario`. M0 is always included as the baseline.
///
/// # Safety
/// `config` and `scenario` must be live handles, `methods` null or a
/// nul-terminated string, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn h2grid_compare(
    config: *const H2Config,
    scenario: *const H2Scenario,
    methods: *const c_char,
    out: *mut *mut H2Results,
) -> H2Status {
    guard(|| {
        let cfg = ref_arg(config, "config")?.inner.clone();
        let scen = ref_arg(scenario, "scenario")?.inner.clone();
        if out.is_null() {
            return Err(null("out"));
        }
        let kinds = if methods.is_null() {
            cfg.methods.list.clone()
        } else {
            str_arg(methods, "methods")?
                .split(',')
                .map(str::trim)
                .filter(|m| !m.is_empty())
                .map(MethodKind::parse)
                .collect::<Result<Vec<_>, _>>()?
        };
        if kinds.is_empty() {
            return Err(invalid("no methods given"));
        }
        let with_refs = kinds.iter().any(|k| k.uses_reference());
        let exp = Experiment::with_scenario(cfg, scen, with_refs)?;
        put(out, H2Results { inner: evaluate(&exp, &kinds)? })
    })
}

/// Number of methods in `results`.
///
/// # Safety
/// `results` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn h2grid_results_len(results: *const H2Results) -> usize {
    results.as_ref().map_or(0, |r| r.inner.len())
}

/// Summary of the `index`-th method.
///
/// # Safety
/// `results` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn h2grid_results_summary(results: *const H2Results, index: usize, out: *mut H2Summary) -> H2Status {
    guard(|| {
        let r = ref_arg(results, "results")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let x = r.inner.get(index).ok_or_else(|| invalid(format!("index {index} out of range ({} results)", r.inner.len())))?;
        *out = H2Summary {
            method: x.method as u32,
            cost_usd: x.practical.cost.total,
            diesel_mwh: x.practical.dg_mwh,
            loss_of_load_mwh: x.practical.lol_mwh,
            rmse_pct: x.rmse_pct.unwrap_or(f64::NAN),
            step_ms: x.step_ms,
        };
        Ok(())
    })
}

/// Copies the realized hydrogen content (kg) of the `index`-th method into
/// `buf`. `written` receives the trajectory length; when `capacity` is too
/// small nothing is copied and the call fails with `InvalidArgument`.
///
/// # Safety
/// `results` must be a live handle, `buf` writable for `capacity` values
/// and `written` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn h2grid_results_hydrogen(
    results: *const H2Results,
    index: usize,
    buf: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> H2Status {
    guard(|| {
        let r = ref_arg(results, "results")?;
        let written = written.as_mut().ok_or_else(|| null("written"))?;
        let x = r.inner.get(index).ok_or_else(|| invalid(format!("index {index} out of range ({} results)", r.inner.len())))?;
        *written = x.trajectory.len();
        if capacity < x.trajectory.len() {
            return Err(invalid(format!("buffer holds {capacity} values, {} needed", x.trajectory.len())));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        for (k, d) in x.trajectory.iter().enumerate() {
            *buf.add(k) = d.e_h;
        }
        Ok(())
    })
}

/// Result table as CSV; release with [`h2grid_string_free`]. Wall times are
/// included only when `timing` is true.
///
/// # Safety
/// `results` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn h2grid_results_csv(results: *const H2Results, timing: bool, out: *mut *mut c_char) -> H2Status {
    guard(|| {
        let r = ref_arg(results, "results")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = CString::new(results_csv(&r.inner, timing)).map_err(|e| invalid(e.to_string()))?.into_raw();
        Ok(())
    })
}

/// # Safety
/// `results` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn h2grid_results_free(results: *mut H2Results) {
    if !results.is_null() {
        drop(Box::from_raw(results));
    }
}

/// Dynamic regret of the expert ensemble on a synthetic convex stream for
/// each of the `n` horizons; `out` receives `n` points.
///
/// # Safety
/// `horizons` must hold `n` readable values and `out` room for `n` points.
#[no_mangle]
pub unsafe extern "C" fn h2grid_bench_regret(horizons: *const u64, n: usize, dim: u32, seed: u64, out: *mut H2RegretPoint) -> H2Status {
    guard(|| {
        let hs = slice_arg(horizons, n, "horizons")?;
        if n == 0 || dim == 0 || hs.contains(&0) {
            return Err(invalid("need at least one horizon, all positive, and dim > 0"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let hs: Vec<usize> = hs.iter().map(|&h| h as usize).collect();
        let pts = bench_regret(&hs, dim as usize, seed, &Default::default())?;
        for (k, p) in pts.iter().enumerate() {
            *out.add(k) = H2RegretPoint { horizon: p.horizon as u64, regret: p.regret, path_length: p.path_length, violation: p.violation };
        }
        Ok(())
    })
}
