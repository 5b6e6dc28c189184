//! C ABI for the rootloc engine.
//!
//! Every function returns an [`RlStatus`]; on failure a description is
//! available from [`rl_last_error`] on the same thread. Tables and results
//! are opaque heap objects released with their `_free` function. Strings
//! returned through `char **` out-parameters are owned by the caller and
//! released with [`rl_string_free`]; `const char *` returns are borrowed.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use rootloc::cli::{format_root_causes, Format};
use rootloc::evaluation::run_benchmark;
use rootloc::io::parse_instance;
use rootloc::synthgen::{write_dataset, DatasetSpec};
use rootloc::{localize, Error, LeafTable, LocalizerConfig, RootCauseSet};

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RlStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Malformed input file or element.
    Parse = 3,
    /// Invalid configuration or dataset spec.
    Config = 4,
    Io = 5,
    /// Actual and forecast totals are equal.
    NoAnomaly = 6,
    /// An index argument was out of range.
    OutOfRange = 7,
    /// Some instances of a benchmark failed; the scores are still written.
    Partial = 8,
    Internal = 9,
}

/// Localizer settings. Obtain defaults from [`rl_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RlConfig {
    pub risk_threshold: f64,
    pub pep_threshold: f64,
    pub prune_layers: u32,
    pub no_outlier_removal: bool,
    pub no_r1: bool,
    pub no_r2: bool,
    pub no_weights: bool,
    pub trim_k: u32,
    /// 0 means no cap beyond the number of leaves.
    pub max_iterations: u64,
}

/// Scores of one root cause.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct RlCause {
    pub ep: f64,
    pub risk: f64,
    pub r1: f64,
    pub r2: f64,
    pub layer: u32,
}

/// Opaque leaf table.
pub struct RlTable {
    table: LeafTable,
}

/// Opaque root-cause set.
pub struct RlResult {
    set: RootCauseSet,
    names: Vec<CString>,
    csv: String,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn status_of(e: &Error) -> RlStatus {
    match e {
        Error::Parse { .. }
        | Error::Schema(_)
        | Error::UnknownAttribute(_)
        | Error::UnknownValue { .. }
        | Error::DuplicateAttribute(_)
        | Error::MalformedElement(_)
        | Error::DimensionMismatch { .. }
        | Error::DuplicateLeaf(_)
        | Error::NegativeValue { .. }
        | Error::EmptyTable => RlStatus::Parse,
        Error::Config(_) | Error::Overflow | Error::UnknownInstance(_) => RlStatus::Config,
        Error::Io { .. } => RlStatus::Io,
        Error::NoOverallAnomaly(_) => RlStatus::NoAnomaly,
    }
}

/// Runs `f`, recording its error and converting panics.
fn guard(f: impl FnOnce() -> Result<(), (RlStatus, String)>) -> RlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            RlStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            RlStatus::Internal
        }
    }
}

fn lib_err(e: Error) -> (RlStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (RlStatus, String) {
    (RlStatus::NullArgument, format!("`{what}` is null"))
}

/// # Safety
/// `p` is null or a valid NUL-terminated string.
unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (RlStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (RlStatus::InvalidUtf8, format!("`{what}` is not UTF-8")))
}

fn config_from(c: &RlConfig) -> LocalizerConfig {
    LocalizerConfig {
        risk_threshold: c.risk_threshold,
        pep_threshold: c.pep_threshold,
        prune_layers: c.prune_layers as usize,
        no_outlier_removal: c.no_outlier_removal,
        no_r1: c.no_r1,
        no_r2: c.no_r2,
        no_weights: c.no_weights,
        trim_k: c.trim_k as usize,
        max_iterations: (c.max_iterations > 0).then_some(c.max_iterations as usize),
    }
}

/// # Safety
/// `cfg` is null or points to a valid [`RlConfig`].
unsafe fn config_arg(cfg: *const RlConfig) -> LocalizerConfig {
    if cfg.is_null() {
        LocalizerConfig::default()
    } else {
        config_from(&*cfg)
    }
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn rl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call on this thread.
#[no_mangle]
pub extern "C" fn rl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub extern "C" fn rl_config_default() -> RlConfig {
    let d = LocalizerConfig::default();
    RlConfig {
        risk_threshold: d.risk_threshold,
        pep_threshold: d.pep_threshold,
        prune_layers: d.prune_layers as u32,
        no_outlier_removal: d.no_outlier_removal,
        no_r1: d.no_r1,
        no_r2: d.no_r2,
        no_weights: d.no_weights,
        trim_k: d.trim_k as u32,
        max_iterations: 0,
    }
}

fn table_out(
    out: *mut *mut RlTable,
    load: impl FnOnce() -> rootloc::Result<LeafTable>,
) -> Result<(), (RlStatus, String)> {
    if out.is_null() {
        return Err(null("out"));
    }
    let table = load().map_err(lib_err)?;
    // SAFETY: checked non-null above; the caller provides writable storage.
    unsafe { *out = Box::into_raw(Box::new(RlTable { table })) };
    Ok(())
}

/// Reads an instance CSV file.
///
/// # Safety
/// `path` is a NUL-terminated string; `out` points to writable storage.
#[no_mangle]
pub unsafe extern "C" fn rl_table_from_csv_file(
    path: *const c_char,
    out: *mut *mut RlTable,
) -> RlStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        table_out(out, || rootloc::io::read_instance(Path::new(path), None))
    })
}

/// Parses instance CSV text held in memory.
///
/// # Safety
/// `text` is a NUL-terminated string; `out` points to writable storage.
#[no_mangle]
pub unsafe extern "C" fn rl_table_from_csv_str(
    text: *const c_char,
    out: *mut *mut RlTable,
) -> RlStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        table_out(out, || parse_instance(text.as_bytes(), "<string>", None))
    })
}

/// Number of leaves, or 0 for a null table.
///
/// # Safety
/// `table` is null or was returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rl_table_len(table: *const RlTable) -> u64 {
    table.as_ref().map_or(0, |t| t.table.len() as u64)
}

/// # Safety
/// `table` is null or was returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rl_table_free(table: *mut RlTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// Localizes the root causes of `table`. A null `cfg` selects the defaults.
///
/// # Safety
/// `table` is a live table, `cfg` is null or valid, `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn rl_localize(
    table: *const RlTable,
    cfg: *const RlConfig,
    out: *mut *mut RlResult,
) -> RlStatus {
    guard(|| {
        let t = table.as_ref().ok_or_else(|| null("table"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let set = localize(&t.table, &config_arg(cfg)).map_err(lib_err)?;
        let schema = t.table.schema();
        let names = set
            .causes
            .iter()
            .map(|c| CString::new(c.element.format(schema)).unwrap_or_default())
            .collect();
        let csv = format_root_causes(&set, schema, Format::Csv);
        *out = Box::into_raw(Box::new(RlResult { set, names, csv }));
        Ok(())
    })
}

/// Number of root causes, or 0 for a null result.
///
/// # Safety
/// `res` is null or a live result.
#[no_mangle]
pub unsafe extern "C" fn rl_result_len(res: *const RlResult) -> u64 {
    res.as_ref().map_or(0, |r| r.set.len() as u64)
}

/// Formatted element (`attr=value&...`) of root cause `index`, borrowed
/// from the result.
///
/// # Safety
/// `res` is a live result and `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn rl_result_element(
    res: *const RlResult,
    index: u64,
    out: *mut *const c_char,
) -> RlStatus {
    guard(|| {
        let r = res.as_ref().ok_or_else(|| null("res"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let name = r.names.get(index as usize).ok_or_else(|| {
            (RlStatus::OutOfRange, format!("index {index} of {}", r.names.len()))
        })?;
        *out = name.as_ptr();
        Ok(())
    })
}

/// Scores of root cause `index`.
///
/// # Safety
/// `res` is a live result and `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn rl_result_cause(
    res: *const RlResult,
    index: u64,
    out: *mut RlCause,
) -> RlStatus {
    guard(|| {
        let r = res.as_ref().ok_or_else(|| null("res"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let c = r.set.causes.get(index as usize).ok_or_else(|| {
            (RlStatus::OutOfRange, format!("index {index} of {}", r.set.len()))
        })?;
        *out = RlCause {
            ep: c.ep,
            risk: c.breakdown.risk,
            r1: c.breakdown.r1,
            r2: c.breakdown.r2,
            layer: c.layer as u32,
        };
        Ok(())
    })
}

/// Why the search stopped: `explained`, `no_candidate` or `iteration_cap`.
///
/// # Safety
/// `res` is null or a live result.
#[no_mangle]
pub unsafe extern "C" fn rl_result_termination(res: *const RlResult) -> *const c_char {
    let Some(r) = res.as_ref() else {
        return ptr::null();
    };
    let s: &'static str = match r.set.termination.as_str() {
        "explained" => "explained\0",
        "no_candidate" => "no_candidate\0",
        _ => "iteration_cap\0",
    };
    s.as_ptr().cast()
}

/// The result as CSV text (`element,risk,ep,layer,r1,r2`). Release with
/// [`rl_string_free`].
///
/// # Safety
/// `res` is a live result and `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn rl_result_to_csv(res: *const RlResult, out: *mut *mut c_char) -> RlStatus {
    guard(|| {
        let r = res.as_ref().ok_or_else(|| null("res"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let s = CString::new(r.csv.clone()).map_err(|e| (RlStatus::Internal, e.to_string()))?;
        *out = s.into_raw();
        Ok(())
    })
}

/// # Safety
/// `res` is null or was returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rl_result_free(res: *mut RlResult) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}

/// # Safety
/// `s` is null or was returned through a `char **` out-parameter of this
/// library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Writes a synthetic dataset for preset `S`, `L` or `H` into `out_dir`.
/// `instances = 0` keeps the preset's count.
///
/// # Safety
/// `preset` and `out_dir` are NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn rl_generate(
    preset: *const c_char,
    out_dir: *const c_char,
    instances: u64,
    seed: u64,
) -> RlStatus {
    guard(|| {
        let preset = str_arg(preset, "preset")?;
        let dir = str_arg(out_dir, "out_dir")?;
        let mut spec = DatasetSpec::preset(preset).map_err(lib_err)?;
        spec.seed = seed;
        if instances > 0 {
            spec.instances = instances as usize;
        }
        spec.validate().map_err(lib_err)?;
        write_dataset(&spec, Path::new(dir)).map_err(lib_err)?;
        Ok(())
    })
}

/// Runs and scores every instance of a dataset directory. Writes the
/// micro-averaged F1 and the number of failed instances; returns
/// [`RlStatus::Partial`] when some instances failed.
///
/// # Safety
/// `dataset_dir` is a NUL-terminated string, `cfg` is null or valid, and
/// the out pointers are null or writable.
#[no_mangle]
pub unsafe extern "C" fn rl_evaluate(
    dataset_dir: *const c_char,
    cfg: *const RlConfig,
    jobs: u32,
    f1_out: *mut f64,
    failures_out: *mut u64,
) -> RlStatus {
    let mut failures = 0;
    let status = guard(|| {
        let dir = str_arg(dataset_dir, "dataset_dir")?;
        let report =
            run_benchmark(Path::new(dir), &config_arg(cfg), jobs as usize, None).map_err(lib_err)?;
        if !f1_out.is_null() {
            *f1_out = report.f1;
        }
        if !failures_out.is_null() {
            *failures_out = report.failures as u64;
        }
        failures = report.failures;
        Ok(())
    });
    if status == RlStatus::Ok && failures > 0 {
        set_error(format!("{failures} instance(s) failed"));
        return RlStatus::Partial;
    }
    status
}
