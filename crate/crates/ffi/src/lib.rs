//! C ABI for the operator-dynamics toolkit.
//!
//! The surface is deliberately narrow: an opaque catalog handle, scenario
//! execution returning JSON documents, and the expansion-table query. All
//! strings crossing the boundary are NUL-terminated UTF-8 owned by this
//! library; release them with [`wcop_string_free`]. Every entry point
//! catches panics and reports them as a status code; the most recent error
//! message is retrievable per thread via [`wcop_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use wcop::cli::Overrides;
use wcop::multiindex::MultiIndex;
use wcop::scenarios::{builtin_catalog, run_scenario, Scenario};

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WcopStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The scenario name does not refer to a catalog entry.
    UnknownScenario = 3,
    /// The overrides or index argument failed validation.
    InvalidArgument = 4,
    /// A diagnostic failed to evaluate.
    EvalError = 5,
    /// An internal panic was caught.
    Panic = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(text).ok();
    });
}

fn output_string(out: *mut *mut c_char, text: String) -> WcopStatus {
    let Ok(cstring) = CString::new(text) else {
        set_error("report contained an interior NUL byte");
        return WcopStatus::EvalError;
    };
    unsafe { *out = cstring.into_raw() };
    WcopStatus::Ok
}

/// An opaque handle to the built-in scenario catalog.
pub struct WcopCatalog {
    scenarios: Vec<Scenario>,
}

fn guarded<F: FnOnce() -> WcopStatus>(f: F) -> WcopStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            WcopStatus::Panic
        }
    }
}

unsafe fn read_utf8<'a>(ptr: *const c_char) -> Result<&'a str, WcopStatus> {
    if ptr.is_null() {
        set_error("null string argument");
        return Err(WcopStatus::NullArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        WcopStatus::InvalidUtf8
    })
}

fn parse_overrides(json: Option<&str>) -> Result<Overrides, WcopStatus> {
    match json {
        None => Ok(Overrides::default()),
        Some(text) => serde_json::from_str(text).map_err(|e| {
            set_error(format!("invalid overrides: {e}"));
            WcopStatus::InvalidArgument
        }),
    }
}

/// Builds the scenario catalog. Returns null only if construction panics.
#[no_mangle]
pub extern "C" fn wcop_catalog_new() -> *mut WcopCatalog {
    match catch_unwind(|| WcopCatalog {
        scenarios: builtin_catalog(),
    }) {
        Ok(catalog) => Box::into_raw(Box::new(catalog)),
        Err(_) => {
            set_error("internal panic while building the catalog");
            ptr::null_mut()
        }
    }
}

/// Releases a catalog handle. Null is ignored.
///
/// # Safety
/// `catalog` must be a pointer returned by [`wcop_catalog_new`] that has not
/// been freed yet.
#[no_mangle]
pub unsafe extern "C" fn wcop_catalog_free(catalog: *mut WcopCatalog) {
    if !catalog.is_null() {
        drop(Box::from_raw(catalog));
    }
}

/// Number of scenarios in the catalog; 0 for a null handle.
///
/// # Safety
/// `catalog` must be a live pointer from [`wcop_catalog_new`] or null.
#[no_mangle]
pub unsafe extern "C" fn wcop_catalog_len(catalog: *const WcopCatalog) -> usize {
    if catalog.is_null() {
        return 0;
    }
    (*catalog).scenarios.len()
}

/// Writes the name of scenario `index` to `out` (caller frees).
///
/// # Safety
/// `catalog` must be a live pointer from [`wcop_catalog_new`]; `out` must be
/// a valid location to store a string pointer.
#[no_mangle]
pub unsafe extern "C" fn wcop_catalog_name(
    catalog: *const WcopCatalog,
    index: usize,
    out: *mut *mut c_char,
) -> WcopStatus {
    guarded(|| {
        if catalog.is_null() || out.is_null() {
            set_error("null argument");
            return WcopStatus::NullArgument;
        }
        let scenarios = unsafe { &(*catalog).scenarios };
        let Some(scenario) = scenarios.get(index) else {
            set_error(format!("index {index} out of range"));
            return WcopStatus::InvalidArgument;
        };
        output_string(out, scenario.name.clone())
    })
}

/// Runs one scenario against its expectations and writes the JSON report to
/// `out` (caller frees). `overrides_json` may be null for defaults; it
/// accepts the same `overrides` object as the CLI configuration. The status
/// is `Ok` even when expectations fail -- the verdict is the report's
/// `all_pass` field.
///
/// # Safety
/// `catalog` must be a live pointer from [`wcop_catalog_new`]; `name` must
/// point to a NUL-terminated string; `overrides_json` must be null or a
/// NUL-terminated string; `out` must be valid for a store.
#[no_mangle]
pub unsafe extern "C" fn wcop_run_scenario(
    catalog: *const WcopCatalog,
    name: *const c_char,
    overrides_json: *const c_char,
    out: *mut *mut c_char,
) -> WcopStatus {
    guarded(|| {
        if catalog.is_null() || out.is_null() {
            set_error("null argument");
            return WcopStatus::NullArgument;
        }
        let name = match unsafe { read_utf8(name) } {
            Ok(s) => s,
            Err(status) => return status,
        };
        let overrides_text = if overrides_json.is_null() {
            None
        } else {
            match unsafe { read_utf8(overrides_json) } {
                Ok(s) => Some(s),
                Err(status) => return status,
            }
        };
        let overrides = match parse_overrides(overrides_text) {
            Ok(o) => o,
            Err(status) => return status,
        };
        let scenarios = unsafe { &(*catalog).scenarios };
        let Some(scenario) = scenarios.iter().find(|s| s.name == name) else {
            set_error(format!("unknown scenario `{name}`"));
            return WcopStatus::UnknownScenario;
        };
        let report = run_scenario(scenario, &overrides.run_params());
        match serde_json::to_string(&report) {
            Ok(text) => output_string(out, text),
            Err(e) => {
                set_error(format!("report serialization failed: {e}"));
                WcopStatus::EvalError
            }
        }
    })
}

/// Runs the whole catalog; the report is a JSON array of scenario reports.
///
/// # Safety
/// As for [`wcop_run_scenario`] without the name argument.
#[no_mangle]
pub unsafe extern "C" fn wcop_run_catalog(
    catalog: *const WcopCatalog,
    overrides_json: *const c_char,
    out: *mut *mut c_char,
) -> WcopStatus {
    guarded(|| {
        if catalog.is_null() || out.is_null() {
            set_error("null argument");
            return WcopStatus::NullArgument;
        }
        let overrides_text = if overrides_json.is_null() {
            None
        } else {
            match unsafe { read_utf8(overrides_json) } {
                Ok(s) => Some(s),
                Err(status) => return status,
            }
        };
        let overrides = match parse_overrides(overrides_text) {
            Ok(o) => o,
            Err(status) => return status,
        };
        let params = overrides.run_params();
        let scenarios = unsafe { &(*catalog).scenarios };
        let reports: Vec<_> = scenarios.iter().map(|s| run_scenario(s, &params)).collect();
        match serde_json::to_string(&reports) {
            Ok(text) => output_string(out, text),
            Err(e) => {
                set_error(format!("report serialization failed: {e}"));
                WcopStatus::EvalError
            }
        }
    })
}

/// Writes the derivative-of-composition term table for a comma-separated
/// multi-index (e.g. "2,1") as JSON to `out` (caller frees).
///
/// # Safety
/// `alpha_csv` must point to a NUL-terminated string; `out` must be valid
/// for a store.
#[no_mangle]
pub unsafe extern "C" fn wcop_expansion_table(
    alpha_csv: *const c_char,
    out: *mut *mut c_char,
) -> WcopStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null output argument");
            return WcopStatus::NullArgument;
        }
        let text = match unsafe { read_utf8(alpha_csv) } {
            Ok(s) => s,
            Err(status) => return status,
        };
        let parsed: Result<Vec<u32>, _> =
            text.split(',').map(|p| p.trim().parse::<u32>()).collect();
        let Ok(components) = parsed else {
            set_error(format!("invalid multi-index `{text}`"));
            return WcopStatus::InvalidArgument;
        };
        let alpha = MultiIndex::new(components);
        match wcop::smoothcalc::build_expansion(&alpha, alpha.dim()) {
            Ok(table) => match serde_json::to_string(&table) {
                Ok(json) => output_string(out, json),
                Err(e) => {
                    set_error(format!("serialization failed: {e}"));
                    WcopStatus::EvalError
                }
            },
            Err(e) => {
                set_error(e.to_string());
                WcopStatus::InvalidArgument
            }
        }
    })
}

/// The most recent error message on this thread (caller frees), or null.
#[no_mangle]
pub extern "C" fn wcop_last_error() -> *mut c_char {
    LAST_ERROR.with(|slot| match &*slot.borrow() {
        Some(message) => message.clone().into_raw(),
        None => ptr::null_mut(),
    })
}

/// Static, human-readable name of a status code.
#[no_mangle]
pub extern "C" fn wcop_status_name(status: WcopStatus) -> *const c_char {
    let name: &'static CStr = match status {
        WcopStatus::Ok => c"ok",
        WcopStatus::NullArgument => c"null argument",
        WcopStatus::InvalidUtf8 => c"invalid utf-8",
        WcopStatus::UnknownScenario => c"unknown scenario",
        WcopStatus::InvalidArgument => c"invalid argument",
        WcopStatus::EvalError => c"evaluation error",
        WcopStatus::Panic => c"panic",
    };
    name.as_ptr()
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn wcop_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr() as *const c_char
}

/// Releases a string produced by this library. Null is ignored.
///
/// # Safety
/// `s` must be a pointer previously returned by one of this library's
/// functions and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wcop_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    unsafe fn take_string(ptr: *mut c_char) -> String {
        assert!(!ptr.is_null());
        let text = CStr::from_ptr(ptr).to_str().unwrap().to_string();
        wcop_string_free(ptr);
        text
    }

    #[test]
    fn catalog_lifecycle_and_names() {
        let catalog = wcop_catalog_new();
        assert!(!catalog.is_null());
        unsafe {
            let len = wcop_catalog_len(catalog);
            assert!(len >= 8);
            let mut out: *mut c_char = ptr::null_mut();
            for i in 0..len {
                assert_eq!(wcop_catalog_name(catalog, i, &mut out), WcopStatus::Ok);
                let name = take_string(out);
                assert!(!name.is_empty());
            }
            assert_eq!(
                wcop_catalog_name(catalog, len, &mut out),
                WcopStatus::InvalidArgument
            );
            wcop_catalog_free(catalog);
        }
    }

    #[test]
    fn run_scenario_returns_json_report() {
        let catalog = wcop_catalog_new();
        unsafe {
            let name = CString::new("contraction-on-disk").unwrap();
            let overrides = CString::new(r#"{ "horizon": 64 }"#).unwrap();
            let mut out: *mut c_char = ptr::null_mut();
            let status =
                wcop_run_scenario(catalog, name.as_ptr(), overrides.as_ptr(), &mut out);
            assert_eq!(status, WcopStatus::Ok);
            let text = take_string(out);
            let value: serde_json::Value = serde_json::from_str(&text).unwrap();
            assert_eq!(value["all_pass"], serde_json::json!(true));
            wcop_catalog_free(catalog);
        }
    }

    #[test]
    fn unknown_scenario_sets_error() {
        let catalog = wcop_catalog_new();
        unsafe {
            let name = CString::new("missing").unwrap();
            let mut out: *mut c_char = ptr::null_mut();
            let status = wcop_run_scenario(catalog, name.as_ptr(), ptr::null(), &mut out);
            assert_eq!(status, WcopStatus::UnknownScenario);
            let message = take_string(wcop_last_error());
            assert!(message.contains("missing"));
            wcop_catalog_free(catalog);
        }
    }

    #[test]
    fn invalid_overrides_are_rejected() {
        let catalog = wcop_catalog_new();
        unsafe {
            let name = CString::new("dilation-2").unwrap();
            let overrides = CString::new(r#"{ "horizont": 3 }"#).unwrap();
            let mut out: *mut c_char = ptr::null_mut();
            let status =
                wcop_run_scenario(catalog, name.as_ptr(), overrides.as_ptr(), &mut out);
            assert_eq!(status, WcopStatus::InvalidArgument);
            wcop_catalog_free(catalog);
        }
    }

    #[test]
    fn expansion_table_json() {
        unsafe {
            let alpha = CString::new("2,1").unwrap();
            let mut out: *mut c_char = ptr::null_mut();
            assert_eq!(
                wcop_expansion_table(alpha.as_ptr(), &mut out),
                WcopStatus::Ok
            );
            let text = take_string(out);
            let value: serde_json::Value = serde_json::from_str(&text).unwrap();
            assert_eq!(value["alpha"], serde_json::json!([2, 1]));
            assert!(value["terms"].as_array().unwrap().len() > 1);

            let bad = CString::new("0,0").unwrap();
            assert_eq!(
                wcop_expansion_table(bad.as_ptr(), &mut out),
                WcopStatus::InvalidArgument
            );
        }
    }

    #[test]
    fn version_and_status_names_are_static() {
        unsafe {
            let version = CStr::from_ptr(wcop_version()).to_str().unwrap();
            assert_eq!(version, env!("CARGO_PKG_VERSION"));
            let name = CStr::from_ptr(wcop_status_name(WcopStatus::Ok));
            assert_eq!(name.to_str().unwrap(), "ok");
        }
    }
}
