//! C ABI over `cpmx-core`.
//!
//! Models are opaque heap handles. Every fallible call returns a
//! [`CpmxStatus`]; on failure the thread-local last error holds a JSON object
//! `{"error", "ids", "message"}` readable through [`cpmx_last_error`].
//! Strings handed out by this library must be released with
//! [`cpmx_string_free`], models with [`cpmx_model_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cpmx_core::config::count_configurations;
use cpmx_core::{
    apply_pattern, canonical_hash, derive_variant, export_dot, list_patterns, load_model, save_model, validate_model,
    Configuration, PatternId, ProcessModel,
};
use serde_json::json;

/// Opaque model handle.
pub struct CpmxModel(ProcessModel);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CpmxStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    /// A precondition, constraint or well-formedness check failed.
    Rejected = 4,
    UnknownPattern = 5,
    Panic = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(CpmxStatus, String, Vec<String>, String);

fn set_error(f: &Failure) {
    let text = json!({ "error": f.1, "ids": f.2, "message": f.3 }).to_string();
    let c = CString::new(text).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CpmxStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CpmxStatus::Ok,
        Ok(Err(fail)) => {
            set_error(&fail);
            fail.0
        }
        Err(_) => {
            set_error(&Failure(CpmxStatus::Panic, "Panic".into(), vec![], "internal panic".into()));
            CpmxStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(CpmxStatus::NullPointer, "NullPointer".into(), vec![], format!("`{what}` is null"))
}

unsafe fn model_ref<'a>(m: *const CpmxModel, what: &str) -> Result<&'a ProcessModel, Failure> {
    m.as_ref().map(|h| &h.0).ok_or_else(|| null(what))
}

unsafe fn text<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s).to_str().map_err(|e| {
        Failure(CpmxStatus::InvalidUtf8, "InvalidUtf8".into(), vec![], format!("`{what}`: {e}"))
    })
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    let c = CString::new(s)
        .map_err(|e| Failure(CpmxStatus::InvalidUtf8, "InvalidUtf8".into(), vec![], e.to_string()))?;
    *out = c.into_raw();
    Ok(())
}

unsafe fn put_model(out: *mut *mut CpmxModel, m: ProcessModel) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(CpmxModel(m)));
    Ok(())
}

fn parse_json(s: &str, what: &str) -> Result<serde_json::Value, Failure> {
    serde_json::from_str(s).map_err(|e| Failure(CpmxStatus::ParseError, "ParseError".into(), vec![], format!("{what}: {e}")))
}

/// Parses a model from `len` bytes of JSON.
///
/// # Safety
/// `bytes` must point to `len` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cpmx_model_load(bytes: *const u8, len: usize, out: *mut *mut CpmxModel) -> CpmxStatus {
    guard(|| {
        if bytes.is_null() {
            return Err(null("bytes"));
        }
        let slice = std::slice::from_raw_parts(bytes, len);
        let m = load_model(slice)
            .map_err(|e| Failure(CpmxStatus::ParseError, e.name().into(), vec![], e.to_string()))?;
        put_model(out, m)
    })
}

/// Releases a model handle. Null is ignored.
///
/// # Safety
/// `model` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn cpmx_model_free(model: *mut CpmxModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Canonical JSON serialization.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cpmx_model_save(model: *const CpmxModel, out: *mut *mut c_char) -> CpmxStatus {
    guard(|| {
        let m = model_ref(model, "model")?;
        let bytes = save_model(m);
        put_string(out, String::from_utf8(bytes).expect("canonical JSON is UTF-8"))
    })
}

/// Hex SHA-256 of the canonical serialization.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cpmx_model_hash(model: *const CpmxModel, out: *mut *mut c_char) -> CpmxStatus {
    guard(|| put_string(out, canonical_hash(model_ref(model, "model")?)))
}

/// Writes the validation report as JSON to `out` and returns `Rejected`
/// when the model is not well-formed. The report is written either way.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cpmx_model_validate(model: *const CpmxModel, out: *mut *mut c_char) -> CpmxStatus {
    guard(|| {
        let report = validate_model(model_ref(model, "model")?);
        put_string(out, serde_json::to_string(&report).expect("report serializes"))?;
        if report.is_well_formed() {
            Ok(())
        } else {
            let mut ids: Vec<String> = report.violations.iter().flat_map(|v| v.elements.clone()).collect();
            ids.sort();
            ids.dedup();
            Err(Failure(CpmxStatus::Rejected, "InvalidModel".into(), ids, "model is not well-formed".into()))
        }
    })
}

/// Applies a concrete pattern (`"vpai"`, `"vrd"`, ...) with JSON parameters.
/// The input handle is left untouched; the result is a new handle.
///
/// # Safety
/// Pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn cpmx_apply_pattern(
    model: *const CpmxModel,
    pattern: *const c_char,
    params_json: *const c_char,
    out: *mut *mut CpmxModel,
) -> CpmxStatus {
    guard(|| {
        let m = model_ref(model, "model")?;
        let code = text(pattern, "pattern")?;
        let pid: PatternId = code
            .parse()
            .map_err(|_| Failure(CpmxStatus::UnknownPattern, "UnknownPattern".into(), vec![], code.to_owned()))?;
        let params = parse_json(text(params_json, "params_json")?, "params")?;
        let r = apply_pattern(m, pid, &params)
            .map_err(|e| Failure(CpmxStatus::Rejected, e.name().into(), e.ids(), e.to_string()))?;
        put_model(out, r.model)
    })
}

/// Number of valid configurations.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cpmx_count_configurations(model: *const CpmxModel, out: *mut u64) -> CpmxStatus {
    guard(|| {
        let n = count_configurations(model_ref(model, "model")?)
            .map_err(|e| Failure(CpmxStatus::Rejected, e.name().into(), e.ids(), e.to_string()))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = n;
        Ok(())
    })
}

/// Derives a plain model from a configuration given as a JSON object
/// mapping variation point ids to a variant id or null.
///
/// # Safety
/// Pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn cpmx_derive_variant(
    model: *const CpmxModel,
    config_json: *const c_char,
    out: *mut *mut CpmxModel,
) -> CpmxStatus {
    guard(|| {
        let m = model_ref(model, "model")?;
        let v = parse_json(text(config_json, "config_json")?, "configuration")?;
        let config: Configuration = serde_json::from_value(v)
            .map_err(|e| Failure(CpmxStatus::ParseError, "ParseError".into(), vec![], e.to_string()))?;
        let d = derive_variant(m, &config)
            .map_err(|e| Failure(CpmxStatus::Rejected, e.name().into(), e.ids(), e.to_string()))?;
        put_model(out, d)
    })
}

/// DOT rendering of the model.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cpmx_export_dot(model: *const CpmxModel, out: *mut *mut c_char) -> CpmxStatus {
    guard(|| put_string(out, export_dot(model_ref(model, "model")?)))
}

/// All pattern descriptors as a JSON array.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cpmx_patterns_json(out: *mut *mut c_char) -> CpmxStatus {
    guard(|| put_string(out, serde_json::to_string(&list_patterns()).expect("catalog serializes")))
}

/// Last error of the calling thread as a JSON object, or null if the most
/// recent call succeeded. Owned by the library; valid until the next call.
#[no_mangle]
pub extern "C" fn cpmx_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn cpmx_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
