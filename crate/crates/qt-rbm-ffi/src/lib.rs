//! C ABI for the qt-rbm inference library.
//!
//! Models are opaque handles created by `qtrbm_model_load` (or `_new`)
//! and released with `qtrbm_model_free`. Every fallible call returns a
//! `QtrbmStatus`; on failure, `qtrbm_last_error_message` returns a
//! thread-local NUL-terminated description valid until the next failing
//! call on the same thread.
//!
//! The generated header lives at `include/qtrbm.h`.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::path::Path;

use qt_rbm::model::{load_checkpoint, save_checkpoint, CheckpointParams, RbmParamsQt};
use qt_rbm::qtnn::{encode_evidence, forward, QueryMask};
use qt_rbm::QtError;

/// Opaque model handle.
pub struct QtrbmModel {
    params: CheckpointParams,
    qt: RbmParamsQt,
}

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QtrbmStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    IoError = 3,
    DataError = 4,
    SizeLimit = 5,
    NumericalError = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn fail(status: QtrbmStatus, message: &str) -> QtrbmStatus {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
    status
}

fn fail_with(err: &QtError) -> QtrbmStatus {
    let status = match err {
        QtError::Io { .. } => QtrbmStatus::IoError,
        QtError::SizeLimit(_) => QtrbmStatus::SizeLimit,
        QtError::Numerical(_) => QtrbmStatus::NumericalError,
        QtError::Data(_) => QtrbmStatus::DataError,
        _ => QtrbmStatus::InvalidArgument,
    };
    fail(status, &err.to_string())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qtrbm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message for the most recent failure on this thread. Never NULL;
/// the pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn qtrbm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

unsafe fn model_from_parts(
    v_dim: usize,
    h_dim: usize,
    w: *const f64,
    c_v: *const f64,
    c_h: *const f64,
    log_t: f64,
) -> Result<QtrbmModel, QtError> {
    let w = std::slice::from_raw_parts(w, h_dim * v_dim);
    let c_v = std::slice::from_raw_parts(c_v, v_dim);
    let c_h = std::slice::from_raw_parts(c_h, h_dim);
    let params = RbmParamsQt::from_flat(v_dim, h_dim, w.to_vec(), c_v.to_vec(), c_h.to_vec(), log_t)?;
    Ok(QtrbmModel { qt: params.clone(), params: CheckpointParams::Qt(params) })
}

/// Build a model from raw arrays: `w` is row-major `h_dim x v_dim`,
/// `c_v` has `v_dim` entries, `c_h` has `h_dim`, and `T = exp(log_t)`.
///
/// # Safety
/// `w`, `c_v`, `c_h` must point to arrays of the stated lengths and
/// `out` must be a valid destination pointer.
#[no_mangle]
pub unsafe extern "C" fn qtrbm_model_new(
    v_dim: usize,
    h_dim: usize,
    w: *const f64,
    c_v: *const f64,
    c_h: *const f64,
    log_t: f64,
    out: *mut *mut QtrbmModel,
) -> QtrbmStatus {
    if out.is_null() || w.is_null() || c_v.is_null() || c_h.is_null() {
        return fail(QtrbmStatus::NullArgument, "null argument to qtrbm_model_new");
    }
    match model_from_parts(v_dim, h_dim, w, c_v, c_h, log_t) {
        Ok(model) => {
            *out = Box::into_raw(Box::new(model));
            QtrbmStatus::Ok
        }
        Err(e) => fail_with(&e),
    }
}

/// Load a checkpoint file (either parameterization).
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` a valid
/// destination pointer.
#[no_mangle]
pub unsafe extern "C" fn qtrbm_model_load(
    path: *const c_char,
    out: *mut *mut QtrbmModel,
) -> QtrbmStatus {
    if path.is_null() || out.is_null() {
        return fail(QtrbmStatus::NullArgument, "null argument to qtrbm_model_load");
    }
    let Ok(path) = CStr::from_ptr(path).to_str() else {
        return fail(QtrbmStatus::InvalidArgument, "path is not valid UTF-8");
    };
    match load_checkpoint(Path::new(path)) {
        Ok(params) => {
            let qt = params.as_qt();
            *out = Box::into_raw(Box::new(QtrbmModel { params, qt }));
            QtrbmStatus::Ok
        }
        Err(e) => fail_with(&e),
    }
}

/// Write the model back out as a checkpoint file.
///
/// # Safety
/// `model` must come from this library and `path` must be a valid
/// NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn qtrbm_model_save(
    model: *const QtrbmModel,
    path: *const c_char,
) -> QtrbmStatus {
    if model.is_null() || path.is_null() {
        return fail(QtrbmStatus::NullArgument, "null argument to qtrbm_model_save");
    }
    let Ok(path) = CStr::from_ptr(path).to_str() else {
        return fail(QtrbmStatus::InvalidArgument, "path is not valid UTF-8");
    };
    match save_checkpoint(&(*model).params, Path::new(path)) {
        Ok(()) => QtrbmStatus::Ok,
        Err(e) => fail_with(&e),
    }
}

/// Release a model handle. NULL is a no-op.
///
/// # Safety
/// `model` must have been returned by a constructor of this library and
/// not freed before.
#[no_mangle]
pub unsafe extern "C" fn qtrbm_model_free(model: *mut QtrbmModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Visible and hidden unit counts.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qtrbm_model_dims(
    model: *const QtrbmModel,
    v_dim: *mut usize,
    h_dim: *mut usize,
) -> QtrbmStatus {
    if model.is_null() || v_dim.is_null() || h_dim.is_null() {
        return fail(QtrbmStatus::NullArgument, "null argument to qtrbm_model_dims");
    }
    *v_dim = (*model).params.v_dim();
    *h_dim = (*model).params.h_dim();
    QtrbmStatus::Ok
}

/// Answer one probabilistic query.
///
/// `v` holds `v_dim` evidence values in [0, 1] (entries under mask 0 are
/// ignored), `q` holds `v_dim` mask bits (1 = observed input, 0 = output
/// to predict). The inferred probability of 1 for every visible unit is
/// written to `v_hat` (`v_dim` entries); `h_hat` (`h_dim` entries) may be
/// NULL when hidden beliefs are not wanted. `n_layers` message-passing
/// layers are run (10 is the usual choice) with evidence clamp `clamp_l`
/// (use 20 unless you know better).
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn qtrbm_infer(
    model: *const QtrbmModel,
    v: *const f64,
    q: *const u8,
    n_layers: u32,
    clamp_l: f64,
    v_hat: *mut f64,
    h_hat: *mut f64,
) -> QtrbmStatus {
    if model.is_null() || v.is_null() || q.is_null() || v_hat.is_null() {
        return fail(QtrbmStatus::NullArgument, "null argument to qtrbm_infer");
    }
    let model = &*model;
    let v_dim = model.params.v_dim();
    let h_dim = model.params.h_dim();
    let v = std::slice::from_raw_parts(v, v_dim);
    let q = std::slice::from_raw_parts(q, v_dim);

    let mask = match QueryMask::new(q.to_vec()) {
        Ok(mask) => mask,
        Err(e) => return fail_with(&e),
    };
    let result = encode_evidence(v, &mask, clamp_l)
        .map(|u| u.with_h_dim(h_dim))
        .and_then(|u| forward(&model.qt, &u, n_layers as usize));
    match result {
        Ok((beliefs, _)) => {
            std::slice::from_raw_parts_mut(v_hat, v_dim)
                .copy_from_slice(beliefs.v_hat.as_slice().unwrap());
            if !h_hat.is_null() {
                std::slice::from_raw_parts_mut(h_hat, h_dim)
                    .copy_from_slice(beliefs.h_hat.as_slice().unwrap());
            }
            QtrbmStatus::Ok
        }
        Err(e) => fail_with(&e),
    }
}

/// Joint score `phi(v, h)` of a binary configuration;
/// `p(v, h)` is proportional to `exp(phi)`.
///
/// # Safety
/// `v` and `h` must point to `v_dim` / `h_dim` binary entries and `out`
/// must be valid.
#[no_mangle]
pub unsafe extern "C" fn qtrbm_energy(
    model: *const QtrbmModel,
    v: *const u8,
    h: *const u8,
    out: *mut f64,
) -> QtrbmStatus {
    if model.is_null() || v.is_null() || h.is_null() || out.is_null() {
        return fail(QtrbmStatus::NullArgument, "null argument to qtrbm_energy");
    }
    let model = &*model;
    let v = std::slice::from_raw_parts(v, model.params.v_dim());
    let h = std::slice::from_raw_parts(h, model.params.h_dim());
    match model.qt.energy(v, h) {
        Ok(phi) => {
            *out = phi;
            QtrbmStatus::Ok
        }
        Err(e) => fail_with(&e),
    }
}
