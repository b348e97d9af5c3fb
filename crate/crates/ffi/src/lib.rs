//! C ABI over asanakit.
//!
//! Models, profiles and correction results are opaque handles owned by the
//! caller and released with the matching `*_free`. Every function returns an
//! [`AsanaStatus`]; on failure the message is kept per thread and can be read
//! with [`asana_last_error`]. Landmarks cross the boundary as a flat array of
//! `x, y, confidence` triples.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use asanakit::classifiers::{load_model_file, ModelError, TrainedModel};
use asanakit::correction::{evaluate_pose, CorrectionError, CorrectionResult, PoseProfile};
use asanakit::geometry::extract_features;
use asanakit::skeleton::{Kind, LandmarkFrame};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsanaStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    VersionMismatch = 5,
    BadFrame = 6,
    Model = 7,
    BufferTooSmall = 8,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsanaKind {
    Hand = 0,
    Body = 1,
}

impl From<Kind> for AsanaKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Hand => AsanaKind::Hand,
            Kind::Body => AsanaKind::Body,
        }
    }
}

impl From<AsanaKind> for Kind {
    fn from(k: AsanaKind) -> Self {
        match k {
            AsanaKind::Hand => Kind::Hand,
            AsanaKind::Body => Kind::Body,
        }
    }
}

/// A trained classifier.
pub struct AsanaModel {
    inner: TrainedModel,
}

/// A pose profile.
pub struct AsanaProfile {
    inner: PoseProfile,
}

/// The outcome of checking one frame against a profile.
pub struct AsanaCorrection {
    inner: CorrectionResult,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

struct Failure(AsanaStatus, String);

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        let status = match &e {
            ModelError::Io(_) => AsanaStatus::Io,
            ModelError::VersionMismatch { .. } => AsanaStatus::VersionMismatch,
            ModelError::CorruptModel(_) => AsanaStatus::Parse,
            ModelError::LengthMismatch { .. } => AsanaStatus::BadFrame,
            _ => AsanaStatus::Model,
        };
        Failure(status, e.to_string())
    }
}

impl From<CorrectionError> for Failure {
    fn from(e: CorrectionError) -> Self {
        let status = match &e {
            CorrectionError::Io { .. } => AsanaStatus::Io,
            CorrectionError::Parse { .. } | CorrectionError::InvalidProfile { .. } => AsanaStatus::Parse,
            CorrectionError::VersionMismatch { .. } => AsanaStatus::VersionMismatch,
            CorrectionError::KindMismatch { .. } | CorrectionError::Frame(_) => AsanaStatus::BadFrame,
            _ => AsanaStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn fail(status: AsanaStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

/// Runs `f`, turning errors and panics into a status plus a stored message.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> AsanaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            AsanaStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
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
            AsanaStatus::Panic
        }
    }
}

unsafe fn path_arg(path: *const c_char) -> Result<PathBuf, Failure> {
    if path.is_null() {
        return Err(fail(AsanaStatus::NullArgument, "path is null"));
    }
    let s = CStr::from_ptr(path)
        .to_str()
        .map_err(|_| fail(AsanaStatus::InvalidArgument, "path is not valid UTF-8"))?;
    Ok(PathBuf::from(s))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| fail(AsanaStatus::NullArgument, format!("{what} is null")))
}

unsafe fn frame_arg(kind: Kind, landmarks: *const f64, len: usize) -> Result<LandmarkFrame, Failure> {
    if landmarks.is_null() {
        return Err(fail(AsanaStatus::NullArgument, "landmarks is null"));
    }
    let flat = std::slice::from_raw_parts(landmarks, len);
    LandmarkFrame::from_flat(kind, flat).map_err(|e| fail(AsanaStatus::BadFrame, e.to_string()))
}

/// Copies `s` NUL-terminated into `buf`. `needed` receives the full size
/// including the terminator, so callers can size a second attempt.
unsafe fn write_str(s: &str, buf: *mut c_char, cap: usize, needed: *mut usize) -> Result<(), Failure> {
    let n = s.len() + 1;
    if !needed.is_null() {
        *needed = n;
    }
    if buf.is_null() || cap < n {
        return Err(fail(AsanaStatus::BufferTooSmall, format!("buffer holds {cap} bytes, {n} needed")));
    }
    ptr::copy_nonoverlapping(s.as_ptr(), buf.cast::<u8>(), s.len());
    *buf.add(s.len()) = 0;
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn asana_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message (empty after a success).
///
/// # Safety
/// `buf` must point to `cap` writable bytes or be null; `needed` may be null.
#[no_mangle]
pub unsafe extern "C" fn asana_last_error(buf: *mut c_char, cap: usize, needed: *mut usize) -> AsanaStatus {
    let msg = LAST_ERROR.with(|e| e.borrow().clone());
    match catch_unwind(AssertUnwindSafe(|| write_str(&msg, buf, cap, needed))) {
        Ok(Ok(())) => AsanaStatus::Ok,
        Ok(Err(Failure(status, _))) => status,
        Err(_) => AsanaStatus::Panic,
    }
}

/// Loads a model file written by `asanakit train`.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn asana_model_load(path: *const c_char, out: *mut *mut AsanaModel) -> AsanaStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(AsanaStatus::NullArgument, "out is null"));
        }
        *out = ptr::null_mut();
        let model = load_model_file(path_arg(path)?)?;
        *out = Box::into_raw(Box::new(AsanaModel { inner: model }));
        Ok(())
    })
}

/// # Safety
/// `model` must come from [`asana_model_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn asana_model_free(model: *mut AsanaModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn asana_model_kind(model: *const AsanaModel, out: *mut AsanaKind) -> AsanaStatus {
    guard(|| {
        let m = ref_arg(model, "model")?;
        if out.is_null() {
            return Err(fail(AsanaStatus::NullArgument, "out is null"));
        }
        *out = m.inner.kind.into();
        Ok(())
    })
}

/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn asana_model_class_count(model: *const AsanaModel, out: *mut usize) -> AsanaStatus {
    guard(|| {
        let m = ref_arg(model, "model")?;
        if out.is_null() {
            return Err(fail(AsanaStatus::NullArgument, "out is null"));
        }
        *out = m.inner.n_classes();
        Ok(())
    })
}

/// Copies the name of class `index`.
///
/// # Safety
/// `model` must be a live handle; `buf` must point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn asana_model_class_name(
    model: *const AsanaModel,
    index: usize,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> AsanaStatus {
    guard(|| {
        let m = ref_arg(model, "model")?;
        let name = m
            .inner
            .class_names
            .get(index)
            .ok_or_else(|| fail(AsanaStatus::InvalidArgument, format!("class index {index} out of range")))?;
        write_str(name, buf, cap, needed)
    })
}

/// Classifies one frame of `len` values (`x, y, confidence` per landmark).
/// `label` receives the class index and `score` its score.
///
/// # Safety
/// `landmarks` must point to `len` readable doubles; `label` and `score`
/// must be writable (either may be null to skip it).
#[no_mangle]
pub unsafe extern "C" fn asana_model_predict(
    model: *const AsanaModel,
    landmarks: *const f64,
    len: usize,
    min_confidence: f64,
    label: *mut usize,
    score: *mut f64,
) -> AsanaStatus {
    guard(|| {
        let m = ref_arg(model, "model")?;
        let frame = frame_arg(m.inner.kind, landmarks, len)?;
        let fv = extract_features(&frame, m.inner.kind.topology(), min_confidence)
            .map_err(|e| fail(AsanaStatus::BadFrame, e.to_string()))?;
        let p = m.inner.predict(&fv)?;
        if !label.is_null() {
            *label = p.label;
        }
        if !score.is_null() {
            *score = p.scores[p.label];
        }
        Ok(())
    })
}

/// Loads a YAML pose profile.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn asana_profile_load(path: *const c_char, out: *mut *mut AsanaProfile) -> AsanaStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(AsanaStatus::NullArgument, "out is null"));
        }
        *out = ptr::null_mut();
        let profile = PoseProfile::load(path_arg(path)?)?;
        *out = Box::into_raw(Box::new(AsanaProfile { inner: profile }));
        Ok(())
    })
}

/// # Safety
/// `profile` must come from [`asana_profile_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn asana_profile_free(profile: *mut AsanaProfile) {
    if !profile.is_null() {
        drop(Box::from_raw(profile));
    }
}

/// Checks one frame against a profile. The frame is read with the
/// profile's landmark layout.
///
/// # Safety
/// `landmarks` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn asana_evaluate(
    profile: *const AsanaProfile,
    landmarks: *const f64,
    len: usize,
    min_confidence: f64,
    out: *mut *mut AsanaCorrection,
) -> AsanaStatus {
    guard(|| {
        let p = ref_arg(profile, "profile")?;
        if out.is_null() {
            return Err(fail(AsanaStatus::NullArgument, "out is null"));
        }
        *out = ptr::null_mut();
        let frame = frame_arg(p.inner.kind, landmarks, len)?;
        let result = evaluate_pose(&frame, &p.inner, min_confidence)?;
        *out = Box::into_raw(Box::new(AsanaCorrection { inner: result }));
        Ok(())
    })
}

/// # Safety
/// `correction` must come from [`asana_evaluate`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn asana_correction_free(correction: *mut AsanaCorrection) {
    if !correction.is_null() {
        drop(Box::from_raw(correction));
    }
}

/// `out` receives 1 if every constraint was met, else 0.
///
/// # Safety
/// `correction` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn asana_correction_is_correct(
    correction: *const AsanaCorrection,
    out: *mut i32,
) -> AsanaStatus {
    guard(|| {
        let c = ref_arg(correction, "correction")?;
        if out.is_null() {
            return Err(fail(AsanaStatus::NullArgument, "out is null"));
        }
        *out = i32::from(c.inner.correct);
        Ok(())
    })
}

/// Number of deviations.
///
/// # Safety
/// `correction` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn asana_correction_count(correction: *const AsanaCorrection, out: *mut usize) -> AsanaStatus {
    guard(|| {
        let c = ref_arg(correction, "correction")?;
        if out.is_null() {
            return Err(fail(AsanaStatus::NullArgument, "out is null"));
        }
        *out = c.inner.deviations.len();
        Ok(())
    })
}

/// Reads deviation `index`: its excess beyond tolerance and its message.
///
/// # Safety
/// `correction` must be a live handle; `excess` may be null; `buf` must
/// point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn asana_correction_get(
    correction: *const AsanaCorrection,
    index: usize,
    excess: *mut f64,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> AsanaStatus {
    guard(|| {
        let c = ref_arg(correction, "correction")?;
        let d = c
            .inner
            .deviations
            .get(index)
            .ok_or_else(|| fail(AsanaStatus::InvalidArgument, format!("deviation index {index} out of range")))?;
        if !excess.is_null() {
            *excess = d.excess;
        }
        write_str(&d.message, buf, cap, needed)
    })
}
