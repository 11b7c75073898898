//! C ABI for the sfca library. Handles are opaque pointers owned by the
//! caller and released with the matching `_free` function; every fallible
//! call returns an `SfcaStatus` and writes results through out pointers.
//! Missing values cross the boundary as NaN.

use std::ffi::{c_char, CStr, CString};
use std::ptr;
use std::slice;

use sfca::decode::{decode_times, ScoreTrace};
use sfca::grid::SegmentGrid;
use sfca::learners::{fit, predict, Family, FittedModel, ModelSpec};
use sfca::smooth::garcia_smooth;
use sfca::trajectory::Activity;
use sfca::wavelet::Symlet;
use sfca::SfcaError;

/// Result codes for every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfcaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NoTransitionFound = 3,
    TooFewScores = 4,
    BufferTooSmall = 5,
    Failure = 6,
}

fn status_of(err: &SfcaError) -> SfcaStatus {
    match err {
        SfcaError::NoTransitionFound => SfcaStatus::NoTransitionFound,
        SfcaError::TooFewScores { .. } => SfcaStatus::TooFewScores,
        SfcaError::NegativePenalty(_)
        | SfcaError::InvalidModelSpec(_)
        | SfcaError::DimensionMismatch(_)
        | SfcaError::SeriesTooShort { .. }
        | SfcaError::InfeasibleWaveletLevel { .. } => SfcaStatus::InvalidArgument,
        _ => SfcaStatus::Failure,
    }
}

/// Opaque segment grid handle.
pub struct SfcaGrid(SegmentGrid);

/// Opaque fitted model handle.
pub struct SfcaModel(FittedModel);

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sfca_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Static human-readable text for a status code.
#[no_mangle]
pub extern "C" fn sfca_status_message(status: SfcaStatus) -> *const c_char {
    let text: &'static str = match status {
        SfcaStatus::Ok => "ok\0",
        SfcaStatus::NullPointer => "null pointer argument\0",
        SfcaStatus::InvalidArgument => "invalid argument\0",
        SfcaStatus::NoTransitionFound => "no transition found\0",
        SfcaStatus::TooFewScores => "too few usable scores\0",
        SfcaStatus::BufferTooSmall => "output buffer too small\0",
        SfcaStatus::Failure => "operation failed\0",
    };
    text.as_ptr() as *const c_char
}

/// Create a segment grid; returns NULL if the geometry is invalid
/// (segment count must divide 1440 minutes, offset must be in range).
#[no_mangle]
pub extern "C" fn sfca_grid_new(segments_per_day: usize, day_start_offset: usize) -> *mut SfcaGrid {
    match SegmentGrid::new(segments_per_day, day_start_offset) {
        Ok(grid) => Box::into_raw(Box::new(SfcaGrid(grid))),
        Err(_) => ptr::null_mut(),
    }
}

/// The default 96-segment grid with the 4 pm decode origin.
#[no_mangle]
pub extern "C" fn sfca_grid_default() -> *mut SfcaGrid {
    Box::into_raw(Box::new(SfcaGrid(SegmentGrid::default())))
}

/// Release a grid handle. NULL is ignored.
#[no_mangle]
pub extern "C" fn sfca_grid_free(grid: *mut SfcaGrid) {
    if !grid.is_null() {
        drop(unsafe { Box::from_raw(grid) });
    }
}

/// Penalized least-squares smoothing. `values` may contain NaN for
/// missing entries; `out` receives `len` smoothed values.
///
/// # Safety
/// `values` and `out` must point to `len` readable / writable doubles.
#[no_mangle]
pub unsafe extern "C" fn sfca_smooth(
    values: *const f64,
    len: usize,
    penalty: f64,
    robust: bool,
    out: *mut f64,
) -> SfcaStatus {
    if values.is_null() || out.is_null() {
        return SfcaStatus::NullPointer;
    }
    let series: Vec<Option<f64>> = slice::from_raw_parts(values, len)
        .iter()
        .map(|v| if v.is_nan() { None } else { Some(*v) })
        .collect();
    match garcia_smooth(&series, penalty, robust) {
        Ok(smoothed) => {
            ptr::copy_nonoverlapping(smoothed.as_ptr(), out, len);
            SfcaStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Wavelet compression to approximation coefficients. `symlet_order`
/// selects the wavelet (3 or 8). On success `*out_len` holds the
/// coefficient count, at most `out_capacity`.
///
/// # Safety
/// `series` must point to `len` doubles and `out` to `out_capacity`
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn sfca_wavelet_compress(
    series: *const f64,
    len: usize,
    symlet_order: u32,
    level: usize,
    out: *mut f64,
    out_capacity: usize,
    out_len: *mut usize,
) -> SfcaStatus {
    if series.is_null() || out.is_null() || out_len.is_null() {
        return SfcaStatus::NullPointer;
    }
    let wavelet = match symlet_order {
        3 => Symlet::Sym3,
        8 => Symlet::Sym8,
        _ => return SfcaStatus::InvalidArgument,
    };
    let input = slice::from_raw_parts(series, len);
    match sfca::features::wavelet_compress(input, wavelet, level) {
        Ok(coeffs) => {
            if coeffs.len() > out_capacity {
                return SfcaStatus::BufferTooSmall;
            }
            ptr::copy_nonoverlapping(coeffs.as_ptr(), out, coeffs.len());
            *out_len = coeffs.len();
            SfcaStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Decode per-segment classification scores into continuous event times
/// in minutes after midnight. `activity` is 0 for sleep, 1 for work;
/// `scores` holds one value per grid segment with NaN for missing.
///
/// # Safety
/// `scores` must point to one double per grid segment; out pointers must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn sfca_decode(
    grid: *const SfcaGrid,
    activity: u32,
    scores: *const f64,
    len: usize,
    out_start: *mut f64,
    out_stop: *mut f64,
    out_duration: *mut f64,
) -> SfcaStatus {
    if grid.is_null()
        || scores.is_null()
        || out_start.is_null()
        || out_stop.is_null()
        || out_duration.is_null()
    {
        return SfcaStatus::NullPointer;
    }
    let activity = match activity {
        0 => Activity::Sleep,
        1 => Activity::Work,
        _ => return SfcaStatus::InvalidArgument,
    };
    let trace = ScoreTrace {
        city_id: String::new(),
        year: 0,
        activity,
        scores: slice::from_raw_parts(scores, len)
            .iter()
            .map(|v| if v.is_nan() { None } else { Some(*v) })
            .collect(),
    };
    match decode_times(&trace, &(*grid).0) {
        Ok(times) => {
            *out_start = times.start_min;
            *out_stop = times.stop_min;
            *out_duration = times.duration_min;
            SfcaStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Fit a learner on a row-major `rows x cols` design. `family` is the
/// method label accepted by the CLI (`ols`, `ridge`, `lasso`, `r-tree`,
/// `r-tree(bg)`, `r-tree(bs)`, `c-tree(bg)`, `c-tree(bs)`, `logr(ridge)`,
/// `logr(lasso)`, `svm`). Returns NULL on error.
///
/// # Safety
/// `x` must point to `rows * cols` doubles, `y` to `rows` doubles, and
/// `family` to a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn sfca_model_fit(
    family: *const c_char,
    x: *const f64,
    rows: usize,
    cols: usize,
    y: *const f64,
) -> *mut SfcaModel {
    if family.is_null() || x.is_null() || y.is_null() {
        return ptr::null_mut();
    }
    let label = match CStr::from_ptr(family).to_str() {
        Ok(s) => s,
        Err(_) => return ptr::null_mut(),
    };
    let family = match Family::parse(label) {
        Some(f) => f,
        None => return ptr::null_mut(),
    };
    let flat = slice::from_raw_parts(x, rows * cols);
    let design: Vec<Vec<f64>> = flat.chunks(cols).map(|c| c.to_vec()).collect();
    let targets = slice::from_raw_parts(y, rows).to_vec();
    let names: Vec<String> = (1..=cols).map(|j| format!("f{}", j)).collect();
    match fit(&ModelSpec::new(family), &design, &targets, None, &names) {
        Ok(model) => Box::into_raw(Box::new(SfcaModel(model))),
        Err(_) => ptr::null_mut(),
    }
}

/// Predict on a row-major `rows x cols` matrix with the same column
/// count the model was fitted on; `out` receives `rows` values.
///
/// # Safety
/// `x` must point to `rows * cols` doubles and `out` to `rows` writable
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn sfca_model_predict(
    model: *const SfcaModel,
    x: *const f64,
    rows: usize,
    cols: usize,
    out: *mut f64,
) -> SfcaStatus {
    if model.is_null() || x.is_null() || out.is_null() {
        return SfcaStatus::NullPointer;
    }
    let flat = slice::from_raw_parts(x, rows * cols);
    let design: Vec<Vec<f64>> = flat.chunks(cols).map(|c| c.to_vec()).collect();
    match predict(&(*model).0, &design) {
        Ok(values) => {
            ptr::copy_nonoverlapping(values.as_ptr(), out, rows);
            SfcaStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Serialize a model to JSON. The returned string must be released with
/// `sfca_string_free`. Returns NULL on error.
#[no_mangle]
pub extern "C" fn sfca_model_to_json(model: *const SfcaModel) -> *mut c_char {
    if model.is_null() {
        return ptr::null_mut();
    }
    let model = unsafe { &(*model).0 };
    match model.save_json() {
        Ok(text) => CString::new(text)
            .map(CString::into_raw)
            .unwrap_or(ptr::null_mut()),
        Err(_) => ptr::null_mut(),
    }
}

/// Deserialize a model previously produced by `sfca_model_to_json`.
/// Returns NULL on error.
///
/// # Safety
/// `json` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn sfca_model_from_json(json: *const c_char) -> *mut SfcaModel {
    if json.is_null() {
        return ptr::null_mut();
    }
    let text = match CStr::from_ptr(json).to_str() {
        Ok(s) => s,
        Err(_) => return ptr::null_mut(),
    };
    match FittedModel::load_json(text) {
        Ok(model) => Box::into_raw(Box::new(SfcaModel(model))),
        Err(_) => ptr::null_mut(),
    }
}

/// Release a model handle. NULL is ignored.
#[no_mangle]
pub extern "C" fn sfca_model_free(model: *mut SfcaModel) {
    if !model.is_null() {
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Release a string returned by this library. NULL is ignored.
#[no_mangle]
pub extern "C" fn sfca_string_free(text: *mut c_char) {
    if !text.is_null() {
        drop(unsafe { CString::from_raw(text) });
    }
}
