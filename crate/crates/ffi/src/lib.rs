//! C ABI for the tracking simulator.
//!
//! Everything crosses the boundary through opaque handles and status
//! codes; `cogradar_last_error_message` returns a thread-local description
//! of the most recent failure. The header is generated into
//! `include/cogradar.h` by the build script.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::ptr;

use cogradar::config::{ExperimentConfig, FilterName};
use cogradar::metrics::{monte_carlo_rmse, RmseCurve};
use cogradar::pac::RadarMode;
use cogradar::pica::{estimate_sources, fit, power_spectrum, DataMatrix, PicaModel};

/// Status code returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CogradarStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Utf8 = 3,
    Io = 4,
    Config = 5,
    Numerical = 6,
    Diverged = 7,
    BufferTooSmall = 8,
}

/// Radar operating mode.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CogradarMode {
    Cognitive = 0,
    Traditional = 1,
}

/// Tracking filter selection.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CogradarFilter {
    Ekf = 0,
    Ukf = 1,
    Ckf = 2,
}

/// Opaque experiment description (scenario, waveform library bounds,
/// selection policy, filter, mode).
pub struct CogradarScenario {
    config: ExperimentConfig,
}

/// Opaque Monte Carlo RMSE result.
pub struct CogradarRmse {
    curve: RmseCurve,
}

/// Opaque fitted source-separation model.
pub struct CogradarPica {
    model: PicaModel,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &cogradar::Error) -> CogradarStatus {
    use cogradar::Error::*;
    match err {
        InvalidState(_) | NumericalDegeneracy { .. } => CogradarStatus::Numerical,
        SimulationDiverged { .. } | AtStep { .. } | Harness(_) => CogradarStatus::Diverged,
        UnknownKeys(_) | InvalidField { .. } | Config(_) => CogradarStatus::Config,
        Io(_) => CogradarStatus::Io,
        _ => CogradarStatus::InvalidArgument,
    }
}

fn fail(err: &cogradar::Error) -> CogradarStatus {
    set_error(&err.to_string());
    status_of(err)
}

/// Message describing the most recent error on this thread. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cogradar_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static C string.
#[no_mangle]
pub extern "C" fn cogradar_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr() as *const c_char
}

/// Default experiment (the benchmark reentry scenario).
#[no_mangle]
pub extern "C" fn cogradar_scenario_default() -> *mut CogradarScenario {
    Box::into_raw(Box::new(CogradarScenario {
        config: ExperimentConfig::default(),
    }))
}

/// Load an experiment from a config file; returns NULL on failure (see
/// `cogradar_last_error_message`).
///
/// # Safety
/// `path` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cogradar_scenario_from_file(
    path: *const c_char,
) -> *mut CogradarScenario {
    if path.is_null() {
        set_error("path is NULL");
        return ptr::null_mut();
    }
    let path = match CStr::from_ptr(path).to_str() {
        Ok(s) => s,
        Err(_) => {
            set_error("path is not valid UTF-8");
            return ptr::null_mut();
        }
    };
    match cogradar::config::parse_config(Path::new(path)) {
        Ok(config) => Box::into_raw(Box::new(CogradarScenario { config })),
        Err(e) => {
            set_error(&e.to_string());
            ptr::null_mut()
        }
    }
}

/// # Safety
/// `scenario` must come from a `cogradar_scenario_*` constructor and not
/// have been freed.
#[no_mangle]
pub unsafe extern "C" fn cogradar_scenario_free(scenario: *mut CogradarScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cogradar_scenario_set_mode(
    scenario: *mut CogradarScenario,
    mode: CogradarMode,
) -> CogradarStatus {
    let Some(s) = scenario.as_mut() else {
        set_error("scenario is NULL");
        return CogradarStatus::NullPointer;
    };
    s.config.mode = match mode {
        CogradarMode::Cognitive => RadarMode::CognitiveRadar,
        CogradarMode::Traditional => RadarMode::TraditionalActiveRadar,
    };
    CogradarStatus::Ok
}

/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cogradar_scenario_set_filter(
    scenario: *mut CogradarScenario,
    filter: CogradarFilter,
) -> CogradarStatus {
    let Some(s) = scenario.as_mut() else {
        set_error("scenario is NULL");
        return CogradarStatus::NullPointer;
    };
    s.config.filter.name = match filter {
        CogradarFilter::Ekf => FilterName::Ekf,
        CogradarFilter::Ukf => FilterName::Ukf,
        CogradarFilter::Ckf => FilterName::Ckf,
    };
    CogradarStatus::Ok
}

/// Run the Monte Carlo RMSE experiment described by the scenario.
///
/// # Safety
/// `scenario` must be a live handle; `out` must point to writable storage
/// for one pointer.
#[no_mangle]
pub unsafe extern "C" fn cogradar_run_rmse(
    scenario: *const CogradarScenario,
    n_runs: usize,
    seed: u64,
    out: *mut *mut CogradarRmse,
) -> CogradarStatus {
    let Some(s) = scenario.as_ref() else {
        set_error("scenario is NULL");
        return CogradarStatus::NullPointer;
    };
    if out.is_null() {
        set_error("out is NULL");
        return CogradarStatus::NullPointer;
    }
    let lib = match s.config.build_library() {
        Ok(lib) => lib,
        Err(e) => return fail(&e),
    };
    let kind = s.config.filter.to_kind();
    match monte_carlo_rmse(
        &s.config.scenario,
        s.config.mode,
        &kind,
        &lib,
        &s.config.policy,
        n_runs,
        seed,
    ) {
        Ok(curve) => {
            *out = Box::into_raw(Box::new(CogradarRmse { curve }));
            CogradarStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// Number of time steps in the curve.
///
/// # Safety
/// `rmse` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cogradar_rmse_len(rmse: *const CogradarRmse) -> usize {
    rmse.as_ref().map_or(0, |r| r.curve.times.len())
}

/// Diverged-and-excluded run count.
///
/// # Safety
/// `rmse` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cogradar_rmse_divergences(rmse: *const CogradarRmse) -> usize {
    rmse.as_ref().map_or(0, |r| r.curve.divergences)
}

/// Copy the curve columns into caller-provided buffers of capacity `cap`
/// each; any of the destination pointers may be NULL to skip that column.
///
/// # Safety
/// Non-NULL destinations must have space for `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn cogradar_rmse_copy(
    rmse: *const CogradarRmse,
    times: *mut f64,
    rmse_altitude: *mut f64,
    rmse_velocity: *mut f64,
    cap: usize,
) -> CogradarStatus {
    let Some(r) = rmse.as_ref() else {
        set_error("rmse is NULL");
        return CogradarStatus::NullPointer;
    };
    let n = r.curve.times.len();
    if cap < n {
        set_error("destination capacity is below the curve length");
        return CogradarStatus::BufferTooSmall;
    }
    if !times.is_null() {
        ptr::copy_nonoverlapping(r.curve.times.as_ptr(), times, n);
    }
    if !rmse_altitude.is_null() {
        ptr::copy_nonoverlapping(r.curve.rmse_altitude.as_ptr(), rmse_altitude, n);
    }
    if !rmse_velocity.is_null() {
        ptr::copy_nonoverlapping(r.curve.rmse_velocity.as_ptr(), rmse_velocity, n);
    }
    CogradarStatus::Ok
}

/// # Safety
/// `rmse` must come from `cogradar_run_rmse` and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn cogradar_rmse_free(rmse: *mut CogradarRmse) {
    if !rmse.is_null() {
        drop(Box::from_raw(rmse));
    }
}

unsafe fn data_from_raw(
    data: *const f64,
    channels: usize,
    samples: usize,
) -> Result<DataMatrix, CogradarStatus> {
    if data.is_null() {
        set_error("data is NULL");
        return Err(CogradarStatus::NullPointer);
    }
    let slice = std::slice::from_raw_parts(data, channels * samples);
    // row-major input: channel i occupies samples [i*n, (i+1)*n)
    let matrix = nalgebra::DMatrix::from_fn(channels, samples, |i, j| slice[i * samples + j]);
    DataMatrix::new(matrix).map_err(|e| fail(&e))
}

/// Fit the noisy linear latent-variable model to a row-major
/// channels-by-samples matrix.
///
/// # Safety
/// `data` must point to `channels * samples` doubles; `out` must point to
/// writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn cogradar_pica_fit(
    data: *const f64,
    channels: usize,
    samples: usize,
    latent_dim: usize,
    out: *mut *mut CogradarPica,
) -> CogradarStatus {
    if out.is_null() {
        set_error("out is NULL");
        return CogradarStatus::NullPointer;
    }
    let matrix = match data_from_raw(data, channels, samples) {
        Ok(m) => m,
        Err(status) => return status,
    };
    match fit(&matrix, latent_dim) {
        Ok(model) => {
            *out = Box::into_raw(Box::new(CogradarPica { model }));
            CogradarStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// Estimated isotropic noise variance.
///
/// # Safety
/// `pica` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cogradar_pica_noise_variance(
    pica: *const CogradarPica,
    out: *mut f64,
) -> CogradarStatus {
    let Some(p) = pica.as_ref() else {
        set_error("pica is NULL");
        return CogradarStatus::NullPointer;
    };
    if out.is_null() {
        set_error("out is NULL");
        return CogradarStatus::NullPointer;
    }
    *out = p.model.noise_var;
    CogradarStatus::Ok
}

/// Latent dimension the model was fitted with.
///
/// # Safety
/// `pica` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cogradar_pica_latent_dim(pica: *const CogradarPica) -> usize {
    pica.as_ref().map_or(0, |p| p.model.latent_dim)
}

/// Copy the mixing matrix (row-major channels x latent_dim).
///
/// # Safety
/// `out` must have space for `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn cogradar_pica_mixing_copy(
    pica: *const CogradarPica,
    out: *mut f64,
    cap: usize,
) -> CogradarStatus {
    let Some(p) = pica.as_ref() else {
        set_error("pica is NULL");
        return CogradarStatus::NullPointer;
    };
    if out.is_null() {
        set_error("out is NULL");
        return CogradarStatus::NullPointer;
    }
    let (rows, cols) = p.model.mixing.shape();
    if cap < rows * cols {
        set_error("destination capacity is below channels * latent_dim");
        return CogradarStatus::BufferTooSmall;
    }
    for i in 0..rows {
        for j in 0..cols {
            *out.add(i * cols + j) = p.model.mixing[(i, j)];
        }
    }
    CogradarStatus::Ok
}

/// Reconstruct sources for a data matrix compatible with the fitted model
/// (row-major output, latent_dim x samples).
///
/// # Safety
/// `data` must hold `channels * samples` doubles; `out` must have space
/// for `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn cogradar_pica_sources(
    pica: *const CogradarPica,
    data: *const f64,
    channels: usize,
    samples: usize,
    out: *mut f64,
    cap: usize,
) -> CogradarStatus {
    let Some(p) = pica.as_ref() else {
        set_error("pica is NULL");
        return CogradarStatus::NullPointer;
    };
    if out.is_null() {
        set_error("out is NULL");
        return CogradarStatus::NullPointer;
    }
    let matrix = match data_from_raw(data, channels, samples) {
        Ok(m) => m,
        Err(status) => return status,
    };
    let sources = match estimate_sources(&p.model, &matrix) {
        Ok(s) => s,
        Err(e) => return fail(&e),
    };
    let (rows, cols) = sources.shape();
    if cap < rows * cols {
        set_error("destination capacity is below latent_dim * samples");
        return CogradarStatus::BufferTooSmall;
    }
    for i in 0..rows {
        for j in 0..cols {
            *out.add(i * cols + j) = sources[(i, j)];
        }
    }
    CogradarStatus::Ok
}

/// # Safety
/// `pica` must come from `cogradar_pica_fit` and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn cogradar_pica_free(pica: *mut CogradarPica) {
    if !pica.is_null() {
        drop(Box::from_raw(pica));
    }
}

/// Averaged one-sided periodogram. Writes `segment_length / 2 + 1` bins
/// and stores that count in `out_len`.
///
/// # Safety
/// `signal` must hold `signal_len` doubles; `out` must have space for
/// `out_cap` doubles; `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cogradar_power_spectrum(
    signal: *const f64,
    signal_len: usize,
    segment_length: usize,
    out: *mut f64,
    out_cap: usize,
    out_len: *mut usize,
) -> CogradarStatus {
    if signal.is_null() || out.is_null() || out_len.is_null() {
        set_error("signal/out/out_len is NULL");
        return CogradarStatus::NullPointer;
    }
    let samples = std::slice::from_raw_parts(signal, signal_len);
    let spectrum = match power_spectrum(samples, segment_length) {
        Ok(s) => s,
        Err(e) => return fail(&e),
    };
    if out_cap < spectrum.len() {
        set_error("destination capacity is below segment_length / 2 + 1");
        return CogradarStatus::BufferTooSmall;
    }
    ptr::copy_nonoverlapping(spectrum.as_ptr(), out, spectrum.len());
    *out_len = spectrum.len();
    CogradarStatus::Ok
}
