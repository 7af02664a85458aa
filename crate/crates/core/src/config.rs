//! Flat dotted-key configuration parsing and echoing.
//!
//! The config format is TOML restricted to scalar values, arrays, and
//! nested arrays under dotted keys (e.g. `scenario.dt = 0.05`). Every key
//! is optional; an empty file yields the full default experiment. Unknown
//! keys are an error so typos cannot silently fall back to defaults. The
//! echoed effective config is itself a valid config that reproduces the
//! same experiment.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::filters::{FilterKind, UkfParams};
use crate::models::{ScenarioConfig, StateVector};
use crate::pac::{CostCriterion, RadarMode, SelectionPolicy};
use crate::waveform::{build_library, LibraryParams, WaveformLibrary};

/// Which filter the scenario runs (UKF parameters kept separately so they
/// survive config round-trips regardless of the selected kind).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterName {
    Ekf,
    Ukf,
    Ckf,
}

impl FilterName {
    pub fn label(&self) -> &'static str {
        match self {
            FilterName::Ekf => "ekf",
            FilterName::Ukf => "ukf",
            FilterName::Ckf => "ckf",
        }
    }
}

/// Filter selection plus UKF tuning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterConfig {
    pub name: FilterName,
    pub ukf: UkfParams,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            name: FilterName::Ckf,
            ukf: UkfParams::default(),
        }
    }
}

impl FilterConfig {
    pub fn to_kind(&self) -> FilterKind {
        self.kind_of(self.name)
    }

    pub fn kind_of(&self, name: FilterName) -> FilterKind {
        match name {
            FilterName::Ekf => FilterKind::Ekf,
            FilterName::Ukf => FilterKind::Ukf(self.ukf),
            FilterName::Ckf => FilterKind::Ckf,
        }
    }
}

/// Options for the source-separation subcommand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PicaConfig {
    /// Latent dimension q.
    pub latent_dim: usize,
    /// Normalize each channel to unit variance before fitting.
    pub variance_normalize: bool,
    /// Segment length for per-channel power spectra; 0 disables.
    pub spectrum_segment: usize,
}

impl Default for PicaConfig {
    fn default() -> Self {
        Self {
            latent_dim: 1,
            variance_normalize: false,
            spectrum_segment: 0,
        }
    }
}

/// Everything a run needs: scenario, waveform grid, policy, filter, mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: ScenarioConfig,
    pub library: LibraryParams,
    pub policy: SelectionPolicy,
    pub filter: FilterConfig,
    pub mode: RadarMode,
    pub pica: PicaConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioConfig::default(),
            library: LibraryParams::default(),
            policy: SelectionPolicy::default(),
            filter: FilterConfig::default(),
            mode: RadarMode::CognitiveRadar,
            pica: PicaConfig::default(),
        }
    }
}

impl ExperimentConfig {
    /// Validate all parts and build the waveform library.
    pub fn build_library(&self) -> Result<WaveformLibrary> {
        self.scenario.validate()?;
        self.policy.validate()?;
        self.filter.ukf.validate()?;
        build_library(&self.library)
    }
}

/// Parse a config file; a missing `path` yields the defaults.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text)
}

/// Parse config text. Empty text is the default experiment.
pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    let table: toml::Table = text
        .parse()
        .map_err(|e| Error::Config(format!("toml syntax: {e}")))?;
    let mut flat = BTreeMap::new();
    flatten("", &toml::Value::Table(table), &mut flat)?;

    let mut cfg = ExperimentConfig::default();
    let mut unknown = Vec::new();
    for (key, value) in &flat {
        if !apply_key(&mut cfg, key, value)? {
            unknown.push(key.clone());
        }
    }
    if !unknown.is_empty() {
        return Err(Error::UnknownKeys(unknown));
    }
    // Resolve the fixed index now so the echoed config is explicit.
    let lib = cfg.build_library()?;
    cfg.library.fixed_index = Some(lib.fixed_index);
    Ok(cfg)
}

fn flatten(
    prefix: &str,
    value: &toml::Value,
    out: &mut BTreeMap<String, toml::Value>,
) -> Result<()> {
    match value {
        toml::Value::Table(t) => {
            for (k, v) in t {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, v, out)?;
            }
            Ok(())
        }
        other => {
            out.insert(prefix.to_string(), other.clone());
            Ok(())
        }
    }
}

fn bad(key: &str, message: impl Into<String>) -> Error {
    Error::InvalidField {
        field: key.to_string(),
        message: message.into(),
    }
}

fn as_f64(key: &str, v: &toml::Value) -> Result<f64> {
    match v {
        toml::Value::Float(f) => Ok(*f),
        toml::Value::Integer(i) => Ok(*i as f64),
        _ => Err(bad(key, "expected a number")),
    }
}

fn as_usize(key: &str, v: &toml::Value) -> Result<usize> {
    match v {
        toml::Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        _ => Err(bad(key, "expected a nonnegative integer")),
    }
}

fn as_u64(key: &str, v: &toml::Value) -> Result<u64> {
    match v {
        toml::Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        _ => Err(bad(key, "expected a nonnegative integer")),
    }
}

fn as_bool(key: &str, v: &toml::Value) -> Result<bool> {
    match v {
        toml::Value::Boolean(b) => Ok(*b),
        _ => Err(bad(key, "expected a boolean")),
    }
}

fn as_str<'v>(key: &str, v: &'v toml::Value) -> Result<&'v str> {
    match v {
        toml::Value::String(s) => Ok(s),
        _ => Err(bad(key, "expected a string")),
    }
}

fn as_vec3(key: &str, v: &toml::Value) -> Result<Vector3<f64>> {
    match v {
        toml::Value::Array(a) if a.len() == 3 => Ok(Vector3::new(
            as_f64(key, &a[0])?,
            as_f64(key, &a[1])?,
            as_f64(key, &a[2])?,
        )),
        _ => Err(bad(key, "expected an array of 3 numbers")),
    }
}

fn as_matrix3(key: &str, v: &toml::Value) -> Result<Matrix3<f64>> {
    match v {
        toml::Value::Array(rows) if rows.len() == 3 => {
            let mut m = Matrix3::zeros();
            for (i, row) in rows.iter().enumerate() {
                let r = as_vec3(key, row)?;
                for j in 0..3 {
                    m[(i, j)] = r[j];
                }
            }
            Ok(m)
        }
        _ => Err(bad(key, "expected 3 arrays of 3 numbers")),
    }
}

fn as_index2(key: &str, v: &toml::Value) -> Result<(usize, usize)> {
    match v {
        toml::Value::Array(a) if a.len() == 2 => {
            Ok((as_usize(key, &a[0])?, as_usize(key, &a[1])?))
        }
        _ => Err(bad(key, "expected an array of 2 indices")),
    }
}

fn state_from(key: &str, v: &toml::Value) -> Result<StateVector> {
    let x = as_vec3(key, v)?;
    Ok(StateVector::new(x[0], x[1], x[2]))
}

/// Apply one key; returns false when the key is not recognized.
fn apply_key(cfg: &mut ExperimentConfig, key: &str, v: &toml::Value) -> Result<bool> {
    let s = &mut cfg.scenario;
    match key {
        "scenario.gamma" => s.gamma = as_f64(key, v)?,
        "scenario.radar_horizontal" => s.radar_horizontal = as_f64(key, v)?,
        "scenario.radar_altitude" => s.radar_altitude = as_f64(key, v)?,
        "scenario.dt" => s.dt = as_f64(key, v)?,
        "scenario.steps" => s.steps = as_usize(key, v)?,
        "scenario.x0_true" => s.x0_true = state_from(key, v)?,
        "scenario.x0_est_mean" => s.x0_est_mean = state_from(key, v)?,
        "scenario.x0_est_cov" => s.x0_est_cov = as_matrix3(key, v)?,
        "scenario.process_noise" => s.process_noise = as_matrix3(key, v)?,
        "scenario.filter_process_noise" => s.filter_process_noise = as_matrix3(key, v)?,
        "scenario.snr" => s.snr = as_f64(key, v)?,
        "scenario.carrier_freq" => s.carrier_freq = as_f64(key, v)?,
        "scenario.seed" => s.seed = as_u64(key, v)?,
        "scenario.substeps" => s.substeps = as_usize(key, v)?,
        "scenario.range_dependent_snr" => s.range_dependent_snr = as_bool(key, v)?,
        "scenario.reference_range" => s.reference_range = as_f64(key, v)?,
        "scenario.sample_initial_estimate" => s.sample_initial_estimate = as_bool(key, v)?,
        "library.duration_min" => cfg.library.duration_min = as_f64(key, v)?,
        "library.duration_max" => cfg.library.duration_max = as_f64(key, v)?,
        "library.duration_count" => cfg.library.duration_count = as_usize(key, v)?,
        "library.chirp_min" => cfg.library.chirp_min = as_f64(key, v)?,
        "library.chirp_max" => cfg.library.chirp_max = as_f64(key, v)?,
        "library.chirp_count" => cfg.library.chirp_count = as_usize(key, v)?,
        "library.fixed_index" => cfg.library.fixed_index = Some(as_index2(key, v)?),
        "policy.window_radius" => cfg.policy.window_radius = as_usize(key, v)?,
        "policy.cost_weights" => cfg.policy.cost_weights = as_vec3(key, v)?,
        "policy.initial_index" => cfg.policy.initial_index = Some(as_index2(key, v)?),
        "policy.criterion" => {
            cfg.policy.criterion = match as_str(key, v)? {
                "weighted-trace" => CostCriterion::WeightedTrace,
                "entropy" => CostCriterion::Entropy,
                other => {
                    return Err(bad(
                        key,
                        format!("unknown criterion `{other}` (weighted-trace | entropy)"),
                    ))
                }
            }
        }
        "filter.kind" => {
            cfg.filter.name = match as_str(key, v)? {
                "ekf" => FilterName::Ekf,
                "ukf" => FilterName::Ukf,
                "ckf" => FilterName::Ckf,
                other => return Err(bad(key, format!("unknown filter `{other}` (ekf|ukf|ckf)"))),
            }
        }
        "filter.ukf_alpha" => cfg.filter.ukf.alpha = as_f64(key, v)?,
        "filter.ukf_beta" => cfg.filter.ukf.beta = as_f64(key, v)?,
        "filter.ukf_kappa" => cfg.filter.ukf.kappa = as_f64(key, v)?,
        "pac.mode" => {
            cfg.mode = match as_str(key, v)? {
                "cognitive" => RadarMode::CognitiveRadar,
                "traditional" => RadarMode::TraditionalActiveRadar,
                other => {
                    return Err(bad(
                        key,
                        format!("unknown mode `{other}` (cognitive | traditional)"),
                    ))
                }
            }
        }
        "pica.q" => cfg.pica.latent_dim = as_usize(key, v)?,
        "pica.variance_normalize" => cfg.pica.variance_normalize = as_bool(key, v)?,
        "pica.spectrum_segment" => cfg.pica.spectrum_segment = as_usize(key, v)?,
        _ => return Ok(false),
    }
    Ok(true)
}

fn fmt_f64(x: f64) -> String {
    // 17 significant digits round-trip any f64 exactly.
    format!("{x:.16e}")
}

fn fmt_vec3(v: &Vector3<f64>) -> String {
    format!("[{}, {}, {}]", fmt_f64(v[0]), fmt_f64(v[1]), fmt_f64(v[2]))
}

fn fmt_matrix3(m: &Matrix3<f64>) -> String {
    let row = |i: usize| {
        format!(
            "[{}, {}, {}]",
            fmt_f64(m[(i, 0)]),
            fmt_f64(m[(i, 1)]),
            fmt_f64(m[(i, 2)])
        )
    };
    format!("[{}, {}, {}]", row(0), row(1), row(2))
}

/// Render the effective config as flat dotted-key TOML. Feeding the
/// result back through [`parse_config_str`] reproduces the same
/// experiment.
pub fn echo_config(cfg: &ExperimentConfig) -> String {
    let s = &cfg.scenario;
    let mut out = String::new();
    let mut push = |k: &str, v: String| {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&v);
        out.push('\n');
    };
    push("scenario.gamma", fmt_f64(s.gamma));
    push("scenario.radar_horizontal", fmt_f64(s.radar_horizontal));
    push("scenario.radar_altitude", fmt_f64(s.radar_altitude));
    push("scenario.dt", fmt_f64(s.dt));
    push("scenario.steps", s.steps.to_string());
    push("scenario.x0_true", fmt_vec3(&s.x0_true.as_vector()));
    push("scenario.x0_est_mean", fmt_vec3(&s.x0_est_mean.as_vector()));
    push("scenario.x0_est_cov", fmt_matrix3(&s.x0_est_cov));
    push("scenario.process_noise", fmt_matrix3(&s.process_noise));
    push(
        "scenario.filter_process_noise",
        fmt_matrix3(&s.filter_process_noise),
    );
    push("scenario.snr", fmt_f64(s.snr));
    push("scenario.carrier_freq", fmt_f64(s.carrier_freq));
    push("scenario.seed", s.seed.to_string());
    push("scenario.substeps", s.substeps.to_string());
    push(
        "scenario.range_dependent_snr",
        s.range_dependent_snr.to_string(),
    );
    push("scenario.reference_range", fmt_f64(s.reference_range));
    push(
        "scenario.sample_initial_estimate",
        s.sample_initial_estimate.to_string(),
    );
    push("library.duration_min", fmt_f64(cfg.library.duration_min));
    push("library.duration_max", fmt_f64(cfg.library.duration_max));
    push(
        "library.duration_count",
        cfg.library.duration_count.to_string(),
    );
    push("library.chirp_min", fmt_f64(cfg.library.chirp_min));
    push("library.chirp_max", fmt_f64(cfg.library.chirp_max));
    push("library.chirp_count", cfg.library.chirp_count.to_string());
    if let Some((i, j)) = cfg.library.fixed_index {
        push("library.fixed_index", format!("[{i}, {j}]"));
    }
    push(
        "policy.window_radius",
        cfg.policy.window_radius.to_string(),
    );
    push("policy.cost_weights", fmt_vec3(&cfg.policy.cost_weights));
    if let Some((i, j)) = cfg.policy.initial_index {
        push("policy.initial_index", format!("[{i}, {j}]"));
    }
    push(
        "policy.criterion",
        format!(
            "\"{}\"",
            match cfg.policy.criterion {
                CostCriterion::WeightedTrace => "weighted-trace",
                CostCriterion::Entropy => "entropy",
            }
        ),
    );
    push("filter.kind", format!("\"{}\"", cfg.filter.name.label()));
    push("filter.ukf_alpha", fmt_f64(cfg.filter.ukf.alpha));
    push("filter.ukf_beta", fmt_f64(cfg.filter.ukf.beta));
    push("filter.ukf_kappa", fmt_f64(cfg.filter.ukf.kappa));
    push("pac.mode", format!("\"{}\"", cfg.mode.label()));
    push("pica.q", cfg.pica.latent_dim.to_string());
    push(
        "pica.variance_normalize",
        cfg.pica.variance_normalize.to_string(),
    );
    push(
        "pica.spectrum_segment",
        cfg.pica.spectrum_segment.to_string(),
    );
    out
}
