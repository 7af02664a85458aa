//! Transmit-waveform library and the map from a selected waveform to the
//! measurement-noise covariance.
//!
//! Waveforms are Gaussian-envelope linear-FM pulses parameterized by the
//! envelope length and the chirp (FM sweep) rate. The matched-filter
//! accuracy model below is what makes waveform agility matter: long pulses
//! resolve range rate at the expense of range and vice versa, and chirping
//! shears the ambiguity ellipse.

use nalgebra::Matrix2;

use crate::error::{Error, Result};

/// Speed of light in ft/s, matching the scenario's foot-based units.
pub const SPEED_OF_LIGHT_FT_S: f64 = 9.8357e8;

/// One transmit pulse: Gaussian envelope length and linear FM sweep rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waveform {
    /// Envelope length parameter (s).
    pub duration: f64,
    /// Chirp rate (Hz/s), signed.
    pub chirp_rate: f64,
}

impl Waveform {
    pub fn new(duration: f64, chirp_rate: f64) -> Self {
        Self {
            duration,
            chirp_rate,
        }
    }

    /// Positive duration and the positive-definiteness bound
    /// |chirp| * duration^2 < 1/2 of the noise map.
    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::InvalidWaveform(format!(
                "duration must be positive, got {}",
                self.duration
            )));
        }
        if !self.chirp_rate.is_finite() {
            return Err(Error::InvalidWaveform("chirp rate must be finite".into()));
        }
        if self.chirp_rate.abs() * self.duration * self.duration >= 0.5 {
            return Err(Error::InvalidWaveform(format!(
                "|chirp| * duration^2 = {} violates the < 1/2 bound",
                self.chirp_rate.abs() * self.duration * self.duration
            )));
        }
        Ok(())
    }
}

/// Range/range-rate error covariance of a matched-filter measurement made
/// with waveform `w` at linear SNR `snr` and carrier `carrier_freq`.
pub fn noise_covariance(w: &Waveform, snr: f64, carrier_freq: f64) -> Result<Matrix2<f64>> {
    w.validate()?;
    if !(snr > 0.0) || !(carrier_freq > 0.0) {
        return Err(Error::Input(format!(
            "snr and carrier_freq must be positive, got {snr}, {carrier_freq}"
        )));
    }
    let c2 = SPEED_OF_LIGHT_FT_S * SPEED_OF_LIGHT_FT_S;
    let lw = w.duration;
    let b = w.chirp_rate;
    let fc = carrier_freq;
    let r11 = c2 * lw * lw / 2.0;
    let r12 = -c2 * b * lw * lw / fc;
    let r22 = c2 / (2.0 * fc * fc) * (1.0 / (2.0 * lw * lw) + 2.0 * b * b * lw * lw);
    Ok(Matrix2::new(r11, r12, r12, r22) / snr)
}

/// Discrete grid of selectable waveforms plus the fixed entry used by
/// the traditional (non-adaptive) radar.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformLibrary {
    /// Ascending envelope lengths (s).
    pub duration_grid: Vec<f64>,
    /// Ascending requested chirp rates (Hz/s); stored entries may be
    /// clamped per-duration to keep the noise map positive definite.
    pub chirp_grid: Vec<f64>,
    /// Grid index transmitted by the traditional active radar.
    pub fixed_index: (usize, usize),
    entries: Vec<Waveform>,
}

impl WaveformLibrary {
    pub fn shape(&self) -> (usize, usize) {
        (self.duration_grid.len(), self.chirp_grid.len())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Waveform at duration index `i`, chirp index `j`.
    pub fn waveform(&self, i: usize, j: usize) -> &Waveform {
        &self.entries[i * self.chirp_grid.len() + j]
    }

    pub fn contains(&self, index: (usize, usize)) -> bool {
        index.0 < self.duration_grid.len() && index.1 < self.chirp_grid.len()
    }

    pub fn iter_indices(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let (ni, nj) = self.shape();
        (0..ni).flat_map(move |i| (0..nj).map(move |j| (i, j)))
    }
}

/// Grid bounds and counts used to build a [`WaveformLibrary`].
#[derive(Debug, Clone, PartialEq)]
pub struct LibraryParams {
    pub duration_min: f64,
    pub duration_max: f64,
    pub duration_count: usize,
    pub chirp_min: f64,
    pub chirp_max: f64,
    pub chirp_count: usize,
    /// Fixed entry for the traditional radar; defaults to the grid center.
    pub fixed_index: Option<(usize, usize)>,
}

impl Default for LibraryParams {
    fn default() -> Self {
        Self {
            duration_min: 1e-5,
            duration_max: 3e-4,
            duration_count: 30,
            chirp_min: -5e6,
            chirp_max: 5e6,
            chirp_count: 21,
            fixed_index: None,
        }
    }
}

fn uniform_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![0.5 * (lo + hi)];
    }
    let step = (hi - lo) / (count - 1) as f64;
    (0..count).map(|k| lo + step * k as f64).collect()
}

/// Build the uniform waveform grid, clamping chirp rates that would break
/// the noise map's positive-definiteness bound.
pub fn build_library(params: &LibraryParams) -> Result<WaveformLibrary> {
    if !(params.duration_min > 0.0 && params.duration_max >= params.duration_min) {
        return Err(Error::Config(format!(
            "waveform duration range [{}, {}] has no feasible entries",
            params.duration_min, params.duration_max
        )));
    }
    if params.chirp_max < params.chirp_min {
        return Err(Error::Config("chirp range is reversed".into()));
    }
    if params.duration_count < 1 || params.chirp_count < 1 {
        return Err(Error::Config("grid counts must be >= 1".into()));
    }
    let duration_grid = uniform_grid(params.duration_min, params.duration_max, params.duration_count);
    let chirp_grid = uniform_grid(params.chirp_min, params.chirp_max, params.chirp_count);

    let mut entries = Vec::with_capacity(duration_grid.len() * chirp_grid.len());
    let mut clamped = 0usize;
    for &lw in &duration_grid {
        let bound = 0.5 / (lw * lw);
        for &b in &chirp_grid {
            let stored = if b.abs() >= bound {
                clamped += 1;
                b.signum() * bound * (1.0 - 1e-6)
            } else {
                b
            };
            let w = Waveform::new(lw, stored);
            w.validate()?;
            entries.push(w);
        }
    }
    if clamped > 0 {
        log::warn!(
            "{clamped} waveform grid entries exceeded the |chirp|*duration^2 < 1/2 bound and were clamped"
        );
    }
    let fixed_index = params
        .fixed_index
        .unwrap_or(((duration_grid.len() - 1) / 2, (chirp_grid.len() - 1) / 2));
    if fixed_index.0 >= duration_grid.len() || fixed_index.1 >= chirp_grid.len() {
        return Err(Error::InvalidField {
            field: "fixed_index".into(),
            message: format!(
                "({}, {}) outside the {}x{} grid",
                fixed_index.0,
                fixed_index.1,
                duration_grid.len(),
                chirp_grid.len()
            ),
        });
    }
    Ok(WaveformLibrary {
        duration_grid,
        chirp_grid,
        fixed_index,
        entries,
    })
}
