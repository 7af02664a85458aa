//! Waveform-agile radar tracking simulator.
//!
//! A reentry target falls through an exponential atmosphere while a radar
//! tracks it with a Gaussian Bayesian filter (EKF, UKF, or CKF). A
//! perception-action controller closes the loop: each cycle it scores the
//! transmit-waveform library by the posterior covariance each entry would
//! induce and transmits the best candidate, so the sensor adapts its
//! delay/Doppler accuracy trade-off to the tracking situation. A Monte
//! Carlo harness produces RMSE curves and posterior Cramer-Rao bounds for
//! comparing the adaptive ("cognitive") radar against a fixed-waveform
//! baseline, and a probabilistic-ICA module covers noisy linear source
//! separation for spectrum-sensing experiments.

pub mod cli;
pub mod config;
pub mod error;
pub mod filters;
pub mod metrics;
pub mod models;
pub mod pac;
pub mod pica;
pub mod waveform;

pub use error::{Error, Result};
pub use filters::{FilterKind, GaussianBelief, UkfParams};
pub use models::{Measurement, ScenarioConfig, StateVector};
pub use pac::{RadarMode, SelectionPolicy};
pub use waveform::{Waveform, WaveformLibrary};
