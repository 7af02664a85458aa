//! Monte Carlo harness: RMSE curves, the recursive posterior Cramer-Rao
//! bound, and curve comparison tables.

use nalgebra::{Matrix2, Matrix3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::filters::FilterKind;
use crate::models::{
    measurement_jacobian, process_jacobian_substeps, ScenarioConfig, StateVector,
};
use crate::pac::{run_episode, EpisodeRecord, RadarMode, SelectionPolicy};
use crate::waveform::WaveformLibrary;

/// Per-step root-mean-square tracking error across Monte Carlo runs.
#[derive(Debug, Clone, PartialEq)]
pub struct RmseCurve {
    /// Measurement times (s).
    pub times: Vec<f64>,
    /// Altitude RMSE per step (ft).
    pub rmse_altitude: Vec<f64>,
    /// Velocity RMSE per step (ft/s).
    pub rmse_velocity: Vec<f64>,
    /// Runs that survived (diverged runs excluded).
    pub n_runs: usize,
    /// Diverged-and-excluded run count.
    pub divergences: usize,
    pub label: String,
}

/// Per-step lower bound on the achievable tracking error.
#[derive(Debug, Clone, PartialEq)]
pub struct PcrlbCurve {
    pub times: Vec<f64>,
    /// Altitude bound per step (ft).
    pub bound_altitude: Vec<f64>,
    /// Velocity bound per step (ft/s).
    pub bound_velocity: Vec<f64>,
    pub label: String,
}

/// Run `n_runs` independent episodes with seeds `seed0..seed0+n_runs`.
///
/// Results are ordered by run index, so any downstream fold is
/// schedule-independent regardless of how many workers execute the runs.
pub fn run_episodes(
    cfg: &ScenarioConfig,
    mode: RadarMode,
    kind: &FilterKind,
    lib: &WaveformLibrary,
    policy: &SelectionPolicy,
    n_runs: usize,
    seed0: u64,
) -> Vec<Result<EpisodeRecord>> {
    (0..n_runs)
        .into_par_iter()
        .map(|run| {
            let run_cfg = ScenarioConfig {
                seed: seed0.wrapping_add(run as u64),
                ..cfg.clone()
            };
            run_episode(&run_cfg, mode, kind, lib, policy)
        })
        .collect()
}

fn curve_label(mode: RadarMode, kind: &FilterKind) -> String {
    format!("{}-{}", mode.label(), kind.label())
}

/// Monte Carlo RMSE of altitude and velocity.
///
/// Diverged runs are excluded and counted; more than 10% divergences is a
/// harness error because silent exclusion would bias comparisons.
pub fn monte_carlo_rmse(
    cfg: &ScenarioConfig,
    mode: RadarMode,
    kind: &FilterKind,
    lib: &WaveformLibrary,
    policy: &SelectionPolicy,
    n_runs: usize,
    seed0: u64,
) -> Result<RmseCurve> {
    if n_runs < 1 {
        return Err(Error::Input("n_runs must be >= 1".into()));
    }
    cfg.validate()?;
    let episodes = run_episodes(cfg, mode, kind, lib, policy, n_runs, seed0);
    rmse_from_episodes(cfg, &episodes, curve_label(mode, kind))
}

/// Fold already-run episodes into an RMSE curve (deterministic over run
/// index ordering).
pub fn rmse_from_episodes(
    cfg: &ScenarioConfig,
    episodes: &[Result<EpisodeRecord>],
    label: String,
) -> Result<RmseCurve> {
    let n_runs = episodes.len();
    let steps = cfg.steps;
    let mut sq_alt = vec![0.0f64; steps];
    let mut sq_vel = vec![0.0f64; steps];
    let mut survivors = 0usize;
    let mut divergences = 0usize;
    for episode in episodes {
        match episode {
            Ok(record) => {
                if record.steps.len() != steps {
                    return Err(Error::Harness(format!(
                        "episode has {} steps, expected {steps}",
                        record.steps.len()
                    )));
                }
                survivors += 1;
                for (k, step) in record.steps.iter().enumerate() {
                    let ea = step.belief.mean[0] - step.truth.altitude;
                    let ev = step.belief.mean[1] - step.truth.velocity;
                    sq_alt[k] += ea * ea;
                    sq_vel[k] += ev * ev;
                }
            }
            Err(_) => divergences += 1,
        }
    }
    if divergences * 10 > n_runs {
        return Err(Error::Harness(format!(
            "{divergences} of {n_runs} runs diverged (> 10%)"
        )));
    }
    if survivors == 0 {
        return Err(Error::Harness("all runs diverged".into()));
    }
    let times = (1..=steps).map(|k| cfg.dt * k as f64).collect();
    Ok(RmseCurve {
        times,
        rmse_altitude: sq_alt
            .iter()
            .map(|s| (s / survivors as f64).sqrt())
            .collect(),
        rmse_velocity: sq_vel
            .iter()
            .map(|s| (s / survivors as f64).sqrt())
            .collect(),
        n_runs: survivors,
        divergences,
        label,
    })
}

/// Recursive Fisher-information sequence along one truth trajectory.
///
/// `truth` holds the initial state followed by the state after each step
/// (length steps+1); `noise_covs` holds the measurement noise covariance
/// applied at each step (length steps).
pub fn information_recursion(
    cfg: &ScenarioConfig,
    noise_covs: &[Matrix2<f64>],
    truth: &[StateVector],
) -> Result<Vec<Matrix3<f64>>> {
    if truth.len() != noise_covs.len() + 1 {
        return Err(Error::Alignment(format!(
            "truth trajectory has {} states for {} noise covariances",
            truth.len(),
            noise_covs.len()
        )));
    }
    let mut info = cfg
        .x0_est_cov
        .try_inverse()
        .ok_or_else(|| Error::NumericalDegeneracy {
            context: "initial covariance inversion".into(),
        })?;
    let q = regularized_process_noise(&cfg.process_noise);
    let mut out = Vec::with_capacity(noise_covs.len());
    for (k, r) in noise_covs.iter().enumerate() {
        let f = process_jacobian_substeps(&truth[k], cfg.dt, cfg.gamma, cfg.substeps)?;
        let h = measurement_jacobian(&truth[k + 1], cfg)?;
        let prior_cov = f
            * info
                .try_inverse()
                .ok_or_else(|| Error::NumericalDegeneracy {
                    context: format!("information matrix inversion at step {k}"),
                })?
            * f.transpose()
            + q;
        let predicted_info =
            prior_cov
                .try_inverse()
                .ok_or_else(|| Error::NumericalDegeneracy {
                    context: format!("predicted covariance inversion at step {k}"),
                })?;
        let r_inv = r.try_inverse().ok_or_else(|| Error::NumericalDegeneracy {
            context: format!("measurement noise inversion at step {k}"),
        })?;
        info = predicted_info + h.transpose() * r_inv * h;
        out.push(info);
    }
    Ok(out)
}

/// Process noise with the singular case regularized by 1e-12 on the
/// diagonal so the information recursion stays well posed.
fn regularized_process_noise(q: &Matrix3<f64>) -> Matrix3<f64> {
    if q.determinant().abs() < 1e-300 {
        q + Matrix3::identity() * 1e-12
    } else {
        *q
    }
}

/// Posterior Cramer-Rao bound along a single truth trajectory.
pub fn pcrlb_recursion(
    cfg: &ScenarioConfig,
    noise_covs: &[Matrix2<f64>],
    truth: &[StateVector],
) -> Result<PcrlbCurve> {
    let infos = information_recursion(cfg, noise_covs, truth)?;
    bounds_from_information(cfg, &infos, "pcrlb".to_string())
}

fn bounds_from_information(
    cfg: &ScenarioConfig,
    infos: &[Matrix3<f64>],
    label: String,
) -> Result<PcrlbCurve> {
    let mut bound_altitude = Vec::with_capacity(infos.len());
    let mut bound_velocity = Vec::with_capacity(infos.len());
    for (k, info) in infos.iter().enumerate() {
        let cov = info
            .try_inverse()
            .ok_or_else(|| Error::NumericalDegeneracy {
                context: format!("information matrix singular at step {k}"),
            })?;
        if cov[(0, 0)] < 0.0 || cov[(1, 1)] < 0.0 {
            return Err(Error::NumericalDegeneracy {
                context: format!("negative bound variance at step {k}"),
            });
        }
        bound_altitude.push(cov[(0, 0)].sqrt());
        bound_velocity.push(cov[(1, 1)].sqrt());
    }
    let times = (1..=infos.len()).map(|k| cfg.dt * k as f64).collect();
    Ok(PcrlbCurve {
        times,
        bound_altitude,
        bound_velocity,
        label,
    })
}

/// Bound for a Monte Carlo batch: per-run information recursions evaluated
/// on each run's truth and waveform schedule, averaged as information
/// matrices across runs, then inverted.
pub fn monte_carlo_pcrlb(
    cfg: &ScenarioConfig,
    episodes: &[Result<EpisodeRecord>],
    label: String,
) -> Result<PcrlbCurve> {
    let survivors: Vec<&EpisodeRecord> = episodes.iter().filter_map(|e| e.as_ref().ok()).collect();
    if survivors.is_empty() {
        return Err(Error::Harness("no surviving runs for the bound".into()));
    }
    let steps = cfg.steps;
    let mut sums: Vec<Matrix3<f64>> = vec![Matrix3::zeros(); steps];
    for record in &survivors {
        if record.steps.len() != steps {
            return Err(Error::Harness("episode length mismatch".into()));
        }
        let mut truth = Vec::with_capacity(steps + 1);
        truth.push(cfg.x0_true);
        truth.extend(record.steps.iter().map(|s| s.truth));
        let noise_covs: Vec<Matrix2<f64>> = record.steps.iter().map(|s| s.noise_cov).collect();
        let infos = information_recursion(cfg, &noise_covs, &truth)?;
        for (sum, info) in sums.iter_mut().zip(&infos) {
            *sum += info;
        }
    }
    let n = survivors.len() as f64;
    let averaged: Vec<Matrix3<f64>> = sums.into_iter().map(|m| m / n).collect();
    bounds_from_information(cfg, &averaged, label)
}

/// Relative ordering of one time-averaged curve against another.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveOrdering {
    Lower,
    Higher,
    Tie,
}

fn ordering(a: f64, b: f64) -> CurveOrdering {
    if a == b {
        CurveOrdering::Tie
    } else if a < b {
        CurveOrdering::Lower
    } else {
        CurveOrdering::Higher
    }
}

/// One pairwise comparison row: how curve `a` relates to curve `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePair {
    pub a: usize,
    pub b: usize,
    pub altitude: CurveOrdering,
    pub velocity: CurveOrdering,
}

/// Time-averaged RMSE per curve plus all pairwise ordering flags.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub labels: Vec<String>,
    pub avg_altitude: Vec<f64>,
    pub avg_velocity: Vec<f64>,
    pub pairs: Vec<CurvePair>,
}

/// Compare curves on a shared time axis.
pub fn compare_curves(curves: &[RmseCurve]) -> Result<ComparisonTable> {
    if curves.is_empty() {
        return Err(Error::Input("no curves to compare".into()));
    }
    let t0 = &curves[0].times;
    for c in curves {
        if c.times.len() != t0.len() || c.times.iter().zip(t0).any(|(a, b)| a != b) {
            return Err(Error::Alignment(format!(
                "curve `{}` is not on the shared time axis",
                c.label
            )));
        }
        if c.rmse_altitude.len() != t0.len() || c.rmse_velocity.len() != t0.len() {
            return Err(Error::Alignment(format!(
                "curve `{}` has mismatched column lengths",
                c.label
            )));
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let avg_altitude: Vec<f64> = curves.iter().map(|c| mean(&c.rmse_altitude)).collect();
    let avg_velocity: Vec<f64> = curves.iter().map(|c| mean(&c.rmse_velocity)).collect();
    let mut pairs = Vec::new();
    for a in 0..curves.len() {
        for b in (a + 1)..curves.len() {
            pairs.push(CurvePair {
                a,
                b,
                altitude: ordering(avg_altitude[a], avg_altitude[b]),
                velocity: ordering(avg_velocity[a], avg_velocity[b]),
            });
        }
    }
    Ok(ComparisonTable {
        labels: curves.iter().map(|c| c.label.clone()).collect(),
        avg_altitude,
        avg_velocity,
        pairs,
    })
}
