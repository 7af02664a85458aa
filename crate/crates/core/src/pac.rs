//! Perception-action cycle controller: filter-based perception, expected
//! posterior cost as the feedback quantity, and windowed waveform
//! selection with working memory.
//!
//! Each cycle the controller predicts the belief one interval ahead,
//! scores every waveform in a small window around the previously selected
//! grid point by the posterior covariance its measurement would induce,
//! transmits the argmin, and folds the resulting noisy measurement back
//! into the belief.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2, Vector3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::filters::{
    posterior_covariance, predict, update, FilterKind, GaussianBelief,
};
use crate::models::{
    measure, simulate_trajectory, Measurement, RadarMeasurementModel, ReentryProcess,
    ScenarioConfig, StateVector,
};
use crate::waveform::{noise_covariance, Waveform, WaveformLibrary};

/// Operating mode: adaptive waveform selection or a fixed transmit entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadarMode {
    CognitiveRadar,
    TraditionalActiveRadar,
}

impl RadarMode {
    pub fn label(&self) -> &'static str {
        match self {
            RadarMode::CognitiveRadar => "cognitive",
            RadarMode::TraditionalActiveRadar => "traditional",
        }
    }
}

/// Scalar criterion applied to the candidate posterior covariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostCriterion {
    /// Sum of weighted posterior variances.
    WeightedTrace,
    /// Differential entropy of the posterior Gaussian.
    Entropy,
}

/// Waveform-selection policy: attention window size, per-state weights,
/// and the cost criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionPolicy {
    /// Half-width of the search window on each grid axis.
    pub window_radius: usize,
    /// Nonnegative per-state weights for the weighted-trace criterion.
    pub cost_weights: Vector3<f64>,
    pub criterion: CostCriterion,
    /// Where the working memory starts before the first cycle; `None`
    /// starts at the library's fixed entry.
    pub initial_index: Option<(usize, usize)>,
}

impl Default for SelectionPolicy {
    fn default() -> Self {
        // Weights are the inverse initial variances, so all three state
        // components contribute comparably.
        Self {
            window_radius: 2,
            cost_weights: Vector3::new(1e-6, 4e-6, 1e4),
            criterion: CostCriterion::WeightedTrace,
            initial_index: None,
        }
    }
}

impl SelectionPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.cost_weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidField {
                field: "cost_weights".into(),
                message: "must be nonnegative and finite".into(),
            });
        }
        if self.cost_weights.iter().all(|&w| w == 0.0) {
            return Err(Error::InvalidField {
                field: "cost_weights".into(),
                message: "must not all be zero".into(),
            });
        }
        Ok(())
    }
}

/// Working memory threaded through the loop: the current belief, the
/// previously transmitted grid index, and the cycle count.
#[derive(Debug, Clone)]
pub struct PacState {
    pub belief: GaussianBelief,
    pub last_index: (usize, usize),
    pub cycle: usize,
    pub mode: RadarMode,
}

/// SNR presented to the receiver, optionally falling off with range.
pub fn effective_snr(cfg: &ScenarioConfig, range: f64) -> f64 {
    if cfg.range_dependent_snr {
        let ratio = cfg.reference_range / range.max(1.0);
        cfg.snr * ratio.powi(4)
    } else {
        cfg.snr
    }
}

fn cost_of_covariance(cov: &DMatrix<f64>, policy: &SelectionPolicy) -> Result<f64> {
    match policy.criterion {
        CostCriterion::WeightedTrace => {
            if cov.nrows() != 3 {
                return Err(Error::Input(format!(
                    "weighted-trace cost expects a 3-state covariance, got {}",
                    cov.nrows()
                )));
            }
            Ok((0..3).map(|i| policy.cost_weights[i] * cov[(i, i)]).sum())
        }
        CostCriterion::Entropy => {
            let n = cov.nrows() as f64;
            let chol = cov
                .clone()
                .cholesky()
                .ok_or_else(|| Error::NumericalDegeneracy {
                    context: "entropy of a non-PD covariance".into(),
                })?;
            let log_det: f64 = (0..cov.nrows())
                .map(|i| chol.l_dirty()[(i, i)].ln())
                .sum::<f64>()
                * 2.0;
            Ok(0.5 * (n * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln() + log_det))
        }
    }
}

fn meas_noise_dmatrix(r: &Matrix2<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(2, 2, r.as_slice())
}

/// Expected cost of transmitting `w` next cycle, given the current belief.
///
/// One-step lookahead: predict the belief, then evaluate the posterior
/// covariance the update would yield under the waveform's noise map. The
/// result is exact because the Gaussian filters' posterior covariance does
/// not depend on the realized measurement.
pub fn expected_cost(
    belief: &GaussianBelief,
    w: &Waveform,
    kind: &FilterKind,
    cfg: &ScenarioConfig,
    policy: &SelectionPolicy,
) -> Result<f64> {
    let process = ReentryProcess::from_config(cfg);
    let q = DMatrix::from_column_slice(3, 3, cfg.filter_process_noise.as_slice());
    let predicted = predict(belief, kind, &process, &q)?;
    expected_cost_given_predicted(&predicted, w, kind, cfg, policy)
}

/// Expected-cost core shared with the selection loop, which predicts once
/// per cycle rather than once per candidate.
fn expected_cost_given_predicted(
    predicted: &GaussianBelief,
    w: &Waveform,
    kind: &FilterKind,
    cfg: &ScenarioConfig,
    policy: &SelectionPolicy,
) -> Result<f64> {
    let model = RadarMeasurementModel::from_config(cfg);
    let snr = filter_assumed_snr(cfg, predicted)?;
    let r = noise_covariance(w, snr, cfg.carrier_freq)?;
    let post = posterior_covariance(predicted, kind, &model, &meas_noise_dmatrix(&r))?;
    cost_of_covariance(&post, policy)
}

/// SNR the filter assumes for its update: evaluated at the predicted
/// range when range dependence is enabled, since the true range is not
/// available to the receiver.
fn filter_assumed_snr(cfg: &ScenarioConfig, predicted: &GaussianBelief) -> Result<f64> {
    if !cfg.range_dependent_snr {
        return Ok(cfg.snr);
    }
    let mean_state = StateVector::new(predicted.mean[0], predicted.mean[1], predicted.mean[2]);
    let z = measure(&mean_state, cfg)?;
    Ok(effective_snr(cfg, z.range))
}

/// Pick the in-window library index minimizing [`expected_cost`].
///
/// The window is the (2r+1)^2 neighborhood of the previously selected
/// index, clipped at the grid edges; ties break toward the smallest
/// (i, j) in lexicographic order.
pub fn select_waveform(
    state: &PacState,
    lib: &WaveformLibrary,
    kind: &FilterKind,
    cfg: &ScenarioConfig,
    policy: &SelectionPolicy,
) -> Result<(usize, usize)> {
    policy.validate()?;
    if !lib.contains(state.last_index) {
        return Err(Error::Input(format!(
            "working-memory index {:?} outside the {:?} grid",
            state.last_index,
            lib.shape()
        )));
    }
    let process = ReentryProcess::from_config(cfg);
    let q = DMatrix::from_column_slice(3, 3, cfg.filter_process_noise.as_slice());
    let predicted = predict(&state.belief, kind, &process, &q)?;

    let (ni, nj) = lib.shape();
    let (ci, cj) = state.last_index;
    let r = policy.window_radius;
    let i_lo = ci.saturating_sub(r);
    let i_hi = (ci + r).min(ni - 1);
    let j_lo = cj.saturating_sub(r);
    let j_hi = (cj + r).min(nj - 1);

    let mut best: Option<((usize, usize), f64)> = None;
    for i in i_lo..=i_hi {
        for j in j_lo..=j_hi {
            let cost =
                expected_cost_given_predicted(&predicted, lib.waveform(i, j), kind, cfg, policy)?;
            let replace = match &best {
                None => true,
                Some((_, best_cost)) => cost < *best_cost,
            };
            if replace {
                best = Some(((i, j), cost));
            }
        }
    }
    Ok(best.expect("window is never empty").0)
}

/// Everything one cycle produces.
#[derive(Debug, Clone)]
pub struct CycleOutput {
    pub state: PacState,
    /// The noisy measurement actually processed.
    pub measurement: Measurement,
    pub chosen_index: (usize, usize),
    pub waveform: Waveform,
    /// Covariance of the noise added to the measurement draw.
    pub noise_cov: Matrix2<f64>,
}

/// Run one full perception-action cycle against the given true state:
/// select (or hold) the waveform, draw the noisy measurement, and update
/// the belief.
pub fn run_cycle<R: Rng>(
    state: &PacState,
    truth: &StateVector,
    lib: &WaveformLibrary,
    kind: &FilterKind,
    cfg: &ScenarioConfig,
    policy: &SelectionPolicy,
    noise_gen: &mut R,
) -> Result<CycleOutput> {
    let chosen_index = match state.mode {
        RadarMode::TraditionalActiveRadar => lib.fixed_index,
        RadarMode::CognitiveRadar => select_waveform(state, lib, kind, cfg, policy)?,
    };
    let w = *lib.waveform(chosen_index.0, chosen_index.1);

    // The physical noise level follows the true geometry.
    let clean = measure(truth, cfg)?;
    let draw_snr = effective_snr(cfg, clean.range);
    let noise_cov = noise_covariance(&w, draw_snr, cfg.carrier_freq)?;
    let chol = noise_cov
        .cholesky()
        .ok_or_else(|| Error::NumericalDegeneracy {
            context: "measurement noise covariance".into(),
        })?;
    let xi = Vector2::new(
        noise_gen.sample(StandardNormal),
        noise_gen.sample(StandardNormal),
    );
    let noisy = Vector2::new(clean.range, clean.range_rate) + chol.l() * xi;
    let z = Measurement {
        range: noisy[0],
        range_rate: noisy[1],
    };

    let process = ReentryProcess::from_config(cfg);
    let model = RadarMeasurementModel::from_config(cfg);
    let q = DMatrix::from_column_slice(3, 3, cfg.filter_process_noise.as_slice());
    let predicted = predict(&state.belief, kind, &process, &q)?;
    let assumed_snr = filter_assumed_snr(cfg, &predicted)?;
    let r_filter = noise_covariance(&w, assumed_snr, cfg.carrier_freq)?;
    let posterior = update(
        &predicted,
        &DVector::from_row_slice(&[z.range, z.range_rate]),
        kind,
        &model,
        &meas_noise_dmatrix(&r_filter),
    )?;

    Ok(CycleOutput {
        state: PacState {
            belief: posterior,
            last_index: chosen_index,
            cycle: state.cycle + 1,
            mode: state.mode,
        },
        measurement: z,
        chosen_index,
        waveform: w,
        noise_cov,
    })
}

/// One recorded tracking cycle.
#[derive(Debug, Clone)]
pub struct EpisodeStep {
    /// Time of the measurement (s).
    pub time: f64,
    pub truth: StateVector,
    /// Posterior belief after this cycle's update.
    pub belief: GaussianBelief,
    pub measurement: Measurement,
    pub chosen_index: (usize, usize),
    pub waveform: Waveform,
    /// Covariance of the noise added to this cycle's measurement.
    pub noise_cov: Matrix2<f64>,
}

/// Full episode log: initial belief plus one entry per cycle.
#[derive(Debug, Clone)]
pub struct EpisodeRecord {
    pub initial_belief: GaussianBelief,
    pub steps: Vec<EpisodeStep>,
}

/// Independent RNG substreams so paired episodes share ground truth.
const STREAM_TRUTH: u64 = 0x7452_6154;
const STREAM_MEAS: u64 = 0x4d65_6173;
const STREAM_INIT: u64 = 0x496e_6974;

pub(crate) fn substream(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream.into());
    rng
}

/// Initial belief for an episode; optionally draws the mean from the
/// configured initial distribution so Monte Carlo errors are distributed
/// consistently with the claimed covariance.
fn initial_belief(cfg: &ScenarioConfig, rng: &mut ChaCha12Rng) -> Result<GaussianBelief> {
    let mut mean = cfg.x0_est_mean.as_vector();
    if cfg.sample_initial_estimate {
        let chol = cfg
            .x0_est_cov
            .cholesky()
            .ok_or_else(|| Error::NumericalDegeneracy {
                context: "initial estimate covariance".into(),
            })?;
        let xi = Vector3::new(
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        );
        mean += chol.l() * xi;
    }
    GaussianBelief::new(
        DVector::from_row_slice(&[mean[0], mean[1], mean[2]]),
        DMatrix::from_column_slice(3, 3, cfg.x0_est_cov.as_slice()),
    )
}

/// Run a whole episode: simulate ground truth and execute `cfg.steps`
/// perception-action cycles. Deterministic for a given `cfg.seed`.
pub fn run_episode(
    cfg: &ScenarioConfig,
    mode: RadarMode,
    kind: &FilterKind,
    lib: &WaveformLibrary,
    policy: &SelectionPolicy,
) -> Result<EpisodeRecord> {
    cfg.validate()?;
    policy.validate()?;
    if !lib.contains(lib.fixed_index) {
        return Err(Error::InvalidField {
            field: "fixed_index".into(),
            message: "outside the waveform grid".into(),
        });
    }
    let mut truth_rng = substream(cfg.seed, STREAM_TRUTH);
    let mut meas_rng = substream(cfg.seed, STREAM_MEAS);
    let mut init_rng = substream(cfg.seed, STREAM_INIT);

    let start_index = policy.initial_index.unwrap_or(lib.fixed_index);
    if !lib.contains(start_index) {
        return Err(Error::InvalidField {
            field: "initial_index".into(),
            message: "outside the waveform grid".into(),
        });
    }
    let truths = simulate_trajectory(cfg, &mut truth_rng)?;
    let belief = initial_belief(cfg, &mut init_rng)?;
    let initial_belief = belief.clone();

    let mut state = PacState {
        belief,
        last_index: start_index,
        cycle: 0,
        mode,
    };
    let mut steps = Vec::with_capacity(truths.len());
    for (step, (truth, _)) in truths.iter().enumerate() {
        let out = run_cycle(&state, truth, lib, kind, cfg, policy, &mut meas_rng)
            .map_err(|e| e.at_step(step))?;
        steps.push(EpisodeStep {
            time: cfg.dt * (step + 1) as f64,
            truth: *truth,
            belief: out.state.belief.clone(),
            measurement: out.measurement,
            chosen_index: out.chosen_index,
            waveform: out.waveform,
            noise_cov: out.noise_cov,
        });
        state = out.state;
    }
    Ok(EpisodeRecord {
        initial_belief,
        steps,
    })
}
