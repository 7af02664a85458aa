//! Gaussian-assumed Bayesian filters: EKF, UKF, and CKF behind a single
//! predict/update interface.
//!
//! All three keep a [`GaussianBelief`] and differ only in how they push it
//! through the nonlinear process and measurement maps: the EKF linearizes
//! with Jacobians, the UKF and CKF propagate deterministic point sets and
//! re-estimate moments.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Mean and covariance of a Gaussian state density.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBelief {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianBelief {
    /// Build a belief, validating symmetry and positive definiteness.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let n = mean.len();
        if cov.nrows() != n || cov.ncols() != n {
            return Err(Error::Input(format!(
                "covariance is {}x{}, expected {n}x{n}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        if mean.iter().any(|v| !v.is_finite()) || cov.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidState("non-finite belief".into()));
        }
        let scale = cov.amax().max(1.0);
        if (&cov - cov.transpose()).amax() > 1e-12 * scale {
            return Err(Error::InvalidState("covariance not symmetric".into()));
        }
        if cov.clone().cholesky().is_none() {
            return Err(Error::NumericalDegeneracy {
                context: "belief covariance not positive definite".into(),
            });
        }
        Ok(Self { mean, cov })
    }

    /// Build a belief without validation; the caller maintains invariants.
    pub fn new_unchecked(mean: DVector<f64>, cov: DMatrix<f64>) -> Self {
        Self { mean, cov }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Scaled-sigma-point parameters for the UKF.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UkfParams {
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
}

impl Default for UkfParams {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 2.0,
            kappa: 0.0,
        }
    }
}

impl UkfParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidField {
                field: "ukf_alpha".into(),
                message: "must lie in (0, 1]".into(),
            });
        }
        if !(self.kappa >= 0.0) {
            return Err(Error::InvalidField {
                field: "ukf_kappa".into(),
                message: "must be >= 0".into(),
            });
        }
        Ok(())
    }
}

/// Which Gaussian filter to run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FilterKind {
    Ekf,
    Ukf(UkfParams),
    Ckf,
}

impl FilterKind {
    pub fn label(&self) -> &'static str {
        match self {
            FilterKind::Ekf => "ekf",
            FilterKind::Ukf(_) => "ukf",
            FilterKind::Ckf => "ckf",
        }
    }
}

/// Deterministic quadrature nodes with their mean/covariance weights.
#[derive(Debug, Clone)]
pub struct SigmaPointSet {
    pub points: Vec<DVector<f64>>,
    pub mean_weights: Vec<f64>,
    pub cov_weights: Vec<f64>,
}

impl SigmaPointSet {
    /// Weighted sample mean of the stored points.
    pub fn mean(&self) -> DVector<f64> {
        weighted_mean(&self.points, &self.mean_weights)
    }

    /// Weighted sample covariance of the stored points about `center`.
    pub fn covariance(&self, center: &DVector<f64>) -> DMatrix<f64> {
        weighted_covariance(&self.points, &self.cov_weights, center)
    }
}

fn weighted_mean(points: &[DVector<f64>], weights: &[f64]) -> DVector<f64> {
    let mut m = DVector::zeros(points[0].len());
    for (p, w) in points.iter().zip(weights) {
        m.axpy(*w, p, 1.0);
    }
    m
}

fn weighted_covariance(
    points: &[DVector<f64>],
    weights: &[f64],
    center: &DVector<f64>,
) -> DMatrix<f64> {
    let n = center.len();
    let mut cov = DMatrix::zeros(n, n);
    for (p, w) in points.iter().zip(weights) {
        let d = p - center;
        cov.ger(*w, &d, &d, 1.0);
    }
    symmetrize(&cov)
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Lower Cholesky factor with a single jitter retry
/// (1e-9 * trace / n on the diagonal), then a degeneracy error.
fn cholesky_factor(m: &DMatrix<f64>, context: &str) -> Result<DMatrix<f64>> {
    if let Some(c) = m.clone().cholesky() {
        return Ok(c.unpack());
    }
    let n = m.nrows();
    let jitter = 1e-9 * m.trace() / n as f64;
    let bumped = m + DMatrix::identity(n, n) * jitter;
    bumped
        .cholesky()
        .map(|c| c.unpack())
        .ok_or_else(|| Error::NumericalDegeneracy {
            context: context.to_string(),
        })
}

/// Symmetrize and verify positive definiteness, applying the one-shot
/// jitter policy on failure.
fn ensure_spd(m: &DMatrix<f64>, context: &str) -> Result<DMatrix<f64>> {
    let sym = symmetrize(m);
    if sym.clone().cholesky().is_some() {
        return Ok(sym);
    }
    let n = sym.nrows();
    let jitter = 1e-9 * sym.trace() / n as f64;
    let bumped = &sym + DMatrix::identity(n, n) * jitter;
    if bumped.clone().cholesky().is_some() {
        Ok(bumped)
    } else {
        Err(Error::NumericalDegeneracy {
            context: context.to_string(),
        })
    }
}

/// Third-degree spherical-radial cubature rule: 2n points at
/// mean +/- sqrt(n) * (columns of the Cholesky factor), equal weights.
pub fn cubature_points(belief: &GaussianBelief) -> Result<SigmaPointSet> {
    let n = belief.dim();
    let l = cholesky_factor(&belief.cov, "cubature point factorization")?;
    let scale = (n as f64).sqrt();
    let mut points = Vec::with_capacity(2 * n);
    for i in 0..n {
        let col = l.column(i) * scale;
        points.push(&belief.mean + &col);
        points.push(&belief.mean - &col);
    }
    let w = 1.0 / (2 * n) as f64;
    Ok(SigmaPointSet {
        points,
        mean_weights: vec![w; 2 * n],
        cov_weights: vec![w; 2 * n],
    })
}

/// Standard 2n+1 scaled sigma points.
pub fn unscented_points(belief: &GaussianBelief, params: &UkfParams) -> Result<SigmaPointSet> {
    params.validate()?;
    let n = belief.dim();
    let nf = n as f64;
    let lambda = params.alpha * params.alpha * (nf + params.kappa) - nf;
    let spread = (nf + lambda).sqrt();
    let l = cholesky_factor(&belief.cov, "unscented point factorization")?;
    let mut points = Vec::with_capacity(2 * n + 1);
    points.push(belief.mean.clone());
    for i in 0..n {
        let col = l.column(i) * spread;
        points.push(&belief.mean + &col);
        points.push(&belief.mean - &col);
    }
    let w_rest = 1.0 / (2.0 * (nf + lambda));
    let mut mean_weights = vec![w_rest; 2 * n + 1];
    let mut cov_weights = vec![w_rest; 2 * n + 1];
    mean_weights[0] = lambda / (nf + lambda);
    cov_weights[0] = lambda / (nf + lambda) + (1.0 - params.alpha * params.alpha + params.beta);
    Ok(SigmaPointSet {
        points,
        mean_weights,
        cov_weights,
    })
}

fn points_for(kind: &FilterKind, belief: &GaussianBelief) -> Result<SigmaPointSet> {
    match kind {
        FilterKind::Ukf(p) => unscented_points(belief, p),
        FilterKind::Ckf => cubature_points(belief),
        FilterKind::Ekf => unreachable!("EKF does not use point sets"),
    }
}

/// State propagation map exposed to the filters.
pub trait ProcessModel {
    fn dim(&self) -> usize;
    fn propagate(&self, x: &DVector<f64>) -> Result<DVector<f64>>;
    /// Jacobian of [`ProcessModel::propagate`]; only the EKF calls this.
    fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>>;
}

/// Measurement map exposed to the filters.
pub trait MeasurementModel {
    fn state_dim(&self) -> usize;
    fn measurement_dim(&self) -> usize;
    fn measure(&self, x: &DVector<f64>) -> Result<DVector<f64>>;
    /// Jacobian of [`MeasurementModel::measure`]; only the EKF calls this.
    fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>>;
}

/// Affine process map `x -> F x + b`, exact for every filter kind.
#[derive(Debug, Clone)]
pub struct AffineProcess {
    pub matrix: DMatrix<f64>,
    pub offset: DVector<f64>,
}

impl ProcessModel for AffineProcess {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }
    fn propagate(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(&self.matrix * x + &self.offset)
    }
    fn jacobian(&self, _x: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(self.matrix.clone())
    }
}

/// Affine measurement map `x -> H x + c`.
#[derive(Debug, Clone)]
pub struct AffineMeasurement {
    pub matrix: DMatrix<f64>,
    pub offset: DVector<f64>,
}

impl MeasurementModel for AffineMeasurement {
    fn state_dim(&self) -> usize {
        self.matrix.ncols()
    }
    fn measurement_dim(&self) -> usize {
        self.matrix.nrows()
    }
    fn measure(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(&self.matrix * x + &self.offset)
    }
    fn jacobian(&self, _x: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(self.matrix.clone())
    }
}

/// Time-update: push the belief through the process model and add
/// process noise.
pub fn predict(
    belief: &GaussianBelief,
    kind: &FilterKind,
    process: &dyn ProcessModel,
    process_noise: &DMatrix<f64>,
) -> Result<GaussianBelief> {
    let n = belief.dim();
    if process.dim() != n || process_noise.nrows() != n || process_noise.ncols() != n {
        return Err(Error::Input("predict dimension mismatch".into()));
    }
    match kind {
        FilterKind::Ekf => {
            let mean = process.propagate(&belief.mean)?;
            let f = process.jacobian(&belief.mean)?;
            let cov = &f * &belief.cov * f.transpose() + process_noise;
            let cov = ensure_spd(&cov, "predicted covariance (ekf)")?;
            Ok(GaussianBelief::new_unchecked(mean, cov))
        }
        FilterKind::Ukf(_) | FilterKind::Ckf => {
            let set = points_for(kind, belief)?;
            let propagated: Vec<DVector<f64>> = set
                .points
                .iter()
                .map(|p| process.propagate(p))
                .collect::<Result<_>>()?;
            let mean = weighted_mean(&propagated, &set.mean_weights);
            let cov = weighted_covariance(&propagated, &set.cov_weights, &mean) + process_noise;
            let cov = ensure_spd(&cov, "predicted covariance (point set)")?;
            Ok(GaussianBelief::new_unchecked(mean, cov))
        }
    }
}

/// Everything the measurement update produces besides the new mean.
struct UpdateTerms {
    predicted_measurement: DVector<f64>,
    gain: DMatrix<f64>,
    posterior_cov: DMatrix<f64>,
}

fn update_terms(
    belief: &GaussianBelief,
    kind: &FilterKind,
    model: &dyn MeasurementModel,
    meas_noise: &DMatrix<f64>,
) -> Result<UpdateTerms> {
    let n = belief.dim();
    let m = model.measurement_dim();
    if model.state_dim() != n || meas_noise.nrows() != m || meas_noise.ncols() != m {
        return Err(Error::Input("update dimension mismatch".into()));
    }
    match kind {
        FilterKind::Ekf => {
            let h = model.jacobian(&belief.mean)?;
            let predicted_measurement = model.measure(&belief.mean)?;
            let s = symmetrize(&(&h * &belief.cov * h.transpose() + meas_noise));
            let s_chol = s
                .clone()
                .cholesky()
                .ok_or_else(|| Error::NumericalDegeneracy {
                    context: "innovation covariance (ekf)".into(),
                })?;
            // K = P H^T S^-1, via S K^T = H P
            let gain = s_chol.solve(&(&h * &belief.cov)).transpose();
            // Joseph form keeps the difference of products PSD.
            let i_kh = DMatrix::identity(n, n) - &gain * &h;
            let posterior_cov =
                &i_kh * &belief.cov * i_kh.transpose() + &gain * meas_noise * gain.transpose();
            let posterior_cov = ensure_spd(&posterior_cov, "posterior covariance (ekf)")?;
            Ok(UpdateTerms {
                predicted_measurement,
                gain,
                posterior_cov,
            })
        }
        FilterKind::Ukf(_) | FilterKind::Ckf => {
            let set = points_for(kind, belief)?;
            let mapped: Vec<DVector<f64>> = set
                .points
                .iter()
                .map(|p| model.measure(p))
                .collect::<Result<_>>()?;
            let predicted_measurement = weighted_mean(&mapped, &set.mean_weights);
            let s = weighted_covariance(&mapped, &set.cov_weights, &predicted_measurement)
                + meas_noise;
            let s = symmetrize(&s);
            let mut cross = DMatrix::zeros(n, m);
            for ((p, zi), w) in set.points.iter().zip(&mapped).zip(&set.cov_weights) {
                let dx = p - &belief.mean;
                let dz = zi - &predicted_measurement;
                cross.ger(*w, &dx, &dz, 1.0);
            }
            let s_chol = s
                .clone()
                .cholesky()
                .ok_or_else(|| Error::NumericalDegeneracy {
                    context: "innovation covariance (point set)".into(),
                })?;
            // K = Pxz S^-1, via S K^T = Pxz^T
            let gain = s_chol.solve(&cross.transpose()).transpose();
            let posterior_cov = &belief.cov - &gain * &s * gain.transpose();
            let posterior_cov = ensure_spd(&posterior_cov, "posterior covariance (point set)")?;
            Ok(UpdateTerms {
                predicted_measurement,
                gain,
                posterior_cov,
            })
        }
    }
}

/// Measurement update. The posterior covariance does not depend on the
/// realized measurement value, only on the prior and the noise covariance.
pub fn update(
    belief: &GaussianBelief,
    z: &DVector<f64>,
    kind: &FilterKind,
    model: &dyn MeasurementModel,
    meas_noise: &DMatrix<f64>,
) -> Result<GaussianBelief> {
    if z.len() != model.measurement_dim() {
        return Err(Error::Input(format!(
            "measurement has dim {}, model expects {}",
            z.len(),
            model.measurement_dim()
        )));
    }
    let terms = update_terms(belief, kind, model, meas_noise)?;
    let innovation = z - &terms.predicted_measurement;
    let mean = &belief.mean + &terms.gain * innovation;
    if mean.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidState("non-finite posterior mean".into()));
    }
    Ok(GaussianBelief::new_unchecked(mean, terms.posterior_cov))
}

/// Posterior covariance the update would produce, without a measurement.
///
/// This is exactly computable because Gaussian filters' covariance
/// recursions are measurement-realization independent; the waveform
/// selection loop relies on it.
pub fn posterior_covariance(
    belief: &GaussianBelief,
    kind: &FilterKind,
    model: &dyn MeasurementModel,
    meas_noise: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    Ok(update_terms(belief, kind, model, meas_noise)?.posterior_cov)
}

/// Run predict+update over an aligned sequence of measurements and
/// per-step noise covariances.
pub fn run_filter(
    kind: &FilterKind,
    belief0: &GaussianBelief,
    steps: &[(DVector<f64>, DMatrix<f64>)],
    process: &dyn ProcessModel,
    process_noise: &DMatrix<f64>,
    model: &dyn MeasurementModel,
) -> Result<Vec<GaussianBelief>> {
    let mut out = Vec::with_capacity(steps.len());
    let mut belief = belief0.clone();
    for (step, (z, r)) in steps.iter().enumerate() {
        let predicted = predict(&belief, kind, process, process_noise)
            .map_err(|e| e.at_step(step))?;
        belief = update(&predicted, z, kind, model, r).map_err(|e| e.at_step(step))?;
        out.push(belief.clone());
    }
    Ok(out)
}
