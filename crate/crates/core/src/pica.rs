//! Spectrum sensing and probabilistic independent component analysis.
//!
//! The data model is the noisy linear latent-variable model
//! `x = A s + mu + eta` with isotropic Gaussian noise. With the latent
//! dimension q known, the maximum-likelihood mixing matrix, noise variance,
//! and sources all come from the eigendecomposition of the sample
//! covariance; the orthogonal rotation left undetermined by the likelihood
//! is fixed to the identity here.

use nalgebra::{DMatrix, DVector};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Multichannel observations: p channels by N samples.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    samples: DMatrix<f64>,
}

impl DataMatrix {
    /// Wrap a p x N matrix; requires p >= 1 and N >= p so the sample
    /// covariance can be full rank.
    pub fn new(samples: DMatrix<f64>) -> Result<Self> {
        let (p, n) = samples.shape();
        if p < 1 {
            return Err(Error::Input("data needs at least one channel".into()));
        }
        if n < p {
            return Err(Error::Input(format!(
                "need at least as many observations as channels (p={p}, N={n})"
            )));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("data contains non-finite values".into()));
        }
        Ok(Self { samples })
    }

    pub fn channels(&self) -> usize {
        self.samples.nrows()
    }

    pub fn observations(&self) -> usize {
        self.samples.ncols()
    }

    pub fn samples(&self) -> &DMatrix<f64> {
        &self.samples
    }
}

/// Fitted noisy linear latent-variable model.
#[derive(Debug, Clone, PartialEq)]
pub struct PicaModel {
    /// Estimated mixing matrix (p x q).
    pub mixing: DMatrix<f64>,
    /// Estimated isotropic noise variance.
    pub noise_var: f64,
    /// Row-wise sample mean removed before fitting.
    pub mean: DVector<f64>,
    /// Latent dimension q.
    pub latent_dim: usize,
    /// Least-squares unmixing matrix (q x p), the pseudo-inverse of
    /// `mixing`.
    pub unmixing: DMatrix<f64>,
    /// All sample-covariance eigenvalues, descending (scree diagnostics).
    pub eigenvalues: Vec<f64>,
}

/// Averaged periodogram over non-overlapping rectangular segments.
///
/// One-sided output of length `segment_length/2 + 1`, normalized so the
/// bin sum equals the mean squared signal (for a single full-length
/// segment, exactly Parseval).
pub fn power_spectrum(signal: &[f64], segment_length: usize) -> Result<Vec<f64>> {
    if signal.is_empty() {
        return Err(Error::Input("empty signal".into()));
    }
    if segment_length == 0 {
        return Err(Error::Input("segment_length must be positive".into()));
    }
    if segment_length > signal.len() {
        return Err(Error::Input(format!(
            "segment_length {} exceeds signal length {}",
            segment_length,
            signal.len()
        )));
    }
    let l = segment_length;
    let n_segments = signal.len() / l;
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(l);
    let mut acc = vec![0.0f64; l];
    let mut buf: Vec<Complex<f64>> = Vec::with_capacity(l);
    for seg in 0..n_segments {
        buf.clear();
        buf.extend(
            signal[seg * l..(seg + 1) * l]
                .iter()
                .map(|&x| Complex::new(x, 0.0)),
        );
        fft.process(&mut buf);
        for (a, c) in acc.iter_mut().zip(&buf) {
            *a += c.norm_sqr();
        }
    }
    let norm = 1.0 / (n_segments as f64 * (l * l) as f64);
    let half = l / 2;
    let mut out = Vec::with_capacity(half + 1);
    out.push(acc[0] * norm);
    for k in 1..=half {
        // double interior bins; the Nyquist bin of an even-length
        // transform has no mirror image
        let scale = if l % 2 == 0 && k == half { 1.0 } else { 2.0 };
        out.push(acc[k] * norm * scale);
    }
    Ok(out)
}

/// Remove the row-wise sample mean; returns the centered data and the mean.
pub fn demean(data: &DataMatrix) -> (DataMatrix, DVector<f64>) {
    let n = data.observations() as f64;
    let mean = data.samples() * DVector::from_element(data.observations(), 1.0 / n);
    let mut centered = data.samples().clone();
    for mut col in centered.column_iter_mut() {
        col -= &mean;
    }
    (DataMatrix { samples: centered }, mean)
}

/// Scale each channel to unit sample variance (1/N convention).
pub fn variance_normalize(data: &DataMatrix) -> Result<DataMatrix> {
    let (centered, mean) = demean(data);
    let n = data.observations() as f64;
    let mut out = data.samples().clone();
    for (row, centered_row) in (0..data.channels()).zip(centered.samples().row_iter()) {
        let var = centered_row.iter().map(|v| v * v).sum::<f64>() / n;
        if var <= 0.0 {
            return Err(Error::DegenerateChannel { row });
        }
        let scale = 1.0 / var.sqrt();
        for j in 0..data.observations() {
            out[(row, j)] = mean[row] + (out[(row, j)] - mean[row]) * scale;
        }
    }
    Ok(DataMatrix { samples: out })
}

/// Eigenvalues (descending) and matching eigenvectors of a symmetric
/// matrix.
fn sorted_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = m.clone().symmetric_eigen();
    let p = m.nrows();
    let mut idx: Vec<usize> = (0..p).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values: Vec<f64> = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(p, p);
    for (col, &i) in idx.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// Fit the model from data: 1/N sample covariance of the demeaned data,
/// then the plug-in maximum-likelihood solutions.
pub fn fit(data: &DataMatrix, q: usize) -> Result<PicaModel> {
    let (centered, mean) = demean(data);
    let n = data.observations() as f64;
    let cov = centered.samples() * centered.samples().transpose() / n;
    fit_covariance(&cov, mean, q)
}

/// Maximum-likelihood solutions given a sample covariance directly.
///
/// The noise variance is the mean of the p-q trailing eigenvalues, the
/// mixing matrix is the top-q eigenvectors scaled by the signal excess
/// over the noise floor, and the unmixing matrix is the pseudo-inverse.
pub fn fit_covariance(cov: &DMatrix<f64>, mean: DVector<f64>, q: usize) -> Result<PicaModel> {
    let p = cov.nrows();
    if cov.ncols() != p || mean.len() != p {
        return Err(Error::Input("covariance/mean dimension mismatch".into()));
    }
    if q < 1 || q >= p {
        return Err(Error::Input(format!(
            "latent dimension must satisfy 1 <= q < p (got q={q}, p={p})"
        )));
    }
    let (eigenvalues, eigenvectors) = sorted_eigen(cov);
    let noise_var = (eigenvalues[q..].iter().sum::<f64>() / (p - q) as f64).max(0.0);
    if eigenvalues[q - 1] <= noise_var {
        return Err(Error::RankDeficiency(format!(
            "signal eigenvalue {} does not exceed the noise floor {}; do not extract more than \
             the data's usable source count",
            eigenvalues[q - 1],
            noise_var
        )));
    }
    let mut mixing = DMatrix::zeros(p, q);
    for j in 0..q {
        let scale = (eigenvalues[j] - noise_var).sqrt();
        mixing.set_column(j, &(eigenvectors.column(j) * scale));
    }
    let gram = mixing.transpose() * &mixing;
    let unmixing = gram
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NumericalDegeneracy {
            context: "mixing-matrix gram inversion".into(),
        })?
        * mixing.transpose();
    Ok(PicaModel {
        mixing,
        noise_var,
        mean,
        latent_dim: q,
        unmixing,
        eigenvalues,
    })
}

/// Least-squares source reconstruction `S = unmixing * (x - mean)`.
pub fn estimate_sources(model: &PicaModel, data: &DataMatrix) -> Result<DMatrix<f64>> {
    if data.channels() != model.mixing.nrows() {
        return Err(Error::Input(format!(
            "data has {} channels, model was fitted on {}",
            data.channels(),
            model.mixing.nrows()
        )));
    }
    let mut centered = data.samples().clone();
    for mut col in centered.column_iter_mut() {
        col -= &model.mean;
    }
    Ok(&model.unmixing * centered)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;
    use rand_distr::StandardNormal;

    fn random_data(p: usize, n: usize, seed: u64) -> DataMatrix {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        DataMatrix::new(DMatrix::from_fn(p, n, |_, _| {
            rng.sample::<f64, _>(StandardNormal)
        }))
        .unwrap()
    }

    /// Unit-variance Laplacian sample via inverse CDF.
    fn laplace(rng: &mut ChaCha12Rng) -> f64 {
        let u: f64 = rng.random::<f64>() - 0.5;
        let b = 1.0 / 2f64.sqrt();
        -b * u.signum() * (1.0 - 2.0 * u.abs()).ln()
    }

    #[test]
    fn constant_signal_concentrates_at_dc() {
        let c = 3.5;
        let signal = vec![c; 64];
        let spec = power_spectrum(&signal, 64).unwrap();
        assert_eq!(spec.len(), 33);
        assert_relative_eq!(spec[0], c * c, max_relative = 1e-12);
        for &v in &spec[1..] {
            assert!(v.abs() <= 1e-12 * c * c);
        }
    }

    #[test]
    fn parseval_identity_full_segment() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        for &len in &[64usize, 127, 128] {
            let signal: Vec<f64> = (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let spec = power_spectrum(&signal, len).unwrap();
            let total: f64 = spec.iter().sum();
            let msq = signal.iter().map(|v| v * v).sum::<f64>() / len as f64;
            assert_relative_eq!(total, msq, max_relative = 1e-10);
        }
    }

    #[test]
    fn sinusoid_dominates_its_bin() {
        let l = 256usize;
        let k = 19usize;
        let signal: Vec<f64> = (0..l)
            .map(|n| (2.0 * std::f64::consts::PI * k as f64 * n as f64 / l as f64).sin())
            .collect();
        let spec = power_spectrum(&signal, l).unwrap();
        // direct transform oracle: project onto the bin-k exponential
        let mut re = 0.0;
        let mut im = 0.0;
        for (n, &x) in signal.iter().enumerate() {
            let phase = -2.0 * std::f64::consts::PI * (k * n) as f64 / l as f64;
            re += x * phase.cos();
            im += x * phase.sin();
        }
        let oracle = 2.0 * (re * re + im * im) / (l * l) as f64;
        assert_relative_eq!(spec[k], oracle, max_relative = 1e-10);
        let max_other = spec
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != k)
            .map(|(_, &v)| v)
            .fold(0.0f64, f64::max);
        assert!(spec[k] >= 1e6 * max_other.max(f64::MIN_POSITIVE));
    }

    #[test]
    fn power_spectrum_input_errors() {
        assert!(power_spectrum(&[], 4).is_err());
        assert!(power_spectrum(&[1.0, 2.0], 3).is_err());
        assert!(power_spectrum(&[1.0, 2.0], 0).is_err());
    }

    #[test]
    fn demean_zero_mean_data_unchanged() {
        let data = DataMatrix::new(DMatrix::from_row_slice(
            2,
            4,
            &[1.0, -1.0, 2.0, -2.0, 0.5, -0.5, 1.5, -1.5],
        ))
        .unwrap();
        let (centered, mean) = demean(&data);
        assert_relative_eq!(mean.amax(), 0.0, epsilon = 1e-15);
        assert_eq!(centered.samples(), data.samples());
    }

    #[test]
    fn demean_constant_columns() {
        let v = DVector::from_row_slice(&[2.0, -3.0, 7.0]);
        let samples = DMatrix::from_fn(3, 5, |i, _| v[i]);
        let data = DataMatrix::new(samples).unwrap();
        let (centered, mean) = demean(&data);
        assert_relative_eq!(mean, v, max_relative = 1e-14);
        assert!(centered.samples().amax() <= 1e-12);
    }

    #[test]
    fn demean_matches_column_average_oracle() {
        let data = random_data(4, 1000, 5);
        let (_, mean) = demean(&data);
        for i in 0..4 {
            let avg: f64 = data.samples().row(i).iter().sum::<f64>() / 1000.0;
            assert_relative_eq!(mean[i], avg, max_relative = 1e-12, epsilon = 1e-12);
        }
    }

    #[test]
    fn variance_normalize_rows_to_unit() {
        let mut data = random_data(3, 500, 9);
        // scale rows wildly
        for (i, s) in [1e-3, 1.0, 7e4].iter().enumerate() {
            for j in 0..500 {
                data.samples[(i, j)] *= s;
            }
        }
        let normalized = variance_normalize(&data).unwrap();
        let (centered, _) = demean(&normalized);
        for i in 0..3 {
            let var: f64 =
                centered.samples().row(i).iter().map(|v| v * v).sum::<f64>() / 500.0;
            assert_relative_eq!(var, 1.0, epsilon = 1e-10);
        }
        // scale invariance: a scaled copy of row 1 normalizes identically
        let scaled = {
            let mut d = data.clone();
            for j in 0..500 {
                d.samples[(1, j)] *= 7.0;
            }
            d
        };
        let n2 = variance_normalize(&scaled).unwrap();
        let (c1, _) = demean(&normalized);
        let (c2, _) = demean(&n2);
        for j in 0..500 {
            assert_relative_eq!(
                c1.samples()[(1, j)],
                c2.samples()[(1, j)],
                max_relative = 1e-10,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn variance_normalize_rejects_flat_channel() {
        let samples = DMatrix::from_row_slice(2, 4, &[1.0, 2.0, 3.0, 4.0, 5.0, 5.0, 5.0, 5.0]);
        let data = DataMatrix::new(samples).unwrap();
        let err = variance_normalize(&data).unwrap_err();
        assert!(matches!(err, Error::DegenerateChannel { row: 1 }));
    }

    #[test]
    fn fit_covariance_plug_in_values() {
        // Eigenvalues (5, 2, 1) with q = 1: noise floor 1.5, mixing column
        // sqrt(3.5) along the leading eigenvector.
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let a = DMatrix::from_fn(3, 3, |_, _| rng.sample::<f64, _>(StandardNormal));
        let qr = a.qr();
        let u = qr.q();
        let cov = &u * DMatrix::from_diagonal(&DVector::from_row_slice(&[5.0, 2.0, 1.0]))
            * u.transpose();
        let model = fit_covariance(&cov, DVector::zeros(3), 1).unwrap();
        assert_relative_eq!(model.noise_var, 1.5, max_relative = 1e-12);
        let col = model.mixing.column(0);
        assert_relative_eq!(col.norm(), 3.5f64.sqrt(), max_relative = 1e-10);
        // column is parallel to u's first column
        let cosine = col.dot(&u.column(0)).abs() / col.norm();
        assert_relative_eq!(cosine, 1.0, max_relative = 1e-10);
    }

    #[test]
    fn noise_free_low_rank_data() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let p = 5;
        let q = 2;
        let n = 400;
        let a = DMatrix::from_fn(p, q, |_, _| rng.sample::<f64, _>(StandardNormal));
        let s = DMatrix::from_fn(q, n, |_, _| laplace(&mut rng));
        let data = DataMatrix::new(&a * &s).unwrap();
        let model = fit(&data, q).unwrap();
        assert!(model.noise_var.abs() <= 1e-10);
        // recovered span contains the true columns
        let gram = model.unmixing.clone() * &model.mixing;
        assert_relative_eq!(gram, DMatrix::identity(q, q), epsilon = 1e-10);
        let proj = &model.mixing * &model.unmixing; // projector onto span(A-hat)
        let residual = &a - proj * &a;
        assert!(residual.amax() < 1e-8 * a.amax());
    }

    #[test]
    fn rank_deficiency_detected() {
        // isotropic covariance has no signal eigenvalue above the floor
        let cov = DMatrix::identity(4, 4);
        let err = fit_covariance(&cov, DVector::zeros(4), 2).unwrap_err();
        assert!(matches!(err, Error::RankDeficiency(_)));
    }

    #[test]
    fn q_bounds_enforced() {
        let cov = DMatrix::identity(3, 3);
        assert!(fit_covariance(&cov, DVector::zeros(3), 0).is_err());
        assert!(fit_covariance(&cov, DVector::zeros(3), 3).is_err());
    }

    #[test]
    fn generate_and_recover() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let p = 8;
        let q = 3;
        let n = 10_000;
        let sigma2: f64 = 0.25;
        let a = DMatrix::from_fn(p, q, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mu = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut x = DMatrix::zeros(p, n);
        for j in 0..n {
            let s = DVector::from_fn(q, |_, _| laplace(&mut rng));
            let eta = DVector::from_fn(p, |_, _| {
                rng.sample::<f64, _>(StandardNormal) * sigma2.sqrt()
            });
            x.set_column(j, &(&a * s + &mu + eta));
        }
        let data = DataMatrix::new(x).unwrap();
        let model = fit(&data, q).unwrap();
        assert!((model.noise_var - sigma2).abs() < 0.1 * sigma2);
        assert!((model.mean.clone() - &mu).amax() < 0.1);

        // largest principal angle between span(A-hat) and span(A)
        let qa = a.clone().qr().q();
        let qb = model.mixing.clone().qr().q();
        let svd = (qa.transpose() * qb).svd(false, false);
        let min_sv = svd
            .singular_values
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        let angle_deg = min_sv.clamp(-1.0, 1.0).acos().to_degrees();
        assert!(angle_deg < 5.0, "principal angle {angle_deg} deg too large");
    }

    #[test]
    fn sources_with_orthonormal_mixing() {
        let mut rng = ChaCha12Rng::seed_from_u64(12);
        let p = 4;
        let q = 2;
        let a = DMatrix::from_fn(p, p, |_, _| rng.sample::<f64, _>(StandardNormal))
            .qr()
            .q()
            .columns(0, q)
            .into_owned();
        let model = PicaModel {
            mixing: a.clone(),
            noise_var: 0.0,
            mean: DVector::zeros(p),
            latent_dim: q,
            unmixing: (a.transpose() * &a).try_inverse().unwrap() * a.transpose(),
            eigenvalues: vec![],
        };
        let data = random_data(p, 20, 13);
        let s = estimate_sources(&model, &data).unwrap();
        let want = a.transpose() * data.samples();
        assert_relative_eq!(s, want, epsilon = 1e-12);
    }

    #[test]
    fn sources_reconstruct_in_span_and_residual_orthogonal() {
        let mut rng = ChaCha12Rng::seed_from_u64(14);
        let p = 6;
        let q = 3;
        let n = 50;
        let a = DMatrix::from_fn(p, q, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mean = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let model = PicaModel {
            mixing: a.clone(),
            noise_var: 0.0,
            mean: mean.clone(),
            latent_dim: q,
            unmixing: (a.transpose() * &a).try_inverse().unwrap() * a.transpose(),
            eigenvalues: vec![],
        };
        // data exactly in span(A) + mean reconstructs to 1e-10
        let s_true = DMatrix::from_fn(q, n, |_, _| laplace(&mut rng));
        let mut in_span = &a * &s_true;
        for mut col in in_span.column_iter_mut() {
            col += &mean;
        }
        let data = DataMatrix::new(in_span.clone()).unwrap();
        let s_hat = estimate_sources(&model, &data).unwrap();
        let recon = &a * &s_hat;
        let mut centered = in_span.clone();
        for mut col in centered.column_iter_mut() {
            col -= &mean;
        }
        assert!((recon.clone() - &centered).amax() < 1e-10 * centered.amax().max(1.0));

        // generic data: residual orthogonal to the mixing columns
        let generic = random_data(p, n, 15);
        let s2 = estimate_sources(&model, &generic).unwrap();
        let mut centered2 = generic.samples().clone();
        for mut col in centered2.column_iter_mut() {
            col -= &mean;
        }
        let residual = centered2 - &a * s2;
        let cross = a.transpose() * residual;
        assert!(cross.amax() < 1e-10 * generic.samples().amax().max(1.0));
    }

    #[test]
    fn sources_match_normal_equations_oracle() {
        let mut rng = ChaCha12Rng::seed_from_u64(16);
        let p = 5;
        let q = 2;
        let a = DMatrix::from_fn(p, q, |_, _| rng.sample::<f64, _>(StandardNormal));
        let model = PicaModel {
            mixing: a.clone(),
            noise_var: 0.0,
            mean: DVector::zeros(p),
            latent_dim: q,
            unmixing: (a.transpose() * &a).try_inverse().unwrap() * a.transpose(),
            eigenvalues: vec![],
        };
        let data = random_data(p, 30, 17);
        let s = estimate_sources(&model, &data).unwrap();
        // column-by-column least squares oracle
        for j in 0..30 {
            let rhs = a.transpose() * data.samples().column(j);
            let sol = (a.transpose() * &a)
                .lu()
                .solve(&rhs)
                .unwrap();
            assert_relative_eq!(
                DVector::from(s.column(j)),
                sol,
                max_relative = 1e-10,
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn covariance_reconstruction_and_rotation_invariance() {
        let mut rng = ChaCha12Rng::seed_from_u64(18);
        for trial in 0..20 {
            let p = 6;
            let q = 2;
            let n = 500;
            let a = DMatrix::from_fn(p, q, |_, _| rng.sample::<f64, _>(StandardNormal)) * 2.0;
            let mut x = DMatrix::zeros(p, n);
            for j in 0..n {
                let s = DVector::from_fn(q, |_, _| laplace(&mut rng));
                let eta = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal) * 0.3);
                x.set_column(j, &(&a * s + eta));
            }
            let data = DataMatrix::new(x).unwrap();
            let (centered, _) = demean(&data);
            let cov = centered.samples() * centered.samples().transpose() / n as f64;
            let model = fit(&data, q).unwrap();

            // 0 <= noise_var <= smallest retained signal eigenvalue
            assert!(model.noise_var >= 0.0);
            assert!(model.noise_var <= model.eigenvalues[q - 1]);

            // reconstruction is exact on the top-q eigenspace
            let recon = &model.mixing * model.mixing.transpose()
                + DMatrix::identity(p, p) * model.noise_var;
            let (_, vectors) = sorted_eigen(&cov);
            for j in 0..q {
                let u = vectors.column(j).into_owned();
                let diff = (&recon - &cov) * &u;
                assert!(
                    diff.amax() < 1e-9 * cov.amax(),
                    "trial {trial}: top eigenspace not reproduced"
                );
            }
            // complement: reconstruction eigenvalue equals the average of
            // the trailing sample eigenvalues
            let trailing_avg =
                model.eigenvalues[q..].iter().sum::<f64>() / (p - q) as f64;
            assert_relative_eq!(model.noise_var, trailing_avg, max_relative = 1e-12);

            // rotation indeterminacy: A -> A Q leaves A A^T and the
            // reconstruction invariant
            let rot = DMatrix::from_fn(q, q, |_, _| rng.sample::<f64, _>(StandardNormal))
                .qr()
                .q();
            let rotated = &model.mixing * &rot;
            assert_relative_eq!(
                rotated.clone() * rotated.transpose(),
                model.mixing.clone() * model.mixing.transpose(),
                epsilon = 1e-10 * model.mixing.amax().powi(2).max(1.0)
            );
            let unmix_rot = (rotated.transpose() * &rotated).try_inverse().unwrap()
                * rotated.transpose();
            let s_rot = unmix_rot * centered.samples();
            let s = &model.unmixing * centered.samples();
            assert!(
                ((rotated * s_rot) - (model.mixing.clone() * s)).amax()
                    < 1e-9 * centered.samples().amax()
            );
        }
    }
}
