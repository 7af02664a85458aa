//! Scenario-driven experiment front end: load a config, run a subcommand,
//! and emit plot-ready CSV files.
//!
//! Every output is deterministic for a fixed manifest: runs are folded in
//! seed order regardless of the worker count, floats are written with 17
//! significant digits, and the effective config is echoed next to the
//! results so any output directory is reproducible from itself.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::{echo_config, parse_config, ExperimentConfig, FilterName};
use crate::error::{Error, Result};
use crate::metrics::{
    compare_curves, monte_carlo_pcrlb, rmse_from_episodes, run_episodes, ComparisonTable,
    CurveOrdering, PcrlbCurve, RmseCurve,
};
use crate::pac::RadarMode;
use crate::pica::{estimate_sources, fit, power_spectrum, variance_normalize, DataMatrix};
use crate::waveform::WaveformLibrary;

/// Which experiment to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Simulate,
    CompareFilters,
    CompareModes,
    Pcrlb,
    Pica,
}

/// A fully specified invocation.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub subcommand: Subcommand,
    pub config_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub n_runs: usize,
    /// Base seed; run k uses seed + k. `None` defers to the config.
    pub seed: Option<u64>,
    /// Worker threads for the Monte Carlo fan-out; 0 picks the default.
    pub workers: usize,
    /// Channel matrix for the source-separation subcommand.
    pub input_path: Option<PathBuf>,
}

/// Format a float with 17 significant digits (lossless f64 round-trip).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), contents)?;
    Ok(())
}

fn rmse_csv(curve: &RmseCurve) -> String {
    let mut out = String::from("time_s,rmse_altitude_ft,rmse_velocity_ftps,n_runs,divergences\n");
    for k in 0..curve.times.len() {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt_f64(curve.times[k]),
            fmt_f64(curve.rmse_altitude[k]),
            fmt_f64(curve.rmse_velocity[k]),
            curve.n_runs,
            curve.divergences
        );
    }
    out
}

fn pcrlb_csv(bound: &PcrlbCurve, rmse: &RmseCurve) -> String {
    let mut out = String::from(
        "time_s,bound_altitude_ft,bound_velocity_ftps,rmse_altitude_ft,rmse_velocity_ftps\n",
    );
    for k in 0..bound.times.len() {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt_f64(bound.times[k]),
            fmt_f64(bound.bound_altitude[k]),
            fmt_f64(bound.bound_velocity[k]),
            fmt_f64(rmse.rmse_altitude[k]),
            fmt_f64(rmse.rmse_velocity[k]),
        );
    }
    out
}

fn ordering_label(o: CurveOrdering) -> &'static str {
    match o {
        CurveOrdering::Lower => "lower",
        CurveOrdering::Higher => "higher",
        CurveOrdering::Tie => "tie",
    }
}

fn comparison_csv(table: &ComparisonTable) -> String {
    let mut out = String::from("label,avg_rmse_altitude_ft,avg_rmse_velocity_ftps\n");
    for i in 0..table.labels.len() {
        let _ = writeln!(
            out,
            "{},{},{}",
            table.labels[i],
            fmt_f64(table.avg_altitude[i]),
            fmt_f64(table.avg_velocity[i]),
        );
    }
    out
}

fn orderings_csv(table: &ComparisonTable) -> String {
    let mut out = String::from("label_a,label_b,altitude_order,velocity_order\n");
    for pair in &table.pairs {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            table.labels[pair.a],
            table.labels[pair.b],
            ordering_label(pair.altitude),
            ordering_label(pair.velocity),
        );
    }
    out
}

/// Load the config (or defaults), apply the manifest's seed override.
pub fn load_config(manifest: &RunManifest) -> Result<ExperimentConfig> {
    let mut cfg = match &manifest.config_path {
        Some(path) => parse_config(path)?,
        None => {
            let mut c = ExperimentConfig::default();
            let lib = c.build_library()?;
            c.library.fixed_index = Some(lib.fixed_index);
            c
        }
    };
    if let Some(seed) = manifest.seed {
        cfg.scenario.seed = seed;
    }
    Ok(cfg)
}

fn mc_rmse(
    cfg: &ExperimentConfig,
    lib: &WaveformLibrary,
    mode: RadarMode,
    name: FilterName,
    n_runs: usize,
) -> Result<RmseCurve> {
    let kind = cfg.filter.kind_of(name);
    let episodes = run_episodes(
        &cfg.scenario,
        mode,
        &kind,
        lib,
        &cfg.policy,
        n_runs,
        cfg.scenario.seed,
    );
    rmse_from_episodes(
        &cfg.scenario,
        &episodes,
        format!("{}-{}", mode.label(), name.label()),
    )
}

fn run_simulate(manifest: &RunManifest, cfg: &ExperimentConfig) -> Result<()> {
    let lib = cfg.build_library()?;
    let record = crate::pac::run_episode(
        &cfg.scenario,
        cfg.mode,
        &cfg.filter.to_kind(),
        &lib,
        &cfg.policy,
    )?;
    let mut out = String::from(
        "time_s,true_altitude_ft,true_velocity_ftps,true_ballistic,est_altitude_ft,\
         est_velocity_ftps,est_ballistic,std_altitude_ft,std_velocity_ftps,meas_range_ft,\
         meas_range_rate_ftps,waveform_i,waveform_j,duration_s,chirp_hz_per_s\n",
    );
    for step in &record.steps {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            fmt_f64(step.time),
            fmt_f64(step.truth.altitude),
            fmt_f64(step.truth.velocity),
            fmt_f64(step.truth.ballistic),
            fmt_f64(step.belief.mean[0]),
            fmt_f64(step.belief.mean[1]),
            fmt_f64(step.belief.mean[2]),
            fmt_f64(step.belief.cov[(0, 0)].sqrt()),
            fmt_f64(step.belief.cov[(1, 1)].sqrt()),
            fmt_f64(step.measurement.range),
            fmt_f64(step.measurement.range_rate),
            step.chosen_index.0,
            step.chosen_index.1,
            fmt_f64(step.waveform.duration),
            fmt_f64(step.waveform.chirp_rate),
        );
    }
    write_file(&manifest.output_dir, "episode.csv", &out)
}

fn run_compare_filters(manifest: &RunManifest, cfg: &ExperimentConfig) -> Result<()> {
    let lib = cfg.build_library()?;
    let mut curves = Vec::new();
    for name in [FilterName::Ekf, FilterName::Ukf, FilterName::Ckf] {
        let curve = mc_rmse(cfg, &lib, RadarMode::CognitiveRadar, name, manifest.n_runs)?;
        write_file(
            &manifest.output_dir,
            &format!("rmse_cognitive_{}.csv", name.label()),
            &rmse_csv(&curve),
        )?;
        curves.push(curve);
    }
    let table = compare_curves(&curves)?;
    write_file(&manifest.output_dir, "comparison.csv", &comparison_csv(&table))?;
    write_file(&manifest.output_dir, "orderings.csv", &orderings_csv(&table))
}

fn run_compare_modes(manifest: &RunManifest, cfg: &ExperimentConfig) -> Result<()> {
    let lib = cfg.build_library()?;
    let name = cfg.filter.name;
    let mut curves = Vec::new();
    for mode in [RadarMode::CognitiveRadar, RadarMode::TraditionalActiveRadar] {
        let curve = mc_rmse(cfg, &lib, mode, name, manifest.n_runs)?;
        write_file(
            &manifest.output_dir,
            &format!("rmse_{}_{}.csv", mode.label(), name.label()),
            &rmse_csv(&curve),
        )?;
        curves.push(curve);
    }
    let table = compare_curves(&curves)?;
    write_file(&manifest.output_dir, "comparison.csv", &comparison_csv(&table))?;
    write_file(&manifest.output_dir, "orderings.csv", &orderings_csv(&table))
}

fn run_pcrlb(manifest: &RunManifest, cfg: &ExperimentConfig) -> Result<()> {
    let lib = cfg.build_library()?;
    let name = cfg.filter.name;
    let kind = cfg.filter.kind_of(name);
    for mode in [RadarMode::CognitiveRadar, RadarMode::TraditionalActiveRadar] {
        let label = format!("{}-{}", mode.label(), name.label());
        let episodes = run_episodes(
            &cfg.scenario,
            mode,
            &kind,
            &lib,
            &cfg.policy,
            manifest.n_runs,
            cfg.scenario.seed,
        );
        let rmse = rmse_from_episodes(&cfg.scenario, &episodes, label.clone())?;
        let bound = monte_carlo_pcrlb(&cfg.scenario, &episodes, label)?;
        write_file(
            &manifest.output_dir,
            &format!("pcrlb_{}_{}.csv", mode.label(), name.label()),
            &pcrlb_csv(&bound, &rmse),
        )?;
    }
    Ok(())
}

/// Parse a channels-by-samples matrix: one channel per line, comma
/// separated.
pub fn read_channel_matrix(path: &Path) -> Result<DataMatrix> {
    let text = fs::read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let row: Vec<f64> = trimmed
            .split(',')
            .map(|tok| {
                tok.trim().parse::<f64>().map_err(|_| {
                    Error::Input(format!("line {}: `{}` is not a number", lineno + 1, tok))
                })
            })
            .collect::<Result<_>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Input(format!(
                    "line {}: expected {} values, got {}",
                    lineno + 1,
                    first.len(),
                    row.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Input("matrix file is empty".into()));
    }
    let p = rows.len();
    let n = rows[0].len();
    let mut m = nalgebra::DMatrix::zeros(p, n);
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    DataMatrix::new(m)
}

fn matrix_csv(m: &nalgebra::DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| fmt_f64(m[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn run_pica(manifest: &RunManifest, cfg: &ExperimentConfig) -> Result<()> {
    let input = manifest
        .input_path
        .as_ref()
        .ok_or_else(|| Error::Input("pica requires --input <matrix file>".into()))?;
    let raw = read_channel_matrix(input)?;
    let q = cfg.pica.latent_dim;
    if q >= raw.channels() {
        return Err(Error::Input(format!(
            "latent dimension must satisfy 1 <= q < p (got q={}, p={}); the noise-floor \
             estimate needs at least one discarded eigenvalue",
            q,
            raw.channels()
        )));
    }
    let data = if cfg.pica.variance_normalize {
        variance_normalize(&raw)?
    } else {
        raw
    };
    let model = fit(&data, q)?;
    let sources = estimate_sources(&model, &data)?;

    let mut summary = String::from("p,n,q,noise_var\n");
    let _ = writeln!(
        summary,
        "{},{},{},{}",
        data.channels(),
        data.observations(),
        q,
        fmt_f64(model.noise_var)
    );
    write_file(&manifest.output_dir, "pica_summary.csv", &summary)?;

    let mut eig = String::from("index,eigenvalue\n");
    for (i, v) in model.eigenvalues.iter().enumerate() {
        let _ = writeln!(eig, "{},{}", i, fmt_f64(*v));
    }
    write_file(&manifest.output_dir, "pica_eigenvalues.csv", &eig)?;
    write_file(&manifest.output_dir, "pica_mixing.csv", &matrix_csv(&model.mixing))?;
    let mean = nalgebra::DMatrix::from_column_slice(model.mean.len(), 1, model.mean.as_slice());
    write_file(&manifest.output_dir, "pica_mean.csv", &matrix_csv(&mean))?;
    write_file(&manifest.output_dir, "pica_sources.csv", &matrix_csv(&sources))?;

    if cfg.pica.spectrum_segment > 0 {
        let mut spectra = String::new();
        for i in 0..data.channels() {
            let channel: Vec<f64> = data.samples().row(i).iter().cloned().collect();
            let spectrum = power_spectrum(&channel, cfg.pica.spectrum_segment)?;
            let row: Vec<String> = spectrum.iter().map(|&v| fmt_f64(v)).collect();
            spectra.push_str(&row.join(","));
            spectra.push('\n');
        }
        write_file(&manifest.output_dir, "pica_spectra.csv", &spectra)?;
    }
    Ok(())
}

/// Execute a manifest end to end, echoing the effective config first.
pub fn execute(manifest: &RunManifest) -> Result<()> {
    if manifest.n_runs < 1 {
        return Err(Error::Input("--runs must be >= 1".into()));
    }
    let cfg = load_config(manifest)?;
    write_file(
        &manifest.output_dir,
        "effective_config.toml",
        &echo_config(&cfg),
    )?;
    let body = || match manifest.subcommand {
        Subcommand::Simulate => run_simulate(manifest, &cfg),
        Subcommand::CompareFilters => run_compare_filters(manifest, &cfg),
        Subcommand::CompareModes => run_compare_modes(manifest, &cfg),
        Subcommand::Pcrlb => run_pcrlb(manifest, &cfg),
        Subcommand::Pica => run_pica(manifest, &cfg),
    };
    if manifest.workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(manifest.workers)
            .build()
            .map_err(|e| Error::Harness(format!("thread pool: {e}")))?;
        pool.install(body)
    } else {
        body()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt_f64_round_trips() {
        for &x in &[0.1, 1.0 / 3.0, 9.8357e8, 1e-300, -2.5e17] {
            let parsed: f64 = fmt_f64(x).parse().unwrap();
            assert_eq!(parsed.to_bits(), x.to_bits());
        }
    }

    #[test]
    fn channel_matrix_parsing() {
        let dir = std::env::temp_dir().join("cogradar-cli-test");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("m.csv");
        fs::write(&path, "1.0, 2.0, 3.0\n4.0, 5.0, 6.0\n").unwrap();
        let m = read_channel_matrix(&path).unwrap();
        assert_eq!(m.channels(), 2);
        assert_eq!(m.observations(), 3);
        assert_eq!(m.samples()[(1, 2)], 6.0);

        fs::write(&path, "1.0, 2.0\n3.0\n").unwrap();
        assert!(read_channel_matrix(&path).is_err());
    }
}
