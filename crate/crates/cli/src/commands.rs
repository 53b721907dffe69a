//! The five subcommands. Frequencies and dictionary entries run in parallel;
//! results are collected and written from the calling thread.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use echoid::descriptor::{
    descriptor_from_coefficients, descriptor_from_measurements, DescriptorSource, DescriptorTensor,
};
use echoid::dictionary::{build_dictionary, identify, Dictionary, IdentificationResult};
use echoid::forward::{add_noise, simulate_msr, MsrMatrix};
use echoid::geometry::Boundary;
use echoid::recon::{
    analytic_singular_values, build_operator, lsq_reconstruct, pinv_reconstruct, relative_error, singular_values,
    AcquisitionOperator, ORTHOGONALITY_TOLERANCE,
};
use echoid::sct::{compute_w, ScatteringCoeffMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::output::{create_dir, write_csv, write_json, Failure, Manifest, OutputRecord};

/// Independent random streams of the run generator, one per command.
#[derive(Debug, Clone, Copy)]
enum Stream {
    Simulate = 1,
    Reconstruct = 2,
    Identify = 3,
}

fn generator(config: &ExperimentConfig, stream: Stream) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    rng.set_stream(stream as u64);
    rng
}

pub fn msr_file_name(k: usize) -> String {
    format!("msr_{k:04}.json")
}

/// Simulates noisy measurements of `target` at every data frequency, drawing
/// one noise seed per frequency from `rng`.
fn simulate_target(
    config: &ExperimentConfig,
    target: &Boundary,
    rng: &mut ChaCha20Rng,
) -> Vec<(f64, u64, echoid::Result<MsrMatrix>)> {
    let acq = config.acquisition.config();
    let freqs = config.frequencies.samples();
    let seeds: Vec<u64> = freqs.iter().map(|_| rng.random()).collect();
    freqs
        .par_iter()
        .zip(seeds.par_iter())
        .map(|(&omega, &seed)| {
            let v = simulate_msr(target, &config.medium, &acq, omega).and_then(|v| add_noise(&v, config.noise, seed));
            (omega, seed, v)
        })
        .collect()
}

pub fn run_simulate(config: &ExperimentConfig) -> Result<Manifest> {
    let dir = config.output.join("msr");
    create_dir(&dir)?;
    let target = config.target_shape(&config.shape)?;
    let mut rng = generator(config, Stream::Simulate);
    let start = Instant::now();
    let results = simulate_target(config, &target, &mut rng);
    let mut manifest = Manifest::new("simulate", config);
    for (k, (omega, seed, result)) in results.into_iter().enumerate() {
        match result {
            Ok(v) => {
                let name = msr_file_name(k);
                fs::write(dir.join(&name), v.to_json()?)?;
                manifest.outputs.push(OutputRecord {
                    file: name,
                    omega: Some(omega),
                    seed: Some(seed),
                    snr: Some(v.snr()),
                });
            }
            Err(e) => {
                log::error!("simulation at omega = {omega} failed: {e}");
                manifest.failures.push(Failure {
                    item: format!("omega = {omega}"),
                    error: e.to_string(),
                });
            }
        }
    }
    log::info!(
        "simulated {} of {} frequencies for {} in {:.1?}",
        manifest.outputs.len(),
        config.frequencies.len(),
        config.shape,
        start.elapsed()
    );
    manifest.write(&dir)?;
    Ok(manifest)
}

/// Reads every `msr_*.json` in `dir`, in file-name order.
pub fn load_msr_set(dir: &Path) -> Result<Vec<MsrMatrix>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading MSR set {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("msr_") && n.ends_with(".json"))
        })
        .collect();
    files.sort();
    if files.is_empty() {
        bail!("no MSR files in {}", dir.display());
    }
    files
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Ok(MsrMatrix::from_json(&text)?)
        })
        .collect()
}

/// Inverse when the operator is orthogonal, least squares otherwise.
fn reconstruct(op: &AcquisitionOperator, v: &MsrMatrix) -> echoid::Result<(ScatteringCoeffMatrix, &'static str)> {
    if op.is_full_view() && op.orthogonality_deviation() <= ORTHOGONALITY_TOLERANCE {
        Ok((pinv_reconstruct(op, v)?, "pinv"))
    } else {
        Ok((lsq_reconstruct(op, v)?.w, "lsq"))
    }
}

#[derive(Debug, Serialize)]
struct WErrorRow {
    omega: f64,
    order: usize,
    method: &'static str,
    snr: f64,
    relative_error: f64,
}

#[derive(Debug, Serialize)]
pub struct SweepRow {
    pub sigma0: f64,
    pub order: usize,
    pub relative_error: f64,
}

pub fn run_reconstruct(config: &ExperimentConfig, data: Option<&Path>) -> Result<Manifest> {
    let dir = config.output.join("reconstruct");
    create_dir(&dir)?;
    let mut manifest = Manifest::new("reconstruct", config);
    if !config.acquisition.is_full() {
        log::info!("limited-view acquisition: coefficient reconstruction skipped");
        manifest
            .notes
            .push("skipped: limited-view data are matched through measured far fields".into());
        manifest.write(&dir)?;
        return Ok(manifest);
    }
    let msr_dir = data.map(Path::to_path_buf).unwrap_or_else(|| config.output.join("msr"));
    let set = load_msr_set(&msr_dir)?;
    let target = config.target_shape(&config.shape)?;
    let results: Vec<_> = set
        .par_iter()
        .map(|v| -> echoid::Result<_> {
            let op = build_operator(&v.acquisition, &config.medium, v.omega, config.order)?;
            let (w, method) = reconstruct(&op, v)?;
            let truth = compute_w(&target, &config.medium, v.omega, config.order)?;
            let err = relative_error(&w, &truth);
            Ok((w, method, err))
        })
        .collect();
    let mut rows = Vec::new();
    for (k, (v, result)) in set.iter().zip(results).enumerate() {
        match result {
            Ok((w, method, err)) => {
                let name = format!("w_{k:04}.json");
                fs::write(dir.join(&name), w.to_json()?)?;
                manifest.outputs.push(OutputRecord {
                    file: name,
                    omega: Some(v.omega),
                    seed: v.seed,
                    snr: Some(v.snr()),
                });
                rows.push(WErrorRow {
                    omega: v.omega,
                    order: config.order,
                    method,
                    snr: v.snr(),
                    relative_error: err,
                });
            }
            Err(e) => {
                log::error!("reconstruction at omega = {} failed: {e}", v.omega);
                manifest.failures.push(Failure {
                    item: format!("omega = {}", v.omega),
                    error: e.to_string(),
                });
            }
        }
    }
    write_csv(&dir.join("w_errors.csv"), &rows)?;
    manifest.outputs.push(OutputRecord::file("w_errors.csv"));

    let sweep = noise_sweep(config, &target)?;
    write_csv(&dir.join("error_vs_order.csv"), &sweep)?;
    manifest.outputs.push(OutputRecord::file("error_vs_order.csv"));
    manifest.write(&dir)?;
    Ok(manifest)
}

/// Relative error of the reconstruction against the order for every noise
/// level of the sweep. All levels and orders share one noise draw.
pub fn noise_sweep(config: &ExperimentConfig, target: &Boundary) -> Result<Vec<SweepRow>> {
    let sweep = &config.sweep;
    let acq = config.acquisition.config();
    let clean = simulate_msr(target, &config.medium, &acq, sweep.omega)?;
    let top = sweep.orders.iter().copied().max().unwrap_or(0);
    let truth = compute_w(target, &config.medium, sweep.omega, top)?;
    let seed: u64 = generator(config, Stream::Reconstruct).random();
    let ops = sweep
        .orders
        .par_iter()
        .map(|&k| build_operator(&acq, &config.medium, sweep.omega, k))
        .collect::<echoid::Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for &sigma0 in &sweep.noise_levels {
        let noisy = add_noise(&clean, sigma0, seed)?;
        let errors = ops
            .par_iter()
            .map(|op| reconstruct(op, &noisy).map(|(w, _)| relative_error(&w, &truth)))
            .collect::<echoid::Result<Vec<_>>>()?;
        for (&order, relative_error) in sweep.orders.iter().zip(errors) {
            rows.push(SweepRow {
                sigma0,
                order,
                relative_error,
            });
        }
    }
    Ok(rows)
}

pub fn run_build_dictionary(config: &ExperimentConfig) -> Result<Manifest> {
    let dir = config.dictionary_dir();
    let dict_config = config.dictionary_config()?;
    let shapes = config
        .dictionary
        .shapes
        .iter()
        .map(|n| config.reference_shape(n))
        .collect::<Result<Vec<_>>>()?;
    let start = Instant::now();
    let dict = build_dictionary(&shapes, &dict_config)?;
    log::info!(
        "built {} entries over {} frequencies in {:.1?}",
        dict.entries.len(),
        dict_config.frequencies.len(),
        start.elapsed()
    );
    dict.save(&dir)?;
    let mut manifest = Manifest::new("build-dict", config);
    manifest.outputs.push(OutputRecord::file("manifest.json"));
    for e in &dict.entries {
        manifest.outputs.push(OutputRecord::file(format!("{}.json", e.name)));
        manifest.outputs.push(OutputRecord::file(format!("{}.bin", e.name)));
    }
    manifest.write(&dir)?;
    Ok(manifest)
}

/// Descriptor tensor of one target from its measurements.
pub fn target_descriptor(config: &ExperimentConfig, set: &[MsrMatrix]) -> Result<DescriptorTensor> {
    let band = config.acquisition.band();
    let grid = config.dictionary.grid;
    let full = config.acquisition.is_full();
    let slices = set
        .par_iter()
        .map(|v| {
            if full {
                let op = build_operator(&v.acquisition, &config.medium, v.omega, config.order)?;
                let (w, _) = reconstruct(&op, v)?;
                descriptor_from_coefficients(&w, grid, band)
            } else {
                descriptor_from_measurements(v, config.medium.k0(v.omega), band)
            }
        })
        .collect::<echoid::Result<Vec<_>>>()?;
    let source = if full {
        DescriptorSource::Coefficients
    } else {
        DescriptorSource::Measurements
    };
    Ok(DescriptorTensor::new(None, band, source, slices)?)
}

#[derive(Debug, Serialize)]
pub struct ErrorRow {
    pub target: String,
    pub candidate: String,
    pub error: Option<f64>,
    pub normalized_error: Option<f64>,
    pub scale: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct ScaleRow {
    pub target: String,
    pub identified: String,
    pub correct: bool,
    pub true_scale: f64,
    pub estimated_scale: Option<f64>,
    pub scale_error: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct IdentifySummary {
    pub correct: usize,
    pub total: usize,
    pub all_correct: bool,
    pub confusions: Vec<(String, String)>,
}

pub fn run_identify(config: &ExperimentConfig, dictionary: Option<&Path>, data: Option<&Path>) -> Result<Manifest> {
    let dict_dir = dictionary
        .map(Path::to_path_buf)
        .unwrap_or_else(|| config.dictionary_dir());
    let dict = Dictionary::load(&dict_dir)
        .with_context(|| format!("loading dictionary {} (run build-dict first)", dict_dir.display()))?;
    let expected = config.dictionary_config()?;
    if dict.config != expected {
        bail!(
            "dictionary at {} was built with a different configuration",
            dict_dir.display()
        );
    }
    let targets = config.target_names();
    if data.is_some() && targets.len() != 1 {
        bail!(
            "--data supplies measurements for exactly one target, config lists {}",
            targets.len()
        );
    }
    let dir = config.output.join("identify");
    create_dir(&dir)?;
    let mut manifest = Manifest::new("identify", config);
    let mut rng = generator(config, Stream::Identify);
    let mut error_rows = Vec::new();
    let mut scale_rows = Vec::new();
    let mut summary = IdentifySummary {
        correct: 0,
        total: 0,
        all_correct: true,
        confusions: Vec::new(),
    };
    for name in &targets {
        let set = match data {
            Some(d) => load_msr_set(d)?,
            None => {
                let target = config.target_shape(name)?;
                let mut set = Vec::new();
                for (omega, _, result) in simulate_target(config, &target, &mut rng) {
                    match result {
                        Ok(v) => set.push(v),
                        Err(e) => {
                            log::error!("{name}: simulation at omega = {omega} failed: {e}");
                            manifest.failures.push(Failure {
                                item: format!("{name}, omega = {omega}"),
                                error: e.to_string(),
                            });
                        }
                    }
                }
                set
            }
        };
        let result = match target_descriptor(config, &set).and_then(|t| Ok(identify(&t, &dict)?)) {
            Ok(r) => r,
            Err(e) => {
                log::error!("{name}: identification failed: {e}");
                manifest.failures.push(Failure {
                    item: name.clone(),
                    error: e.to_string(),
                });
                continue;
            }
        };
        record(
            name,
            config.transform.scale,
            &result,
            &mut error_rows,
            &mut scale_rows,
            &mut summary,
        );
        let file = format!("{name}.json");
        write_json(&dir.join(&file), &result)?;
        manifest.outputs.push(OutputRecord::file(file));
        log::info!("{name} -> {} (scale {:?})", result.best_name, result.best_scale());
    }
    summary.all_correct = summary.correct == summary.total;
    write_csv(&dir.join("matching_errors.csv"), &error_rows)?;
    write_csv(&dir.join("scale_estimates.csv"), &scale_rows)?;
    write_json(&dir.join("summary.json"), &summary)?;
    for f in ["matching_errors.csv", "scale_estimates.csv", "summary.json"] {
        manifest.outputs.push(OutputRecord::file(f));
    }
    manifest
        .notes
        .push(format!("{}/{} targets identified", summary.correct, summary.total));
    manifest.write(&dir)?;
    Ok(manifest)
}

fn record(
    name: &str,
    true_scale: f64,
    result: &IdentificationResult,
    error_rows: &mut Vec<ErrorRow>,
    scale_rows: &mut Vec<ScaleRow>,
    summary: &mut IdentifySummary,
) {
    for (i, candidate) in result.names.iter().enumerate() {
        error_rows.push(ErrorRow {
            target: name.to_string(),
            candidate: candidate.clone(),
            error: result.errors[i],
            normalized_error: result.normalized_errors[i],
            scale: result.scales[i],
        });
    }
    let correct = result.best_name.eq_ignore_ascii_case(name);
    let estimated = result.best_scale();
    scale_rows.push(ScaleRow {
        target: name.to_string(),
        identified: result.best_name.clone(),
        correct,
        true_scale,
        estimated_scale: estimated,
        scale_error: estimated.map(|s| (s - true_scale).abs()),
    });
    summary.total += 1;
    if correct {
        summary.correct += 1;
    } else {
        summary.confusions.push((name.to_string(), result.best_name.clone()));
    }
}

#[derive(Debug, Serialize)]
pub struct SpectrumRow {
    pub view: &'static str,
    pub order: usize,
    pub index: usize,
    pub singular_value: f64,
}

#[derive(Debug, Serialize)]
pub struct SpectrumSummaryRow {
    pub view: &'static str,
    pub order: usize,
    pub count: usize,
    pub largest: f64,
    pub smallest: f64,
    pub condition: f64,
    /// Plateaus of the closed-form spectrum, one per column index `n`.
    pub plateaus: Option<usize>,
}

pub fn run_spectrum(config: &ExperimentConfig) -> Result<Manifest> {
    let dir = config.output.join("spectrum");
    create_dir(&dir)?;
    let settings = &config.spectrum;
    let jobs: Vec<(&'static str, crate::config::AcquisitionSpec, usize)> = settings
        .full_orders
        .iter()
        .map(|&k| ("full", settings.full, k))
        .chain(
            settings
                .limited_orders
                .iter()
                .map(|&k| ("limited", settings.limited, k)),
        )
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(view, acq, k)| -> echoid::Result<_> {
            let op = build_operator(&acq.config(), &config.medium, settings.omega, k)?;
            let s = singular_values(&op)?;
            let plateaus = if op.is_full_view() {
                Some(count_plateaus(&analytic_singular_values(&op)?))
            } else {
                None
            };
            Ok((view, k, s, plateaus))
        })
        .collect::<echoid::Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for (view, order, s, plateaus) in results {
        let (largest, smallest) = (s[0], s[s.len() - 1]);
        summary.push(SpectrumSummaryRow {
            view,
            order,
            count: s.len(),
            largest,
            smallest,
            condition: if smallest == 0.0 {
                f64::INFINITY
            } else {
                largest / smallest
            },
            plateaus,
        });
        rows.extend(s.into_iter().enumerate().map(|(index, singular_value)| SpectrumRow {
            view,
            order,
            index,
            singular_value,
        }));
    }
    write_csv(&dir.join("singular_values.csv"), &rows)?;
    write_csv(&dir.join("spectrum_summary.csv"), &summary)?;
    let mut manifest = Manifest::new("spectrum", config);
    manifest.outputs.push(OutputRecord::file("singular_values.csv"));
    manifest.outputs.push(OutputRecord::file("spectrum_summary.csv"));
    manifest.write(&dir)?;
    Ok(manifest)
}

/// Number of column indices whose values are constant in `m`.
fn count_plateaus(values: &[(i64, i64, f64)]) -> usize {
    let mut ns: Vec<i64> = values.iter().map(|t| t.1).collect();
    ns.sort_unstable();
    ns.dedup();
    ns.iter()
        .filter(|&&n| {
            let group: Vec<f64> = values.iter().filter(|t| t.1 == n).map(|t| t.2).collect();
            let hi = group.iter().copied().fold(0.0, f64::max);
            group.iter().all(|&x| (hi - x).abs() <= 1e-12 * hi)
        })
        .count()
}
