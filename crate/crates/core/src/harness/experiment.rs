//! Experiment runner: sweeps an algorithm grid over phantoms, records
//! per-iteration metrics to a single CSV, and writes final reconstructions.
//!
//! Each algorithm carries small gamma/lambda sweep lists; for every
//! (algorithm, phantom) pair the run with the best final SNR provides the
//! summary row and the saved images, mirroring hyperparameter selection by
//! best reconstruction quality.

use super::noise::{add_awgn, NoiseSpec};
use super::phantom::{make_phantom, PhantomSpec};
use super::HarnessError;
use crate::denoise::DenoiserSpec;
use crate::io::{write_atomic, write_image, write_pgm16, ImageData};
use crate::optics::{
    forward_intensity, make_pupil, plan_illumination, LedSelection, MeasurementStack,
    PhaseObject, SystemGeometry,
};
use crate::seed::mix;
use crate::solver::{run_pnp, Mode, Momentum, PnpProblem, ReconstructionReport, Sampling, SolverConfig};
use std::path::PathBuf;

pub const CSV_HEADER: [&str; 15] = [
    "experiment_id",
    "label",
    "phantom",
    "mode",
    "momentum",
    "denoiser",
    "B",
    "gamma",
    "lambda",
    "seed",
    "iteration",
    "snr_db",
    "data_fidelity",
    "cum_wall_time_s",
    "status",
];

#[derive(Debug, Clone)]
pub struct AlgorithmSpec {
    pub label: String,
    pub mode: Mode,
    pub momentum: Momentum,
    pub denoiser: DenoiserSpec,
    /// Minibatch size for online mode.
    pub minibatch_b: usize,
    /// Fixed index set for batch mode (default: all components).
    pub batch_subset: Option<Vec<usize>>,
    /// Sweep lists; the best final SNR picks the summary cell.
    pub gammas: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub iterations: usize,
    pub sampling: Sampling,
    pub seed: u64,
    pub step_decay: bool,
}

impl AlgorithmSpec {
    pub fn new(label: impl Into<String>, mode: Mode, denoiser: DenoiserSpec) -> Self {
        Self {
            label: label.into(),
            mode,
            momentum: Momentum::Fista,
            denoiser,
            minibatch_b: 1,
            batch_subset: None,
            gammas: vec![0.1],
            lambdas: vec![0.0],
            iterations: 100,
            sampling: Sampling::IidUniform,
            seed: 0,
            step_decay: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub id: String,
    pub geometry: SystemGeometry,
    pub selection: LedSelection,
    pub phantoms: Vec<PhantomSpec>,
    pub noise: NoiseSpec,
    pub algorithms: Vec<AlgorithmSpec>,
    pub output_dir: PathBuf,
    pub seed: u64,
    /// Record full-data fidelity rows (disable for timing benchmarks).
    pub record_full_fidelity: bool,
    pub write_images: bool,
}

/// Best-cell summary for one (algorithm, phantom) pair.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub label: String,
    pub phantom: String,
    pub gamma: f64,
    pub lambda: f64,
    pub iterations: usize,
    pub final_snr_db: f64,
    pub final_fidelity: Option<f64>,
    pub total_wall_time_s: f64,
    pub mean_iter_time_s: f64,
    pub mean_gradient_time_s: f64,
    pub mean_denoise_time_s: f64,
}

#[derive(Debug)]
pub struct ExperimentOutcome {
    pub csv_path: PathBuf,
    pub summaries: Vec<RunSummary>,
}

fn slug(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() {
                c.to_ascii_lowercase()
            } else {
                '-'
            }
        })
        .collect()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

struct CellResult {
    gamma: f64,
    lambda: f64,
    report: ReconstructionReport,
    final_snr: f64,
}

/// Runs the full experiment grid. Individual cell failures are recorded in
/// the CSV and the experiment continues.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutcome, HarnessError> {
    if spec.algorithms.is_empty() || spec.phantoms.is_empty() {
        return Err(HarnessError::InvalidExperiment(
            "experiment needs at least one algorithm and one phantom".into(),
        ));
    }
    std::fs::create_dir_all(&spec.output_dir)?;
    let plan = plan_illumination(&spec.geometry, &spec.selection)?;
    let pupil = make_pupil(&spec.geometry)?;
    let object_shape = spec.geometry.object.shape();

    // One simulated stack per phantom, shared by every algorithm.
    let mut problems: Vec<(String, PhaseObject, MeasurementStack)> = Vec::new();
    for phantom in &spec.phantoms {
        let truth = make_phantom(phantom, &spec.geometry.object)?;
        let clean = forward_intensity(&truth, &plan, &pupil)?;
        let noisy = add_awgn(&clean, &spec.noise)?;
        problems.push((phantom.name(), truth, noisy));
    }

    let mut csv = csv::Writer::from_writer(Vec::new());
    csv.write_record(CSV_HEADER)?;
    let mut summaries = Vec::new();

    for algorithm in &spec.algorithms {
        for (pi, (phantom_name, truth, y)) in problems.iter().enumerate() {
            let mut best: Option<CellResult> = None;
            for (gi, &gamma) in algorithm.gammas.iter().enumerate() {
                for (li, &lambda) in algorithm.lambdas.iter().enumerate() {
                    let cell_seed = mix(&[
                        spec.seed,
                        algorithm.seed,
                        pi as u64,
                        gi as u64,
                        li as u64,
                    ]);
                    let config = SolverConfig {
                        mode: algorithm.mode,
                        momentum: algorithm.momentum,
                        gamma,
                        lambda,
                        minibatch_b: algorithm.minibatch_b,
                        batch_subset: algorithm.batch_subset.clone(),
                        iterations: algorithm.iterations,
                        seed: cell_seed,
                        sampling: algorithm.sampling,
                        step_decay: algorithm.step_decay,
                        record_full_fidelity: spec.record_full_fidelity,
                    };
                    let effective_b = match algorithm.mode {
                        Mode::Online => algorithm.minibatch_b,
                        Mode::Batch => algorithm
                            .batch_subset
                            .as_ref()
                            .map(|s| s.len())
                            .unwrap_or(plan.len()),
                    };
                    let problem = PnpProblem {
                        measurements: y,
                        plan: &plan,
                        pupil: &pupil,
                        object_shape,
                        x0: None,
                    };
                    let meta = RowMeta {
                        id: &spec.id,
                        label: &algorithm.label,
                        phantom: phantom_name,
                        mode: algorithm.mode,
                        momentum: algorithm.momentum,
                        denoiser: algorithm.denoiser.kind(),
                        b: effective_b,
                        gamma,
                        lambda,
                        seed: cell_seed,
                    };
                    match run_pnp(&config, &problem, &algorithm.denoiser, Some(truth)) {
                        Ok(report) => {
                            write_iteration_rows(&mut csv, &meta, &report)?;
                            let final_snr =
                                report.rows.last().and_then(|r| r.snr_db).unwrap_or(f64::MIN);
                            let better = match &best {
                                Some(b) => final_snr > b.final_snr,
                                None => true,
                            };
                            if better {
                                best = Some(CellResult {
                                    gamma,
                                    lambda,
                                    report,
                                    final_snr,
                                });
                            }
                        }
                        Err(err) => {
                            csv.write_record([
                                meta.id,
                                meta.label,
                                meta.phantom,
                                meta.mode.as_str(),
                                meta.momentum.as_str(),
                                meta.denoiser,
                                &meta.b.to_string(),
                                &meta.gamma.to_string(),
                                &meta.lambda.to_string(),
                                &meta.seed.to_string(),
                                "0",
                                "",
                                "",
                                "",
                                &format!("failed: {err}"),
                            ])?;
                        }
                    }
                }
            }

            if let Some(cell) = best {
                let rows = &cell.report.rows;
                let total: f64 = rows.iter().map(|r| r.wall_time_s).sum();
                let k = rows.len().max(1) as f64;
                let summary = RunSummary {
                    label: algorithm.label.clone(),
                    phantom: phantom_name.clone(),
                    gamma: cell.gamma,
                    lambda: cell.lambda,
                    iterations: rows.len(),
                    final_snr_db: cell.final_snr,
                    final_fidelity: rows.last().and_then(|r| r.fidelity_full),
                    total_wall_time_s: total,
                    mean_iter_time_s: total / k,
                    mean_gradient_time_s: rows.iter().map(|r| r.gradient_time_s).sum::<f64>() / k,
                    mean_denoise_time_s: rows.iter().map(|r| r.denoise_time_s).sum::<f64>() / k,
                };
                csv.write_record([
                    spec.id.as_str(),
                    algorithm.label.as_str(),
                    phantom_name.as_str(),
                    algorithm.mode.as_str(),
                    algorithm.momentum.as_str(),
                    algorithm.denoiser.kind(),
                    &match algorithm.mode {
                        Mode::Online => algorithm.minibatch_b,
                        Mode::Batch => algorithm
                            .batch_subset
                            .as_ref()
                            .map(|s| s.len())
                            .unwrap_or(plan.len()),
                    }
                    .to_string(),
                    &summary.gamma.to_string(),
                    &summary.lambda.to_string(),
                    "",
                    &summary.iterations.to_string(),
                    &summary.final_snr_db.to_string(),
                    &fmt_opt(summary.final_fidelity),
                    &summary.total_wall_time_s.to_string(),
                    "summary",
                ])?;
                if spec.write_images {
                    let stem = format!(
                        "{}_{}_{}",
                        slug(&spec.id),
                        slug(&algorithm.label),
                        slug(phantom_name)
                    );
                    let img_path = spec.output_dir.join(format!("{stem}.fpmimg"));
                    write_image(
                        &img_path,
                        &ImageData::Real(cell.report.final_x.values.clone()),
                    )?;
                    write_pgm16(
                        &spec.output_dir.join(format!("{stem}.pgm")),
                        &cell.report.final_x.values,
                    )?;
                }
                summaries.push(summary);
            } else {
                csv.write_record([
                    spec.id.as_str(),
                    algorithm.label.as_str(),
                    phantom_name.as_str(),
                    algorithm.mode.as_str(),
                    algorithm.momentum.as_str(),
                    algorithm.denoiser.kind(),
                    "",
                    "",
                    "",
                    "",
                    "0",
                    "",
                    "",
                    "",
                    "failed: every sweep cell failed",
                ])?;
            }
        }
    }

    // Ground-truth images once per phantom.
    if spec.write_images {
        for (phantom_name, truth, _) in &problems {
            let path = spec
                .output_dir
                .join(format!("{}_truth_{}.fpmimg", slug(&spec.id), slug(phantom_name)));
            write_image(&path, &ImageData::Real(truth.values.clone()))?;
        }
    }

    let csv_path = spec.output_dir.join(format!("{}_metrics.csv", slug(&spec.id)));
    let bytes = csv
        .into_inner()
        .map_err(|e| HarnessError::InvalidExperiment(format!("csv buffer: {e}")))?;
    write_atomic(&csv_path, &bytes)?;
    Ok(ExperimentOutcome { csv_path, summaries })
}

struct RowMeta<'a> {
    id: &'a str,
    label: &'a str,
    phantom: &'a str,
    mode: Mode,
    momentum: Momentum,
    denoiser: &'a str,
    b: usize,
    gamma: f64,
    lambda: f64,
    seed: u64,
}

fn write_iteration_rows(
    csv: &mut csv::Writer<Vec<u8>>,
    meta: &RowMeta,
    report: &ReconstructionReport,
) -> Result<(), HarnessError> {
    let mut cum = 0.0;
    for row in &report.rows {
        cum += row.wall_time_s;
        csv.write_record([
            meta.id,
            meta.label,
            meta.phantom,
            meta.mode.as_str(),
            meta.momentum.as_str(),
            meta.denoiser,
            &meta.b.to_string(),
            &meta.gamma.to_string(),
            &meta.lambda.to_string(),
            &meta.seed.to_string(),
            &row.k.to_string(),
            &fmt_opt(row.snr_db),
            &fmt_opt(row.fidelity_full),
            &cum.to_string(),
            "ok",
        ])?;
    }
    Ok(())
}
