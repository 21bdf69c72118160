//! Simulation harness: phantoms, measurement noise, and the experiment
//! runner that sweeps solver configurations and emits CSV metrics plus
//! reconstructed images.

mod experiment;
mod noise;
mod phantom;

pub use crate::metrics::{snr_db, MetricError, SNR_CAP_DB};
pub use experiment::{
    run_experiment, AlgorithmSpec, ExperimentOutcome, ExperimentSpec, RunSummary, CSV_HEADER,
};
pub use noise::{add_awgn, realized_snr_db, NoiseSpec};
pub use phantom::{make_phantom, BuiltinPhantom, PhantomSource, PhantomSpec};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid phantom: {0}")]
    InvalidPhantom(String),
    #[error("cannot scale noise for an all-zero measurement stack")]
    ZeroStack,
    #[error("invalid noise spec: {0}")]
    InvalidNoise(String),
    #[error("invalid experiment: {0}")]
    InvalidExperiment(String),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Optics(#[from] crate::optics::OpticsError),
    #[error(transparent)]
    Solver(#[from] crate::solver::SolverError),
    #[error(transparent)]
    Format(#[from] crate::io::FormatError),
    #[error("image file: {0}")]
    Image(#[from] image::ImageError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
