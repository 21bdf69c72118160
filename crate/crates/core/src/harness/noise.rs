//! Additive white Gaussian measurement noise at a target input SNR.

use super::HarnessError;
use crate::optics::MeasurementStack;
use crate::seed::{stream_rng, tag};
use rand_distr::{Distribution, StandardNormal};

/// Noise specification. `input_snr_db = f64::INFINITY` means no noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub input_snr_db: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn noiseless() -> Self {
        Self {
            input_snr_db: f64::INFINITY,
            seed: 0,
        }
    }
}

/// Adds iid zero-mean Gaussian noise scaled so that
/// `10 log10(||y||^2 / (M sigma_e^2)) = input_snr_db`, with `M` the total
/// entry count across all frames (one sigma for the whole stack). A pure
/// function of `(y, spec)`.
pub fn add_awgn(y: &MeasurementStack, spec: &NoiseSpec) -> Result<MeasurementStack, HarnessError> {
    if spec.input_snr_db.is_nan() {
        return Err(HarnessError::InvalidNoise("input SNR is NaN".into()));
    }
    if spec.input_snr_db.is_infinite() && spec.input_snr_db > 0.0 {
        return Ok(y.clone());
    }
    if y.is_empty() {
        return Err(HarnessError::InvalidNoise("empty measurement stack".into()));
    }
    let energy = y.norm_sqr();
    if energy == 0.0 {
        return Err(HarnessError::ZeroStack);
    }
    let entries = y.total_entries() as f64;
    let sigma = (energy / (entries * 10f64.powf(spec.input_snr_db / 10.0))).sqrt();

    let mut rng = stream_rng(spec.seed, 0, tag::NOISE);
    let frames = y
        .frames
        .iter()
        .map(|frame| {
            frame.mapv(|v| {
                let n: f64 = StandardNormal.sample(&mut rng);
                v + sigma * n
            })
        })
        .collect();
    Ok(MeasurementStack {
        frames,
        plan_digest: y.plan_digest,
    })
}

/// Realized SNR of a noisy stack against its clean counterpart, in dB.
pub fn realized_snr_db(clean: &MeasurementStack, noisy: &MeasurementStack) -> f64 {
    let signal = clean.norm_sqr();
    let noise: f64 = clean
        .frames
        .iter()
        .zip(noisy.frames.iter())
        .map(|(a, b)| {
            a.iter()
                .zip(b.iter())
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
        })
        .sum();
    if noise == 0.0 {
        return f64::INFINITY;
    }
    10.0 * (signal / noise).log10()
}
