//! Reconstruction quality metrics.

use crate::optics::PhaseObject;
use thiserror::Error;

/// Cap applied when the residual vanishes (or the ratio overflows the cap).
pub const SNR_CAP_DB: f64 = 300.0;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("shape mismatch: reference {0:?} vs estimate {1:?}")]
    ShapeMismatch((usize, usize), (usize, usize)),
    #[error("reference has zero norm")]
    ZeroReference,
}

/// Amplitude SNR in dB: `20 log10(||ref|| / ||ref - est||)`.
///
/// With `align_offset` the best constant phase offset
/// `c = mean(estimate - reference)` is removed from the estimate first; the
/// forward model is exactly invariant to such offsets, so they must not
/// count as reconstruction error. Capped at [`SNR_CAP_DB`].
pub fn snr_db(
    reference: &PhaseObject,
    estimate: &PhaseObject,
    align_offset: bool,
) -> Result<f64, MetricError> {
    if reference.shape() != estimate.shape() {
        return Err(MetricError::ShapeMismatch(
            reference.shape(),
            estimate.shape(),
        ));
    }
    let n = reference.values.len() as f64;
    let ref_norm_sq: f64 = reference.values.iter().map(|v| v * v).sum();
    if ref_norm_sq == 0.0 {
        return Err(MetricError::ZeroReference);
    }
    let offset = if align_offset {
        estimate
            .values
            .iter()
            .zip(reference.values.iter())
            .map(|(e, r)| e - r)
            .sum::<f64>()
            / n
    } else {
        0.0
    };
    let resid_sq: f64 = estimate
        .values
        .iter()
        .zip(reference.values.iter())
        .map(|(e, r)| {
            let d = r - (e - offset);
            d * d
        })
        .sum();
    if resid_sq == 0.0 {
        return Ok(SNR_CAP_DB);
    }
    Ok((10.0 * (ref_norm_sq / resid_sq).log10()).min(SNR_CAP_DB))
}
