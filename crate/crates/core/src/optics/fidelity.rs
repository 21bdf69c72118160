//! Quadratic intensity data-fidelity and its gradient in the real phase
//! image.
//!
//! For a component subset `S` (a multiset of plan indices),
//! `d_S(x) = (1/|S|) sum_{j in S} || |Psi_j(x)|^2 - y_j ||^2` with
//! `Psi_j = H_j exp(i x)`. The gradient follows from
//! `d|Psi|^2/dx = 2 Re{ conj(Psi) dPsi/dx }`:
//!
//! `grad d_S(x) = (4/|S|) sum_j Re{ conj(i exp(i x)) .* H_j^[ Psi_j .* (|Psi_j|^2 - y_j) ] }`
//!
//! Per-LED terms are evaluated as an index-ascending map and reduced in
//! ascending order, so results are bit-reproducible for any evaluation
//! strategy.

use super::operator::{forward_from_spectrum, scatter_adjoint_spectrum, transmittance};
use super::{IlluminationPlan, MeasurementStack, OpticsError, PhaseObject, PupilMask};
use crate::fft2::{fft2, ifft2};
use ndarray::Array2;
use num_complex::Complex64;

fn validate_problem(
    x: &PhaseObject,
    y: &MeasurementStack,
    plan: &IlluminationPlan,
    pupil: &PupilMask,
    subset: &[usize],
) -> Result<(), OpticsError> {
    if y.len() != plan.len() {
        return Err(OpticsError::StackPlanMismatch {
            frames: y.len(),
            plan: plan.len(),
        });
    }
    if subset.is_empty() {
        return Err(OpticsError::EmptySubset);
    }
    if let Some(&index) = subset.iter().find(|&&j| j >= plan.len()) {
        return Err(OpticsError::IndexOutOfRange {
            index,
            len: plan.len(),
        });
    }
    let m = pupil.values.dim();
    if let Some(fs) = y.frame_shape() {
        if fs != m {
            return Err(OpticsError::ShapeMismatch { expected: m, got: fs });
        }
    }
    let n = x.shape();
    if n.0 < m.0 || n.1 < m.1 {
        return Err(OpticsError::ShapeMismatch { expected: m, got: n });
    }
    Ok(())
}

/// Ascending `(index, multiplicity)` pairs of a subset multiset.
fn grouped(subset: &[usize]) -> Vec<(usize, usize)> {
    let mut sorted = subset.to_vec();
    sorted.sort_unstable();
    let mut groups: Vec<(usize, usize)> = Vec::new();
    for j in sorted {
        match groups.last_mut() {
            Some((idx, count)) if *idx == j => *count += 1,
            _ => groups.push((j, 1)),
        }
    }
    groups
}

/// Mean squared intensity mismatch over the subset.
pub fn data_fidelity(
    x: &PhaseObject,
    y: &MeasurementStack,
    plan: &IlluminationPlan,
    pupil: &PupilMask,
    subset: &[usize],
) -> Result<f64, OpticsError> {
    validate_problem(x, y, plan, pupil, subset)?;
    let spectrum = fft2(&transmittance(x).values);
    let mut total = 0.0;
    for (j, count) in grouped(subset) {
        let psi = forward_from_spectrum(&spectrum, &plan.entries[j], pupil);
        let term: f64 = psi
            .iter()
            .zip(y.frames[j].iter())
            .map(|(p, &yv)| {
                let r = p.norm_sqr() - yv;
                r * r
            })
            .sum();
        for _ in 0..count {
            total += term;
        }
    }
    Ok(total / subset.len() as f64)
}

/// Gradient of [`data_fidelity`] with respect to `x`, plus the fidelity
/// value at `x` over the same subset (a free byproduct).
pub fn grad_and_fidelity(
    x: &PhaseObject,
    y: &MeasurementStack,
    plan: &IlluminationPlan,
    pupil: &PupilMask,
    subset: &[usize],
) -> Result<(Array2<f64>, f64), OpticsError> {
    validate_problem(x, y, plan, pupil, subset)?;
    let u = transmittance(x);
    let spectrum = fft2(&u.values);
    let n = x.shape();

    let mut acc: Array2<Complex64> = Array2::zeros(n);
    let mut fidelity = 0.0;
    for (j, count) in grouped(subset) {
        let entry = &plan.entries[j];
        let psi = forward_from_spectrum(&spectrum, entry, pupil);
        let weighted = Array2::from_shape_fn(psi.dim(), |idx| {
            let p = psi[idx];
            p * (p.norm_sqr() - y.frames[j][idx])
        });
        let term: f64 = psi
            .iter()
            .zip(y.frames[j].iter())
            .map(|(p, &yv)| {
                let r = p.norm_sqr() - yv;
                r * r
            })
            .sum();
        let w_spectrum = fft2(&weighted);
        scatter_adjoint_spectrum(&mut acc, &w_spectrum, entry, pupil, count);
        for _ in 0..count {
            fidelity += term;
        }
    }

    let m = pupil.values.dim();
    let alpha = ((m.0 * m.1) as f64 / (n.0 * n.1) as f64).sqrt();
    let back = ifft2(&acc);
    let scale = 4.0 * alpha / subset.len() as f64;
    let grad = Array2::from_shape_fn(n, |idx| {
        // Re{ conj(i u) * back } = Re{ -i conj(u) * back }
        let ciu = Complex64::new(0.0, -1.0) * u.values[idx].conj();
        scale * (ciu * back[idx]).re
    });
    Ok((grad, fidelity / subset.len() as f64))
}

/// Gradient of [`data_fidelity`] with respect to the real phase image.
pub fn grad_data(
    x: &PhaseObject,
    y: &MeasurementStack,
    plan: &IlluminationPlan,
    pupil: &PupilMask,
    subset: &[usize],
) -> Result<Array2<f64>, OpticsError> {
    grad_and_fidelity(x, y, plan, pupil, subset).map(|(g, _)| g)
}
