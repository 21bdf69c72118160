//! The FPM forward operator `H` and its adjoint.
//!
//! `H u = sqrt(m/n) * IFFT_c( P .* crop_k( FFT_o(u) ) )` where `crop_k`
//! takes the centered `m1 x m2` spectrum window shifted by the entry's
//! integer offset. The `sqrt(m/n)` factor makes a unit transmittance through
//! an all-pass on-axis window produce a unit-intensity camera image; it is
//! applied symmetrically in the adjoint so `<Hu, v> = <u, H^ v>` holds
//! exactly.

use super::{
    ComplexField, IlluminationPlan, MeasurementStack, OpticsError, PhaseObject, PlanEntry,
    PupilMask,
};
use crate::fft2::{fft2, ifft2};
use ndarray::Array2;
use num_complex::Complex64;

/// Elementwise `exp(i x)`.
pub fn transmittance(x: &PhaseObject) -> ComplexField {
    ComplexField {
        values: x.values.mapv(|p| Complex64::from_polar(1.0, p)),
    }
}

fn scale_factor(n: (usize, usize), m: (usize, usize)) -> f64 {
    ((m.0 * m.1) as f64 / ((n.0 * n.1) as f64)).sqrt()
}

/// Top-left corner of the crop window in centered frequency coordinates;
/// centered frequency `e` lives at raw (DC-at-zero) index `e mod n`.
fn window_origin(m: (usize, usize), entry: &PlanEntry) -> (i64, i64) {
    (
        entry.offset.0 - m.0 as i64 / 2,
        entry.offset.1 - m.1 as i64 / 2,
    )
}

/// Camera field for one plan entry, given the precomputed object spectrum
/// `FFT_o(u)` in raw (DC-at-zero) order.
pub(crate) fn forward_from_spectrum(
    spectrum: &Array2<Complex64>,
    entry: &PlanEntry,
    pupil: &PupilMask,
) -> Array2<Complex64> {
    let n = spectrum.dim();
    let m = pupil.values.dim();
    let (r0, c0) = window_origin(m, entry);
    let mut block = Array2::zeros(m);
    for a in 0..m.0 {
        for b in 0..m.1 {
            let src_r = (r0 + a as i64).rem_euclid(n.0 as i64) as usize;
            let src_c = (c0 + b as i64).rem_euclid(n.1 as i64) as usize;
            // Window row `a` carries centered camera frequency `a - m/2`,
            // i.e. raw index `(a + m/2) mod m`.
            let dst_r = (a + m.0 / 2) % m.0;
            let dst_c = (b + m.1 / 2) % m.1;
            block[[dst_r, dst_c]] = pupil.values[[a, b]] * spectrum[[src_r, src_c]];
        }
    }
    let mut psi = ifft2(&block);
    let alpha = scale_factor(n, m);
    psi.mapv_inplace(|v| v * alpha);
    psi
}

/// Applies `H` to an arbitrary complex object-plane field.
pub fn apply_forward(
    u: &ComplexField,
    entry: &PlanEntry,
    pupil: &PupilMask,
) -> Result<ComplexField, OpticsError> {
    let n = u.values.dim();
    let m = pupil.values.dim();
    if n.0 < m.0 || n.1 < m.1 {
        return Err(OpticsError::ShapeMismatch { expected: m, got: n });
    }
    let spectrum = fft2(&u.values);
    Ok(ComplexField {
        values: forward_from_spectrum(&spectrum, entry, pupil),
    })
}

/// Camera field `Psi = H exp(i x)` for one illumination.
pub fn forward_field(
    x: &PhaseObject,
    entry: &PlanEntry,
    pupil: &PupilMask,
) -> Result<ComplexField, OpticsError> {
    apply_forward(&transmittance(x), entry, pupil)
}

/// Noiseless intensity stack `|H_j exp(i x)|^2` over the whole plan.
pub fn forward_intensity(
    x: &PhaseObject,
    plan: &IlluminationPlan,
    pupil: &PupilMask,
) -> Result<MeasurementStack, OpticsError> {
    let n = x.shape();
    let m = pupil.values.dim();
    if n.0 < m.0 || n.1 < m.1 {
        return Err(OpticsError::ShapeMismatch { expected: m, got: n });
    }
    let spectrum = fft2(&transmittance(x).values);
    let frames = plan
        .entries
        .iter()
        .map(|entry| forward_from_spectrum(&spectrum, entry, pupil).mapv(|v| v.norm_sqr()))
        .collect();
    Ok(MeasurementStack {
        frames,
        plan_digest: plan.digest(),
    })
}

/// Scatters `conj(P) .* FFT_c(v)` into a raw object-sized spectrum at the
/// entry's window. Shared by the adjoint and the gradient accumulator.
pub(crate) fn scatter_adjoint_spectrum(
    acc: &mut Array2<Complex64>,
    v_spectrum: &Array2<Complex64>,
    entry: &PlanEntry,
    pupil: &PupilMask,
    copies: usize,
) {
    let n = acc.dim();
    let m = pupil.values.dim();
    let (r0, c0) = window_origin(m, entry);
    for a in 0..m.0 {
        for b in 0..m.1 {
            let dst_r = (r0 + a as i64).rem_euclid(n.0 as i64) as usize;
            let dst_c = (c0 + b as i64).rem_euclid(n.1 as i64) as usize;
            let src_r = (a + m.0 / 2) % m.0;
            let src_c = (b + m.1 / 2) % m.1;
            let term = pupil.values[[a, b]].conj() * v_spectrum[[src_r, src_c]];
            for _ in 0..copies {
                acc[[dst_r, dst_c]] += term;
            }
        }
    }
}

/// Applies the adjoint `H^` to a camera-plane field, producing an
/// object-plane field of shape `object_shape`.
pub fn apply_adjoint(
    v: &ComplexField,
    entry: &PlanEntry,
    pupil: &PupilMask,
    object_shape: (usize, usize),
) -> Result<ComplexField, OpticsError> {
    let m = pupil.values.dim();
    if v.values.dim() != m {
        return Err(OpticsError::ShapeMismatch {
            expected: m,
            got: v.values.dim(),
        });
    }
    if object_shape.0 < m.0 || object_shape.1 < m.1 {
        return Err(OpticsError::ShapeMismatch {
            expected: m,
            got: object_shape,
        });
    }
    let v_spectrum = fft2(&v.values);
    let mut acc = Array2::zeros(object_shape);
    scatter_adjoint_spectrum(&mut acc, &v_spectrum, entry, pupil, 1);
    let mut out = ifft2(&acc);
    let alpha = scale_factor(object_shape, m);
    out.mapv_inplace(|x| x * alpha);
    Ok(ComplexField { values: out })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::{
        plan_illumination, CameraGrid, LedSelection, ObjectGrid, SystemGeometry,
    };
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

    fn mini_geometry() -> SystemGeometry {
        SystemGeometry::new(
            3,
            3,
            4e-3,
            70e-3,
            513e-9,
            0.2,
            ObjectGrid::new(8, 8, 500e-9).unwrap(),
            CameraGrid::new(4, 4).unwrap(),
        )
        .unwrap()
    }

    fn entry_with_offset(off: (i64, i64)) -> PlanEntry {
        PlanEntry {
            led: (0, 0),
            k: (0.0, 0.0),
            offset: off,
        }
    }

    fn random_complex(shape: (usize, usize), seed: u64) -> Array2<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn(shape, |_| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    /// Direct evaluation of
    /// `sqrt(m/n) * IFFT_c( P .* crop_off( FFT_o(u) ) )`
    /// written in explicit centered-frequency sums, independent of the fast
    /// path's wrapped indexing.
    fn oracle_forward(
        u: &Array2<Complex64>,
        entry: &PlanEntry,
        pupil: &Array2<Complex64>,
    ) -> Array2<Complex64> {
        let (n1, n2) = u.dim();
        let (m1, m2) = pupil.dim();
        let alpha = ((m1 * m2) as f64 / (n1 * n2) as f64).sqrt();
        let mut out = Array2::zeros((m1, m2));
        for rp in 0..m1 {
            for cp in 0..m2 {
                let mut acc = Complex64::new(0.0, 0.0);
                for fa in 0..m1 {
                    for fb in 0..m2 {
                        // Centered camera frequency and the object frequency
                        // it samples.
                        let phi_r = fa as i64 - m1 as i64 / 2;
                        let phi_c = fb as i64 - m2 as i64 / 2;
                        let obj_r = phi_r + entry.offset.0;
                        let obj_c = phi_c + entry.offset.1;
                        // Object spectrum at centered frequency (obj_r, obj_c).
                        let mut s = Complex64::new(0.0, 0.0);
                        for r in 0..n1 {
                            for c in 0..n2 {
                                let ph = -TAU
                                    * (obj_r as f64 * r as f64 / n1 as f64
                                        + obj_c as f64 * c as f64 / n2 as f64);
                                s += u[[r, c]] * Complex64::from_polar(1.0, ph);
                            }
                        }
                        s /= ((n1 * n2) as f64).sqrt();
                        let p = pupil[[fa, fb]];
                        let ph = TAU
                            * (phi_r as f64 * rp as f64 / m1 as f64
                                + phi_c as f64 * cp as f64 / m2 as f64);
                        acc += p * s * Complex64::from_polar(1.0, ph);
                    }
                }
                out[[rp, cp]] = alpha * acc / ((m1 * m2) as f64).sqrt();
            }
        }
        out
    }

    #[test]
    fn forward_matches_direct_dft_oracle() {
        let u = ComplexField {
            values: random_complex((8, 8), 42),
        };
        let pupil = PupilMask {
            values: random_complex((4, 4), 43).mapv(|v| v / 2.0),
        };
        for off in [(0, 0), (1, -2), (-2, 2)] {
            let entry = entry_with_offset(off);
            let fast = apply_forward(&u, &entry, &pupil).unwrap();
            let slow = oracle_forward(&u.values, &entry, &pupil.values);
            for (x, y) in fast.values.iter().zip(slow.iter()) {
                assert!(
                    (x - y).norm() < 1e-12,
                    "offset {off:?}: fast {x} vs oracle {y}"
                );
            }
        }
    }

    #[test]
    fn flat_phase_all_pass_gives_unit_intensity() {
        let x = PhaseObject::zeros((8, 8));
        let pupil = PupilMask::all_pass(4, 4);
        let entry = entry_with_offset((0, 0));
        let psi = forward_field(&x, &entry, &pupil).unwrap();
        for v in psi.values.iter() {
            assert!(
                (v - Complex64::new(1.0, 0.0)).norm() < 1e-12,
                "expected unit field, got {v}"
            );
        }
        let plan = IlluminationPlan {
            entries: vec![entry],
        };
        let stack = forward_intensity(&x, &plan, &pupil).unwrap();
        for v in stack.frames[0].iter() {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn global_phase_shift_rotates_field() {
        let g = mini_geometry();
        let plan = plan_illumination(&g, &LedSelection::CenteredCount(5)).unwrap();
        let pupil = crate::optics::make_pupil(&g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = PhaseObject::new(Array2::from_shape_fn((8, 8), |_| {
            rng.random_range(-1.0..1.0)
        }))
        .unwrap();
        for c in [0.1, 1.0, std::f64::consts::PI] {
            let shifted = PhaseObject::new(x.values.mapv(|v| v + c)).unwrap();
            let rot = Complex64::from_polar(1.0, c);
            for entry in &plan.entries {
                let a = forward_field(&x, entry, &pupil).unwrap();
                let b = forward_field(&shifted, entry, &pupil).unwrap();
                for (va, vb) in a.values.iter().zip(b.values.iter()) {
                    assert!((va * rot - vb).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn forward_is_linear_in_the_transmittance() {
        let g = mini_geometry();
        let plan = plan_illumination(&g, &LedSelection::CenteredCount(3)).unwrap();
        let pupil = crate::optics::make_pupil(&g).unwrap();
        let u = ComplexField {
            values: random_complex((8, 8), 9),
        };
        let alpha = Complex64::new(-0.7, 0.4);
        let scaled = ComplexField {
            values: u.values.mapv(|v| v * alpha),
        };
        let entry = &plan.entries[1];
        let hu = apply_forward(&u, entry, &pupil).unwrap();
        let h_scaled = apply_forward(&scaled, entry, &pupil).unwrap();
        for (a, b) in hu.values.iter().zip(h_scaled.values.iter()) {
            assert!((a * alpha - b).norm() < 1e-12);
        }
    }

    #[test]
    fn adjoint_identity_holds() {
        let g = mini_geometry();
        let plan = plan_illumination(&g, &LedSelection::CenteredCount(5)).unwrap();
        let pupil = crate::optics::make_pupil(&g).unwrap();
        for trial in 0..100 {
            let entry = &plan.entries[trial % plan.len()];
            let u = ComplexField {
                values: random_complex((8, 8), 100 + trial as u64),
            };
            let v = ComplexField {
                values: random_complex((4, 4), 200 + trial as u64),
            };
            let hu = apply_forward(&u, entry, &pupil).unwrap();
            let hv = apply_adjoint(&v, entry, &pupil, (8, 8)).unwrap();
            let lhs: Complex64 = hu
                .values
                .iter()
                .zip(v.values.iter())
                .map(|(a, b)| a * b.conj())
                .sum();
            let rhs: Complex64 = u
                .values
                .iter()
                .zip(hv.values.iter())
                .map(|(a, b)| a * b.conj())
                .sum();
            let hu_norm: f64 = hu.values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let v_norm: f64 = v.values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let rel = (lhs - rhs).norm() / (hu_norm * v_norm + 1e-300);
            assert!(rel < 1e-10, "trial {trial}: relative error {rel}");
        }
    }

    #[test]
    fn adjoint_of_zero_is_zero() {
        let pupil = PupilMask::all_pass(4, 4);
        let entry = entry_with_offset((1, 1));
        let out = apply_adjoint(&ComplexField::zeros((4, 4)), &entry, &pupil, (8, 8)).unwrap();
        assert!(out.values.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn normal_operator_scales_passband_frequencies() {
        // H^ H on a pure spatial frequency inside the window returns it
        // scaled by (m/n) |P(f)|^2; outside the window it returns ~0.
        let (n1, n2, m1, m2) = (8usize, 8usize, 4usize, 4usize);
        let pupil = PupilMask {
            values: random_complex((m1, m2), 77).mapv(|v| v / 2.0),
        };
        let entry = entry_with_offset((1, 0));
        let alpha_sq = (m1 * m2) as f64 / (n1 * n2) as f64;

        // Centered frequency (2, -1) lies in the window rows [1-2, 1+2) x [-2, 2).
        let f = (2i64, -1i64);
        let u = ComplexField {
            values: Array2::from_shape_fn((n1, n2), |(r, c)| {
                Complex64::from_polar(
                    1.0,
                    TAU * (f.0 as f64 * r as f64 / n1 as f64 + f.1 as f64 * c as f64 / n2 as f64),
                )
            }),
        };
        let hu = apply_forward(&u, &entry, &pupil).unwrap();
        let hhu = apply_adjoint(&hu, &entry, &pupil, (n1, n2)).unwrap();
        // Pupil bin for centered camera frequency f - offset.
        let pa = (f.0 - entry.offset.0 + m1 as i64 / 2) as usize;
        let pb = (f.1 - entry.offset.1 + m2 as i64 / 2) as usize;
        let gain = alpha_sq * pupil.values[[pa, pb]].norm_sqr();
        for (orig, back) in u.values.iter().zip(hhu.values.iter()) {
            assert!((orig * gain - back).norm() < 1e-12);
        }

        // Frequency outside the shifted window is annihilated.
        let f_out = (-3i64, 3i64);
        let u_out = ComplexField {
            values: Array2::from_shape_fn((n1, n2), |(r, c)| {
                Complex64::from_polar(
                    1.0,
                    TAU * (f_out.0 as f64 * r as f64 / n1 as f64
                        + f_out.1 as f64 * c as f64 / n2 as f64),
                )
            }),
        };
        let hu_out = apply_forward(&u_out, &entry, &pupil).unwrap();
        for v in hu_out.values.iter() {
            assert!(v.norm() < 1e-12);
        }
    }

    #[test]
    fn cropped_spectrum_never_gains_energy() {
        let g = mini_geometry();
        let plan = plan_illumination(&g, &LedSelection::CenteredCount(5)).unwrap();
        let pupil = PupilMask::all_pass(4, 4);
        for seed in 0..20 {
            let u = random_complex((8, 8), 300 + seed);
            let norm_u: f64 = u.iter().map(|z| z.norm_sqr()).sum();
            let spectrum = fft2(&u);
            for entry in &plan.entries {
                let block = forward_from_spectrum(&spectrum, entry, &pupil);
                // alpha rescales; undo it to test the bare crop.
                let alpha = ((4.0 * 4.0) / (8.0 * 8.0) as f64).sqrt();
                let norm_crop: f64 =
                    block.iter().map(|z| z.norm_sqr()).sum::<f64>() / (alpha * alpha);
                assert!(norm_crop <= norm_u * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn intensity_is_invariant_to_constant_phase_and_nonnegative() {
        let g = mini_geometry();
        let plan = plan_illumination(&g, &LedSelection::CenteredCount(5)).unwrap();
        let pupil = crate::optics::make_pupil(&g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = PhaseObject::new(Array2::from_shape_fn((8, 8), |_| {
            rng.random_range(0.0..1.0)
        }))
        .unwrap();
        let base = forward_intensity(&x, &plan, &pupil).unwrap();
        assert_eq!(base.len(), 5);
        let peak = base
            .frames
            .iter()
            .flat_map(|f| f.iter())
            .fold(0.0f64, |m, &v| m.max(v));
        for frame in &base.frames {
            assert_eq!(frame.dim(), (4, 4));
            assert!(frame.iter().all(|&v| v >= 0.0));
        }
        for c in [0.1, 1.0, std::f64::consts::PI] {
            let shifted = PhaseObject::new(x.values.mapv(|v| v + c)).unwrap();
            let other = forward_intensity(&shifted, &plan, &pupil).unwrap();
            for (fa, fb) in base.frames.iter().zip(other.frames.iter()) {
                for (a, b) in fa.iter().zip(fb.iter()) {
                    assert!((a - b).abs() <= 1e-12 * peak.max(1.0));
                }
            }
        }
    }
}
