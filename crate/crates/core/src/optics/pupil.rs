use super::{OpticsError, SystemGeometry};
use ndarray::Array2;
use num_complex::Complex64;

/// Complex pupil filter on the centered camera k-grid (`m1 x m2`,
/// DC at `(m1/2, m2/2)`).
#[derive(Debug, Clone, PartialEq)]
pub struct PupilMask {
    pub values: Array2<Complex64>,
}

impl PupilMask {
    pub fn shape(&self) -> (usize, usize) {
        self.values.dim()
    }

    /// All-pass pupil, mostly useful in tests and degenerate setups.
    pub fn all_pass(m1: usize, m2: usize) -> Self {
        Self {
            values: Array2::from_elem((m1, m2), Complex64::new(1.0, 0.0)),
        }
    }
}

/// Ideal binary pupil: 1 inside the disk `|k| <= NA * 2 pi / lambda`, 0
/// outside, on the centered camera k-grid. Rejects disks that do not fit
/// the grid (the camera would undersample the pupil).
pub fn make_pupil(geometry: &SystemGeometry) -> Result<PupilMask, OpticsError> {
    let (m1, m2) = geometry.camera.shape();
    let (dk_r, dk_c) = geometry.object.k_spacing();
    let radius = geometry.pupil_radius();
    let extent = (m1 as f64 / 2.0 * dk_r).min(m2 as f64 / 2.0 * dk_c);
    if radius > extent {
        return Err(OpticsError::PupilTooLarge { radius, extent });
    }
    let values = Array2::from_shape_fn((m1, m2), |(a, b)| {
        let kr = (a as f64 - m1 as f64 / 2.0) * dk_r;
        let kc = (b as f64 - m2 as f64 / 2.0) * dk_c;
        if kr.hypot(kc) <= radius {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    Ok(PupilMask { values })
}
