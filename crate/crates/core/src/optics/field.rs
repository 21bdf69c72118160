use super::OpticsError;
use ndarray::Array2;
use num_complex::Complex64;

/// Real-valued phase image `x` in radians; the reconstruction target.
/// The transmittance it parameterizes is `exp(i x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseObject {
    pub values: Array2<f64>,
}

impl PhaseObject {
    pub fn new(values: Array2<f64>) -> Result<Self, OpticsError> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(OpticsError::NonFinite("phase object"));
        }
        Ok(Self { values })
    }

    pub fn zeros(shape: (usize, usize)) -> Self {
        Self {
            values: Array2::zeros(shape),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.dim()
    }
}

/// Complex 2-D field, object- or camera-sized depending on context.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    pub values: Array2<Complex64>,
}

impl ComplexField {
    pub fn shape(&self) -> (usize, usize) {
        self.values.dim()
    }

    pub fn zeros(shape: (usize, usize)) -> Self {
        Self {
            values: Array2::zeros(shape),
        }
    }
}

/// `J` low-resolution intensity frames tied to an illumination plan by its
/// digest. Entries may dip slightly below zero after additive noise; they
/// are kept as-is.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementStack {
    pub frames: Vec<Array2<f64>>,
    pub plan_digest: u64,
}

impl MeasurementStack {
    pub fn new(frames: Vec<Array2<f64>>, plan_digest: u64) -> Result<Self, OpticsError> {
        if frames.iter().any(|f| f.iter().any(|v| !v.is_finite())) {
            return Err(OpticsError::NonFinite("measurement stack"));
        }
        if let Some(first) = frames.first() {
            let dim = first.dim();
            if frames.iter().any(|f| f.dim() != dim) {
                return Err(OpticsError::ShapeMismatch {
                    expected: dim,
                    got: frames.iter().map(|f| f.dim()).find(|d| *d != dim).unwrap(),
                });
            }
        }
        Ok(Self { frames, plan_digest })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frame_shape(&self) -> Option<(usize, usize)> {
        self.frames.first().map(|f| f.dim())
    }

    /// Squared l2 norm over every entry of every frame.
    pub fn norm_sqr(&self) -> f64 {
        self.frames
            .iter()
            .map(|f| f.iter().map(|v| v * v).sum::<f64>())
            .sum()
    }

    /// Total entry count across frames.
    pub fn total_entries(&self) -> usize {
        self.frames.iter().map(|f| f.len()).sum()
    }
}
