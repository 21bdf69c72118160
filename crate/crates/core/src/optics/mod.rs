//! FPM optics: system geometry, illumination planning, the forward operator
//! `H`, its adjoint, the intensity measurement model, and the quadratic data
//! fidelity with its gradient.
//!
//! Conventions fixed here and relied on everywhere else:
//! - FFTs are unitary in both directions (see [`crate::fft2`]).
//! - Spectra are indexed so that after an fftshift-style reordering the DC
//!   bin of an even-sized axis of length `n` sits at index `n/2`; illumination
//!   offsets are integer pixel shifts relative to that bin.
//! - The forward operator carries a global `sqrt(m/n)` factor so that a unit
//!   transmittance through an all-pass pupil maps to a unit-intensity image.

mod fidelity;
mod field;
mod grid;
mod operator;
mod plan;
mod pupil;

pub use fidelity::{data_fidelity, grad_and_fidelity, grad_data};
pub use field::{ComplexField, MeasurementStack, PhaseObject};
pub use grid::{CameraGrid, ObjectGrid, SystemGeometry};
pub use operator::{
    apply_adjoint, apply_forward, forward_field, forward_intensity, transmittance,
};
pub use plan::{plan_illumination, IlluminationPlan, LedSelection, PlanEntry};
pub use pupil::{make_pupil, PupilMask};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum OpticsError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error(
        "LED ({row}, {col}) shifts the spectrum crop out of bounds \
         (offset ({off_r}, {off_c}) px on a {n1}x{n2} spectrum with a {m1}x{m2} window)"
    )]
    CropOutOfBounds {
        row: usize,
        col: usize,
        off_r: i64,
        off_c: i64,
        n1: usize,
        n2: usize,
        m1: usize,
        m2: usize,
    },
    #[error("selection requests {requested} LEDs but the array has only {available}")]
    SelectionTooLarge { requested: usize, available: usize },
    #[error("LED ({0}, {1}) outside the array or listed twice")]
    BadLed(usize, usize),
    #[error("pupil disk radius {radius:.6e} rad/m exceeds the camera k-grid extent {extent:.6e} rad/m (undersampled pupil)")]
    PupilTooLarge { radius: f64, extent: f64 },
    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("measurement stack has {frames} frames but the plan has {plan} entries")]
    StackPlanMismatch { frames: usize, plan: usize },
    #[error("component subset is empty")]
    EmptySubset,
    #[error("component index {index} out of range for {len} measurements")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}
