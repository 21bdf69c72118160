//! Fourier ptychographic microscopy (FPM) at desk scale.
//!
//! This crate simulates low-resolution intensity measurements of a phase
//! object illuminated by an LED array and reconstructs the phase image with
//! batch and online plug-and-play (PnP) proximal algorithms.
//!
//! - [`optics`] — the FPM forward operator, its adjoint, the quadratic data
//!   fidelity and its gradient with respect to the real phase image.
//! - [`denoise`] — identity, total-variation and non-local-means denoisers
//!   plus an external-process plugin protocol.
//! - [`solver`] — PnP-ISTA/FISTA and the online minibatch variant with
//!   deterministic sampling and per-iteration instrumentation.
//! - [`harness`] — phantoms, measurement noise, experiment runner with CSV
//!   metrics output.
//! - [`io`] — binary image and measurement-stack file formats, PGM rendering.

pub mod denoise;
pub mod fft2;
pub mod harness;
pub mod io;
pub mod metrics;
pub mod optics;
pub mod seed;
pub mod solver;
