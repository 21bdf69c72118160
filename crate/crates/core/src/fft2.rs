//! Unitary 2-D FFTs on `Array2<Complex64>` backed by rustfft.
//!
//! Both directions carry a `1/sqrt(N)` factor, so [`ifft2`] is the exact
//! adjoint (and inverse) of [`fft2`] with no hidden scale.

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use std::sync::{Arc, Mutex, OnceLock};

fn plan(len: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    PLANNER
        .get_or_init(|| Mutex::new(FftPlanner::new()))
        .lock()
        .expect("fft planner lock poisoned")
        .plan_fft(len, direction)
}

fn transform_rows(a: &mut Array2<Complex64>, fft: &Arc<dyn Fft<f64>>) {
    for mut row in a.rows_mut() {
        fft.process(row.as_slice_mut().expect("rows of a standard-layout array"));
    }
}

/// Transposed copy in standard (row-major) layout.
fn transpose_standard(a: &Array2<Complex64>) -> Array2<Complex64> {
    let mut t = Array2::zeros((a.ncols(), a.nrows()));
    t.assign(&a.t());
    t
}

fn fft2_dir(a: &Array2<Complex64>, direction: FftDirection) -> Array2<Complex64> {
    let (n1, n2) = a.dim();
    let mut out = Array2::zeros((n1, n2));
    out.assign(a);
    transform_rows(&mut out, &plan(n2, direction));
    let mut t = transpose_standard(&out);
    transform_rows(&mut t, &plan(n1, direction));
    let mut res = transpose_standard(&t);
    let scale = 1.0 / ((n1 * n2) as f64).sqrt();
    res.mapv_inplace(|v| v * scale);
    res
}

/// Forward unitary 2-D FFT (negative-exponent convention).
pub fn fft2(a: &Array2<Complex64>) -> Array2<Complex64> {
    fft2_dir(a, FftDirection::Forward)
}

/// Inverse unitary 2-D FFT; exact adjoint of [`fft2`].
pub fn ifft2(a: &Array2<Complex64>) -> Array2<Complex64> {
    fft2_dir(a, FftDirection::Inverse)
}
