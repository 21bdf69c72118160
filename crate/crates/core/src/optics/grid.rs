use super::OpticsError;

/// Object-plane sampling grid: `n1 x n2` pixels at `pixel_pitch` meters.
///
/// Pixel counts must be even so the centered spectrum crop has an
/// unambiguous DC bin at index `n/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectGrid {
    pub n1: usize,
    pub n2: usize,
    pub pixel_pitch: f64,
}

impl ObjectGrid {
    pub fn new(n1: usize, n2: usize, pixel_pitch: f64) -> Result<Self, OpticsError> {
        if n1 == 0 || n2 == 0 || n1 % 2 != 0 || n2 % 2 != 0 {
            return Err(OpticsError::InvalidGrid(format!(
                "object pixel counts must be positive and even, got {n1}x{n2}"
            )));
        }
        if !(pixel_pitch > 0.0 && pixel_pitch.is_finite()) {
            return Err(OpticsError::InvalidGrid(format!(
                "object pixel pitch must be positive and finite, got {pixel_pitch}"
            )));
        }
        Ok(Self { n1, n2, pixel_pitch })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Spectrum bin spacing (rad/m) along the row and column axes.
    pub fn k_spacing(&self) -> (f64, f64) {
        let two_pi = std::f64::consts::TAU;
        (
            two_pi / (self.n1 as f64 * self.pixel_pitch),
            two_pi / (self.n2 as f64 * self.pixel_pitch),
        )
    }
}

/// Camera-plane grid: `m1 x m2` pixels. The camera shares the object's
/// spectrum bin spacing; its pixel counts must be even and no larger than
/// the object's.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CameraGrid {
    pub m1: usize,
    pub m2: usize,
}

impl CameraGrid {
    pub fn new(m1: usize, m2: usize) -> Result<Self, OpticsError> {
        if m1 == 0 || m2 == 0 || m1 % 2 != 0 || m2 % 2 != 0 {
            return Err(OpticsError::InvalidGrid(format!(
                "camera pixel counts must be positive and even, got {m1}x{m2}"
            )));
        }
        Ok(Self { m1, m2 })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.m1, self.m2)
    }

    pub fn len(&self) -> usize {
        self.m1 * self.m2
    }
}

/// Physical layout of the FPM bench: LED array over the sample, objective
/// numerical aperture, illumination wavelength, and the two sampling grids.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemGeometry {
    pub led_rows: usize,
    pub led_cols: usize,
    /// Center-to-center LED spacing in meters.
    pub led_pitch: f64,
    /// Sample-to-array distance in meters.
    pub led_distance: f64,
    /// Illumination wavelength in meters.
    pub wavelength: f64,
    pub na_objective: f64,
    pub object: ObjectGrid,
    pub camera: CameraGrid,
}

impl SystemGeometry {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        led_rows: usize,
        led_cols: usize,
        led_pitch: f64,
        led_distance: f64,
        wavelength: f64,
        na_objective: f64,
        object: ObjectGrid,
        camera: CameraGrid,
    ) -> Result<Self, OpticsError> {
        if led_rows == 0 || led_cols == 0 {
            return Err(OpticsError::InvalidGeometry(
                "LED array must have at least one row and column".into(),
            ));
        }
        for (name, v) in [("led_pitch", led_pitch), ("led_distance", led_distance)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(OpticsError::InvalidGeometry(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if !(wavelength > 100e-9 && wavelength < 2000e-9) {
            return Err(OpticsError::InvalidGeometry(format!(
                "wavelength must lie in (100 nm, 2000 nm), got {wavelength} m"
            )));
        }
        if !(na_objective > 0.0 && na_objective < 1.0) {
            return Err(OpticsError::InvalidGeometry(format!(
                "objective NA must lie in (0, 1), got {na_objective}"
            )));
        }
        if object.n1 < camera.m1 || object.n2 < camera.m2 {
            return Err(OpticsError::InvalidGeometry(format!(
                "object grid {}x{} smaller than camera grid {}x{}",
                object.n1, object.n2, camera.m1, camera.m2
            )));
        }
        Ok(Self {
            led_rows,
            led_cols,
            led_pitch,
            led_distance,
            wavelength,
            na_objective,
            object,
            camera,
        })
    }

    /// Physical offset (meters) of LED `(row, col)` from the optical axis,
    /// with the array centered over the sample.
    pub fn led_offset_m(&self, row: usize, col: usize) -> (f64, f64) {
        let a = (row as f64 - (self.led_rows as f64 - 1.0) / 2.0) * self.led_pitch;
        let b = (col as f64 - (self.led_cols as f64 - 1.0) / 2.0) * self.led_pitch;
        (a, b)
    }

    /// Pupil cutoff `NA * 2 pi / lambda` in rad/m.
    pub fn pupil_radius(&self) -> f64 {
        self.na_objective * std::f64::consts::TAU / self.wavelength
    }
}
