//! Phase phantoms: built-in synthetic patterns and image files mapped to a
//! configurable phase range.

use super::HarnessError;
use crate::io::{read_image, ImageData};
use crate::optics::{ObjectGrid, PhaseObject};
use ndarray::Array2;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Built-in test patterns. Raw gray values live in [0, 1] before the phase
/// scaling is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinPhantom {
    /// Diagonal linear ramp.
    Ramp,
    /// Checkerboard with blocks of 1/16 of the smaller grid dimension.
    Checker,
    /// Centered binary disk of radius 0.3 * min(n1, n2).
    Disk,
    /// Shepp-Logan-style ellipse phantom, min-max normalized.
    Shepp,
}

impl BuiltinPhantom {
    pub const ALL: [BuiltinPhantom; 4] = [
        BuiltinPhantom::Ramp,
        BuiltinPhantom::Checker,
        BuiltinPhantom::Disk,
        BuiltinPhantom::Shepp,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            BuiltinPhantom::Ramp => "ramp",
            BuiltinPhantom::Checker => "checker",
            BuiltinPhantom::Disk => "disk",
            BuiltinPhantom::Shepp => "shepp",
        }
    }
}

impl FromStr for BuiltinPhantom {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ramp" => Ok(BuiltinPhantom::Ramp),
            "checker" => Ok(BuiltinPhantom::Checker),
            "disk" => Ok(BuiltinPhantom::Disk),
            "shepp" => Ok(BuiltinPhantom::Shepp),
            other => Err(HarnessError::InvalidPhantom(format!(
                "unknown builtin phantom `{other}` (available: ramp, checker, disk, shepp)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PhantomSource {
    Builtin(BuiltinPhantom),
    /// Image file. 8-bit grayscale images map 0..255 linearly onto the phase
    /// range; FPMIMG files are taken as phase radians verbatim. Either kind
    /// is resampled to the object grid by bilinear interpolation.
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhantomSpec {
    pub source: PhantomSource,
    /// Upper end of the phase range in radians; gray value 1 maps here.
    pub phase_scale: f64,
}

impl PhantomSpec {
    pub fn builtin(b: BuiltinPhantom) -> Self {
        Self {
            source: PhantomSource::Builtin(b),
            phase_scale: 1.0,
        }
    }

    /// Display name used in CSV rows and output file names.
    pub fn name(&self) -> String {
        match &self.source {
            PhantomSource::Builtin(b) => b.name().to_string(),
            PhantomSource::File(p) => p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "file".into()),
        }
    }
}

/// Renders the phantom onto `grid`.
pub fn make_phantom(spec: &PhantomSpec, grid: &ObjectGrid) -> Result<PhaseObject, HarnessError> {
    if !(spec.phase_scale > 0.0 && spec.phase_scale.is_finite()) {
        return Err(HarnessError::InvalidPhantom(format!(
            "phase scale must be positive and finite, got {}",
            spec.phase_scale
        )));
    }
    let gray = match &spec.source {
        PhantomSource::Builtin(b) => builtin_gray(*b, grid.shape()),
        PhantomSource::File(path) => file_gray(path, grid.shape(), spec.phase_scale)?,
    };
    let values = gray.mapv(|g| g * spec.phase_scale);
    PhaseObject::new(values).map_err(HarnessError::Optics)
}

fn builtin_gray(b: BuiltinPhantom, (n1, n2): (usize, usize)) -> Array2<f64> {
    match b {
        BuiltinPhantom::Ramp => Array2::from_shape_fn((n1, n2), |(r, c)| {
            (r + c) as f64 / (n1 + n2 - 2) as f64
        }),
        BuiltinPhantom::Checker => {
            let block = (n1.min(n2) / 16).max(1);
            Array2::from_shape_fn((n1, n2), |(r, c)| {
                if (r / block + c / block) % 2 == 0 {
                    0.0
                } else {
                    1.0
                }
            })
        }
        BuiltinPhantom::Disk => {
            let radius = 0.3 * n1.min(n2) as f64;
            let (cr, cc) = ((n1 as f64 - 1.0) / 2.0, (n2 as f64 - 1.0) / 2.0);
            Array2::from_shape_fn((n1, n2), |(r, c)| {
                if (r as f64 - cr).hypot(c as f64 - cc) <= radius {
                    1.0
                } else {
                    0.0
                }
            })
        }
        BuiltinPhantom::Shepp => shepp_logan(n1, n2),
    }
}

/// Classic ten-ellipse head phantom on [-1, 1]^2, min-max normalized.
fn shepp_logan(n1: usize, n2: usize) -> Array2<f64> {
    // (value, a, b, x0, y0, phi_degrees)
    const ELLIPSES: [(f64, f64, f64, f64, f64, f64); 10] = [
        (2.0, 0.69, 0.92, 0.0, 0.0, 0.0),
        (-0.98, 0.6624, 0.8740, 0.0, -0.0184, 0.0),
        (-0.02, 0.1100, 0.3100, 0.22, 0.0, -18.0),
        (-0.02, 0.1600, 0.4100, -0.22, 0.0, 18.0),
        (0.01, 0.2100, 0.2500, 0.0, 0.35, 0.0),
        (0.01, 0.0460, 0.0460, 0.0, 0.10, 0.0),
        (0.01, 0.0460, 0.0460, 0.0, -0.10, 0.0),
        (0.01, 0.0460, 0.0230, -0.08, -0.605, 0.0),
        (0.01, 0.0230, 0.0230, 0.0, -0.606, 0.0),
        (0.01, 0.0230, 0.0460, 0.06, -0.605, 0.0),
    ];
    let mut img = Array2::<f64>::zeros((n1, n2));
    for r in 0..n1 {
        for c in 0..n2 {
            // Map pixel centers to [-1, 1]^2; row axis points down.
            let y = 1.0 - 2.0 * (r as f64 + 0.5) / n1 as f64;
            let x = 2.0 * (c as f64 + 0.5) / n2 as f64 - 1.0;
            let mut v = 0.0;
            for (val, a, b, x0, y0, phi) in ELLIPSES {
                let th = phi.to_radians();
                let (xs, ys) = (x - x0, y - y0);
                let xr = xs * th.cos() + ys * th.sin();
                let yr = -xs * th.sin() + ys * th.cos();
                if (xr / a) * (xr / a) + (yr / b) * (yr / b) <= 1.0 {
                    v += val;
                }
            }
            img[[r, c]] = v;
        }
    }
    let lo = img.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = img.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    img.mapv_inplace(|v| (v - lo) / span);
    img
}

/// Loads an image file as gray values in [0, 1] (8-bit formats) or as raw
/// radians divided by the phase scale (FPMIMG), resampled to the grid.
fn file_gray(
    path: &Path,
    shape: (usize, usize),
    phase_scale: f64,
) -> Result<Array2<f64>, HarnessError> {
    let is_fpmimg = std::fs::File::open(path)
        .map(|mut f| {
            use std::io::Read;
            let mut magic = [0u8; 8];
            f.read_exact(&mut magic).map(|_| &magic == crate::io::IMAGE_MAGIC).unwrap_or(false)
        })
        .unwrap_or(false);
    let raw: Array2<f64> = if is_fpmimg {
        match read_image(path)? {
            ImageData::Real(values) => values.mapv(|v| v / phase_scale),
            ImageData::Complex(_) => {
                return Err(HarnessError::InvalidPhantom(format!(
                    "{} holds a complex image; phantoms must be real",
                    path.display()
                )))
            }
        }
    } else {
        let img = image::open(path)?.into_luma8();
        let (w, h) = (img.width() as usize, img.height() as usize);
        Array2::from_shape_fn((h, w), |(r, c)| {
            img.get_pixel(c as u32, r as u32).0[0] as f64 / 255.0
        })
    };
    Ok(resample_bilinear(&raw, shape))
}

/// Bilinear resampling onto `shape`, aligning pixel centers.
fn resample_bilinear(src: &Array2<f64>, (n1, n2): (usize, usize)) -> Array2<f64> {
    let (s1, s2) = src.dim();
    if (s1, s2) == (n1, n2) {
        return src.clone();
    }
    Array2::from_shape_fn((n1, n2), |(r, c)| {
        let fr = if n1 > 1 {
            (r as f64 + 0.5) * s1 as f64 / n1 as f64 - 0.5
        } else {
            0.0
        };
        let fc = if n2 > 1 {
            (c as f64 + 0.5) * s2 as f64 / n2 as f64 - 0.5
        } else {
            0.0
        };
        let fr = fr.clamp(0.0, s1 as f64 - 1.0);
        let fc = fc.clamp(0.0, s2 as f64 - 1.0);
        let (r0, c0) = (fr.floor() as usize, fc.floor() as usize);
        let (r1, c1) = ((r0 + 1).min(s1 - 1), (c0 + 1).min(s2 - 1));
        let (tr, tc) = (fr - r0 as f64, fc - c0 as f64);
        (1.0 - tr) * (1.0 - tc) * src[[r0, c0]]
            + (1.0 - tr) * tc * src[[r0, c1]]
            + tr * (1.0 - tc) * src[[r1, c0]]
            + tr * tc * src[[r1, c1]]
    })
}
