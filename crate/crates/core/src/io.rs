//! Binary file formats and atomic file writing.
//!
//! FPMIMG (single image):
//! - magic `"FPMIMG1\0"` (8 bytes)
//! - width (u32 LE, columns), height (u32 LE, rows)
//! - dtype (u8): 1 = real f64, 2 = complex f64 interleaved (re, im)
//! - 7 reserved bytes, must be zero
//! - payload: row-major little-endian values, exactly
//!   `width * height * (8 | 16)` bytes
//!
//! FPMSTK (measurement stack):
//! - magic `"FPMSTK1\0"` (8 bytes)
//! - frame count J (u32 LE), m1 rows (u32 LE), m2 cols (u32 LE)
//! - J contiguous real-f64 frames, row-major little-endian
//! - trailing u64 LE plan digest
//!
//! Both formats are size-exact: trailing bytes are an error. All writers go
//! through a temp-file-and-rename so readers never observe partial files.

use crate::optics::MeasurementStack;
use ndarray::Array2;
use num_complex::Complex64;
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

pub const IMAGE_MAGIC: &[u8; 8] = b"FPMIMG1\0";
pub const STACK_MAGIC: &[u8; 8] = b"FPMSTK1\0";

pub const DTYPE_REAL: u8 = 1;
pub const DTYPE_COMPLEX: u8 = 2;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("bad magic: expected {expected:?}")]
    BadMagic { expected: &'static str },
    #[error("unknown dtype code {0}")]
    BadDtype(u8),
    #[error("reserved header bytes must be zero")]
    ReservedNonzero,
    #[error("payload size mismatch: expected {expected} bytes, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("zero-sized image dimensions {0}x{1}")]
    EmptyImage(u32, u32),
    #[error("image too large: {0}x{1}")]
    Oversize(u64, u64),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Payload of an FPMIMG file.
#[derive(Debug, Clone, PartialEq)]
pub enum ImageData {
    Real(Array2<f64>),
    Complex(Array2<Complex64>),
}

impl ImageData {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            ImageData::Real(a) => a.dim(),
            ImageData::Complex(a) => a.dim(),
        }
    }
}

fn check_dims(rows: u64, cols: u64) -> Result<(usize, usize), FormatError> {
    if rows == 0 || cols == 0 {
        return Err(FormatError::EmptyImage(cols as u32, rows as u32));
    }
    // 2^28 pixels (~2 GiB complex) is far beyond any use here.
    if rows.saturating_mul(cols) > (1 << 28) {
        return Err(FormatError::Oversize(rows, cols));
    }
    Ok((rows as usize, cols as usize))
}

/// Serializes an image to FPMIMG bytes.
pub fn image_to_bytes(image: &ImageData) -> Vec<u8> {
    let (rows, cols) = image.shape();
    let value_size = match image {
        ImageData::Real(_) => 8,
        ImageData::Complex(_) => 16,
    };
    let mut out = Vec::with_capacity(24 + rows * cols * value_size);
    out.extend_from_slice(IMAGE_MAGIC);
    out.extend_from_slice(&(cols as u32).to_le_bytes());
    out.extend_from_slice(&(rows as u32).to_le_bytes());
    match image {
        ImageData::Real(a) => {
            out.push(DTYPE_REAL);
            out.extend_from_slice(&[0u8; 7]);
            for v in a.iter() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        ImageData::Complex(a) => {
            out.push(DTYPE_COMPLEX);
            out.extend_from_slice(&[0u8; 7]);
            for v in a.iter() {
                out.extend_from_slice(&v.re.to_le_bytes());
                out.extend_from_slice(&v.im.to_le_bytes());
            }
        }
    }
    out
}

/// Parses FPMIMG bytes; the buffer must contain exactly one image.
pub fn image_from_bytes(bytes: &[u8]) -> Result<ImageData, FormatError> {
    if bytes.len() < 24 || &bytes[0..8] != IMAGE_MAGIC {
        return Err(FormatError::BadMagic { expected: "FPMIMG1\\0" });
    }
    let cols = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    let rows = u32::from_le_bytes(bytes[12..16].try_into().unwrap());
    let dtype = bytes[16];
    if bytes[17..24].iter().any(|&b| b != 0) {
        return Err(FormatError::ReservedNonzero);
    }
    let (rows, cols) = check_dims(rows as u64, cols as u64)?;
    let value_size = match dtype {
        DTYPE_REAL => 8,
        DTYPE_COMPLEX => 16,
        other => return Err(FormatError::BadDtype(other)),
    };
    let expected = rows * cols * value_size;
    let payload = &bytes[24..];
    if payload.len() != expected {
        return Err(FormatError::SizeMismatch {
            expected,
            got: payload.len(),
        });
    }
    let read_f64 = |off: usize| f64::from_le_bytes(payload[off..off + 8].try_into().unwrap());
    Ok(match dtype {
        DTYPE_REAL => ImageData::Real(Array2::from_shape_fn((rows, cols), |(r, c)| {
            read_f64((r * cols + c) * 8)
        })),
        _ => ImageData::Complex(Array2::from_shape_fn((rows, cols), |(r, c)| {
            let off = (r * cols + c) * 16;
            Complex64::new(read_f64(off), read_f64(off + 8))
        })),
    })
}

/// Writes `bytes` to `path` atomically (temp file in the same directory,
/// then rename).
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), FormatError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = match dir {
        Some(d) => tempfile::NamedTempFile::new_in(d)?,
        None => tempfile::NamedTempFile::new_in(".")?,
    };
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| FormatError::Io(e.error))?;
    Ok(())
}

pub fn write_image(path: &Path, image: &ImageData) -> Result<(), FormatError> {
    write_atomic(path, &image_to_bytes(image))
}

pub fn read_image(path: &Path) -> Result<ImageData, FormatError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    image_from_bytes(&bytes)
}

/// Serializes a measurement stack to FPMSTK bytes.
pub fn stack_to_bytes(stack: &MeasurementStack) -> Vec<u8> {
    let (m1, m2) = stack.frame_shape().unwrap_or((0, 0));
    let mut out = Vec::with_capacity(20 + stack.len() * m1 * m2 * 8 + 8);
    out.extend_from_slice(STACK_MAGIC);
    out.extend_from_slice(&(stack.len() as u32).to_le_bytes());
    out.extend_from_slice(&(m1 as u32).to_le_bytes());
    out.extend_from_slice(&(m2 as u32).to_le_bytes());
    for frame in &stack.frames {
        for v in frame.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out.extend_from_slice(&stack.plan_digest.to_le_bytes());
    out
}

/// Parses FPMSTK bytes; the buffer must contain exactly one stack.
pub fn stack_from_bytes(bytes: &[u8]) -> Result<MeasurementStack, FormatError> {
    if bytes.len() < 28 || &bytes[0..8] != STACK_MAGIC {
        return Err(FormatError::BadMagic { expected: "FPMSTK1\\0" });
    }
    let j = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let m1 = u32::from_le_bytes(bytes[12..16].try_into().unwrap());
    let m2 = u32::from_le_bytes(bytes[16..20].try_into().unwrap());
    let (m1, m2) = check_dims(m1 as u64, m2 as u64)?;
    let expected = 20 + j * m1 * m2 * 8 + 8;
    if bytes.len() != expected {
        return Err(FormatError::SizeMismatch {
            expected,
            got: bytes.len(),
        });
    }
    let mut frames = Vec::with_capacity(j);
    let mut off = 20;
    for _ in 0..j {
        let frame = Array2::from_shape_fn((m1, m2), |(r, c)| {
            let o = off + (r * m2 + c) * 8;
            f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap())
        });
        off += m1 * m2 * 8;
        frames.push(frame);
    }
    let digest = u64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
    Ok(MeasurementStack {
        frames,
        plan_digest: digest,
    })
}

pub fn write_stack(path: &Path, stack: &MeasurementStack) -> Result<(), FormatError> {
    write_atomic(path, &stack_to_bytes(stack))
}

pub fn read_stack(path: &Path) -> Result<MeasurementStack, FormatError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    stack_from_bytes(&bytes)
}

/// Renders a real image as 16-bit binary PGM with linear min-max scaling.
/// The scaling bounds go to a `<path>.txt` sidecar so the rendering stays
/// invertible for inspection; FPMIMG remains the authoritative output.
pub fn write_pgm16(path: &Path, image: &Array2<f64>) -> Result<(), FormatError> {
    let (rows, cols) = image.dim();
    let lo = image.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = image.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut out = Vec::with_capacity(32 + rows * cols * 2);
    out.extend_from_slice(format!("P5\n{cols} {rows}\n65535\n").as_bytes());
    for v in image.iter() {
        let t = ((v - lo) / span).clamp(0.0, 1.0);
        let q = (t * 65535.0).round() as u16;
        // PGM stores 16-bit samples big-endian.
        out.extend_from_slice(&q.to_be_bytes());
    }
    write_atomic(path, &out)?;
    let sidecar = format!(
        "format: pgm16 linear min-max\nmin: {lo:.17e}\nmax: {hi:.17e}\n"
    );
    let mut sidecar_path = path.as_os_str().to_owned();
    sidecar_path.push(".txt");
    write_atomic(Path::new(&sidecar_path), sidecar.as_bytes())
}
