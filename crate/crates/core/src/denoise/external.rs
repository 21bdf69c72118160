//! External denoiser plugin protocol.
//!
//! The child process receives the image in FPMIMG format on standard input
//! and must emit the denoised image, same shape and dtype `real`, in FPMIMG
//! format on standard output. The strength parameter is substituted into
//! the command template wherever the literal token `{sigma}` appears, as a
//! decimal literal with 17 significant digits. Standard error is captured
//! and attached to every failure.

use super::DenoiseError;
use crate::io::{image_from_bytes, image_to_bytes, ImageData};
use ndarray::Array2;
use std::io::{Read, Write};
use std::process::{Child, Command, Stdio};
use std::time::{Duration, Instant};

fn reader_thread<R: Read + Send + 'static>(mut src: R) -> std::thread::JoinHandle<Vec<u8>> {
    std::thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = src.read_to_end(&mut buf);
        buf
    })
}

fn wait_with_timeout(child: &mut Child, timeout: Duration) -> std::io::Result<Option<i32>> {
    let deadline = Instant::now() + timeout;
    loop {
        if let Some(status) = child.try_wait()? {
            return Ok(Some(status.code().unwrap_or(-1)));
        }
        if Instant::now() >= deadline {
            let _ = child.kill();
            let _ = child.wait();
            return Ok(None);
        }
        std::thread::sleep(Duration::from_millis(5));
    }
}

/// Runs `command` (whitespace-tokenized after `{sigma}` substitution) as a
/// denoiser plugin over `image`.
pub fn denoise_external(
    command: &str,
    image: &Array2<f64>,
    sigma: f64,
    timeout: Duration,
) -> Result<Array2<f64>, DenoiseError> {
    let sigma_literal = format!("{:.16e}", sigma);
    let substituted = command.replace("{sigma}", &sigma_literal);
    let mut tokens = substituted.split_whitespace();
    let program = tokens
        .next()
        .ok_or_else(|| DenoiseError::InvalidSpec("external command must be nonempty".into()))?;

    let mut child = Command::new(program)
        .args(tokens)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|source| DenoiseError::PluginSpawn {
            command: substituted.clone(),
            source,
        })?;

    let payload = image_to_bytes(&ImageData::Real(image.clone()));
    let mut stdin = child.stdin.take().expect("piped stdin");
    let writer = std::thread::spawn(move || {
        let _ = stdin.write_all(&payload);
        // Dropping stdin closes the pipe and signals EOF to the child.
    });
    let stdout = reader_thread(child.stdout.take().expect("piped stdout"));
    let stderr = reader_thread(child.stderr.take().expect("piped stderr"));

    let exit = wait_with_timeout(&mut child, timeout)?;
    let _ = writer.join();
    let out_bytes = stdout.join().unwrap_or_default();
    let err_text = String::from_utf8_lossy(&stderr.join().unwrap_or_default()).into_owned();

    let Some(code) = exit else {
        return Err(DenoiseError::PluginTimeout {
            seconds: timeout.as_secs_f64(),
            stderr: err_text,
        });
    };
    if code != 0 {
        return Err(DenoiseError::PluginExit {
            code: Some(code),
            stderr: err_text,
        });
    }

    let parsed = image_from_bytes(&out_bytes).map_err(|e| DenoiseError::PluginProtocol {
        message: format!("invalid FPMIMG on plugin stdout: {e}"),
        stderr: err_text.clone(),
    })?;
    match parsed {
        ImageData::Real(values) if values.dim() == image.dim() => Ok(values),
        ImageData::Real(values) => Err(DenoiseError::PluginProtocol {
            message: format!(
                "plugin changed the image shape: {:?} -> {:?}",
                image.dim(),
                values.dim()
            ),
            stderr: err_text,
        }),
        ImageData::Complex(_) => Err(DenoiseError::PluginProtocol {
            message: "plugin returned a complex image, expected real".into(),
            stderr: err_text,
        }),
    }
}
