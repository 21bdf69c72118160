//! Denoisers for the plug-and-play iteration.
//!
//! The solver treats `denoise_sigma(.)` as an opaque operator whose strength
//! is tied to the step size by `sigma = sqrt(gamma * lambda)`. Built-ins:
//! identity (no prior), anisotropic total variation, non-local means. Any
//! other denoiser plugs in through an external-process protocol.

mod external;
mod nlm;
mod tv;

pub use external::denoise_external;
pub use nlm::nlm_denoise;
pub use tv::{tv_denoise, tv_objective};

use ndarray::Array2;
use std::time::Duration;
use thiserror::Error;

pub const DEFAULT_TV_ITERATIONS: usize = 50;
pub const DEFAULT_TV_TOLERANCE: f64 = 1e-5;
pub const DEFAULT_PLUGIN_TIMEOUT: Duration = Duration::from_secs(300);

#[derive(Debug, Error)]
pub enum DenoiseError {
    #[error("invalid denoiser spec: {0}")]
    InvalidSpec(String),
    #[error("invalid denoise request: {0}")]
    InvalidRequest(String),
    #[error("failed to spawn denoiser plugin `{command}`: {source}")]
    PluginSpawn {
        command: String,
        source: std::io::Error,
    },
    #[error("denoiser plugin exited with {code:?}; stderr:\n{stderr}")]
    PluginExit { code: Option<i32>, stderr: String },
    #[error("denoiser plugin protocol violation: {message}; stderr:\n{stderr}")]
    PluginProtocol { message: String, stderr: String },
    #[error("denoiser plugin timed out after {seconds:.1} s; stderr:\n{stderr}")]
    PluginTimeout { seconds: f64, stderr: String },
    #[error("denoiser plugin io: {0}")]
    PluginIo(#[from] std::io::Error),
}

/// Which denoiser to run and its fixed parameters. The per-call strength
/// `sigma` arrives in the [`DenoiseRequest`].
#[derive(Debug, Clone, PartialEq)]
pub enum DenoiserSpec {
    /// Pass-through: the PnP iteration degenerates to plain (projected)
    /// gradient descent.
    Identity,
    /// Anisotropic TV proximal denoiser. The effective weight applied at
    /// strength `sigma` is `lambda * sigma^2`; `lambda` is a spec-level
    /// multiplier and stays 1 inside the solver, where the strength is
    /// carried entirely by `sigma = sqrt(gamma * lambda_prior)`.
    Tv {
        lambda: f64,
        inner_iterations: usize,
        tolerance: f64,
    },
    /// Non-local means patch averaging.
    Nlm {
        patch_radius: usize,
        window_radius: usize,
        filtering_strength: f64,
    },
    /// External process speaking the FPMIMG stdin/stdout protocol. The token
    /// `{sigma}` in the command template is replaced by a decimal literal of
    /// 17 significant digits.
    External { command: String, timeout: Duration },
}

impl DenoiserSpec {
    pub fn tv() -> Self {
        DenoiserSpec::Tv {
            lambda: 1.0,
            inner_iterations: DEFAULT_TV_ITERATIONS,
            tolerance: DEFAULT_TV_TOLERANCE,
        }
    }

    pub fn nlm() -> Self {
        DenoiserSpec::Nlm {
            patch_radius: 1,
            window_radius: 5,
            filtering_strength: 1.0,
        }
    }

    pub fn external(command: impl Into<String>) -> Self {
        DenoiserSpec::External {
            command: command.into(),
            timeout: DEFAULT_PLUGIN_TIMEOUT,
        }
    }

    /// Short name for logs and CSV columns.
    pub fn kind(&self) -> &'static str {
        match self {
            DenoiserSpec::Identity => "identity",
            DenoiserSpec::Tv { .. } => "tv",
            DenoiserSpec::Nlm { .. } => "nlm",
            DenoiserSpec::External { .. } => "external",
        }
    }

    pub fn validate(&self) -> Result<(), DenoiseError> {
        match self {
            DenoiserSpec::Identity => Ok(()),
            DenoiserSpec::Tv {
                lambda,
                inner_iterations,
                tolerance,
            } => {
                if !(*lambda >= 0.0 && lambda.is_finite()) {
                    return Err(DenoiseError::InvalidSpec(format!(
                        "tv lambda must be finite and >= 0, got {lambda}"
                    )));
                }
                if *inner_iterations == 0 {
                    return Err(DenoiseError::InvalidSpec(
                        "tv inner_iterations must be >= 1".into(),
                    ));
                }
                if !(*tolerance > 0.0) {
                    return Err(DenoiseError::InvalidSpec(format!(
                        "tv tolerance must be > 0, got {tolerance}"
                    )));
                }
                Ok(())
            }
            DenoiserSpec::Nlm {
                patch_radius,
                window_radius,
                filtering_strength,
            } => {
                if *patch_radius == 0 || *window_radius == 0 {
                    return Err(DenoiseError::InvalidSpec(
                        "nlm radii must be >= 1".into(),
                    ));
                }
                if !(*filtering_strength > 0.0 && filtering_strength.is_finite()) {
                    return Err(DenoiseError::InvalidSpec(format!(
                        "nlm filtering_strength must be positive, got {filtering_strength}"
                    )));
                }
                Ok(())
            }
            DenoiserSpec::External { command, .. } => {
                if command.trim().is_empty() {
                    return Err(DenoiseError::InvalidSpec(
                        "external command must be nonempty".into(),
                    ));
                }
                Ok(())
            }
        }
    }
}

/// An image plus the noise-strength parameter to denoise it at.
#[derive(Debug, Clone, PartialEq)]
pub struct DenoiseRequest {
    pub image: Array2<f64>,
    pub sigma: f64,
}

impl DenoiseRequest {
    pub fn validate(&self) -> Result<(), DenoiseError> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(DenoiseError::InvalidRequest(format!(
                "sigma must be finite and >= 0, got {}",
                self.sigma
            )));
        }
        if self.image.iter().any(|v| !v.is_finite()) {
            return Err(DenoiseError::InvalidRequest(
                "image contains non-finite values".into(),
            ));
        }
        Ok(())
    }
}

/// PnP strength coupling: `sigma = sqrt(gamma * lambda)` for step size
/// `gamma > 0` and prior weight `lambda >= 0`.
pub fn sigma_from_step(gamma: f64, lambda: f64) -> Result<f64, DenoiseError> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(DenoiseError::InvalidRequest(format!(
            "step size gamma must be positive and finite, got {gamma}"
        )));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(DenoiseError::InvalidRequest(format!(
            "prior strength lambda must be finite and >= 0, got {lambda}"
        )));
    }
    Ok((gamma * lambda).sqrt())
}

/// Dispatches to the denoiser selected by `spec`. Output shape always equals
/// input shape; the identity denoiser returns the input bit-exactly.
pub fn denoise(spec: &DenoiserSpec, req: &DenoiseRequest) -> Result<Array2<f64>, DenoiseError> {
    spec.validate()?;
    req.validate()?;
    match spec {
        DenoiserSpec::Identity => Ok(req.image.clone()),
        DenoiserSpec::Tv {
            lambda,
            inner_iterations,
            tolerance,
        } => Ok(tv_denoise(
            &req.image,
            lambda * req.sigma * req.sigma,
            *inner_iterations,
            *tolerance,
        )),
        DenoiserSpec::Nlm {
            patch_radius,
            window_radius,
            filtering_strength,
        } => Ok(nlm_denoise(
            &req.image,
            req.sigma,
            *patch_radius,
            *window_radius,
            *filtering_strength,
        )),
        DenoiserSpec::External { command, timeout } => {
            denoise_external(command, &req.image, req.sigma, *timeout)
        }
    }
}
