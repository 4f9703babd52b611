//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected_w}x{expected_h}, got {got_w}x{got_h}")]
    DimensionMismatch {
        what: &'static str,
        expected_w: usize,
        expected_h: usize,
        got_w: usize,
        got_h: usize,
    },

    #[error("no valid pixels in {0}")]
    NoValidPixels(&'static str),

    #[error("no overlap between the valid masks of the rendered and target images")]
    EmptyValidOverlap,

    #[error("invariant violated: {invariant} ({detail})")]
    InvariantViolation { invariant: &'static str, detail: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("light position lies on the surface (within {threshold} of a scene point)")]
    LightOnSurface { threshold: f64 },

    #[error("optimization diverged at iteration {iteration}: energy = {energy}")]
    Diverged { iteration: usize, energy: f64 },

    #[error("unknown preset '{name}'; valid presets: {valid}")]
    UnknownPreset { name: String, valid: &'static str },

    #[error("failed to parse {path}: {detail}")]
    Parse { path: String, detail: String },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { context: context.into(), source }
    }

    pub fn invariant(invariant: &'static str, detail: impl Into<String>) -> Self {
        Error::InvariantViolation { invariant, detail: detail.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
