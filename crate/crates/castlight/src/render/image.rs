//! Single-channel intensity image with a validity mask.
//!
//! Pixels are stored as f32, matching the PFM interchange format, so a
//! render -> save -> load round trip is bit-exact. All shading math runs in
//! f64 and is rounded once on store.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f32>,
    pub valid: Vec<bool>,
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<f32>, valid: Vec<bool>) -> Result<Self> {
        if pixels.len() != width * height || valid.len() != width * height {
            return Err(Error::DimensionMismatch {
                what: "image buffers",
                expected_w: width,
                expected_h: height,
                got_w: pixels.len(),
                got_h: valid.len(),
            });
        }
        for (i, (&p, &ok)) in pixels.iter().zip(&valid).enumerate() {
            if ok && !(p.is_finite() && p >= 0.0) {
                return Err(Error::invariant(
                    "valid intensities finite and non-negative",
                    format!("pixel {i} = {p}"),
                ));
            }
        }
        Ok(Image { width, height, pixels, valid })
    }

    pub fn idx(&self, u: usize, v: usize) -> usize {
        v * self.width + u
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }
}
